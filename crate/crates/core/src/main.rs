fn main() {
    std::process::exit(textcohesion::cli::run(std::env::args_os()));
}
