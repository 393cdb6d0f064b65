//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 on I/O
//! failure. The worker count defaults to the number of CPUs and can be set
//! with `TEXTCOHESION_WORKERS`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoder::{decode, DecodeConfig, PredictionMaps};
use crate::error::{Error, Result};
use crate::eval::{match_detections, report, ImageCounts, DEFAULT_IOU_THRESHOLD};
use crate::io::{self, format_detections, parse_detections, to_pgm};
use crate::labelgen::LabelConfig;
use crate::losses::{gradient_check, probe_is_smooth, total_loss, LossTargets, DEFAULT_LAMBDA};
use crate::pipeline::{labels_for, roundtrip, to_scored};
use crate::synth::{synth_corpus, SynthConfig};

pub const WORKERS_ENV: &str = "TEXTCOHESION_WORKERS";
const DEFAULT_SIZE: (u32, u32) = (512, 512);
/// Finite-difference step for `loss-check`.
const FD_STEP: f64 = 1e-5;
const GRAD_TOLERANCE: f64 = 1e-4;
const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "textcohesion",
    version,
    about = "Skeleton/direction text-detection label generation, decoding and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Skeleton band radius as a fraction of local half-height.
    #[arg(long, default_value_t = 0.2)]
    r_frac: f64,
    /// Skeleton dots per instance.
    #[arg(long, default_value_t = crate::geometry::DEFAULT_DOT_COUNT)]
    dots: usize,
}

impl LabelArgs {
    fn config(&self) -> Result<LabelConfig> {
        if !(self.r_frac >= 0.0 && self.r_frac.is_finite()) {
            return Err(Error::Invalid("--r-frac must be a finite value >= 0".into()));
        }
        if self.dots < 2 {
            return Err(Error::Invalid("--dots must be at least 2".into()));
        }
        Ok(LabelConfig {
            dot_count: self.dots,
            r_frac: self.r_frac,
        })
    }
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Confidence threshold on a candidate's mean skeleton score.
    #[arg(long, default_value_t = 0.54)]
    gamma: f64,
    /// Text-region threshold.
    #[arg(long, default_value_t = 0.2)]
    t_tr: f64,
    /// Directional-region threshold.
    #[arg(long, default_value_t = 0.1)]
    t_dpr: f64,
    /// Skeleton threshold used to form candidates.
    #[arg(long, default_value_t = 0.2)]
    ts_binarize: f64,
    /// Smallest candidate component, in pixels.
    #[arg(long, default_value_t = 5)]
    min_component: usize,
    /// Polygon simplification tolerance, in pixels.
    #[arg(long, default_value_t = 1.0)]
    simplify_eps: f64,
    /// Keep every candidate regardless of its score.
    #[arg(long)]
    no_confidence: bool,
}

impl DecodeArgs {
    fn config(&self) -> Result<DecodeConfig> {
        let cfg = DecodeConfig {
            gamma: self.gamma,
            t_tr: self.t_tr,
            t_dpr: self.t_dpr,
            ts_binarize: self.ts_binarize,
            min_component_px: self.min_component,
            simplify_eps: self.simplify_eps,
            confidence_scoring: !self.no_confidence,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize an annotation into ground-truth maps.
    GenLabels {
        ann: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        label: LabelArgs,
        /// Canvas width when the annotation has no size header.
        #[arg(long, default_value_t = DEFAULT_SIZE.0)]
        width: u32,
        /// Canvas height when the annotation has no size header.
        #[arg(long, default_value_t = DEFAULT_SIZE.1)]
        height: u32,
    },
    /// Turn score maps into scored polygons (`score;x1,y1,...`).
    Decode {
        input: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score detections against ground truth. Both arguments are files or
    /// both are directories paired by file stem.
    Eval {
        dets: PathBuf,
        gts: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate labels for every annotation in a directory, decode them and
    /// compare with the source polygons.
    Roundtrip {
        ann_dir: PathBuf,
        #[command(flatten)]
        label: LabelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
    },
    /// Print the loss breakdown for a prediction against ground-truth maps
    /// and verify gradients numerically.
    LossCheck {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Pixels probed per channel by the gradient check.
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic curved-text corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIZE.0)]
        width: u32,
        #[arg(long, default_value_t = DEFAULT_SIZE.1)]
        height: u32,
        #[arg(long, default_value_t = 1)]
        min_instances: usize,
        #[arg(long, default_value_t = 4)]
        max_instances: usize,
        #[arg(long, default_value_t = 0.0)]
        min_curvature: f64,
        #[arg(long, default_value_t = 1.0)]
        max_curvature: f64,
        #[arg(long, default_value_t = 14.0)]
        min_height: f64,
        #[arg(long, default_value_t = 40.0)]
        max_height: f64,
    },
    /// Write every channel of a map file as a PGM image.
    ExportPgm { input: PathBuf, out_dir: PathBuf },
}

/// Runs the CLI with process stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = worker_pool().and_then(|pool| pool.install(|| dispatch(cli.command, out, err)));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Invalid(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Invalid(format!("worker pool: {e}")))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn dispatch(cmd: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let stdout = |e| Error::io("<stdout>", e);
    match cmd {
        Command::GenLabels {
            ann,
            out: dest,
            label,
            width,
            height,
        } => {
            let cfg = label.config()?;
            let ann = io::read_annotation(&ann, (width, height))?;
            let labels = labels_for(&ann, &cfg)?;
            io::write_maps(&dest, &PredictionMaps::from_labels(&labels))?;
            writeln!(
                out,
                "{}: {} instances, {}x{} -> {}",
                ann.image_id,
                ann.instances.len(),
                ann.image_size.0,
                ann.image_size.1,
                dest.display()
            )
            .map_err(stdout)?;
        }
        Command::Decode {
            input,
            decode: d,
            output,
        } => {
            let cfg = d.config()?;
            let maps = io::read_maps(&input)?;
            let text = format_detections(&to_scored(&decode(&maps, &cfg)?));
            match output {
                Some(path) => io::write_atomic(&path, text.as_bytes())?,
                None => out.write_all(text.as_bytes()).map_err(stdout)?,
            }
        }
        Command::Eval { dets, gts, iou, json } => {
            if !(0.0..=1.0).contains(&iou) {
                return Err(Error::Invalid("--iou must be within [0, 1]".into()));
            }
            let pairs = eval_pairs(&dets, &gts)?;
            let per_image = pairs
                .into_par_iter()
                .map(|(id, det_path, gt_path)| -> Result<ImageCounts> {
                    let gt = io::read_annotation(&gt_path, DEFAULT_SIZE)?;
                    let dets = match det_path {
                        Some(p) => parse_detections(&io::read_text(&p)?)?,
                        None => Vec::new(),
                    };
                    Ok(ImageCounts {
                        image_id: id,
                        counts: match_detections(&dets, &gt.instances, iou).counts,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let rep = report(per_image);
            if json {
                let s = serde_json::to_string_pretty(&rep).map_err(|e| Error::Invalid(e.to_string()))?;
                writeln!(out, "{s}").map_err(stdout)?;
            } else {
                writeln!(out, "{rep}").map_err(stdout)?;
            }
        }
        Command::Roundtrip {
            ann_dir,
            label,
            decode: d,
            iou,
        } => {
            let label_cfg = label.config()?;
            let decode_cfg = d.config()?;
            let files = list_txt(&ann_dir)?;
            if files.is_empty() {
                return Err(Error::Invalid(format!("no .txt annotations in {}", ann_dir.display())));
            }
            let results = files
                .par_iter()
                .map(|p| roundtrip(&io::read_annotation(p, DEFAULT_SIZE)?, &label_cfg, &decode_cfg, iou))
                .collect::<Result<Vec<_>>>()?;
            let mut all = Vec::new();
            let mut exact = 0;
            for r in &results {
                for (k, v) in r.instance_ious.iter().enumerate() {
                    writeln!(out, "{}\t{k}\t{v:.4}", r.image_id).map_err(stdout)?;
                }
                all.extend_from_slice(&r.instance_ious);
                exact += usize::from(r.det_count == r.gt_count);
            }
            let mean = if all.is_empty() {
                0.0
            } else {
                all.iter().sum::<f64>() / all.len() as f64
            };
            let rep = report(
                results
                    .into_iter()
                    .map(|r| ImageCounts {
                        image_id: r.image_id,
                        counts: r.counts,
                    })
                    .collect(),
            );
            writeln!(out, "instances        {}", all.len()).map_err(stdout)?;
            writeln!(out, "mean IoU         {mean:.4}").map_err(stdout)?;
            writeln!(out, "exact counts     {exact}/{}", rep.per_image.len()).map_err(stdout)?;
            writeln!(out, "{rep}").map_err(stdout)?;
        }
        Command::LossCheck {
            pred,
            gt,
            lambda,
            samples,
            seed,
        } => loss_check(&pred, &gt, lambda, samples, seed, out)?,
        Command::Synth {
            seed,
            count,
            out: dir,
            width,
            height,
            min_instances,
            max_instances,
            min_curvature,
            max_curvature,
            min_height,
            max_height,
        } => {
            let cfg = SynthConfig {
                seed,
                count,
                size: (width, height),
                instances_per_image: (min_instances, max_instances),
                curvature: (min_curvature, max_curvature),
                height_px: (min_height, max_height),
            };
            let corpus = synth_corpus(&cfg)?;
            let lines = dir.join("centerlines");
            std::fs::create_dir_all(&lines).map_err(io_err(&lines))?;
            corpus.images.par_iter().try_for_each(|img| -> Result<()> {
                let id = &img.annotation.image_id;
                io::write_atomic(&dir.join(format!("{id}.txt")), img.annotation.to_text().as_bytes())?;
                io::write_atomic(&lines.join(format!("{id}.txt")), img.centerlines_text().as_bytes())
            })?;
            for w in &corpus.warnings {
                writeln!(err, "warning: {w}").map_err(stdout)?;
            }
            let n: usize = corpus.images.iter().map(|i| i.instances.len()).sum();
            writeln!(
                out,
                "wrote {} images ({n} instances) to {}",
                corpus.images.len(),
                dir.display()
            )
            .map_err(stdout)?;
        }
        Command::ExportPgm { input, out_dir } => {
            let maps = io::read_maps(&input)?;
            std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            for (name, ch) in PredictionMaps::CHANNEL_NAMES.iter().zip(maps.channels()) {
                io::write_atomic(&out_dir.join(format!("{stem}_{name}.pgm")), &to_pgm(ch))?;
            }
        }
    }
    Ok(())
}

fn loss_check(
    pred: &Path,
    gt: &Path,
    lambda: f64,
    samples: usize,
    seed: u64,
    out: &mut (dyn Write + Send),
) -> Result<()> {
    let stdout = |e| Error::io("<stdout>", e);
    if !lambda.is_finite() {
        return Err(Error::Invalid("--lambda must be finite".into()));
    }
    let preds = io::read_maps(pred)?;
    let gt_maps = io::read_maps(gt)?;
    if preds.ts.dims() != gt_maps.ts.dims() {
        return Err(Error::Invalid(format!(
            "prediction is {:?} but ground truth is {:?}",
            preds.ts.dims(),
            gt_maps.ts.dims()
        )));
    }
    let targets = LossTargets::from_maps(&gt_maps);
    let b = total_loss(&preds, &targets, lambda)?;
    writeln!(out, "l_ts   {}", b.l_ts).map_err(stdout)?;
    writeln!(out, "l_dpr  {}", b.l_dpr).map_err(stdout)?;
    writeln!(out, "l_tf   {}", b.l_tf).map_err(stdout)?;
    writeln!(out, "l_tr   {}", b.l_tr).map_err(stdout)?;
    writeln!(out, "lambda {}", b.lambda).map_err(stdout)?;
    writeln!(out, "total  {}", b.total).map_err(stdout)?;
    let recomputed = lambda * b.l_ts + b.l_dpr + b.l_tf + b.l_tr;
    let gap = (b.total - recomputed).abs();
    let identity_ok = gap <= IDENTITY_TOLERANCE;
    writeln!(
        out,
        "identity |total - (lambda*l_ts + l_dpr + l_tf + l_tr)| = {gap:e} {}",
        if identity_ok { "ok" } else { "FAIL" }
    )
    .map_err(stdout)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = preds.ts.len();
    let mut probes = Vec::new();
    let mut skipped = 0;
    for channel in 0..PredictionMaps::CHANNEL_NAMES.len() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut taken = 0;
        for i in idx {
            if taken == samples {
                break;
            }
            if probe_is_smooth(&preds, &targets, channel, i, FD_STEP) {
                probes.push((channel, i));
                taken += 1;
            } else {
                skipped += 1;
            }
        }
    }
    let checks = gradient_check(&preds, &targets, lambda, FD_STEP, &probes)?;
    let worst = checks.iter().map(|c| c.rel_err).fold(0.0, f64::max);
    let grad_ok = worst < GRAD_TOLERANCE;
    writeln!(
        out,
        "gradient check: {} probes ({skipped} near kinks skipped), max rel err {worst:e} {}",
        checks.len(),
        if grad_ok { "ok" } else { "FAIL" }
    )
    .map_err(stdout)?;
    if identity_ok && grad_ok {
        Ok(())
    } else {
        Err(Error::Invalid("loss check failed".into()))
    }
}

fn list_txt(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `(image id, detections file, ground-truth file)`. Ground-truth files
/// without detections count every instance as missed.
fn eval_pairs(dets: &Path, gts: &Path) -> Result<Vec<(String, Option<PathBuf>, PathBuf)>> {
    match (dets.is_dir(), gts.is_dir()) {
        (false, false) => Ok(vec![(stem(gts), Some(dets.to_path_buf()), gts.to_path_buf())]),
        (true, true) => {
            let det_files = list_txt(dets)?;
            let gt_files = list_txt(gts)?;
            let gt_stems: std::collections::BTreeSet<String> = gt_files.iter().map(|p| stem(p)).collect();
            if let Some(orphan) = det_files.iter().find(|p| !gt_stems.contains(&stem(p))) {
                return Err(Error::Invalid(format!("no ground truth for {}", orphan.display())));
            }
            Ok(gt_files
                .into_iter()
                .map(|g| {
                    let d = dets.join(g.file_name().unwrap());
                    (stem(&g), d.is_file().then_some(d), g)
                })
                .collect())
        }
        _ => Err(Error::Invalid(
            "detections and ground truth must both be files or both directories".into(),
        )),
    }
}
