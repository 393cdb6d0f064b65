use thiserror::Error;

/// Failures from polygon and skeleton construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("duplicate consecutive vertex at {0}")]
    DuplicateVertex(usize),
    #[error("polygon has zero signed area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("chain has zero total length")]
    DegenerateChain,
    #[error("resample count must be at least 2, got {0}")]
    TooFewSamples(usize),
    #[error("coincident points have no direction")]
    CoincidentPoints,
    #[error("no four-corner decomposition: {0}")]
    NoCornerDecomposition(String),
}

/// Failures while building ground-truth label maps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("polygons {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("skeleton extraction failed for polygon {index}: {source}")]
    Skeleton {
        index: usize,
        #[source]
        source: GeometryError,
    },
}

/// Failures in the loss computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("skeleton pixel at index {0} has no owning instance")]
    MissingInstance(usize),
}

/// Failures while decoding prediction maps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("channel {channel} has dims {got:?}, expected {expected:?}")]
    DimensionMismatch {
        channel: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("channel {channel} has a value outside [0,1] at index {index}")]
    OutOfRange { channel: &'static str, index: usize },
    #[error("invalid decode config: {0}")]
    BadConfig(String),
    #[error("cannot build a polygon from an empty mask")]
    EmptyMask,
    #[error("contour polygon invalid: {0}")]
    Contour(#[from] GeometryError),
}

/// Annotation text parse errors, carrying the 1-based line number.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("odd coordinate count at line {line}")]
    OddCoordinateCount { line: usize },
    #[error("non-numeric token {token:?} at line {line}")]
    NonNumeric { line: usize, token: String },
    #[error("fewer than 4 points at line {line}")]
    TooFewPoints { line: usize },
    #[error("invalid polygon at line {line}: {source}")]
    InvalidPolygon {
        line: usize,
        #[source]
        source: GeometryError,
    },
    #[error("malformed header at line {line}")]
    BadHeader { line: usize },
    #[error("malformed detection record at line {line}: {reason}")]
    BadDetection { line: usize, reason: String },
}

/// SMAP binary format errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapFormatError {
    #[error("bad magic {0:?}, expected \"SMAP\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid dimensions {width}x{height}x{channels}")]
    BadDimensions { width: u32, height: u32, channels: u8 },
    #[error("non-finite value in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },
    #[error("value {value} out of [0,1] in channel {channel} at index {index}")]
    OutOfRange { channel: usize, index: usize, value: f32 },
}

/// Top-level error used by the file-facing API and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    MapFormat(#[from] MapFormatError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
