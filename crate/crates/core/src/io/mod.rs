//! File formats and filesystem helpers.

pub mod annotation;
pub mod smap;

use std::io::Write;
use std::path::Path;

pub use annotation::{format_detections, parse_detections, parse_polyline_annotation, AnnotationFile};
pub use smap::{to_pgm, MapFile};

use crate::decoder::PredictionMaps;
use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_maps(path: &Path) -> Result<PredictionMaps> {
    Ok(MapFile::decode(&read_file(path)?)?.to_predictions())
}

pub fn write_maps(path: &Path, maps: &PredictionMaps) -> Result<()> {
    write_atomic(path, &MapFile::from_predictions(maps).encode())
}

/// Annotation file; the image id is the file stem.
pub fn read_annotation(path: &Path, default_size: (u32, u32)) -> Result<AnnotationFile> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parse_polyline_annotation(&id, &read_text(path)?, default_size)?)
}
