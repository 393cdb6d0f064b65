//! Polyline annotation text and detection records.
//!
//! Annotations hold one instance per line, `x1,y1,x2,y2,...`, optionally
//! followed by a `#`-prefixed transcription token; a token of exactly `###`
//! marks the instance as ignored. A `# image_size: W H` comment line sets
//! the canvas size; other `#` lines are comments.
//!
//! Detection records use `score;x1,y1,...` per line.

use crate::error::ParseError;
use crate::eval::{GroundTruth, ScoredPolygon};
use crate::geometry::{Point2D, Polygon};

pub const IGNORE_TAG: &str = "###";
const SIZE_HEADER: &str = "image_size:";

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFile {
    pub image_id: String,
    pub image_size: (u32, u32),
    pub instances: Vec<GroundTruth>,
}

impl AnnotationFile {
    pub fn polygons(&self) -> Vec<Polygon> {
        self.instances.iter().map(|g| g.polygon.clone()).collect()
    }

    /// Serializes back into the text format. Coordinates use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {SIZE_HEADER} {} {}\n", self.image_size.0, self.image_size.1);
        for g in &self.instances {
            s.push_str(&format_coords(g.polygon.vertices()));
            if g.ignore {
                s.push(',');
                s.push_str(IGNORE_TAG);
            }
            s.push('\n');
        }
        s
    }
}

fn format_coords(vs: &[Point2D]) -> String {
    let mut parts = Vec::with_capacity(vs.len() * 2);
    for v in vs {
        parts.push(v.x.to_string());
        parts.push(v.y.to_string());
    }
    parts.join(",")
}

fn parse_coords(tokens: &[&str], line: usize) -> Result<Vec<Point2D>, ParseError> {
    let nums = tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::NonNumeric {
                    line,
                    token: t.to_string(),
                })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if nums.len() % 2 != 0 {
        return Err(ParseError::OddCoordinateCount { line });
    }
    Ok(nums.chunks_exact(2).map(|c| Point2D::new(c[0], c[1])).collect())
}

/// Parses annotation text. `default_size` applies when no size header is
/// present. Coordinates are clamped to the canvas before validation.
pub fn parse_polyline_annotation(
    image_id: &str,
    text: &str,
    default_size: (u32, u32),
) -> Result<AnnotationFile, ParseError> {
    let mut size = default_size;
    let mut raw: Vec<(usize, Vec<Point2D>, bool)> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix(SIZE_HEADER) {
                let dims: Vec<u32> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| ParseError::BadHeader { line: ln }))
                    .collect::<Result<_, _>>()?;
                match dims[..] {
                    [w, h] if w > 0 && h > 0 => size = (w, h),
                    _ => return Err(ParseError::BadHeader { line: ln }),
                }
            }
            continue;
        }
        let mut tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut ignore = false;
        if let Some(last) = tokens.last() {
            if last.starts_with('#') {
                ignore = *last == IGNORE_TAG;
                tokens.pop();
            }
        }
        let pts = parse_coords(&tokens, ln)?;
        if pts.len() < 4 {
            return Err(ParseError::TooFewPoints { line: ln });
        }
        raw.push((ln, pts, ignore));
    }

    let (w, h) = (size.0 as f64, size.1 as f64);
    let instances = raw
        .into_iter()
        .map(|(line, pts, ignore)| {
            let clamped = pts
                .into_iter()
                .map(|p| Point2D::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h)))
                .collect();
            Polygon::new(clamped)
                .map(|polygon| GroundTruth { polygon, ignore })
                .map_err(|source| ParseError::InvalidPolygon { line, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnnotationFile {
        image_id: image_id.to_string(),
        image_size: size,
        instances,
    })
}

pub fn format_detections(dets: &[ScoredPolygon]) -> String {
    let mut s = String::new();
    for d in dets {
        s.push_str(&d.score.to_string());
        s.push(';');
        s.push_str(&format_coords(d.polygon.vertices()));
        s.push('\n');
    }
    s
}

pub fn parse_detections(text: &str) -> Result<Vec<ScoredPolygon>, ParseError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (score, coords) = line.split_once(';').ok_or_else(|| ParseError::BadDetection {
            line: ln,
            reason: "missing ';' after score".into(),
        })?;
        let score: f64 = score.trim().parse().map_err(|_| ParseError::BadDetection {
            line: ln,
            reason: format!("bad score {score:?}"),
        })?;
        let tokens: Vec<&str> = coords.split(',').map(str::trim).collect();
        let pts = parse_coords(&tokens, ln)?;
        let polygon = Polygon::new(pts).map_err(|source| ParseError::InvalidPolygon { line: ln, source })?;
        out.push(ScoredPolygon { score, polygon });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SZ: (u32, u32) = (512, 512);

    #[test]
    fn rectangle_line() {
        let a = parse_polyline_annotation("a", "0,0,10,0,10,5,0,5", SZ).unwrap();
        assert_eq!(a.instances.len(), 1);
        assert_eq!(a.instances[0].polygon.len(), 4);
        assert!(!a.instances[0].ignore);
    }

    #[test]
    fn odd_count_reports_line() {
        let e = parse_polyline_annotation("a", "0,0,10,0,10", SZ).unwrap_err();
        assert_eq!(e, ParseError::OddCoordinateCount { line: 1 });
        assert_eq!(e.to_string(), "odd coordinate count at line 1");
    }

    #[test]
    fn other_errors_report_line() {
        let e = parse_polyline_annotation("a", "0,0,10,0,10,5,0,5\n\n0,0,x,1,2,2,0,2", SZ).unwrap_err();
        assert_eq!(
            e,
            ParseError::NonNumeric {
                line: 3,
                token: "x".into()
            }
        );
        let e = parse_polyline_annotation("a", "0,0,10,0,10,5", SZ).unwrap_err();
        assert_eq!(e, ParseError::TooFewPoints { line: 1 });
        let e = parse_polyline_annotation("a", "0,0,10,10,10,0,0,10", SZ).unwrap_err();
        assert!(matches!(e, ParseError::InvalidPolygon { line: 1, .. }));
    }

    #[test]
    fn fourteen_point_line() {
        let mut coords = vec![];
        for i in 0..7 {
            coords.push(format!("{},{}", 10 + i * 10, 10));
        }
        for i in (0..7).rev() {
            coords.push(format!("{},{}", 10 + i * 10, 30));
        }
        let line = coords.join(",");
        let a = parse_polyline_annotation("ctw", &line, SZ).unwrap();
        assert_eq!(a.instances[0].polygon.len(), line.split(',').count() / 2);
    }

    #[test]
    fn header_ignore_and_clamp() {
        let text = "# image_size: 100 50\n# note\n-5,0,120,0,120,20,-5,20,###\n10,30,20,30,20,40,10,40,####HELLO\n";
        let a = parse_polyline_annotation("x", text, SZ).unwrap();
        assert_eq!(a.image_size, (100, 50));
        assert!(a.instances[0].ignore);
        assert!(!a.instances[1].ignore);
        let bb = a.instances[0].polygon.bbox();
        assert_eq!((bb.min_x, bb.max_x), (0.0, 100.0));
        let again = parse_polyline_annotation("x", &a.to_text(), SZ).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn detection_records() {
        let dets = vec![ScoredPolygon {
            score: 0.875,
            polygon: Polygon::rect(1.0, 2.0, 3.5, 4.0).unwrap(),
        }];
        let text = format_detections(&dets);
        assert_eq!(text, "0.875;1,2,3.5,2,3.5,4,1,4\n");
        assert_eq!(parse_detections(&text).unwrap(), dets);
        assert!(parse_detections("0.5 1,2,3,4").is_err());
    }
}
