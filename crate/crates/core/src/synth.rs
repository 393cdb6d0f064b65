//! Reproducible synthetic curved-text annotations.
//!
//! Every instance is a ribbon: a constant-height band swept along a smooth
//! centerline (straight line, circular arc or low-frequency sine), rotated
//! and placed at random without touching other ribbons. The dense
//! centerline is kept alongside each annotation as ground truth for the
//! skeleton extractor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::geometry::raster::{fill_spans, Lattice};
use crate::geometry::{Point2D, Polygon};
use crate::io::AnnotationFile;

/// Vertices along each long side of a ribbon.
const SIDE_VERTICES: usize = 16;
/// Samples kept for the recorded centerline.
const CENTERLINE_SAMPLES: usize = 128;
/// Largest curvature times ribbon height. Tighter bends let the two long
/// sides drift out of arc-length step and pull the midline off the
/// centerline.
const MAX_CURVATURE_HEIGHT: f64 = 0.3;
/// Largest tangent change between consecutive side vertices (radians).
const MAX_TURN_PER_EDGE: f64 = 0.45;
const PLACEMENT_ATTEMPTS: usize = 60;
/// Minimum empty pixels between two ribbons.
const MARGIN_PX: isize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub count: usize,
    /// Canvas `(width, height)`.
    pub size: (u32, u32),
    /// Inclusive range of instances per image.
    pub instances_per_image: (usize, usize),
    /// Inclusive bend-strength range in `[0, 1]`; 0 gives straight ribbons.
    pub curvature: (f64, f64),
    /// Inclusive ribbon height range in pixels.
    pub height_px: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            count: 100,
            size: (512, 512),
            instances_per_image: (1, 4),
            curvature: (0.0, 1.0),
            height_px: (14.0, 40.0),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("synth config: {m}")));
        if self.size.0 < 64 || self.size.1 < 64 {
            return bad("canvas must be at least 64x64");
        }
        if self.instances_per_image.0 > self.instances_per_image.1 {
            return bad("empty instance range");
        }
        let (c0, c1) = self.curvature;
        if !(c0 <= c1 && c0 >= 0.0 && c1 <= 1.0) {
            return bad("curvature range must be non-empty within [0,1]");
        }
        let (h0, h1) = self.height_px;
        if !(h0 <= h1 && h0 >= 2.0) {
            return bad("height range must be non-empty and at least 2 px");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Line,
    Arc,
    Sine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub polygon: Polygon,
    pub centerline: Vec<Point2D>,
    pub kind: CurveKind,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub annotation: AnnotationFile,
    pub instances: Vec<SynthInstance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub images: Vec<SynthImage>,
    /// Placement shortfalls, one line per affected image.
    pub warnings: Vec<String>,
}

impl SynthImage {
    /// Centerlines as text, one instance per line (`x1,y1,...`).
    pub fn centerlines_text(&self) -> String {
        let mut s = String::new();
        for inst in &self.instances {
            let parts: Vec<String> = inst
                .centerline
                .iter()
                .flat_map(|p| [p.x.to_string(), p.y.to_string()])
                .collect();
            s.push_str(&parts.join(","));
            s.push('\n');
        }
        s
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Centerline point and unit tangent at parameter `s` in `[0, 1]`, in a
/// local frame centered near the origin.
struct Curve {
    kind: CurveKind,
    length: f64,
    bend: f64,
    freq: f64,
    phase: f64,
}

impl Curve {
    fn eval(&self, s: f64) -> (Point2D, Point2D) {
        let u = (s - 0.5) * self.length;
        match self.kind {
            CurveKind::Line => (Point2D::new(u, 0.0), Point2D::new(1.0, 0.0)),
            CurveKind::Arc => {
                // `bend` is the total turning angle.
                let r = self.length / self.bend;
                let phi = u / r;
                (
                    Point2D::new(r * phi.sin(), r * (1.0 - phi.cos())),
                    Point2D::new(phi.cos(), phi.sin()),
                )
            }
            CurveKind::Sine => {
                // `bend` is the amplitude.
                let k = std::f64::consts::TAU * self.freq / self.length;
                let v = self.bend * (k * u + self.phase).sin();
                let dv = self.bend * k * (k * u + self.phase).cos();
                let n = (1.0 + dv * dv).sqrt();
                (Point2D::new(u, v), Point2D::new(1.0 / n, dv / n))
            }
        }
    }
}

fn random_curve(rng: &mut ChaCha8Rng, cfg: &SynthConfig, height: f64, length: f64) -> Curve {
    let curv = uniform(rng, cfg.curvature);
    let kind = if curv == 0.0 {
        CurveKind::Line
    } else {
        match rng.random_range(0..3) {
            0 => CurveKind::Line,
            1 => CurveKind::Arc,
            _ => CurveKind::Sine,
        }
    };
    let edge = length / (SIDE_VERTICES - 1) as f64;
    // Side vertices must stay far flatter than the four end corners.
    let kappa_max = (MAX_CURVATURE_HEIGHT / height).min(MAX_TURN_PER_EDGE / edge);
    let freq = rng.random_range(0.5..=1.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let bend = match kind {
        CurveKind::Line => 0.0,
        CurveKind::Arc => (curv * std::f64::consts::FRAC_PI_2).min(kappa_max * length),
        CurveKind::Sine => {
            let k = std::f64::consts::TAU * freq / length;
            (curv * 0.15 * length).min(kappa_max / (k * k))
        }
    };
    let kind = if bend == 0.0 { CurveKind::Line } else { kind };
    Curve {
        kind,
        length,
        bend,
        freq,
        phase,
    }
}

fn make_ribbon(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Option<SynthInstance> {
    let (w, h) = (cfg.size.0 as f64, cfg.size.1 as f64);
    let max_len = 0.8 * w.min(h);
    let height = uniform(rng, cfg.height_px).min(max_len / 4.0);
    let length = uniform(rng, (4.0 * height, max_len));
    let curve = random_curve(rng, cfg, height, length);

    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let (sin, cos) = angle.sin_cos();
    let center = Point2D::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
    let place = |p: Point2D| Point2D::new(center.x + cos * p.x - sin * p.y, center.y + sin * p.x + cos * p.y);

    let half = 0.5 * height;
    let mut upper = Vec::with_capacity(SIDE_VERTICES);
    let mut lower = Vec::with_capacity(SIDE_VERTICES);
    for j in 0..SIDE_VERTICES {
        let (c, t) = curve.eval(j as f64 / (SIDE_VERTICES - 1) as f64);
        let n = Point2D::new(-t.y, t.x);
        upper.push(place(Point2D::new(c.x + half * n.x, c.y + half * n.y)));
        lower.push(place(Point2D::new(c.x - half * n.x, c.y - half * n.y)));
    }
    lower.reverse();
    upper.extend(lower);

    let margin = MARGIN_PX as f64;
    if upper
        .iter()
        .any(|p| p.x < margin || p.y < margin || p.x > w - margin || p.y > h - margin)
    {
        return None;
    }
    let polygon = Polygon::new(upper).ok()?;
    let centerline = (0..CENTERLINE_SAMPLES)
        .map(|j| place(curve.eval(j as f64 / (CENTERLINE_SAMPLES - 1) as f64).0))
        .collect();
    Some(SynthInstance {
        polygon,
        centerline,
        kind: curve.kind,
        height,
    })
}

fn generate_image(cfg: &SynthConfig, index: usize) -> (SynthImage, Option<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let (w, h) = (cfg.size.0 as usize, cfg.size.1 as usize);
    let target = rng.random_range(cfg.instances_per_image.0..=cfg.instances_per_image.1);
    let lat = Lattice::pixels(w, h);
    let mut occupied = vec![false; w * h];
    let mut instances = Vec::with_capacity(target);

    let mut attempts = 0;
    while instances.len() < target && attempts < PLACEMENT_ATTEMPTS * target.max(1) {
        attempts += 1;
        let Some(inst) = make_ribbon(&mut rng, cfg) else {
            continue;
        };
        let mut pixels = Vec::new();
        fill_spans(&inst.polygon, &lat, |r, a, b| pixels.extend((a..b).map(|c| (c, r))));
        if pixels.is_empty() {
            continue;
        }
        let clash = pixels.iter().any(|&(x, y)| {
            (-MARGIN_PX..=MARGIN_PX).any(|dy| {
                (-MARGIN_PX..=MARGIN_PX).any(|dx| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    nx >= 0
                        && ny >= 0
                        && (nx as usize) < w
                        && (ny as usize) < h
                        && occupied[ny as usize * w + nx as usize]
                })
            })
        });
        if clash {
            continue;
        }
        for (x, y) in pixels {
            occupied[y * w + x] = true;
        }
        instances.push(inst);
    }

    let image_id = format!("synth_{}_{index:04}", cfg.seed);
    let warning =
        (instances.len() < target).then(|| format!("{image_id}: placed {} of {target} instances", instances.len()));
    let annotation = AnnotationFile {
        image_id,
        image_size: cfg.size,
        instances: instances.iter().map(|i| GroundTruth::new(i.polygon.clone())).collect(),
    };
    (SynthImage { annotation, instances }, warning)
}

/// Generates `cfg.count` images. Output depends only on `cfg`; image `i`
/// uses its own random stream, so generation order does not matter.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let results: Vec<(SynthImage, Option<String>)> =
        (0..cfg.count).into_par_iter().map(|i| generate_image(cfg, i)).collect();
    let mut images = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for (img, warn) in results {
        images.push(img);
        warnings.extend(warn);
    }
    Ok(SynthCorpus { images, warnings })
}
