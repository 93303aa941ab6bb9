//! Seeded synthetic 2-D classification datasets.
//!
//! Points are drawn uniformly from `[-1, 1]^2`, labeled by the dataset's rule
//! and only then jittered with Gaussian noise, so a noisy point may sit on
//! the wrong side of the boundary it was labeled by.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DataError};

/// Vertices of the fixed triangle region, counter-clockwise.
pub const TRIANGLE: [(f64, f64); 3] = [(-0.8, -0.6), (0.8, -0.6), (0.0, 0.8)];

/// Half-width of the box the concave region is cut from.
pub const CONCAVE_HALF_WIDTH: f64 = 0.6;

const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x1: f64,
    pub x2: f64,
    /// `-1` or `+1`.
    pub label: i8,
}

impl LabeledPoint {
    pub fn coords(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    /// Regression target in `{0, 1}`.
    pub fn target(&self) -> f64 {
        if self.label > 0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn class(&self) -> u8 {
        u8::from(self.label > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetKind {
    /// Positive when both coordinates share a sign.
    #[serde(rename = "xor")]
    XorQuadrants,
    /// Positive when `x > y` and `y > -x`, or `x < y` and `y < -x`.
    Preference,
    /// Positive inside the circle of the given radius around the origin.
    Circle { radius: f64 },
    /// Positive inside [`TRIANGLE`].
    Triangle,
    /// Positive in a square with its upper-right quadrant removed.
    Concave,
}

impl DatasetKind {
    pub const NAMES: [&'static str; 5] = ["xor", "preference", "circle", "triangle", "concave"];

    pub const DEFAULT_RADIUS: f64 = 0.5;

    /// Looks a kind up by name; the circle gets [`Self::DEFAULT_RADIUS`].
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "xor" => DatasetKind::XorQuadrants,
            "preference" => DatasetKind::Preference,
            "circle" => DatasetKind::Circle {
                radius: Self::DEFAULT_RADIUS,
            },
            "triangle" => DatasetKind::Triangle,
            "concave" => DatasetKind::Concave,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::XorQuadrants => "xor",
            DatasetKind::Preference => "preference",
            DatasetKind::Circle { .. } => "circle",
            DatasetKind::Triangle => "triangle",
            DatasetKind::Concave => "concave",
        }
    }

    /// Ground-truth label of a clean point.
    pub fn label(&self, x: f64, y: f64) -> i8 {
        let positive = match *self {
            DatasetKind::XorQuadrants => (x > 0.0 && y > 0.0) || (x < 0.0 && y < 0.0),
            DatasetKind::Preference => (x > y && y > -x) || (x < y && y < -x),
            DatasetKind::Circle { radius } => x * x + y * y < radius * radius,
            DatasetKind::Triangle => triangle_edges().iter().all(|e| e.signed(x, y) > 0.0),
            DatasetKind::Concave => {
                let h = CONCAVE_HALF_WIDTH;
                let in_box = x > -h && x < h && y > -h && y < h;
                in_box && !(x > 0.0 && y > 0.0)
            }
        };
        if positive {
            1
        } else {
            -1
        }
    }

    /// Lower bound on the distance from `(x, y)` to the decision boundary.
    ///
    /// Boundaries made of segments are bounded by the distance to their
    /// supporting lines, which can only under-estimate.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            DatasetKind::XorQuadrants => x.abs().min(y.abs()),
            DatasetKind::Preference => (x - y).abs().min((x + y).abs()) / std::f64::consts::SQRT_2,
            DatasetKind::Circle { radius } => (x.hypot(y) - radius).abs(),
            DatasetKind::Triangle => triangle_edges()
                .iter()
                .map(|e| e.signed(x, y).abs())
                .fold(f64::INFINITY, f64::min),
            DatasetKind::Concave => {
                let h = CONCAVE_HALF_WIDTH;
                [x.abs() - h, y.abs() - h, x, y]
                    .iter()
                    .map(|v| v.abs())
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let DatasetKind::Circle { radius } = *self {
            if !(radius.is_finite() && radius > 0.0 && radius < std::f64::consts::SQRT_2) {
                return Err(ConfigError::Invalid(format!(
                    "circle radius must lie in (0, sqrt 2), got {radius}"
                )));
            }
        }
        Ok(())
    }
}

/// Line `n . p + c = 0` with unit normal pointing into the triangle.
struct Edge {
    n: (f64, f64),
    c: f64,
}

impl Edge {
    fn signed(&self, x: f64, y: f64) -> f64 {
        self.n.0 * x + self.n.1 * y + self.c
    }
}

fn triangle_edges() -> [Edge; 3] {
    std::array::from_fn(|i| {
        let (ax, ay) = TRIANGLE[i];
        let (bx, by) = TRIANGLE[(i + 1) % 3];
        // Left normal of a counter-clockwise edge points inward.
        let (nx, ny) = (-(by - ay), bx - ax);
        let len = nx.hypot(ny);
        let n = (nx / len, ny / len);
        Edge {
            n,
            c: -(n.0 * ax + n.1 * ay),
        }
    })
}

/// In JSON the kind's fields sit next to the others, as in
/// `{"kind": "circle", "radius": 0.5, "n": 500, "noise": 0.05, "seed": 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub kind: DatasetKind,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Standard deviation of the Gaussian coordinate jitter.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    /// Clean points closer than this to the boundary are redrawn.
    #[serde(default)]
    pub margin: f64,
}

fn default_n() -> usize {
    500
}

fn default_noise() -> f64 {
    0.05
}

impl DatasetConfig {
    pub fn new(kind: DatasetKind, n: usize, noise: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise,
            seed,
            margin: 0.0,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kind.validate()?;
        if self.n == 0 {
            return Err(ConfigError::Invalid("dataset needs at least one point".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(ConfigError::Invalid(format!("noise must be >= 0, got {}", self.noise)));
        }
        if !(self.margin.is_finite() && (0.0..0.5).contains(&self.margin)) {
            return Err(ConfigError::Invalid(format!(
                "margin must lie in [0, 0.5), got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

/// Draws `cfg.n` labeled points; identical configs give identical output.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Vec<LabeledPoint>, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Normal::new(0.0, cfg.noise).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut points = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let (x, y) = draw_clean(cfg, &mut rng)?;
        let label = cfg.kind.label(x, y);
        let (dx, dy) = if cfg.noise > 0.0 {
            (jitter.sample(&mut rng), jitter.sample(&mut rng))
        } else {
            (0.0, 0.0)
        };
        points.push(LabeledPoint {
            x1: x + dx,
            x2: y + dy,
            label,
        });
    }
    Ok(points)
}

fn draw_clean(cfg: &DatasetConfig, rng: &mut ChaCha8Rng) -> Result<(f64, f64), ConfigError> {
    for _ in 0..MAX_REJECTIONS {
        let x = rng.random_range(-1.0..=1.0);
        let y = rng.random_range(-1.0..=1.0);
        if cfg.margin == 0.0 || cfg.kind.boundary_distance(x, y) >= cfg.margin {
            return Ok((x, y));
        }
    }
    Err(ConfigError::Invalid(format!(
        "margin {} leaves no room to sample {} points",
        cfg.margin,
        cfg.kind.name()
    )))
}

/// Shuffles with `seed` and cuts at `round(len * train_fraction)`.
pub fn split(
    points: &[LabeledPoint],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledPoint>, Vec<LabeledPoint>), ConfigError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ConfigError::Invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = (points.len() as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == points.len() {
        return Err(ConfigError::Invalid(format!(
            "splitting {} points at {train_fraction} leaves one side empty",
            points.len()
        )));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| points[i]).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

pub fn write_csv<W: Write>(points: &[LabeledPoint], out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x1,x2,label` rows. Labels must be `-1` or `1`.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<LabeledPoint>, DataError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for (i, record) in reader.deserialize::<LabeledPoint>().enumerate() {
        let p = record?;
        let row = i + 2;
        if !(p.x1.is_finite() && p.x2.is_finite()) {
            return Err(DataError::Row {
                row,
                message: "non-finite coordinate".into(),
            });
        }
        if p.label != 1 && p.label != -1 {
            return Err(DataError::Row {
                row,
                message: format!("label must be -1 or 1, got {}", p.label),
            });
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(ConfigError::Invalid("csv holds no data rows".into()).into());
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: DatasetKind, n: usize, noise: f64) -> DatasetConfig {
        DatasetConfig::new(kind, n, noise, 7)
    }

    #[test]
    fn ground_truth_examples() {
        let xor = DatasetKind::XorQuadrants;
        assert_eq!(xor.label(0.5, 0.5), 1);
        assert_eq!(xor.label(0.5, -0.5), -1);
        assert_eq!(xor.label(-0.5, -0.5), 1);
        assert_eq!(DatasetKind::Preference.label(0.8, 0.1), 1);
        assert_eq!(DatasetKind::Preference.label(-0.8, 0.1), 1);
        assert_eq!(DatasetKind::Preference.label(0.1, 0.8), -1);
        let circle = DatasetKind::Circle { radius: 0.5 };
        assert_eq!(circle.label(0.0, 0.0), 1);
        assert_eq!(circle.label(0.9, 0.9), -1);
        assert_eq!(DatasetKind::Triangle.label(0.0, 0.0), 1);
        assert_eq!(DatasetKind::Triangle.label(0.7, 0.5), -1);
        assert_eq!(DatasetKind::Triangle.label(0.0, -0.7), -1);
        assert_eq!(DatasetKind::Concave.label(-0.3, 0.3), 1);
        assert_eq!(DatasetKind::Concave.label(0.3, 0.3), -1);
        assert_eq!(DatasetKind::Concave.label(0.9, -0.3), -1);
    }

    #[test]
    fn zero_noise_labels_follow_the_rule() {
        for name in DatasetKind::NAMES {
            let kind = DatasetKind::from_name(name).unwrap();
            for p in generate_dataset(&cfg(kind, 500, 0.0)).unwrap() {
                assert_eq!(p.label, kind.label(p.x1, p.x2));
                assert!(p.x1.abs() <= 1.0 && p.x2.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(DatasetKind::Triangle, 200, 0.05);
        assert_eq!(generate_dataset(&c).unwrap(), generate_dataset(&c).unwrap());
        let other = DatasetConfig { seed: 8, ..c };
        assert_ne!(generate_dataset(&c).unwrap(), generate_dataset(&other).unwrap());
    }

    #[test]
    fn balanced_classes() {
        for kind in [DatasetKind::XorQuadrants, DatasetKind::Preference] {
            let pts = generate_dataset(&cfg(kind, 2000, 0.0)).unwrap();
            let pos = pts.iter().filter(|p| p.label > 0).count() as f64 / 2000.0;
            assert!((0.45..=0.55).contains(&pos), "{kind:?}: {pos}");
        }
    }

    #[test]
    fn margin_is_respected() {
        let c = cfg(DatasetKind::XorQuadrants, 500, 0.0).with_margin(0.1);
        for p in generate_dataset(&c).unwrap() {
            assert!(p.x1.abs() >= 0.1 && p.x2.abs() >= 0.1);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_dataset(&cfg(DatasetKind::XorQuadrants, 0, 0.0)).is_err());
        assert!(generate_dataset(&cfg(DatasetKind::XorQuadrants, 5, -1.0)).is_err());
        assert!(generate_dataset(&cfg(DatasetKind::Circle { radius: 0.0 }, 5, 0.0)).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let pts = generate_dataset(&cfg(DatasetKind::Preference, 100, 0.0)).unwrap();
        let (tr, te) = split(&pts, 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(split(&pts, 0.8, 3).unwrap(), (tr.clone(), te.clone()));
        let mut all: Vec<_> = tr.iter().chain(&te).map(|p| (p.x1.to_bits(), p.x2.to_bits())).collect();
        let mut orig: Vec<_> = pts.iter().map(|p| (p.x1.to_bits(), p.x2.to_bits())).collect();
        all.sort_unstable();
        orig.sort_unstable();
        assert_eq!(all, orig);
        assert!(split(&pts[..1], 0.5, 0).is_err());
        assert!(split(&pts, 1.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = generate_dataset(&cfg(DatasetKind::Circle { radius: 0.4 }, 50, 0.1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        assert!(buf.starts_with(b"x1,x2,label\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), pts);
        assert!(read_csv("x1,x2,label\n0.1,0.2,0\n".as_bytes()).is_err());
        assert!(read_csv("x1,x2,label\n".as_bytes()).is_err());
    }
}
