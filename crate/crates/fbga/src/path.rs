//! Discretized paths: curvilinear abscissas with pointwise curvature,
//! CSV I/O, resampling, and synthetic track construction.
//!
//! Sign convention: positive curvature is a left turn and produces positive
//! lateral acceleration, so the upper lateral bound limits left turns.

use std::io::Write as _;
use std::path::Path as FsPath;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Segments shorter than this are rejected at validation.
const MIN_SEGMENT_LEN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("failed to read path file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse path CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("path row {row}: expected two numeric columns s,kappa")]
    BadRow { row: usize },
    #[error("s not strictly increasing at row {row}")]
    NonMonotone { row: usize },
    #[error("non-finite value at row {row}")]
    NonFiniteRow { row: usize },
    #[error("path needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("segment starting at row {row} is shorter than {MIN_SEGMENT_LEN} m")]
    DegenerateSegment { row: usize },
    #[error("track segment {index}: {reason}")]
    BadSegment { index: usize, reason: String },
}

/// A fixed path sampled at N nodes: arc-length positions and curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    s: Vec<f64>,
    kappa: Vec<f64>,
}

impl Path {
    /// Builds a validated path. `s` must be strictly increasing and finite,
    /// with at least two points and no near-zero segment.
    pub fn new(s: Vec<f64>, kappa: Vec<f64>) -> Result<Self, PathError> {
        if s.len() < 2 {
            return Err(PathError::TooShort(s.len()));
        }
        assert_eq!(s.len(), kappa.len(), "s and kappa must have equal length");
        for i in 0..s.len() {
            if !s[i].is_finite() || !kappa[i].is_finite() {
                return Err(PathError::NonFiniteRow { row: i + 1 });
            }
            if i > 0 {
                if s[i] <= s[i - 1] {
                    return Err(PathError::NonMonotone { row: i + 1 });
                }
                if s[i] - s[i - 1] < MIN_SEGMENT_LEN {
                    return Err(PathError::DegenerateSegment { row: i });
                }
            }
        }
        Ok(Path { s, kappa })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Total arc length covered by the path.
    pub fn total_length(&self) -> f64 {
        self.s[self.s.len() - 1] - self.s[0]
    }

    /// Length of segment `i` (between nodes `i` and `i+1`).
    pub fn segment_len(&self, i: usize) -> f64 {
        self.s[i + 1] - self.s[i]
    }

    /// Curvature at arc length `x`, interpolated linearly between nodes and
    /// clamped at the ends.
    pub fn kappa_at(&self, x: f64) -> f64 {
        let n = self.s.len();
        let xc = x.clamp(self.s[0], self.s[n - 1]);
        let idx = self.s.partition_point(|&b| b <= xc).min(n - 1);
        let i = idx.saturating_sub(1);
        let t = (xc - self.s[i]) / (self.s[i + 1] - self.s[i]);
        self.kappa[i] * (1.0 - t) + self.kappa[i + 1] * t
    }

    /// Resamples onto a uniform grid of `n >= 2` nodes over the same span.
    /// Curvature is interpolated linearly; endpoints are preserved exactly.
    pub fn resample(&self, n: usize) -> Path {
        assert!(n >= 2, "resample needs at least 2 points");
        let (s0, s1) = (self.s[0], self.s[self.s.len() - 1]);
        let mut s = Vec::with_capacity(n);
        let mut kappa = Vec::with_capacity(n);
        for k in 0..n {
            let x = if k == n - 1 {
                s1
            } else {
                s0 + (s1 - s0) * (k as f64) / ((n - 1) as f64)
            };
            s.push(x);
            kappa.push(self.kappa_at(x));
        }
        Path { s, kappa }
    }
}

/// Loads a two-column CSV (`s,kappa`, SI units). `#`-prefixed lines are
/// ignored; a non-numeric first row is treated as a header.
pub fn load_path(file: impl AsRef<FsPath>) -> Result<Path, PathError> {
    let text = std::fs::read_to_string(file)?;
    parse_path_csv(&text)
}

pub fn parse_path_csv(text: &str) -> Result<Path, PathError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut s = Vec::new();
    let mut kappa = Vec::new();
    let mut row = 0usize;
    for record in reader.records() {
        let record = record?;
        row += 1;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(PathError::BadRow { row });
        }
        let parsed: Result<(f64, f64), _> = record[0]
            .parse::<f64>()
            .and_then(|a| record[1].parse::<f64>().map(|b| (a, b)));
        match parsed {
            Ok((a, b)) => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(PathError::NonFiniteRow { row });
                }
                if let Some(&last) = s.last() {
                    if a <= last {
                        return Err(PathError::NonMonotone { row });
                    }
                }
                s.push(a);
                kappa.push(b);
            }
            Err(_) if row == 1 => continue, // header row
            Err(_) => return Err(PathError::BadRow { row }),
        }
    }
    Path::new(s, kappa)
}

/// Writes the `s,kappa` CSV form of a path. Values use the shortest
/// representation that round-trips exactly.
pub fn write_path(path: &Path, file: impl AsRef<FsPath>) -> Result<(), PathError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "s,kappa")?;
    for i in 0..path.len() {
        writeln!(out, "{},{}", path.s[i], path.kappa[i])?;
    }
    out.flush()?;
    Ok(())
}

/// Building blocks for synthetic test tracks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackSegment {
    /// Zero-curvature stretch.
    Straight { length: f64 },
    /// Constant-curvature stretch; positive radius turns left.
    Arc { radius: f64, length: f64 },
    /// Linear curvature ramp from the previous segment's end curvature to
    /// the next segment's start curvature (zero at the track ends).
    Clothoid { length: f64 },
}

impl TrackSegment {
    fn length(&self) -> f64 {
        match *self {
            TrackSegment::Straight { length }
            | TrackSegment::Arc { length, .. }
            | TrackSegment::Clothoid { length } => length,
        }
    }
}

/// Samples a synthetic track at (approximately) `step` metre spacing.
/// The node count is chosen so spacing is uniform and the final node lands
/// exactly on the track end.
pub fn synth_track(segments: &[TrackSegment], step: f64) -> Result<Path, PathError> {
    assert!(step > 0.0, "step must be positive");
    let total = validate_segments(segments)?;
    let n = ((total / step).ceil() as usize).max(1) + 1;
    synth_track_n(segments, n)
}

/// Samples a synthetic track at exactly `n >= 2` uniformly spaced nodes.
pub fn synth_track_n(segments: &[TrackSegment], n: usize) -> Result<Path, PathError> {
    assert!(n >= 2, "need at least 2 nodes");
    let total = validate_segments(segments)?;
    let bounds = segment_kappa_bounds(segments);
    let mut s = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for k in 0..n {
        let x = if k == n - 1 {
            total
        } else {
            total * (k as f64) / ((n - 1) as f64)
        };
        s.push(x);
        kappa.push(kappa_of(segments, &bounds, x, total));
    }
    Path::new(s, kappa)
}

fn validate_segments(segments: &[TrackSegment]) -> Result<f64, PathError> {
    if segments.is_empty() {
        return Err(PathError::BadSegment {
            index: 0,
            reason: "segment list is empty".into(),
        });
    }
    let mut total = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        let len = seg.length();
        if !(len > 0.0) || !len.is_finite() {
            return Err(PathError::BadSegment {
                index: i,
                reason: format!("length must be positive and finite, got {len}"),
            });
        }
        if let TrackSegment::Arc { radius, .. } = seg {
            if *radius == 0.0 || !radius.is_finite() {
                return Err(PathError::BadSegment {
                    index: i,
                    reason: format!("arc radius must be finite and nonzero, got {radius}"),
                });
            }
        }
        total += len;
    }
    Ok(total)
}

/// Start/end curvature of each segment, resolving clothoid ramps against
/// their neighbours (looking through runs of adjacent clothoids).
fn segment_kappa_bounds(segments: &[TrackSegment]) -> Vec<(f64, f64)> {
    let own = |seg: &TrackSegment| -> Option<f64> {
        match *seg {
            TrackSegment::Straight { .. } => Some(0.0),
            TrackSegment::Arc { radius, .. } => Some(1.0 / radius),
            TrackSegment::Clothoid { .. } => None,
        }
    };
    let n = segments.len();
    let mut bounds = vec![(0.0, 0.0); n];
    for i in 0..n {
        match own(&segments[i]) {
            Some(k) => bounds[i] = (k, k),
            None => {
                let before = segments[..i].iter().rev().find_map(own).unwrap_or(0.0);
                let after = segments[i + 1..].iter().find_map(own).unwrap_or(0.0);
                // Adjacent clothoids split the ramp evenly by length.
                let run_start = (0..i).rev().take_while(|&j| own(&segments[j]).is_none()).count();
                let run_len: f64 = segments[i - run_start..]
                    .iter()
                    .take_while(|seg| own(seg).is_none())
                    .map(|seg| seg.length())
                    .sum();
                let before_len: f64 = segments[i - run_start..i].iter().map(|s| s.length()).sum();
                let t0 = before_len / run_len;
                let t1 = (before_len + segments[i].length()) / run_len;
                bounds[i] = (
                    before + (after - before) * t0,
                    before + (after - before) * t1,
                );
            }
        }
    }
    bounds
}

fn kappa_of(segments: &[TrackSegment], bounds: &[(f64, f64)], x: f64, total: f64) -> f64 {
    let mut start = 0.0;
    for (seg, &(k0, k1)) in segments.iter().zip(bounds) {
        let end = start + seg.length();
        // Boundary nodes take the later segment's curvature.
        if x < end || (x >= total && end >= total) {
            let t = ((x - start) / seg.length()).clamp(0.0, 1.0);
            return k0 + (k1 - k0) * t;
        }
        start = end;
    }
    bounds[bounds.len() - 1].1
}

/// Generates a random closed-course-style track: `corners` corners joined by
/// straights and clothoid blends, roughly `length` metres long, sampled at
/// `n` nodes. Deterministic for a given seed.
pub fn random_track(corners: usize, length: f64, n: usize, seed: u64) -> Result<Path, PathError> {
    assert!(corners >= 1, "need at least one corner");
    assert!(length > 100.0, "track too short");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();
    // Reserve a share of the length per corner block; the remainder becomes
    // straights.
    let block = length / corners as f64;
    let mut sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    for _ in 0..corners {
        let radius = rng.random_range(18.0..120.0);
        let arc_len = rng.random_range(0.35..1.6) * radius;
        let blend = rng.random_range(10.0..35.0);
        let used = arc_len + 2.0 * blend;
        let straight = (block - used).max(30.0) * rng.random_range(0.7..1.0);
        segments.push(TrackSegment::Straight { length: straight });
        segments.push(TrackSegment::Clothoid { length: blend });
        segments.push(TrackSegment::Arc {
            radius: sign * radius,
            length: arc_len,
        });
        segments.push(TrackSegment::Clothoid { length: blend });
        if !rng.random_bool(0.3) {
            sign = -sign;
        }
    }
    segments.push(TrackSegment::Straight {
        length: rng.random_range(60.0..200.0),
    });
    synth_track_n(&segments, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_csv() {
        let p = parse_path_csv("0,0\n10,0.01\n20,0\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.s(), &[0.0, 10.0, 20.0]);
        assert_eq!(p.kappa()[1], 0.01);
    }

    #[test]
    fn parse_with_header_and_comments() {
        let p = parse_path_csv("# generated\ns,kappa\n0,0\n5,0.02\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.kappa(), &[0.0, 0.02]);
    }

    #[test]
    fn non_monotone_rejected_with_row() {
        let err = parse_path_csv("0,0\n10,0\n5,0\n").unwrap_err();
        match err {
            PathError::NonMonotone { row } => assert_eq!(row, 3),
            other => panic!("unexpected error: {other}"),
        }
        assert!(err.to_string().contains("row 3"));
    }

    #[test]
    fn nan_rejected() {
        assert!(matches!(
            parse_path_csv("0,0\n10,NaN\n").unwrap_err(),
            PathError::NonFiniteRow { row: 2 }
        ));
    }

    #[test]
    fn catalunya_scale_mesh() {
        // 4.66 km track at one-metre spacing gives 4660 points.
        let text: String = std::iter::once("s,kappa\n".to_string())
            .chain((0..4660).map(|i| format!("{},{}\n", i as f64, 0.001)))
            .collect();
        let p = parse_path_csv(&text).unwrap();
        assert_eq!(p.len(), 4660);
        let mean_len = p.total_length() / (p.len() - 1) as f64;
        assert!((mean_len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_preserves_12_digits() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 * 1.073_218_946_1).collect();
        let kappa: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 0.0321).collect();
        let p = Path::new(s, kappa).unwrap();
        let dir = std::env::temp_dir().join("fbga_path_roundtrip.csv");
        write_path(&p, &dir).unwrap();
        let q = load_path(&dir).unwrap();
        for i in 0..p.len() {
            let rel = (p.s()[i] - q.s()[i]).abs() / p.s()[i].abs().max(1.0);
            assert!(rel < 1e-12);
            let rel = (p.kappa()[i] - q.kappa()[i]).abs() / p.kappa()[i].abs().max(1.0);
            assert!(rel < 1e-12);
        }
        std::fs::remove_file(dir).ok();
    }

    #[test]
    fn resample_identity_on_uniform_grid() {
        let p = synth_track(&[TrackSegment::Straight { length: 100.0 }], 1.0).unwrap();
        let q = p.resample(p.len());
        assert_eq!(p.s(), q.s());
        assert_eq!(p.kappa(), q.kappa());
    }

    #[test]
    fn resample_linear_kappa() {
        // kappa rises linearly 0 -> 0.02 over [0, 100].
        let p = Path::new(vec![0.0, 100.0], vec![0.0, 0.02]).unwrap();
        let q = p.resample(3);
        assert_eq!(q.s(), &[0.0, 50.0, 100.0]);
        assert!((q.kappa()[1] - 0.01).abs() < 1e-15);
        assert_eq!(q.kappa()[2], 0.02);
    }

    #[test]
    fn resample_preserves_span_exactly() {
        let p = random_track(4, 1500.0, 731, 9).unwrap();
        for n in [2, 17, 100, 1431] {
            let q = p.resample(n);
            assert_eq!(q.total_length(), p.total_length());
            assert_eq!(q.s()[0], p.s()[0]);
        }
    }

    #[test]
    fn straight_track_all_zero() {
        let p = synth_track(&[TrackSegment::Straight { length: 100.0 }], 1.0).unwrap();
        assert_eq!(p.len(), 101);
        assert!(p.kappa().iter().all(|&k| k == 0.0));
    }

    #[test]
    fn arc_constant_curvature() {
        let p = synth_track(
            &[TrackSegment::Arc {
                radius: 50.0,
                length: 78.54,
            }],
            1.0,
        )
        .unwrap();
        assert!(p.kappa().iter().all(|&k| (k - 0.02).abs() < 1e-15));
    }

    #[test]
    fn clothoid_blends_are_continuous() {
        let p = synth_track(
            &[
                TrackSegment::Straight { length: 200.0 },
                TrackSegment::Clothoid { length: 50.0 },
                TrackSegment::Arc {
                    radius: 30.0,
                    length: 60.0,
                },
                TrackSegment::Clothoid { length: 50.0 },
                TrackSegment::Straight { length: 200.0 },
            ],
            0.5,
        )
        .unwrap();
        let kmax = p.kappa().iter().cloned().fold(f64::MIN, f64::max);
        assert!((kmax - 1.0 / 30.0).abs() < 1e-12);
        // No jump larger than one ramp step anywhere.
        let max_jump = p
            .kappa()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        assert!(max_jump < (1.0 / 30.0) / 50.0 * 0.5 * 1.01, "{max_jump}");
    }

    #[test]
    fn zero_length_segment_rejected() {
        let err = synth_track(
            &[
                TrackSegment::Straight { length: 10.0 },
                TrackSegment::Arc {
                    radius: 20.0,
                    length: 0.0,
                },
            ],
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, PathError::BadSegment { index: 1, .. }));
    }

    #[test]
    fn random_track_deterministic() {
        let a = random_track(5, 2000.0, 500, 42).unwrap();
        let b = random_track(5, 2000.0, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = random_track(5, 2000.0, 500, 43).unwrap();
        assert_ne!(a, c);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn resample_span_and_endpoint_kappa(n in 2usize..400, seed in 0u64..500) {
                let p = random_track(3, 1200.0, 257, seed).unwrap();
                let q = p.resample(n);
                prop_assert_eq!(q.len(), n);
                prop_assert_eq!(q.total_length(), p.total_length());
                prop_assert!((q.kappa()[0] - p.kappa()[0]).abs() < 1e-12);
                prop_assert!(
                    (q.kappa()[n - 1] - p.kappa()[p.len() - 1]).abs() < 1e-12
                );
            }
        }
    }
}
