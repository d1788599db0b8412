//! Acceleration envelopes (g-g-v diagrams) and the signed distance of an
//! acceleration state from the envelope boundary.
//!
//! An envelope is described by four bound functions: lateral limits that
//! depend on speed, and longitudinal limits that depend on lateral
//! acceleration and speed. Three representations are supported:
//!
//! * `box` — speed-independent rectangle, the classic conservative choice;
//! * `analytic` — a speed-scaled superellipse with optional traction and
//!   braking caps that flatten (and can dent, giving a non-convex shape)
//!   the longitudinal extremes, plus an optional drag term;
//! * `spline_grid` — tabulated longitudinal bounds over a rectangular
//!   (speed, normalized lateral) grid, queried by bilinear interpolation.
//!
//! The signed distance is negative strictly inside the envelope, zero on the
//! boundary, positive outside, and never below -1.

use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width below which a bound range counts as collapsed.
const DEGENERATE_WIDTH: f64 = 0.0;
/// A query exactly on a collapsed bound (within this tolerance) is "on the
/// boundary"; anything else gets the large sentinel.
const DEGENERATE_EQ_TOL: f64 = 1e-12;
/// Sentinel returned for points off a collapsed range. Large enough to act
/// as +infinity for the planner, small enough to stay comparable.
const DEGENERATE_SENTINEL: f64 = 1e9;

/// An acceleration state: longitudinal, lateral, and the speed it occurs at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelPoint {
    /// Longitudinal acceleration (m/s^2).
    pub a_x: f64,
    /// Lateral acceleration (m/s^2).
    pub a_y: f64,
    /// Speed (m/s), non-negative.
    pub v_x: f64,
}

impl AccelPoint {
    pub fn new(a_x: f64, a_y: f64, v_x: f64) -> Self {
        debug_assert!(v_x >= 0.0, "speed must be non-negative");
        AccelPoint { a_x, a_y, v_x }
    }
}

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("failed to read envelope file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse envelope JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{axis} breakpoints not strictly increasing at index {index}")]
    NonMonotoneBreaks { axis: &'static str, index: usize },
    #[error("envelope field {field} is not finite")]
    NonFinite { field: String },
    #[error("{0}")]
    InvalidBound(String),
    #[error("{0}")]
    InvalidParam(String),
}

/// Affine map of `[x_lo, x_hi]` onto `[-1, +1]`, extending beyond.
///
/// A collapsed range returns 0 for a query on the collapsed bound and a
/// large positive sentinel otherwise, preserving the sign contract without
/// dividing by zero.
pub fn phi(x: f64, x_lo: f64, x_hi: f64) -> f64 {
    let width = x_hi - x_lo;
    if width <= DEGENERATE_WIDTH {
        if (x - x_lo).abs() <= DEGENERATE_EQ_TOL {
            return 0.0;
        }
        return DEGENERATE_SENTINEL;
    }
    2.0 * (x - x_lo) / width - 1.0
}

/// Downward-pointing pyramid over the unit square: -1 at the center, 0 on
/// the square's boundary, positive outside.
pub fn lambda_pyramid(x: f64, y: f64) -> f64 {
    (x - 1.0).max(-1.0 - x).max(y - 1.0).max(-1.0 - y)
}

/// Optional cap on a longitudinal bound of the analytic envelope, varying
/// with normalized lateral usage. `at_zero < at_full_lat` reproduces the
/// wheel-lift flattening of motorcycle envelopes and makes the shape
/// non-convex.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudinalCap {
    /// Cap value at zero lateral acceleration (m/s^2, magnitude).
    pub at_zero: f64,
    /// Cap value when the lateral bound is fully used (m/s^2, magnitude).
    pub at_full_lat: f64,
    /// Shape exponent of the blend in normalized lateral usage.
    #[serde(default = "default_cap_exponent")]
    pub exponent: f64,
}

fn default_cap_exponent() -> f64 {
    2.0
}

impl LongitudinalCap {
    fn eval(&self, lat_usage: f64) -> f64 {
        self.at_zero + (self.at_full_lat - self.at_zero) * lat_usage.powf(self.exponent)
    }
}

/// Speed-independent rectangular envelope.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxEnvelope {
    pub v_max: f64,
    pub ax_min: f64,
    pub ax_max: f64,
    pub ay_min: f64,
    pub ay_max: f64,
}

/// Speed-scaled superellipse with optional asymmetric caps and drag.
///
/// Lateral bound: `ay_max * (1 - lat_droop * (v/v_max)^2)`, symmetric.
/// Longitudinal bounds at normalized lateral usage `r = |a_y| / lat bound`:
///
/// ```text
/// shape(r) = (1 - r^exponent)^(1/exponent)
/// upper    = min(ax_acc   * shape(r), acc_cap(r))   - drag * v^2
/// lower    = -min(ax_brake * shape(r), brake_cap(r)) - drag * v^2
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticEnvelope {
    pub v_max: f64,
    /// Pure-lateral limit at standstill (m/s^2).
    pub ay_max: f64,
    /// Traction semi-axis of the superellipse (m/s^2).
    pub ax_acc: f64,
    /// Braking semi-axis of the superellipse (m/s^2, magnitude).
    pub ax_brake: f64,
    /// Superellipse order; 1 gives a diamond, 2 an ellipse.
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    /// Fractional reduction of the lateral bound at top speed, in [0, 1).
    #[serde(default)]
    pub lat_droop: f64,
    /// Aerodynamic drag coefficient (1/m): drag * v^2 shifts both
    /// longitudinal bounds downward.
    #[serde(default)]
    pub drag: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc_cap: Option<LongitudinalCap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brake_cap: Option<LongitudinalCap>,
}

fn default_exponent() -> f64 {
    2.0
}

/// Tabulated envelope over a rectangular (speed, normalized lateral) grid.
///
/// The lateral axis is stored normalized to [-1, 1] per speed slice, as the
/// fraction of `[ay_min(v), ay_max(v)]`; this keeps the grid rectangular
/// while the physical lateral limits vary with speed. Tables are row-major:
/// `ax_min[i][j]` belongs to `v_breaks[i]` and `ay_norm_breaks[j]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineGridEnvelope {
    pub v_max: f64,
    pub v_breaks: Vec<f64>,
    pub ay_norm_breaks: Vec<f64>,
    pub ax_min: Vec<Vec<f64>>,
    pub ax_max: Vec<Vec<f64>>,
    /// Physical lateral lower bound per speed breakpoint (m/s^2).
    pub ay_min: Vec<f64>,
    /// Physical lateral upper bound per speed breakpoint (m/s^2).
    pub ay_max: Vec<f64>,
}

/// A g-g-v acceleration envelope in one of three representations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GgvEnvelope {
    Box(BoxEnvelope),
    Analytic(AnalyticEnvelope),
    SplineGrid(SplineGridEnvelope),
}

impl fmt::Display for GgvEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GgvEnvelope::Box(_) => write!(f, "box"),
            GgvEnvelope::Analytic(_) => write!(f, "analytic"),
            GgvEnvelope::SplineGrid(_) => write!(f, "spline_grid"),
        }
    }
}

impl GgvEnvelope {
    /// Parses and validates an envelope from JSON text.
    pub fn from_json(text: &str) -> Result<Self, EnvelopeError> {
        let env: GgvEnvelope = serde_json::from_str(text)?;
        env.validate()?;
        Ok(env)
    }

    /// Loads and validates an envelope definition file.
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, EnvelopeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serialization cannot fail")
    }

    pub fn v_max(&self) -> f64 {
        match self {
            GgvEnvelope::Box(b) => b.v_max,
            GgvEnvelope::Analytic(a) => a.v_max,
            GgvEnvelope::SplineGrid(g) => g.v_max,
        }
    }

    /// Lateral acceleration bounds at speed `v`. Speeds outside `[0, v_max]`
    /// clamp; the result always satisfies `lo < hi`.
    pub fn lateral_bounds(&self, v: f64) -> (f64, f64) {
        let vc = v.clamp(0.0, self.v_max());
        match self {
            GgvEnvelope::Box(b) => (b.ay_min, b.ay_max),
            GgvEnvelope::Analytic(a) => {
                let m = a.ay_max * a.lat_scale(vc);
                (-m, m)
            }
            GgvEnvelope::SplineGrid(g) => {
                let lo = interp1_clamped(&g.v_breaks, &g.ay_min, vc);
                let hi = interp1_clamped(&g.v_breaks, &g.ay_max, vc);
                (lo, hi)
            }
        }
    }

    /// Longitudinal acceleration bounds at lateral acceleration `ay_clip`
    /// (already within the lateral bounds) and speed `v`.
    pub fn longitudinal_bounds(&self, ay_clip: f64, v: f64) -> (f64, f64) {
        let vc = v.clamp(0.0, self.v_max());
        match self {
            GgvEnvelope::Box(b) => (b.ax_min, b.ax_max),
            GgvEnvelope::Analytic(a) => a.longitudinal_bounds(ay_clip, vc),
            GgvEnvelope::SplineGrid(g) => g.longitudinal_bounds(ay_clip, vc),
        }
    }

    /// Signed distance of an acceleration state from the envelope boundary:
    /// negative inside, zero on the boundary, positive outside, never below
    /// -1. Clips the lateral component, fetches the longitudinal bounds at
    /// the clipped value, and combines both normalized coordinates through
    /// the pyramid function.
    pub fn signed_distance(&self, p: AccelPoint) -> f64 {
        let (ay_lo, ay_hi) = self.lateral_bounds(p.v_x);
        let ay_clip = p.a_y.clamp(ay_lo, ay_hi);
        let (ax_lo, ax_hi) = self.longitudinal_bounds(ay_clip, p.v_x);
        lambda_pyramid(phi(p.a_x, ax_lo, ax_hi), phi(p.a_y, ay_lo, ay_hi))
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if !self.v_max().is_finite() || self.v_max() <= 0.0 {
            return Err(EnvelopeError::InvalidParam(format!(
                "v_max must be finite and positive, got {}",
                self.v_max()
            )));
        }
        match self {
            GgvEnvelope::Box(b) => b.validate(),
            GgvEnvelope::Analytic(a) => a.validate(),
            GgvEnvelope::SplineGrid(g) => g.validate(),
        }
    }
}

impl BoxEnvelope {
    fn validate(&self) -> Result<(), EnvelopeError> {
        for (name, v) in [
            ("ax_min", self.ax_min),
            ("ax_max", self.ax_max),
            ("ay_min", self.ay_min),
            ("ay_max", self.ay_max),
        ] {
            if !v.is_finite() {
                return Err(EnvelopeError::NonFinite { field: name.into() });
            }
        }
        if self.ay_min >= self.ay_max {
            return Err(EnvelopeError::InvalidBound(format!(
                "ay_min ({}) must be below ay_max ({})",
                self.ay_min, self.ay_max
            )));
        }
        if self.ax_min > self.ax_max {
            return Err(EnvelopeError::InvalidBound(format!(
                "ax_min ({}) must not exceed ax_max ({})",
                self.ax_min, self.ax_max
            )));
        }
        Ok(())
    }
}

impl AnalyticEnvelope {
    fn lat_scale(&self, vc: f64) -> f64 {
        1.0 - self.lat_droop * (vc / self.v_max).powi(2)
    }

    fn longitudinal_bounds(&self, ay_clip: f64, vc: f64) -> (f64, f64) {
        let lat_limit = self.ay_max * self.lat_scale(vc);
        let r = (ay_clip.abs() / lat_limit).min(1.0);
        let shape = (1.0 - r.powf(self.exponent)).max(0.0).powf(1.0 / self.exponent);
        let mut acc = self.ax_acc * shape;
        if let Some(cap) = &self.acc_cap {
            acc = acc.min(cap.eval(r));
        }
        let mut brake = self.ax_brake * shape;
        if let Some(cap) = &self.brake_cap {
            brake = brake.min(cap.eval(r));
        }
        let drag_shift = self.drag * vc * vc;
        (-brake - drag_shift, acc - drag_shift)
    }

    fn validate(&self) -> Result<(), EnvelopeError> {
        for (name, v) in [
            ("ay_max", self.ay_max),
            ("ax_acc", self.ax_acc),
            ("ax_brake", self.ax_brake),
            ("exponent", self.exponent),
            ("lat_droop", self.lat_droop),
            ("drag", self.drag),
        ] {
            if !v.is_finite() {
                return Err(EnvelopeError::NonFinite { field: name.into() });
            }
        }
        if self.ay_max <= 0.0 || self.ax_acc <= 0.0 || self.ax_brake <= 0.0 {
            return Err(EnvelopeError::InvalidParam(
                "ay_max, ax_acc and ax_brake must be positive".into(),
            ));
        }
        if self.exponent < 1.0 {
            return Err(EnvelopeError::InvalidParam(format!(
                "exponent must be >= 1, got {}",
                self.exponent
            )));
        }
        if !(0.0..1.0).contains(&self.lat_droop) {
            return Err(EnvelopeError::InvalidParam(format!(
                "lat_droop must lie in [0, 1), got {}",
                self.lat_droop
            )));
        }
        if self.drag < 0.0 {
            return Err(EnvelopeError::InvalidParam("drag must be >= 0".into()));
        }
        for (name, cap) in [("acc_cap", &self.acc_cap), ("brake_cap", &self.brake_cap)] {
            if let Some(c) = cap {
                if !c.at_zero.is_finite() || !c.at_full_lat.is_finite() || !c.exponent.is_finite()
                {
                    return Err(EnvelopeError::NonFinite { field: name.into() });
                }
                if c.at_zero < 0.0 || c.at_full_lat < 0.0 || c.exponent < 0.0 {
                    return Err(EnvelopeError::InvalidParam(format!(
                        "{name} values and exponent must be >= 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl SplineGridEnvelope {
    fn longitudinal_bounds(&self, ay_clip: f64, vc: f64) -> (f64, f64) {
        let (ay_lo, ay_hi) = (
            interp1_clamped(&self.v_breaks, &self.ay_min, vc),
            interp1_clamped(&self.v_breaks, &self.ay_max, vc),
        );
        // Normalize the physical lateral value into the grid's [-1, 1] axis.
        let eta = phi(ay_clip, ay_lo, ay_hi).clamp(
            self.ay_norm_breaks[0],
            self.ay_norm_breaks[self.ay_norm_breaks.len() - 1],
        );
        let (iv, tv) = cell(&self.v_breaks, vc);
        let (ja, ta) = cell(&self.ay_norm_breaks, eta);
        (
            bilinear(&self.ax_min, iv, ja, tv, ta),
            bilinear(&self.ax_max, iv, ja, tv, ta),
        )
    }

    fn validate(&self) -> Result<(), EnvelopeError> {
        check_breaks("v", &self.v_breaks)?;
        check_breaks("ay_norm", &self.ay_norm_breaks)?;
        let nv = self.v_breaks.len();
        let na = self.ay_norm_breaks.len();
        if self.ay_min.len() != nv || self.ay_max.len() != nv {
            return Err(EnvelopeError::InvalidParam(format!(
                "ay_min/ay_max must have one entry per v break ({nv}), got {}/{}",
                self.ay_min.len(),
                self.ay_max.len()
            )));
        }
        for i in 0..nv {
            if !self.ay_min[i].is_finite() || !self.ay_max[i].is_finite() {
                return Err(EnvelopeError::NonFinite {
                    field: format!("ay_min/ay_max[{i}]"),
                });
            }
            if self.ay_min[i] >= self.ay_max[i] {
                return Err(EnvelopeError::InvalidBound(format!(
                    "ay_min[{i}] ({}) must be below ay_max[{i}] ({})",
                    self.ay_min[i], self.ay_max[i]
                )));
            }
        }
        for (name, table) in [("ax_min", &self.ax_min), ("ax_max", &self.ax_max)] {
            if table.len() != nv {
                return Err(EnvelopeError::InvalidParam(format!(
                    "{name} must have {nv} rows, got {}",
                    table.len()
                )));
            }
            for (i, row) in table.iter().enumerate() {
                if row.len() != na {
                    return Err(EnvelopeError::InvalidParam(format!(
                        "{name} row {i} must have {na} columns, got {}",
                        row.len()
                    )));
                }
                for (j, v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(EnvelopeError::NonFinite {
                            field: format!("{name}[{i}][{j}]"),
                        });
                    }
                }
            }
        }
        for i in 0..nv {
            for j in 0..na {
                if self.ax_min[i][j] > self.ax_max[i][j] {
                    return Err(EnvelopeError::InvalidBound(format!(
                        "ax_min[{i}][{j}] ({}) exceeds ax_max[{i}][{j}] ({})",
                        self.ax_min[i][j], self.ax_max[i][j]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_breaks(axis: &'static str, breaks: &[f64]) -> Result<(), EnvelopeError> {
    if breaks.len() < 2 {
        return Err(EnvelopeError::InvalidParam(format!(
            "{axis} breakpoints need at least 2 entries, got {}",
            breaks.len()
        )));
    }
    for (i, w) in breaks.windows(2).enumerate() {
        if !w[0].is_finite() || !w[1].is_finite() {
            return Err(EnvelopeError::NonFinite {
                field: format!("{axis} breakpoint {i}"),
            });
        }
        if w[1] <= w[0] {
            return Err(EnvelopeError::NonMonotoneBreaks {
                axis,
                index: i + 1,
            });
        }
    }
    Ok(())
}

/// Locates the cell of `x` in strictly increasing `breaks` and returns the
/// cell index with the normalized coordinate inside it. Out-of-range queries
/// clamp to the first or last cell edge.
fn cell(breaks: &[f64], x: f64) -> (usize, f64) {
    let n = breaks.len();
    let xc = x.clamp(breaks[0], breaks[n - 1]);
    let idx = breaks.partition_point(|&b| b <= xc).min(n - 1);
    let i = idx.saturating_sub(1);
    let t = (xc - breaks[i]) / (breaks[i + 1] - breaks[i]);
    (i, t)
}

fn interp1_clamped(breaks: &[f64], values: &[f64], x: f64) -> f64 {
    let (i, t) = cell(breaks, x);
    values[i] * (1.0 - t) + values[i + 1] * t
}

fn bilinear(table: &[Vec<f64>], i: usize, j: usize, ti: f64, tj: f64) -> f64 {
    let row0 = table[i][j] * (1.0 - tj) + table[i][j + 1] * tj;
    let row1 = table[i + 1][j] * (1.0 - tj) + table[i + 1][j + 1] * tj;
    row0 * (1.0 - ti) + row1 * ti
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_box(ax: f64, ay: f64, v_max: f64) -> GgvEnvelope {
        GgvEnvelope::Box(BoxEnvelope {
            v_max,
            ax_min: -ax,
            ax_max: ax,
            ay_min: -ay,
            ay_max: ay,
        })
    }

    fn grid_two_speeds() -> GgvEnvelope {
        // Lateral limit 8 at v=0 widening to 12 at v=50; box-like ax tables.
        GgvEnvelope::SplineGrid(SplineGridEnvelope {
            v_max: 50.0,
            v_breaks: vec![0.0, 50.0],
            ay_norm_breaks: vec![-1.0, 0.0, 1.0],
            ax_min: vec![vec![-9.0, -9.0, -9.0], vec![-7.0, -7.0, -7.0]],
            ax_max: vec![vec![4.0, 6.0, 4.0], vec![2.0, 3.0, 2.0]],
            ay_min: vec![-8.0, -12.0],
            ay_max: vec![8.0, 12.0],
        })
    }

    #[test]
    fn phi_endpoints_exact() {
        assert_eq!(phi(-3.0, -3.0, 7.0), -1.0);
        assert_eq!(phi(7.0, -3.0, 7.0), 1.0);
        assert_eq!(phi(2.0, -3.0, 7.0), 0.0);
    }

    #[test]
    fn phi_outside_range() {
        assert_eq!(phi(3.0, -1.0, 1.0), 3.0);
        assert_eq!(phi(20.0, -10.0, 10.0), 2.0);
    }

    #[test]
    fn phi_collapsed_range() {
        assert_eq!(phi(5.0, 5.0, 5.0), 0.0);
        assert_eq!(phi(5.0 + 1e-13, 5.0, 5.0), 0.0);
        assert_eq!(phi(5.1, 5.0, 5.0), DEGENERATE_SENTINEL);
        assert_eq!(phi(4.0, 5.0, 5.0), DEGENERATE_SENTINEL);
    }

    #[test]
    fn pyramid_values() {
        assert_eq!(lambda_pyramid(0.0, 0.0), -1.0);
        assert_eq!(lambda_pyramid(1.0, 0.0), 0.0);
        assert_eq!(lambda_pyramid(3.0, 0.0), 2.0);
        assert_eq!(lambda_pyramid(0.0, -1.0), 0.0);
    }

    #[test]
    fn box_lateral_bounds_speed_independent() {
        let env = sym_box(5.0, 9.81, 100.0);
        assert_eq!(env.lateral_bounds(20.0), (-9.81, 9.81));
        assert_eq!(env.lateral_bounds(0.0), (-9.81, 9.81));
    }

    #[test]
    fn speed_clamps_at_v_max() {
        for env in [
            sym_box(5.0, 9.81, 40.0),
            analytic_plain(),
            grid_two_speeds(),
        ] {
            let vm = env.v_max();
            assert_eq!(env.lateral_bounds(vm), env.lateral_bounds(vm + 5.0));
            assert_eq!(
                env.longitudinal_bounds(0.0, vm),
                env.longitudinal_bounds(0.0, vm + 5.0)
            );
        }
    }

    #[test]
    fn grid_lateral_interpolates() {
        let env = grid_two_speeds();
        let (lo, hi) = env.lateral_bounds(25.0);
        assert!((hi - 10.0).abs() < 1e-12);
        assert!((lo + 10.0).abs() < 1e-12);
    }

    #[test]
    fn box_longitudinal_constant() {
        let env = GgvEnvelope::Box(BoxEnvelope {
            v_max: 100.0,
            ax_min: -8.0,
            ax_max: 5.0,
            ay_min: -10.0,
            ay_max: 10.0,
        });
        assert_eq!(env.longitudinal_bounds(3.0, 12.0), (-8.0, 5.0));
        assert_eq!(env.longitudinal_bounds(-9.9, 90.0), (-8.0, 5.0));
    }

    #[test]
    fn diamond_traction_vanishes_at_lateral_limit() {
        // Diamond: exponent 1, ax upper bound 5*(1 - |a_y|/10).
        let env = GgvEnvelope::Analytic(AnalyticEnvelope {
            v_max: 100.0,
            ay_max: 10.0,
            ax_acc: 5.0,
            ax_brake: 5.0,
            exponent: 1.0,
            lat_droop: 0.0,
            drag: 0.0,
            acc_cap: None,
            brake_cap: None,
        });
        let (_, hi) = env.longitudinal_bounds(10.0, 20.0);
        assert!(hi.abs() < 1e-12);
        let (_, hi_mid) = env.longitudinal_bounds(5.0, 20.0);
        assert!((hi_mid - 2.5).abs() < 1e-12);
    }

    #[test]
    fn grid_exact_at_knots() {
        let env = grid_two_speeds();
        // Knot (v=0, eta=0 i.e. a_y=0): stored ax_max 6, ax_min -9.
        let (lo, hi) = env.longitudinal_bounds(0.0, 0.0);
        assert_eq!(lo, -9.0);
        assert_eq!(hi, 6.0);
        // Knot (v=50, eta=1 i.e. a_y=12): stored ax_max 2, ax_min -7.
        let (lo, hi) = env.longitudinal_bounds(12.0, 50.0);
        assert_eq!(lo, -7.0);
        assert_eq!(hi, 2.0);
    }

    #[test]
    fn grid_continuous_across_cells() {
        let env = grid_two_speeds();
        let eps = 1e-9;
        // Crossing the eta=0 edge and the v=0/50 clamp edges from both sides.
        for v in [10.0, 30.0, 49.999] {
            let (lo_a, hi_a) = env.longitudinal_bounds(-eps, v);
            let (lo_b, hi_b) = env.longitudinal_bounds(eps, v);
            assert!((lo_a - lo_b).abs() <= 1e-9);
            assert!((hi_a - hi_b).abs() <= 1e-9);
        }
    }

    fn analytic_plain() -> GgvEnvelope {
        GgvEnvelope::Analytic(AnalyticEnvelope {
            v_max: 80.0,
            ay_max: 10.0,
            ax_acc: 6.0,
            ax_brake: 9.0,
            exponent: 2.0,
            lat_droop: 0.2,
            drag: 0.0005,
            acc_cap: None,
            brake_cap: None,
        })
    }

    fn analytic_nonconvex() -> GgvEnvelope {
        GgvEnvelope::Analytic(AnalyticEnvelope {
            v_max: 80.0,
            ay_max: 11.0,
            ax_acc: 8.0,
            ax_brake: 12.0,
            exponent: 2.0,
            lat_droop: 0.0,
            drag: 0.0,
            acc_cap: Some(LongitudinalCap {
                at_zero: 4.0,
                at_full_lat: 8.0,
                exponent: 2.0,
            }),
            brake_cap: Some(LongitudinalCap {
                at_zero: 8.0,
                at_full_lat: 12.0,
                exponent: 2.0,
            }),
        })
    }

    #[test]
    fn signed_distance_center_boundary_outside() {
        let env = sym_box(5.0, 10.0, 100.0);
        let v = 17.0;
        assert_eq!(env.signed_distance(AccelPoint::new(0.0, 0.0, v)), -1.0);
        assert_eq!(env.signed_distance(AccelPoint::new(5.0, 0.0, v)), 0.0);
        assert_eq!(env.signed_distance(AccelPoint::new(0.0, 20.0, v)), 1.0);
    }

    #[test]
    fn signed_distance_box_speed_invariant() {
        let env = sym_box(5.0, 10.0, 100.0);
        let d0 = env.signed_distance(AccelPoint::new(2.0, -4.0, 0.0));
        for v in [1.0, 13.0, 55.0, 100.0, 250.0] {
            assert_eq!(env.signed_distance(AccelPoint::new(2.0, -4.0, v)), d0);
        }
    }

    #[test]
    fn signed_distance_zero_on_constructed_boundary() {
        for env in [sym_box(5.0, 10.0, 80.0), analytic_plain(), analytic_nonconvex()] {
            for v in [0.0, 12.0, 35.0, 79.0] {
                let (ay_lo, ay_hi) = env.lateral_bounds(v);
                // Interior lateral value, longitudinal exactly on the bound.
                let ay = 0.3 * ay_lo + 0.7 * ay_hi;
                let (ax_lo, ax_hi) = env.longitudinal_bounds(ay, v);
                if ax_hi - ax_lo > 1e-9 {
                    let d = env.signed_distance(AccelPoint::new(ax_hi, ay, v));
                    assert!(d.abs() <= 1e-12, "d={d} at v={v} env={env}");
                    let d = env.signed_distance(AccelPoint::new(ax_lo, ay, v));
                    assert!(d.abs() <= 1e-12, "d={d} at v={v} env={env}");
                }
            }
        }
    }

    #[test]
    fn nonconvex_cap_dents_traction_at_zero_lateral() {
        let env = analytic_nonconvex();
        let (_, hi_center) = env.longitudinal_bounds(0.0, 10.0);
        let (_, hi_leaned) = env.longitudinal_bounds(6.0, 10.0);
        // Wheel-lift cap binds at zero lateral; leaned over, more traction.
        assert!((hi_center - 4.0).abs() < 1e-12);
        assert!(hi_leaned > hi_center);
    }

    #[test]
    fn validation_rejects_malformed() {
        let bad_breaks = r#"{"type":"spline_grid","v_max":50,"v_breaks":[0,10,5],
            "ay_norm_breaks":[-1,1],"ax_min":[[-1,-1],[-1,-1],[-1,-1]],
            "ax_max":[[1,1],[1,1],[1,1]],"ay_min":[-5,-5,-5],"ay_max":[5,5,5]}"#;
        let err = GgvEnvelope::from_json(bad_breaks).unwrap_err();
        assert!(
            matches!(err, EnvelopeError::NonMonotoneBreaks { axis: "v", index: 2 }),
            "{err}"
        );

        let crossed = r#"{"type":"box","v_max":50,"ax_min":3,"ax_max":-3,"ay_min":-5,"ay_max":5}"#;
        assert!(GgvEnvelope::from_json(crossed).is_err());

        let ax_crossed = r#"{"type":"spline_grid","v_max":50,"v_breaks":[0,10],
            "ay_norm_breaks":[-1,1],"ax_min":[[-1,-1],[-1,2]],
            "ax_max":[[1,1],[1,1]],"ay_min":[-5,-5],"ay_max":[5,5]}"#;
        let err = GgvEnvelope::from_json(ax_crossed).unwrap_err();
        assert!(err.to_string().contains("[1][1]"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let env = analytic_nonconvex();
        let back = GgvEnvelope::from_json(&env.to_json()).unwrap();
        let p = AccelPoint::new(2.0, 5.0, 30.0);
        assert_eq!(env.signed_distance(p), back.signed_distance(p));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn envelopes() -> Vec<GgvEnvelope> {
            vec![
                sym_box(5.0, 10.0, 80.0),
                analytic_plain(),
                analytic_nonconvex(),
                grid_two_speeds(),
            ]
        }

        proptest! {
            // Sign of the distance agrees with a direct check of the bound
            // inequalities, and -1 is a hard floor.
            #[test]
            fn sign_matches_direct_bound_check(
                ax in -30.0f64..30.0,
                ay in -30.0f64..30.0,
                v in 0.0f64..90.0,
                which in 0usize..4,
            ) {
                let env = &envelopes()[which];
                let d = env.signed_distance(AccelPoint::new(ax, ay, v));
                prop_assert!(d >= -1.0 - 1e-12);

                let (ay_lo, ay_hi) = env.lateral_bounds(v);
                let ay_clip = ay.clamp(ay_lo, ay_hi);
                let (ax_lo, ax_hi) = env.longitudinal_bounds(ay_clip, v);
                let margin = 1e-9;
                let inside = ay > ay_lo + margin && ay < ay_hi - margin
                    && ax > ax_lo + margin && ax < ax_hi - margin;
                let outside = ay < ay_lo - margin || ay > ay_hi + margin
                    || ax < ax_lo - margin || ax > ax_hi + margin;
                if inside {
                    prop_assert!(d <= 0.0, "inside point must have d <= 0, got {d}");
                }
                if outside {
                    prop_assert!(d > 0.0, "outside point must have d > 0, got {d}");
                }
            }

            // phi is affine with exact values at the range ends.
            #[test]
            fn phi_affine(lo in -50.0f64..50.0, w in 1e-6f64..100.0, t in 0.0f64..1.0) {
                let hi = lo + w;
                prop_assert_eq!(phi(lo, lo, hi), -1.0);
                prop_assert_eq!(phi(hi, lo, hi), 1.0);
                let x = lo + t * w;
                let expect = 2.0 * t - 1.0;
                prop_assert!((phi(x, lo, hi) - expect).abs() <= 1e-9);
            }
        }
    }
}
