//! Forward-backward computation of time-optimal velocity profiles.
//!
//! Three passes over the discretized path:
//!
//! 1. a lateral-saturation pass ([`vel_sat`]) capping each node's speed so
//!    the lateral acceleration stays within its bounds;
//! 2. a forward pass ([`forward`]) applying, per segment, the largest
//!    longitudinal acceleration whose end state stays inside the envelope;
//! 3. a backward pass ([`backward`]) repairing segments that need braking,
//!    sweeping from the end of the path.
//!
//! Acceleration is piecewise constant per segment, so speeds obey
//! `v1^2 = v0^2 + 2*L*a` exactly and segment times have a closed form.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::envelope::{AccelPoint, GgvEnvelope};
use crate::path::Path;
use crate::rootfind::{solve, SolverConfig};

/// Relative tolerance for accepting the forward solution unchanged in the
/// backward pass. The forward pass computed the same square-root expression,
/// so anything beyond rounding noise means the segment was edited.
const FORWARD_VALID_REL_TOL: f64 = 1e-9;

/// Scale factor of the small-acceleration switch in [`segment_time`].
const TIME_SERIES_EPS: f64 = 1e-8;

/// Probes used to isolate the crossing adjacent to the preferred bracket
/// end. The distance function can be exactly zero at a bracket end (a state
/// on the longitudinal bound with the lateral state inside, as in box
/// envelopes), so a plain bracketed solve may return the wrong-side root.
const CROSSING_PROBES: usize = 16;

/// Finds a zero of `g` on `[lo, hi]`, preferring the crossing nearest `hi`
/// when `largest` (otherwise nearest `lo`). Probes from the preferred end
/// for a strictly negative value and solves on that sub-bracket; falls back
/// to the full bracket when no interior dip is found.
fn directed_crossing(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    largest: bool,
    cfg: &SolverConfig,
) -> Option<f64> {
    let width = hi - lo;
    if width <= cfg.x_tol {
        return solve(&g, lo, hi, cfg);
    }
    for k in 1..=CROSSING_PROBES {
        let t = k as f64 / CROSSING_PROBES as f64;
        let x = if largest {
            hi - width * t
        } else {
            lo + width * t
        };
        let fx = g(x);
        if fx.is_finite() && fx < 0.0 {
            return if largest {
                solve(&g, x, hi, cfg)
            } else {
                solve(&g, lo, x, cfg)
            };
        }
    }
    solve(&g, lo, hi, cfg)
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("initial speed must be finite and non-negative, got {0}")]
    BadBoundary(f64),
    #[error("segment unreachable (v0={v0}, a={a}, len={len}): negative discriminant")]
    UnreachableSegment { v0: f64, a: f64, len: f64 },
    #[error("profile stalls (zero speed, no drive) over a segment of length {len}")]
    StalledSegment { len: f64 },
}

/// Boundary conditions of the planning problem: only the entry speed is
/// prescribed; the exit speed is free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    /// Speed at the first path node (m/s).
    pub v_ini: f64,
}

/// How the backward pass left each segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRepair {
    /// Forward solution kept unchanged.
    ForwardValid,
    /// Replaced by the average acceleration joining the two node speeds.
    AvgRepaired,
    /// Braking applied: bound value or root-found boundary acceleration.
    BackwardSolved,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Per-segment outcome of the backward pass (length N-1).
    pub segments: Vec<SegmentRepair>,
    /// Segments where even full braking could not be certified inside the
    /// envelope; the braking bound was applied and flagged.
    pub brake_clamped: Vec<usize>,
    /// The requested entry speed could not be honored.
    pub infeasible_start: bool,
    /// Entry speed the profile actually supports, when it differs from the
    /// requested one.
    pub required_v_ini: Option<f64>,
    /// Total root-finder invocations across all passes.
    pub solve_calls: usize,
}

impl Diagnostics {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.infeasible_start {
            match self.required_v_ini {
                Some(v) => out.push(format!(
                    "requested entry speed is infeasible; profile supports v_ini = {v:.6} m/s"
                )),
                None => out.push("requested entry speed is infeasible".into()),
            }
        }
        if !self.brake_clamped.is_empty() {
            out.push(format!(
                "braking bound exceeded the envelope on {} segment(s) (first at index {})",
                self.brake_clamped.len(),
                self.brake_clamped[0]
            ));
        }
        out
    }
}

/// A planned velocity profile.
#[derive(Debug, Clone)]
pub struct PlanResult {
    /// Node speeds (m/s), length N.
    pub v_x: Vec<f64>,
    /// Longitudinal acceleration of each segment (m/s^2), length N-1.
    pub a_x: Vec<f64>,
    /// Lateral acceleration at each node, `kappa * v^2` (m/s^2), length N.
    pub a_y: Vec<f64>,
    /// Maneuver time (s).
    pub time: f64,
    pub diagnostics: Diagnostics,
}

/// Maximum speed per node under the lateral acceleration bounds: the zero of
/// `kappa * v^2 - lateral_bound(v)` on `[0, v_max]`, picking the bound that
/// matches the turn direction; `v_max` where no zero exists (straights and
/// gentle curvature).
pub fn vel_sat(path: &Path, env: &GgvEnvelope, cfg: &SolverConfig) -> Vec<f64> {
    vel_sat_impl(path, env, cfg, &mut 0)
}

fn vel_sat_impl(path: &Path, env: &GgvEnvelope, cfg: &SolverConfig, calls: &mut usize) -> Vec<f64> {
    let v_max = env.v_max();
    path.kappa()
        .iter()
        .map(|&kappa| {
            let h = |v: f64| {
                let (lo, hi) = env.lateral_bounds(v);
                let bound = if kappa >= 0.0 { hi } else { lo };
                kappa * v * v - bound
            };
            *calls += 1;
            solve(h, 0.0, v_max, cfg).unwrap_or(v_max)
        })
        .collect()
}

/// Forward pass: per segment, the largest feasible acceleration. Entries of
/// the returned acceleration vector are `None` where no feasible value
/// exists (the node speed falls back to its saturation value); the backward
/// pass resolves those.
pub fn forward(
    path: &Path,
    env: &GgvEnvelope,
    v_ini: f64,
    v_sat: &[f64],
    cfg: &SolverConfig,
) -> (Vec<f64>, Vec<Option<f64>>) {
    forward_impl(path, env, v_ini, v_sat, cfg, &mut 0)
}

fn forward_impl(
    path: &Path,
    env: &GgvEnvelope,
    v_ini: f64,
    v_sat: &[f64],
    cfg: &SolverConfig,
    calls: &mut usize,
) -> (Vec<f64>, Vec<Option<f64>>) {
    let n = path.len();
    let s = path.s();
    let kap = path.kappa();
    let mut v_x = vec![0.0; n];
    let mut a_x: Vec<Option<f64>> = vec![None; n - 1];
    v_x[0] = v_ini;
    let mut v0 = v_ini;
    for i in 0..n - 1 {
        let kappa1 = kap[i + 1];
        let len = s[i + 1] - s[i];
        let (ay_lo, ay_hi) = env.lateral_bounds(v0);
        let ay_clip = (kap[i] * v0 * v0).clamp(ay_lo, ay_hi);
        let (ax_lo, ax_hi) = env.longitudinal_bounds(ay_clip, v0);
        // Distance of the segment END state from the envelope, as a function
        // of the (constant) segment acceleration.
        let g = |a: f64| {
            let v1_sq = 2.0 * len * a + v0 * v0;
            if v1_sq < 0.0 {
                return f64::NAN;
            }
            env.signed_distance(AccelPoint {
                a_x: a,
                a_y: kappa1 * v1_sq,
                v_x: v1_sq.sqrt(),
            })
        };
        let a = if g(ax_hi) <= 0.0 {
            Some(ax_hi)
        } else {
            *calls += 1;
            directed_crossing(g, ax_lo, ax_hi, true, cfg)
        };
        let v1 = match a {
            Some(acc) => {
                let reach = (2.0 * len * acc + v0 * v0).max(0.0).sqrt();
                reach.min(v_sat[i + 1])
            }
            None => v_sat[i + 1],
        };
        a_x[i] = a;
        v_x[i + 1] = v1;
        v0 = v1;
    }
    (v_x, a_x)
}

/// Result of the backward pass.
#[derive(Debug, Clone)]
pub struct BackwardOutcome {
    pub v_x: Vec<f64>,
    pub a_x: Vec<Option<f64>>,
    pub repairs: Vec<SegmentRepair>,
    /// Segments where braking had to be clamped to its bound without an
    /// envelope certificate.
    pub brake_clamped: Vec<usize>,
}

/// Backward pass: sweeps segments from the end, keeping valid forward
/// solutions, accepting the average acceleration where it joins the node
/// speeds inside the envelope, and otherwise braking to the envelope
/// boundary (editing the segment's start speed).
pub fn backward(
    path: &Path,
    env: &GgvEnvelope,
    v_sat: &[f64],
    v_x: Vec<f64>,
    a_x: Vec<Option<f64>>,
    cfg: &SolverConfig,
) -> BackwardOutcome {
    let _ = v_sat; // kept for signature parity with the forward pass
    backward_impl(path, env, v_x, a_x, cfg, &mut 0)
}

fn backward_impl(
    path: &Path,
    env: &GgvEnvelope,
    mut v_x: Vec<f64>,
    mut a_x: Vec<Option<f64>>,
    cfg: &SolverConfig,
    calls: &mut usize,
) -> BackwardOutcome {
    let n = path.len();
    let s = path.s();
    let kap = path.kappa();
    let mut repairs = vec![SegmentRepair::ForwardValid; n - 1];
    let mut brake_clamped = Vec::new();
    for i in (1..n).rev() {
        let j = i - 1; // segment between nodes j and i
        let kappa0 = kap[j];
        let v0 = v_x[j];
        let v1 = v_x[i];
        let len = s[i] - s[j];

        if let Some(a) = a_x[j] {
            let v1_fwd_sq = v0 * v0 + 2.0 * len * a;
            if v1_fwd_sq >= 0.0
                && (v1_fwd_sq.sqrt() - v1).abs() <= FORWARD_VALID_REL_TOL * v1.max(1.0)
            {
                continue;
            }
        }

        let (ay_lo, ay_hi) = env.lateral_bounds(v1);
        let ay_clip = (kap[i] * v1 * v1).clamp(ay_lo, ay_hi);
        let (ax_lo, ax_hi) = env.longitudinal_bounds(ay_clip, v1);
        let a_avg = (v1 * v1 - v0 * v0) / (2.0 * len);
        // Start speeds reachable from v1 within the bounds. A negative
        // radicand on the braking side means no start speed works (NaN fails
        // the comparison); on the drive side it means the bound never binds,
        // since any non-negative start speed reaches v1 with partial drive.
        let reach_max = (v1 * v1 - 2.0 * len * ax_lo).sqrt();
        let reach_min_sq = v1 * v1 - 2.0 * len * ax_hi;
        let reach_min = if reach_min_sq >= 0.0 {
            reach_min_sq.sqrt()
        } else {
            0.0
        };
        let valid_v0 = v0 <= reach_max && v0 >= reach_min;
        let valid_ax = a_avg <= ax_hi && a_avg >= ax_lo;
        // Distance of the segment START state from the envelope, as a
        // function of the segment acceleration.
        let g = |a: f64| {
            let v0_sq = v1 * v1 - 2.0 * len * a;
            if v0_sq < 0.0 {
                return f64::NAN;
            }
            env.signed_distance(AccelPoint {
                a_x: a,
                a_y: kappa0 * v0_sq,
                v_x: v0_sq.sqrt(),
            })
        };

        if valid_ax && valid_v0 && g(a_avg) <= 0.0 {
            a_x[j] = Some(a_avg);
            repairs[j] = SegmentRepair::AvgRepaired;
        } else {
            let a = if g(ax_lo) <= 0.0 {
                ax_lo
            } else {
                *calls += 1;
                match directed_crossing(&g, ax_lo, ax_hi, false, cfg) {
                    Some(root) => root,
                    None => {
                        // Strongest braking available; the envelope may be
                        // violated at the start point, surfaced as a
                        // diagnostic.
                        brake_clamped.push(j);
                        ax_lo
                    }
                }
            };
            v_x[j] = (v1 * v1 - 2.0 * len * a).max(0.0).sqrt();
            a_x[j] = Some(a);
            repairs[j] = SegmentRepair::BackwardSolved;
        }
    }
    BackwardOutcome {
        v_x,
        a_x,
        repairs,
        brake_clamped,
    }
}

/// Traversal time of one segment of length `len` starting at speed `v0`
/// under constant acceleration `a`. Switches to a series around `a = 0`
/// where the closed form degenerates.
pub fn segment_time(v0: f64, a: f64, len: f64) -> Result<f64, PlanError> {
    debug_assert!(len > 0.0);
    let disc = 2.0 * a * len + v0 * v0;
    if disc < -1e-9 * (v0 * v0).max(1.0) {
        return Err(PlanError::UnreachableSegment { v0, a, len });
    }
    if a.abs() < TIME_SERIES_EPS * (v0 * v0 / len).max(1.0) {
        if v0 <= 0.0 {
            return Err(PlanError::StalledSegment { len });
        }
        return Ok(len / v0 - a * len * len / (2.0 * v0.powi(3)));
    }
    Ok((-v0 + disc.max(0.0).sqrt()) / a)
}

/// Plans the time-optimal profile over `path` under `env`, starting at
/// `bc.v_ini`. An entry speed above the first node's saturation speed is
/// clipped (flagged in the diagnostics); if braking demands push the entry
/// speed below the requested value, the same flag is set and the supported
/// entry speed reported.
pub fn plan(
    path: &Path,
    env: &GgvEnvelope,
    bc: BoundaryConditions,
    cfg: &SolverConfig,
) -> Result<PlanResult, PlanError> {
    cfg.validate().map_err(PlanError::Config)?;
    if !bc.v_ini.is_finite() || bc.v_ini < 0.0 {
        return Err(PlanError::BadBoundary(bc.v_ini));
    }
    let mut calls = 0usize;
    let v_sat = vel_sat_impl(path, env, cfg, &mut calls);

    let mut infeasible_start = false;
    let mut v_ini = bc.v_ini;
    if v_ini > v_sat[0] {
        v_ini = v_sat[0];
        infeasible_start = true;
    }

    let (v_x, a_x) = forward_impl(path, env, v_ini, &v_sat, cfg, &mut calls);
    let out = backward_impl(path, env, v_x, a_x, cfg, &mut calls);
    let v_x = out.v_x;

    if v_x[0] < bc.v_ini - (1e-9 * bc.v_ini.max(1.0)) {
        infeasible_start = true;
    }
    let required_v_ini = infeasible_start.then_some(v_x[0]);

    let n = path.len();
    let mut a_x = Vec::with_capacity(n - 1);
    let mut time = 0.0;
    for i in 0..n - 1 {
        let len = path.segment_len(i);
        // Backward resolves every pending segment, but fall back to the
        // consistent average if an entry were ever left unset.
        let a = out.a_x[i]
            .unwrap_or_else(|| (v_x[i + 1] * v_x[i + 1] - v_x[i] * v_x[i]) / (2.0 * len));
        time += segment_time(v_x[i], a, len)?;
        a_x.push(a);
    }
    let a_y: Vec<f64> = path
        .kappa()
        .iter()
        .zip(&v_x)
        .map(|(&k, &v)| k * v * v)
        .collect();

    Ok(PlanResult {
        v_x,
        a_x,
        a_y,
        time,
        diagnostics: Diagnostics {
            segments: out.repairs,
            brake_clamped: out.brake_clamped,
            infeasible_start,
            required_v_ini,
            solve_calls: calls,
        },
    })
}

/// One sample of a time-parameterized trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: f64,
    pub v_x: f64,
    pub a_x: f64,
    pub a_y: f64,
}

/// Samples the profile on a uniform time grid of spacing `dt`, using the
/// closed-form motion within each constant-acceleration segment. The first
/// sample is at t = 0 and the last exactly at the maneuver time.
pub fn time_parameterize(res: &PlanResult, path: &Path, dt: f64) -> Vec<TrajectorySample> {
    assert!(dt > 0.0, "dt must be positive");
    let n = path.len();
    let s = path.s();
    // Node times from the harmonic closed form, algebraically identical to
    // the per-segment time expression for consistent profiles.
    let mut t_nodes = vec![0.0; n];
    for i in 0..n - 1 {
        let len = s[i + 1] - s[i];
        t_nodes[i + 1] = t_nodes[i] + 2.0 * len / (res.v_x[i] + res.v_x[i + 1]).max(1e-12);
    }
    let total = res.time;
    let steps = (total / dt).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * dt)
        .filter(|&t| t <= total)
        .collect();
    if grid.last().map(|&t| total - t > 1e-12).unwrap_or(true) {
        grid.push(total);
    }
    let mut samples = Vec::with_capacity(grid.len());
    let mut seg = 0usize;
    for t in grid {
        while seg + 2 < n && t_nodes[seg + 1] <= t {
            seg += 1;
        }
        let tau = (t - t_nodes[seg]).max(0.0);
        let a = res.a_x[seg];
        let v = res.v_x[seg] + a * tau;
        let x = s[seg] + res.v_x[seg] * tau + 0.5 * a * tau * tau;
        samples.push(TrajectorySample {
            t,
            s: x,
            v_x: v,
            a_x: a,
            a_y: path.kappa_at(x) * v * v,
        });
    }
    samples
}

/// Writes the profile CSV: `s,v_x,a_x,a_y`, with `a_x` belonging to the
/// segment starting at `s` (empty on the last row).
pub fn write_profile_csv(
    mut w: impl Write,
    path: &Path,
    v_x: &[f64],
    a_x: &[f64],
    a_y: &[f64],
) -> std::io::Result<()> {
    let n = path.len();
    assert_eq!(v_x.len(), n);
    assert_eq!(a_x.len(), n - 1);
    assert_eq!(a_y.len(), n);
    writeln!(w, "s,v_x,a_x,a_y")?;
    for i in 0..n {
        if i < n - 1 {
            writeln!(w, "{},{},{},{}", path.s()[i], v_x[i], a_x[i], a_y[i])?;
        } else {
            writeln!(w, "{},{},,{}", path.s()[i], v_x[i], a_y[i])?;
        }
    }
    Ok(())
}
