//! Brute-force dynamic-programming reference solver.
//!
//! Independent cross-check for the forward-backward planner: per-node speed
//! caps come from bisection on the lateral-bound inequality (no root
//! finder), and per-segment transitions are found by scanning a speed grid
//! and refining the feasibility boundary by bisection. A transition is
//! feasible when the signed distance is non-positive at both segment
//! endpoints under the constant acceleration joining the two speeds.

use thiserror::Error;

use crate::envelope::{AccelPoint, GgvEnvelope};
use crate::path::Path;
use crate::planner::{segment_time, BoundaryConditions, PlanError};

/// Signed-distance slack accepted as "inside" for transition checks.
const FEAS_TOL: f64 = 1e-9;
/// Bisection steps when refining a cap or a feasibility boundary.
const REFINE_STEPS: usize = 60;
/// Acceleration samples taken across the envelope bounds at the known
/// endpoint of a transition. The geometric speed grid alone can step over
/// the reachable-speed window at high speed (window width shrinks as 1/v
/// while grid spacing grows as v); these candidates land inside it by
/// construction.
const ACCEL_CANDIDATES: usize = 33;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no feasible speed at node {node}")]
    Infeasible { node: usize },
    #[error(transparent)]
    Time(#[from] PlanError),
}

/// Resolution of the reference solver's speed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Number of candidate speed levels, geometrically spaced.
    pub v_levels: usize,
    /// Lowest candidate speed (m/s); must be positive for the geometric
    /// spacing to resolve hairpin speeds.
    pub v_floor: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            v_levels: 2000,
            v_floor: 0.5,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.v_levels < 100 {
            return Err(format!("v_levels must be >= 100, got {}", self.v_levels));
        }
        if !(self.v_floor > 0.0) {
            return Err(format!("v_floor must be > 0, got {}", self.v_floor));
        }
        Ok(())
    }
}

/// Reference profile and maneuver time.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Node speeds (m/s), length N.
    pub v_x: Vec<f64>,
    /// Consistent per-segment accelerations (m/s^2), length N-1.
    pub a_x: Vec<f64>,
    /// Maneuver time (s).
    pub time: f64,
    /// The requested entry speed exceeded what the profile supports.
    pub infeasible_entry: bool,
}

/// Computes the reference profile: per-node lateral caps, a forward
/// reachability sweep, a backward reachability sweep, the pointwise minimum
/// of the three, and the closed-form traversal time.
pub fn oracle_plan(
    path: &Path,
    env: &GgvEnvelope,
    bc: BoundaryConditions,
    ocfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    ocfg.validate().expect("invalid oracle config");
    let n = path.len();
    let s = path.s();
    let kap = path.kappa();
    let levels = speed_levels(ocfg, env.v_max());

    let cap: Vec<f64> = (0..n)
        .map(|i| lateral_cap(env, kap[i]))
        .collect::<Result<_, _>>()
        .map_err(|node_err| OracleError::Infeasible { node: node_err })?;

    // Forward sweep: highest speed reachable from behind.
    let mut fwd = vec![0.0; n];
    fwd[0] = bc.v_ini.min(cap[0]);
    for i in 0..n - 1 {
        let v0 = fwd[i];
        let len = s[i + 1] - s[i];
        let extra = accel_candidates(env, kap[i], v0, |a| {
            let sq = v0 * v0 + 2.0 * len * a;
            (sq >= 0.0).then(|| sq.sqrt())
        });
        let feasible = |v1: f64| {
            let a = (v1 * v1 - v0 * v0) / (2.0 * len);
            transition_ok(env, kap[i], kap[i + 1], v0, v1, a)
        };
        fwd[i + 1] = match scan_max(&levels, &extra, cap[i + 1], &feasible) {
            Some(v) => v,
            // Nothing reachable exactly; carry the running bound through.
            None => v0.min(cap[i + 1]),
        };
    }

    // Backward sweep: highest speed from which the rest of the path remains
    // survivable.
    let mut bwd = vec![0.0; n];
    bwd[n - 1] = cap[n - 1];
    for i in (0..n - 1).rev() {
        let v1 = bwd[i + 1];
        let len = s[i + 1] - s[i];
        let extra = accel_candidates(env, kap[i + 1], v1, |a| {
            let sq = v1 * v1 - 2.0 * len * a;
            (sq >= 0.0).then(|| sq.sqrt())
        });
        let feasible = |v0: f64| {
            let a = (v1 * v1 - v0 * v0) / (2.0 * len);
            transition_ok(env, kap[i], kap[i + 1], v0, v1, a)
        };
        bwd[i] = match scan_max(&levels, &extra, cap[i], &feasible) {
            Some(v) => v,
            None => v1.min(cap[i]),
        };
    }

    let v_x: Vec<f64> = (0..n).map(|i| fwd[i].min(bwd[i])).collect();
    let infeasible_entry = v_x[0] < bc.v_ini - 1e-9 * bc.v_ini.max(1.0);
    for (i, &v) in v_x.iter().enumerate().skip(1) {
        if v <= 1e-9 {
            return Err(OracleError::Infeasible { node: i });
        }
    }

    let mut a_x = Vec::with_capacity(n - 1);
    let mut time = 0.0;
    for i in 0..n - 1 {
        let len = s[i + 1] - s[i];
        let a = (v_x[i + 1] * v_x[i + 1] - v_x[i] * v_x[i]) / (2.0 * len);
        time += segment_time(v_x[i], a, len)?;
        a_x.push(a);
    }

    Ok(OracleResult {
        v_x,
        a_x,
        time,
        infeasible_entry,
    })
}

fn speed_levels(ocfg: &OracleConfig, v_max: f64) -> Vec<f64> {
    let k = ocfg.v_levels;
    let lo = ocfg.v_floor.min(v_max * 0.5);
    let ratio = v_max / lo;
    (0..k)
        .map(|i| lo * ratio.powf(i as f64 / (k - 1) as f64))
        .collect()
}

/// Largest speed at which `kappa * v^2` stays within the lateral bounds,
/// found by bisection on the containment predicate.
fn lateral_cap(env: &GgvEnvelope, kappa: f64) -> Result<f64, usize> {
    let ok = |v: f64| {
        let (lo, hi) = env.lateral_bounds(v);
        let ay = kappa * v * v;
        ay >= lo && ay <= hi
    };
    if !ok(0.0) {
        return Err(0);
    }
    let v_max = env.v_max();
    if ok(v_max) {
        return Ok(v_max);
    }
    let mut good = 0.0;
    let mut bad = v_max;
    for _ in 0..REFINE_STEPS {
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

fn transition_ok(env: &GgvEnvelope, k0: f64, k1: f64, v0: f64, v1: f64, a: f64) -> bool {
    let d0 = env.signed_distance(AccelPoint {
        a_x: a,
        a_y: k0 * v0 * v0,
        v_x: v0,
    });
    if d0 > FEAS_TOL {
        return false;
    }
    let d1 = env.signed_distance(AccelPoint {
        a_x: a,
        a_y: k1 * v1 * v1,
        v_x: v1,
    });
    d1 <= FEAS_TOL
}

/// Speeds at the other end of a transition when applying accelerations
/// sampled across the envelope's longitudinal bounds at the known endpoint
/// state. Returned ascending.
fn accel_candidates(
    env: &GgvEnvelope,
    kappa: f64,
    v_known: f64,
    other_speed: impl Fn(f64) -> Option<f64>,
) -> Vec<f64> {
    let (ay_lo, ay_hi) = env.lateral_bounds(v_known);
    let ay_clip = (kappa * v_known * v_known).clamp(ay_lo, ay_hi);
    let (ax_lo, ax_hi) = env.longitudinal_bounds(ay_clip, v_known);
    let mut out = Vec::with_capacity(ACCEL_CANDIDATES);
    for k in 0..ACCEL_CANDIDATES {
        let a = ax_lo + (ax_hi - ax_lo) * k as f64 / (ACCEL_CANDIDATES - 1) as f64;
        if let Some(v) = other_speed(a) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Scans candidates downward from `top` (merging the speed grid with the
/// physically derived extras) for the first feasible speed, then refines the
/// feasibility boundary by bisection between that speed and the lowest
/// infeasible one above it.
fn scan_max(
    levels: &[f64],
    extra: &[f64],
    top: f64,
    feasible: &impl Fn(f64) -> bool,
) -> Option<f64> {
    if feasible(top) {
        return Some(top);
    }
    let mut lowest_bad = top;
    let mut g = levels.partition_point(|&lv| lv < top);
    let mut e = extra.partition_point(|&x| x < top);
    loop {
        let cand = if g > 0 && (e == 0 || levels[g - 1] >= extra[e - 1]) {
            g -= 1;
            levels[g]
        } else if e > 0 {
            e -= 1;
            extra[e]
        } else {
            return None;
        };
        if feasible(cand) {
            return Some(refine_boundary(cand, lowest_bad, feasible));
        }
        lowest_bad = cand;
    }
}

fn refine_boundary(mut good: f64, mut bad: f64, feasible: &impl Fn(f64) -> bool) -> f64 {
    for _ in 0..REFINE_STEPS {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if feasible(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
