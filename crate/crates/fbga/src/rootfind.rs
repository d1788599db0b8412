//! Derivative-free bracketing root finder.
//!
//! Brent-style iteration: inverse quadratic interpolation and secant steps
//! guarded by bisection, so convergence is guaranteed for any continuous
//! function once a sign change is bracketed. No derivatives, no smoothness
//! assumptions; envelope kinks are harmless.

/// Tolerances and iteration cap for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Absolute tolerance on the root location (same units as the unknown).
    pub x_tol: f64,
    /// Residual tolerance: |f(x)| at or below this counts as converged.
    pub f_tol: f64,
    /// Iteration cap. On hit with a live bracket the midpoint is returned.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            x_tol: 1e-8,
            f_tol: 1e-10,
            max_iter: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.x_tol > 0.0) {
            return Err(format!("x_tol must be > 0, got {}", self.x_tol));
        }
        if !(self.f_tol >= 0.0) {
            return Err(format!("f_tol must be >= 0, got {}", self.f_tol));
        }
        if self.max_iter < 1 {
            return Err("max_iter must be >= 1".into());
        }
        Ok(())
    }
}

// Probes used to shrink a bracket whose ends evaluate non-finite. The
// objective functions contain sqrt terms that go imaginary on part of the
// bracket; the non-finite region is an interval touching one end, so
// bisecting toward the finite side recovers the usable sub-bracket.
const NONFINITE_BISECT_STEPS: usize = 60;
const NONFINITE_SCAN_POINTS: usize = 16;

/// Finds a zero of `f` on `[lo, hi]`.
///
/// Returns `None` when no sign change exists at the (finite parts of the)
/// bracket ends. An exact zero at an endpoint is returned immediately.
/// Non-finite evaluations shrink the bracket toward the finite side; if no
/// finite point is found at all, returns `None`.
pub fn solve<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, cfg: &SolverConfig) -> Option<f64> {
    debug_assert!(lo <= hi, "bracket must be ordered: [{lo}, {hi}]");
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);

    if !fa.is_finite() || !fb.is_finite() {
        if !fa.is_finite() && !fb.is_finite() {
            // Look for any finite point between the ends.
            let mut found = None;
            for k in 1..NONFINITE_SCAN_POINTS {
                let x = a + (b - a) * (k as f64) / (NONFINITE_SCAN_POINTS as f64);
                let fx = f(x);
                if fx.is_finite() {
                    found = Some((x, fx));
                    break;
                }
            }
            let (x, fx) = found?;
            let (xa, va) = shrink_to_finite(&mut f, a, x, fx);
            let (xb, vb) = shrink_to_finite(&mut f, b, x, fx);
            a = xa;
            fa = va;
            b = xb;
            fb = vb;
        } else if !fa.is_finite() {
            let (x, v) = shrink_to_finite(&mut f, a, b, fb);
            a = x;
            fa = v;
        } else {
            let (x, v) = shrink_to_finite(&mut f, b, a, fa);
            b = x;
            fb = v;
        }
    }
    if !fa.is_finite() || !fb.is_finite() {
        return None;
    }

    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }

    brent(&mut f, a, fa, b, fb, cfg)
}

/// Bisects from the non-finite end `bad` toward the finite end `good`,
/// returning the finite point closest to `bad` that was found.
fn shrink_to_finite<F: FnMut(f64) -> f64>(
    f: &mut F,
    bad: f64,
    good: f64,
    f_good: f64,
) -> (f64, f64) {
    let mut lo = bad;
    let mut hi = good;
    let mut best = (good, f_good);
    for _ in 0..NONFINITE_BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm.is_finite() {
            best = (mid, fm);
            hi = mid;
        } else {
            lo = mid;
        }
    }
    best
}

/// Core Brent iteration. Requires finite `fa`, `fb` with opposite signs.
fn brent<F: FnMut(f64) -> f64>(
    f: &mut F,
    xa: f64,
    fa_in: f64,
    xb: f64,
    fb_in: f64,
    cfg: &SolverConfig,
) -> Option<f64> {
    let mut xpre = xa;
    let mut fpre = fa_in;
    let mut xcur = xb;
    let mut fcur = fb_in;
    let mut xblk = xpre;
    let mut fblk = fpre;
    let mut spre = xcur - xpre;
    let mut scur = spre;

    for _ in 0..cfg.max_iter {
        if fpre != 0.0 && fcur != 0.0 && fpre.signum() != fcur.signum() {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }

        let delta = 0.5 * (cfg.x_tol + 4.0 * f64::EPSILON * xcur.abs());
        let sbis = 0.5 * (xblk - xcur);

        if fcur.abs() <= cfg.f_tol || sbis.abs() < delta {
            return Some(xcur);
        }

        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                // Secant step.
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                // Inverse quadratic interpolation.
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }

        xpre = xcur;
        fpre = fcur;
        if scur.abs() > delta {
            xcur += scur;
        } else {
            xcur += if sbis > 0.0 { delta } else { -delta };
        }

        fcur = f(xcur);
        if !fcur.is_finite() {
            // Interior non-finiteness: fall back to plain bisection between
            // the last valid bracket ends.
            let mid = 0.5 * (xpre + xblk);
            let fm = f(mid);
            if !fm.is_finite() {
                return Some(mid);
            }
            xcur = mid;
            fcur = fm;
        }
    }
    // Iteration cap with an established sign change: best bracket midpoint.
    Some(0.5 * (xcur + xblk))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    /// Plain bisection, used as the independent reference for solve().
    fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        let mut flo = f(lo);
        assert!(flo * f(hi) <= 0.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if flo * fm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_root() {
        let r = solve(|x| x - 2.0, 0.0, 10.0, &cfg()).unwrap();
        assert!((r - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn no_sign_change_returns_none() {
        assert_eq!(solve(|x| x * x + 1.0, 0.0, 10.0, &cfg()), None);
    }

    #[test]
    fn sqrt2_matches_bisection_reference() {
        let tight = SolverConfig {
            x_tol: 1e-10,
            f_tol: 0.0,
            max_iter: 200,
        };
        let r = solve(|x| x * x - 2.0, 0.0, 2.0, &tight).unwrap();
        let reference = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13);
        assert!((r - reference).abs() <= 1e-12, "r={r} ref={reference}");
        assert!((r - 1.4142135624).abs() <= 1e-9);
    }

    #[test]
    fn exact_zero_at_endpoint_returned() {
        assert_eq!(solve(|x| x - 1.0, 1.0, 5.0, &cfg()), Some(1.0));
        assert_eq!(solve(|x| x - 5.0, 1.0, 5.0, &cfg()), Some(5.0));
    }

    #[test]
    fn nonfinite_low_side_shrinks() {
        // sqrt goes imaginary below x=1; root of sqrt(x-1)-0.5 at x=1.25.
        let r = solve(|x| (x - 1.0).sqrt() - 0.5, 0.0, 2.0, &cfg()).unwrap();
        assert!((r - 1.25).abs() <= 1e-7, "r={r}");
    }

    #[test]
    fn nonfinite_high_side_shrinks() {
        // Imaginary above x=3; root of sqrt(3-x)-1 at x=2.
        let r = solve(|x| (3.0 - x).sqrt() - 1.0, 0.0, 4.0, &cfg()).unwrap();
        assert!((r - 2.0).abs() <= 1e-7, "r={r}");
    }

    #[test]
    fn all_nonfinite_returns_none() {
        assert_eq!(solve(|_| f64::NAN, 0.0, 1.0, &cfg()), None);
    }

    #[test]
    fn nonfinite_but_no_root_in_finite_part() {
        // Finite only above x=1 where f > 0 everywhere.
        assert_eq!(solve(|x| (x - 1.0).sqrt() + 0.5, 0.0, 2.0, &cfg()), None);
    }

    #[test]
    fn iteration_cap_still_returns_within_bracket() {
        let starved = SolverConfig {
            x_tol: 1e-300,
            f_tol: 0.0,
            max_iter: 3,
        };
        let r = solve(|x| x * x * x - 7.0, 0.0, 10.0, &starved).unwrap();
        assert!((0.0..=10.0).contains(&r));
    }

    #[test]
    fn root_near_bracket_end() {
        let r = solve(|x| x - 9.999_999, 0.0, 10.0, &cfg()).unwrap();
        assert!((r - 9.999_999).abs() <= 1e-7);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig {
            x_tol: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            max_iter: 0,
            ..cfg()
        }
        .validate()
        .is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Root of a monotone cubic always lies in the bracket and meets
            // the residual tolerance.
            #[test]
            fn root_within_bracket(c in -50.0f64..50.0, d in -100.0f64..100.0) {
                let f = |x: f64| x * x * x + c.abs() * x + d;
                let (lo, hi) = (-10.0, 10.0);
                if f(lo) * f(hi) <= 0.0 {
                    let r = solve(f, lo, hi, &cfg()).unwrap();
                    prop_assert!(r >= lo && r <= hi);
                    prop_assert!(f(r).abs() <= 1e-6);
                }
            }

            // Whatever the offset, a sign change over the bracket must be found.
            #[test]
            fn sign_change_always_found(off in -0.9f64..0.9) {
                let f = |x: f64| (x * std::f64::consts::PI).sin() - off;
                let r = solve(f, -0.5, 0.5, &cfg());
                prop_assert!(r.is_some());
                prop_assert!(f(r.unwrap()).abs() <= 1e-6);
            }
        }
    }
}
