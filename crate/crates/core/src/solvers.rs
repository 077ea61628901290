//! Censored initial value problems, resolvent equations, implicit Euler evolution,
//! a windowed Picard solver for nonlinear right-hand sides and the Laplace transform
//! of the lifetime.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operators::{Operators, SeriesSolution, Summation};

/// Cap on the number of `lambda` terms in the resolvent series.
pub const MAX_RESOLVENT_TERMS: usize = 200;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_on_grid(ops: &Operators, g: &GridFunction) -> Result<()> {
    if g.grid().as_ref() != ops.grid().as_ref() {
        return Err(Error::Domain("grid function lives on a different grid".into()));
    }
    if g.defined_from() != 0 {
        return Err(Error::Domain("right-hand side must be defined at every node".into()));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")))
    }
}

struct Summed {
    phi: Vec<f64>,
    method: Summation,
    terms: usize,
    bound: f64,
}

fn finish(ops: &Operators, s: Summed, lam_phi: &[f64], phi0: f64, g: &[f64]) -> Result<SeriesSolution> {
    let Summed { phi, method, terms, bound } = s;
    let residual = ops.integral_defect(&phi, lam_phi, phi0, g);
    let derivative_residual = ops.derivative_defect(&phi, lam_phi, phi0, g);
    Ok(SeriesSolution {
        solution: GridFunction::new(ops.grid().clone(), phi)?,
        method,
        terms_used: terms,
        tail_bound: bound,
        residual,
        derivative_residual,
    })
}

/// `D_c phi = g`, `phi(0) = phi0`: `phi = phi0 + I_c g` with the certified truncation.
pub fn solve_ivp(ops: &Operators, g: &GridFunction, phi0: f64, tol: f64) -> Result<SeriesSolution> {
    check_on_grid(ops, g)?;
    check_tol(tol)?;
    let (sum, n, bound) = ops.censored_integral_values(g.values(), tol);
    let phi: Vec<f64> = sum.into_iter().map(|v| v + phi0).collect();
    let zeros = vec![0.0; phi.len()];
    finish(ops, Summed { phi, method: Summation::Series, terms: n, bound }, &zeros, phi0, g.values())
}

/// `D_c phi = lambda phi + g`, `phi(0) = phi0`, summed as
/// `sum_i (lambda I_c)^i [phi0 + I_c g]`.
///
/// Terms are added until the last one is below `tol` after three consecutive
/// contracting ratios. `tail_bound` is the geometric estimate of the remainder.
/// When the largest term is so big that rounding in the alternating sum could exceed
/// `tol`, the certified sum is replaced by forward substitution in the same discrete
/// system and `method` says so.
pub fn solve_resolvent(ops: &Operators, lambda: f64, g: &GridFunction, phi0: f64, tol: f64) -> Result<SeriesSolution> {
    check_on_grid(ops, g)?;
    check_tol(tol)?;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
    }
    if lambda == 0.0 {
        return solve_ivp(ops, g, phi0, tol);
    }
    let n = ops.grid().len();
    let mut term = ops.volterra_solve(0.0, phi0, g.values(), n)?;
    let mut phi = term.clone();
    let mut prev = sup(&term);
    let mut peak = prev;
    let mut streak = 0usize;
    let mut bound = 0.0;
    let mut used = 1usize;
    let certified = loop {
        if prev == 0.0 {
            break true;
        }
        if used >= MAX_RESOLVENT_TERMS {
            break false;
        }
        let scaled: Vec<f64> = term.iter().map(|v| lambda * v).collect();
        term = ops.volterra_solve(0.0, 0.0, &scaled, n)?;
        used += 1;
        for (p, t) in phi.iter_mut().zip(&term) {
            *p += t;
        }
        let norm = sup(&term);
        peak = peak.max(norm);
        let ratio = norm / prev;
        streak = if ratio < 1.0 { streak + 1 } else { 0 };
        prev = norm;
        if streak >= 3 && norm < tol {
            bound = if ratio < 1.0 { norm * ratio / (1.0 - ratio) } else { norm };
            break true;
        }
    };
    if !certified {
        return Err(Error::SeriesDivergence(MAX_RESOLVENT_TERMS));
    }
    let mut method = Summation::Series;
    if 4.0 * f64::EPSILON * peak > tol {
        phi = ops.volterra_solve(lambda, phi0, g.values(), n)?;
        method = Summation::ForwardSubstitution;
    }
    let lam_phi: Vec<f64> = phi.iter().map(|v| lambda * v).collect();
    finish(ops, Summed { phi, method, terms: used, bound }, &lam_phi, phi0, g.values())
}

/// Implicit Euler for `d/dt u = -D_c u`, `u(0) = g0`: each step solves
/// `D_c u' = -(u' - u)/dt` with `u'(0) = u(0)`. Returns `steps + 1` states.
///
/// With `lambda = -1/dt` the resolvent series in `lambda` cancels catastrophically for
/// small `dt`, so each step solves the same discrete equation by forward substitution.
pub fn evolve_cauchy(ops: &Operators, g0: &GridFunction, dt: f64, steps: usize) -> Result<Vec<GridFunction>> {
    check_on_grid(ops, g0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let n = ops.grid().len();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(g0.clone());
    for _ in 0..steps {
        let cur = out.last().unwrap().values();
        let rhs: Vec<f64> = cur.iter().map(|v| v / dt).collect();
        let next = ops.volterra_solve(-1.0 / dt, cur[0], &rhs, n)?;
        out.push(GridFunction::new(ops.grid().clone(), next)?);
    }
    Ok(out)
}

/// Window length with `L K(eps)/(1 - q) <= 1/2`.
pub fn picard_window(ops: &Operators, lipschitz: f64) -> f64 {
    let t = ops.horizon();
    if lipschitz <= 0.0 {
        return t;
    }
    let target = 0.5 * (1.0 - ops.q()) / lipschitz;
    let pair = ops.pair();
    if pair.big_k(t) <= target {
        return t;
    }
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pair.big_k(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

const MAX_PICARD: usize = 500;

/// `D_c phi = gfunc(phi) + h`, `phi(0) = phi0`, by Picard iteration
/// `phi <- phi0 + I_c[gfunc(phi) + h]` on successive windows of length `eps`.
/// A window whose iteration stops contracting is retried with half the length.
pub fn solve_nonlinear<F: Fn(f64) -> f64>(
    ops: &Operators,
    gfunc: F,
    lipschitz: f64,
    h: &GridFunction,
    phi0: f64,
    tol: f64,
) -> Result<SeriesSolution> {
    check_on_grid(ops, h)?;
    check_tol(tol)?;
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidParameter(format!("Lipschitz bound must be finite and nonnegative, got {lipschitz}")));
    }
    let x = ops.grid().nodes().to_vec();
    let t = ops.horizon();
    let mut eps = picard_window(ops, lipschitz);
    let mut phi = vec![phi0; x.len()];
    let hv = h.values();
    let mut done = 1usize;
    let mut iterations = 0usize;
    let mut last_diff = 0.0f64;
    while done < x.len() {
        let end = x[done - 1] + eps;
        let mut n = done;
        while n < x.len() && x[n] <= end * (1.0 + 1e-12) {
            n += 1;
        }
        n = n.max(done + 1);
        let start_state = phi.clone();
        let fill = phi[done - 1];
        for v in &mut phi[done..n] {
            *v = fill;
        }
        let mut prev = f64::INFINITY;
        let mut ok = false;
        for it in 0..MAX_PICARD {
            let rhs: Vec<f64> = (0..n).map(|i| gfunc(phi[i]) + hv[i]).collect();
            if rhs.iter().any(|v| !v.is_finite()) {
                break;
            }
            let next = ops.volterra_solve(0.0, phi0, &rhs, n)?;
            let diff = (done..n).map(|i| (next[i] - phi[i]).abs()).fold(0.0, f64::max);
            phi[..n].copy_from_slice(&next);
            iterations += 1;
            if diff < 0.1 * tol {
                last_diff = last_diff.max(diff);
                ok = true;
                break;
            }
            if it >= 1 && diff >= prev {
                break;
            }
            prev = diff;
        }
        if ok {
            done = n;
        } else {
            phi = start_state;
            eps *= 0.5;
            if eps < 1e-14 * t {
                return Err(Error::Numerics("Picard window length underflow".into()));
            }
        }
    }
    let g_phi: Vec<f64> = phi.iter().map(|&v| gfunc(v)).collect();
    finish(ops, Summed { phi, method: Summation::Series, terms: iterations, bound: last_diff }, &g_phi, phi0, hv)
}

/// `E^x[exp(-lambda tau_inf)] = sum_n (-lambda)^n I_c^n 1 (x)`, certified like the
/// resolvent with `g = 0`, `phi0 = 1`. `x` is interpolated between nodes.
pub fn lifetime_laplace(ops: &Operators, x: f64, lambda: f64, tol: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(x >= 0.0 && x <= ops.horizon()) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", ops.horizon())));
    }
    let zero = GridFunction::constant(ops.grid().clone(), 0.0);
    let s = solve_resolvent(ops, -lambda, &zero, 1.0, tol)?;
    let v = s.solution.eval(x).expect("solution defined everywhere");
    clamp_unit(v, 10.0 * tol)
}

fn clamp_unit(v: f64, slack: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if v < 0.0 && v >= -slack {
        Ok(0.0)
    } else if v > 1.0 && v <= 1.0 + slack {
        Ok(1.0)
    } else {
        Err(Error::Numerics(format!("lifetime Laplace transform {v} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinSpec;
    use crate::sonine::build_pair;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ops(alpha: f64, t: f64, m: usize) -> Operators {
        let pair = build_pair(&BernsteinSpec::stable(alpha).unwrap(), t).unwrap();
        Operators::graded(&pair, t, m).unwrap()
    }

    fn interior_err(a: &GridFunction, f: impl Fn(f64) -> f64) -> f64 {
        let t = a.grid().horizon();
        a.nodes().iter().zip(a.values()).filter(|(x, _)| **x >= t / 10.0).map(|(x, v)| (v - f(*x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn ivp_recovers_identity() {
        let o = ops(0.5, 1.0, 512);
        let g = GridFunction::from_fn(o.grid().clone(), |x| (x / PI).sqrt());
        let s = solve_ivp(&o, &g, 0.0, 1e-8).unwrap();
        assert!(interior_err(&s.solution, |x| x) < 5e-3);
        assert!(s.residual <= 1e-7);
    }

    #[test]
    fn ivp_constant_and_mean_lifetime() {
        let o = ops(0.5, 1.0, 512);
        let z = GridFunction::constant(o.grid().clone(), 0.0);
        let s = solve_ivp(&o, &z, 7.0, 1e-8).unwrap();
        assert!(s.solution.values().iter().all(|&v| v == 7.0));
        let one = GridFunction::constant(o.grid().clone(), 1.0);
        let s = solve_ivp(&o, &one, 0.0, 1e-8).unwrap();
        let v = s.solution.eval(1.0).unwrap();
        assert!((v - 3.105275).abs() < 1e-2, "{v}");
    }

    #[test]
    fn resolvent_trivial_cases() {
        let o = ops(0.5, 1.0, 128);
        let z = GridFunction::constant(o.grid().clone(), 0.0);
        let s = solve_resolvent(&o, 0.0, &z, 1.0, 1e-8).unwrap();
        assert!(s.solution.values().iter().all(|&v| v == 1.0));
        let s = solve_resolvent(&o, 1.5, &z, 0.0, 1e-8).unwrap();
        assert_eq!(s.solution.sup_norm(), 0.0);
    }

    #[test]
    fn resolvent_residuals() {
        let o = ops(0.5, 1.0, 256);
        let g = GridFunction::from_fn(o.grid().clone(), |x| (5.0 * x).sin() + 0.3);
        for lam in [-2.0, -0.5, 0.5, 2.0] {
            let s = solve_resolvent(&o, lam, &g, 0.4, 1e-6).unwrap();
            assert!(s.residual <= 1e-5, "lambda {lam}: {}", s.residual);
        }
    }

    #[test]
    fn resolvent_matches_forward_substitution() {
        let o = ops(0.4, 1.0, 128);
        let g = GridFunction::from_fn(o.grid().clone(), |x| x.cos());
        let s = solve_resolvent(&o, -1.5, &g, 0.5, 1e-10).unwrap();
        assert_eq!(s.method, Summation::Series);
        let d = o.volterra_solve(-1.5, 0.5, g.values(), g.values().len()).unwrap();
        for (a, b) in s.solution.values().iter().zip(&d) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resolvent_large_lambda() {
        let o = ops(0.5, 1.0, 64);
        let z = GridFunction::constant(o.grid().clone(), 0.0);
        let s = solve_resolvent(&o, -4.0, &z, 1.0, 1e-6).unwrap();
        assert_eq!(s.method, Summation::ForwardSubstitution);
        assert!(s.residual <= 1e-5);
        assert!(matches!(solve_resolvent(&o, -60.0, &z, 1.0, 1e-6), Err(Error::SeriesDivergence(200))));
    }

    #[test]
    fn evolve_constants_and_positivity() {
        let o = ops(0.5, 1.0, 256);
        let c = GridFunction::constant(o.grid().clone(), 2.5);
        for s in evolve_cauchy(&o, &c, 0.01, 5).unwrap() {
            for v in s.values() {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
        let g0 = GridFunction::from_fn(o.grid().clone(), |x| (x * (1.0 - x) * 4.0).powi(2));
        let traj = evolve_cauchy(&o, &g0, 0.02, 20).unwrap();
        let mut prev = f64::INFINITY;
        for s in &traj {
            assert!(s.min_value() >= -1e-5);
            let n = s.sup_norm_on(0.1, 1.0);
            assert!(n <= prev + 1e-5);
            prev = n;
        }
        assert!(traj.last().unwrap().sup_norm() < traj[0].sup_norm());
    }

    #[test]
    fn nonlinear_cases() {
        let o = ops(0.5, 1.0, 256);
        let grid = o.grid().clone();
        let zero = GridFunction::constant(grid.clone(), 0.0);
        let one = GridFunction::constant(grid.clone(), 1.0);
        let tol = 1e-7;
        let lin = solve_nonlinear(&o, |u| -1.5 * u, 1.5, &zero, 1.0, tol).unwrap();
        let res = solve_resolvent(&o, -1.5, &zero, 1.0, tol).unwrap();
        assert!(lin.solution.axpby(1.0, &res.solution, -1.0).sup_norm() <= 10.0 * tol);
        let ivp = solve_ivp(&o, &one, 0.0, 1e-10).unwrap();
        let nl = solve_nonlinear(&o, |_| 0.0, 0.0, &one, 0.0, tol).unwrap();
        assert!(nl.solution.axpby(1.0, &ivp.solution, -1.0).sup_norm() <= 10.0 * tol);
        let sq = solve_nonlinear(&o, |u| -u * u, 2.0, &one, 0.0, tol).unwrap();
        assert!(sq.residual <= 10.0 * tol, "{}", sq.residual);
        assert!(sq.solution.min_value() >= 0.0 && sq.solution.sup_norm() < 1.0);
    }

    #[test]
    fn lifetime_laplace_is_monotone_in_unit_interval() {
        let o = ops(0.5, 1.0, 256);
        assert_eq!(lifetime_laplace(&o, 1.0, 0.0, 1e-8).unwrap(), 1.0);
        let mut prev = 1.0;
        for lam in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let v = lifetime_laplace(&o, 1.0, lam, 1e-6).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev, "{lam}: {v}");
            prev = v;
        }
        let v = lifetime_laplace(&o, 1.0, 1.0, 1e-8).unwrap();
        assert!(v < 1.0 - 3.105275 + 0.5 * 30.0 && v > 1.0 - 3.105275 * 1.01);
    }

    #[test]
    fn clamp_band() {
        assert_eq!(clamp_unit(-1e-9, 1e-8).unwrap(), 0.0);
        assert_eq!(clamp_unit(1.0 + 1e-9, 1e-8).unwrap(), 1.0);
        assert!(clamp_unit(-1e-3, 1e-8).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn ivp_shift_is_exact(c in -5.0f64..5.0, w in 0.5f64..6.0) {
            let o = ops(0.5, 1.0, 64);
            let g = GridFunction::from_fn(o.grid().clone(), |x| (w * x).cos());
            let a = solve_ivp(&o, &g, 1.0, 1e-8).unwrap();
            let b = solve_ivp(&o, &g, 1.0 + c, 1e-8).unwrap();
            for (u, v) in a.solution.values().iter().zip(b.solution.values()) {
                prop_assert!((v - u - c).abs() <= 1e-12 * (1.0 + u.abs().max(v.abs())));
            }
        }

        #[test]
        fn resolvent_is_linear(lam in -2.0f64..2.0, phi0 in -2.0f64..2.0, w in 0.5f64..6.0) {
            prop_assume!(lam.abs() > 1e-3);
            let o = ops(0.6, 1.0, 64);
            let g = GridFunction::from_fn(o.grid().clone(), |x| (w * x).sin());
            let z = GridFunction::constant(o.grid().clone(), 0.0);
            let tol = 1e-13;
            let a = solve_resolvent(&o, lam, &g, 0.0, tol).unwrap();
            let b = solve_resolvent(&o, lam, &z, phi0, tol).unwrap();
            let c = solve_resolvent(&o, lam, &g, phi0, tol).unwrap();
            let sum = a.solution.axpby(1.0, &b.solution, 1.0);
            prop_assert!(sum.axpby(1.0, &c.solution, -1.0).sup_norm() <= 1e-10);
        }
    }
}
