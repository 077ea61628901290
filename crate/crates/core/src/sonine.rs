//! Positive Sonine pairs `(mu_bar, k)` with `mu_bar * k = 1`, built from a Bernstein function.

use crate::bernstein::{BernsteinSpec, Family};
use crate::error::{Error, Result};
use crate::kernel::{finite_slopes, Kernel, LogTable, PointEval, PowerSum, Remainder};
use crate::laplace::GaverStehfest;
use crate::quadrature;
use statrs::function::gamma::gamma;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Inverted,
}

/// Table resolution for numerically inverted kernels.
pub const TABLE_PER_DECADE: usize = 64;
/// Lower end of kernel tables relative to the horizon.
pub const TABLE_START: f64 = 1e-12;
const END_RULE_NODES: usize = 16;
const INTERIOR_NODES: usize = 10;
const GRADED_LEVELS: usize = 36;
const MAX_DEPTH: usize = 60;

#[derive(Debug, Clone)]
pub struct SoninePair {
    spec: BernsteinSpec,
    mu_bar: Kernel,
    k: Kernel,
    provenance: Provenance,
    horizon: f64,
}

/// Builds the Sonine pair of an admissible spec on the horizon `t_max`.
pub fn build_pair(spec: &BernsteinSpec, t_max: f64) -> Result<SoninePair> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t_max}")));
    }
    let report = spec.check_assumptions();
    if !(report.a1_pass && report.a2_pass) {
        return Err(Error::NotAdmissible(report.notes));
    }
    let (mu_bar, k, provenance) = match spec.family() {
        Family::Stable { alpha } => {
            let a = *alpha;
            (
                Kernel::power(PowerSum::new(vec![(1.0 / gamma(1.0 - a), -a)])),
                Kernel::power(PowerSum::new(vec![(1.0 / gamma(a), a - 1.0)])),
                Provenance::Analytic,
            )
        }
        Family::StableMixture { terms } => {
            let mu = Kernel::power(PowerSum::new(terms.iter().map(|&(c, a)| (c / gamma(1.0 - a), -a)).collect()));
            let (c_top, a_top) = terms.iter().copied().fold((0.0, 0.0), |acc, t| if t.1 > acc.1 { t } else { acc });
            let k = if terms.len() == 1 {
                Kernel::power(PowerSum::new(vec![(1.0 / (c_top * gamma(a_top)), a_top - 1.0)]))
            } else {
                inverted_kernel(spec, a_top, c_top, t_max)?
            };
            (mu, k, Provenance::Inverted)
        }
        Family::CustomTriplet(t) => {
            let tail = t.tail.clone();
            let mu = custom_tail_kernel(move |x| tail(x), t_max);
            let big = 1e10 / t_max;
            let (f1, f2) = (spec.eval(big)?, spec.eval(2.0 * big)?);
            let a_top = (f2 / f1).log2();
            if !(a_top > 0.0 && a_top < 1.0) {
                return Err(Error::NotAdmissible(format!("estimated large-lambda exponent {a_top} outside (0,1)")));
            }
            let c_top = f1 / big.powf(a_top);
            (mu, inverted_kernel(spec, a_top, c_top, t_max)?, Provenance::Inverted)
        }
    };
    Ok(SoninePair { spec: spec.clone(), mu_bar, k, provenance, horizon: t_max })
}

/// `k = s^{a-1}/(c Gamma(a)) + r(s)` where the remainder transform
/// `1/f - l^{-a}/c` is inverted numerically, together with its first two primitives.
fn inverted_kernel(spec: &BernsteinSpec, a_top: f64, c_top: f64, t_max: f64) -> Result<Kernel> {
    let gs = GaverStehfest::default_shared();
    let rem = |l: f64| 1.0 / spec.eval_unchecked(l) - l.powf(-a_top) / c_top;
    let (xmin, xmax) = (TABLE_START * t_max, 2.0 * t_max);
    let u0 = xmin.ln();
    let n = (((xmax.ln() - u0) / std::f64::consts::LN_10) * TABLE_PER_DECADE as f64).ceil() as usize + 1;
    let du = (xmax.ln() - u0) / (n - 1) as f64;
    let mut r = Vec::with_capacity(n);
    let mut big_r = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let x = (u0 + du * i as f64).exp();
        r.push(gs.invert_fn(rem, x)?);
        big_r.push(gs.invert_fn(|l| rem(l) / l, x)?);
        q.push(gs.invert_fn(|l| rem(l) / (l * l), x)?);
    }
    let xs: Vec<f64> = (0..n).map(|i| (u0 + du * i as f64).exp()).collect();
    let value = LogTable::from_samples(xmin, du, r.clone(), finite_slopes(&r, du));
    let integral = LogTable::from_samples(xmin, du, big_r.clone(), xs.iter().zip(&r).map(|(x, v)| x * v).collect());
    let moment_vals: Vec<f64> = (0..n).map(|i| xs[i] * big_r[i] - q[i]).collect();
    let moment_slopes: Vec<f64> = (0..n).map(|i| xs[i] * xs[i] * r[i]).collect();
    let moment = LogTable::from_samples(xmin, du, moment_vals, moment_slopes);
    let lead = PowerSum::new(vec![(1.0 / (c_top * gamma(a_top)), a_top - 1.0)]);
    Ok(Kernel::with_remainder(lead, Remainder { value: PointEval::Table(value), integral, moment }))
}

/// User tail: fitted leading power `c x^{-e}` plus a remainder whose primitives
/// are accumulated by quadrature in `ln x`.
fn custom_tail_kernel<F: Fn(f64) -> f64 + Send + Sync + 'static>(tail: F, t_max: f64) -> Kernel {
    let tail = Arc::new(tail);
    let (xmin, xmax) = (TABLE_START * t_max, 2.0 * t_max);
    let e = (-(tail(2.0 * xmin) / tail(xmin)).log2()).clamp(0.0, 0.999);
    let c = tail(xmin) * xmin.powf(e);
    let lead = PowerSum::new(if e > 0.0 { vec![(c, -e)] } else { vec![] });
    let lead_c = lead.clone();
    let tl = tail.clone();
    let rem = move |x: f64| tl(x) - lead_c.value(x);
    let u0 = xmin.ln();
    let n = (((xmax.ln() - u0) / std::f64::consts::LN_10) * TABLE_PER_DECADE as f64).ceil() as usize + 1;
    let du = (xmax.ln() - u0) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| (u0 + du * i as f64).exp()).collect();
    let rv: Vec<f64> = xs.iter().map(|&x| rem(x)).collect();
    let mut ints = vec![rv[0] * xs[0]];
    let mut moms = vec![rv[0] * xs[0] * xs[0] / 2.0];
    for i in 1..n {
        let (a, b) = (u0 + du * (i - 1) as f64, u0 + du * i as f64);
        let di = quadrature::integrate(8, a, b, |u| {
            let x = u.exp();
            rem(x) * x
        });
        let dm = quadrature::integrate(8, a, b, |u| {
            let x = u.exp();
            rem(x) * x * x
        });
        ints.push(ints[i - 1] + di);
        moms.push(moms[i - 1] + dm);
    }
    let integral = LogTable::from_samples(xmin, du, ints, xs.iter().zip(&rv).map(|(x, v)| x * v).collect());
    let moment = LogTable::from_samples(xmin, du, moms, xs.iter().zip(&rv).map(|(x, v)| x * x * v).collect());
    let value = PointEval::Func(Arc::new(rem));
    Kernel::with_remainder(lead, Remainder { value, integral, moment })
}

/// Tail of the Yosida approximant `f_n = n f/(n + f)`, a bounded kernel obtained by
/// inverting `f_n/l`, `f_n/l^2` and `f_n/l^3` on a log grid over [1e-12 T, 2T].
pub fn yosida_tail(spec: &BernsteinSpec, n: u64, t_max: f64) -> Result<Kernel> {
    let y = spec.yosida_approx(n)?;
    let nf = y.n();
    let fy = |l: f64| crate::bernstein::yosida_value(nf, spec.eval_unchecked(l));
    let gs = GaverStehfest::default_shared();
    let (xmin, xmax) = (TABLE_START * t_max, 2.0 * t_max);
    let u0 = xmin.ln();
    let m = (((xmax.ln() - u0) / std::f64::consts::LN_10) * TABLE_PER_DECADE as f64).ceil() as usize + 1;
    let du = (xmax.ln() - u0) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| (u0 + du * i as f64).exp()).collect();
    let mut v = Vec::with_capacity(m);
    let mut i1 = Vec::with_capacity(m);
    let mut i2 = Vec::with_capacity(m);
    for &x in &xs {
        v.push(gs.invert_fn(|l| fy(l) / l, x)?);
        i1.push(gs.invert_fn(|l| fy(l) / (l * l), x)?);
        i2.push(gs.invert_fn(|l| fy(l) / (l * l * l), x)?);
    }
    let value = LogTable::from_samples(xmin, du, v.clone(), finite_slopes(&v, du));
    let integral = LogTable::from_samples(xmin, du, i1.clone(), xs.iter().zip(&v).map(|(x, y)| x * y).collect());
    let mom: Vec<f64> = (0..m).map(|i| xs[i] * i1[i] - i2[i]).collect();
    let moment = LogTable::from_samples(xmin, du, mom, (0..m).map(|i| xs[i] * xs[i] * v[i]).collect());
    Ok(Kernel::with_remainder(PowerSum::default(), Remainder { value: PointEval::Table(value), integral, moment }))
}

impl SoninePair {
    pub fn spec(&self) -> &BernsteinSpec {
        &self.spec
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mu_kernel(&self) -> &Kernel {
        &self.mu_bar
    }

    pub fn k_kernel(&self) -> &Kernel {
        &self.k
    }

    pub fn mu_bar(&self, x: f64) -> f64 {
        self.mu_bar.value(x)
    }

    pub fn k(&self, x: f64) -> f64 {
        self.k.value(x)
    }

    /// `K(x) = int_0^x k`.
    pub fn big_k(&self, x: f64) -> f64 {
        self.k.integral(x)
    }

    /// `int_0^x mu_bar`.
    pub fn mu_integral(&self, x: f64) -> f64 {
        self.mu_bar.integral(x)
    }

    /// Scale-invariant pairs (single stable term) admit cached unit-interval tables.
    pub fn is_self_similar(&self) -> bool {
        !self.mu_bar.has_remainder() && !self.k.has_remainder() && self.mu_bar.lead().terms.len() == 1 && self.k.lead().terms.len() == 1
    }

    /// Integral of `mu_bar(r) k(x - r) g(r)` over `[a, b] ⊂ [0, x]` with both endpoint
    /// singularities integrated against exact local power weights. `g` returns two channels.
    pub fn k1_integrate<G: Fn(f64) -> [f64; 2]>(&self, x: f64, a: f64, b: f64, g: &G) -> [f64; 2] {
        let mut acc = [0.0; 2];
        if b > a {
            self.k1_rec(x, a, b, a == 0.0, b == x, 0, g, &mut acc);
        }
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn k1_rec<G: Fn(f64) -> [f64; 2]>(&self, x: f64, a: f64, b: f64, at0: bool, atx: bool, depth: usize, g: &G, acc: &mut [f64; 2]) {
        let len = b - a;
        let split = |acc: &mut [f64; 2]| {
            let mid = a + 0.5 * len;
            self.k1_rec(x, a, mid, at0, false, depth + 1, g, acc);
            self.k1_rec(x, mid, b, false, atx, depth + 1, g, acc);
        };
        if depth >= MAX_DEPTH {
            self.k1_plain(x, a, b, g, acc);
            return;
        }
        match (at0, atx) {
            (true, true) => split(acc),
            (true, false) => {
                if x - b >= len {
                    self.k1_left(x, b, g, acc)
                } else {
                    split(acc)
                }
            }
            (false, true) => {
                if a >= len {
                    self.k1_right(x, a, g, acc)
                } else {
                    split(acc)
                }
            }
            (false, false) => {
                if a.min(x - b) >= len {
                    self.k1_plain(x, a, b, g, acc)
                } else {
                    split(acc)
                }
            }
        }
    }

    fn k1_plain<G: Fn(f64) -> [f64; 2]>(&self, x: f64, a: f64, b: f64, g: &G, acc: &mut [f64; 2]) {
        let rule = quadrature::legendre(INTERIOR_NODES);
        let h = b - a;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = a + h * t;
            let v = w * h * self.mu_bar(r) * self.k(x - r);
            let gv = g(r);
            acc[0] += v * gv[0];
            acc[1] += v * gv[1];
        }
    }

    // [0, b], singular at r = 0 only
    fn k1_left<G: Fn(f64) -> [f64; 2]>(&self, x: f64, b: f64, g: &G, acc: &mut [f64; 2]) {
        for (c, e) in self.mu_bar.lead().singular_terms() {
            let rule = quadrature::left_power(e, END_RULE_NODES);
            let scale = b.powf(1.0 - e);
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = b * t;
                let v = w * scale * c * self.k(x - r);
                let gv = g(r);
                acc[0] += v * gv[0];
                acc[1] += v * gv[1];
            }
        }
        if self.mu_bar.has_regular_part() {
            let f = |r: f64, ch: usize| self.mu_bar.regular_value(r) * self.k(x - r) * g(r)[ch];
            for (ch, slot) in acc.iter_mut().enumerate() {
                *slot += if self.mu_bar.regular_part_is_smooth() {
                    quadrature::integrate(END_RULE_NODES, 0.0, b, |r| f(r, ch))
                } else {
                    quadrature::integrate_graded_left(INTERIOR_NODES, 0.0, b, GRADED_LEVELS, |r| f(r, ch))
                };
            }
        }
    }

    // [a, x], singular at r = x only
    fn k1_right<G: Fn(f64) -> [f64; 2]>(&self, x: f64, a: f64, g: &G, acc: &mut [f64; 2]) {
        let len = x - a;
        for (c, e) in self.k.lead().singular_terms() {
            let rule = quadrature::left_power(e, END_RULE_NODES);
            let scale = len.powf(1.0 - e);
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = len * t;
                let r = x - s;
                let v = w * scale * c * self.mu_bar(r);
                let gv = g(r);
                acc[0] += v * gv[0];
                acc[1] += v * gv[1];
            }
        }
        if self.k.has_regular_part() {
            let f = |s: f64, ch: usize| self.k.regular_value(s) * self.mu_bar(x - s) * g(x - s)[ch];
            for (ch, slot) in acc.iter_mut().enumerate() {
                *slot += if self.k.regular_part_is_smooth() {
                    quadrature::integrate(END_RULE_NODES, 0.0, len, |s| f(s, ch))
                } else {
                    quadrature::integrate_graded_left(INTERIOR_NODES, 0.0, len, GRADED_LEVELS, |s| f(s, ch))
                };
            }
        }
    }

    /// `(mu_bar * k)(x)`; identically 1 for an exact pair.
    pub fn convolution(&self, x: f64) -> f64 {
        self.k1_integrate(x, 0.0, x, &|_| [1.0, 0.0])[0]
    }
}

/// `max |(mu_bar * k)(x) - 1|` over the given points in (0, T].
pub fn sonine_residual(pair: &SoninePair, points: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in points {
        if !(x > 0.0 && x <= pair.horizon() * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("residual point {x} outside (0, T]")));
        }
        worst = worst.max((pair.convolution(x) - 1.0).abs());
    }
    Ok(worst)
}

/// `n` log-spaced points in (0, T] ending at T, spanning `decades` decades.
pub fn log_points(t_max: f64, n: usize, decades: f64) -> Vec<f64> {
    (0..n).map(|i| t_max * 10f64.powf(-decades * (1.0 - i as f64 / (n - 1) as f64))).collect()
}

/// `q = sup mu_bar(x) K(x)` on (0, T], refined toward the origin.
pub fn contraction_constant(pair: &SoninePair, t_max: f64) -> Result<f64> {
    let prod = |x: f64| pair.mu_bar(x) * pair.big_k(x);
    let m = 256;
    let mut q: f64 = (1..=m).map(|j| prod(t_max * (j as f64 / m as f64).powi(2))).fold(0.0, f64::max);
    let mut prev = f64::NAN;
    for j in 0..=60 {
        let v = prod(t_max * 0.5f64.powi(j));
        q = q.max(v);
        if (v - prev).abs() < 1e-10 {
            break;
        }
        prev = v;
    }
    if q >= 1.0 {
        return Err(Error::CensoringConditionViolated(q));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn stable(a: f64) -> SoninePair {
        build_pair(&BernsteinSpec::stable(a).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn stable_half_closed_forms() {
        let p = stable(0.5);
        for &x in &[0.01, 0.3, 1.0] {
            let v = 1.0 / (PI * x).sqrt();
            assert!((p.mu_bar(x) - v).abs() < 1e-13 * v);
            assert!((p.k(x) - v).abs() < 1e-13 * v);
            assert!((p.big_k(x) - 2.0 * (x / PI).sqrt()).abs() < 1e-13);
        }
        assert!((p.big_k(1.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
        assert_eq!(p.provenance(), Provenance::Analytic);
    }

    #[test]
    fn stable_sonine_identity() {
        for &a in &[0.3, 0.5, 0.7] {
            let p = stable(a);
            let r = sonine_residual(&p, &log_points(1.0, 64, 6.0)).unwrap();
            assert!(r <= 1e-8, "alpha={a}: {r:e}");
        }
    }

    // 1/(l^0.3 + l^0.7) = sum (-1)^n l^{-0.7-0.4n}, inverted term by term
    fn mixture_k_series(x: f64) -> f64 {
        (0..200).map(|n| (-1f64).powi(n) * x.powf(0.4 * n as f64 - 0.3) / gamma(0.7 + 0.4 * n as f64)).sum()
    }

    #[test]
    fn mixture_kernel_matches_series() {
        let s = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap();
        let p = build_pair(&s, 1.0).unwrap();
        assert_eq!(p.provenance(), Provenance::Inverted);
        for &x in &[1e-9, 1e-4, 0.01, 0.2, 1.0, 1.8] {
            let want = mixture_k_series(x);
            assert!((p.k(x) / want - 1.0).abs() < 1e-6, "x={x}: {} vs {want}", p.k(x));
        }
        // the leading power is within 5% only deep in the asymptotic range
        let lead = |x: f64| x.powf(-0.3) / gamma(0.7);
        assert!((p.k(1e-4) / lead(1e-4) - 1.0).abs() < 0.05);
        assert!((p.k(0.01) / lead(0.01) - 0.8158).abs() < 1e-3);
    }

    #[test]
    fn mixture_sonine_identity() {
        let s = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap();
        let p = build_pair(&s, 1.0).unwrap();
        let r = sonine_residual(&p, &log_points(1.0, 64, 6.0)).unwrap();
        assert!(r <= 1e-3, "{r:e}");
    }

    #[test]
    fn contraction_constants() {
        for i in 1..=9 {
            let a = i as f64 / 10.0;
            let q = contraction_constant(&stable(a), 1.0).unwrap();
            assert!((q - (PI * a).sin() / (PI * a)).abs() <= 1e-8);
        }
        assert!((contraction_constant(&stable(0.5), 1.0).unwrap() - std::f64::consts::FRAC_2_PI).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_spec_rejected() {
        let t = crate::bernstein::CustomTriplet {
            tail: Arc::new(|x: f64| (-x).exp()),
            density: Some(Arc::new(|x: f64| (-x).exp())),
            m0: 1.0,
            m1: 1.0,
            cm_asserted: true,
        };
        let s = BernsteinSpec::custom(t, 0.0, 0.0).unwrap();
        assert!(matches!(build_pair(&s, 1.0), Err(Error::NotAdmissible(_))));
    }
}
