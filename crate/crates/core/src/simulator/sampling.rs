//! Random variates: one-sided stable laws, first-passage times and the undershoot law
//! `k1(y, v) = mu_bar(v) k(y - v)`.

use crate::error::{Error, Result};
use crate::sonine::SoninePair;
use rand::distributions::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use std::f64::consts::PI;

/// Zolotarev's function: `S = (A(theta)/E)^((1-alpha)/alpha)` for `theta ~ U(0, pi)`, `E ~ Exp(1)`.
pub fn zolotarev_a(alpha: f64, theta: f64) -> f64 {
    let s = (alpha * theta).sin();
    (s / theta.sin()).powf(1.0 / (1.0 - alpha)) * ((1.0 - alpha) * theta).sin() / s
}

/// `A(0+) = alpha^(alpha/(1-alpha)) (1 - alpha)`.
pub fn zolotarev_a0(alpha: f64) -> f64 {
    alpha.powf(alpha / (1.0 - alpha)) * (1.0 - alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("stable index must lie in (0, 1), got {alpha}")))
    }
}

/// One-sided stable `S_t` with `E exp(-l S_t) = exp(-t l^alpha)` (Kanter's representation).
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, t: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("stable time must be positive, got {t}")));
    }
    let theta = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    Ok(t.powf(1.0 / alpha) * (zolotarev_a(alpha, theta) / e).powf((1.0 - alpha) / alpha))
}

/// First passage time of the stable subordinator above `y`: `(y/S_1)^alpha`.
pub fn sample_first_passage<R: Rng + ?Sized>(alpha: f64, y: f64, rng: &mut R) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParameter(format!("level must be positive, got {y}")));
    }
    let s = sample_stable(alpha, 1.0, rng)?;
    Ok((y / s).powf(alpha))
}

/// Draw from the density proportional to `v^(-alpha) p_1(v)`, where `p_1` is the unit stable
/// density. Tilting Kanter's representation turns `E` into `Gamma(2 - alpha)` and reweights
/// `theta` by `A(theta)^(alpha - 1)`, sampled by rejection since `A` increases on (0, pi).
pub fn sample_tilted_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    let a0 = zolotarev_a0(alpha);
    let gamma = Gamma::new(2.0 - alpha, 1.0).map_err(|e| Error::Numerics(e.to_string()))?;
    let theta = loop {
        let th = PI * rng.sample::<f64, _>(Open01);
        let acc = (a0 / zolotarev_a(alpha, th)).powf(1.0 - alpha);
        if rng.gen::<f64>() < acc {
            break th;
        }
    };
    let g = gamma.sample(rng);
    Ok((zolotarev_a(alpha, theta) / g).powf((1.0 - alpha) / alpha))
}

/// Passage time given the pre-passage level `z = S_(tau-)`: the conditional density in `t`
/// is proportional to `p_t(z)`, i.e. `t = (z/V)^alpha` with `V` from [`sample_tilted_stable`].
pub fn sample_passage_given_undershoot<R: Rng + ?Sized>(alpha: f64, z: f64, rng: &mut R) -> Result<f64> {
    let v = sample_tilted_stable(alpha, rng)?;
    Ok((z / v).powf(alpha))
}

/// Number of nodes in an undershoot table.
pub const UNDERSHOOT_NODES: usize = 512;
const TABLE_GRADING: f64 = 3.0;

/// Inverse-CDF table for `k1(y, .)` on (0, y), graded toward both endpoints. The end cells
/// interpolate in the local power laws `F ~ v^(1-e0)` and `1 - F ~ (y-v)^(1-e1)`.
#[derive(Debug, Clone)]
pub struct UndershootTable {
    y: f64,
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    mass: f64,
    lo_exp: f64,
    hi_exp: f64,
}

impl UndershootTable {
    pub fn build(pair: &SoninePair, y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 2.0 * pair.horizon()) {
            return Err(Error::Domain(format!("undershoot level {y} outside (0, 2T]")));
        }
        let m = UNDERSHOOT_NODES - 1;
        let nodes: Vec<f64> = (0..=m)
            .map(|j| {
                let s = j as f64 / m as f64;
                let (a, b) = (s.powf(TABLE_GRADING), (1.0 - s).powf(TABLE_GRADING));
                y * a / (a + b)
            })
            .collect();
        let mut cdf = vec![0.0; nodes.len()];
        for j in 0..m {
            let c = pair.k1_integrate(y, nodes[j], nodes[j + 1], &|_| [1.0, 0.0])[0];
            cdf[j + 1] = cdf[j] + c;
        }
        let mass = cdf[m];
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Numerics(format!("undershoot mass {mass} at y = {y}")));
        }
        for c in &mut cdf {
            *c /= mass;
        }
        cdf[m] = 1.0;
        let lo_exp = 1.0 - pair.mu_kernel().singular_exponent();
        let hi_exp = 1.0 - pair.k_kernel().singular_exponent();
        Ok(Self { y, nodes, cdf, mass, lo_exp, hi_exp })
    }

    pub fn level(&self) -> f64 {
        self.y
    }

    /// `int_0^y k1(y, v) dv` before normalization (1 for an exact pair).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let m = self.nodes.len() - 1;
        if v <= 0.0 {
            return 0.0;
        }
        if v >= self.y {
            return 1.0;
        }
        let j = self.nodes.partition_point(|&x| x <= v) - 1;
        if j == 0 {
            return self.cdf[1] * (v / self.nodes[1]).powf(self.lo_exp);
        }
        if j == m - 1 {
            let d = self.y - self.nodes[m - 1];
            return 1.0 - (1.0 - self.cdf[m - 1]) * ((self.y - v) / d).powf(self.hi_exp);
        }
        let t = (v - self.nodes[j]) / (self.nodes[j + 1] - self.nodes[j]);
        self.cdf[j] + t * (self.cdf[j + 1] - self.cdf[j])
    }

    /// Inverse CDF at `u in (0, 1)`; the result lies strictly inside (0, y) up to rounding.
    pub fn quantile(&self, u: f64) -> f64 {
        let m = self.nodes.len() - 1;
        let j = (self.cdf.partition_point(|&c| c <= u).max(1) - 1).min(m - 1);
        if j == 0 {
            return self.nodes[1] * (u / self.cdf[1]).powf(1.0 / self.lo_exp);
        }
        if j == m - 1 {
            let d = self.y - self.nodes[m - 1];
            return self.y - d * ((1.0 - u) / (1.0 - self.cdf[m - 1])).powf(1.0 / self.hi_exp);
        }
        let (c0, c1) = (self.cdf[j], self.cdf[j + 1]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.nodes[j] + t * (self.nodes[j + 1] - self.nodes[j])
    }

    /// One draw in (0, y); redrawn in the rare event that rounding lands on an endpoint.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = self.quantile(rng.sample(Open01));
            if v > 0.0 && v < self.y {
                return v;
            }
        }
    }
}

/// Undershoot sampler for one pair: a single unit table reused by scaling for
/// self-similar pairs, otherwise a table per level.
#[derive(Debug, Clone)]
pub struct UndershootSampler {
    pair: SoninePair,
    unit: Option<UndershootTable>,
}

impl UndershootSampler {
    pub fn new(pair: &SoninePair) -> Result<Self> {
        let unit = if pair.is_self_similar() { Some(UndershootTable::build(pair, pair.horizon().min(1.0))?) } else { None };
        Ok(Self { pair: pair.clone(), unit })
    }

    /// CDF of the undershoot from level `y`.
    pub fn cdf(&self, y: f64, v: f64) -> Result<f64> {
        match &self.unit {
            Some(t) => Ok(t.cdf(v / y * t.level())),
            None => Ok(UndershootTable::build(&self.pair, y)?.cdf(v)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> Result<f64> {
        match &self.unit {
            Some(t) => loop {
                let v = t.sample(rng) / t.level() * y;
                if v > 0.0 && v < y {
                    return Ok(v);
                }
            },
            None => Ok(UndershootTable::build(&self.pair, y)?.sample(rng)),
        }
    }
}

/// One draw of the undershoot `V ~ k1(y, .)` on (0, y).
pub fn sample_undershoot<R: Rng + ?Sized>(pair: &SoninePair, y: f64, rng: &mut R) -> Result<f64> {
    UndershootSampler::new(pair)?.sample(y, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinSpec;
    use crate::simulator::estimators::ks_test;
    use crate::sonine::build_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alpha in [0.3, 0.5, 0.8] {
            let s: Vec<f64> = (0..100_000).map(|_| sample_stable(alpha, 1.0, &mut rng).unwrap()).collect();
            for l in [1.0, 2.0] {
                let e: Vec<f64> = s.iter().map(|x| (-l * x).exp()).collect();
                let (m, se) = mean_se(&e);
                let want = (-f64::powf(l, alpha)).exp();
                assert!((m - want).abs() < 3.0 * se + 1e-4, "alpha {alpha} l {l}: {m} vs {want}");
            }
        }
    }

    #[test]
    fn stable_scaling_is_pathwise() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = sample_stable(0.4, 3.0, &mut a).unwrap();
            let y = sample_stable(0.4, 1.0, &mut b).unwrap();
            assert!((x - 3f64.powf(2.5) * y).abs() <= 1e-12 * x);
        }
        assert!(sample_stable(1.0, 1.0, &mut a).is_err());
    }

    #[test]
    fn first_passage_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t: Vec<f64> = (0..100_000).map(|_| sample_first_passage(0.5, 1.0, &mut rng).unwrap()).collect();
        let (m, se) = mean_se(&t);
        let want = 2.0 / PI.sqrt();
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want} ({se})");
    }

    #[test]
    fn zolotarev_a_increases() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.95] {
            let mut prev = zolotarev_a0(alpha);
            for i in 1..2000 {
                let v = zolotarev_a(alpha, PI * i as f64 / 2000.0);
                assert!(v >= prev * (1.0 - 1e-12), "alpha {alpha} i {i}");
                prev = v;
            }
            assert!((zolotarev_a(alpha, 1e-6) / zolotarev_a0(alpha) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn joint_passage_has_first_passage_marginal() {
        let alpha = 0.5;
        let pair = build_pair(&BernsteinSpec::stable(alpha).unwrap(), 1.0).unwrap();
        let us = UndershootSampler::new(&pair).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 50_000;
        let joint: Vec<f64> = (0..n)
            .map(|_| {
                let r = us.sample(1.0, &mut rng).unwrap();
                sample_passage_given_undershoot(alpha, 1.0 - r, &mut rng).unwrap()
            })
            .collect();
        // P(tau <= t) = P(S_t > 1) = P(S_1 > t^(-1/alpha)) for alpha = 1/2 where S_1 = 1/(4G), G ~ Gamma(1/2)
        let cdf = |t: f64| statrs::function::erf::erf(t / 2.0);
        let (_, p) = ks_test(&joint, cdf).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn undershoot_arcsine() {
        let pair = build_pair(&BernsteinSpec::stable(0.5).unwrap(), 2.0).unwrap();
        let t = UndershootTable::build(&pair, 2.0).unwrap();
        assert!((t.mass() - 1.0).abs() < 1e-6);
        let exact = |v: f64| 2.0 / PI * (v / 2.0).sqrt().asin();
        for i in 1..200 {
            let v = 2.0 * i as f64 / 200.0;
            assert!((t.cdf(v) - exact(v)).abs() < 1e-4, "v {v}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s: Vec<f64> = (0..100_000).map(|_| t.sample(&mut rng)).collect();
        assert!(s.iter().all(|&v| v > 0.0 && v < 2.0));
        let (d, p) = ks_test(&s, exact).unwrap();
        assert!(d <= 1.63 / (1e5f64).sqrt() && p > 0.01);
        let (m, se) = mean_se(&s);
        assert!((m - 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn self_similar_sampler_scales() {
        let pair = build_pair(&BernsteinSpec::stable(0.3).unwrap(), 1.0).unwrap();
        let us = UndershootSampler::new(&pair).unwrap();
        let direct = UndershootTable::build(&pair, 0.37).unwrap();
        for v in [1e-6, 0.01, 0.1, 0.2, 0.36] {
            assert!((us.cdf(0.37, v).unwrap() - direct.cdf(v)).abs() < 1e-6);
        }
    }

    #[test]
    fn mixture_undershoot_normalized() {
        let pair = build_pair(&BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap(), 1.0).unwrap();
        let t = UndershootTable::build(&pair, 0.8).unwrap();
        assert!((t.mass() - 1.0).abs() < 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let v = t.sample(&mut rng);
            assert!(v > 0.0 && v < 0.8);
        }
    }
}
