//! Monte Carlo estimators and Kolmogorov-Smirnov tests.

use super::chain::ChainSample;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::operators::Operators;
use crate::sonine::SoninePair;
use std::sync::Arc;

/// Sample mean with standard error, optionally scored against a reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub comparator: Option<f64>,
    pub z: Option<f64>,
}

impl EstimatorReport {
    pub fn from_values(name: impl Into<String>, values: &[f64], comparator: Option<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InsufficientData { step: 0, have: n, need: 2 });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_error = (var / n as f64).sqrt();
        let mut r = Self { name: name.into(), estimate: mean, std_error, n_paths: n, comparator: None, z: None };
        if let Some(c) = comparator {
            r = r.with_comparator(c);
        }
        Ok(r)
    }

    pub fn with_comparator(mut self, c: f64) -> Self {
        self.comparator = Some(c);
        let d = self.estimate - c;
        self.z = Some(if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        });
        self
    }

    /// `|z| <= k`; false when there is no comparator.
    pub fn within(&self, k: f64) -> bool {
        self.z.is_some_and(|z| z.abs() <= k)
    }
}

/// Kolmogorov limiting survival function `Q(t) = 2 sum (-1)^(j-1) exp(-2 j^2 t^2)`.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * t * t).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic and p-value (Stephens' finite-sample correction).
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InsufficientData { step: 0, have: 0, need: 1 });
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    Ok((d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)))
}

fn common_x0(samples: &[ChainSample]) -> Result<f64> {
    let x0 = samples.first().ok_or(Error::InsufficientData { step: 0, have: 0, need: 1 })?.x0;
    if samples.iter().any(|s| s.x0 != x0) {
        return Err(Error::Domain("samples start from different x0".into()));
    }
    Ok(x0)
}

/// `tau_inf` per path, raw or with the remaining-lifetime estimate added.
pub fn estimate_lifetime(samples: &[ChainSample], corrected: bool, comparator: Option<f64>) -> Result<EstimatorReport> {
    common_x0(samples)?;
    let v: Vec<f64> = samples.iter().map(|s| if corrected { s.tau_inf + s.remainder } else { s.tau_inf }).collect();
    EstimatorReport::from_values(if corrected { "mean_tau_inf_corrected" } else { "mean_tau_inf" }, &v, comparator)
}

/// Mean of the `n`-th waiting time (`n >= 1`) over paths that reached it.
pub fn estimate_sigma(samples: &[ChainSample], n: usize, comparator: Option<f64>) -> Result<EstimatorReport> {
    common_x0(samples)?;
    if n == 0 {
        return Err(Error::InvalidParameter("waiting times are indexed from 1".into()));
    }
    let v: Vec<f64> = samples.iter().filter_map(|s| s.sigmas.get(n - 1).copied()).collect();
    EstimatorReport::from_values(format!("mean_sigma_{n}"), &v, comparator)
}

/// `sum_n I g(S_(tau_n))` per path with `S_(tau_0) = x0`, against `I_c g(x0)` on `ops`'s grid.
pub fn estimate_occupation(ops: &Operators, samples: &[ChainSample], g: &GridFunction, tol: f64) -> Result<EstimatorReport> {
    let x0 = common_x0(samples)?;
    if x0 > ops.horizon() {
        return Err(Error::Domain(format!("x0 = {x0} beyond grid horizon {}", ops.horizon())));
    }
    let ig = ops.rl_integral(g)?;
    let eval = |y: f64| ig.eval(y).expect("defined everywhere");
    let v: Vec<f64> = samples.iter().map(|s| eval(x0) + s.positions.iter().map(|&y| eval(y)).sum::<f64>()).collect();
    let comp = ops.censored_integral(g, tol)?.solution.eval(x0).expect("defined everywhere");
    EstimatorReport::from_values("occupation", &v, Some(comp))
}

/// `E exp(-l tau_inf)` per `l`; `comparator(l)` supplies reference values if given.
pub fn estimate_lifetime_lt(
    samples: &[ChainSample],
    lambdas: &[f64],
    comparator: Option<&dyn Fn(f64) -> Result<f64>>,
) -> Result<Vec<EstimatorReport>> {
    common_x0(samples)?;
    lambdas
        .iter()
        .map(|&l| {
            let v: Vec<f64> = samples.iter().map(|s| (-l * s.tau_inf).exp()).collect();
            let c = comparator.map(|f| f(l)).transpose()?;
            EstimatorReport::from_values(format!("lifetime_lt_{l}"), &v, c)
        })
        .collect()
}

/// Minimum number of samples for [`empirical_kn_test`].
pub const KN_MIN_SAMPLES: usize = 1000;
const KN_POINTS: usize = 200;
const KN_GRID: usize = 256;

/// CDF of `S_(tau_n)` from `x0` on a grid of `z` values, computed as `(K^(n-1) F_1(., z))(x0)`
/// with `F_1(y, z) = int_0^min(y,z) k1(y, r) dr`.
pub fn kn_cdf(pair: &SoninePair, n: usize, x0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("chain steps are indexed from 1".into()));
    }
    let zs: Vec<f64> = (0..=KN_POINTS)
        .map(|i| {
            let s = i as f64 / KN_POINTS as f64;
            let (a, b) = (s.powi(3), (1.0 - s).powi(3));
            x0 * a / (a + b)
        })
        .collect();
    let f1 = |y: f64, z: f64| -> f64 {
        if y <= 0.0 || z >= y {
            return 1.0;
        }
        if z <= 0.0 {
            return 0.0;
        }
        pair.k1_integrate(y, 0.0, z, &|_| [1.0, 0.0])[0].clamp(0.0, 1.0)
    };
    let cdf = if n == 1 {
        zs.iter().map(|&z| f1(x0, z)).collect()
    } else {
        let ops = Operators::new(pair, Arc::new(Grid::graded(x0, KN_GRID, 2.0)?))?;
        let grid = ops.grid().clone();
        let mut out = Vec::with_capacity(zs.len());
        for &z in &zs {
            let phi = GridFunction::from_fn(grid.clone(), |y| f1(y, z));
            let p = ops.k_powers(&phi, n - 1)?;
            out.push(*p[n - 1].values().last().unwrap());
        }
        out
    };
    let mut cdf: Vec<f64> = cdf;
    for i in 1..cdf.len() {
        cdf[i] = cdf[i].max(cdf[i - 1]);
    }
    Ok((zs, cdf))
}

/// Two-sided KS p-value of the `n`-th censoring positions against `k_n(x0, .)`.
pub fn empirical_kn_test(samples: &[ChainSample], n: usize, pair: &SoninePair, x0: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("chain steps are indexed from 1".into()));
    }
    let v: Vec<f64> = samples.iter().filter(|s| s.x0 == x0).filter_map(|s| s.positions.get(n - 1).copied()).collect();
    if v.len() < KN_MIN_SAMPLES {
        return Err(Error::InsufficientData { step: n, have: v.len(), need: KN_MIN_SAMPLES });
    }
    let (zs, cdf) = kn_cdf(pair, n, x0)?;
    let f = |z: f64| {
        let j = zs.partition_point(|&p| p <= z);
        if j == 0 {
            return 0.0;
        }
        if j >= zs.len() {
            return 1.0;
        }
        let t = (z - zs[j - 1]) / (zs[j] - zs[j - 1]);
        cdf[j - 1] + t * (cdf[j] - cdf[j - 1])
    };
    Ok(ks_test(&v, f)?.1)
}
