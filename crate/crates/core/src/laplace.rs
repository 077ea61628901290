//! Forward Laplace transforms of grid functions and Gaver-Stehfest inversion.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use std::f64::consts::LN_2;
use std::sync::{Arc, OnceLock};

pub const DEFAULT_TERMS: usize = 14;
/// Ratio sum|V_k F_k| / |result| above which the inversion is declared unstable.
pub const CANCELLATION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    CompletelyMonotone,
    Generic,
}

type Atom = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A transform `lambda -> F(lambda)` on the positive half-line, kept as a
/// weighted sum of atoms so that inversion distributes over linear combinations.
#[derive(Clone)]
pub struct TransformEvaluator {
    atoms: Vec<(f64, Atom)>,
    pub smoothness: Smoothness,
}

impl std::fmt::Debug for TransformEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformEvaluator")
            .field("atoms", &self.atoms.len())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl TransformEvaluator {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, smoothness: Smoothness) -> Self {
        Self { atoms: vec![(1.0, Arc::new(f))], smoothness }
    }

    pub fn completely_monotone<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::new(f, Smoothness::CompletelyMonotone)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.atoms.iter().map(|(w, f)| w * f(lambda)).sum()
    }

    /// Spot check: finite and positive on a log grid over [1e-6, 1e6].
    pub fn validate(&self) -> Result<()> {
        if self.smoothness != Smoothness::CompletelyMonotone {
            return Ok(());
        }
        for i in 0..=48 {
            let l = 10f64.powf(-6.0 + 0.25 * i as f64);
            let v = self.eval(l);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("transform is {v} at lambda = {l:e}")));
            }
        }
        Ok(())
    }

    /// `a F + b G`; stays completely monotone only for nonnegative weights.
    pub fn combine(&self, a: f64, other: &TransformEvaluator, b: f64) -> Self {
        let cm = a >= 0.0
            && b >= 0.0
            && self.smoothness == Smoothness::CompletelyMonotone
            && other.smoothness == Smoothness::CompletelyMonotone;
        let atoms = self
            .atoms
            .iter()
            .map(|(w, f)| (a * w, f.clone()))
            .chain(other.atoms.iter().map(|(w, f)| (b * w, f.clone())))
            .collect();
        Self { atoms, smoothness: if cm { Smoothness::CompletelyMonotone } else { Smoothness::Generic } }
    }
}

/// Gaver-Stehfest weights for an even number of terms.
#[derive(Debug, Clone)]
pub struct GaverStehfest {
    weights: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl GaverStehfest {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) || !(4..=18).contains(&n) {
            return Err(Error::InvalidParameter(format!("Gaver-Stehfest needs an even N in 4..=18, got {n}")));
        }
        let half = n / 2;
        let mut weights = Vec::with_capacity(n);
        for k in 1..=n {
            let mut s = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                s += (j as f64).powi(half as i32) * factorial(2 * j)
                    / (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
            }
            let sign = if (k + half).is_multiple_of(2) { 1.0 } else { -1.0 };
            weights.push(sign * s);
        }
        Ok(Self { weights })
    }

    /// Shared default instance with N = 14.
    pub fn default_shared() -> &'static GaverStehfest {
        static GS: OnceLock<GaverStehfest> = OnceLock::new();
        GS.get_or_init(|| GaverStehfest::new(DEFAULT_TERMS).unwrap())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Inverse transform at `x` with cancellation monitoring.
    pub fn invert_fn<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("inversion point must be positive, got {x}")));
        }
        let a = LN_2 / x;
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            let term = w * f(a * (k + 1) as f64);
            if !term.is_finite() {
                return Err(Error::InversionUnstable { x, reason: format!("non-finite term at k = {}", k + 1) });
            }
            sum += term;
            abs += term.abs();
        }
        if abs > 0.0 && abs > CANCELLATION_LIMIT * sum.abs() {
            return Err(Error::InversionUnstable { x, reason: format!("partial sums cancel (ratio {:.1e})", abs / sum.abs()) });
        }
        Ok(a * sum)
    }
}

/// Inverse Laplace transform of a completely monotone transform at `x` (N = 14).
pub fn invert(f: &TransformEvaluator, x: f64) -> Result<f64> {
    invert_with(f, x, GaverStehfest::default_shared())
}

pub fn invert_with(f: &TransformEvaluator, x: f64, gs: &GaverStehfest) -> Result<f64> {
    if f.smoothness != Smoothness::CompletelyMonotone {
        return Err(Error::Domain("Gaver-Stehfest inversion requires a completely monotone transform".into()));
    }
    let mut s = 0.0;
    for (w, atom) in &f.atoms {
        s += w * gs.invert_fn(|l| atom(l), x)?;
    }
    Ok(s)
}

// integrals of e^{-l t} and t e^{-l t} over [0, h]
fn cell_moments(l: f64, h: f64) -> (f64, f64) {
    let z = l * h;
    if z < 1e-2 {
        // series in z avoids cancellation
        let (mut i0, mut i1) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..12 {
            i0 += term / (k + 1) as f64;
            i1 += term / (k + 2) as f64;
            term *= -z / (k + 1) as f64;
        }
        (h * i0, h * h * i1)
    } else {
        let e = (-z).exp();
        let em1 = -(-z).exp_m1();
        (em1 / l, (em1 - z * e) / (l * l))
    }
}

/// `int_0^T e^{-lambda x} phi(x) dx` for piecewise-linear `phi`; no extrapolation past T.
pub fn forward(phi: &GridFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let x = phi.nodes();
    let v = phi.values();
    let i0 = phi.defined_from();
    if x.len() < 2 || i0 + 1 >= x.len() {
        return Err(Error::Domain("forward transform needs at least one defined cell".into()));
    }
    let mut s = 0.0;
    for j in i0..x.len() - 1 {
        let h = x[j + 1] - x[j];
        let (m0, m1) = cell_moments(lambda, h);
        let slope = (v[j + 1] - v[j]) / h;
        s += (-lambda * x[j]).exp() * (v[j] * m0 + slope * m1);
    }
    Ok(s)
}

/// `int_0^inf e^{-lambda x} g(x) dx` for a function with at most an integrable
/// power singularity at 0 and no worse than polynomial growth; quadrature in `ln x`.
pub fn transform_fn<G: Fn(f64) -> f64>(g: G, lambda: f64) -> f64 {
    let lo = (1e-16 / lambda).ln();
    let hi = (60.0 / lambda).ln();
    let panels = 160;
    let du = (hi - lo) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = lo + du * p as f64;
        s += crate::quadrature::integrate(8, a, a + du, |u| {
            let x = u.exp();
            (-lambda * x).exp() * g(x) * x
        });
    }
    // piece below e^lo by the local power law
    let x0 = lo.exp();
    let (g0, g1) = (g(x0), g(2.0 * x0));
    if g0 != 0.0 && g1 / g0 > 0.0 {
        let p = (g1 / g0).log2();
        if p > -1.0 {
            s += g0 * x0 / (p + 1.0);
        }
    }
    s
}
