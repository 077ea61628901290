//! One-dimensional kernels on (0, inf) with their running integral and first moment.
//!
//! A kernel is a sum of power terms `c x^p` (handled in closed form) plus an
//! optional tabulated or user-supplied remainder.

use std::fmt;
use std::sync::Arc;

/// Sum of terms `c * x^p` with `p > -1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>,
}

impl PowerSum {
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        Self { terms }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * x.powf(p)).sum()
    }

    /// Integral over [0, x].
    pub fn integral(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * x.powf(p + 1.0) / (p + 1.0)).sum()
    }

    /// Integral of `s * value(s)` over [0, x].
    pub fn moment(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * x.powf(p + 2.0) / (p + 2.0)).sum()
    }

    /// Terms with negative exponent, as `(c, e)` for `c x^(-e)`.
    pub fn singular_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.terms.iter().filter(|t| t.1 < 0.0).map(|&(c, p)| (c, -p))
    }

    /// Sum of the terms that stay bounded at the origin.
    pub fn regular_value(&self, x: f64) -> f64 {
        self.terms.iter().filter(|t| t.1 >= 0.0).map(|&(c, p)| c * x.powf(p)).sum()
    }

    pub fn has_regular_terms(&self) -> bool {
        self.terms.iter().any(|t| t.1 >= 0.0)
    }

    /// Strength `e >= 0` of the worst singularity `x^(-e)` at the origin.
    pub fn singular_exponent(&self) -> f64 {
        self.terms.iter().map(|&(_, p)| (-p).max(0.0)).fold(0.0, f64::max)
    }
}

/// Cubic Hermite interpolant in the variable `u = ln x` on a uniform grid.
#[derive(Debug, Clone)]
pub struct LogTable {
    u0: f64,
    du: f64,
    values: Vec<f64>,
    // derivatives with respect to u
    slopes: Vec<f64>,
}

impl LogTable {
    /// Tabulates `f` on [xmin, xmax]; `df` returns `x f'(x)` (pass `None` for finite differences).
    pub fn build<F, D>(xmin: f64, xmax: f64, per_decade: usize, f: F, df: Option<D>) -> Self
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let (u0, u1) = (xmin.ln(), xmax.ln());
        let n = (((u1 - u0) / std::f64::consts::LN_10) * per_decade as f64).ceil() as usize + 1;
        let du = (u1 - u0) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| (u0 + du * i as f64).exp()).collect();
        let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let slopes = match df {
            Some(d) => xs.iter().map(|&x| d(x)).collect(),
            None => finite_slopes(&values, du),
        };
        Self { u0, du, values, slopes }
    }

    pub fn from_samples(xmin: f64, du: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        Self { u0: xmin.ln(), du, values, slopes }
    }

    pub fn xmin(&self) -> f64 {
        self.u0.exp()
    }

    pub fn xmax(&self) -> f64 {
        (self.u0 + self.du * (self.values.len() - 1) as f64).exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let u = x.ln();
        let n = self.values.len();
        let t = (u - self.u0) / self.du;
        if t <= 0.0 {
            // power-law continuation through the first node
            let (v, s) = (self.values[0], self.slopes[0]);
            if v == 0.0 {
                return 0.0;
            }
            let p = s / v;
            if p > 0.0 {
                return v * (x / self.xmin()).powf(p);
            }
            return v;
        }
        if t >= (n - 1) as f64 {
            let (v, s) = (self.values[n - 1], self.slopes[n - 1]);
            return v + s * (t - (n - 1) as f64) * self.du;
        }
        let i = (t.floor() as usize).min(n - 2);
        let r = t - i as f64;
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let (s0, s1) = (self.slopes[i] * self.du, self.slopes[i + 1] * self.du);
        let r2 = r * r;
        let r3 = r2 * r;
        (2.0 * r3 - 3.0 * r2 + 1.0) * v0 + (r3 - 2.0 * r2 + r) * s0 + (-2.0 * r3 + 3.0 * r2) * v1 + (r3 - r2) * s1
    }
}

pub(crate) fn finite_slopes(v: &[f64], du: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * du)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * du)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * du)
            }
        })
        .collect()
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pointwise evaluator of a remainder term.
#[derive(Clone)]
pub enum PointEval {
    Table(LogTable),
    Func(RealFn),
}

impl PointEval {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PointEval::Table(t) => t.eval(x),
            PointEval::Func(f) => f(x),
        }
    }
}

/// Non-power part of a kernel with tabulated running integral and moment.
#[derive(Clone)]
pub struct Remainder {
    pub value: PointEval,
    pub integral: LogTable,
    pub moment: LogTable,
}

#[derive(Clone)]
pub struct Kernel {
    lead: PowerSum,
    rem: Option<Arc<Remainder>>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("lead", &self.lead)
            .field("remainder", &self.rem.is_some())
            .finish()
    }
}

impl Kernel {
    pub fn power(lead: PowerSum) -> Self {
        Self { lead, rem: None }
    }

    pub fn with_remainder(lead: PowerSum, rem: Remainder) -> Self {
        Self { lead, rem: Some(Arc::new(rem)) }
    }

    pub fn lead(&self) -> &PowerSum {
        &self.lead
    }

    pub fn has_remainder(&self) -> bool {
        self.rem.is_some()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.lead.value(x) + self.remainder_value(x)
    }

    /// Kernel minus its singular power terms.
    pub fn regular_value(&self, x: f64) -> f64 {
        self.lead.regular_value(x) + self.remainder_value(x)
    }

    /// False when the bounded part may still be non-smooth at the origin.
    pub fn regular_part_is_smooth(&self) -> bool {
        self.rem.is_none() && self.lead.terms.iter().all(|t| t.1 < 0.0 || t.1.fract() == 0.0)
    }

    pub fn has_regular_part(&self) -> bool {
        self.rem.is_some() || self.lead.has_regular_terms()
    }

    pub fn remainder_value(&self, x: f64) -> f64 {
        self.rem.as_ref().map_or(0.0, |r| r.value.eval(x))
    }

    /// Integral over [0, x].
    pub fn integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.lead.integral(x) + self.rem.as_ref().map_or(0.0, |r| r.integral.eval(x))
    }

    /// Integral of `s * value(s)` over [0, x].
    pub fn moment(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.lead.moment(x) + self.rem.as_ref().map_or(0.0, |r| r.moment.eval(x))
    }

    pub fn singular_exponent(&self) -> f64 {
        self.lead.singular_exponent()
    }

    /// Integral over [a, b] with 0 <= a <= b.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.integral(b) - self.integral(a)
    }

    /// Integral of `s * value(s)` over [a, b].
    pub fn moment_between(&self, a: f64, b: f64) -> f64 {
        self.moment(b) - self.moment(a)
    }
}
