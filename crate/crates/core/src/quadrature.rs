//! Gauss rules on the unit interval, with optional power weights at one end.

use gauss_quad::{GaussJacobi, GaussLegendre};
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Integrates `f` against the rule's weight over [a, b] (weight rescaled to the interval).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, scale: f64, mut f: F) -> f64 {
        let h = b - a;
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(a + h * t);
        }
        s * scale
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Plain,
    Left,
    Right,
}

type Cache = Mutex<HashMap<(Kind, u64, usize), Arc<Rule>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn lookup(kind: Kind, e: f64, n: usize) -> Arc<Rule> {
    let key = (kind, e.to_bits(), n);
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(build(kind, e, n));
    cache().lock().unwrap().insert(key, rule.clone());
    rule
}

fn build(kind: Kind, e: f64, n: usize) -> Rule {
    let deg = NonZeroUsize::new(n).expect("rule needs at least one node");
    let pairs: Vec<(f64, f64)> = match kind {
        Kind::Plain => GaussLegendre::new(deg).into_node_weight_pairs().into_vec(),
        _ if e == 0.0 => GaussLegendre::new(deg).into_node_weight_pairs().into_vec(),
        Kind::Left => GaussJacobi::new(deg, 0.0.try_into().unwrap(), (-e).try_into().unwrap())
            .into_node_weight_pairs()
            .into_vec(),
        Kind::Right => GaussJacobi::new(deg, (-e).try_into().unwrap(), 0.0.try_into().unwrap())
            .into_node_weight_pairs()
            .into_vec(),
    };
    // x in [-1,1] -> t = (x+1)/2; (1 +- x)^(-e) = 2^(-e) (t or 1-t)^(-e)
    let e_eff = if kind == Kind::Plain { 0.0 } else { e };
    let scale = 2f64.powf(e_eff - 1.0);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in pairs {
        nodes.push(0.5 * (x + 1.0));
        weights.push(w * scale);
    }
    Rule { nodes, weights }
}

/// Gauss-Legendre rule with `n` nodes on [0,1].
pub fn legendre(n: usize) -> Arc<Rule> {
    lookup(Kind::Plain, 0.0, n)
}

/// Rule for integrals of t^(-e) f(t) over [0,1], e < 1.
pub fn left_power(e: f64, n: usize) -> Arc<Rule> {
    lookup(Kind::Left, e, n)
}

/// Rule for integrals of (1-t)^(-e) f(t) over [0,1], e < 1.
pub fn right_power(e: f64, n: usize) -> Arc<Rule> {
    lookup(Kind::Right, e, n)
}

/// Integral of t^(-e) f(t) over [a, b] where the singular point is `a`.
pub fn integrate_left_singular<F: FnMut(f64) -> f64>(e: f64, n: usize, a: f64, b: f64, f: F) -> f64 {
    let h = b - a;
    left_power(e, n).integrate(a, b, h.powf(1.0 - e), f)
}

/// Integral of (b-t)^(-e) f(t) over [a, b].
pub fn integrate_right_singular<F: FnMut(f64) -> f64>(e: f64, n: usize, a: f64, b: f64, f: F) -> f64 {
    let h = b - a;
    right_power(e, n).integrate(a, b, h.powf(1.0 - e), f)
}

/// Plain Gauss-Legendre integral over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, f: F) -> f64 {
    legendre(n).integrate(a, b, b - a, f)
}

/// Composite Gauss-Legendre on [a, b] refined geometrically toward `a`
/// (mildly singular integrands).
pub fn integrate_graded_left<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, levels: usize, mut f: F) -> f64 {
    let mut s = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = a + 0.5 * (hi - a);
        s += integrate(n, lo, hi, &mut f);
        hi = lo;
    }
    s + integrate(n, a, hi, &mut f)
}

/// Mirror of [`integrate_graded_left`] refined toward `b`.
pub fn integrate_graded_right<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, levels: usize, mut f: F) -> f64 {
    let mut s = 0.0;
    let mut lo = a;
    for _ in 0..levels {
        let hi = b - 0.5 * (b - lo);
        s += integrate(n, lo, hi, &mut f);
        lo = hi;
    }
    s + integrate(n, lo, b, &mut f)
}
