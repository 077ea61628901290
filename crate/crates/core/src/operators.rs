//! Grid realizations of the Bernstein-Riemann-Liouville integral and derivative,
//! the censored derivative, the kernel operator `K` and the censored integral.

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernel::Kernel;
use crate::laplace;
use crate::quadrature;
use crate::sonine::{contraction_constant, SoninePair};
use rayon::prelude::*;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionMode {
    /// `phi = 0` on the negative half-line.
    Killing,
    /// `phi = phi(0+)` on the negative half-line.
    Sticky,
}

/// Lower-triangular matrix stored row by row (row `i` holds columns `0..=i`).
#[derive(Debug, Clone)]
pub struct LowerTri {
    n: usize,
    data: Vec<f64>,
}

impl LowerTri {
    fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for (i, r) in rows.into_iter().enumerate() {
            debug_assert_eq!(r.len(), i + 1);
            data.extend(r);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    /// `W v`; rows in parallel, each row summed in column order.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(v).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// How a series solution was summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    /// Term by term, truncated by the reported bound.
    Series,
    /// Forward substitution in the lower-triangular discrete system (the exact sum
    /// of the discrete series), used when term-wise summation would cancel.
    ForwardSubstitution,
}

/// Result of a truncated Neumann-type series.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    pub solution: GridFunction,
    pub method: Summation,
    pub terms_used: usize,
    pub tail_bound: f64,
    /// Sup over nodes in [T/10, T] of the defining equation's defect in integral form.
    pub residual: f64,
    /// Sup over nodes in [T/10, T] of the defect in derivative form (censored derivative applied to the result).
    pub derivative_residual: f64,
}

/// Discretized operators for one pair on one grid; weight matrices are built on first use.
#[derive(Debug)]
pub struct Operators {
    pair: SoninePair,
    grid: Arc<Grid>,
    q: f64,
    mu_nodes: Vec<f64>,
    rl: OnceLock<LowerTri>,
    kop: OnceLock<LowerTri>,
    dc: OnceLock<LowerTri>,
}

const INTERIOR_NODES: usize = 10;

impl Operators {
    pub fn new(pair: &SoninePair, grid: Arc<Grid>) -> Result<Self> {
        if !grid.starts_at_zero() {
            return Err(Error::Domain("operator grids must start at x = 0".into()));
        }
        if grid.horizon() > pair.horizon() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("grid horizon {} exceeds pair horizon {}", grid.horizon(), pair.horizon())));
        }
        let q = contraction_constant(pair, grid.horizon())?;
        let mu_nodes = grid.nodes().iter().map(|&x| if x > 0.0 { pair.mu_bar(x) } else { f64::NAN }).collect();
        Ok(Self { pair: pair.clone(), grid, q, mu_nodes, rl: OnceLock::new(), kop: OnceLock::new(), dc: OnceLock::new() })
    }

    /// Graded grid with the default exponent `max(2, 1/alpha_min)`.
    pub fn graded(pair: &SoninePair, t_max: f64, m: usize) -> Result<Self> {
        let gamma = default_gamma(pair.spec());
        Self::new(pair, Arc::new(Grid::graded(t_max, m, gamma)?))
    }

    pub fn pair(&self) -> &SoninePair {
        &self.pair
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    fn check(&self, phi: &GridFunction) -> Result<()> {
        if phi.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::Domain("grid function lives on a different grid".into()));
        }
        if phi.defined_from() != 0 {
            return Err(Error::Domain("operand must be defined at every node".into()));
        }
        Ok(())
    }

    fn wrap(&self, values: Vec<f64>, defined_from: usize) -> Result<GridFunction> {
        GridFunction::with_missing(self.grid.clone(), values, defined_from)
    }

    pub fn rl_matrix(&self) -> &LowerTri {
        self.rl.get_or_init(|| rl_weights(self.pair.k_kernel(), self.grid.nodes()))
    }

    pub fn k_matrix(&self) -> &LowerTri {
        self.kop.get_or_init(|| k_weights(&self.pair, self.grid.nodes()))
    }

    pub fn dc_matrix(&self) -> &LowerTri {
        self.dc.get_or_init(|| marchaud_weights(self.pair.mu_kernel(), self.grid.nodes()))
    }

    /// `x -> int_0^x phi(x - z) k(z) dz`.
    pub fn rl_integral(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.check(phi)?;
        self.wrap(self.rl_matrix().matvec(phi.values()), 0)
    }

    /// `int_(0,x] (phi(x) - phi(x-s)) mu(ds)`; defined from node 1.
    pub fn censored_derivative(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.check(phi)?;
        self.wrap(marchaud_apply(self.dc_matrix(), phi.values()), 1)
    }

    pub fn rl_derivative(&self, phi: &GridFunction, mode: ExtensionMode) -> Result<GridFunction> {
        let mut d = self.censored_derivative(phi)?.into_values();
        let v = phi.values();
        for i in 1..d.len() {
            let base = match mode {
                ExtensionMode::Killing => v[i],
                ExtensionMode::Sticky => v[i] - v[0],
            };
            d[i] += base * self.mu_nodes[i];
        }
        self.wrap(d, 1)
    }

    /// `K phi(x) = int_0^x mu_bar(r) k(x - r) phi(r) dr`, with `K phi(0) = phi(0)`.
    pub fn apply_k(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.check(phi)?;
        self.wrap(self.k_matrix().matvec(phi.values()), 0)
    }

    /// `K^i phi` for i = 0..=n.
    pub fn k_powers(&self, phi: &GridFunction, n: usize) -> Result<Vec<GridFunction>> {
        self.check(phi)?;
        let mut out = vec![phi.clone()];
        for _ in 0..n {
            let next = self.k_matrix().matvec(out.last().unwrap().values());
            out.push(self.wrap(next, 0)?);
        }
        Ok(out)
    }

    /// Number of Neumann terms after which the tail bound `M q^{N+1}/(1-q) K(T)` drops below `tol`.
    pub fn terms_for(&self, sup: f64, tol: f64) -> (usize, f64) {
        let c = sup * self.pair.big_k(self.horizon()) / (1.0 - self.q);
        let mut n = 0usize;
        let mut bound = c * self.q;
        while bound >= tol && n < 100_000 {
            n += 1;
            bound *= self.q;
        }
        (n, bound)
    }

    /// Raw values of `sum_{i<=N} K^i I g` with the certified truncation.
    pub(crate) fn censored_integral_values(&self, g: &[f64], tol: f64) -> (Vec<f64>, usize, f64) {
        let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (n, bound) = self.terms_for(sup, tol);
        let mut term = self.rl_matrix().matvec(g);
        let mut sum = term.clone();
        for _ in 0..n {
            term = self.k_matrix().matvec(&term);
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        (sum, n, bound)
    }

    /// `I_c g = sum_i K^i I g`, truncated by the contraction bound.
    pub fn censored_integral(&self, g: &GridFunction, tol: f64) -> Result<SeriesSolution> {
        self.check(g)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        let (sum, n, bound) = self.censored_integral_values(g.values(), tol);
        let zeros = vec![0.0; g.values().len()];
        let residual = self.integral_defect(&sum, &zeros, 0.0, g.values());
        let derivative_residual = self.derivative_defect(&sum, &zeros, 0.0, g.values());
        Ok(SeriesSolution { solution: self.wrap(sum, 0)?, method: Summation::Series, terms_used: n, tail_bound: bound, residual, derivative_residual })
    }

    /// Solves `psi = I(lambda (psi + phi0) + g) + K psi` with `psi(0) = 0` by forward
    /// substitution on the first `n` nodes and returns `phi = psi + phi0`. This is the
    /// exact discrete limit of the Neumann series in `K` and in `lambda`.
    pub fn volterra_solve(&self, lam: f64, phi0: f64, g: &[f64], n: usize) -> Result<Vec<f64>> {
        let (r, k) = (self.rl_matrix(), self.k_matrix());
        let mut psi = vec![0.0; n];
        for i in 1..n {
            let (ri, ki) = (r.row(i), k.row(i));
            let mut s = 0.0;
            for j in 0..i {
                s += (lam * ri[j] + ki[j]) * psi[j] + ri[j] * (lam * phi0 + g[j]);
            }
            s += ri[i] * (lam * phi0 + g[i]);
            let d = 1.0 - ki[i] - lam * ri[i];
            if !(d.abs() > 1e-300) || !s.is_finite() {
                return Err(Error::Numerics(format!("singular Volterra step at node {i}")));
            }
            psi[i] = s / d;
        }
        Ok(psi.into_iter().map(|v| v + phi0).collect())
    }

    pub(crate) fn interior_start(&self) -> usize {
        self.grid.first_at_or_above(self.horizon() / 10.0).max(1)
    }

    /// `sup |psi - I(lambda phi + g) - K psi|` with `psi = phi - phi0` on nodes in [T/10, T].
    pub(crate) fn integral_defect(&self, phi: &[f64], lam_phi: &[f64], phi0: f64, g: &[f64]) -> f64 {
        let psi: Vec<f64> = phi.iter().map(|v| v - phi0).collect();
        let rhs: Vec<f64> = lam_phi.iter().zip(g).map(|(a, b)| a + b).collect();
        let ig = self.rl_matrix().matvec(&rhs);
        let kpsi = self.k_matrix().matvec(&psi);
        (self.interior_start()..psi.len()).map(|i| (psi[i] - ig[i] - kpsi[i]).abs()).fold(0.0, f64::max)
    }

    /// `sup |D_c phi - lambda phi - g|` on nodes in [T/10, T].
    pub(crate) fn derivative_defect(&self, phi: &[f64], lam_phi: &[f64], _phi0: f64, g: &[f64]) -> f64 {
        let d = marchaud_apply(self.dc_matrix(), phi);
        (self.interior_start()..phi.len()).map(|i| (d[i] - lam_phi[i] - g[i]).abs()).fold(0.0, f64::max)
    }
}

pub fn default_gamma(spec: &BernsteinSpec) -> f64 {
    match spec.alpha_range() {
        Some((lo, _)) => (1.0 / lo).max(2.0),
        None => 2.0,
    }
}

fn marchaud_apply(w: &LowerTri, v: &[f64]) -> Vec<f64> {
    (0..w.dim())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return f64::NAN;
            }
            let vi = v[i];
            w.row(i)[..i].iter().zip(&v[..i]).map(|(wij, vj)| wij * (vi - vj)).sum()
        })
        .collect()
}

// rows of the product-integration weights for int_0^{x_i} phi(t) k(x_i - t) dt
fn rl_weights(k: &Kernel, x: &[f64]) -> LowerTri {
    let exact = !k.has_remainder();
    let rows = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; i + 1];
            let xi = x[i];
            for j in 0..i {
                let h = x[j + 1] - x[j];
                let (lo, hi) = (xi - x[j + 1], xi - x[j]);
                // rho = (hi - s)/h is the weight of node j+1
                let (wj, wj1) = if exact || lo < h {
                    let mass = k.integral_between(lo, hi);
                    let first = (hi * mass - k.moment_between(lo, hi)) / h;
                    (mass - first, first)
                } else {
                    let rule = quadrature::legendre(INTERIOR_NODES);
                    let (mut a, mut b) = (0.0, 0.0);
                    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                        let s = lo + h * t;
                        let kv = w * h * k.value(s);
                        let rho = (hi - s) / h;
                        a += kv * (1.0 - rho);
                        b += kv * rho;
                    }
                    (a, b)
                };
                row[j] += wj;
                row[j + 1] += wj1;
            }
            row
        })
        .collect();
    LowerTri::from_rows(rows)
}

fn k_weights(pair: &SoninePair, x: &[f64]) -> LowerTri {
    let rows = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; i + 1];
            if i == 0 {
                row[0] = 1.0;
                return row;
            }
            let xi = x[i];
            for j in 0..i {
                let (a, b) = (x[j], x[j + 1]);
                let h = b - a;
                let w = pair.k1_integrate(xi, a, b, &|r| {
                    let rho = (r - a) / h;
                    [1.0 - rho, rho]
                });
                row[j] += w[0];
                row[j + 1] += w[1];
            }
            row
        })
        .collect();
    LowerTri::from_rows(rows)
}

// W_ij with D_c phi(x_i) = sum_{j<i} W_ij (phi_i - phi_j); exact for piecewise-linear phi
fn marchaud_weights(mu: &Kernel, x: &[f64]) -> LowerTri {
    let rows = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; i + 1];
            if i == 0 {
                return row;
            }
            let xi = x[i];
            // last cell: phi_i - phi(t) = (phi_i - phi_{i-1}) s/h
            let h = xi - x[i - 1];
            row[i - 1] += (mu.integral(h) - h * mu.value(h)) / h;
            for j in 0..i - 1 {
                let h = x[j + 1] - x[j];
                let (lo, hi) = (xi - x[j + 1], xi - x[j]);
                let (mlo, mhi) = (mu.value(lo), mu.value(hi));
                let mass = mlo - mhi;
                let first_moment = lo * mlo - hi * mhi + mu.integral_between(lo, hi);
                let b = (hi * mass - first_moment) / h;
                row[j] += mass - b;
                row[j + 1] += b;
            }
            row
        })
        .collect();
    LowerTri::from_rows(rows)
}

/// Killing-extension derivative for an arbitrary tail kernel (used for Yosida approximants).
pub fn rl_derivative_with_tail(tail: &Kernel, phi: &GridFunction) -> Result<GridFunction> {
    if !phi.grid().starts_at_zero() {
        return Err(Error::Domain("grid must start at x = 0".into()));
    }
    let x = phi.nodes();
    let w = marchaud_weights(tail, x);
    let mut d = marchaud_apply(&w, phi.values());
    for i in 1..d.len() {
        d[i] += phi.values()[i] * tail.value(x[i]);
    }
    GridFunction::with_missing(phi.grid().clone(), d, 1)
}

/// Outcome of a Laplace symbol check.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCheck {
    pub max_rel_error: f64,
    pub checked: Vec<f64>,
    pub skipped: Vec<f64>,
}

/// `max_l |L[D phi](l) - f(l) L[phi](l)| / |f(l) L[phi](l)|` over the given `l`.
/// A `l` is skipped when the truncation tail `|phi|_inf e^{-l T}/l` exceeds `trunc_tol` relative.
pub fn symbol_check(spec: &BernsteinSpec, ops: &Operators, phi: &GridFunction, lambdas: &[f64], trunc_tol: f64) -> Result<SymbolCheck> {
    let d = ops.rl_derivative(phi, ExtensionMode::Killing)?;
    let sup = phi.sup_norm();
    let t = ops.horizon();
    let mut out = SymbolCheck { max_rel_error: 0.0, checked: vec![], skipped: vec![] };
    for &l in lambdas {
        let rhs = spec.eval(l)? * laplace::forward(phi, l)?;
        let lhs = laplace::forward(&d, l)?;
        if sup == 0.0 {
            out.checked.push(l);
            continue;
        }
        if sup * (-l * t).exp() / l > trunc_tol * rhs.abs() {
            out.skipped.push(l);
            continue;
        }
        out.checked.push(l);
        out.max_rel_error = out.max_rel_error.max((lhs - rhs).abs() / rhs.abs());
    }
    Ok(out)
}

/// One-shot helpers building a throwaway [`Operators`] on `phi`'s grid.
pub fn rl_integral(pair: &SoninePair, phi: &GridFunction) -> Result<GridFunction> {
    Operators::new(pair, phi.grid().clone())?.rl_integral(phi)
}

pub fn rl_derivative(pair: &SoninePair, phi: &GridFunction, mode: ExtensionMode) -> Result<GridFunction> {
    if !phi.grid().starts_at_zero() {
        return Err(match mode {
            ExtensionMode::Sticky => Error::MissingBoundary,
            ExtensionMode::Killing => Error::Domain("grid must start at x = 0".into()),
        });
    }
    Operators::new(pair, phi.grid().clone())?.rl_derivative(phi, mode)
}

pub fn censored_derivative(pair: &SoninePair, phi: &GridFunction) -> Result<GridFunction> {
    Operators::new(pair, phi.grid().clone())?.censored_derivative(phi)
}

pub fn apply_k(pair: &SoninePair, phi: &GridFunction) -> Result<GridFunction> {
    Operators::new(pair, phi.grid().clone())?.apply_k(phi)
}

pub fn censored_integral(pair: &SoninePair, g: &GridFunction, tol: f64) -> Result<SeriesSolution> {
    Operators::new(pair, g.grid().clone())?.censored_integral(g, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sonine::{build_pair, yosida_tail};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn stable_ops(alpha: f64, t: f64, m: usize) -> Operators {
        let pair = build_pair(&BernsteinSpec::stable(alpha).unwrap(), t).unwrap();
        Operators::graded(&pair, t, m).unwrap()
    }

    fn at(f: &GridFunction, x: f64) -> f64 {
        f.value(f.grid().index_of(x).unwrap()).unwrap()
    }

    #[test]
    fn rl_integral_examples() {
        let ops = stable_ops(0.5, 1.0, 256);
        let g = ops.grid().clone();
        let one = ops.rl_integral(&GridFunction::constant(g.clone(), 1.0)).unwrap();
        assert!((at(&one, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-12);
        assert_eq!(one.values()[0], 0.0);
        let zero = ops.rl_integral(&GridFunction::constant(g.clone(), 0.0)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let ops = stable_ops(0.5, 1.0, 1024);
        let r = ops.rl_integral(&GridFunction::from_fn(ops.grid().clone(), f64::sqrt)).unwrap();
        assert!((at(&r, 1.0) - PI.sqrt() / 2.0).abs() < 1e-5, "{}", at(&r, 1.0));
    }

    #[test]
    fn derivative_examples() {
        let ops = stable_ops(0.5, 4.0, 256);
        let g = ops.grid().clone();
        let c = GridFunction::constant(g.clone(), 3.0);
        let dk = ops.rl_derivative(&c, ExtensionMode::Killing).unwrap();
        let ds = ops.rl_derivative(&c, ExtensionMode::Sticky).unwrap();
        for i in 1..g.len() {
            let x = g.nodes()[i];
            assert!((dk.values()[i] - 3.0 * ops.pair().mu_bar(x)).abs() < 1e-12 * dk.values()[i].abs());
            assert_eq!(ds.values()[i], 0.0);
        }
        assert!(dk.value(0).is_none());
        assert_eq!(ops.censored_derivative(&c).unwrap().sup_norm(), 0.0);
        let id = GridFunction::from_fn(g.clone(), |x| x);
        let d = ops.rl_derivative(&id, ExtensionMode::Killing).unwrap();
        assert!((at(&d, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-10);
        let dc = ops.censored_derivative(&id).unwrap();
        assert!((at(&dc, 1.0) - 1.0 / PI.sqrt()).abs() < 1e-10);
        assert!((at(&dc, 4.0) - (4.0 / PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sticky_needs_origin() {
        let pair = build_pair(&BernsteinSpec::stable(0.5).unwrap(), 1.0).unwrap();
        let nodes: Vec<f64> = (1..=16).map(|j| j as f64 / 16.0).collect();
        let phi = GridFunction::constant(Arc::new(Grid::from_nodes(nodes).unwrap()), 1.0);
        assert!(matches!(rl_derivative(&pair, &phi, ExtensionMode::Sticky), Err(Error::MissingBoundary)));
    }

    #[test]
    fn k_of_one_and_big_k() {
        for alpha in [0.3, 0.5, 0.7] {
            let ops = stable_ops(alpha, 2.0, 512);
            let g = ops.grid().clone();
            let k1 = ops.apply_k(&GridFunction::constant(g.clone(), 1.0)).unwrap();
            for v in k1.values() {
                assert!((v - 1.0).abs() < 1e-6, "alpha {alpha}: {v}");
            }
            let kk = GridFunction::from_fn(g.clone(), |x| ops.pair().big_k(x));
            let r = ops.apply_k(&kk).unwrap();
            let q = (PI * alpha).sin() / (PI * alpha);
            let lo = g.first_at_or_above(0.2);
            for i in lo..g.len() {
                let want = q * kk.values()[i];
                assert!((r.values()[i] - want).abs() < 1e-3 * want, "alpha {alpha} x {}", g.nodes()[i]);
            }
        }
    }

    #[test]
    fn k_preserves_sign() {
        let ops = stable_ops(0.6, 1.0, 128);
        let phi = GridFunction::from_fn(ops.grid().clone(), |x| (10.0 * x).sin().abs());
        assert!(ops.apply_k(&phi).unwrap().min_value() >= 0.0);
    }

    #[test]
    fn censored_integral_examples() {
        let ops = stable_ops(0.5, 1.0, 1024);
        let g = ops.grid().clone();
        let s = ops.censored_integral(&GridFunction::constant(g.clone(), 1.0), 1e-8).unwrap();
        let want = (2.0 / PI.sqrt()) / (1.0 - 2.0 / PI);
        assert!((at(&s.solution, 1.0) - want).abs() < 2e-3 * want, "{}", at(&s.solution, 1.0));
        assert!(s.tail_bound < 1e-8);
        let z = ops.censored_integral(&GridFunction::constant(g.clone(), 0.0), 1e-8).unwrap();
        assert_eq!(z.terms_used, 0);
        assert_eq!(z.solution.sup_norm(), 0.0);
        let gp = GridFunction::from_fn(g.clone(), |x| 1.0 + (7.0 * x).cos());
        let s = ops.censored_integral(&gp, 1e-8).unwrap();
        let ig = ops.rl_integral(&gp).unwrap();
        for (a, b) in s.solution.values().iter().zip(ig.values()) {
            assert!(a >= b);
        }
    }

    #[test]
    fn censored_integral_matches_brute_force_terms() {
        // 30 terms of the geometric series summed directly from the closed-form K.
        let ops = stable_ops(0.5, 1.0, 1024);
        let q = 2.0 / PI;
        let brute: f64 = (0..30).map(|i| q.powi(i) * 2.0 / PI.sqrt()).sum();
        let s = ops.censored_integral(&GridFunction::constant(ops.grid().clone(), 1.0), 1e-8).unwrap();
        assert!((at(&s.solution, 1.0) - brute).abs() < 2e-3 * brute);
    }

    #[test]
    fn censored_integral_rejects_bad_tol() {
        let ops = stable_ops(0.5, 1.0, 64);
        let g = GridFunction::constant(ops.grid().clone(), 1.0);
        assert!(ops.censored_integral(&g, 0.0).is_err());
    }

    #[test]
    fn contraction_of_k_powers() {
        let ops = stable_ops(0.4, 1.0, 256);
        let g = ops.grid().clone();
        let kk: Vec<f64> = g.nodes().iter().map(|&x| ops.pair().big_k(x)).collect();
        let phi = GridFunction::from_fn(g.clone(), |x| 0.7 * ops.pair().big_k(x) * (5.0 * x).cos());
        let pw = ops.k_powers(&phi, 10).unwrap();
        for (i, p) in pw.iter().enumerate() {
            for (v, k) in p.values().iter().zip(&kk) {
                assert!(v.abs() <= 1.01 * 0.7 * ops.q().powi(i as i32) * k + 1e-15);
            }
        }
    }

    fn bump(x: f64) -> f64 {
        if x <= 0.5 || x >= 3.0 {
            0.0
        } else {
            let u = (x - 0.5) / 2.5 * 2.0 - 1.0;
            (-1.0 / (1.0 - u * u)).exp()
        }
    }

    #[test]
    fn symbol_check_bump() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let pair = build_pair(&spec, 20.0).unwrap();
        let ops = Operators::new(&pair, Arc::new(Grid::graded(20.0, 4096, 2.0).unwrap())).unwrap();
        let phi = GridFunction::from_fn(ops.grid().clone(), bump);
        let r = symbol_check(&spec, &ops, &phi, &[2.0, 4.0, 8.0], 1e-6).unwrap();
        assert_eq!(r.checked.len(), 3);
        assert!(r.max_rel_error <= 1e-3, "{}", r.max_rel_error);
    }

    #[test]
    fn symbol_check_zero_and_skip() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let ops = stable_ops(0.5, 2.0, 64);
        let z = GridFunction::constant(ops.grid().clone(), 0.0);
        let r = symbol_check(&spec, &ops, &z, &[1.0, 2.0], 1e-6).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        let one = GridFunction::constant(ops.grid().clone(), 1.0);
        let r = symbol_check(&spec, &ops, &one, &[1e-3, 50.0], 1e-6).unwrap();
        assert_eq!(r.skipped, vec![1e-3]);
        assert_eq!(r.checked, vec![50.0]);
    }

    #[test]
    fn yosida_approximants_converge() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let ops = stable_ops(0.5, 1.0, 256);
        let phi = GridFunction::from_fn(ops.grid().clone(), |x| (3.0 * x).sin() + x * x);
        let d = ops.rl_derivative(&phi, ExtensionMode::Killing).unwrap();
        let errs: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&n| {
                let t = yosida_tail(&spec, n, 1.0).unwrap();
                rl_derivative_with_tail(&t, &phi).unwrap().axpby(1.0, &d, -1.0).sup_norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-2);
    }

    #[test]
    fn left_inverse_on_smooth_input() {
        let ops = stable_ops(0.5, 1.0, 2048);
        let psi = GridFunction::from_fn(ops.grid().clone(), |x| 1.0 + x * (4.0 * x).sin());
        let back = ops.rl_derivative(&ops.rl_integral(&psi).unwrap(), ExtensionMode::Killing).unwrap();
        let lo = ops.grid().first_at_or_above(0.1);
        let err = (lo..psi.values().len()).map(|i| (back.values()[i] - psi.values()[i]).abs()).fold(0.0, f64::max);
        assert!(err <= 5e-3 * psi.sup_norm(), "{err}");
    }

    #[test]
    fn mixture_operators_normalize() {
        let spec = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap();
        let pair = build_pair(&spec, 1.0).unwrap();
        let ops = Operators::graded(&pair, 1.0, 256).unwrap();
        let k1 = ops.apply_k(&GridFunction::constant(ops.grid().clone(), 1.0)).unwrap();
        for v in &k1.values()[1..] {
            assert!((v - 1.0).abs() < 1e-3, "{v}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn killing_sticky_and_censored_identities(alpha in 0.2f64..0.9, a in -2.0f64..2.0, b in -3.0f64..3.0, w in 0.5f64..8.0) {
            let ops = stable_ops(alpha, 1.0, 64);
            let phi = GridFunction::from_fn(ops.grid().clone(), |x| a + b * (w * x).sin());
            let k = ops.rl_derivative(&phi, ExtensionMode::Killing).unwrap();
            let s = ops.rl_derivative(&phi, ExtensionMode::Sticky).unwrap();
            let c = ops.censored_derivative(&phi).unwrap();
            for i in 1..phi.values().len() {
                let mu = ops.pair().mu_bar(phi.nodes()[i]);
                let scale = 1.0 + k.values()[i].abs();
                prop_assert!((k.values()[i] - s.values()[i] - phi.values()[0] * mu).abs() <= 1e-10 * scale);
                prop_assert!((c.values()[i] + phi.values()[i] * mu - k.values()[i]).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn operators_are_linear(alpha in 0.2f64..0.9, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let ops = stable_ops(alpha, 1.0, 64);
            let g = ops.grid().clone();
            let u = GridFunction::from_fn(g.clone(), |x| x.cos());
            let v = GridFunction::from_fn(g.clone(), |x| x * x);
            let uv = u.axpby(a, &v, b);
            let lhs = ops.apply_k(&uv).unwrap();
            let rhs = ops.apply_k(&u).unwrap().axpby(a, &ops.apply_k(&v).unwrap(), b);
            prop_assert!(lhs.axpby(1.0, &rhs, -1.0).sup_norm() < 1e-12 * (1.0 + rhs.sup_norm()));
        }

        #[test]
        fn k_is_positive(alpha in 0.2f64..0.9, w in 0.5f64..20.0) {
            let ops = stable_ops(alpha, 1.0, 48);
            let phi = GridFunction::from_fn(ops.grid().clone(), |x| (w * x).sin().powi(2));
            prop_assert!(ops.apply_k(&phi).unwrap().min_value() >= 0.0);
        }
    }
}
