//! Bernstein functions `f(l) = a + b l + int (1 - e^{-l t}) mu(dt)`: evaluation,
//! conjugation, admissibility checks and conjugate-triplet classification.

use crate::error::{Error, Result};
use crate::kernel::RealFn;
use statrs::function::gamma::gamma;
use std::fmt;

/// User-supplied Levy triplet: tail `mu_bar(x) = mu(x, inf)` and optional density.
#[derive(Clone)]
pub struct CustomTriplet {
    pub tail: RealFn,
    pub density: Option<RealFn>,
    /// Total mass of mu (may be infinite).
    pub m0: f64,
    /// First moment of mu (may be infinite).
    pub m1: f64,
    /// The caller asserts that the density is completely monotone.
    pub cm_asserted: bool,
}

impl fmt::Debug for CustomTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomTriplet")
            .field("m0", &self.m0)
            .field("m1", &self.m1)
            .field("density", &self.density.is_some())
            .field("cm_asserted", &self.cm_asserted)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    Stable { alpha: f64 },
    /// Terms `(c_j, alpha_j)` of `sum c_j l^{alpha_j}`.
    StableMixture { terms: Vec<(f64, f64)> },
    CustomTriplet(CustomTriplet),
}

#[derive(Debug, Clone)]
pub struct BernsteinSpec {
    family: Family,
    a: f64,
    b: f64,
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("stable index must lie in (0,1), got {alpha}")));
        }
        Ok(Self { family: Family::Stable { alpha }, a: 0.0, b: 0.0 })
    }

    pub fn mixture(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one term".into()));
        }
        for (i, &(c, al)) in terms.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("mixture weight must be positive, got {c}")));
            }
            if !(al > 0.0 && al < 1.0) {
                return Err(Error::InvalidParameter(format!("mixture index must lie in (0,1), got {al}")));
            }
            if terms[..i].iter().any(|&(_, other)| other == al) {
                return Err(Error::InvalidParameter(format!("mixture index {al} repeated")));
            }
        }
        Ok(Self { family: Family::StableMixture { terms }, a: 0.0, b: 0.0 })
    }

    pub fn custom(triplet: CustomTriplet, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("killing and drift must be finite and nonnegative, got a={a}, b={b}")));
        }
        if !(triplet.m0 >= 0.0 && triplet.m1 >= 0.0) {
            return Err(Error::InvalidParameter("m0 and m1 must be nonnegative".into()));
        }
        Ok(Self { family: Family::CustomTriplet(triplet), a, b })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn killing(&self) -> f64 {
        self.a
    }

    pub fn drift(&self) -> f64 {
        self.b
    }

    /// Power terms `(c, alpha)` for the closed-form families.
    pub fn power_terms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.family {
            Family::Stable { alpha } => Some(vec![(1.0, *alpha)]),
            Family::StableMixture { terms } => Some(terms.clone()),
            Family::CustomTriplet(_) => None,
        }
    }

    pub fn is_stable(&self) -> Option<f64> {
        match self.family {
            Family::Stable { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Smallest and largest stable index (closed-form families).
    pub fn alpha_range(&self) -> Option<(f64, f64)> {
        self.power_terms().map(|t| {
            let lo = t.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = t.iter().map(|p| p.1).fold(0.0, f64::max);
            (lo, hi)
        })
    }

    /// Tail `mu_bar(x) = mu(x, inf)`.
    pub fn tail(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { alpha } => x.powf(-alpha) / gamma(1.0 - alpha),
            Family::StableMixture { terms } => terms.iter().map(|&(c, al)| c * x.powf(-al) / gamma(1.0 - al)).sum(),
            Family::CustomTriplet(t) => (t.tail)(x),
        }
    }

    /// Density `m = -mu_bar'` if known.
    pub fn density(&self, x: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some(alpha * x.powf(-alpha - 1.0) / gamma(1.0 - alpha)),
            Family::StableMixture { terms } => {
                Some(terms.iter().map(|&(c, al)| c * al * x.powf(-al - 1.0) / gamma(1.0 - al)).sum())
            }
            Family::CustomTriplet(t) => t.density.as_ref().map(|m| m(x)),
        }
    }

    /// `(m0, m1)`: total mass and first moment of the Levy measure.
    pub fn moments(&self) -> (f64, f64) {
        match &self.family {
            Family::CustomTriplet(t) => (t.m0, t.m1),
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// `f(l)`.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) || lambda.is_nan() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(self.eval_unchecked(lambda))
    }

    pub(crate) fn eval_unchecked(&self, lambda: f64) -> f64 {
        let lm = match &self.family {
            Family::Stable { alpha } => lambda.powf(*alpha),
            Family::StableMixture { terms } => terms.iter().map(|&(c, al)| c * lambda.powf(al)).sum(),
            Family::CustomTriplet(t) => {
                let tail = t.tail.clone();
                lambda * crate::laplace::transform_fn(move |x| tail(x), lambda)
            }
        };
        self.a + self.b * lambda + lm
    }

    /// Conjugate `f*(l) = l / f(l)`.
    pub fn conjugate_eval(&self, lambda: f64) -> Result<f64> {
        let f = self.eval(lambda)?;
        if !(f > 0.0) || !f.is_normal() {
            return Err(Error::SingularConjugate(lambda));
        }
        Ok(lambda / f)
    }

    /// Yosida approximant `f_n = n f / (n + f)`.
    pub fn yosida_approx(&self, n: u64) -> Result<Yosida> {
        if n == 0 {
            return Err(Error::InvalidParameter("Yosida index must be at least 1".into()));
        }
        Ok(Yosida { spec: self.clone(), n: n as f64 })
    }

    /// Numerical check of the admissibility assumptions.
    pub fn check_assumptions(&self) -> AssumptionReport {
        let f = |l: f64| self.eval_unchecked(l);
        let f0_limit = extrapolated_limit(f, 1e-8, 2.0);
        let f_over_x_at_0 = extrapolated_limit(|l| f(l) / l, 1e-8, 2.0);
        let f_over_x_at_inf = extrapolated_limit(|l| f(l) / l, 1e8, 0.5);
        let f_at_inf = extrapolated_limit(f, 1e8, 0.5);
        let scale = f(1.0).abs().max(1.0);
        let mut notes = Vec::new();
        let c1 = f0_limit.abs() <= 1e-6 * scale;
        if !c1 {
            notes.push(format!("f(0+) = {f0_limit:e} is not 0"));
        }
        let c2 = f_over_x_at_0 == f64::INFINITY;
        if !c2 {
            notes.push(format!("f(x)/x at 0 tends to {f_over_x_at_0:e}, not infinity"));
        }
        let c3 = f_over_x_at_inf.abs() <= 1e-6 * scale;
        if !c3 {
            notes.push(format!("f(x)/x at infinity tends to {f_over_x_at_inf:e}, not 0"));
        }
        let c4 = f_at_inf == f64::INFINITY;
        if !c4 {
            notes.push(format!("f at infinity tends to {f_at_inf:e}, not infinity"));
        }
        let a2_pass = match &self.family {
            Family::CustomTriplet(t) => {
                let ok = t.cm_asserted && t.density.as_ref().is_some_and(|m| density_spot_check(m.as_ref()));
                if !ok {
                    notes.push("complete monotonicity of the density not asserted or spot check failed".into());
                }
                ok
            }
            _ => true,
        };
        AssumptionReport {
            f0_limit,
            f_over_x_at_0,
            f_over_x_at_inf,
            f_at_inf,
            a1_pass: c1 && c2 && c3 && c4,
            a2_pass,
            notes: notes.join("; "),
        }
    }

    /// Table-1 classification of the conjugate triplet of this spec.
    pub fn classify(&self) -> Result<ConjugateClassification> {
        let (m0, m1) = self.moments();
        classify_conjugate(self.a, self.b, m0, m1)
    }

    /// Parses the flat `key=value` form (`family=stable alpha=0.5`, `family=mixture terms=1:0.3,1:0.7`).
    /// Entries are separated by newlines or whitespace; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut family: Option<(usize, String)> = None;
        let mut alpha: Option<(usize, f64)> = None;
        let mut terms: Option<(usize, Vec<(f64, f64)>)> = None;
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let content = line.split('#').next().unwrap_or("");
            for tok in content.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| Error::Config { line: line_no, msg: format!("expected key=value, got {tok:?}") })?;
                let bad = |msg: String| Error::Config { line: line_no, msg };
                match k {
                    "family" => family = Some((line_no, v.to_string())),
                    "alpha" => alpha = Some((line_no, v.parse().map_err(|_| bad(format!("alpha: cannot parse {v:?}")))?)),
                    "terms" => {
                        let mut out = Vec::new();
                        for t in v.split(',') {
                            let (c, a) = t.split_once(':').ok_or_else(|| bad(format!("term {t:?} is not c:alpha")))?;
                            let c: f64 = c.parse().map_err(|_| bad(format!("term weight {c:?}")))?;
                            let a: f64 = a.parse().map_err(|_| bad(format!("term index {a:?}")))?;
                            out.push((c, a));
                        }
                        terms = Some((line_no, out));
                    }
                    other => return Err(bad(format!("unknown key {other:?}"))),
                }
            }
        }
        let (fl, fam) = family.ok_or(Error::Config { line: 0, msg: "missing key `family`".into() })?;
        let at = |line: usize, e: Error| Error::Config { line, msg: e.to_string() };
        match fam.as_str() {
            "stable" => {
                if let Some((l, _)) = terms {
                    return Err(Error::Config { line: l, msg: "`terms` is not valid for family=stable".into() });
                }
                let (l, a) = alpha.ok_or(Error::Config { line: fl, msg: "family=stable needs `alpha`".into() })?;
                Self::stable(a).map_err(|e| at(l, e))
            }
            "mixture" => {
                if let Some((l, _)) = alpha {
                    return Err(Error::Config { line: l, msg: "`alpha` is not valid for family=mixture".into() });
                }
                let (l, t) = terms.ok_or(Error::Config { line: fl, msg: "family=mixture needs `terms`".into() })?;
                Self::mixture(t).map_err(|e| at(l, e))
            }
            other => Err(Error::Config { line: fl, msg: format!("unknown family {other:?} (expected stable or mixture)") }),
        }
    }

    /// Inverse of [`BernsteinSpec::parse`] for the closed-form families.
    pub fn to_config(&self) -> Option<String> {
        match &self.family {
            Family::Stable { alpha } => Some(format!("family=stable\nalpha={alpha}\n")),
            Family::StableMixture { terms } => {
                let t: Vec<String> = terms.iter().map(|(c, a)| format!("{c}:{a}")).collect();
                Some(format!("family=mixture\nterms={}\n", t.join(",")))
            }
            Family::CustomTriplet(_) => None,
        }
    }
}

/// Bounded Bernstein function `n f / (n + f)`.
#[derive(Debug, Clone)]
pub struct Yosida {
    spec: BernsteinSpec,
    n: f64,
}

impl Yosida {
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        let f = self.spec.eval(lambda)?;
        Ok(yosida_value(self.n, f))
    }

    pub fn n(&self) -> f64 {
        self.n
    }
}

pub(crate) fn yosida_value(n: f64, f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        n * f / (n + f)
    }
}

/// Limit of `g` at an endpoint, estimated from `g(x0), g(x0 r), ...` (9 points,
/// geometric ratio `r` pointing away from the endpoint) by Aitken extrapolation.
/// Values beyond 1e12, or differences that do not shrink toward the endpoint, count as infinite.
fn extrapolated_limit<G: Fn(f64) -> f64>(g: G, x0: f64, r: f64) -> f64 {
    let v: Vec<f64> = (0..9).map(|j| g(x0 * r.powi(j))).collect();
    if v[0].abs() > 1e12 {
        return v[0].signum() * f64::INFINITY;
    }
    let d0 = v[0] - v[1];
    let d1 = v[1] - v[2];
    if d0 == 0.0 {
        return v[0];
    }
    let ratio = d0 / d1;
    // majority of successive ratios must agree on growth toward the endpoint
    let growing = (0..6).filter(|&j| (v[j] - v[j + 1]).abs() >= (v[j + 1] - v[j + 2]).abs()).count() >= 4;
    if !ratio.is_finite() || ratio >= 1.0 || growing {
        if d0 * v[0].signum() > 0.0 {
            return v[0].signum() * f64::INFINITY;
        }
        return v[0];
    }
    // iterated Aitken on the sequence ordered toward the endpoint
    let mut seq: Vec<f64> = v.iter().rev().copied().collect();
    while seq.len() >= 3 {
        let next: Vec<f64> = seq
            .windows(3)
            .map(|w| {
                let den = w[2] - 2.0 * w[1] + w[0];
                if den == 0.0 || !den.is_finite() {
                    w[2]
                } else {
                    w[2] - (w[2] - w[1]).powi(2) / den
                }
            })
            .collect();
        seq = next;
    }
    let lim = seq[seq.len() - 1];
    if lim.abs() > 1e12 {
        lim.signum() * f64::INFINITY
    } else {
        lim
    }
}

fn density_spot_check(m: &(dyn Fn(f64) -> f64 + Send + Sync)) -> bool {
    let xs: Vec<f64> = (0..=40).map(|i| 10f64.powf(-4.0 + 0.2 * i as f64)).collect();
    let v: Vec<f64> = xs.iter().map(|&x| m(x)).collect();
    if v.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
        return false;
    }
    let decreasing = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let convex = (1..xs.len() - 1).all(|i| {
        let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
        let s0 = (v[i] - v[i - 1]) / (x1 - x0);
        let s1 = (v[i + 1] - v[i]) / (x2 - x1);
        s1 >= s0 - 1e-10 * s0.abs().max(1e-300)
    });
    decreasing && convex
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub f0_limit: f64,
    pub f_over_x_at_0: f64,
    pub f_over_x_at_inf: f64,
    pub f_at_inf: f64,
    pub a1_pass: bool,
    pub a2_pass: bool,
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateClassification {
    pub case_id: u8,
    pub a_star: f64,
    pub b_star: f64,
    pub m0: f64,
    pub m1: f64,
}

/// Killing rate and drift of the conjugate `l / f` and the row of the case table.
pub fn classify_conjugate(a: f64, b: f64, m0: f64, m1: f64) -> Result<ConjugateClassification> {
    if [a, b, m0, m1].iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::InvalidParameter("classification inputs must be nonnegative".into()));
    }
    if a == 0.0 && b == 0.0 && m0 == 0.0 {
        return Err(Error::DegenerateMeasure);
    }
    let a_star = if a > 0.0 || m1 == f64::INFINITY { 0.0 } else { 1.0 / (b + m1) };
    let b_star = if b > 0.0 || m0 == f64::INFINITY { 0.0 } else { 1.0 / (a + m0) };
    let case_id = match (a > 0.0, b > 0.0) {
        (false, false) => {
            if m1 == f64::INFINITY {
                1
            } else if m0 == f64::INFINITY {
                2
            } else {
                3
            }
        }
        (true, false) => {
            if m0 == f64::INFINITY {
                4
            } else {
                5
            }
        }
        (false, true) => {
            if m1 == f64::INFINITY {
                6
            } else {
                7
            }
        }
        (true, true) => 8,
    };
    Ok(ConjugateClassification { case_id, a_star, b_star, m0, m1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn mix() -> BernsteinSpec {
        BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let s = BernsteinSpec::stable(0.5).unwrap();
        assert!((s.eval(4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((s.eval(2.0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((mix().eval(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(s.eval(0.0).is_err());
        assert!(s.eval(-1.0).is_err());
    }

    #[test]
    fn conjugates() {
        let s = BernsteinSpec::stable(0.5).unwrap();
        assert!((s.conjugate_eval(4.0).unwrap() - 2.0).abs() < 1e-15);
        for &al in &[0.2, 0.45, 0.8] {
            let s = BernsteinSpec::stable(al).unwrap();
            for &l in &[0.01, 1.0, 37.0] {
                let c = s.conjugate_eval(l).unwrap();
                assert!((c / l.powf(1.0 - al) - 1.0).abs() < 1e-14);
            }
        }
        assert!((mix().conjugate_eval(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(BernsteinSpec::stable(1.0).is_err());
        assert!(BernsteinSpec::stable(0.0).is_err());
        assert!(BernsteinSpec::mixture(vec![(1.0, 0.3), (2.0, 0.3)]).is_err());
        assert!(BernsteinSpec::mixture(vec![(0.0, 0.3)]).is_err());
        assert!(BernsteinSpec::mixture(vec![]).is_err());
    }

    #[test]
    fn assumptions_for_builtin_families() {
        let r = BernsteinSpec::stable(0.5).unwrap().check_assumptions();
        assert!(r.a1_pass && r.a2_pass, "{r:?}");
        let r = mix().check_assumptions();
        assert!(r.a1_pass && r.a2_pass, "{r:?}");
        for &al in &[0.05, 0.95] {
            assert!(BernsteinSpec::stable(al).unwrap().check_assumptions().a1_pass);
        }
    }

    fn exp_triplet() -> CustomTriplet {
        // mu(dt) = e^{-t} dt: f(l) = l/(1+l), m0 = 1, m1 = 1
        CustomTriplet {
            tail: Arc::new(|x: f64| (-x).exp()),
            density: Some(Arc::new(|x: f64| (-x).exp())),
            m0: 1.0,
            m1: 1.0,
            cm_asserted: true,
        }
    }

    #[test]
    fn custom_triplet_eval_and_assumptions() {
        let s = BernsteinSpec::custom(exp_triplet(), 0.0, 0.0).unwrap();
        for &l in &[0.1, 1.0, 10.0] {
            assert!((s.eval(l).unwrap() - l / (1.0 + l)).abs() < 1e-10);
        }
        let r = s.check_assumptions();
        assert!(!r.a1_pass && r.a2_pass);
        let with_drift = BernsteinSpec::custom(exp_triplet(), 0.0, 0.5).unwrap();
        let r = with_drift.check_assumptions();
        assert!(!r.a1_pass);
        assert!((r.f_over_x_at_inf - 0.5).abs() < 1e-6, "{r:?}");
        let unasserted = CustomTriplet { cm_asserted: false, ..exp_triplet() };
        assert!(!BernsteinSpec::custom(unasserted, 0.0, 0.0).unwrap().check_assumptions().a2_pass);
    }

    #[test]
    fn yosida_values() {
        let s = BernsteinSpec::stable(0.5).unwrap();
        assert!((s.yosida_approx(1).unwrap().eval(1.0).unwrap() - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for n in [1, 10, 100, 1000, 100000] {
            let v = s.yosida_approx(n).unwrap().eval(1.0).unwrap();
            assert!(v > prev && v < 1.0);
            prev = v;
        }
        assert!((prev - 1.0).abs() < 1e-4);
        assert_eq!(yosida_value(3.0, 0.0), 0.0);
        assert!(s.yosida_approx(0).is_err());
    }

    #[test]
    fn case_table_rows() {
        let inf = f64::INFINITY;
        let rows = [
            ((0.0, 0.0, inf, inf), (1, 0.0, 0.0)),
            ((0.0, 0.0, inf, 2.0), (2, 0.5, 0.0)),
            ((0.0, 0.0, 4.0, 2.0), (3, 0.5, 0.25)),
            ((1.0, 0.0, inf, 5.0), (4, 0.0, 0.0)),
            ((1.0, 0.0, 3.0, 7.0), (5, 0.0, 0.25)),
            ((0.0, 2.0, 1.0, inf), (6, 0.0, 0.0)),
            ((0.0, 2.0, 1.0, 2.0), (7, 0.25, 0.0)),
            ((1.0, 2.0, 3.0, 4.0), (8, 0.0, 0.0)),
        ];
        for ((a, b, m0, m1), (id, ast, bst)) in rows {
            let c = classify_conjugate(a, b, m0, m1).unwrap();
            assert_eq!((c.case_id, c.a_star, c.b_star), (id, ast, bst), "row {id}");
            assert_eq!(a * c.a_star, 0.0);
            assert_eq!(b * c.b_star, 0.0);
        }
        assert_eq!(classify_conjugate(0.0, 0.0, 0.0, 0.0), Err(Error::DegenerateMeasure));
    }

    #[test]
    fn config_round_trip() {
        let s = BernsteinSpec::parse("family=mixture\nterms=1:0.3,1:0.7\n").unwrap();
        assert_eq!(s.power_terms().unwrap(), vec![(1.0, 0.3), (1.0, 0.7)]);
        let back = BernsteinSpec::parse(&s.to_config().unwrap()).unwrap();
        assert_eq!(back.power_terms(), s.power_terms());
        let s = BernsteinSpec::parse("family=stable alpha=0.5 # comment").unwrap();
        assert_eq!(s.is_stable(), Some(0.5));
        match BernsteinSpec::parse("family=stable\nalpha=0.5\nbeta=2\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(BernsteinSpec::parse("family=stable\nalpha=1.5"), Err(Error::Config { line: 2, .. })));
        assert!(BernsteinSpec::parse("alpha=0.5").is_err());
    }
}
