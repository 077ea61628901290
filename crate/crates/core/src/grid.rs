//! Graded grids on [0, T] and piecewise-linear grid functions.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Strictly increasing nodes `x_0 < ... < x_M` with `x_0 >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    gamma: f64,
}

pub const MIN_INTERVALS: usize = 8;

impl Grid {
    /// `x_j = T (j/M)^gamma`, j = 0..=M.
    pub fn graded(t: f64, m: usize, gamma: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon T must be positive, got {t}")));
        }
        if m < MIN_INTERVALS {
            return Err(Error::InvalidParameter(format!("M must be at least {MIN_INTERVALS}, got {m}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("grading exponent must be >= 1, got {gamma}")));
        }
        let mut nodes: Vec<f64> = (0..=m).map(|j| t * (j as f64 / m as f64).powf(gamma)).collect();
        nodes[m] = t;
        Ok(Self { nodes, gamma })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidParameter(format!("grid needs at least {} nodes", MIN_INTERVALS + 1)));
        }
        if nodes[0] < 0.0 || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("grid nodes must be finite and nonnegative".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        Ok(Self { nodes, gamma: 1.0 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals M.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn starts_at_zero(&self) -> bool {
        self.nodes[0] == 0.0
    }

    /// Index of the first node `>= x`.
    pub fn first_at_or_above(&self, x: f64) -> usize {
        self.nodes.partition_point(|&v| v < x)
    }

    /// Index of `x` if it is a node (up to a relative 1e-12).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.first_at_or_above(x * (1.0 - 1e-12));
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= 1e-12 * x.abs().max(1e-300)).then_some(i)
    }
}

/// Values on a grid; entries before `defined_from` are missing (NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    defined_from: usize,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        Self::with_missing(grid, values, 0)
    }

    pub fn with_missing(grid: Arc<Grid>, mut values: Vec<f64>, defined_from: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values[defined_from..].iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerics("grid function has non-finite values".into()));
        }
        for v in &mut values[..defined_from] {
            *v = f64::NAN;
        }
        Ok(Self { grid, values, defined_from })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values, defined_from: 0 }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn defined_from(&self) -> usize {
        self.defined_from
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        (i >= self.defined_from).then(|| self.values[i])
    }

    /// Linear interpolation; `None` outside [x_0, x_M] or in the missing range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.nodes();
        if x < n[self.defined_from] || x > n[n.len() - 1] {
            return None;
        }
        let i = self.grid.first_at_or_above(x);
        if n[i] == x {
            return Some(self.values[i]);
        }
        let (x0, x1) = (n[i - 1], n[i]);
        let t = (x - x0) / (x1 - x0);
        Some(self.values[i - 1] * (1.0 - t) + self.values[i] * t)
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        let values = self
            .values
            .iter()
            .zip(self.nodes())
            .enumerate()
            .map(|(i, (&v, &x))| if i < self.defined_from { f64::NAN } else { f(x, v) })
            .collect();
        Self { grid: self.grid.clone(), values, defined_from: self.defined_from }
    }

    /// Pointwise combination `a*self + b*other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid, "grids differ");
        let from = self.defined_from.max(other.defined_from);
        let values = (0..self.values.len())
            .map(|i| if i < from { f64::NAN } else { a * self.values[i] + b * other.values[i] })
            .collect();
        Self { grid: self.grid.clone(), values, defined_from: from }
    }

    /// Sup norm over defined nodes inside [lo, hi].
    pub fn sup_norm_on(&self, lo: f64, hi: f64) -> f64 {
        self.nodes()
            .iter()
            .zip(&self.values)
            .skip(self.defined_from)
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_on(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn min_value(&self) -> f64 {
        self.values[self.defined_from..].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `x,value` rows under `#` comment lines; missing values are empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "x,value")?;
        for (i, (x, v)) in self.nodes().iter().zip(&self.values).enumerate() {
            if i < self.defined_from {
                writeln!(w, "{x:.17e},")?;
            } else {
                writeln!(w, "{x:.17e},{v:.17e}")?;
            }
        }
        Ok(())
    }

    /// Reads a CSV with columns `x,value` (comment lines start with `#`).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Config { line: 1, msg: "expected header `x,value`".into() });
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config { line: i + 2, msg: e.to_string() })?;
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Config { line: i + 2, msg: format!("{s:?}: {e}") });
            xs.push(parse(&rec[0])?);
            vs.push(if rec[1].is_empty() { f64::NAN } else { parse(&rec[1])? });
        }
        let defined_from = vs.iter().position(|v| !v.is_nan()).unwrap_or(vs.len());
        let grid = Arc::new(Grid::from_nodes(xs)?);
        Self::with_missing(grid, vs, defined_from)
    }
}

/// Short hex digest of a configuration echo, used in output headers.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_grid_shape() {
        let g = Grid::graded(2.0, 16, 2.0).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.horizon(), 2.0);
        assert!((g.nodes()[8] - 0.5).abs() < 1e-15);
        assert!(Grid::graded(1.0, 4, 2.0).is_err());
    }

    #[test]
    fn rejects_unsorted_nodes() {
        let mut v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        v.swap(3, 4);
        assert!(Grid::from_nodes(v).is_err());
    }

    #[test]
    fn interpolation_and_norms() {
        let g = Arc::new(Grid::graded(1.0, 10, 1.0).unwrap());
        let f = GridFunction::from_fn(g, |x| 2.0 * x - 1.0);
        assert!((f.eval(0.35).unwrap() + 0.3).abs() < 1e-14);
        assert_eq!(f.eval(1.5), None);
        assert!((f.sup_norm() - 1.0).abs() < 1e-15);
        assert!((f.sup_norm_on(0.4, 0.6) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip_with_missing_node() {
        let g = Arc::new(Grid::graded(1.0, 8, 2.0).unwrap());
        let vals: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let f = GridFunction::with_missing(g, vals, 1).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, &["config=abc".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config=abc\nx,value\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(','));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back.defined_from(), 1);
        assert_eq!(back.values()[1..], f.values()[1..]);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("a=1"), config_hash("a=1"));
        assert_ne!(config_hash("a=1"), config_hash("a=2"));
        assert_eq!(config_hash("a").len(), 16);
    }
}
