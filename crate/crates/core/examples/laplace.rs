//! Gaver-Stehfest inversion of k from 1/f and the symbol check L[D phi] = f L[phi].
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::{Grid, GridFunction};
use bernstein_calculus::laplace::{invert, TransformEvaluator};
use bernstein_calculus::operators::{symbol_check, Operators};
use bernstein_calculus::sonine::build_pair;
use std::sync::Arc;

fn main() -> bernstein_calculus::Result<()> {
    let spec = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)])?;
    let s = spec.clone();
    let transform = TransformEvaluator::completely_monotone(move |l| 1.0 / s.eval(l).unwrap());
    let pair = build_pair(&spec, 1.0)?;
    for x in [0.01, 0.1, 1.0] {
        println!("k({x}): inverted {:.6e}, pair {:.6e}", invert(&transform, x)?, pair.k(x));
    }

    let stable = BernsteinSpec::stable(0.5)?;
    let pair = build_pair(&stable, 20.0)?;
    let ops = Operators::new(&pair, Arc::new(Grid::graded(20.0, 4096, 2.0)?))?;
    let bump = GridFunction::from_fn(ops.grid().clone(), |x| {
        let u = (x - 0.5) / 1.25 - 1.0;
        if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }
    });
    let r = symbol_check(&stable, &ops, &bump, &[2.0, 4.0, 8.0], 1e-6)?;
    println!("symbol check: max relative error {:.2e} at {:?}", r.max_rel_error, r.checked);
    Ok(())
}
