//! Resolvent equations and the Laplace transform of the lifetime.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::solvers::{lifetime_laplace, solve_resolvent};
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 512)?;
    let g = GridFunction::from_fn(ops.grid().clone(), |x| (5.0 * x).sin());
    for lambda in [-4.0, -2.0, -0.5, 0.5, 2.0] {
        let s = solve_resolvent(&ops, lambda, &g, 1.0, 1e-6)?;
        println!(
            "lambda {lambda:>5}: {:?} terms {:>3} residual {:.2e} phi(1) = {:.6}",
            s.method,
            s.terms_used,
            s.residual,
            s.solution.eval(1.0).unwrap()
        );
    }
    for lambda in [0.25, 1.0, 4.0] {
        println!("E exp(-{lambda} tau) from x = 1: {:.6}", lifetime_laplace(&ops, 1.0, lambda, 1e-8)?);
    }
    Ok(())
}
