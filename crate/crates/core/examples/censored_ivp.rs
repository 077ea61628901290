//! Censored initial value problems: the identity round trip and the mean lifetime.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::solvers::solve_ivp;
use bernstein_calculus::sonine::build_pair;
use std::f64::consts::PI;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 512)?;

    // D_c x = sqrt(x / pi) for alpha = 1/2
    let g = GridFunction::from_fn(ops.grid().clone(), |x| (x / PI).sqrt());
    let s = solve_ivp(&ops, &g, 0.0, 1e-8)?;
    println!("identity: terms {}, residual {:.2e}, phi(0.5) = {:.6}", s.terms_used, s.residual, s.solution.eval(0.5).unwrap());

    // D_c phi = 1 gives the mean lifetime K(x) / (1 - q)
    let one = GridFunction::constant(ops.grid().clone(), 1.0);
    let s = solve_ivp(&ops, &one, 0.0, 1e-8)?;
    for x in [0.25, 0.5, 1.0] {
        println!("E tau(x = {x}) = {:.6}  closed form {:.6}", s.solution.eval(x).unwrap(), pair.big_k(x) / (1.0 - ops.q()));
    }
    Ok(())
}
