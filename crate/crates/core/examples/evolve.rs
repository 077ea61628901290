//! Implicit Euler for the censored Cauchy problem d/dt u = -D_c u.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::solvers::evolve_cauchy;
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 256)?;
    let u0 = GridFunction::from_fn(ops.grid().clone(), |x| x * x);
    let states = evolve_cauchy(&ops, &u0, 0.05, 40)?;
    for (n, u) in states.iter().enumerate().step_by(10) {
        println!("t = {:.2}: u(0.5) = {:.6}, u(1) = {:.6}, min = {:.2e}", n as f64 * 0.05, u.eval(0.5).unwrap(), u.eval(1.0).unwrap(), u.min_value());
    }
    Ok(())
}
