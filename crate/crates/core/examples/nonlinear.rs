//! Windowed Picard iteration for D_c u = -u^2 + 1, u(0) = 0.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::solvers::{picard_window, solve_nonlinear};
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 256)?;
    let h = GridFunction::constant(ops.grid().clone(), 1.0);
    // u stays in [0, 2] here, where u -> -u^2 is 4-Lipschitz
    println!("initial window for L = 4: {:.4}", picard_window(&ops, 4.0));
    let s = solve_nonlinear(&ops, |u| -u.clamp(0.0, 2.0).powi(2), 4.0, &h, 0.0, 1e-8)?;
    println!("iterations {}, residual {:.2e}", s.terms_used, s.residual);
    for x in [0.1, 0.5, 1.0] {
        println!("u({x}) = {:.6}", s.solution.eval(x).unwrap());
    }
    Ok(())
}
