//! Riemann-Liouville integral and the three derivatives of a test function.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::{ExtensionMode, Operators};
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 512)?;
    let phi = GridFunction::from_fn(ops.grid().clone(), |x| 1.0 + x);

    let integral = ops.rl_integral(&phi)?;
    let killing = ops.rl_derivative(&phi, ExtensionMode::Killing)?;
    let sticky = ops.rl_derivative(&phi, ExtensionMode::Sticky)?;
    let censored = ops.censored_derivative(&phi)?;
    let back = ops.rl_derivative(&integral, ExtensionMode::Killing)?;

    // for alpha = 1/2: D(1 + x) = 1/sqrt(pi x) + 2 sqrt(x/pi) with killing, 2 sqrt(x/pi) sticky
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "x", "I phi", "D_kill", "D_sticky", "D_c", "D I phi");
    for x in [0.1, 0.25, 0.5, 1.0] {
        let v = |f: &GridFunction| f.eval(x).unwrap();
        println!("{x:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}", v(&integral), v(&killing), v(&sticky), v(&censored), v(&back));
    }
    Ok(())
}
