//! Compound Poisson paths with small jumps replaced by drift, for a stable mixture.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::grid::GridFunction;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::simulator::{estimate_lifetime, run_paths, TruncatedPath, DEFAULT_MAX_STEPS};
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let spec = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)])?;
    let pair = build_pair(&spec, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 1024)?;
    let one = GridFunction::constant(ops.grid().clone(), 1.0);
    let series = ops.censored_integral(&one, 1e-8)?.solution.eval(1.0).unwrap();
    for eps in [1e-2, 1e-3, 1e-4] {
        let tp = TruncatedPath::new(&spec, eps, None)?;
        let paths = run_paths(10_000, 5, |rng| tp.simulate(1.0, 1e-10, 1e6, DEFAULT_MAX_STEPS, rng))?;
        let r = estimate_lifetime(&paths, false, Some(series))?;
        println!(
            "eps {eps:.0e}: rate {:>8.2} drift {:.4}  E tau = {:.4} +- {:.4} (series {series:.4}, z = {:+.2})",
            tp.rate(),
            tp.drift(),
            r.estimate,
            r.std_error,
            r.z.unwrap()
        );
    }
    Ok(())
}
