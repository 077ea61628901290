//! Exact censoring chain for Stable{1/2}: Monte Carlo against the series values.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::operators::Operators;
use bernstein_calculus::simulator::{estimate_lifetime, estimate_lifetime_lt, estimate_sigma, run_paths, ExactChain, DEFAULT_MAX_STEPS};
use bernstein_calculus::solvers::lifetime_laplace;
use bernstein_calculus::sonine::build_pair;

fn main() -> bernstein_calculus::Result<()> {
    let pair = build_pair(&BernsteinSpec::stable(0.5)?, 1.0)?;
    let ops = Operators::graded(&pair, 1.0, 1024)?;
    let chain = ExactChain::new(&pair, ops.q())?;
    let paths = run_paths(50_000, 1, |rng| chain.simulate(1.0, 1e-10, DEFAULT_MAX_STEPS, rng))?;

    let reports = [
        estimate_lifetime(&paths, true, Some(pair.big_k(1.0) / (1.0 - ops.q())))?,
        estimate_sigma(&paths, 1, Some(pair.big_k(1.0)))?,
        estimate_lifetime_lt(&paths, &[1.0], Some(&|l| lifetime_laplace(&ops, 1.0, l, 1e-8)))?.remove(0),
    ];
    for r in reports {
        println!("{:<24} {:.5} +- {:.5}  series {:.5}  z = {:+.2}", r.name, r.estimate, r.std_error, r.comparator.unwrap(), r.z.unwrap());
    }
    let steps: f64 = paths.iter().map(|p| p.positions.len() as f64).sum::<f64>() / paths.len() as f64;
    println!("mean number of censorings to reach 1e-10: {steps:.1}");
    Ok(())
}
