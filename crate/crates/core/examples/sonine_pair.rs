//! Tabulates a stable and an inverted mixture Sonine pair.
use bernstein_calculus::bernstein::BernsteinSpec;
use bernstein_calculus::sonine::{build_pair, contraction_constant, log_points, sonine_residual};

fn main() -> bernstein_calculus::Result<()> {
    for spec in [BernsteinSpec::stable(0.5)?, BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)])?] {
        let pair = build_pair(&spec, 1.0)?;
        let q = contraction_constant(&pair, 1.0)?;
        let res = sonine_residual(&pair, &log_points(1.0, 64, 12.0))?;
        println!("{} ({:?}): q = {q:.10}, sonine residual = {res:.2e}", spec.to_config().unwrap_or_default(), pair.provenance());
        println!("{:>10} {:>14} {:>14} {:>14}", "x", "mu_bar", "k", "K");
        for x in [1e-4, 1e-2, 0.1, 0.5, 1.0] {
            println!("{x:>10.1e} {:>14.6e} {:>14.6e} {:>14.6e}", pair.mu_bar(x), pair.k(x), pair.big_k(x));
        }
        println!();
    }
    Ok(())
}
