//! Monte Carlo engine for the censored decreasing subordinator.

pub mod chain;
pub mod estimators;
pub mod sampling;

pub use chain::{ChainSample, ExactChain, SimMode, StopRule, TruncatedPath, DEFAULT_MAX_STEPS};
pub use estimators::{
    empirical_kn_test, estimate_lifetime, estimate_lifetime_lt, estimate_occupation, estimate_sigma, ks_test, EstimatorReport,
};
pub use sampling::{sample_first_passage, sample_stable, sample_undershoot, UndershootSampler, UndershootTable};

use crate::bernstein::BernsteinSpec;
use crate::error::Result;
use crate::sonine::{contraction_constant, SoninePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default floor relative to `x0`.
pub const DEFAULT_FLOOR_FACTOR: f64 = 1e-6;

/// Per-path generator: stream `path_id` of the ChaCha8 generator seeded with `seed`.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

/// Runs `n_paths` independent paths in parallel; results are in path order and do not
/// depend on the number of threads.
pub fn run_paths<F>(n_paths: usize, seed: u64, f: F) -> Result<Vec<ChainSample>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ChainSample> + Sync,
{
    (0..n_paths).into_par_iter().map(|i| f(&mut path_rng(seed, i as u64))).collect()
}

/// One exact-chain path for a stable pair.
pub fn simulate_chain<R: Rng + ?Sized>(pair: &SoninePair, x0: f64, floor: f64, n_max: usize, rng: &mut R) -> Result<ChainSample> {
    let q = contraction_constant(pair, pair.horizon())?;
    ExactChain::new(pair, q)?.simulate(x0, floor, n_max, rng)
}

/// One `eps`-truncated path for any admissible spec without killing.
pub fn simulate_path_truncated<R: Rng + ?Sized>(spec: &BernsteinSpec, x0: f64, eps: f64, t_horizon: f64, rng: &mut R) -> Result<ChainSample> {
    TruncatedPath::new(spec, eps, None)?.simulate(x0, DEFAULT_FLOOR_FACTOR * x0, t_horizon, DEFAULT_MAX_STEPS, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Operators;
    use crate::grid::GridFunction;
    use crate::sonine::build_pair;
    use std::f64::consts::PI;

    fn stable_pair(alpha: f64) -> SoninePair {
        build_pair(&BernsteinSpec::stable(alpha).unwrap(), 1.0).unwrap()
    }

    fn exact_paths(alpha: f64, n: usize, seed: u64, floor: f64) -> Vec<ChainSample> {
        let pair = stable_pair(alpha);
        let q = contraction_constant(&pair, 1.0).unwrap();
        let ch = ExactChain::new(&pair, q).unwrap();
        run_paths(n, seed, |r| ch.simulate(1.0, floor, DEFAULT_MAX_STEPS, r)).unwrap()
    }

    #[test]
    fn chain_structure() {
        let s = exact_paths(0.5, 2000, 1, 1e-6);
        for p in &s {
            let mut prev = p.x0;
            for &y in &p.positions {
                assert!(y > 0.0 && y < prev);
                prev = y;
            }
            assert_eq!(p.tau_inf, p.sigmas.iter().sum::<f64>());
            assert!(p.tau_inf.is_finite() && p.tau_inf < 1e6);
            assert_eq!(p.sigmas.len(), p.positions.len());
        }
        let converged = s.iter().filter(|p| p.stopped_at == StopRule::Floor && p.last_position() <= 1e-6).count();
        assert!(converged as f64 >= 0.99 * s.len() as f64);
    }

    #[test]
    fn reproducible_and_order_independent() {
        let a = exact_paths(0.5, 64, 42, 1e-6);
        let b = exact_paths(0.5, 64, 42, 1e-6);
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| exact_paths(0.5, 64, 42, 1e-6));
        assert_eq!(a, c);
        let d = exact_paths(0.5, 64, 43, 1e-6);
        assert_ne!(a, d);
    }

    #[test]
    fn mean_lifetime_and_sigmas() {
        let s = exact_paths(0.5, 20_000, 7, 1e-6);
        let k1 = 2.0 / PI.sqrt();
        let r = estimate_lifetime(&s, true, Some(k1 / (1.0 - 2.0 / PI))).unwrap();
        assert!(r.within(3.0), "{r:?}");
        let r = estimate_sigma(&s, 1, Some(k1)).unwrap();
        assert!(r.within(3.0), "{r:?}");
        let r = estimate_sigma(&s, 2, Some(2.0 / PI * k1)).unwrap();
        assert!(r.within(3.0), "{r:?}");
    }

    #[test]
    fn occupation_estimators() {
        let pair = stable_pair(0.5);
        let ops = Operators::graded(&pair, 1.0, 512).unwrap();
        let s = exact_paths(0.5, 20_000, 9, 1e-6);
        let zero = GridFunction::constant(ops.grid().clone(), 0.0);
        let r = estimate_occupation(&ops, &s, &zero, 1e-8).unwrap();
        assert_eq!(r.estimate, 0.0);
        let id = GridFunction::from_fn(ops.grid().clone(), |x| x);
        let r = estimate_occupation(&ops, &s, &id, 1e-8).unwrap();
        assert!(r.within(3.0), "{r:?}");
    }

    #[test]
    fn lifetime_transform_estimates() {
        let s = exact_paths(0.5, 5000, 4, 1e-10);
        let r = estimate_lifetime_lt(&s, &[0.0, 0.5, 1.0, 2.0], None).unwrap();
        assert_eq!(r[0].estimate, 1.0);
        for w in r.windows(2) {
            assert!(w[1].estimate <= w[0].estimate + 2.0 * w[0].std_error);
        }
    }

    #[test]
    fn kn_tests() {
        let pair = stable_pair(0.5);
        let s = exact_paths(0.5, 5000, 12, 1e-6);
        assert!(empirical_kn_test(&s, 1, &pair, 1.0).unwrap() >= 0.01);
        assert!(empirical_kn_test(&s, 2, &pair, 1.0).unwrap() >= 0.01);
        assert!(empirical_kn_test(&s[..10], 1, &pair, 1.0).is_err());
        assert!(empirical_kn_test(&s, 1, &pair, 0.5).is_err());
    }

    #[test]
    fn kn_cdf_first_step_is_arcsine() {
        let pair = stable_pair(0.5);
        let (z, f) = estimators::kn_cdf(&pair, 1, 1.0).unwrap();
        for (zi, fi) in z.iter().zip(&f) {
            assert!((fi - 2.0 / PI * zi.sqrt().asin()).abs() < 1e-6);
        }
    }

    #[test]
    fn truncated_path_tracks_exact_chain() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let tp = TruncatedPath::new(&spec, 1e-3, None).unwrap();
        // d_eps = eps^(1/2) (1/Gamma(3/2) - 1/Gamma(1/2))
        let want = 1e-3f64.sqrt() * (2.0 / PI.sqrt() - 1.0 / PI.sqrt());
        assert!((tp.drift() - want).abs() < 1e-12);
        let s = run_paths(4000, 3, |r| tp.simulate(1.0, 1e-6, 1e6, DEFAULT_MAX_STEPS, r)).unwrap();
        for p in &s {
            assert!(p.positions.iter().all(|&y| y > 0.0 && y < 1.0));
            assert!(p.converged());
            assert!((p.tau_inf - p.sigmas.iter().sum::<f64>() - p.terminal).abs() < 1e-12 * p.tau_inf.max(1.0));
        }
        let r = estimate_lifetime(&s, false, Some(3.105275)).unwrap();
        assert!((r.estimate / 3.105275 - 1.0).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn truncation_slows_first_passage() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let mut means = vec![];
        for eps in [1e-2, 1e-3, 1e-4] {
            let tp = TruncatedPath::new(&spec, eps, None).unwrap();
            let s = run_paths(4000, 77, |r| tp.simulate(1.0, 1e-6, 1e6, 1, r)).unwrap();
            means.push(estimate_sigma(&s, 1, None).unwrap());
        }
        for w in means.windows(2) {
            assert!(w[1].estimate <= w[0].estimate + 3.0 * w[0].std_error.max(w[1].std_error));
        }
    }

    #[test]
    fn path_mode_rejects_killing_and_bad_eps() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        assert!(TruncatedPath::new(&spec, 0.0, None).is_err());
        let mix = BernsteinSpec::mixture(vec![(1.0, 0.3), (1.0, 0.7)]).unwrap();
        assert!(ExactChain::new(&build_pair(&mix, 1.0).unwrap(), 0.5).is_err());
    }
}
