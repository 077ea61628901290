//! Path generators for the censored decreasing subordinator.

use super::sampling::{sample_passage_given_undershoot, UndershootSampler};
use crate::bernstein::{BernsteinSpec, Family};
use crate::error::{Error, Result};
use crate::sonine::SoninePair;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    ExactChain,
    TruncatedPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// A censoring position fell below the floor.
    Floor,
    /// The step cap was reached above the floor.
    MaxSteps,
    /// Path mode: the drift carried the path to 0 between censorings.
    Absorbed,
    /// Path mode: the time horizon was exceeded.
    Horizon,
}

/// One path of the embedded chain. `positions[i]` is `S^c` at the `(i+1)`-th censoring
/// and `sigmas[i]` the waiting time before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample {
    pub x0: f64,
    pub positions: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `sum(sigmas) + terminal`.
    pub tau_inf: f64,
    /// Path mode: time of the final run-down to 0 after the last censoring; 0 in exact mode.
    pub terminal: f64,
    /// Expected remaining lifetime from the stopping position; reported, never added.
    pub remainder: f64,
    pub stopped_at: StopRule,
    pub mode: SimMode,
}

impl ChainSample {
    pub fn last_position(&self) -> f64 {
        self.positions.last().copied().unwrap_or(self.x0)
    }

    pub fn converged(&self) -> bool {
        matches!(self.stopped_at, StopRule::Floor | StopRule::Absorbed)
    }
}

/// Default step cap.
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// Exact simulation for `Stable{alpha}`. The censoring position is drawn from `k1` and the
/// waiting time from its conditional law given the pre-jump level, so the pair
/// `(sigma, position)` has the correct joint distribution.
#[derive(Debug, Clone)]
pub struct ExactChain {
    alpha: f64,
    undershoot: UndershootSampler,
    remainder_scale: f64,
    pair: SoninePair,
}

impl ExactChain {
    pub fn new(pair: &SoninePair, q: f64) -> Result<Self> {
        let alpha = pair
            .spec()
            .is_stable()
            .ok_or_else(|| Error::InvalidParameter("exact chain mode needs a stable Bernstein function".into()))?;
        if !(q < 1.0) {
            return Err(Error::CensoringConditionViolated(q));
        }
        Ok(Self { alpha, undershoot: UndershootSampler::new(pair)?, remainder_scale: 1.0 / (1.0 - q), pair: pair.clone() })
    }

    pub fn simulate<R: Rng + ?Sized>(&self, x0: f64, floor: f64, max_steps: usize, rng: &mut R) -> Result<ChainSample> {
        if !(x0 > 0.0 && x0 <= self.pair.horizon()) {
            return Err(Error::Domain(format!("x0 = {x0} outside (0, {}]", self.pair.horizon())));
        }
        let mut positions = Vec::new();
        let mut sigmas = Vec::new();
        let mut y = x0;
        let mut tau = 0.0;
        let mut stop = StopRule::MaxSteps;
        for _ in 0..max_steps {
            let r = self.undershoot.sample(y, rng)?;
            let s = sample_passage_given_undershoot(self.alpha, y - r, rng)?;
            positions.push(r);
            sigmas.push(s);
            tau += s;
            y = r;
            if y < floor {
                stop = StopRule::Floor;
                break;
            }
        }
        Ok(ChainSample {
            x0,
            positions,
            sigmas,
            tau_inf: tau,
            terminal: 0.0,
            remainder: self.pair.big_k(y) * self.remainder_scale,
            stopped_at: stop,
            mode: SimMode::ExactChain,
        })
    }
}

enum JumpLaw {
    // (probability, alpha) per component, jumps J = eps U^(-1/alpha)
    Powers(Vec<(f64, f64)>),
    Tail,
}

/// Compound Poisson approximation: jumps of size at least `eps` at rate `mu_bar(eps)` plus
/// the drift `b + int_0^eps s mu(ds)` in place of the small jumps.
pub struct TruncatedPath {
    spec: BernsteinSpec,
    eps: f64,
    rate: f64,
    drift: f64,
    law: JumpLaw,
    remainder: Option<(SoninePair, f64)>,
}

impl std::fmt::Debug for TruncatedPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TruncatedPath").field("eps", &self.eps).field("rate", &self.rate).field("drift", &self.drift).finish()
    }
}

impl TruncatedPath {
    /// `remainder` optionally supplies a pair and its `q` for the remaining-lifetime estimate.
    pub fn new(spec: &BernsteinSpec, eps: f64, remainder: Option<(SoninePair, f64)>) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("truncation eps must be positive, got {eps}")));
        }
        if spec.killing() > 0.0 {
            return Err(Error::InvalidParameter("path mode does not simulate killing (a > 0)".into()));
        }
        let rate = spec.tail(eps);
        let (law, small) = match spec.family() {
            Family::Stable { .. } | Family::StableMixture { .. } => {
                let terms = spec.power_terms().unwrap();
                let comp: Vec<(f64, f64)> = terms.iter().map(|&(c, a)| (c * eps.powf(-a) / statrs::function::gamma::gamma(1.0 - a), a)).collect();
                let total: f64 = comp.iter().map(|c| c.0).sum();
                // int_0^eps s m(s) ds = c eps^(1-a) a / ((1-a) Gamma(1-a)) per term
                let small: f64 = terms
                    .iter()
                    .map(|&(c, a)| c * a * eps.powf(1.0 - a) / ((1.0 - a) * statrs::function::gamma::gamma(1.0 - a)))
                    .sum();
                (JumpLaw::Powers(comp.into_iter().map(|(w, a)| (w / total, a)).collect()), small)
            }
            Family::CustomTriplet(_) => {
                let tail_int = crate::quadrature::integrate_graded_left(10, 0.0, eps, 30, |s| spec.tail(s));
                (JumpLaw::Tail, tail_int - eps * rate)
            }
        };
        let drift = spec.drift() + small;
        if !(rate.is_finite() && rate > 0.0 && drift.is_finite()) {
            return Err(Error::Numerics(format!("jump rate {rate} or drift {drift} not usable at eps = {eps}")));
        }
        Ok(Self { spec: spec.clone(), eps, rate, drift, law, remainder })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    fn jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(rand::distributions::Open01);
        match &self.law {
            JumpLaw::Powers(comp) => {
                let mut pick = rng.gen::<f64>();
                let mut alpha = comp.last().unwrap().1;
                for &(p, a) in comp {
                    if pick < p {
                        alpha = a;
                        break;
                    }
                    pick -= p;
                }
                self.eps * u.powf(-1.0 / alpha)
            }
            JumpLaw::Tail => {
                // mu_bar(J) = u mu_bar(eps), bisection in log scale
                let target = u * self.rate;
                let (mut lo, mut hi) = (self.eps.ln(), self.eps.ln() + 1.0);
                while self.spec.tail(hi.exp()) > target && hi < 700.0 {
                    hi += 2.0 * (hi - lo);
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.spec.tail(mid.exp()) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (0.5 * (lo + hi)).exp()
            }
        }
    }

    pub fn simulate<R: Rng + ?Sized>(&self, x0: f64, floor: f64, t_horizon: f64, max_steps: usize, rng: &mut R) -> Result<ChainSample> {
        if !(x0 > 0.0) {
            return Err(Error::Domain(format!("x0 must be positive, got {x0}")));
        }
        let mut positions = Vec::new();
        let mut sigmas = Vec::new();
        let mut y = x0;
        let mut t = 0.0;
        let mut since = 0.0;
        let mut terminal = 0.0;
        let stop = loop {
            let e: f64 = Exp1.sample(rng);
            let w = e / self.rate;
            if self.drift > 0.0 && y <= self.drift * w {
                terminal = since + y / self.drift;
                y = 0.0;
                break StopRule::Absorbed;
            }
            y -= self.drift * w;
            t += w;
            since += w;
            if t > t_horizon {
                break StopRule::Horizon;
            }
            let j = self.jump(rng);
            if j < y {
                y -= j;
                continue;
            }
            // the jump would cross 0: discarded, the path is censored at y
            positions.push(y);
            sigmas.push(since);
            since = 0.0;
            if y < floor {
                break StopRule::Floor;
            }
            if positions.len() >= max_steps {
                break StopRule::MaxSteps;
            }
        };
        let remainder = match (&self.remainder, stop) {
            (_, StopRule::Absorbed) => 0.0,
            (Some((pair, q)), _) if y > 0.0 => pair.big_k(y.min(pair.horizon())) / (1.0 - q),
            _ => 0.0,
        };
        let tau_inf = sigmas.iter().sum::<f64>() + terminal;
        Ok(ChainSample { x0, positions, sigmas, tau_inf, terminal, remainder, stopped_at: stop, mode: SimMode::TruncatedPath })
    }
}
