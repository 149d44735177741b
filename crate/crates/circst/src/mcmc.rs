//! Sampler configuration and generic MCMC machinery.

use crate::{Error, Result};
use rand::Rng;

/// How many winding-number translates the discrete latent updates consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMaxPolicy {
    /// Derive from the scale of the process at hand (tail mass below 1e-8,
    /// floor 3) using a high prior quantile of the variance.
    Auto,
    /// Fixed half-width.
    Fixed(u32),
}

/// Chain length and adaptation settings.
#[derive(Debug, Clone, Copy)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Robbins-Monro step-size tuning during burn-in (frozen afterwards).
    pub adapt: bool,
    pub k_max: KMaxPolicy,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 2,
            adapt: true,
            k_max: KMaxPolicy::Auto,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if let KMaxPolicy::Fixed(k) = self.k_max {
            if k < 1 {
                return Err(Error::config("fixed k_max must be at least 1"));
            }
        }
        Ok(())
    }

    /// Number of retained draws: post-burn-in iterations at stride `thin`.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Post-adaptation acceptance rate of one Metropolis block.
#[derive(Debug, Clone)]
pub struct BlockRate {
    pub name: String,
    pub rate: f64,
}

/// Bookkeeping attached to a finished chain.
#[derive(Debug, Clone)]
pub struct ChainMeta {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub acceptance: Vec<BlockRate>,
}

/// Robbins-Monro step-size adaptation for a scalar random-walk proposal,
/// targeting a fixed acceptance rate.  The log step size moves by
/// `(accepted - target) / t^{0.6}` per proposal while adapting; the decaying
/// gain means the kernel converges and freezing it afterwards preserves the
/// stationary law.
#[derive(Debug, Clone)]
pub(crate) struct AdaptiveScale {
    log_step: f64,
    t: u64,
    frozen_proposals: u64,
    frozen_accepts: u64,
}

pub(crate) const TARGET_ACCEPTANCE: f64 = 0.30;

impl AdaptiveScale {
    pub fn new(initial_step: f64) -> Self {
        AdaptiveScale {
            log_step: initial_step.ln(),
            t: 0,
            frozen_proposals: 0,
            frozen_accepts: 0,
        }
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn record(&mut self, accepted: bool, adapting: bool) {
        if adapting {
            self.t += 1;
            let gain = (self.t as f64).powf(-0.6);
            let a = if accepted { 1.0 } else { 0.0 };
            self.log_step += gain * (a - TARGET_ACCEPTANCE);
            // Keep the step within sane bounds to survive pathological starts.
            self.log_step = self.log_step.clamp(-12.0, 6.0);
        } else {
            self.frozen_proposals += 1;
            if accepted {
                self.frozen_accepts += 1;
            }
        }
    }

    /// Acceptance rate over the post-adaptation phase (NaN if none ran).
    pub fn frozen_rate(&self) -> f64 {
        self.frozen_accepts as f64 / self.frozen_proposals as f64
    }
}

/// Metropolis accept/reject for a log acceptance ratio.
pub(crate) fn metropolis_accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    rng.gen::<f64>().ln() < log_ratio
}

/// Univariate slice sampler on (0, ∞) with stepping-out and shrinkage.
///
/// `log_f` is the unnormalized log-density; it must be finite at `x0`.
/// Returns a new point with the conditional law left invariant.
pub(crate) fn slice_sample_positive<R, F>(log_f: F, x0: f64, width: f64, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    debug_assert!(x0 > 0.0 && width > 0.0);
    let f0 = log_f(x0);
    debug_assert!(f0.is_finite());
    let level = f0 + rng.gen::<f64>().ln();
    // Place the initial window randomly around x0, clipped at 0.
    let mut left = (x0 - width * rng.gen::<f64>()).max(0.0);
    let mut right = left + width;
    // Step out until both ends are below the slice level.
    while left > 0.0 && log_f(left) > level {
        left = (left - width).max(0.0);
    }
    while log_f(right) > level {
        right += width;
    }
    // Shrink until a point inside the slice is found.
    loop {
        let cand = left + (right - left) * rng.gen::<f64>();
        if cand > 0.0 && log_f(cand) > level {
            return cand;
        }
        if cand < x0 {
            left = cand;
        } else {
            right = cand;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn config_validation() {
        assert!(McmcConfig::default().validate().is_ok());
        let bad = McmcConfig {
            burn_in: 10,
            iterations: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad_thin = McmcConfig {
            thin: 0,
            ..Default::default()
        };
        assert!(bad_thin.validate().is_err());
    }

    #[test]
    fn retained_count() {
        let c = McmcConfig::default();
        assert_eq!(c.retained(), 2500);
        let odd = McmcConfig {
            iterations: 11,
            burn_in: 4,
            thin: 3,
            ..Default::default()
        };
        // Iterations 4,7,10 are kept.
        assert_eq!(odd.retained(), 3);
    }

    #[test]
    fn adaptation_reaches_target_on_synthetic_acceptor() {
        // Accept iff step < 1: adaptation should settle the step near the
        // 30%-acceptance boundary of this artificial rule.
        let mut s = AdaptiveScale::new(5.0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20_000 {
            let accept = rng.gen::<f64>() < (-s.step()).exp();
            s.record(accept, true);
        }
        // P(accept) = exp(-step) = 0.3 at step = 1.20.
        assert_relative_eq!(s.step(), 1.204, epsilon = 0.25);
    }

    #[test]
    fn frozen_rate_counts_only_frozen_phase() {
        let mut s = AdaptiveScale::new(1.0);
        s.record(true, true);
        s.record(false, false);
        s.record(true, false);
        assert_relative_eq!(s.frozen_rate(), 0.5);
    }

    #[test]
    fn slice_sampler_matches_gamma_moments() {
        // Target: Gamma(3, 2) via its log-density; compare sample moments.
        let log_f = |x: f64| {
            if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * x.ln() - 2.0 * x
            }
        };
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut x = 1.0;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let n = 60_000;
        for _ in 0..n {
            x = slice_sample_positive(log_f, x, 1.0, &mut rng);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert_relative_eq!(mean, 1.5, epsilon = 0.03);
        assert_relative_eq!(var, 0.75, epsilon = 0.06);
    }

    #[test]
    fn slice_sampler_stays_positive_near_zero_mode() {
        let log_f = |x: f64| {
            if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                x.ln() - 20.0 * x * x
            }
        };
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut x = 0.05;
        for _ in 0..5000 {
            x = slice_sample_positive(log_f, x, 0.5, &mut rng);
            assert!(x > 0.0);
        }
    }
}
