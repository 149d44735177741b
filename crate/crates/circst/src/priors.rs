//! Prior families for model parameters.
//!
//! Thin validated wrappers around the standard distributions, each exposing
//! the log-density and sampling, plus the grouped prior bundles demanded by
//! the two process models.  Hyperparameter conventions: Gamma is
//! (shape, rate), inverse gamma is (shape, scale) with density
//! `∝ x^{-shape-1} e^{-scale/x}`, normal takes a variance.

use crate::angle::Angle;
use crate::density::{self, WrappedNormalParams};
use crate::{Error, Result};
use rand::distributions::Distribution;
use rand::Rng;
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Gamma, InverseGamma, Normal};

fn invalid(name: &'static str, value: f64, constraint: &'static str) -> Error {
    Error::InvalidParam {
        name,
        value,
        constraint,
    }
}

/// Gamma prior with shape `k` and rate `r` (mean `k/r`).
#[derive(Debug, Clone, Copy)]
pub struct GammaPrior {
    shape: f64,
    rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(invalid("gamma shape", shape, "shape > 0"));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid("gamma rate", rate, "rate > 0"));
        }
        Ok(GammaPrior { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        Gamma::new(self.shape, self.rate).unwrap().ln_pdf(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, self.rate).unwrap().sample(rng)
    }
}

/// Beta prior on (0, 1).
#[derive(Debug, Clone, Copy)]
pub struct BetaPrior {
    a: f64,
    b: f64,
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("beta shape a", a, "a > 0"));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("beta shape b", b, "b > 0"));
        }
        Ok(BetaPrior { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn shapes(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        Beta::new(self.a, self.b).unwrap().ln_pdf(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.a, self.b).unwrap().sample(rng)
    }
}

/// Inverse-gamma prior with density `∝ x^{-shape-1} e^{-scale/x}`.
#[derive(Debug, Clone, Copy)]
pub struct InvGammaPrior {
    shape: f64,
    scale: f64,
}

impl InvGammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(invalid("inverse gamma shape", shape, "shape > 0"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("inverse gamma scale", scale, "scale > 0"));
        }
        Ok(InvGammaPrior { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Mean when it exists (shape > 1), else the mode — used only as a
    /// finite, representative initialization value.
    pub fn central_value(&self) -> f64 {
        if self.shape > 1.0 {
            self.scale / (self.shape - 1.0)
        } else {
            self.scale / (self.shape + 1.0)
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        InverseGamma::new(self.shape, self.scale).unwrap().ln_pdf(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        InverseGamma::new(self.shape, self.scale).unwrap().sample(rng)
    }

    /// Analytic quantile: `x` with `P(X ≤ x) = p`.
    pub fn quantile(&self, p: f64) -> f64 {
        InverseGamma::new(self.shape, self.scale)
            .unwrap()
            .inverse_cdf(p)
    }
}

/// Normal prior parameterized by mean and variance.
#[derive(Debug, Clone, Copy)]
pub struct NormalPrior {
    mean: f64,
    variance: f64,
}

impl NormalPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid("normal mean", mean, "finite"));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(invalid("normal variance", variance, "variance > 0"));
        }
        Ok(NormalPrior { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        Normal::new(self.mean, self.variance.sqrt())
            .unwrap()
            .ln_pdf(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.mean, self.variance.sqrt())
            .unwrap()
            .sample(rng)
    }
}

/// Normal prior truncated to (-1, 1), for the projected-normal correlation.
#[derive(Debug, Clone, Copy)]
pub struct TruncNormalPrior {
    mean: f64,
    variance: f64,
    /// ln of the mass the untruncated normal puts on (-1, 1).
    log_mass: f64,
}

impl TruncNormalPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid("truncated normal mean", mean, "finite"));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(invalid("truncated normal variance", variance, "variance > 0"));
        }
        let n = Normal::new(mean, variance.sqrt()).unwrap();
        let mass = n.cdf(1.0) - n.cdf(-1.0);
        if mass <= 0.0 {
            return Err(invalid(
                "truncated normal mass",
                mass,
                "positive mass on (-1, 1)",
            ));
        }
        Ok(TruncNormalPrior {
            mean,
            variance,
            log_mass: mass.ln(),
        })
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !x.is_finite() || x.abs() >= 1.0 {
            return f64::NEG_INFINITY;
        }
        Normal::new(self.mean, self.variance.sqrt())
            .unwrap()
            .ln_pdf(x)
            - self.log_mass
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = Normal::new(self.mean, self.variance.sqrt()).unwrap();
        loop {
            let x = n.sample(rng);
            if x.abs() < 1.0 {
                return x;
            }
        }
    }
}

/// Wrapped-normal prior for circular means.
#[derive(Debug, Clone, Copy)]
pub struct WrappedNormalPrior {
    params: WrappedNormalParams,
    k_max: u32,
}

impl WrappedNormalPrior {
    pub fn new(mean: Angle, variance: f64) -> Result<Self> {
        let params = WrappedNormalParams::new(mean, variance)?;
        Ok(WrappedNormalPrior {
            params,
            k_max: density::default_k_max(variance),
        })
    }

    pub fn mean(&self) -> Angle {
        self.params.mu()
    }

    pub fn variance(&self) -> f64 {
        self.params.sigma2()
    }

    pub fn log_pdf(&self, x: Angle) -> f64 {
        density::wn_log_pdf(x, &self.params, self.k_max)
    }

    /// Log-density evaluated at an unwrapped real value; identical to the
    /// wrapped log-density by periodicity of the truncated sum, so proposals
    /// walking on the line can be scored without wrapping first.
    pub fn log_pdf_unwrapped(&self, x: f64) -> f64 {
        match Angle::new(x) {
            Ok(a) => self.log_pdf(a),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        let y = Normal::new(self.params.mu().radians(), self.params.sigma2().sqrt())
            .unwrap()
            .sample(rng);
        Angle::new(y).expect("finite normal draw wraps")
    }
}

/// Priors for the five space-time correlation parameters.
#[derive(Debug, Clone, Copy)]
pub struct CorrPriors {
    pub a: GammaPrior,
    pub c: GammaPrior,
    pub alpha: BetaPrior,
    pub beta: BetaPrior,
    pub gamma: BetaPrior,
}

/// Complete prior specification for the wrapped-process model.
#[derive(Debug, Clone, Copy)]
pub struct WnPriors {
    pub mu: WrappedNormalPrior,
    pub sigma2: InvGammaPrior,
    pub nugget: InvGammaPrior,
    pub corr: CorrPriors,
}

/// Complete prior specification for the projected-process model.
#[derive(Debug, Clone, Copy)]
pub struct PnPriors {
    pub mu1: NormalPrior,
    pub mu2: NormalPrior,
    pub sigma2_1: InvGammaPrior,
    pub rho: TruncNormalPrior,
    pub nugget: InvGammaPrior,
    pub corr: CorrPriors,
}
