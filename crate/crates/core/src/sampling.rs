//! Samplers with prescribed mean and standard deviation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Uniform on `μ ± √3·σ`.
    Uniform,
    /// Mass `p` at `μ + σ√((1−p)/p)` and `1 − p` at `μ − σ√(p/(1−p))`.
    /// With `p = 1 − α` this is the extremal distribution for the level-α
    /// tail.
    TwoPoint { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSampler {
    pub family: Family,
    pub mu: f64,
    pub sigma: f64,
}

impl MomentSampler {
    pub fn new(family: Family, mu: f64, sigma: f64) -> Self {
        assert!(sigma >= 0.0, "sigma must be nonnegative");
        if let Family::TwoPoint { p } = family {
            assert!(p > 0.0 && p < 1.0, "two-point mass must lie in (0,1)");
        }
        MomentSampler { family, mu, sigma }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return self.mu;
        }
        match self.family {
            Family::Gaussian => Normal::new(self.mu, self.sigma).expect("sigma > 0").sample(rng),
            Family::Uniform => {
                let half = sqrt(3.0) * self.sigma;
                self.mu + half * (2.0 * rng.random::<f64>() - 1.0)
            }
            Family::TwoPoint { p } => {
                if rng.random::<f64>() < p {
                    self.mu + self.sigma * sqrt((1.0 - p) / p)
                } else {
                    self.mu - self.sigma * sqrt(p / (1.0 - p))
                }
            }
        }
    }
}
