use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::instance::HottTopicsInstance;

/// Distribution of a stochastic reward around its mean, supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// `Bernoulli(mean)`.
    #[default]
    Bernoulli,
    /// A Gaussian truncated to `[0, 1]` whose location is shifted so that the
    /// truncated mean equals the target mean. `sigma = 0` gives noiseless
    /// rewards.
    TruncatedGaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::TruncatedGaussian { sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::TruncatedGaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::Domain(format!("noise sigma must be finite and >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, NoiseModel::TruncatedGaussian { sigma } if *sigma == 0.0)
    }

    /// Precomputes whatever the model needs to sample around `mean`.
    pub fn entry(&self, mean: f64) -> EntryNoise {
        let mean = mean.clamp(0.0, 1.0);
        match *self {
            NoiseModel::Bernoulli => EntryNoise::Bernoulli(mean),
            NoiseModel::TruncatedGaussian { sigma } => {
                if sigma == 0.0 || mean == 0.0 || mean == 1.0 {
                    EntryNoise::Fixed(mean)
                } else {
                    EntryNoise::Truncated(TruncatedSpec::for_mean(mean, sigma))
                }
            }
        }
    }
}

/// Per-entry sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntryNoise {
    Fixed(f64),
    Bernoulli(f64),
    Truncated(TruncatedSpec),
}

impl EntryNoise {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryNoise::Fixed(m) => m,
            EntryNoise::Bernoulli(p) => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            EntryNoise::Truncated(ref t) => t.sample(rng),
        }
    }

    /// Exact expectation of [`Self::sample`].
    pub fn mean(&self) -> f64 {
        match *self {
            EntryNoise::Fixed(m) | EntryNoise::Bernoulli(m) => m,
            EntryNoise::Truncated(ref t) => t.mean(),
        }
    }
}

/// Cached per-entry noise for a whole instance.
#[derive(Debug, Clone)]
pub struct RewardSampler {
    l: usize,
    entries: Vec<EntryNoise>,
}

impl RewardSampler {
    pub fn new(inst: &HottTopicsInstance, noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        let entries = inst.rbar().as_slice().iter().map(|&m| noise.entry(m)).collect();
        Ok(Self { l: inst.l(), entries })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> f64 {
        self.entries[i * self.l + j].sample(rng)
    }

    pub fn entry(&self, i: usize, j: usize) -> &EntryNoise {
        &self.entries[i * self.l + j]
    }
}

/// One reward draw for arm `(i, j)`.
pub fn sample_reward<R: Rng + ?Sized>(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<f64> {
    noise.validate()?;
    let mean = super::instance::mean_reward(inst, i, j)?;
    Ok(noise.entry(mean).sample(rng))
}

// Standardized truncation points are kept within this many sigmas so that
// tail masses stay representable.
const MAX_Z: f64 = 30.0;

/// A truncated Gaussian on `[0, 1]`, optionally mixed with a point mass at
/// the nearer boundary for means the truncated family cannot reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSpec {
    loc: f64,
    sigma: f64,
    /// Probability of drawing from the truncated Gaussian; the rest is
    /// `atom`.
    weight: f64,
    atom: f64,
    accept: f64,
}

impl TruncatedSpec {
    pub fn for_mean(mean: f64, sigma: f64) -> Self {
        let lo = -MAX_Z * sigma;
        let hi = 1.0 + MAX_Z * sigma;
        let m_lo = truncated_mean(lo, sigma);
        let m_hi = truncated_mean(hi, sigma);
        let (loc, weight, atom) = if mean <= m_lo {
            (lo, mean / m_lo, 0.0)
        } else if mean >= m_hi {
            (hi, (1.0 - mean) / (1.0 - m_hi), 1.0)
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if truncated_mean(mid, sigma) < mean {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
            }
            (0.5 * (a + b), 1.0, 0.0)
        };
        Self {
            loc,
            sigma,
            weight,
            atom,
            accept: mass(loc, sigma),
        }
    }

    pub fn location(&self) -> f64 {
        self.loc
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn atom_probability(&self) -> f64 {
        1.0 - self.weight
    }

    pub fn mean(&self) -> f64 {
        self.weight * truncated_mean(self.loc, self.sigma) + (1.0 - self.weight) * self.atom
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.weight < 1.0 && rng.random::<f64>() >= self.weight {
            return self.atom;
        }
        if self.accept >= 0.05 {
            loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = self.loc + self.sigma * z;
                if (0.0..=1.0).contains(&x) {
                    return x;
                }
            }
        }
        self.sample_by_inversion(rng.random::<f64>())
    }

    /// Inverts the truncated CDF by bisection; used only when rejection
    /// would be slow.
    fn sample_by_inversion(&self, u: f64) -> f64 {
        let total = mass(self.loc, self.sigma);
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if mass_between(self.loc, self.sigma, 0.0, mid) / total < u {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `P(a <= X <= b)` for standardized bounds, using whichever tail keeps
/// precision.
fn std_mass(a: f64, b: f64) -> f64 {
    use std::f64::consts::FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (libm::erfc(a * FRAC_1_SQRT_2) - libm::erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * FRAC_1_SQRT_2) - libm::erfc(-a * FRAC_1_SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-a * FRAC_1_SQRT_2) + libm::erfc(b * FRAC_1_SQRT_2))
    }
}

fn mass(loc: f64, sigma: f64) -> f64 {
    mass_between(loc, sigma, 0.0, 1.0)
}

fn mass_between(loc: f64, sigma: f64, x0: f64, x1: f64) -> f64 {
    std_mass((x0 - loc) / sigma, (x1 - loc) / sigma)
}

/// Mean of `N(loc, sigma^2)` truncated to `[0, 1]`.
pub(crate) fn truncated_mean(loc: f64, sigma: f64) -> f64 {
    let a = -loc / sigma;
    let b = (1.0 - loc) / sigma;
    let z = std_mass(a, b);
    (loc + sigma * (pdf(a) - pdf(b)) / z).clamp(0.0, 1.0)
}
