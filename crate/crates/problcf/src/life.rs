//! First-crack life distribution.
//!
//! Under the surface crack-initiation picture — crack nuclei forming on the
//! gauge surface as a simple, locally determined, independent point process —
//! the number of cracks present at `n` cycles is Poisson, so the life to the
//! *first* crack is Weibull once the per-area intensity is a power of `n`:
//!
//! ```text
//! P(N <= n) = 1 - exp(-(n/eta)^m)
//! ```
//!
//! `eta` is the scale (the 63.2% quantile), `m` the shape shared by every
//! specimen of one material. All functions work for `n >= 0` and keep the
//! `n = 0` limits exact, including the `m = 1` hazard step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-parameter Weibull distribution of cycles to first crack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeDistribution {
    /// Scale in cycles; the 1 - 1/e quantile.
    pub eta: f64,
    /// Shape; larger means less scatter.
    pub m: f64,
}

impl LifeDistribution {
    pub fn new(eta: f64, m: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Weibull scale eta must be positive and finite, got {eta}"
            )));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape m must be positive and finite, got {m}"
            )));
        }
        Ok(LifeDistribution { eta, m })
    }

    /// Probability that the first crack has initiated by `n` cycles.
    pub fn cdf(&self, n: f64) -> f64 {
        if n <= 0.0 {
            return 0.0;
        }
        // expm1 keeps precision when (n/eta)^m is tiny
        -(-(self.m * (n / self.eta).ln()).exp()).exp_m1()
    }

    /// Probability that the specimen survives `n` cycles uncracked.
    pub fn survival(&self, n: f64) -> f64 {
        if n <= 0.0 {
            return 1.0;
        }
        (-(self.m * (n / self.eta).ln()).exp()).exp()
    }

    /// Density of the first-crack life at `n`.
    pub fn pdf(&self, n: f64) -> f64 {
        if n <= 0.0 {
            return 0.0;
        }
        self.hazard(n) * self.survival(n)
    }

    /// Instantaneous crack-initiation rate at `n`:
    /// `(m/eta) * (n/eta)^(m-1)`, increasing for `m > 1`.
    pub fn hazard(&self, n: f64) -> f64 {
        if n < 0.0 {
            return 0.0;
        }
        if n == 0.0 {
            // limits: 0 for m > 1, 1/eta for m = 1, divergent below
            return if self.m > 1.0 {
                0.0
            } else if self.m == 1.0 {
                1.0 / self.eta
            } else {
                f64::INFINITY
            };
        }
        self.m / self.eta * ((self.m - 1.0) * (n / self.eta).ln()).exp()
    }

    /// Life at cumulative failure probability `p`, `0 < p < 1`:
    /// `eta * (-ln(1-p))^(1/m)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile probability must lie strictly inside (0, 1), got {p}"
            )));
        }
        Ok(self.eta * (-(-p).ln_1p()).powf(1.0 / self.m))
    }

    /// Median life, `eta * (ln 2)^(1/m)`.
    pub fn median(&self) -> f64 {
        self.eta * std::f64::consts::LN_2.powf(1.0 / self.m)
    }
}
