//! Coffin-Manson-Basquin strain-life relation and the size-effect
//! reinterpretation of its coefficients.
//!
//! The strain amplitude sustained for `n` cycles to crack initiation is
//!
//! ```text
//! eps_a(n) = (sigma_f / E) * (2n)^b + eps_f * (2n)^c,    b < 0, c < 0
//! ```
//!
//! an elastic (Basquin) plus a plastic (Coffin-Manson) power law. Both
//! exponents being negative makes the curve strictly decreasing in `n`, so
//! the inverse `n(eps_a)` is unique and safe to bracket.
//!
//! Coefficients are referenced to a *unit specimen* with gauge surface area
//! `a_ref` (1 mm^2 by default). For a homogeneous specimen with gauge area
//! `A` the coefficients of the median strain-life curve become
//!
//! ```text
//! sigma_f(A) = ((A/a_ref) / ln 2)^(b/m) * sigma_f
//! eps_f(A)   = ((A/a_ref) / ln 2)^(c/m) * eps_f
//! ```
//!
//! with `m` the Weibull shape; the exponents `b` and `c` carry no size
//! effect. Dividing by `a_ref` before exponentiation keeps every stored
//! quantity in integer-dimension units; the unit specimen is configurable
//! through `a_ref` rather than baked into the coefficient values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::life::LifeDistribution;

/// Bracket for the life inversion, in cycles.
pub const LIFE_BRACKET: (f64, f64) = (1e-6, 1e16);

/// Relative width at which the bisection bracket is considered converged.
const INVERT_REL_TOL: f64 = 1e-12;

/// Coefficients and exponents of the Coffin-Manson-Basquin equation.
///
/// `sigma_f` and `E` share one stress unit (MPa in the shipped examples);
/// `eps_f` and the strain amplitudes are absolute fractions, never percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmbParams {
    /// Elastic modulus.
    pub elastic_modulus: f64,
    /// Fatigue strength coefficient, referenced to the unit specimen.
    pub sigma_f: f64,
    /// Fatigue strength exponent (negative).
    pub b: f64,
    /// Fatigue ductility coefficient, referenced to the unit specimen.
    pub eps_f: f64,
    /// Fatigue ductility exponent (negative).
    pub c: f64,
}

impl CmbParams {
    /// Validates the hard invariants. One of `sigma_f`, `eps_f` may be zero
    /// (degenerate single-branch curve); both zero is rejected.
    pub fn new(elastic_modulus: f64, sigma_f: f64, b: f64, eps_f: f64, c: f64) -> Result<Self> {
        let p = CmbParams {
            elastic_modulus,
            sigma_f,
            b,
            eps_f,
            c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.elastic_modulus > 0.0) || !self.elastic_modulus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "elastic_modulus must be positive and finite, got {}",
                self.elastic_modulus
            )));
        }
        if !(self.sigma_f >= 0.0) || !self.sigma_f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_f must be non-negative and finite, got {}",
                self.sigma_f
            )));
        }
        if !(self.eps_f >= 0.0) || !self.eps_f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps_f must be non-negative and finite, got {}",
                self.eps_f
            )));
        }
        if self.sigma_f == 0.0 && self.eps_f == 0.0 {
            return Err(Error::InvalidParameter(
                "sigma_f and eps_f must not both be zero".into(),
            ));
        }
        if !(self.b < 0.0) || !self.b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fatigue strength exponent b must be negative, got {}",
                self.b
            )));
        }
        if !(self.c < 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fatigue ductility exponent c must be negative, got {}",
                self.c
            )));
        }
        Ok(())
    }

    /// Soft-invariant warnings that do not block evaluation or fitting.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.c > self.b {
            w.push(format!(
                "c = {} > b = {}: plastic branch decays slower than elastic branch, \
                 which is unusual for LCF data",
                self.c, self.b
            ));
        }
        w
    }

    /// Strain amplitude sustained for `cycles` cycles to crack initiation.
    pub fn strain_amplitude(&self, cycles: f64) -> Result<f64> {
        if !(cycles > 0.0) {
            return Err(Error::Domain(format!(
                "cycle count must be positive, got {cycles}"
            )));
        }
        let two_n = 2.0 * cycles;
        Ok(self.sigma_f / self.elastic_modulus * two_n.powf(self.b)
            + self.eps_f * two_n.powf(self.c))
    }

    /// Strain amplitude as a function of `u = ln(2n)`; the bisection kernel.
    #[inline]
    fn strain_at_log(&self, u: f64) -> f64 {
        let elastic = if self.sigma_f > 0.0 {
            (self.sigma_f / self.elastic_modulus) * (self.b * u).exp()
        } else {
            0.0
        };
        let plastic = if self.eps_f > 0.0 {
            self.eps_f * (self.c * u).exp()
        } else {
            0.0
        };
        elastic + plastic
    }

    /// Unique cycle count `N` with `strain_amplitude(N) = strain`.
    ///
    /// Bisection on `ln(2N)` over `LIFE_BRACKET`; monotonicity (`b, c < 0`)
    /// guarantees convergence. The bracket is shrunk to a relative width of
    /// 1e-12 in `N`.
    pub fn cycles_for_strain(&self, strain: f64) -> Result<f64> {
        if !(strain > 0.0) || !strain.is_finite() {
            return Err(Error::Domain(format!(
                "strain amplitude must be positive and finite, got {strain}"
            )));
        }
        let mut lo = (2.0 * LIFE_BRACKET.0).ln();
        let mut hi = (2.0 * LIFE_BRACKET.1).ln();
        // strain decreases in u, so f(lo) is the highest reachable amplitude
        if self.strain_at_log(lo) < strain {
            return Err(Error::OutOfRange(format!(
                "strain amplitude {strain} exceeds the curve at the lower life bound \
                 {} cycles",
                LIFE_BRACKET.0
            )));
        }
        if self.strain_at_log(hi) > strain {
            return Err(Error::OutOfRange(format!(
                "strain amplitude {strain} is below the curve at the upper life bound \
                 {} cycles",
                LIFE_BRACKET.1
            )));
        }
        let mut iter = 0;
        while hi - lo > INVERT_REL_TOL && iter < 100 {
            let mid = 0.5 * (lo + hi);
            if self.strain_at_log(mid) >= strain {
                lo = mid;
            } else {
                hi = mid;
            }
            iter += 1;
        }
        Ok((0.5 * (lo + hi)).exp() / 2.0)
    }
}

/// Full material model: CMB coefficients of the unit specimen, the Weibull
/// shape, and the reference gauge area the coefficients are pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub cmb: CmbParams,
    /// Weibull shape; `m >= 1` (values at or below 1 mean unrealistically
    /// large scatter for fatigue).
    pub m: f64,
    /// Reference gauge surface area in mm^2 (the unit specimen).
    pub a_ref: f64,
}

impl MaterialModel {
    pub fn new(cmb: CmbParams, m: f64, a_ref: f64) -> Result<Self> {
        cmb.validate()?;
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape m must be >= 1, got {m}"
            )));
        }
        if !(a_ref > 0.0) || !a_ref.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reference area a_ref must be positive, got {a_ref}"
            )));
        }
        Ok(MaterialModel { cmb, m, a_ref })
    }

    /// CMB coefficients of the median strain-life curve of a homogeneous
    /// specimen with gauge surface area `area`. Returns
    /// `(sigma_f(area), eps_f(area))`; the exponents are untouched.
    pub fn coefficients_for_area(&self, area: f64) -> Result<(f64, f64)> {
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Domain(format!(
                "gauge surface area must be positive, got {area}"
            )));
        }
        let base = (area / self.a_ref) / std::f64::consts::LN_2;
        Ok((
            base.powf(self.cmb.b / self.m) * self.cmb.sigma_f,
            base.powf(self.cmb.c / self.m) * self.cmb.eps_f,
        ))
    }

    /// First-crack life distribution of a homogeneous specimen with gauge
    /// surface area `area` held at `strain`: Weibull with shape `m` and
    /// scale `(area/a_ref)^(-1/m) * N_det(strain)`.
    pub fn life_distribution(&self, strain: f64, area: f64) -> Result<LifeDistribution> {
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Domain(format!(
                "gauge surface area must be positive, got {area}"
            )));
        }
        let n_det = self.cmb.cycles_for_strain(strain)?;
        let eta = (area / self.a_ref).powf(-1.0 / self.m) * n_det;
        LifeDistribution::new(eta, self.m)
    }
}
