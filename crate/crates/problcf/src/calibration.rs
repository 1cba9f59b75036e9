//! Maximum-likelihood calibration of the five material parameters
//! `(sigma_f, b, eps_f, c, m)` from a strain-controlled campaign, with the
//! elastic modulus held fixed at its measured value.
//!
//! Each record contributes the Weibull log density of its observed life
//! under the specimen's own scale `eta_i = (A_i/a_ref)^(-1/m) * N_det(eps_i)`:
//!
//! ```text
//! ll_i = ln m + (m-1) ln n_i - m ln eta_i - (n_i / eta_i)^m
//! ```
//!
//! The search runs in unconstrained coordinates
//! `x = [ln sigma_f, ln(-b), ln eps_f, ln(-c), ln(m - 1 + 1e-6)]`
//! so sign and bound constraints cannot be violated, and uses Nelder-Mead
//! with restarts. Convergence is certified afterwards by a central-difference
//! gradient check at the optimum.

use serde::{Deserialize, Serialize};

use crate::campaign::Campaign;
use crate::cmb::{CmbParams, MaterialModel};
use crate::error::{Error, Result};
use crate::optim::{self, Options};

/// Offset keeping the shape transform finite as `m` approaches its lower
/// bound of 1.
const M_OFFSET: f64 = 1e-6;

/// Settings for [`fit_mle`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Elastic modulus; fixed, never estimated.
    pub elastic_modulus: f64,
    /// Reference gauge area of the unit specimen, mm^2.
    pub a_ref: f64,
    /// Optional starting values `(sigma_f, b, eps_f, c, m)`; when absent a
    /// two-branch regression guess is built from the data.
    pub initial: Option<[f64; 5]>,
    /// Iteration cap per simplex run.
    pub max_iterations: usize,
    /// Simplex termination tolerance on the objective spread.
    pub tolerance: f64,
    /// Simplex restarts from the incumbent before giving up on improvement.
    pub restarts: usize,
    /// Max-norm bound on the internal-coordinate gradient below which the
    /// fit is declared converged.
    pub gradient_tolerance: f64,
}

impl FitConfig {
    pub fn new(elastic_modulus: f64) -> Self {
        FitConfig {
            elastic_modulus,
            a_ref: 1.0,
            initial: None,
            max_iterations: 4000,
            tolerance: 1e-9,
            restarts: 4,
            gradient_tolerance: 1e-3,
        }
    }
}

/// A calibrated model plus everything needed to judge the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: MaterialModel,
    pub log_likelihood: f64,
    /// True when the gradient check at the optimum passed.
    pub converged: bool,
    /// Total simplex iterations over all restarts.
    pub iterations: usize,
    /// Fitted Weibull scale of each record's specimen, in campaign order.
    pub record_scales: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Precomputed campaign views for fast repeated likelihood evaluation.
struct LikelihoodCache {
    /// Distinct strain amplitudes, ascending.
    levels: Vec<f64>,
    /// Per record: index into `levels`.
    level_idx: Vec<usize>,
    /// Per record: ln of observed life.
    ln_n: Vec<f64>,
    /// Per record: ln(A_i / a_ref).
    ln_area_ratio: Vec<f64>,
    /// Sum of ln_n.
    sum_ln_n: f64,
    /// Sum of ln_area_ratio.
    sum_ln_area_ratio: f64,
    /// Records per level.
    level_counts: Vec<usize>,
}

impl LikelihoodCache {
    fn new(campaign: &Campaign, a_ref: f64) -> Self {
        let levels = campaign.strain_levels();
        let level_idx = campaign.level_index();
        let ln_n: Vec<f64> = campaign
            .records
            .iter()
            .map(|r| r.cycles_to_initiation.ln())
            .collect();
        let ln_area_ratio: Vec<f64> = campaign
            .records
            .iter()
            .map(|r| (r.gauge_area_mm2 / a_ref).ln())
            .collect();
        let mut level_counts = vec![0usize; levels.len()];
        for &idx in &level_idx {
            level_counts[idx] += 1;
        }
        LikelihoodCache {
            sum_ln_n: ln_n.iter().sum(),
            sum_ln_area_ratio: ln_area_ratio.iter().sum(),
            levels,
            level_idx,
            ln_n,
            ln_area_ratio,
            level_counts,
        }
    }

    /// Log likelihood of the five free parameters; `None` when a strain
    /// level falls outside the invertible range of the trial curve.
    fn eval(&self, cmb: &CmbParams, m: f64) -> Option<f64> {
        let mut ln_n_det = Vec::with_capacity(self.levels.len());
        for &eps in &self.levels {
            match cmb.cycles_for_strain(eps) {
                Ok(n) => ln_n_det.push(n.ln()),
                Err(_) => return None,
            }
        }
        let n = self.ln_n.len() as f64;
        let mut ll = n * m.ln() + (m - 1.0) * self.sum_ln_n + self.sum_ln_area_ratio;
        for (idx, &count) in self.level_counts.iter().enumerate() {
            ll -= m * count as f64 * ln_n_det[idx];
        }
        for i in 0..self.ln_n.len() {
            let z = m * (self.ln_n[i] - ln_n_det[self.level_idx[i]]) + self.ln_area_ratio[i];
            ll -= z.exp();
        }
        if ll.is_finite() {
            Some(ll)
        } else {
            None
        }
    }
}

/// Log likelihood of `model` against `campaign`.
pub fn log_likelihood(model: &MaterialModel, campaign: &Campaign) -> Result<f64> {
    let cache = LikelihoodCache::new(campaign, model.a_ref);
    cache.eval(&model.cmb, model.m).ok_or_else(|| {
        Error::Domain(
            "log likelihood is undefined: a strain level falls outside the \
             invertible range of the strain-life curve"
                .into(),
        )
    })
}

fn to_internal(theta: &[f64; 5]) -> [f64; 5] {
    [
        theta[0].ln(),
        (-theta[1]).ln(),
        theta[2].ln(),
        (-theta[3]).ln(),
        (theta[4] - 1.0 + M_OFFSET).ln(),
    ]
}

fn from_internal(x: &[f64]) -> ([f64; 4], f64) {
    (
        [x[0].exp(), -x[1].exp(), x[2].exp(), -x[3].exp()],
        1.0 - M_OFFSET + x[4].exp(),
    )
}

/// Two-branch regression starting point.
///
/// The elastic (Basquin) branch dominates at low strain / long life and the
/// plastic (Coffin-Manson) branch at high strain / short life, so each pair
/// (coefficient, exponent) is initialized from a log-log line through its
/// own half of the strain levels. The shape starts from the within-level
/// spread of log lives (`sd(ln n) = pi / (m sqrt(6))` for a Weibull), and
/// the coefficients are pulled back to the unit specimen through the size
/// transform at the campaign's typical gauge area.
fn initial_guess(campaign: &Campaign, config: &FitConfig) -> [f64; 5] {
    let levels = campaign.strain_levels();
    let level_idx = campaign.level_index();
    let n_levels = levels.len();

    // geometric-mean life per level
    let mut sum_ln = vec![0.0; n_levels];
    let mut count = vec![0usize; n_levels];
    for (r, &idx) in campaign.records.iter().zip(&level_idx) {
        sum_ln[idx] += r.cycles_to_initiation.ln();
        count[idx] += 1;
    }
    let mean_ln: Vec<f64> = sum_ln
        .iter()
        .zip(&count)
        .map(|(s, &c)| s / c as f64)
        .collect();

    // shape from pooled within-level scatter of ln n
    let mut ss = 0.0;
    for (r, &idx) in campaign.records.iter().zip(&level_idx) {
        ss += (r.cycles_to_initiation.ln() - mean_ln[idx]).powi(2);
    }
    let dof = campaign.len().saturating_sub(n_levels);
    let m0 = if dof >= 2 && ss > 0.0 {
        let sd = (ss / dof as f64).sqrt();
        (std::f64::consts::PI / (sd * 6f64.sqrt())).clamp(1.5, 200.0)
    } else {
        5.0
    };

    // log-log line through (2 * median life, strain) for a slice of levels
    let fit_line = |idx: &[usize]| -> Option<(f64, f64)> {
        if idx.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = idx.iter().map(|&i| (2.0 * mean_ln[i].exp()).ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| levels[i].ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        Some((slope, intercept))
    };

    // levels are ascending in strain: Basquin from the lower half,
    // Coffin-Manson from the upper half (with overlap so both see >= 2)
    let split = n_levels / 2;
    let low: Vec<usize> = (0..(split + 1).min(n_levels)).collect();
    let high: Vec<usize> = (split.saturating_sub(if n_levels % 2 == 0 { 1 } else { 0 })
        ..n_levels)
        .collect();

    let (b0, sigma_f0) = match fit_line(&low) {
        Some((slope, intercept)) if slope < -1e-3 => (
            slope.clamp(-0.5, -0.01),
            (intercept.exp() * config.elastic_modulus).max(1e-6),
        ),
        _ => {
            // single level or degenerate geometry: assume a textbook slope
            let b = -0.09;
            let eps = levels[0];
            let two_n = 2.0 * mean_ln[0].exp();
            // attribute half the strain to the elastic branch
            (b, 0.5 * eps * config.elastic_modulus / two_n.powf(b))
        }
    };
    let (c0, eps_f0) = match fit_line(&high) {
        Some((slope, intercept)) if slope < -1e-3 => {
            (slope.clamp(-2.0, -0.05), intercept.exp().max(1e-9))
        }
        _ => {
            let c = -0.6;
            let eps = levels[n_levels - 1];
            let two_n = 2.0 * mean_ln[n_levels - 1].exp();
            (c, 0.5 * eps / two_n.powf(c))
        }
    };

    // pull back to the unit specimen: the medians the lines passed through
    // sit at the campaign's typical area, not at a_ref
    let mean_ln_area = campaign
        .records
        .iter()
        .map(|r| (r.gauge_area_mm2 / config.a_ref).ln())
        .sum::<f64>()
        / campaign.len() as f64;
    let base = (mean_ln_area.exp() / std::f64::consts::LN_2).max(1e-300);
    let sigma_f0 = sigma_f0 / base.powf(b0 / m0);
    let eps_f0 = eps_f0 / base.powf(c0 / m0);

    [sigma_f0, b0, eps_f0, c0, m0]
}

/// Fits the five material parameters to `campaign` by maximum likelihood.
/// Solves `a · x = rhs` by Gaussian elimination with partial pivoting;
/// `None` when the matrix is singular or not finite.
fn solve_linear(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            a[r][col]
                .abs()
                .partial_cmp(&a[s][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !a[pivot][col].is_finite() || a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

pub fn fit_mle(campaign: &Campaign, config: &FitConfig) -> Result<FitResult> {
    if campaign.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "campaign has {} records; at least 5 are needed to identify five \
             parameters",
            campaign.len()
        )));
    }
    if !(config.elastic_modulus > 0.0) || !config.elastic_modulus.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "elastic_modulus must be positive and finite, got {}",
            config.elastic_modulus
        )));
    }
    if !(config.a_ref > 0.0) || !config.a_ref.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "a_ref must be positive, got {}",
            config.a_ref
        )));
    }

    let mut warnings = Vec::new();
    let levels = campaign.strain_levels();
    if levels.len() < 2 {
        warnings.push(format!(
            "campaign holds only {} distinct strain level(s); the strain-life \
             exponents are not identifiable and the fit may wander",
            levels.len()
        ));
    }

    let theta0 = match config.initial {
        Some(theta) => {
            CmbParams::new(
                config.elastic_modulus,
                theta[0],
                theta[1],
                theta[2],
                theta[3],
            )?;
            if !(theta[4] >= 1.0) || !theta[4].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "initial shape must be >= 1, got {}",
                    theta[4]
                )));
            }
            theta
        }
        None => initial_guess(campaign, config),
    };

    let cache = LikelihoodCache::new(campaign, config.a_ref);
    let e_mod = config.elastic_modulus;
    let objective = |x: &[f64]| -> f64 {
        let (p, m) = from_internal(x);
        let cmb = CmbParams {
            elastic_modulus: e_mod,
            sigma_f: p[0],
            b: p[1],
            eps_f: p[2],
            c: p[3],
        };
        match cache.eval(&cmb, m) {
            Some(ll) => -ll,
            None => f64::INFINITY,
        }
    };

    if !objective(&to_internal(&theta0)).is_finite() {
        return Err(Error::NonConvergence(
            "the starting parameters cannot reproduce every strain level in \
             the campaign; supply explicit initial values"
                .into(),
        ));
    }

    // simplex with restarts: each round restarts a fresh simplex from the
    // incumbent, with a tighter initial edge
    let mut x = to_internal(&theta0).to_vec();
    let mut fx = f64::INFINITY;
    let mut iterations = 0;
    for round in 0..=config.restarts {
        let opts = Options {
            max_iterations: config.max_iterations,
            f_tol: config.tolerance,
            x_tol: 1e-8,
            step: if round == 0 { 0.25 } else { 0.05 / round as f64 },
        };
        let r = optim::minimize(&objective, &x, &opts);
        iterations += r.iterations;
        let improved = fx - r.fx;
        x = r.x;
        fx = r.fx;
        if round > 0 && improved.abs() < config.tolerance * 10.0 {
            break;
        }
    }

    if !fx.is_finite() {
        return Err(Error::NonConvergence(
            "likelihood stayed non-finite over the whole search".into(),
        ));
    }

    // per-axis parabolic polish: one-dimensional Newton steps sharpen the
    // stiff coordinates the collapsed simplex resolves poorly
    let polish = |x: &mut Vec<f64>, fx: &mut f64, ph: f64| {
        for _ in 0..30 {
            let mut moved = false;
            for i in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += ph;
                xm[i] -= ph;
                let (fp, fm) = (objective(&xp), objective(&xm));
                if !fp.is_finite() || !fm.is_finite() {
                    continue;
                }
                let curvature = fp - 2.0 * *fx + fm;
                if curvature <= 0.0 {
                    continue;
                }
                let step = -0.5 * ph * (fp - fm) / curvature;
                let mut cand = x.clone();
                cand[i] += step.clamp(-20.0 * ph, 20.0 * ph);
                let fc = objective(&cand);
                if fc < *fx {
                    *x = cand;
                    *fx = fc;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    };

    // Gradient estimate in internal coordinates: central differences at
    // steps h and 2h, Richardson-combined to cancel the h^2 truncation
    // term. The plain h = 1e-5 stencil carries a bias of f'''h^2/6, which
    // on sharply curved likelihoods exceeds the convergence tolerance at
    // the exact optimum; the extrapolation estimates the gradient itself.
    let gradient = |x: &[f64]| -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|i| {
                let central = |step: f64| {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[i] += step;
                    xm[i] -= step;
                    (objective(&xp) - objective(&xm)) / (2.0 * step)
                };
                (4.0 * central(h) - central(2.0 * h)) / 3.0
            })
            .collect()
    };
    let gradient_norm = |x: &[f64]| -> f64 {
        gradient(x)
            .iter()
            .fold(0.0f64, |acc, g| if g.is_finite() { acc.max(g.abs()) } else { f64::INFINITY })
    };

    polish(&mut x, &mut fx, 1e-4);
    let mut max_grad = gradient_norm(&x);

    // Sharply identified likelihoods leave the simplex on a narrow ridge:
    // single-axis moves gain less than the floating-point noise of the
    // objective, yet the gradient along the ridge still exceeds the
    // certificate. Full Newton steps on a finite-difference Hessian walk
    // the ridge directly; a step is accepted when it reduces the gradient
    // norm, which stays measurable when objective improvements do not.
    for _ in 0..4 {
        if max_grad < config.gradient_tolerance {
            break;
        }
        let n = x.len();
        let h = 1e-4;
        let grad = gradient(&x);
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let mut hessian = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            hessian[i][i] = (objective(&xp) - 2.0 * fx + objective(&xm)) / (h * h);
            for j in 0..i {
                let mut xpp = x.clone();
                let mut xpm = x.clone();
                let mut xmp = x.clone();
                let mut xmm = x.clone();
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                let mixed = (objective(&xpp) - objective(&xpm) - objective(&xmp)
                    + objective(&xmm))
                    / (4.0 * h * h);
                hessian[i][j] = mixed;
                hessian[j][i] = mixed;
            }
        }
        iterations += 1;
        let Some(delta) = solve_linear(hessian, grad) else {
            break;
        };
        let mut accepted = false;
        for scale in [1.0, 0.25, 0.0625] {
            let cand: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi - scale * d).collect();
            let g = gradient_norm(&cand);
            if g < max_grad {
                let fc = objective(&cand);
                if fc.is_finite() && fc <= fx + 1e-6 {
                    x = cand;
                    fx = fc;
                    max_grad = g;
                    accepted = true;
                    break;
                }
            }
        }
        if !accepted {
            break;
        }
    }
    let converged = max_grad < config.gradient_tolerance;

    let (p, mut m) = from_internal(&x);
    if m < 1.0 {
        warnings.push(format!(
            "fitted shape {m:.6} sits at the lower bound; clamped to 1 \
             (scatter in the data is larger than an increasing-hazard model allows)"
        ));
        m = 1.0;
    }
    let cmb = CmbParams::new(e_mod, p[0], p[1], p[2], p[3])?;
    warnings.extend(cmb.warnings());
    let model = MaterialModel::new(cmb, m, config.a_ref)?;

    let record_scales = campaign
        .records
        .iter()
        .map(|r| {
            Ok(model
                .life_distribution(r.strain_amplitude, r.gauge_area_mm2)?
                .eta)
        })
        .collect::<Result<Vec<f64>>>()?;
    let log_likelihood = log_likelihood(&model, campaign)?;

    Ok(FitResult {
        model,
        log_likelihood,
        converged,
        iterations,
        record_scales,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::TestRecord;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn record(id: usize, strain: f64, cycles: f64, area: f64) -> TestRecord {
        TestRecord {
            specimen_id: format!("s{id}"),
            strain_amplitude: strain,
            cycles_to_initiation: cycles,
            gauge_area_mm2: area,
            temperature_c: None,
            load_ratio: None,
        }
    }

    fn reference_model() -> MaterialModel {
        MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            4.0,
            1.0,
        )
        .unwrap()
    }

    /// Synthetic campaign drawn from `model` by inverse-cdf sampling.
    fn synthetic_campaign(
        model: &MaterialModel,
        levels: &[f64],
        replicates: usize,
        area: f64,
        seed: u64,
    ) -> Campaign {
        let mut records = Vec::new();
        for (li, &eps) in levels.iter().enumerate() {
            let d = model.life_distribution(eps, area).unwrap();
            let mut rng = stream_rng(seed, li as u64);
            for r in 0..replicates {
                let u: f64 = rng.random();
                let n = d.quantile(u.max(1e-12)).unwrap();
                records.push(record(li * 1000 + r, eps, n, area));
            }
        }
        Campaign::new(records).unwrap()
    }

    #[test]
    fn likelihood_matches_density_sum() {
        // grouped evaluation must agree with the naive per-record density
        let model = reference_model();
        let campaign = synthetic_campaign(&model, &[0.003, 0.005, 0.009], 4, 263.9, 11);
        let ll = log_likelihood(&model, &campaign).unwrap();
        let naive: f64 = campaign
            .records
            .iter()
            .map(|r| {
                model
                    .life_distribution(r.strain_amplitude, r.gauge_area_mm2)
                    .unwrap()
                    .pdf(r.cycles_to_initiation)
                    .ln()
            })
            .sum();
        assert_relative_eq!(ll, naive, max_relative = 1e-12);
    }

    #[test]
    fn fitted_likelihood_dominates_truth() {
        // the MLE can never score below the generating parameters
        let model = reference_model();
        let campaign =
            synthetic_campaign(&model, &[0.0025, 0.004, 0.006, 0.009, 0.014], 8, 263.9, 29);
        let fit = fit_mle(&campaign, &FitConfig::new(200_000.0)).unwrap();
        let ll_true = log_likelihood(&model, &campaign).unwrap();
        assert!(
            fit.log_likelihood >= ll_true - 1e-9,
            "ll_hat = {} < ll_true = {}",
            fit.log_likelihood,
            ll_true
        );
        assert!(fit.converged, "gradient check failed");
        assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
    }

    #[test]
    fn recovers_generating_parameters_roughly() {
        let model = reference_model();
        let campaign =
            synthetic_campaign(&model, &[0.0025, 0.004, 0.006, 0.009, 0.014], 10, 263.9, 3);
        let fit = fit_mle(&campaign, &FitConfig::new(200_000.0)).unwrap();
        let got = fit.model.cmb;
        assert!((got.b - model.cmb.b).abs() < 0.05, "b = {}", got.b);
        assert!((got.c - model.cmb.c).abs() < 0.25, "c = {}", got.c);
        assert!(
            (fit.model.m / model.m).ln().abs() < 0.5_f64.ln().abs(),
            "m = {}",
            fit.model.m
        );
        // the median curve itself is pinned down much harder than the
        // individual coefficients
        for eps in [0.003, 0.005, 0.008, 0.012] {
            let n_true = model.life_distribution(eps, 263.9).unwrap().median();
            let n_fit = fit.model.life_distribution(eps, 263.9).unwrap().median();
            assert!(
                (n_fit / n_true).ln().abs() < 0.35,
                "median at {eps}: fit {n_fit} vs true {n_true}"
            );
        }
    }

    #[test]
    fn single_level_matches_closed_weibull_mle() {
        // with one strain level only (eta, m) are identifiable, and they must
        // land on the plain two-parameter Weibull MLE for that sample
        let model = reference_model();
        let campaign = synthetic_campaign(&model, &[0.005], 40, 263.9, 17);
        let lives: Vec<f64> = campaign
            .records
            .iter()
            .map(|r| r.cycles_to_initiation)
            .collect();

        // independent Weibull MLE: bisection on the profile score for m
        let mean_ln = lives.iter().map(|n| n.ln()).sum::<f64>() / lives.len() as f64;
        let score = |m: f64| -> f64 {
            let sw: f64 = lives.iter().map(|n| n.powf(m)).sum();
            let swl: f64 = lives.iter().map(|n| n.powf(m) * n.ln()).sum();
            1.0 / m + mean_ln - swl / sw
        };
        let (mut lo, mut hi) = (0.2, 400.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m_ref = 0.5 * (lo + hi);
        let eta_ref = (lives.iter().map(|n| n.powf(m_ref)).sum::<f64>() / lives.len() as f64)
            .powf(1.0 / m_ref);

        let fit = fit_mle(&campaign, &FitConfig::new(200_000.0)).unwrap();
        assert!(
            fit.warnings.iter().any(|w| w.contains("strain level")),
            "expected an identifiability warning, got {:?}",
            fit.warnings
        );
        let d = fit.model.life_distribution(0.005, 263.9).unwrap();
        assert_relative_eq!(d.m, m_ref, max_relative = 1e-3);
        assert_relative_eq!(d.eta, eta_ref, max_relative = 1e-3);
    }

    #[test]
    fn refuses_underdetermined_campaign() {
        let campaign = Campaign::new(vec![
            record(1, 0.004, 1e4, 263.9),
            record(2, 0.006, 3e3, 263.9),
            record(3, 0.008, 1e3, 263.9),
            record(4, 0.010, 5e2, 263.9),
        ])
        .unwrap();
        let err = fit_mle(&campaign, &FitConfig::new(200_000.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn explicit_initial_values_are_validated() {
        let model = reference_model();
        let campaign = synthetic_campaign(&model, &[0.003, 0.006, 0.01], 4, 263.9, 5);
        let mut config = FitConfig::new(200_000.0);
        config.initial = Some([2000.0, 0.1, 0.5, -0.6, 4.0]); // b must be negative
        assert!(fit_mle(&campaign, &config).is_err());
        config.initial = Some([2000.0, -0.1, 0.5, -0.6, 0.5]); // m below 1
        assert!(fit_mle(&campaign, &config).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let model = reference_model();
        let campaign = synthetic_campaign(&model, &[0.003, 0.005, 0.008, 0.012], 6, 263.9, 7);
        let config = FitConfig::new(200_000.0);
        let a = fit_mle(&campaign, &config).unwrap();
        let b = fit_mle(&campaign, &config).unwrap();
        assert_eq!(a.model.cmb.sigma_f.to_bits(), b.model.cmb.sigma_f.to_bits());
        assert_eq!(a.model.cmb.b.to_bits(), b.model.cmb.b.to_bits());
        assert_eq!(a.model.cmb.eps_f.to_bits(), b.model.cmb.eps_f.to_bits());
        assert_eq!(a.model.cmb.c.to_bits(), b.model.cmb.c.to_bits());
        assert_eq!(a.model.m.to_bits(), b.model.m.to_bits());
        assert_eq!(a.log_likelihood.to_bits(), b.log_likelihood.to_bits());
    }

    #[test]
    fn mixed_gauge_areas_are_handled() {
        // two specimen sizes in one campaign: the size term must keep the
        // likelihood consistent with the per-record densities
        let model = reference_model();
        let mut records = Vec::new();
        let mut id = 0;
        for (area, seed) in [(263.9, 41u64), (754.0, 43u64)] {
            for (li, eps) in [0.003, 0.0055, 0.01].iter().enumerate() {
                let d = model.life_distribution(*eps, area).unwrap();
                let mut rng = stream_rng(seed, li as u64);
                for _ in 0..6 {
                    let u: f64 = rng.random();
                    records.push(record(id, *eps, d.quantile(u.max(1e-12)).unwrap(), area));
                    id += 1;
                }
            }
        }
        let campaign = Campaign::new(records).unwrap();
        let fit = fit_mle(&campaign, &FitConfig::new(200_000.0)).unwrap();
        assert!(fit.converged);
        let ll_true = log_likelihood(&model, &campaign).unwrap();
        assert!(fit.log_likelihood >= ll_true - 1e-9);
    }
}
