//! Goodness-of-fit checks for a calibrated model.
//!
//! Everything here runs on *life quotients* `q_i = n_i / eta_i`: observed
//! lives divided by their specimen's fitted Weibull scale. When the model
//! holds, the quotients are an i.i.d. Weibull sample with scale 1 and the
//! fitted shape, no matter how strain levels and specimen sizes vary across
//! the campaign — which turns every record into one pooled sample and makes
//! three checks natural:
//!
//! * a Kolmogorov-Smirnov test of the pooled quotients against that Weibull,
//! * a quantile-quantile table for plotting,
//! * a strain-trend test (Spearman rank correlation with a permutation
//!   p-value): systematic drift of quotients with strain means the
//!   strain-life curve is bent, not just noisy.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::campaign::Campaign;
use crate::cmb::MaterialModel;
use crate::error::{Error, Result};
use crate::life::LifeDistribution;
use crate::rng::stream_rng;

/// One record's normalized life.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeQuotient {
    pub specimen_id: String,
    pub strain_amplitude: f64,
    /// Observed life over fitted scale; Weibull(1, m) under the model.
    pub quotient: f64,
}

/// Observed lives divided by their fitted scales, in campaign order.
pub fn life_quotients(model: &MaterialModel, campaign: &Campaign) -> Result<Vec<LifeQuotient>> {
    campaign
        .records
        .iter()
        .map(|r| {
            let eta = model
                .life_distribution(r.strain_amplitude, r.gauge_area_mm2)?
                .eta;
            Ok(LifeQuotient {
                specimen_id: r.specimen_id.clone(),
                strain_amplitude: r.strain_amplitude,
                quotient: r.cycles_to_initiation / eta,
            })
        })
        .collect()
}

/// Kolmogorov-Smirnov comparison of a sample against a reference
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    /// Supremum distance between empirical and reference cdf.
    pub statistic: f64,
    /// Asymptotic p-value with a small-sample effective rescaling.
    pub p_value: f64,
    pub n: usize,
}

/// Supremum distance of sorted probability-integral-transformed values from
/// the uniform cdf.
pub fn ks_statistic(sorted_pit: &[f64]) -> f64 {
    let n = sorted_pit.len() as f64;
    let mut d = 0.0f64;
    for (i, u) in sorted_pit.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - u);
        d = d.max(u - i as f64 / n);
    }
    d
}

/// Survival function `Q` of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.2 {
        // Q differs from 1 by < 1e-12 here and the series converges slowly
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-14 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `values` against `dist`. The p-value evaluates the asymptotic
/// Kolmogorov survival function at the finite-sample effective statistic
/// `(sqrt(n) + 0.12 + 0.11/sqrt(n)) * D`.
pub fn ks_against(dist: &LifeDistribution, values: &[f64]) -> Result<KsReport> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "KS test needs at least one value".into(),
        ));
    }
    let mut pit: Vec<f64> = values.iter().map(|&v| dist.cdf(v)).collect();
    pit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = ks_statistic(&pit);
    let sqrt_n = (values.len() as f64).sqrt();
    let lambda_eff = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsReport {
        statistic: d,
        p_value: kolmogorov_survival(lambda_eff),
        n: values.len(),
    })
}

/// One point of a quantile-quantile table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    /// Plotting position `(i - 0.3) / (n + 0.4)` of the i-th order statistic.
    pub probability: f64,
    /// Reference quantile at that probability.
    pub theoretical: f64,
    /// The i-th smallest observed value.
    pub empirical: f64,
}

/// Quantile-quantile table of `values` against `dist`, using median-unbiased
/// plotting positions.
pub fn qq_points(dist: &LifeDistribution, values: &[f64]) -> Result<Vec<QqPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "Q-Q table needs at least one value".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &empirical)| {
            let probability = (i as f64 + 1.0 - 0.3) / (n + 0.4);
            Ok(QqPoint {
                probability,
                theoretical: dist.quantile(probability)?,
                empirical,
            })
        })
        .collect()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average of their span
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "Spearman correlation needs two equally long series of at least 2, \
             got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain(
            "Spearman correlation is undefined when one series is constant".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Strain-trend check on the quotients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Spearman correlation between strain amplitude and quotient.
    pub rho: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    pub permutations: usize,
}

/// Tests whether quotients drift with strain amplitude. The null
/// distribution of the rank correlation is built by permuting the quotient
/// assignment `permutations` times; permutation `k` draws from stream `k` of
/// `seed`, so the p-value is reproducible.
pub fn strain_trend(
    quotients: &[LifeQuotient],
    permutations: usize,
    seed: u64,
) -> Result<TrendReport> {
    if permutations == 0 {
        return Err(Error::InvalidParameter(
            "permutation count must be at least 1".into(),
        ));
    }
    let x: Vec<f64> = quotients.iter().map(|q| q.strain_amplitude).collect();
    let y: Vec<f64> = quotients.iter().map(|q| q.quotient).collect();
    let rho = spearman(&x, &y)?;
    let mut exceed = 0usize;
    let mut shuffled = y.clone();
    for k in 0..permutations {
        let mut rng = stream_rng(seed, k as u64);
        shuffled.shuffle(&mut rng);
        let rho_k = spearman(&x, &shuffled)?;
        if rho_k.abs() >= rho.abs() - 1e-12 {
            exceed += 1;
        }
    }
    Ok(TrendReport {
        rho,
        p_value: (exceed + 1) as f64 / (permutations + 1) as f64,
        permutations,
    })
}

/// Two-parameter Weibull fitted to the pooled quotients alone (profile
/// likelihood in the shape, closed form in the scale). Under a sound model
/// the result should sit near scale 1 and the jointly fitted shape.
pub fn refit_shape(quotients: &[f64]) -> Result<LifeDistribution> {
    if quotients.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "shape refit needs at least 3 quotients, got {}",
            quotients.len()
        )));
    }
    if quotients.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
        return Err(Error::InvalidParameter(
            "quotients must be positive and finite".into(),
        ));
    }
    let mean_ln = quotients.iter().map(|q| q.ln()).sum::<f64>() / quotients.len() as f64;
    // profile score in m is strictly decreasing; bisect its root
    let score = |m: f64| -> f64 {
        let mut sw = 0.0;
        let mut swl = 0.0;
        for &q in quotients {
            let w = (m * q.ln()).exp();
            sw += w;
            swl += w * q.ln();
        }
        1.0 / m + mean_ln - swl / sw
    };
    let (mut lo, mut hi) = (1e-3, 1e4);
    if score(lo) < 0.0 || score(hi) > 0.0 {
        return Err(Error::NonConvergence(
            "shape refit found no root in [1e-3, 1e4]; the quotients are \
             degenerate"
                .into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = 0.5 * (lo + hi);
    let eta = (quotients.iter().map(|q| (m * q.ln()).exp()).sum::<f64>()
        / quotients.len() as f64)
        .powf(1.0 / m);
    LifeDistribution::new(eta, m)
}

/// Settings for [`diagnose`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    /// Re-estimate the Weibull on the pooled quotients and test against
    /// that, instead of the jointly fitted shape with scale 1.
    pub refit_shape: bool,
    /// Permutations for the strain-trend p-value.
    pub permutations: usize,
    pub seed: u64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            refit_shape: false,
            permutations: 10_000,
            seed: 0,
        }
    }
}

/// Full goodness-of-fit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub quotients: Vec<LifeQuotient>,
    /// Distribution the quotients were tested against.
    pub reference: LifeDistribution,
    /// Present when the reference came from a quotient-only refit.
    pub refit: Option<LifeDistribution>,
    pub ks: KsReport,
    pub qq: Vec<QqPoint>,
    /// Absent when the campaign holds fewer than two strain levels.
    pub trend: Option<TrendReport>,
}

/// Runs the whole diagnostic battery for `model` on `campaign`.
pub fn diagnose(
    model: &MaterialModel,
    campaign: &Campaign,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport> {
    let quotients = life_quotients(model, campaign)?;
    let values: Vec<f64> = quotients.iter().map(|q| q.quotient).collect();
    let refit = if opts.refit_shape {
        Some(refit_shape(&values)?)
    } else {
        None
    };
    let reference = refit.unwrap_or(LifeDistribution { eta: 1.0, m: model.m });
    let ks = ks_against(&reference, &values)?;
    let qq = qq_points(&reference, &values)?;
    let trend = if campaign.strain_levels().len() >= 2 {
        Some(strain_trend(&quotients, opts.permutations, opts.seed)?)
    } else {
        None
    };
    Ok(DiagnosticsReport {
        quotients,
        reference,
        refit,
        ks,
        qq,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::TestRecord;
    use crate::cmb::CmbParams;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn kolmogorov_survival_reference_values() {
        // frozen from a 50-digit evaluation of the alternating series
        assert_relative_eq!(kolmogorov_survival(0.5), 0.9639452436648751, max_relative = 1e-12);
        assert_relative_eq!(
            kolmogorov_survival(1.0),
            0.26999967167735452,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            kolmogorov_survival(1.5),
            0.022217962616525129,
            max_relative = 1e-12
        );
        assert_eq!(kolmogorov_survival(0.05), 1.0);
        assert!(kolmogorov_survival(5.0) < 1e-9);
    }

    #[test]
    fn ks_statistic_small_sample_by_hand() {
        // three uniforms 0.1, 0.4, 0.8: the largest gap is 2/3 - 0.4 = 4/15
        let d = ks_statistic(&[0.1, 0.4, 0.8]);
        assert_relative_eq!(d, 4.0 / 15.0, max_relative = 1e-15);
    }

    #[test]
    fn ks_report_small_sample_frozen() {
        // exponential reference turns -ln(1-u) back into the uniforms above
        let dist = LifeDistribution::new(1.0, 1.0).unwrap();
        let values: Vec<f64> = [0.1f64, 0.4, 0.8].iter().map(|u| -(1.0 - u).ln()).collect();
        let r = ks_against(&dist, &values).unwrap();
        assert_relative_eq!(r.statistic, 4.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(r.p_value, 0.9566025484064289, max_relative = 1e-10);
        assert_eq!(r.n, 3);
    }

    #[test]
    fn ks_detects_wrong_shape() {
        // Weibull(1, 8) data against a Weibull(1, 2) reference
        let data = LifeDistribution::new(1.0, 8.0).unwrap();
        let wrong = LifeDistribution::new(1.0, 2.0).unwrap();
        let mut rng = stream_rng(3, 0);
        let values: Vec<f64> = (0..200)
            .map(|_| data.quantile(rng.random::<f64>().max(1e-12)).unwrap())
            .collect();
        let right = ks_against(&data, &values).unwrap();
        let off = ks_against(&wrong, &values).unwrap();
        assert!(right.p_value > 0.05, "p = {}", right.p_value);
        assert!(off.p_value < 1e-6, "p = {}", off.p_value);
    }

    #[test]
    fn qq_plotting_positions() {
        let dist = LifeDistribution::new(1.0, 2.0).unwrap();
        let values = [3.0, 1.0, 4.0, 2.0];
        let qq = qq_points(&dist, &values).unwrap();
        let expected_p = [0.7 / 4.4, 1.7 / 4.4, 2.7 / 4.4, 3.7 / 4.4];
        for (point, (i, &p)) in qq.iter().zip(expected_p.iter().enumerate()) {
            assert_relative_eq!(point.probability, p, max_relative = 1e-14);
            assert_relative_eq!(point.empirical, (i + 1) as f64, max_relative = 1e-15);
            assert_relative_eq!(
                point.theoretical,
                dist.quantile(p).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn spearman_matches_reference_implementation() {
        // frozen against a library implementation with average-rank ties
        let x = [0.003, 0.003, 0.003, 0.005, 0.005, 0.008, 0.008, 0.008];
        let y = [0.9, 1.4, 0.7, 1.1, 0.6, 1.3, 0.8, 1.0];
        assert_relative_eq!(
            spearman(&x, &y).unwrap(),
            0.0629940788348712,
            max_relative = 1e-12
        );
        let y2 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert_relative_eq!(
            spearman(&x, &y2).unwrap(),
            0.944911182523068,
            max_relative = 1e-12
        );
        // no ties, perfect agreement and reversal
        let a = [1.0, 2.0, 3.0, 4.0];
        let inc = [10.0, 20.0, 30.0, 40.0];
        let dec = [40.0, 30.0, 20.0, 10.0];
        assert_relative_eq!(spearman(&a, &inc).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(spearman(&a, &dec).unwrap(), -1.0, max_relative = 1e-15);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    fn quotient(strain: f64, q: f64, id: usize) -> LifeQuotient {
        LifeQuotient {
            specimen_id: format!("s{id}"),
            strain_amplitude: strain,
            quotient: q,
        }
    }

    #[test]
    fn trend_flags_monotone_drift() {
        let quotients: Vec<LifeQuotient> = (0..24)
            .map(|i| quotient(0.002 + (i / 4) as f64 * 1e-3, 0.5 + i as f64 * 0.05, i as usize))
            .collect();
        let r = strain_trend(&quotients, 2000, 7).unwrap();
        assert!(r.rho > 0.9);
        assert!(r.p_value < 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn trend_passes_exchangeable_quotients() {
        let d = LifeDistribution::new(1.0, 4.0).unwrap();
        let mut rng = stream_rng(19, 0);
        let quotients: Vec<LifeQuotient> = (0..30)
            .map(|i| {
                let q = d.quantile(rng.random::<f64>().max(1e-12)).unwrap();
                quotient(0.002 + (i % 5) as f64 * 1e-3, q, i)
            })
            .collect();
        let r = strain_trend(&quotients, 2000, 7).unwrap();
        assert!(r.p_value > 0.05, "p = {}", r.p_value);
    }

    #[test]
    fn trend_p_value_is_reproducible() {
        let quotients: Vec<LifeQuotient> = (0..20)
            .map(|i| quotient(0.002 + (i % 4) as f64 * 1e-3, 1.0 + (i as f64 * 0.618).fract(), i))
            .collect();
        let a = strain_trend(&quotients, 500, 11).unwrap();
        let b = strain_trend(&quotients, 500, 11).unwrap();
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
    }

    #[test]
    fn refit_recovers_quotient_distribution() {
        let truth = LifeDistribution::new(1.0, 3.5).unwrap();
        let mut rng = stream_rng(23, 0);
        let values: Vec<f64> = (0..4000)
            .map(|_| truth.quantile(rng.random::<f64>().max(1e-12)).unwrap())
            .collect();
        let refit = refit_shape(&values).unwrap();
        assert_relative_eq!(refit.m, 3.5, max_relative = 0.05);
        assert_relative_eq!(refit.eta, 1.0, max_relative = 0.02);
    }

    #[test]
    fn diagnose_well_specified_campaign() {
        let model = MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            4.0,
            1.0,
        )
        .unwrap();
        let mut records = Vec::new();
        let mut id = 0;
        for (li, eps) in [0.003, 0.005, 0.008].iter().enumerate() {
            let d = model.life_distribution(*eps, 263.9).unwrap();
            let mut rng = stream_rng(31, li as u64);
            for _ in 0..10 {
                records.push(TestRecord {
                    specimen_id: format!("s{id}"),
                    strain_amplitude: *eps,
                    cycles_to_initiation: d
                        .quantile(rng.random::<f64>().max(1e-12))
                        .unwrap(),
                    gauge_area_mm2: 263.9,
                    temperature_c: None,
                    load_ratio: None,
                });
                id += 1;
            }
        }
        let campaign = Campaign::new(records).unwrap();
        let report = diagnose(&model, &campaign, &DiagnoseOptions::default()).unwrap();
        assert_eq!(report.quotients.len(), 30);
        assert!(report.ks.p_value > 0.05, "ks p = {}", report.ks.p_value);
        assert!(report.trend.unwrap().p_value > 0.05);
        assert!(report.refit.is_none());
        assert_eq!(report.reference.m, model.m);

        // refit variant lands near scale 1 / the joint shape
        let opts = DiagnoseOptions {
            refit_shape: true,
            ..Default::default()
        };
        let report = diagnose(&model, &campaign, &opts).unwrap();
        let refit = report.refit.unwrap();
        assert!((refit.eta - 1.0).abs() < 0.2);
        assert!((refit.m / model.m).ln().abs() < 0.5);
    }

    #[test]
    fn diagnose_detects_bent_curve() {
        // lives at the highest strain are biased long: the quotients climb
        // with strain and the trend test must notice
        let model = MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            4.0,
            1.0,
        )
        .unwrap();
        let mut records = Vec::new();
        let mut id = 0;
        for (li, eps) in [0.003, 0.005, 0.008].iter().enumerate() {
            let d = model.life_distribution(*eps, 263.9).unwrap();
            let bias = 1.0 + li as f64; // 1x, 2x, 3x
            let mut rng = stream_rng(37, li as u64);
            for _ in 0..10 {
                records.push(TestRecord {
                    specimen_id: format!("s{id}"),
                    strain_amplitude: *eps,
                    cycles_to_initiation: bias
                        * d.quantile(rng.random::<f64>().max(1e-12)).unwrap(),
                    gauge_area_mm2: 263.9,
                    temperature_c: None,
                    load_ratio: None,
                });
                id += 1;
            }
        }
        let campaign = Campaign::new(records).unwrap();
        let report = diagnose(&model, &campaign, &DiagnoseOptions::default()).unwrap();
        assert!(report.trend.unwrap().p_value < 0.01);
    }

    #[test]
    fn single_level_campaign_skips_trend() {
        let model = MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            4.0,
            1.0,
        )
        .unwrap();
        let d = model.life_distribution(0.005, 263.9).unwrap();
        let mut rng = stream_rng(41, 0);
        let records: Vec<TestRecord> = (0..8)
            .map(|i| TestRecord {
                specimen_id: format!("s{i}"),
                strain_amplitude: 0.005,
                cycles_to_initiation: d.quantile(rng.random::<f64>().max(1e-12)).unwrap(),
                gauge_area_mm2: 263.9,
                temperature_c: None,
                load_ratio: None,
            })
            .collect();
        let campaign = Campaign::new(records).unwrap();
        let report = diagnose(&model, &campaign, &DiagnoseOptions::default()).unwrap();
        assert!(report.trend.is_none());
        assert!(report.ks.p_value > 0.0);
    }
}
