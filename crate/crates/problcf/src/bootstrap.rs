//! Parametric bootstrap intervals for fitted life quantiles.
//!
//! The sampling distribution of the estimator is probed by refitting: each
//! replicate draws a synthetic campaign from the fitted model at the exact
//! strain levels and gauge areas of the observed one, re-estimates all five
//! parameters (warm-started at the incumbent fit), and evaluates the
//! requested life quantiles under its own estimate. Percentile intervals
//! are read off the replicate values with the inverse-ECDF quantile, so two
//! replicates yield their min and max, and more replicates tighten the
//! order statistics instead of interpolating between them.
//!
//! Replicate `r` draws from random stream `r` of the seed; the refits run
//! in parallel and the result is bit-identical regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_mle, FitConfig};
use crate::campaign::{Campaign, TestRecord};
use crate::cmb::MaterialModel;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::simulate::first_crack_for_uniform;

/// A life quantile the caller wants an interval for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeQuery {
    pub strain_amplitude: f64,
    pub gauge_area_mm2: f64,
    /// Failure probability of the requested life quantile.
    pub quantile: f64,
}

/// Percentile interval around the point estimate of one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryInterval {
    pub query: LifeQuery,
    pub lower: f64,
    /// Life under the original fit.
    pub point: f64,
    pub upper: f64,
}

/// Settings for [`parametric_bootstrap`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    /// Two-sided confidence level of the percentile intervals.
    pub level: f64,
    pub seed: u64,
    /// Keep every replicate's fitted model in the result.
    pub keep_models: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            replicates: 500,
            level: 0.925,
            seed: 0,
            keep_models: false,
        }
    }
}

/// Intervals plus bookkeeping on how the replicates behaved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub level: f64,
    pub replicates_requested: usize,
    /// Replicates whose refit succeeded and entered the intervals.
    pub replicates_used: usize,
    pub replicates_failed: usize,
    pub intervals: Vec<QueryInterval>,
    pub warnings: Vec<String>,
    /// Populated when `keep_models` was set.
    pub replicate_models: Option<Vec<MaterialModel>>,
}

/// Inverse-ECDF sample quantile: the `ceil(q * n)`-th smallest value (the
/// lowest order statistic whose ECDF reaches `q`).
pub fn inverse_ecdf_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Draws one synthetic campaign from `model` at the design of `campaign`.
fn resample_campaign(
    model: &MaterialModel,
    campaign: &Campaign,
    seed: u64,
    replicate: u64,
) -> Result<Campaign> {
    let mut rng = stream_rng(seed, replicate);
    let records = campaign
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let dist = model.life_distribution(r.strain_amplitude, r.gauge_area_mm2)?;
            let u = loop {
                let u: f64 = rand::Rng::random(&mut rng);
                if u > 0.0 {
                    break u;
                }
            };
            Ok(TestRecord {
                specimen_id: format!("rep{replicate}-{i}"),
                strain_amplitude: r.strain_amplitude,
                cycles_to_initiation: first_crack_for_uniform(&dist, u)?,
                gauge_area_mm2: r.gauge_area_mm2,
                temperature_c: None,
                load_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Campaign::new(records)
}

/// Confidence intervals for `queries` under `model`, assumed to be the
/// maximum-likelihood fit of `campaign` under `config`.
pub fn parametric_bootstrap(
    campaign: &Campaign,
    config: &FitConfig,
    model: &MaterialModel,
    queries: &[LifeQuery],
    opts: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if queries.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one life query is required".into(),
        ));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie strictly inside (0, 1), got {}",
            opts.level
        )));
    }
    if opts.replicates == 0 {
        return Err(Error::InvalidParameter(
            "at least one bootstrap replicate is required".into(),
        ));
    }
    let mut warnings = Vec::new();
    if opts.replicates < 100 {
        warnings.push(format!(
            "{} bootstrap replicates resolve the {}% level poorly; use at \
             least 100",
            opts.replicates,
            100.0 * opts.level
        ));
    }

    // point estimates, and query validation as a side effect
    let points = queries
        .iter()
        .map(|q| {
            if !(q.quantile > 0.0 && q.quantile < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "query quantile must lie strictly inside (0, 1), got {}",
                    q.quantile
                )));
            }
            model
                .life_distribution(q.strain_amplitude, q.gauge_area_mm2)?
                .quantile(q.quantile)
        })
        .collect::<Result<Vec<f64>>>()?;

    // warm-start every refit at the incumbent estimate
    let mut refit_config = config.clone();
    refit_config.initial = Some([
        model.cmb.sigma_f,
        model.cmb.b,
        model.cmb.eps_f,
        model.cmb.c,
        model.m.max(1.0),
    ]);

    // a replicate fails when its refit errors out or its refitted curve
    // cannot evaluate every query (e.g. it flattened below an extrapolated
    // strain); partial replicates would skew the order statistics
    let replicate_fits: Vec<Result<(MaterialModel, Vec<f64>)>> = (0..opts.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let synthetic = resample_campaign(model, campaign, opts.seed, r)?;
            let m = fit_mle(&synthetic, &refit_config)?.model;
            let values = queries
                .iter()
                .map(|q| {
                    m.life_distribution(q.strain_amplitude, q.gauge_area_mm2)?
                        .quantile(q.quantile)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((m, values))
        })
        .collect();

    let mut models = Vec::with_capacity(opts.replicates);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.replicates); queries.len()];
    let mut failed = 0usize;
    for fit in replicate_fits {
        match fit {
            Ok((m, values)) => {
                models.push(m);
                for (column, value) in columns.iter_mut().zip(values) {
                    column.push(value);
                }
            }
            Err(_) => failed += 1,
        }
    }
    if failed * 10 > opts.replicates {
        return Err(Error::NonConvergence(format!(
            "{failed} of {} bootstrap replicates failed to refit; the model \
             is too fragile on this campaign for resampling intervals",
            opts.replicates
        )));
    }

    let alpha = 1.0 - opts.level;
    let intervals = queries
        .iter()
        .zip(&points)
        .zip(columns)
        .map(|((q, &point), mut values)| {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            QueryInterval {
                query: *q,
                lower: inverse_ecdf_quantile(&values, alpha / 2.0),
                point,
                upper: inverse_ecdf_quantile(&values, 1.0 - alpha / 2.0),
            }
        })
        .collect();

    Ok(BootstrapResult {
        level: opts.level,
        replicates_requested: opts.replicates,
        replicates_used: models.len(),
        replicates_failed: failed,
        intervals,
        warnings,
        replicate_models: if opts.keep_models { Some(models) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmb::CmbParams;
    use crate::simulate::{sample_campaign, CampaignDesign, DesignRow};

    fn reference_model() -> MaterialModel {
        MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            4.0,
            1.0,
        )
        .unwrap()
    }

    fn test_campaign(seed: u64) -> Campaign {
        let design = CampaignDesign {
            rows: [0.0025, 0.004, 0.006, 0.009, 0.014]
                .iter()
                .map(|&strain_amplitude| DesignRow {
                    strain_amplitude,
                    gauge_area_mm2: 263.9,
                    replicates: 6,
                })
                .collect(),
            seed,
        };
        sample_campaign(&reference_model(), &design).unwrap()
    }

    #[test]
    fn inverse_ecdf_quantile_examples() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(inverse_ecdf_quantile(&sorted, 0.5), 2.0);
        assert_eq!(inverse_ecdf_quantile(&sorted, 0.51), 3.0);
        assert_eq!(inverse_ecdf_quantile(&sorted, 0.25), 1.0);
        assert_eq!(inverse_ecdf_quantile(&sorted, 1.0), 4.0);
        assert_eq!(inverse_ecdf_quantile(&sorted, 0.0), 1.0);
        // two replicates: the tails are the extremes
        let pair = [10.0, 20.0];
        assert_eq!(inverse_ecdf_quantile(&pair, 0.0375), 10.0);
        assert_eq!(inverse_ecdf_quantile(&pair, 0.9625), 20.0);
    }

    #[test]
    fn two_replicates_give_min_and_max() {
        let campaign = test_campaign(1);
        let config = FitConfig::new(200_000.0);
        let fit = fit_mle(&campaign, &config).unwrap();
        let queries = [LifeQuery {
            strain_amplitude: 0.005,
            gauge_area_mm2: 263.9,
            quantile: 0.5,
        }];
        let opts = BootstrapOptions {
            replicates: 2,
            keep_models: true,
            ..Default::default()
        };
        let r = parametric_bootstrap(&campaign, &config, &fit.model, &queries, &opts).unwrap();
        assert_eq!(r.replicates_used, 2);
        assert!(!r.warnings.is_empty(), "small-B warning expected");
        let values: Vec<f64> = r
            .replicate_models
            .as_ref()
            .unwrap()
            .iter()
            .map(|m| {
                m.life_distribution(0.005, 263.9)
                    .unwrap()
                    .quantile(0.5)
                    .unwrap()
            })
            .collect();
        let iv = &r.intervals[0];
        assert_eq!(iv.lower, values.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(iv.upper, values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn intervals_bracket_the_point_estimate() {
        let campaign = test_campaign(5);
        let config = FitConfig::new(200_000.0);
        let fit = fit_mle(&campaign, &config).unwrap();
        let queries = [
            LifeQuery {
                strain_amplitude: 0.004,
                gauge_area_mm2: 263.9,
                quantile: 0.1,
            },
            LifeQuery {
                strain_amplitude: 0.008,
                gauge_area_mm2: 263.9,
                quantile: 0.5,
            },
            LifeQuery {
                strain_amplitude: 0.008,
                gauge_area_mm2: 50.0,
                quantile: 0.9,
            },
        ];
        let opts = BootstrapOptions {
            replicates: 120,
            ..Default::default()
        };
        let r = parametric_bootstrap(&campaign, &config, &fit.model, &queries, &opts).unwrap();
        assert_eq!(r.replicates_used + r.replicates_failed, 120);
        assert!(r.warnings.is_empty());
        for iv in &r.intervals {
            assert!(
                iv.lower <= iv.point && iv.point <= iv.upper,
                "interval [{}, {}] misses point {}",
                iv.lower,
                iv.upper,
                iv.point
            );
            assert!(iv.lower > 0.0);
        }
        // true lives lie inside their 92.5% intervals on this seed
        let truth = reference_model();
        for (q, iv) in queries.iter().zip(&r.intervals) {
            let t = truth
                .life_distribution(q.strain_amplitude, q.gauge_area_mm2)
                .unwrap()
                .quantile(q.quantile)
                .unwrap();
            assert!(
                iv.lower <= t && t <= iv.upper,
                "true life {t} outside [{}, {}]",
                iv.lower,
                iv.upper
            );
        }
    }

    #[test]
    fn bootstrap_is_reproducible_and_seed_sensitive() {
        let campaign = test_campaign(9);
        let config = FitConfig::new(200_000.0);
        let fit = fit_mle(&campaign, &config).unwrap();
        let queries = [LifeQuery {
            strain_amplitude: 0.006,
            gauge_area_mm2: 263.9,
            quantile: 0.5,
        }];
        let opts = BootstrapOptions {
            replicates: 32,
            seed: 4,
            ..Default::default()
        };
        let a = parametric_bootstrap(&campaign, &config, &fit.model, &queries, &opts).unwrap();
        let b = parametric_bootstrap(&campaign, &config, &fit.model, &queries, &opts).unwrap();
        assert_eq!(a.intervals[0].lower.to_bits(), b.intervals[0].lower.to_bits());
        assert_eq!(a.intervals[0].upper.to_bits(), b.intervals[0].upper.to_bits());
        let other_opts = BootstrapOptions { seed: 5, ..opts };
        let c =
            parametric_bootstrap(&campaign, &config, &fit.model, &queries, &other_opts).unwrap();
        assert_ne!(a.intervals[0].lower.to_bits(), c.intervals[0].lower.to_bits());
    }

    #[test]
    fn input_validation() {
        let campaign = test_campaign(2);
        let config = FitConfig::new(200_000.0);
        let fit = fit_mle(&campaign, &config).unwrap();
        let q = LifeQuery {
            strain_amplitude: 0.006,
            gauge_area_mm2: 263.9,
            quantile: 0.5,
        };
        let opts = BootstrapOptions::default();
        assert!(parametric_bootstrap(&campaign, &config, &fit.model, &[], &opts).is_err());
        let bad_level = BootstrapOptions { level: 1.0, ..opts };
        assert!(parametric_bootstrap(&campaign, &config, &fit.model, &[q], &bad_level).is_err());
        let zero_reps = BootstrapOptions { replicates: 0, ..opts };
        assert!(parametric_bootstrap(&campaign, &config, &fit.model, &[q], &zero_reps).is_err());
        let bad_query = LifeQuery { quantile: 1.5, ..q };
        let two = BootstrapOptions { replicates: 2, ..opts };
        assert!(
            parametric_bootstrap(&campaign, &config, &fit.model, &[bad_query], &two).is_err()
        );
    }
}
