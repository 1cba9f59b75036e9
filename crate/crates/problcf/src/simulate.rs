//! Synthetic campaigns and direct simulation of the crack-initiation
//! process.
//!
//! Two layers are exposed on purpose. [`sample_campaign`] draws specimen
//! lives from the closed-form Weibull first-crack law — the fast path for
//! power studies and calibration round trips. [`sample_mesh_first_crack`]
//! and [`sample_window_count`] instead simulate the underlying point
//! process itself (per-patch minima, Poisson window counts), which provides
//! an independent check that the closed forms really describe the process.
//!
//! Every draw is tied to `(seed, stream)` through [`crate::rng::stream_rng`],
//! with one stream per specimen, so output is reproducible and independent
//! of evaluation order.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::campaign::{Campaign, TestRecord};
use crate::cmb::MaterialModel;
use crate::error::{Error, Result};
use crate::life::LifeDistribution;
use crate::rng::stream_rng;
use crate::surface::{window_intensity, SurfaceMesh};

/// One row of a synthetic campaign: a strain level, a specimen size, and a
/// replicate count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub strain_amplitude: f64,
    pub gauge_area_mm2: f64,
    pub replicates: usize,
}

/// Layout of a synthetic campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignDesign {
    pub rows: Vec<DesignRow>,
    #[serde(default)]
    pub seed: u64,
}

impl CampaignDesign {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidParameter(
                "campaign design must contain at least one row".into(),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !(row.strain_amplitude > 0.0) || !row.strain_amplitude.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "design row {i}: strain amplitude must be positive, got {}",
                    row.strain_amplitude
                )));
            }
            if !(row.gauge_area_mm2 > 0.0) || !row.gauge_area_mm2.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "design row {i}: gauge area must be positive, got {}",
                    row.gauge_area_mm2
                )));
            }
            if row.replicates == 0 {
                return Err(Error::InvalidParameter(format!(
                    "design row {i}: replicates must be at least 1"
                )));
            }
        }
        Ok(())
    }

    pub fn total_specimens(&self) -> usize {
        self.rows.iter().map(|r| r.replicates).sum()
    }
}

/// First-crack life at survival probability `u`: the inverse of the survival
/// function, `eta * (-ln u)^(1/m)`.
///
/// Feeding a uniform `u` produces a draw from the life distribution; feeding
/// a chosen `u` pins the output for tests (`u = 1/e` returns exactly `eta`).
pub fn first_crack_for_uniform(dist: &LifeDistribution, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "survival probability must lie strictly inside (0, 1), got {u}"
        )));
    }
    Ok(dist.eta * (-u.ln()).powf(1.0 / dist.m))
}

fn draw_unit_open(rng: &mut impl Rng) -> f64 {
    // [0, 1) from the generator; reject 0 so ln(u) stays finite
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One first-crack life of a homogeneous specimen.
pub fn sample_first_crack(
    model: &MaterialModel,
    strain: f64,
    area: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let dist = model.life_distribution(strain, area)?;
    first_crack_for_uniform(&dist, draw_unit_open(rng))
}

/// First crack anywhere on a meshed surface, simulated as the minimum of
/// independent per-element first cracks — the defining construction, not
/// the closed-form composite.
pub fn sample_mesh_first_crack(
    model: &MaterialModel,
    mesh: &SurfaceMesh,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut min = f64::INFINITY;
    for e in &mesh.elements {
        let dist = model.life_distribution(e.strain_amplitude, e.area_mm2)?;
        let n = first_crack_for_uniform(&dist, draw_unit_open(rng))?;
        min = min.min(n);
    }
    Ok(min)
}

/// Number of cracks initiated on a patch within the cycle window
/// `[n1, n2]`, drawn from the Poisson count law of the process.
pub fn sample_window_count(
    model: &MaterialModel,
    area: f64,
    strain: f64,
    n1: f64,
    n2: f64,
    rng: &mut impl Rng,
) -> Result<u64> {
    let lambda = window_intensity(model, area, strain, n1, n2)?;
    if lambda == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(lambda).map_err(|e| {
        Error::Domain(format!(
            "window intensity {lambda} is not a valid Poisson mean: {e}"
        ))
    })?;
    Ok(poisson.sample(rng) as u64)
}

/// Draws a full synthetic campaign from `model` under `design`.
///
/// Specimen `k` (in row-major design order) uses random stream `k` of
/// `design.seed`, so adding rows or replicates never disturbs the draws of
/// earlier specimens.
pub fn sample_campaign(model: &MaterialModel, design: &CampaignDesign) -> Result<Campaign> {
    design.validate()?;
    let mut records = Vec::with_capacity(design.total_specimens());
    let mut specimen = 0u64;
    for row in &design.rows {
        let dist = model.life_distribution(row.strain_amplitude, row.gauge_area_mm2)?;
        for _ in 0..row.replicates {
            let mut rng = stream_rng(design.seed, specimen);
            let n = first_crack_for_uniform(&dist, draw_unit_open(&mut rng))?;
            records.push(TestRecord {
                specimen_id: format!("sim-{specimen:04}"),
                strain_amplitude: row.strain_amplitude,
                cycles_to_initiation: n,
                gauge_area_mm2: row.gauge_area_mm2,
                temperature_c: None,
                load_ratio: None,
            });
            specimen += 1;
        }
    }
    Campaign::new(records)
}
