//! Strain-controlled fatigue test campaigns: the observations the model is
//! calibrated against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One specimen tested to crack initiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub specimen_id: String,
    /// Controlled strain amplitude, absolute fraction.
    pub strain_amplitude: f64,
    /// Observed cycles to (macroscopic) crack initiation.
    pub cycles_to_initiation: f64,
    /// Gauge surface area of this specimen, mm^2.
    pub gauge_area_mm2: f64,
    pub temperature_c: Option<f64>,
    pub load_ratio: Option<f64>,
}

impl TestRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.strain_amplitude > 0.0) || !self.strain_amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "specimen {}: strain amplitude must be positive and finite, got {}",
                self.specimen_id, self.strain_amplitude
            )));
        }
        if self.strain_amplitude >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "specimen {}: strain amplitude {} is not a plausible fraction \
                 (did the file use percent?)",
                self.specimen_id, self.strain_amplitude
            )));
        }
        if !(self.cycles_to_initiation > 0.0) || !self.cycles_to_initiation.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "specimen {}: cycles to initiation must be positive and finite, got {}",
                self.specimen_id, self.cycles_to_initiation
            )));
        }
        if !(self.gauge_area_mm2 > 0.0) || !self.gauge_area_mm2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "specimen {}: gauge area must be positive and finite, got {}",
                self.specimen_id, self.gauge_area_mm2
            )));
        }
        Ok(())
    }
}

/// A collection of test records sharing one material state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub records: Vec<TestRecord>,
}

impl Campaign {
    pub fn new(records: Vec<TestRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParameter(
                "campaign must contain at least one record".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.specimen_id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate specimen_id {}",
                    r.specimen_id
                )));
            }
        }
        Ok(Campaign { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct strain amplitudes, ascending. Records are grouped by exact
    /// value: strain is the controlled variable, so replicates carry the
    /// identical number.
    pub fn strain_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.records.iter().map(|r| r.strain_amplitude).collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        levels
    }

    /// For each record, the index of its strain level in `strain_levels()`.
    pub fn level_index(&self) -> Vec<usize> {
        let levels = self.strain_levels();
        self.records
            .iter()
            .map(|r| {
                levels
                    .binary_search_by(|l| l.partial_cmp(&r.strain_amplitude).unwrap())
                    .expect("record strain is one of its own levels")
            })
            .collect()
    }
}
