//! Surface crack-initiation point process over specimen and component
//! surfaces.
//!
//! Crack nuclei are modeled as a point process on the gauge surface that is
//! simple (no two cracks at the same site), locally determined (the chance of
//! a crack in a patch depends only on that patch's area and strain history),
//! and independent across disjoint patches. Those three properties force the
//! crack count in any patch to be Poisson with a mean measure
//!
//! ```text
//! Lambda(n; a, eps) = (a / a_ref) * (n / N_det(eps))^m
//! ```
//!
//! where `N_det(eps)` is the deterministic CMB life at the patch strain.
//! First-crack life of a patch is then Weibull, and a surface made of many
//! patches fails (first crack anywhere) with scale
//!
//! ```text
//! eta = ( sum_j (a_j/a_ref) * N_det_j^(-m) )^(-1/m)
//! ```
//!
//! The sum is accumulated in log space, in stored element order, so repeated
//! runs over the same mesh are bit-identical.

use serde::{Deserialize, Serialize};

use crate::cmb::MaterialModel;
use crate::error::{Error, Result};
use crate::life::LifeDistribution;

/// One finite patch of component surface at (approximately) uniform strain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceElement {
    pub element_id: String,
    pub area_mm2: f64,
    /// Local strain amplitude, absolute fraction.
    pub strain_amplitude: f64,
}

/// A component surface discretized into elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub elements: Vec<SurfaceElement>,
}

impl SurfaceMesh {
    pub fn new(elements: Vec<SurfaceElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter(
                "surface mesh must contain at least one element".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &elements {
            if !(e.area_mm2 > 0.0) || !e.area_mm2.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "element {}: area must be positive and finite, got {}",
                    e.element_id, e.area_mm2
                )));
            }
            if !(e.strain_amplitude > 0.0) || !e.strain_amplitude.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "element {}: strain amplitude must be positive and finite, got {}",
                    e.element_id, e.strain_amplitude
                )));
            }
            if !seen.insert(e.element_id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate element_id {}",
                    e.element_id
                )));
            }
        }
        Ok(SurfaceMesh { elements })
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area_mm2).sum()
    }
}

/// Expected number of cracks initiated on a patch of `area` at `strain`
/// within the cycle window `[n1, n2]`.
pub fn window_intensity(
    model: &MaterialModel,
    area: f64,
    strain: f64,
    n1: f64,
    n2: f64,
) -> Result<f64> {
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::Domain(format!(
            "patch area must be positive, got {area}"
        )));
    }
    if !(n1 >= 0.0) || !(n2 >= n1) || !n2.is_finite() {
        return Err(Error::Domain(format!(
            "cycle window must satisfy 0 <= n1 <= n2 < inf, got [{n1}, {n2}]"
        )));
    }
    let n_det = model.cmb.cycles_for_strain(strain)?;
    let ln_a = (area / model.a_ref).ln();
    let at = |n: f64| -> f64 {
        if n == 0.0 {
            0.0
        } else {
            (ln_a + model.m * (n / n_det).ln()).exp()
        }
    };
    Ok(at(n2) - at(n1))
}

/// Per-element Weibull scales `(a_j/a_ref)^(-1/m) * N_det_j`, in element
/// order.
pub fn element_scales(model: &MaterialModel, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
    mesh.elements
        .iter()
        .map(|e| {
            Ok(model
                .life_distribution(e.strain_amplitude, e.area_mm2)?
                .eta)
        })
        .collect()
}

/// First-crack life distribution of the whole mesh.
///
/// The composite scale is a weighted power mean of the elements' CMB lives:
/// `eta = (sum_j (a_j/a_ref) * N_det_j^(-m))^(-1/m)`, evaluated through a
/// log-sum-exp so that elements spanning many decades of life cannot
/// overflow, and summed in stored element order for run-to-run bit
/// stability.
pub fn mesh_life_distribution(
    model: &MaterialModel,
    mesh: &SurfaceMesh,
) -> Result<LifeDistribution> {
    let mut terms = Vec::with_capacity(mesh.elements.len());
    for e in &mesh.elements {
        let n_det = model.cmb.cycles_for_strain(e.strain_amplitude)?;
        terms.push((e.area_mm2 / model.a_ref).ln() - model.m * n_det.ln());
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for t in &terms {
        sum += (t - max).exp();
    }
    let log_sum = max + sum.ln();
    let eta = (-log_sum / model.m).exp();
    LifeDistribution::new(eta, model.m)
}

/// Cylindrical gauge section of a strain-controlled fatigue specimen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecimenGeometry {
    pub gauge_length_mm: f64,
    pub gauge_diameter_mm: f64,
}

impl SpecimenGeometry {
    pub fn new(gauge_length_mm: f64, gauge_diameter_mm: f64) -> Result<Self> {
        if !(gauge_length_mm > 0.0) || !gauge_length_mm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gauge length must be positive, got {gauge_length_mm}"
            )));
        }
        if !(gauge_diameter_mm > 0.0) || !gauge_diameter_mm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gauge diameter must be positive, got {gauge_diameter_mm}"
            )));
        }
        Ok(SpecimenGeometry {
            gauge_length_mm,
            gauge_diameter_mm,
        })
    }

    /// Lateral surface of the gauge cylinder, `pi * D * L`, in mm^2.
    pub fn gauge_surface_area_mm2(&self) -> f64 {
        std::f64::consts::PI * self.gauge_diameter_mm * self.gauge_length_mm
    }

    /// Volume of the gauge cylinder, `pi * (D/2)^2 * L`, in mm^3.
    pub fn gauge_volume_mm3(&self) -> f64 {
        std::f64::consts::PI * (self.gauge_diameter_mm / 2.0).powi(2) * self.gauge_length_mm
    }
}

/// Nominal stress amplitude a force-controlled rig must apply to a specimen
/// of diameter `d_target` to match the stress `s_reference` seen by a
/// specimen of diameter `d_reference` under the same force:
/// `s_target = s_reference * (d_reference / d_target)^2`.
pub fn equal_force_stress(s_reference: f64, d_reference: f64, d_target: f64) -> Result<f64> {
    if !(s_reference > 0.0) || !(d_reference > 0.0) || !(d_target > 0.0) {
        return Err(Error::Domain(format!(
            "stress and diameters must be positive, got s={s_reference}, \
             d_ref={d_reference}, d_target={d_target}"
        )));
    }
    Ok(s_reference * (d_reference / d_target).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmb::CmbParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(m: f64) -> MaterialModel {
        MaterialModel::new(
            CmbParams::new(200_000.0, 2000.0, -0.1, 0.5, -0.6).unwrap(),
            m,
            1.0,
        )
        .unwrap()
    }

    fn element(id: &str, area: f64, strain: f64) -> SurfaceElement {
        SurfaceElement {
            element_id: id.into(),
            area_mm2: area,
            strain_amplitude: strain,
        }
    }

    #[test]
    fn gauge_geometry_reference_values() {
        // pi * 7 * 12 and pi * 3.5^2 * 12, frozen from high-precision arithmetic
        let g = SpecimenGeometry::new(12.0, 7.0).unwrap();
        assert_relative_eq!(g.gauge_surface_area_mm2(), 263.89378290154264, max_relative = 1e-15);
        assert_relative_eq!(g.gauge_volume_mm3(), 461.8141200776996, max_relative = 1e-15);
    }

    #[test]
    fn equal_force_stress_reference_value() {
        // shrinking a 10 mm gauge to 7 mm concentrates stress by (10/7)^2
        let s = equal_force_stress(1.0, 10.0, 7.0).unwrap();
        assert_relative_eq!(s, 2.0408163265306123, max_relative = 1e-15);
        // and the transform is its own inverse
        let back = equal_force_stress(s, 7.0, 10.0).unwrap();
        assert_relative_eq!(back, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn homogeneous_mesh_matches_closed_form() {
        // k identical elements at one strain collapse to the area-scaling law
        let mm = model(2.5);
        let strain = 0.004;
        let k = 7;
        let elements: Vec<_> = (0..k)
            .map(|i| element(&format!("e{i}"), 3.25, strain))
            .collect();
        let mesh = SurfaceMesh::new(elements).unwrap();
        let d = mesh_life_distribution(&mm, &mesh).unwrap();
        let closed = mm
            .life_distribution(strain, 3.25 * k as f64)
            .unwrap();
        assert_relative_eq!(d.eta, closed.eta, max_relative = 1e-12);
    }

    #[test]
    fn single_element_mesh_matches_patch_distribution() {
        let mm = model(3.0);
        let mesh = SurfaceMesh::new(vec![element("only", 42.0, 0.006)]).unwrap();
        let d = mesh_life_distribution(&mm, &mesh).unwrap();
        let patch = mm.life_distribution(0.006, 42.0).unwrap();
        assert_relative_eq!(d.eta, patch.eta, max_relative = 1e-13);
    }

    #[test]
    fn mesh_survival_factorizes_over_partition() {
        // independence across disjoint patches: S_union = S_1 * S_2
        let mm = model(2.2);
        let part1 = vec![element("a", 2.0, 0.003), element("b", 5.0, 0.005)];
        let part2 = vec![element("c", 1.5, 0.004), element("d", 8.0, 0.0035)];
        let union: Vec<_> = part1.iter().chain(part2.iter()).cloned().collect();
        let d1 = mesh_life_distribution(&mm, &SurfaceMesh::new(part1).unwrap()).unwrap();
        let d2 = mesh_life_distribution(&mm, &SurfaceMesh::new(part2).unwrap()).unwrap();
        let du = mesh_life_distribution(&mm, &SurfaceMesh::new(union).unwrap()).unwrap();
        for n in [1e3, 1e4, 1e5] {
            assert_relative_eq!(
                du.survival(n),
                d1.survival(n) * d2.survival(n),
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn hotspot_dominates_composite_scale() {
        // a small high-strain patch controls the first crack
        let mm = model(6.0);
        let mesh = SurfaceMesh::new(vec![
            element("bulk", 250.0, 0.002),
            element("hotspot", 1.0, 0.012),
        ])
        .unwrap();
        let d = mesh_life_distribution(&mm, &mesh).unwrap();
        let hotspot = mm.life_distribution(0.012, 1.0).unwrap();
        let bulk = mm.life_distribution(0.002, 250.0).unwrap();
        assert!(d.eta < hotspot.eta);
        assert!(d.eta > 0.9 * hotspot.eta, "hotspot should dominate");
        assert!(bulk.eta / d.eta > 10.0);
    }

    #[test]
    fn window_intensity_matches_mean_measure() {
        let mm = model(2.5);
        let n_det = mm.cmb.cycles_for_strain(0.004).unwrap();
        let a = 17.0;
        let got = window_intensity(&mm, a, 0.004, 0.0, n_det).unwrap();
        assert_relative_eq!(got, a, max_relative = 1e-12);
        // additivity over adjoining windows
        let w1 = window_intensity(&mm, a, 0.004, 0.0, 5e3).unwrap();
        let w2 = window_intensity(&mm, a, 0.004, 5e3, 2e4).unwrap();
        let w12 = window_intensity(&mm, a, 0.004, 0.0, 2e4).unwrap();
        assert_relative_eq!(w1 + w2, w12, max_relative = 1e-12);
    }

    #[test]
    fn survival_is_zero_crack_probability() {
        // P(no crack by n) = exp(-Lambda(n)) ties the Poisson count to the
        // Weibull first-crack law
        let mm = model(3.5);
        let (a, strain, n) = (30.0, 0.005, 2e3);
        let lambda = window_intensity(&mm, a, strain, 0.0, n).unwrap();
        let d = mm.life_distribution(strain, a).unwrap();
        assert_relative_eq!(d.survival(n), (-lambda).exp(), max_relative = 1e-11);
    }

    #[test]
    fn mesh_validation() {
        assert!(SurfaceMesh::new(vec![]).is_err());
        assert!(SurfaceMesh::new(vec![element("a", 0.0, 0.004)]).is_err());
        assert!(SurfaceMesh::new(vec![element("a", 1.0, -0.004)]).is_err());
        let dup = SurfaceMesh::new(vec![element("a", 1.0, 0.004), element("a", 2.0, 0.005)]);
        assert!(matches!(dup, Err(Error::InvalidParameter(m)) if m.contains("duplicate")));
    }

    #[test]
    fn window_validation() {
        let mm = model(2.0);
        assert!(window_intensity(&mm, 1.0, 0.004, 5.0, 2.0).is_err());
        assert!(window_intensity(&mm, 1.0, 0.004, -1.0, 2.0).is_err());
        assert!(window_intensity(&mm, 0.0, 0.004, 0.0, 2.0).is_err());
    }

    #[test]
    fn composite_scale_is_bit_stable_across_runs() {
        let mm = model(2.7);
        let elements: Vec<_> = (0..50)
            .map(|i| element(&format!("e{i}"), 0.5 + i as f64 * 0.13, 0.002 + i as f64 * 1e-4))
            .collect();
        let mesh = SurfaceMesh::new(elements).unwrap();
        let first = mesh_life_distribution(&mm, &mesh).unwrap().eta;
        for _ in 0..5 {
            let again = mesh_life_distribution(&mm, &mesh).unwrap().eta;
            assert_eq!(first.to_bits(), again.to_bits());
        }
    }

    proptest! {
        #[test]
        fn composite_never_exceeds_weakest_element(
            m in 1.2f64..20.0,
            areas in prop::collection::vec(0.1f64..100.0, 1..12),
            strains in prop::collection::vec(0.0015f64..0.02, 12),
        ) {
            let mm = model(m);
            let elements: Vec<_> = areas
                .iter()
                .zip(&strains)
                .enumerate()
                .map(|(i, (&a, &s))| element(&format!("e{i}"), a, s))
                .collect();
            let mesh = SurfaceMesh::new(elements).unwrap();
            let d = mesh_life_distribution(&mm, &mesh).unwrap();
            let min_scale = element_scales(&mm, &mesh)
                .unwrap()
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d.eta <= min_scale * (1.0 + 1e-12));
        }

        #[test]
        fn enlarging_a_patch_shortens_life(
            m in 1.2f64..20.0,
            strain in 0.002f64..0.015,
            a in 1.0f64..100.0,
            factor in 1.5f64..50.0,
        ) {
            let mm = model(m);
            let small = mm.life_distribution(strain, a).unwrap();
            let large = mm.life_distribution(strain, a * factor).unwrap();
            prop_assert!(large.eta < small.eta);
            // exact power law in area
            let expected = small.eta * factor.powf(-1.0 / m);
            prop_assert!((large.eta - expected).abs() / expected < 1e-10);
        }
    }
}
