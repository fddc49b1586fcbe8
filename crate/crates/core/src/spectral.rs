//! Per-component energy statistics of transform coefficients.

use crate::error::{JndError, Result};
use crate::klt::CoefficientMatrix;

/// Total energies at or below this (intensity² units) mark a degenerate image.
pub const DEGENERATE_ENERGY: f64 = 1e-12;

/// Mean energies `E`, normalized energies `p` and their running sum `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub energy: Vec<f64>,
    pub normalized: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl EnergyProfile {
    pub fn from_coefficients(y: &CoefficientMatrix) -> Result<Self> {
        let energy = coefficient_energy(y);
        let normalized = normalize_energy(&energy)?;
        let cumulative = cumulative_energy(&normalized);
        Ok(EnergyProfile {
            energy,
            normalized,
            cumulative,
        })
    }

    /// Cumulative energy captured by the first `count` components (1-based).
    pub fn cumulative_at(&self, count: usize) -> Result<f64> {
        let k = self.cumulative.len();
        if count == 0 || count > k {
            return Err(JndError::ComponentOutOfRange { count, max: k });
        }
        Ok(self.cumulative[count - 1])
    }
}

/// `E_k = (1/S) Σ_s Y(k,s)²`.
pub fn coefficient_energy(y: &CoefficientMatrix) -> Vec<f64> {
    let s = y.count().max(1) as f64;
    y.matrix()
        .row_iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>() / s)
        .collect()
}

pub fn normalize_energy(energy: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = energy.iter().sum();
    if !(total > DEGENERATE_ENERGY) {
        return Err(JndError::DegenerateEnergy(total));
    }
    Ok(energy.iter().map(|e| e / total).collect())
}

pub fn cumulative_energy(normalized: &[f64]) -> Vec<f64> {
    normalized
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn energy_of_simple_rows() {
        let y =
            CoefficientMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, -2.0]));
        assert_eq!(coefficient_energy(&y), vec![0.0, 4.0]);
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_energy(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        let uniform = normalize_energy(&[2.0; 64]).unwrap();
        assert!(uniform.iter().all(|&p| p == 1.0 / 64.0));
        assert!(matches!(
            normalize_energy(&[0.0, 0.0]),
            Err(JndError::DegenerateEnergy(_))
        ));
    }

    #[test]
    fn cumulative_of_pair() {
        assert_eq!(cumulative_energy(&[0.75, 0.25]), vec![0.75, 1.0]);
    }

    #[test]
    fn cumulative_at_bounds() {
        let y = CoefficientMatrix::from_matrix(DMatrix::from_row_slice(2, 1, &[3.0, 1.0]));
        let profile = EnergyProfile::from_coefficients(&y).unwrap();
        assert_eq!(profile.cumulative_at(1).unwrap(), 0.9);
        assert_eq!(profile.cumulative_at(2).unwrap(), 1.0);
        assert!(profile.cumulative_at(0).is_err());
        assert!(profile.cumulative_at(3).is_err());
    }

    proptest! {
        #[test]
        fn cumulative_profile_is_monotone_and_ends_at_one(
            energy in prop::collection::vec(0.0f64..1e6, 1..80)
                .prop_filter("non-degenerate", |e| e.iter().sum::<f64>() > 1e-6)
        ) {
            let p = normalize_energy(&energy).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let cum = cumulative_energy(&p);
            prop_assert!(cum.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!((cum[cum.len() - 1] - 1.0).abs() < 1e-9);
            prop_assert!(cum.iter().all(|&c| c <= 1.0 + 1e-9));
        }

        #[test]
        fn sign_flips_do_not_change_energy(
            rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 5), 4),
            flip in 0usize..4,
        ) {
            let flat: Vec<f64> = rows.concat();
            let y = DMatrix::from_row_slice(4, 5, &flat);
            let mut flipped = y.clone();
            flipped.row_mut(flip).neg_mut();
            prop_assert_eq!(
                coefficient_energy(&CoefficientMatrix::from_matrix(y)),
                coefficient_energy(&CoefficientMatrix::from_matrix(flipped))
            );
        }
    }
}
