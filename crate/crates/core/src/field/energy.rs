use super::State;
use crate::error::{Error, Result};

/// Isentropic equation of state `p(ϱ) = a ϱ^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eos {
    pub a: f64,
    pub gamma: f64,
}

impl Eos {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("must be >= 0, got {a}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be > 1, got {gamma}")));
        }
        Ok(Self { a, gamma })
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    #[inline]
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `P(ϱ) = a/(γ-1) ϱ^γ`.
    #[inline]
    pub fn potential(&self, rho: f64) -> f64 {
        self.a / (self.gamma - 1.0) * rho.powf(self.gamma)
    }

    /// `P'(ϱ) = aγ/(γ-1) ϱ^{γ-1}`.
    #[inline]
    pub fn potential_derivative(&self, rho: f64) -> f64 {
        self.a * self.gamma / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }

    /// `E(ϱ, m) = |m|²/(2ϱ) + P(ϱ)`; zero for the vacuum `ϱ = 0, m = 0`.
    pub fn energy_density(&self, rho: f64, m: &[f64]) -> Option<f64> {
        let m2: f64 = m.iter().map(|x| x * x).sum();
        if rho > 0.0 {
            Some(0.5 * m2 / rho + self.potential(rho))
        } else if rho == 0.0 && m2 == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// `Σ_K |K| E(ϱ_K, m_K)`.
pub fn total_energy(state: &State, eos: &Eos) -> Result<f64> {
    let mut sum = 0.0;
    for (k, &rho) in state.rho.values().iter().enumerate() {
        sum += eos
            .energy_density(rho, state.mom.cell(k))
            .ok_or(Error::InfiniteEnergy { cell: k, rho })?;
    }
    Ok(sum * state.mesh().cell_volume())
}

/// Relative energy of `state` with respect to `reference`:
/// `∫ ½ϱ|u - U|² + P(ϱ) - P'(R)(ϱ - R) - P(R)`.
pub fn relative_energy(state: &State, reference: &State, eos: &Eos) -> Result<f64> {
    state.mesh().check_same(reference.mesh())?;
    let mut sum = 0.0;
    for k in 0..state.mesh().num_cells() {
        let rho = state.rho.values()[k];
        let r = reference.rho.values()[k];
        if r <= 0.0 {
            return Err(Error::DensityFloor { cell: k, rho: r });
        }
        let m = state.mom.cell(k);
        let big_m = reference.mom.cell(k);
        let kinetic = if rho > 0.0 {
            // ½ϱ|m/ϱ - M/R|² = ½|m - ϱU|²/ϱ
            m.iter()
                .zip(big_m)
                .map(|(mi, bi)| {
                    let diff = mi - rho * bi / r;
                    diff * diff
                })
                .sum::<f64>()
                * 0.5
                / rho
        } else if rho == 0.0 && m.iter().all(|&x| x == 0.0) {
            0.0
        } else {
            return Err(Error::InfiniteEnergy { cell: k, rho });
        };
        let bregman =
            eos.potential(rho) - eos.potential_derivative(r) * (rho - r) - eos.potential(r);
        sum += kinetic + bregman;
    }
    Ok(sum * state.mesh().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::mesh::TorusMesh;
    use std::sync::Arc;

    fn mesh() -> Arc<TorusMesh> {
        Arc::new(TorusMesh::new(4, 2).unwrap())
    }

    #[test]
    fn rest_state_energy() {
        let s = State::uniform(mesh(), 1.0, &[0.0, 0.0]).unwrap();
        let e = total_energy(&s, &Eos::new(1.0, 1.4).unwrap()).unwrap();
        assert!((e - 10.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_energy_is_zero() {
        let s = State::new(Field::zeros(mesh(), 1), Field::zeros(mesh(), 2)).unwrap();
        assert_eq!(total_energy(&s, &Eos::new(1.0, 1.4).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn moving_state_energy() {
        let s = State::uniform(mesh(), 2.0, &[1.0, 0.0]).unwrap();
        let e = total_energy(&s, &Eos::new(1.0, 1.4).unwrap()).unwrap();
        let per_cell = 0.5 * 4.0 / 2.0 + 2f64.powf(1.4) / 0.4;
        assert!((e - 4.0 * per_cell).abs() < 1e-12);
    }

    #[test]
    fn momentum_without_mass_is_infinite() {
        let rho = Field::zeros(mesh(), 1);
        let mom = Field::constant(mesh(), &[1.0, 0.0]).unwrap();
        let s = State::new(rho, mom).unwrap();
        assert!(matches!(
            total_energy(&s, &Eos::new(1.0, 1.4).unwrap()),
            Err(Error::InfiniteEnergy { cell: 0, .. })
        ));
    }

    #[test]
    fn relative_energy_cases() {
        let eos = Eos::new(1.0, 1.4).unwrap();
        let r = State::uniform(mesh(), 1.3, &[0.2, -0.1]).unwrap();
        assert_eq!(relative_energy(&r, &r, &eos).unwrap(), 0.0);

        let delta = 0.05;
        let s = State::uniform(mesh(), 1.3, &[0.2 + delta, -0.1]).unwrap();
        let expected = 0.5 * delta * delta * 1.3 * 4.0;
        assert!((relative_energy(&s, &r, &eos).unwrap() - expected).abs() < 1e-14);

        let eos2 = Eos::new(1.0, 2.0).unwrap();
        let s = State::uniform(mesh(), 1.3 + delta, &[0.2, -0.1]).unwrap();
        let expected = delta * delta * 4.0;
        assert!((relative_energy(&s, &r, &eos2).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn rejects_mismatched_meshes() {
        let eos = Eos::new(1.0, 1.4).unwrap();
        let a = State::uniform(mesh(), 1.0, &[0.0, 0.0]).unwrap();
        let b = State::uniform(Arc::new(TorusMesh::new(8, 2).unwrap()), 1.0, &[0.0, 0.0]).unwrap();
        assert!(matches!(
            relative_energy(&a, &b, &eos),
            Err(Error::MeshMismatch { .. })
        ));
    }

    #[test]
    fn relative_energy_convexity_witness() {
        // min over a grid of states in [0.5, 2] x [-1, 1]^2 of E(s|r) / |s - r|²
        let eos = Eos::new(1.0, 1.4).unwrap();
        let m1 = Arc::new(TorusMesh::new(2, 2).unwrap());
        let grid: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
        let mut min_ratio = f64::INFINITY;
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    let s =
                        State::uniform(m1.clone(), 0.5 + 1.5 * a, &[2.0 * b - 1.0, 0.0]).unwrap();
                    let r =
                        State::uniform(m1.clone(), 0.5 + 1.5 * c, &[1.0 - 2.0 * a, 0.3]).unwrap();
                    let dist2 = crate::field::lp_norm(&s.rho.sub(&r.rho).unwrap(), 2.0).powi(2)
                        + crate::field::lp_norm(&s.mom.sub(&r.mom).unwrap(), 2.0).powi(2);
                    if dist2 > 0.0 {
                        min_ratio = min_ratio.min(relative_energy(&s, &r, &eos).unwrap() / dist2);
                    }
                }
            }
        }
        assert!(min_ratio > 0.01, "min ratio {min_ratio}");
    }
}
