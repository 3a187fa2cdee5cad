use serde::{Deserialize, Serialize};

/// Scalar constants and exponents of the model.
///
/// Regularization strengths and the time step live in
/// [`SchemeConfig`](crate::scheme::SchemeConfig); every constitutive
/// function that depends on the lower-order regularization takes it as an
/// explicit `eps` argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Number of water components.
    pub species: usize,
    /// Pressure exponent, must exceed 2.
    pub gamma: f64,
    /// Scaled heat capacity of water.
    pub c_w: f64,
    /// Scaled heat capacity of the skeleton.
    pub c_s: f64,
    /// Atmospheric (air-phase) pressure.
    pub p_at: f64,
    /// Absolute permeability.
    pub permeability: f64,
    /// Robin heat-exchange coefficient.
    pub alpha: f64,
    /// Boundary reference temperature.
    pub t0: f64,
    /// Boundary reference chemical potentials; empty means all zero.
    pub mu0: Vec<f64>,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Growth exponent of the reaction closure.
    pub reaction_exponent: f64,
    /// Relative permeability exponent.
    pub alpha_r: f64,
    /// Heat conductivity growth exponent.
    pub beta: f64,
    /// Capillary gradient exponent.
    pub q: f64,
    /// Capillary pressure blow-up exponent at zero saturation.
    pub k_p: f64,
    /// Capillary pressure blow-up constant.
    pub c_p: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            species: 2,
            gamma: 3.0,
            c_w: 1.0,
            c_s: 1.0,
            p_at: 2.0,
            permeability: 1.0,
            alpha: 1.0,
            t0: 1.0,
            mu0: Vec::new(),
            k1: 5.0,
            k2: 6.0,
            k3: 7.0,
            reaction_exponent: 3.0,
            alpha_r: 2.0,
            beta: 4.0,
            q: 1.5,
            k_p: 2.0,
            c_p: 1.0,
        }
    }
}

impl ModelParams {
    /// Boundary reference potentials `mu0 / T0`, padded with zeros.
    pub fn boundary_potentials(&self) -> Vec<f64> {
        (0..self.species)
            .map(|i| self.mu0.get(i).copied().unwrap_or(0.0) / self.t0)
            .collect()
    }
}
