//! Free energy, derived thermodynamic quantities, transport closures and
//! hypothesis checks.

mod closures;
mod hypotheses;
mod inversion;
mod params;
pub mod quadrature;
mod thermo;
mod transport;

use serde::{Deserialize, Serialize};

pub use closures::{
    projector, projector_matrix, signed_power, BoundaryMatrix, ClosureSet, OnsagerMatrix,
    Porosity,
};
pub use hypotheses::{HypothesisCheck, HypothesisReport, S0};
pub use inversion::densities;
pub use params::ModelParams;
pub use thermo::{
    chemical_potentials, entropy, free_energy, internal_energy, pressure, skeleton_energy,
    skeleton_entropy, ThermoPoint,
};
pub use transport::OnsagerFluxes;

/// Parameters together with the closure functions they parametrize.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub params: ModelParams,
    pub closures: ClosureSet,
}
