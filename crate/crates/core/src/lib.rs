//! Energy-flux bookkeeping for bipartite quantum systems.
//!
//! A bipartite system `H = H₁ + H₂ + H₁₂` exchanges energy internally through
//! the interaction `H₁₂ = Σᵢ Aᵢ ⊗ Bᵢ`. In the local effective measurement
//! basis (LEMBAS) the energy flux into a partition splits into a work flux
//! (no change of the local von Neumann entropy) and a heat flux (driven by
//! bipartite correlations, or by a Markovian bath). This crate implements
//!
//! * dense complex operator/density-matrix primitives ([`operator`]),
//! * a small catalog of spin–oscillator models and thermal baths ([`models`]),
//! * the LEMBAS split and all work/heat flux formulas ([`flux`]),
//! * exact closed-system propagation and Lindblad RK4 integration
//!   ([`dynamics`]),
//! * the reversible/irreversible entropy decomposition ([`entropy`]),
//! * closed-form reference solutions used as independent test oracles
//!   ([`oracles`]),
//! * a config-driven scenario runner with CSV output ([`scenario`]).
//!
//! Units: ħ = 1, all energies in one arbitrary unit E, times in 1/E.
//! Scenario files may declare an `energy_unit` divisor so that parameter sets
//! quoted in e.g. cm⁻¹ run internally at O(1) magnitudes.

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod flux;
pub mod models;
pub mod operator;
pub mod oracles;
pub mod scenario;
pub mod tolerances;

pub use error::{Error, Result};
pub use operator::{DensityMatrix, Operator, Side};
