//! Exact free-space solutions built from paraxial beams.
//!
//! A paraxial envelope `Xi(s, z)` at carrier `k` is lifted to a full spacetime
//! field by assigning each transverse momentum `q` a longitudinal wavenumber
//! `kappa(q, k)` and a frequency `omega(q, k)`. The henochromatic choice
//! `kappa = k - q^2/4k`, `omega = c (k + q^2/4k)` yields exact solutions of the
//! wave equation whose quantum inner product is a constant multiple of the
//! paraxial one.
//!
//! Every routine is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod dispersion;
pub mod error;
pub mod grid;
pub mod modes;
pub mod pulse;
pub mod quantum;
pub mod scalar;
pub mod synthesis;

pub use dispersion::{
    consistency_residual, positive_frequency_residual, target_parameters, uniqueness_sweep,
    unitarity_weight, BuiltinMap, LatticeRange, UniquenessReport,
};
pub use error::{Error, Result};
pub use grid::{forward_transform, inverse_transform, l2_inner_product, l2_norm};
pub use modes::{gram_matrix, make_initial_data, paraxial_inner_product, propagate_paraxial, ModeFamily};
pub use pulse::{decompose_henochromatic, pulse_compare, synthesize_multicarrier, PulseReport};
pub use quantum::{
    inner_product_multicarrier, inner_product_slice, inner_product_spectral, proportionality_constant,
    rho_invariance_check, synthesize_slice, unitarity_defect, weight_sweep, DefectReport, DensityOfStates,
};
pub use scalar::{Cplx, Scalar};
pub use synthesis::{synthesize, wave_residual_grid, wave_residual_spectral, wave_residual_spectral_norm};

pub type TransverseGrid = grid::TransverseGrid<f64>;
pub type SampledEnvelope = grid::SampledEnvelope<f64>;
pub type SpectralAmplitude = grid::SpectralAmplitude<f64>;
pub type ModeSpec = modes::ModeSpec<f64>;
pub type ParaxialBeam = modes::ParaxialBeam<f64>;
pub type DispersionMap = dispersion::DispersionMap<f64>;
pub type CarrierComb = quantum::CarrierComb<f64>;
pub type CarrierSpectra = quantum::CarrierSpectra<f64>;
pub type PhysicalConstants = quantum::PhysicalConstants<f64>;
pub type SpacetimeSampling = synthesis::SpacetimeSampling<f64>;
pub type SpacetimeField = synthesis::SpacetimeField<f64>;
pub type NullSampling = pulse::NullSampling<f64>;
pub type NullField = pulse::NullField<f64>;
pub type PulseSpec = pulse::PulseSpec<f64>;
pub type Complex = Cplx<f64>;
