//! Exact unitary photon wave-packet dynamics in one-dimensional lossless
//! dielectric resonators.
//!
//! The crate is organised bottom-up:
//!
//! - [`media`]: units, layer stacks, the Fabry-Pérot builder and named regions.
//! - [`scatter`]: per-frequency propagation-matrix solution of the 1D
//!   Helmholtz equation (scattering amplitudes and mode fields).
//! - [`analytic`]: closed-form resonance theory and the on-resonance ray model.
//! - [`pulse`]: spectral wave-packet synthesis and space-time field assembly.
//! - [`control`]: coherent control schedules (truncation, confinement).
//! - [`markov`]: Hilbert-Schmidt distance and non-Markovian content of
//!   region-restricted dynamics.
//! - [`scenario`]: declarative scenario files, run orchestration and output
//!   files used by the `cavity-ctl` binary.
//!
//! Internally everything is expressed in natural units: lengths in λ0, times
//! in τ0 and frequencies in ω0, with c = 1 λ0/τ0 and ω0 τ0 = 2π.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod control;
mod error;
pub mod markov;
pub mod media;
pub mod pulse;
mod quadrature;
pub mod scatter;
pub mod scenario;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Commonly used items.
pub mod prelude {
    pub use crate::analytic::{
        geometric_sum, lorentzian_spectrum, mirror_transmission, raytrace, resonance_constants,
        weighted_sum, RayEvent, ResonanceConstants, Side,
    };
    pub use crate::control::{design_confinement, design_truncation, ControlIntent, ControlSchedule};
    pub use crate::markov::{
        distance_series, hs_distance, nonmarkov_content, overlap_matrix, DistanceSeries,
        NonMarkovSeries, OverlapMatrix, TrajectoryPair,
    };
    pub use crate::media::{
        build_fabry_perot, default_regions, FabryPerotSpec, Layer, LayerStack, Medium, RegionSpec,
        UnitSystem,
    };
    pub use crate::pulse::{
        apply_injection, assemble_field, coherent_detector, make_frequency_grid, region_energy, smoothed_rect_spectrum,
        Direction, FrequencyGrid, Normalization, PulseInjection, SpaceTimeField, SpectralEnvelope,
        Synthesizer, TimeGrid,
    };
    pub use crate::scatter::{
        interface_matrix, layer_matrix, mode_field, stack_scattering, Incidence, ModeField,
        ScatteringAmplitudes, TransferMatrix,
    };
    pub use crate::{Complex64, Error, Result};
}
