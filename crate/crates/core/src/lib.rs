//! Phase-space evolution of a single damped bosonic mode coupled to a thermal
//! bath.
//!
//! The Glauber-Sudarshan P function of the field is propagated analytically:
//! after a time t it is the initial P function shrunk by e^{−Γt} and smoothed
//! by a Gaussian of width n̄(1 − e^{−2Γt}). Closed forms are provided for a
//! catalog of classical and nonclassical initial states, together with a
//! truncated Fock-basis integrator of the master equation that serves as an
//! independent check.
//!
//! ```
//! use phasebath::{evolved_moments, initial_moments, BathParams, StateSpec};
//!
//! let state = StateSpec::PhotonAddedThermal { mbar: 1.0 };
//! let bath = BathParams::new(0.5, 2.0).unwrap();
//! let m = evolved_moments(&initial_moments(&state).unwrap(), bath, 1.0).unwrap();
//! assert!(m.mandel_q().unwrap() > 0.0);
//! ```

pub mod cli;
pub mod error;
pub mod evolution;
pub mod lindblad;
pub mod phase_core;
pub mod quadrature;
pub mod quasiprob;
pub mod states;

pub use error::{Error, Result};
pub use evolution::{
    convolve_p_numeric, evolve_p_closed_form, evolve_p_zero_temperature, evolved_moments, mandel_q,
    EvolvedPFunction, MomentSet,
};
pub use lindblad::{husimi_q, integrate, moments_from_rho, LindbladSettings};
pub use phase_core::{scale_bath, tricomi_u_half, BathParams, ComplexAmplitude, ScaledBathParams};
pub use quasiprob::{
    characteristic_function, p_to_q_smoothing, wigner_from_characteristic, GridSpec, Ordering, PhaseSpaceGrid,
};
pub use states::{fock_density, initial_moments, initial_p_function, FockDensityMatrix, PFunctionDescriptor, StateSpec};
