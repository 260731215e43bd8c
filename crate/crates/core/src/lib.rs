//! Certification and simulation of periodic delayed neural networks.
//!
//! * [`model`]: periodic coefficients, activations and validation.
//! * [`kernels`]: delay measures (atoms and densities).
//! * [`certify`]: weight search, margins, decay rates and competing criteria.
//! * [`integrate`]: fixed-step RK4 with a Hermite history buffer.
//! * [`periodic`]: period map, fixed-point iteration and decay fits.
//! * [`ensemble`]: seeded random discrete-delay networks.

pub mod certify;
pub mod ensemble;
pub mod integrate;
pub mod kernels;
pub mod model;
pub mod periodic;

pub use certify::{certify, Certificate, CertifyOptions};
pub use integrate::{simulate, InitialCondition, SimOptions, Trajectory};
pub use model::{builtin_example, NetworkModel};
