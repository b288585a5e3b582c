//! Batch Gaussian-process bandit optimization.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which the harness uses.

pub mod domain;
pub mod environments;
pub mod gp;
pub mod kernels;
pub mod infogain;
pub mod linalg;
pub mod policies;
pub mod scalar;
pub mod schedules;

pub use domain::{Domain as GenericDomain, DomainError, Point as GenericPoint};
pub use environments::EnvironmentError;
pub use gp::GpError;
pub use infogain::InfoGainError;
pub use kernels::KernelError;
pub use policies::{PolicyError, PolicyKind, Round, Selection};
pub use schedules::{FeedbackSchedule, ScheduleError};
pub use scalar::Scalar;

pub type Point = domain::Point<f64>;
pub type Domain = domain::Domain<f64>;
pub type Kernel = kernels::Kernel<f64>;
pub type Posterior = gp::Posterior<f64>;
pub type Environment = environments::Environment<f64>;
pub type PolicyConfig = policies::PolicyConfig<f64>;
pub type Policy = policies::Policy<f64>;
pub type GammaEstimator = infogain::GammaEstimator<f64>;
