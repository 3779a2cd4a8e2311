//! Decentralized gradient formation control on triangulated Laman graphs.
//!
//! The crate simulates the distance-based gradient flow
//! `ẋ_i = Σ_j f_ij(d_ij) (x_j − x_i)` and checks its equilibrium structure:
//! independent partitions, Hessian signatures, the additive index formula,
//! the count of target orbits, and instability of line equilibria.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the precision used by the command-line tool.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod integrate;
pub mod io;
pub mod laws;
pub mod newton;
pub mod partition;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod system;

pub use analysis::{AnalysisError, AnalysisOptions, SamplerSpec, TargetOrbitCatalog, Verdict};
pub use error::{DynamicsError, GeometryError, GraphError, LawError};
pub use geometry::{Configuration, Se2};
pub use graph::{Edge, HennebergStep, TargetDistances, TriangulatedLamanGraph};
pub use laws::{InteractionLaw, Law, LawFamily};
pub use io::ParseError;
pub use scalar::Scalar;
pub use spectral::{Signature, Stability, ZeroTol};
pub use system::FormationSystem;

pub type Configuration64 = Configuration<f64>;
pub type Se2_64 = Se2<f64>;
pub type Law64 = Law<f64>;
pub type TargetDistances64 = TargetDistances<f64>;
pub type FormationSystem64 = FormationSystem<f64>;
pub type TargetOrbitCatalog64 = TargetOrbitCatalog<f64>;
