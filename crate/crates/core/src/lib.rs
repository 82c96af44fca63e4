//! Stabilized finite elements for the linearized magnetohydrodynamics system.
//!
//! Velocity is discretized with H(div)-conforming BDM elements, pressure with
//! discontinuous polynomials and the magnetic induction with continuous vector
//! Lagrange elements. The velocity block is stabilized with symmetric interior
//! penalty, upwinding and a continuous-interior-penalty term along the magnetic
//! advection field.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: tetrahedral meshes, face topology and tetgen I/O
//! * [`quadrature`]: simplex quadrature rules
//! * [`fespace`]: the three discrete spaces and their interpolants
//! * [`forms`]: element and face assembly of every bilinear form
//! * [`system`]: the coupled block system, constraints and the direct solve
//! * [`mms`]: manufactured solution, forcing terms and boundary data
//! * [`analysis`]: error norms, regime quantities and convergence rates
//! * [`experiment`]: run configuration, experiment drivers and CSV output

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod fespace;
pub mod forms;
pub mod mesh;
pub mod mms;
pub mod quadrature;
pub mod sparse;
pub mod system;

pub use analysis::{ErrorReport, RateTable, RegimeDiagnostics};
pub use error::{Error, Result};
pub use experiment::{ExperimentReport, MeshSource, RunConfig, RunRecord};
pub use forms::{AdvectionField, AdvectionFields, FormVariant, PhysicalParams, Scheme, StabParams};
pub use fespace::{BdmSpace, LagrangeSpace, PressureSpace};
pub use mesh::{FaceRecord, MeshMetrics, TetMesh};
pub use quadrature::QuadRule;
pub use sparse::{CsrMatrix, Triplets};
pub use system::{BlockSystem, Solution, Spaces};

/// Column vector in physical space.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix; gradients are stored as `grad[(i, j)] = d v_i / d x_j`.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Loop execution mode for assembly and error integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}
