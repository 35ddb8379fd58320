//! Small dense convex programs with duality certificates.

pub mod dmax;
pub mod relent;
pub mod sdp;

pub use dmax::{dmax, dmax_extension, min_entropy_program, DmaxExtensionResult, DmaxResult};
pub use relent::{relent_min_marginal, RelEntCertificate, RelEntConfig, RelEntResult};
pub use sdp::{
    hermitian_basis, hermitian_basis_orthogonal_to, sdp_solve, BlockMatrix, SdpProblem, SdpStatus,
    SdpSolution, SolveReport,
};
