//! Eigenvalues, eigenfunction diagnostics, exceptional points and resonance
//! cross sections of small open quantum systems described by
//! complex-symmetric effective Hamiltonians.

pub mod assignment;
pub mod diagnostics;
pub mod eigensolver;
pub mod ep;
pub mod hamiltonian;
pub mod scenarios;
pub mod smatrix;
pub mod sweep;

pub use num_complex::Complex64;

pub use diagnostics::{diagnose, phase_rigidity, source_term_residual, DiagnosticsError, StateDiagnostics};
pub use eigensolver::{alignment_defect, solve, solve2, solve3, solve_generic, EigenError, EigenSystem};
pub use ep::{
    cluster_report, locate_2x2, locate_generic, CertifyConfig, Cluster, EpCandidate, EpError, EpLocation,
    LocateConfig, SearchBox, TwoLevelMode,
};
pub use hamiltonian::{
    kato_family, Affine, ConcreteHamiltonian, CouplingMatrix, HamiltonianError, HamiltonianFamily, LevelSpec,
};
pub use smatrix::{
    cross_section, find_humps, s_matrix, s_matrix_ep, xsec_contour, xsec_contour_pair, xsec_scan, EnergyGrid,
    ResonanceSet, SMatrixError, XsecGrid,
};
pub use sweep::{run_sweep, BranchPoint, EpSuspect, SweepConfig, SweepError, SweepResult};
