//! Feature extraction by multivariate analysis, in primal and kernel form.
//!
//! The crate implements four classical projection methods — principal
//! component analysis (PCA), two-block partial least squares (PLS2),
//! canonical correlation analysis (CCA) and orthonormalized PLS (OPLS) —
//! together with their kernelized counterparts, reduced-set and sparse
//! variants that scale past the dense Gram-matrix regime, semisupervised
//! extensions (graph-regularized kernel CCA and probabilistic cluster
//! kernels), kernel dependence measures (HSIC, kernel generalized
//! variance) and a least-squares prediction head with evaluation and
//! cross-validation utilities.
//!
//! Modules, bottom up:
//!
//! * [`linalg`] — dense symmetric / generalized eigensolvers, an iterative
//!   matrix-free solver, pseudoinverse and rank estimation.
//! * [`data`] — delimited loading, label encoding, centering/scaling,
//!   splits and folds.
//! * [`kernel`] — kernel functions, Gram assembly and centering, the
//!   probabilistic cluster kernel, graph Laplacians.
//! * [`linear`] — primal PCA / PLS2 / CCA / OPLS.
//! * [`kernel_mva`] — dual (kernel) variants of the four methods.
//! * [`reduced`] — reduced-set dual methods with O(r^2) working storage.
//! * [`sparse`] — sparsity-constrained kernel PLS by candidate selection.
//! * [`semisup`] — semisupervised kernel CCA and cluster-kernel pipelines.
//! * [`dependence`] — HSIC, HSIC-based component analysis, kernel
//!   generalized variance.
//! * [`predict`] — least-squares head, winner-takes-all decisions,
//!   evaluation reports, cross-validation selection.
//! * [`model_io`] — versioned model (de)serialization.
//! * [`synth`] — seeded synthetic data generators.
//! * [`manifest`] — benchmark manifest parsing and result verification.
//! * [`protocol`] — the fixed experimental protocol used by the
//!   benchmark front end.

pub mod data;
pub mod dependence;
pub mod error;
pub mod kernel;
pub mod kernel_mva;
pub mod linalg;
pub mod linear;
pub mod manifest;
pub mod model_io;
pub mod predict;
pub mod protocol;
pub mod reduced;
pub mod semisup;
pub mod sparse;
pub mod synth;

pub use data::{CenteringStats, Dataset, LabelEncoding, Targets};
pub use dependence::{DependenceReport, HscaModel, KgvReport};
pub use error::{Error, Result};
pub use kernel::{GramCentering, KernelChoice, KernelSpec, Sigma};
pub use kernel_mva::{KernelMethod, KernelModel};
pub use linalg::{EigPairs, SolverConfig};
pub use linear::{LinearMethod, LinearModel};
pub use model_io::{AnyModel, MatrixEncoding, SavedModel};
pub use predict::{EvalReport, LsHead};
pub use reduced::{ReducedMethod, ReducedSetModel};
pub use semisup::SemiSupCcaModel;
pub use sparse::{SparsePlsModel, SparseVariant};
