//! Dense pivoted-QR factorizations with randomized pivot selection.
//!
//! The crate provides, bottom up:
//!
//! * column-major [`DenseMatrix`] storage with Householder and Givens kernels,
//! * classical QR with column pivoting ([`qrcp`]) with blocked trailing updates,
//! * Gaussian sketching and randomized QRCP ([`rqrcp`]) with two
//!   sketch-updating rules,
//! * spectrum-revealing QR ([`srqr`]) with certified pivot quality and
//!   verifiable singular-value/residual bounds,
//! * CUR and CX decompositions driven by spectrum-revealing pivots,
//! * reproducible test-matrix generators and a small-scale Jacobi SVD oracle.
//!
//! Everything is `no_std` + `alloc`; file formats and the experiment CLI live
//! in the companion `srqr-cli` crate. All randomness is drawn from ChaCha20
//! streams seeded explicitly by the caller, so results are bit-reproducible
//! for a fixed seed.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod curcx;
mod error;
pub mod givens;
pub mod householder;
pub mod matrix;
pub mod norms;
pub mod perm;
pub mod qrcp;
pub mod rqrcp;
pub mod sketch;
pub mod srqr;
pub mod svd;
pub mod testmat;
pub mod tri;

pub use bounds::{verify_bounds, BoundCheck, BoundReport};
pub use curcx::{cur, cx, CurDecomposition, CxDecomposition};
pub use error::{Error, Result};
pub use givens::givens_restore;
pub use householder::{householder_qr, GivensRotation, QFactor, Reflector};
pub use matrix::DenseMatrix;
pub use norms::ColumnNormTracker;
pub use perm::Permutation;
pub use qrcp::{check_dominance, qrcp, qrcp_with_panel, DominanceReport, PivotedQr};
pub use rqrcp::{rqrcp, RqrcpResult};
pub use sketch::{
    jl_check, make_sketch, min_oversampling, update_formula1, update_formula2, FlopCounter,
    SketchConfig, SketchState, UpdateRule,
};
pub use srqr::{
    compute_g1, estimate_g2, exact_g2, srqr, SrqrConfig, SrqrDiagnostics, SrqrOutput, SrqrState,
    TruncatedApproximation,
};
pub use svd::{svd_oracle, SvdOracle};
