//! Exact-arithmetic workbench for combinatorial train tracks on surfaces.
//!
//! The crate models train tracks as ribbon graphs with germ structure,
//! detects recurrence by exact rational linear programming, enumerates
//! vertex cycles two independent ways, performs splitting and sliding moves
//! with exact measure transport, evaluates the effective-constant chain, and
//! verifies quasi-geodesic behaviour of splitting sequences on the Farey
//! graph of the once-punctured torus.

pub mod constants;
pub mod cycles;
pub mod exec;
pub mod extend;
pub mod farey;
pub mod fixtures;
pub mod linalg;
pub mod measures;
pub mod moves;
pub mod oracles;
pub mod simplex;
pub mod subtrack;
pub mod surface;
pub mod track;

pub use surface::Surface;
pub use track::{
    Branch, BranchEnd, BranchId, BranchKind, Direction, GermClass, Region, RegionDecoration,
    Side, SwitchId, SwitchSpec, TrackError, TrainTrack, ValidationReport, Violation,
};
