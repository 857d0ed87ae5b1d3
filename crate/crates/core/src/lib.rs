//! View planning for active reconstruction of tabletop objects.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds the 32-view candidate space, view poses, obstacle-aware
//!   local paths and shortest Hamiltonian view sequences.
//! * [`voxel`] holds the three-state occupancy grid, mesh ingestion, virtual
//!   depth imaging and the 32³ network input grid.
//! * [`set_cover`] solves the minimum view-set covering problem exactly.
//! * [`planner`] exposes next-best-view and one-shot planners behind one interface.
//! * [`simulation`] bundles one object case: ground-truth world, view space and
//!   per-view visibility.
//! * [`sampling`] produces the whole sampling space of input cases by simulated
//!   greedy reconstruction and draws long-tail subsets from it.
//! * [`dataset`] turns input cases into supervision pairs and stores them in the
//!   checksummed `VPSP` format.
//! * [`pipeline`] runs the combined NBV + one-shot loop and the benchmark harness.

pub mod dataset;
pub mod elements;
pub mod geometry;
pub mod pipeline;
pub mod planner;
pub mod sampling;
pub mod seed;
pub mod set_cover;
pub mod simulation;
pub mod voxel;

pub use elements::ElementSet;
pub use geometry::{ObstacleSphere, Vec3, View, ViewSpace, NUM_VIEWS};
pub use planner::ViewState;
pub use voxel::{
    CameraIntrinsics, CellState, OccupancyGrid, SceneWorld, VisibilityTable, VoxelKey,
};
