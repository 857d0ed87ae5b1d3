//! Next-best-view and one-shot view planners.

mod nbv;
mod oneshot;

use std::fmt;

use thiserror::Error;

use crate::geometry::{GeometryError, ObstacleSphere, ViewSpace, NUM_VIEWS};
use crate::set_cover::CoverError;
use crate::voxel::{CameraIntrinsics, ImagingConfig, OccupancyGrid, VisibilityTable, VoxelKey};
use crate::ElementSet;

pub use nbv::{
    argmax_lowest_id, movement_weighted_utility, nbv_oracle, nbv_random, nbv_unknown_gain,
    oracle_gains, unknown_gains, GainSource, MovementWeightedNbv, OracleNbv, RandomNbv,
    UnknownGainNbv,
};
pub use oneshot::{
    oneshot_external, oneshot_oracle, parse_prediction, EmptyOneShot, ExternalOneShot, OneShotPlan,
    OracleOneShot,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("every candidate view is already visited")]
    AllVisited,
    #[error("{} uncovered voxel(s) are invisible from every unvisited view, first {:?}", .0.len(), .0.first())]
    Infeasible(Vec<VoxelKey>),
    #[error("all candidate gains are zero")]
    ZeroGains,
    #[error("all candidate costs are zero")]
    ZeroCosts,
    #[error("{gains} gains but {costs} costs")]
    LengthMismatch { gains: usize, costs: usize },
    #[error("bad prediction: {0}")]
    Prediction(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cover(CoverError),
}

/// Visited flags of the 32 candidate views; bit `i` is view id `i`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewState(u32);

impl ViewState {
    pub const fn new() -> Self {
        Self(0)
    }

    pub const fn from_packed(c_view: u32) -> Self {
        Self(c_view)
    }

    pub const fn packed(self) -> u32 {
        self.0
    }

    pub fn from_flags(flags: &[bool; NUM_VIEWS]) -> Self {
        Self(
            flags
                .iter()
                .enumerate()
                .fold(0, |a, (i, &f)| a | (f as u32) << i),
        )
    }

    pub fn flags(self) -> [bool; NUM_VIEWS] {
        std::array::from_fn(|i| self.0 >> i & 1 == 1)
    }

    /// Flags as bytes (0 or 1), the on-disk view state.
    pub fn to_bytes(self) -> [u8; NUM_VIEWS] {
        std::array::from_fn(|i| (self.0 >> i & 1) as u8)
    }

    pub fn is_visited(self, id: usize) -> bool {
        id < NUM_VIEWS && self.0 >> id & 1 == 1
    }

    pub fn visit(&mut self, id: usize) {
        assert!(id < NUM_VIEWS, "view id {id} out of range");
        self.0 |= 1 << id;
    }

    pub fn with(mut self, id: usize) -> Self {
        self.visit(id);
        self
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn visited(self) -> impl Iterator<Item = usize> {
        (0..NUM_VIEWS).filter(move |&i| self.is_visited(i))
    }

    pub fn unvisited(self) -> impl Iterator<Item = usize> {
        (0..NUM_VIEWS).filter(move |&i| !self.is_visited(i))
    }
}

impl fmt::Debug for ViewState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ViewState({:08x})", self.0)
    }
}

/// Everything a planner may look at when choosing views.
///
/// `table` and `covered` are ground truth and only consumed by oracle planners;
/// `map` is the partial reconstruction.
#[derive(Clone, Copy)]
pub struct PlanContext<'a> {
    pub views: &'a ViewSpace,
    pub table: &'a VisibilityTable,
    pub covered: &'a ElementSet,
    pub map: &'a OccupancyGrid,
    pub cam: &'a CameraIntrinsics,
    pub imaging: &'a ImagingConfig,
    pub obstacle: &'a ObstacleSphere,
    pub state: ViewState,
    pub current: usize,
}

pub trait NbvPlanner {
    fn name(&self) -> String;
    fn next_view(&mut self, ctx: &PlanContext<'_>) -> Result<usize, PlannerError>;
}

pub trait OneShotPlanner {
    fn name(&self) -> String;
    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<OneShotPlan, PlannerError>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn packed_and_flag_forms_agree(c in any::<u32>()) {
            let s = ViewState::from_packed(c);
            let flags = s.flags();
            prop_assert_eq!(flags.iter().filter(|&&f| f).count(), c.count_ones() as usize);
            prop_assert_eq!(ViewState::from_flags(&flags), s);
            prop_assert_eq!(s.visited().count() + s.unvisited().count(), NUM_VIEWS);
            for i in 0..NUM_VIEWS {
                prop_assert_eq!(s.to_bytes()[i] == 1, s.is_visited(i));
            }
        }
    }
}
