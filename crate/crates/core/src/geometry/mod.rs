//! Candidate view space, view poses and view path planning.

mod hamiltonian;
mod path;
mod view_space;

pub use hamiltonian::{shortest_hamiltonian_path, HamiltonianPath, MAX_PATH_VERTICES};
pub use path::{local_path_length, PathGraph};
pub use view_space::{
    build_view_space, format_sig9, read_view_space, view_pose, view_pose_with_fallback,
    write_view_space, View, ViewSpace, REPULSION_ITERATIONS,
};

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;

/// Size of the candidate view space. View ids are `0..NUM_VIEWS` and map onto bit
/// positions of a 32-bit view case.
pub const NUM_VIEWS: usize = 32;

/// Tolerance below which a cross product is treated as vanishing.
pub const AXIS_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("view sphere radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("object center z={center_z} is not above the tabletop z={tabletop_z}")]
    CenterBelowTabletop { center_z: f64, tabletop_z: f64 },
    #[error("view position coincides with the object center")]
    ViewAtObjectCenter,
    #[error("degenerate view axes: view, object center and world origin are collinear")]
    DegenerateAxis,
    #[error("path endpoint {0:?} lies inside the obstacle sphere")]
    EndpointInsideObstacle([f64; 3]),
    #[error("path graph has {0} vertices; supported range is 1..={MAX_PATH_VERTICES}")]
    GraphSize(usize),
    #[error("start vertex {start} out of range for {n} vertices")]
    BadStart { start: usize, n: usize },
    #[error("invalid edge weights: {0}")]
    BadWeights(String),
    #[error("malformed view space file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is not `Clone`/`PartialEq`; keep its message.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for GeometryError {
    fn from(e: std::io::Error) -> Self {
        GeometryError::Io(IoError(e.to_string()))
    }
}

/// Bounding sphere of the object, used as the obstacle for local paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSphere {
    pub center: Vec3,
    pub radius: f64,
}

impl ObstacleSphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::NonPositiveRadius(radius));
        }
        Ok(Self { center, radius })
    }
}
