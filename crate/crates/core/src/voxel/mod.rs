//! Voxel world: the three-state occupancy grid, mesh ingestion, virtual depth
//! imaging by ray casting and extraction of the 32³ network input grid.

mod grid;
pub(crate) mod imaging;
mod input_grid;
mod mesh;
pub mod raycast;
mod scene;

pub use grid::{read_grid_dump, write_grid_dump, CellState, OccupancyGrid, VoxelKey};
pub use imaging::{
    compute_visibility, virtual_imaging, CameraIntrinsics, ImagingConfig, VisibilityTable,
};
pub use input_grid::{
    extract_input_grid, input_grid_resolution, InputGrid, INPUT_CELLS, INPUT_DIM,
};
pub use mesh::{primitives, TriangleMesh};
pub use scene::{ingest_object, IngestConfig, SceneWorld, DEFAULT_RESOLUTION, MIN_SURFACE_SAMPLES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VoxelError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("mesh has zero surface area")]
    DegenerateMesh,
    #[error("face references vertex {index} but the mesh has {count} vertices")]
    BadFaceIndex { index: i64, count: usize },
    #[error("rotation index {0} outside 0..8")]
    BadRotation(u8),
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("object size {0} m outside the supported range (0, 0.15]")]
    ObjectSizeOutOfRange(f64),
    #[error("voxel {0:?} is outside the grid")]
    OutOfBounds(VoxelKey),
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("visibility table: {0}")]
    BadVisibility(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
