use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CellState, OccupancyGrid, TriangleMesh, VoxelError, VoxelKey};
use crate::geometry::Vec3;

/// Imaging resolution of the ground-truth world, meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.002;
/// Lower bound on surface samples per ingested object.
pub const MIN_SURFACE_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub resolution: f64,
    pub min_samples: usize,
    /// Samples per cell-face area; raises the sample count for large objects so
    /// the sampled shell has no holes.
    pub samples_per_cell_area: f64,
    pub seed: u64,
    pub tabletop_z: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            min_samples: MIN_SURFACE_SAMPLES,
            samples_per_cell_area: 16.0,
            seed: 0,
            tabletop_z: 0.0,
        }
    }
}

/// Ground-truth imaging world: the object resting on a tabletop.
///
/// Layer `iz = 0` of the grid is the tabletop plane (just below `tabletop_z`);
/// object cells start at layer 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneWorld {
    pub grid: OccupancyGrid,
    pub tabletop_layer: Option<i32>,
    pub object_center: Vec3,
    pub o_size: f64,
    pub tabletop_z: f64,
}

impl SceneWorld {
    /// A world without a tabletop, e.g. for synthetic scenes.
    pub fn bare(grid: OccupancyGrid, object_center: Vec3, o_size: f64) -> Self {
        let tabletop_z = grid.origin().z;
        Self {
            grid,
            tabletop_layer: None,
            object_center,
            o_size,
            tabletop_z,
        }
    }

    pub fn is_tabletop(&self, k: VoxelKey) -> bool {
        self.tabletop_layer == Some(k.iz)
    }

    pub fn is_object(&self, k: VoxelKey) -> bool {
        !self.is_tabletop(k) && self.grid.get(k) == CellState::Occupied
    }

    pub fn object_keys(&self) -> Vec<VoxelKey> {
        self.grid
            .keys_with(CellState::Occupied)
            .filter(|k| !self.is_tabletop(*k))
            .collect()
    }
}

/// Rotates the mesh by `rotation_index · 45°` about the vertical axis through its
/// bounding-sphere center, rests it on the tabletop centred at the world xy
/// origin, and voxelises dense area-weighted surface samples.
///
/// The bounding sphere is computed before rotation so every rotation of an object
/// shares the same object center and size. The grid is symmetric about x = y = 0.
pub fn ingest_object(
    mesh: &TriangleMesh,
    rotation_index: u8,
    cfg: &IngestConfig,
) -> Result<SceneWorld, VoxelError> {
    if rotation_index >= 8 {
        return Err(VoxelError::BadRotation(rotation_index));
    }
    if !(cfg.resolution > 0.0) {
        return Err(VoxelError::BadResolution(cfg.resolution));
    }
    if mesh.triangles.is_empty() {
        return Err(VoxelError::EmptyMesh);
    }
    let area = mesh.surface_area();
    if !(area > 0.0) {
        return Err(VoxelError::DegenerateMesh);
    }
    let (center, o_size) = mesh.bounding_sphere();
    let angle = std::f64::consts::FRAC_PI_4 * rotation_index as f64;
    let (s, c) = angle.sin_cos();
    let (lo, hi) = mesh.aabb();
    let lift = cfg.tabletop_z - lo.z;
    let placed = mesh.transformed(|v| {
        let d = v - center;
        Vec3::new(c * d.x - s * d.y, s * d.x + c * d.y, v.z + lift)
    });
    let object_center = Vec3::new(0.0, 0.0, center.z + lift);
    let height = hi.z - lo.z;

    let res = cfg.resolution;
    let half_cells = ((o_size + 2.0 * res) / res).ceil() as usize;
    let nz = 1 + ((height + 2.0 * res) / res).ceil() as usize;
    let origin = Vec3::new(
        -(half_cells as f64) * res,
        -(half_cells as f64) * res,
        cfg.tabletop_z - res,
    );
    let mut grid = OccupancyGrid::new(
        origin,
        res,
        [2 * half_cells, 2 * half_cells, nz],
        CellState::Free,
    )?;

    let n = cfg
        .min_samples
        .max((cfg.samples_per_cell_area * area / (res * res)).ceil() as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for p in placed.sample_surface(n, &mut rng) {
        let mut k = grid.key_of(p);
        // samples on the contact plane belong to the object, not the tabletop
        k.iz = k.iz.max(1);
        grid.set(k, CellState::Occupied)?;
    }
    let [nx, ny, _] = grid.dims();
    for iy in 0..ny as i32 {
        for ix in 0..nx as i32 {
            grid.set(VoxelKey::new(ix, iy, 0), CellState::Occupied)?;
        }
    }
    Ok(SceneWorld {
        grid,
        tabletop_layer: Some(0),
        object_center,
        o_size,
        tabletop_z: cfg.tabletop_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::primitives;
    use std::collections::HashSet;

    fn cfg() -> IngestConfig {
        IngestConfig {
            seed: 3,
            ..IngestConfig::default()
        }
    }

    #[test]
    fn icosphere_shell_is_thin() {
        let mesh = primitives::icosphere(5).scaled_to_size(0.05);
        let w = ingest_object(&mesh, 0, &cfg()).unwrap();
        let res = w.grid.resolution();
        let keys = w.object_keys();
        assert!(!keys.is_empty());
        // signed distance of each occupied cell center to the true sphere
        let half_diag = 3f64.sqrt() / 2.0 * res;
        for k in &keys {
            let d = (w.grid.center_of(*k) - w.object_center).norm() - 0.05;
            assert!(d.abs() <= half_diag + 1e-4, "cell {k:?} at distance {d}");
        }
        assert_eq!(w.tabletop_layer, Some(0));
        assert!(keys.iter().all(|k| k.iz >= 1));
        assert!((w.o_size - 0.05).abs() < 1e-12);
    }

    #[test]
    fn half_turn_maps_cells_by_index_mirror() {
        let mesh = primitives::cuboid(Vec3::new(0.04, 0.02, 0.015));
        let mesh =
            mesh.transformed(|v| Vec3::new(v.x + if v.x > 0.0 { 0.01 } else { 0.0 }, v.y, v.z));
        let a = ingest_object(&mesh, 0, &cfg()).unwrap();
        let b = ingest_object(&mesh, 4, &cfg()).unwrap();
        assert_eq!(a.grid.dims(), b.grid.dims());
        let [nx, ny, _] = a.grid.dims();
        let mirrored: HashSet<VoxelKey> = a
            .object_keys()
            .into_iter()
            .map(|k| VoxelKey::new(nx as i32 - 1 - k.ix, ny as i32 - 1 - k.iy, k.iz))
            .collect();
        let rotated: HashSet<VoxelKey> = b.object_keys().into_iter().collect();
        let near = |set: &HashSet<VoxelKey>, k: &VoxelKey| {
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    (-1..=1).any(|dz| set.contains(&VoxelKey::new(k.ix + dx, k.iy + dy, k.iz + dz)))
                })
            })
        };
        assert!(rotated.iter().all(|k| near(&mirrored, k)));
        assert!(mirrored.iter().all(|k| near(&rotated, k)));
    }

    #[test]
    fn accepts_full_size_range() {
        for size in [0.05, 0.1, 0.15] {
            let mesh = primitives::icosphere(3).scaled_to_size(size);
            let w = ingest_object(
                &mesh,
                1,
                &IngestConfig {
                    min_samples: 1000,
                    ..cfg()
                },
            )
            .unwrap();
            assert!((w.o_size - size).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_degenerate_meshes() {
        let empty = TriangleMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(
            ingest_object(&empty, 0, &cfg()),
            Err(VoxelError::EmptyMesh)
        ));
        let flat = TriangleMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            ingest_object(&flat, 0, &cfg()),
            Err(VoxelError::DegenerateMesh)
        ));
        let ok = primitives::icosphere(1).scaled_to_size(0.05);
        assert!(matches!(
            ingest_object(&ok, 8, &cfg()),
            Err(VoxelError::BadRotation(8))
        ));
    }
}
