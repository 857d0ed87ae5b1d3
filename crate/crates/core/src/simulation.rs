//! One object case set up for simulation: ground-truth world, view space and
//! per-view visibility.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{build_view_space, GeometryError, ObstacleSphere, Vec3, ViewSpace};
use crate::sampling::ObjectCase;
use crate::seed::derive_seed;
use crate::voxel::{
    ingest_object, primitives, virtual_imaging, CameraIntrinsics, ImagingConfig, IngestConfig,
    SceneWorld, TriangleMesh, VisibilityTable, VoxelError, VoxelKey, DEFAULT_RESOLUTION,
    MIN_SURFACE_SAMPLES,
};

/// Default view-sphere radius, meters.
pub const DEFAULT_VIEW_RADIUS: f64 = 0.4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Voxel(#[from] VoxelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub resolution_m: f64,
    pub view_radius_m: f64,
    pub camera: CameraIntrinsics,
    pub pixel_stride: u32,
    pub min_surface_samples: usize,
    /// Root seed; the view space and surface sampling derive their own streams.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            resolution_m: DEFAULT_RESOLUTION,
            view_radius_m: DEFAULT_VIEW_RADIUS,
            camera: CameraIntrinsics::default(),
            pixel_stride: 2,
            min_surface_samples: MIN_SURFACE_SAMPLES,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn imaging(&self) -> ImagingConfig {
        ImagingConfig {
            stride: self.pixel_stride,
            ..ImagingConfig::for_radius(self.view_radius_m)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimScene {
    pub object: ObjectCase,
    pub world: SceneWorld,
    pub views: ViewSpace,
    pub camera: CameraIntrinsics,
    pub imaging: ImagingConfig,
    pub obstacle: ObstacleSphere,
    /// Object voxels imaged from each view, sorted.
    pub per_view: Vec<Vec<VoxelKey>>,
    pub table: VisibilityTable,
}

impl SimScene {
    /// Ingests the mesh under the case's rotation, builds the view space around
    /// the object and images every view.
    pub fn build(
        object: ObjectCase,
        mesh: &TriangleMesh,
        cfg: &SimConfig,
    ) -> Result<Self, SimError> {
        cfg.camera.validate()?;
        let ingest = IngestConfig {
            resolution: cfg.resolution_m,
            min_samples: cfg.min_surface_samples,
            seed: derive_seed(cfg.seed, "surface", u64::from(object.object_id)),
            ..IngestConfig::default()
        };
        let world = ingest_object(mesh, object.rotation, &ingest)?;
        let views = build_view_space(
            world.object_center,
            cfg.view_radius_m,
            world.tabletop_z,
            derive_seed(cfg.seed, "views", 0),
        )?;
        Self::from_parts(object, world, views, cfg.camera, cfg.imaging())
    }

    pub fn from_parts(
        object: ObjectCase,
        world: SceneWorld,
        views: ViewSpace,
        camera: CameraIntrinsics,
        imaging: ImagingConfig,
    ) -> Result<Self, SimError> {
        let obstacle = ObstacleSphere::new(world.object_center, world.o_size)?;
        let per_view: Vec<Vec<VoxelKey>> = views
            .views
            .par_iter()
            .map(|v| virtual_imaging(&world, v, &camera, &imaging))
            .collect();
        let table = VisibilityTable::from_view_keys(&per_view);
        Ok(Self {
            object,
            world,
            views,
            camera,
            imaging,
            obstacle,
            per_view,
            table,
        })
    }
}

/// Default bounding-sphere radius given to primitive shapes, meters.
pub const DEFAULT_PRIMITIVE_SIZE: f64 = 0.05;

/// Loads an object: `prim:sphere`, `prim:box`, `prim:cylinder`, or a mesh file
/// (`.ply` / `.obj`). Primitives are scaled to `size` (default 0.05 m); meshes
/// keep their own size unless `size` is given.
pub fn load_object(spec: &str, size: Option<f64>) -> Result<TriangleMesh, VoxelError> {
    let mesh = match spec.strip_prefix("prim:") {
        Some(name) => {
            let m = match name {
                "sphere" => primitives::icosphere(4),
                "box" => primitives::cuboid(Vec3::new(0.04, 0.03, 0.025)),
                "cylinder" => primitives::cylinder(0.03, 0.07, 64),
                other => {
                    return Err(VoxelError::UnsupportedFormat(format!(
                        "unknown primitive `{other}`"
                    )))
                }
            };
            return Ok(m.scaled_to_size(size.unwrap_or(DEFAULT_PRIMITIVE_SIZE)));
        }
        None => TriangleMesh::load(std::path::Path::new(spec))?,
    };
    Ok(match size {
        Some(s) => mesh.scaled_to_size(s),
        None => mesh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_scene_is_consistent() {
        let cfg = SimConfig {
            min_surface_samples: 20_000,
            ..SimConfig::default()
        };
        let mesh = load_object("prim:sphere", None).unwrap();
        assert!((mesh.bounding_sphere().1 - 0.05).abs() < 1e-12);
        assert!(load_object("prim:torus", None).is_err());
        assert!(load_object("/nonexistent/mesh.ply", None).is_err());
        let s = SimScene::build(ObjectCase::new(0, 0), &mesh, &cfg).unwrap();
        assert_eq!(s.per_view.len(), 32);
        assert!(s.table.universe_size() > 0);
        for (v, keys) in s.per_view.iter().enumerate() {
            assert!(!keys.is_empty(), "view {v} sees nothing");
            assert_eq!(&s.table.view_keys(v), keys);
            assert!(keys.iter().all(|k| s.world.is_object(*k)));
        }
        for v in &s.views.views {
            assert!(((v.position - s.world.object_center).norm() - 0.4).abs() < 1e-9);
        }
    }
}
