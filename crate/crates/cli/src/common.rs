use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use viewplan_core::sampling::ObjectCase;
use viewplan_core::simulation::{load_object, SimConfig, SimScene};
use viewplan_core::voxel::TriangleMesh;
use viewplan_core::CameraIntrinsics;

/// Simulation flags shared by every command that images an object.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Ground-truth voxel size, meters.
    #[arg(long, default_value_t = 0.002)]
    pub resolution_m: f64,
    /// View-sphere radius, meters.
    #[arg(long, default_value_t = 0.4)]
    pub radius_m: f64,
    #[arg(long, default_value_t = 1280)]
    pub width_px: u32,
    #[arg(long, default_value_t = 720)]
    pub height_px: u32,
    #[arg(long, default_value_t = 920.0)]
    pub fx_px: f64,
    #[arg(long, default_value_t = 920.0)]
    pub fy_px: f64,
    #[arg(long, default_value_t = 640.0)]
    pub cx_px: f64,
    #[arg(long, default_value_t = 360.0)]
    pub cy_px: f64,
    /// Cast one ray every N pixels in each image direction.
    #[arg(long, default_value_t = 2)]
    pub pixel_stride: u32,
    /// Lower bound on surface samples per object.
    #[arg(long, default_value_t = 100_000)]
    pub min_surface_samples: usize,
    /// Root seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SimArgs {
    pub fn camera(&self) -> Result<CameraIntrinsics> {
        Ok(CameraIntrinsics::new(
            self.width_px,
            self.height_px,
            self.fx_px,
            self.fy_px,
            self.cx_px,
            self.cy_px,
        )?)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        if !(self.resolution_m > 0.0) || !(self.radius_m > 0.0) {
            bail!("--resolution-m and --radius-m must be positive");
        }
        if self.pixel_stride == 0 {
            bail!("--pixel-stride must be at least 1");
        }
        Ok(SimConfig {
            resolution_m: self.resolution_m,
            view_radius_m: self.radius_m,
            camera: self.camera()?,
            pixel_stride: self.pixel_stride,
            min_surface_samples: self.min_surface_samples,
            seed: self.seed,
        })
    }
}

/// Object selection: a list of `prim:<name>` specs or mesh paths. The object id
/// of each entry is its position in the list.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Objects: `prim:sphere`, `prim:box`, `prim:cylinder` or `.ply`/`.obj` paths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub objects: Vec<String>,
    /// Rescale every object to this bounding-sphere radius (meters). Primitives
    /// default to 0.05; meshes keep their size.
    #[arg(long)]
    pub object_size_m: Option<f64>,
    /// Rotation indices 0..8 to include for every object.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub rotations: Vec<u8>,
}

impl CorpusArgs {
    pub fn load_meshes(&self) -> Result<Vec<TriangleMesh>> {
        if self.objects.len() > usize::from(u16::MAX) {
            bail!("too many objects");
        }
        if let Some(&r) = self.rotations.iter().find(|&&r| r >= 8) {
            bail!("rotation index {r} out of range 0..8");
        }
        self.objects
            .iter()
            .map(|o| {
                load_object(o, self.object_size_m).with_context(|| format!("loading object `{o}`"))
            })
            .collect()
    }

    /// Builds one scene per (object, rotation), in that order.
    pub fn build_scenes(&self, sim: &SimConfig) -> Result<Vec<SimScene>> {
        let meshes = self.load_meshes()?;
        let mut scenes = Vec::new();
        for (id, mesh) in meshes.iter().enumerate() {
            for &rot in &self.rotations {
                let case = ObjectCase::new(id as u16, rot);
                log::info!("imaging object {id} rotation {rot}");
                let scene = SimScene::build(case, mesh, sim)
                    .with_context(|| format!("building scene for {case}"))?;
                scenes.push(scene);
            }
        }
        Ok(scenes)
    }
}

pub fn write_config<T: Serialize>(dir: &Path, name: &str, cfg: &T) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(cfg)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
