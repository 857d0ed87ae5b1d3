use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{CellState, OccupancyGrid, SceneWorld, VoxelError, VoxelKey};
use crate::elements::ElementSet;
use crate::geometry::{Vec3, View};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    /// 1280×720 depth stream; focal length and principal point are configuration values.
    fn default() -> Self {
        Self {
            width: 1280,
            height: 720,
            fx: 920.0,
            fy: 920.0,
            cx: 640.0,
            cy: 360.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
    ) -> Result<Self, VoxelError> {
        let c = Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), VoxelError> {
        if self.width == 0 || self.height == 0 {
            return Err(VoxelError::BadIntrinsics(
                "image size must be positive".into(),
            ));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(VoxelError::BadIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        if !(self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64)
        {
            return Err(VoxelError::BadIntrinsics(
                "principal point outside the image".into(),
            ));
        }
        Ok(())
    }

    /// Camera-frame direction (z = 1) of pixel `(u, v)`.
    pub fn deproject(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Pixel coordinates of a camera-frame point in front of the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ImagingConfig {
    /// Cast one ray every `stride` pixels in each direction; 1 is full resolution.
    pub stride: u32,
    /// Rays stop after this distance from the view (meters).
    pub max_range: f64,
}

impl ImagingConfig {
    /// Range twice the view-sphere radius, default pixel stride 2.
    pub fn for_radius(view_radius: f64) -> Self {
        Self {
            stride: 2,
            max_range: 2.0 * view_radius,
        }
    }
}

/// Pixel rectangle that can contain rays hitting the grid box, or the whole
/// image when part of the box is behind the camera.
pub(crate) fn pixel_window(
    grid: &OccupancyGrid,
    view: &View,
    cam: &CameraIntrinsics,
) -> (u32, u32, u32, u32) {
    let full = (0, cam.width, 0, cam.height);
    let lo = grid.origin();
    let hi = grid.upper_corner();
    let rot = view.camera_to_world().transpose();
    let (mut umin, mut umax, mut vmin, mut vmax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for i in 0..8 {
        let corner = Vec3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        );
        let pc = rot * (corner - view.position);
        let Some((u, v)) = cam.project(pc) else {
            return full;
        };
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let clamp = |x: f64, n: u32| x.clamp(0.0, n as f64) as u32;
    (
        clamp(umin.floor() - 1.0, cam.width),
        clamp(umax.ceil() + 1.0, cam.width),
        clamp(vmin.floor() - 1.0, cam.height),
        clamp(vmax.ceil() + 1.0, cam.height),
    )
}

/// Casts one ray per (strided) pixel and returns the object cells hit first.
///
/// Tabletop cells stop rays but are not reported. The result is sorted.
pub fn virtual_imaging(
    world: &SceneWorld,
    view: &View,
    cam: &CameraIntrinsics,
    cfg: &ImagingConfig,
) -> Vec<VoxelKey> {
    let grid = &world.grid;
    let rot = view.camera_to_world();
    let stride = cfg.stride.max(1);
    let (u0, u1, v0, v1) = pixel_window(grid, view, cam);
    let mut hits = BTreeSet::new();
    // align to the global stride lattice so results do not depend on the window
    let first = |a: u32| a.div_ceil(stride) * stride;
    let mut v = first(v0);
    while v < v1 {
        let mut u = first(u0);
        while u < u1 {
            let dir = (rot * cam.deproject(u as f64, v as f64)).normalize();
            for cell in grid.traverse(view.position, dir, cfg.max_range) {
                if grid.get(cell.key) == CellState::Occupied {
                    if !world.is_tabletop(cell.key) {
                        hits.insert(cell.key);
                    }
                    break;
                }
            }
            u += stride;
        }
        v += stride;
    }
    hits.into_iter().collect()
}

/// Ground-truth visible surface sets of every candidate view and their union.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTable {
    keys: Vec<VoxelKey>,
    view_sets: Vec<ElementSet>,
}

impl VisibilityTable {
    /// Builds the table from per-view voxel sets; the universe is their union.
    pub fn from_view_keys(per_view: &[Vec<VoxelKey>]) -> Self {
        let universe: BTreeSet<VoxelKey> = per_view.iter().flatten().copied().collect();
        let keys: Vec<VoxelKey> = universe.into_iter().collect();
        let view_sets = per_view
            .iter()
            .map(|vk| {
                ElementSet::from_indices(
                    keys.len(),
                    vk.iter()
                        .map(|k| keys.binary_search(k).expect("key in universe")),
                )
            })
            .collect();
        Self { keys, view_sets }
    }

    /// Synthetic table over element ids `0..universe_size`. Every element must be
    /// seen by some view.
    pub fn from_element_sets(
        universe_size: usize,
        sets: &[Vec<usize>],
    ) -> Result<Self, VoxelError> {
        let mut union = ElementSet::new(universe_size);
        let mut view_sets = Vec::with_capacity(sets.len());
        for s in sets {
            if let Some(&e) = s.iter().find(|&&e| e >= universe_size) {
                return Err(VoxelError::BadVisibility(format!(
                    "element {e} outside universe"
                )));
            }
            let es = ElementSet::from_indices(universe_size, s.iter().copied());
            union.union_with(&es);
            view_sets.push(es);
        }
        if union.len() != universe_size {
            return Err(VoxelError::BadVisibility(
                "universe is not the union of the view sets".into(),
            ));
        }
        let keys = (0..universe_size as i32)
            .map(|i| VoxelKey::new(i, 0, 1))
            .collect();
        Ok(Self { keys, view_sets })
    }

    pub fn num_views(&self) -> usize {
        self.view_sets.len()
    }

    pub fn universe_size(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[VoxelKey] {
        &self.keys
    }

    pub fn key(&self, element: usize) -> VoxelKey {
        self.keys[element]
    }

    pub fn element_of(&self, key: &VoxelKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }

    pub fn view_set(&self, view: usize) -> &ElementSet {
        &self.view_sets[view]
    }

    pub fn view_keys(&self, view: usize) -> Vec<VoxelKey> {
        self.view_sets[view].iter().map(|e| self.keys[e]).collect()
    }

    pub fn empty_cover(&self) -> ElementSet {
        ElementSet::new(self.keys.len())
    }

    /// Union of the sets of the given views.
    pub fn cover_of(&self, views: impl IntoIterator<Item = usize>) -> ElementSet {
        let mut c = self.empty_cover();
        for v in views {
            c.union_with(&self.view_sets[v]);
        }
        c
    }

    /// `|U_cover| / |U|`; an empty universe counts as fully covered.
    pub fn coverage(&self, covered: &ElementSet) -> f64 {
        if self.keys.is_empty() {
            1.0
        } else {
            covered.len() as f64 / self.keys.len() as f64
        }
    }
}

/// Images every view against the frozen world, in parallel.
pub fn compute_visibility(
    world: &SceneWorld,
    views: &[View],
    cam: &CameraIntrinsics,
    cfg: &ImagingConfig,
) -> VisibilityTable {
    let per_view: Vec<Vec<VoxelKey>> = views
        .par_iter()
        .map(|v| virtual_imaging(world, v, cam, cfg))
        .collect();
    VisibilityTable::from_view_keys(&per_view)
}
