//! Integer grid stepping (Amanatides & Woo) over a bounded voxel grid.

use crate::geometry::Vec3;

use super::VoxelKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraversedCell {
    pub key: VoxelKey,
    /// Ray parameter where the ray enters this cell (clamped to 0).
    pub t_enter: f64,
}

/// Visits, in order, every in-bounds cell the ray `origin + t·dir`, `t ∈ [0, t_max]`
/// passes through. Rays starting outside the grid are first clipped to its box.
#[derive(Debug, Clone)]
pub struct GridTraversal {
    key: [i32; 3],
    step: [i32; 3],
    t_next: [f64; 3],
    t_delta: [f64; 3],
    dims: [i32; 3],
    t: f64,
    t_end: f64,
    done: bool,
}

impl GridTraversal {
    pub fn new(
        grid_origin: Vec3,
        res: f64,
        dims: [usize; 3],
        origin: Vec3,
        dir: Vec3,
        t_max: f64,
    ) -> Self {
        let dims_i = [dims[0] as i32, dims[1] as i32, dims[2] as i32];
        let empty = Self {
            key: [0; 3],
            step: [0; 3],
            t_next: [f64::INFINITY; 3],
            t_delta: [f64::INFINITY; 3],
            dims: dims_i,
            t: 0.0,
            t_end: 0.0,
            done: true,
        };
        if dims.contains(&0) {
            return empty;
        }
        // slab clip against the grid box
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let lo = grid_origin[a];
            let hi = grid_origin[a] + dims[a] as f64 * res;
            if dir[a] == 0.0 {
                if origin[a] < lo || origin[a] >= hi {
                    return empty;
                }
            } else {
                let inv = 1.0 / dir[a];
                let (mut ta, mut tb) = ((lo - origin[a]) * inv, (hi - origin[a]) * inv);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
        }
        if !(t0 < t1) {
            return empty;
        }
        let p = origin + dir * t0;
        let mut key = [0i32; 3];
        let mut step = [0i32; 3];
        let mut t_next = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let rel = (p[a] - grid_origin[a]) / res;
            key[a] = (rel.floor() as i32).clamp(0, dims_i[a] - 1);
            if dir[a] > 0.0 {
                step[a] = 1;
                let boundary = grid_origin[a] + (key[a] + 1) as f64 * res;
                t_next[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = res / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                let boundary = grid_origin[a] + key[a] as f64 * res;
                t_next[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = -res / dir[a];
            }
        }
        Self {
            key,
            step,
            t_next,
            t_delta,
            dims: dims_i,
            t: t0,
            t_end: t1,
            done: false,
        }
    }
}

impl Iterator for GridTraversal {
    type Item = TraversedCell;

    fn next(&mut self) -> Option<TraversedCell> {
        if self.done {
            return None;
        }
        let out = TraversedCell {
            key: VoxelKey::new(self.key[0], self.key[1], self.key[2]),
            t_enter: self.t,
        };
        // advance along the axis whose boundary comes first
        let a = if self.t_next[0] < self.t_next[1] {
            if self.t_next[0] < self.t_next[2] {
                0
            } else {
                2
            }
        } else if self.t_next[1] < self.t_next[2] {
            1
        } else {
            2
        };
        self.t = self.t_next[a];
        self.t_next[a] += self.t_delta[a];
        self.key[a] += self.step[a];
        if self.t >= self.t_end || self.key[a] < 0 || self.key[a] >= self.dims[a] {
            self.done = true;
        }
        Some(out)
    }
}
