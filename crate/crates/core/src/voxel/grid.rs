use std::io::{BufRead, Write};

use super::raycast::GridTraversal;
use super::VoxelError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum CellState {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

impl CellState {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(CellState::Unknown),
            1 => Some(CellState::Free),
            2 => Some(CellState::Occupied),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelKey {
    pub ix: i32,
    pub iy: i32,
    pub iz: i32,
}

impl VoxelKey {
    pub const fn new(ix: i32, iy: i32, iz: i32) -> Self {
        Self { ix, iy, iz }
    }
}

/// Dense three-state voxel grid, x-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(
        origin: Vec3,
        resolution: f64,
        dims: [usize; 3],
        fill: CellState,
    ) -> Result<Self, VoxelError> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(VoxelError::BadResolution(resolution));
        }
        Ok(Self {
            origin,
            resolution,
            dims,
            cells: vec![fill; dims[0] * dims[1] * dims[2]],
        })
    }

    /// Same geometry, every cell Unknown.
    pub fn unknown_like(other: &OccupancyGrid) -> Self {
        Self {
            origin: other.origin,
            resolution: other.resolution,
            dims: other.dims,
            cells: vec![CellState::Unknown; other.cells.len()],
        }
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn upper_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.resolution
    }

    pub fn in_bounds(&self, k: VoxelKey) -> bool {
        k.ix >= 0
            && k.iy >= 0
            && k.iz >= 0
            && (k.ix as usize) < self.dims[0]
            && (k.iy as usize) < self.dims[1]
            && (k.iz as usize) < self.dims[2]
    }

    fn index(&self, k: VoxelKey) -> usize {
        k.ix as usize + self.dims[0] * (k.iy as usize + self.dims[1] * k.iz as usize)
    }

    pub fn key_at_index(&self, i: usize) -> VoxelKey {
        let nx = self.dims[0];
        let ny = self.dims[1];
        VoxelKey::new(
            (i % nx) as i32,
            ((i / nx) % ny) as i32,
            (i / (nx * ny)) as i32,
        )
    }

    /// Key of the cell containing `p` (may be out of bounds).
    pub fn key_of(&self, p: Vec3) -> VoxelKey {
        let r = (p - self.origin) / self.resolution;
        VoxelKey::new(r.x.floor() as i32, r.y.floor() as i32, r.z.floor() as i32)
    }

    pub fn center_of(&self, k: VoxelKey) -> Vec3 {
        self.origin
            + Vec3::new(k.ix as f64 + 0.5, k.iy as f64 + 0.5, k.iz as f64 + 0.5) * self.resolution
    }

    /// State of `k`; out-of-bounds cells read as Unknown.
    pub fn get(&self, k: VoxelKey) -> CellState {
        if self.in_bounds(k) {
            self.cells[self.index(k)]
        } else {
            CellState::Unknown
        }
    }

    pub fn set(&mut self, k: VoxelKey, s: CellState) -> Result<(), VoxelError> {
        if !self.in_bounds(k) {
            return Err(VoxelError::OutOfBounds(k));
        }
        let i = self.index(k);
        self.cells[i] = s;
        Ok(())
    }

    pub fn count(&self, s: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    pub fn keys_with(&self, s: CellState) -> impl Iterator<Item = VoxelKey> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == s)
            .map(|(i, _)| self.key_at_index(i))
    }

    /// Ray traversal over this grid from `origin` along unit `dir` up to `t_max`.
    pub fn traverse(&self, origin: Vec3, dir: Vec3, t_max: f64) -> GridTraversal {
        GridTraversal::new(self.origin, self.resolution, self.dims, origin, dir, t_max)
    }

    /// Integrates one depth observation taken from `view_position`.
    ///
    /// Cells crossed by the ray from the view to each observed cell center become
    /// Free unless they are Occupied; the observed cells become Occupied. Occupied
    /// cells are never cleared, so repeated insertion is idempotent.
    pub fn insert_observation(
        &mut self,
        observed: &[VoxelKey],
        view_position: Vec3,
    ) -> Result<(), VoxelError> {
        if let Some(&bad) = observed.iter().find(|k| !self.in_bounds(**k)) {
            return Err(VoxelError::OutOfBounds(bad));
        }
        for &k in observed {
            let target = self.center_of(k);
            let delta = target - view_position;
            let dist = delta.norm();
            if dist == 0.0 {
                continue;
            }
            let dir = delta / dist;
            for cell in self.traverse(view_position, dir, dist) {
                if cell.key == k {
                    break;
                }
                let i = self.index(cell.key);
                if self.cells[i] != CellState::Occupied {
                    self.cells[i] = CellState::Free;
                }
            }
        }
        for &k in observed {
            let i = self.index(k);
            self.cells[i] = CellState::Occupied;
        }
        Ok(())
    }
}

/// Debug dump: header `nx ny nz resolution ox oy oz`, newline, then one byte per
/// cell in x-fastest order (0 Unknown, 1 Free, 2 Occupied).
pub fn write_grid_dump<W: Write>(grid: &OccupancyGrid, mut out: W) -> Result<(), VoxelError> {
    let [nx, ny, nz] = grid.dims;
    let o = grid.origin;
    writeln!(
        out,
        "{nx} {ny} {nz} {} {} {} {}",
        grid.resolution, o.x, o.y, o.z
    )?;
    let bytes: Vec<u8> = grid.cells.iter().map(|&c| c as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_grid_dump<R: BufRead>(mut input: R) -> Result<OccupancyGrid, VoxelError> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let bad = |msg: &str| VoxelError::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 7 {
        return Err(bad("expected `nx ny nz resolution ox oy oz`"));
    }
    let dims = [
        f[0].parse().map_err(|_| bad("nx"))?,
        f[1].parse().map_err(|_| bad("ny"))?,
        f[2].parse().map_err(|_| bad("nz"))?,
    ];
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
    let res = num(f[3])?;
    let origin = Vec3::new(num(f[4])?, num(f[5])?, num(f[6])?);
    let mut grid = OccupancyGrid::new(origin, res, dims, CellState::Unknown)?;
    let mut bytes = vec![0u8; grid.cells.len()];
    input.read_exact(&mut bytes)?;
    for (c, b) in grid.cells.iter_mut().zip(bytes) {
        *c = CellState::from_byte(b).ok_or_else(|| bad("cell byte outside 0..=2"))?;
    }
    Ok(grid)
}
