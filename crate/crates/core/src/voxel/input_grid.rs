use super::{CellState, OccupancyGrid, VoxelError, VoxelKey};
use crate::geometry::Vec3;

pub const INPUT_DIM: usize = 32;
pub const INPUT_CELLS: usize = INPUT_DIM * INPUT_DIM * INPUT_DIM;
/// Largest supported object size (bounding-sphere radius), meters.
pub const MAX_OBJECT_SIZE: f64 = 0.15;

/// 32³ network input grid. Layer `z = 0` is the tabletop.
#[derive(Debug, Clone, PartialEq)]
pub struct InputGrid {
    pub origin: Vec3,
    pub resolution: f64,
    /// x-fastest.
    pub cells: Vec<CellState>,
}

impl InputGrid {
    pub fn get(&self, x: usize, y: usize, z: usize) -> CellState {
        self.cells[x + INPUT_DIM * (y + INPUT_DIM * z)]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.cells.iter().map(|&c| c as u8).collect()
    }

    pub fn count(&self, s: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }
}

/// Edge length of one input cell: the grid spans twice the object size.
pub fn input_grid_resolution(o_size: f64) -> f64 {
    2.0 * o_size / INPUT_DIM as f64
}

/// Resamples the partial map into the 32³ input grid.
///
/// The grid is laterally centred on the object center and vertically anchored so
/// the layer just below `tabletop_z` is the bottom layer, which receives the
/// tabletop disk (radius `2·o_size`). Every other output cell pools the source
/// cells whose centers fall inside it the way a coarse occupancy map would have
/// been updated: Occupied if any source cell is Occupied, else Free if any is
/// Free, else Unknown. If no source center falls inside, the source cell under
/// the output center is used (Unknown when outside the map).
pub fn extract_input_grid(
    map: &OccupancyGrid,
    o_size: f64,
    object_center: Vec3,
    tabletop_z: f64,
) -> Result<InputGrid, VoxelError> {
    if !(o_size > 0.0 && o_size <= MAX_OBJECT_SIZE) {
        return Err(VoxelError::ObjectSizeOutOfRange(o_size));
    }
    let res = input_grid_resolution(o_size);
    let origin = Vec3::new(
        object_center.x - o_size,
        object_center.y - o_size,
        tabletop_z - res,
    );
    let src_res = map.resolution();
    let src_origin = map.origin();
    let mut cells = vec![CellState::Unknown; INPUT_CELLS];

    // source index range whose centers lie in [lo, lo + res) along one axis
    let span = |axis: usize, i: usize| -> (i32, i32) {
        let lo = origin[axis] + i as f64 * res;
        let first = ((lo - src_origin[axis]) / src_res - 0.5).ceil() as i32;
        let last = ((lo + res - src_origin[axis]) / src_res - 0.5).ceil() as i32 - 1;
        (first, last)
    };
    let spans: Vec<Vec<(i32, i32)>> = (0..3)
        .map(|a| (0..INPUT_DIM).map(|i| span(a, i)).collect())
        .collect();

    for z in 0..INPUT_DIM {
        for y in 0..INPUT_DIM {
            for x in 0..INPUT_DIM {
                let idx = x + INPUT_DIM * (y + INPUT_DIM * z);
                let center =
                    origin + Vec3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5) * res;
                if z == 0 {
                    let lateral = ((center.x - object_center.x).powi(2)
                        + (center.y - object_center.y).powi(2))
                    .sqrt();
                    if lateral <= 2.0 * o_size {
                        cells[idx] = CellState::Occupied;
                        continue;
                    }
                }
                let (x0, x1) = spans[0][x];
                let (y0, y1) = spans[1][y];
                let (z0, z1) = spans[2][z];
                let mut counts = [0usize; 3];
                let mut any = false;
                for kz in z0..=z1 {
                    for ky in y0..=y1 {
                        for kx in x0..=x1 {
                            counts[map.get(VoxelKey::new(kx, ky, kz)) as usize] += 1;
                            any = true;
                        }
                    }
                }
                cells[idx] = if any {
                    let [_, free, occupied] = counts;
                    if occupied > 0 {
                        CellState::Occupied
                    } else if free > 0 {
                        CellState::Free
                    } else {
                        CellState::Unknown
                    }
                } else {
                    map.get(map.key_of(center))
                };
            }
        }
    }
    Ok(InputGrid {
        origin,
        resolution: res,
        cells,
    })
}
