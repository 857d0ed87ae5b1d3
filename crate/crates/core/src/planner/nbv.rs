use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{NbvPlanner, PlanContext, PlannerError, ViewState};
use crate::geometry::{local_path_length, ViewSpace};
use crate::voxel::imaging::pixel_window;
use crate::voxel::{CameraIntrinsics, CellState, ImagingConfig, OccupancyGrid, VisibilityTable};
use crate::ElementSet;

/// Index of the largest value among unvisited ids, ties to the lowest id.
pub fn argmax_lowest_id<T: PartialOrd + Copy>(
    values: &[T],
    state: ViewState,
) -> Result<usize, PlannerError> {
    let mut best: Option<(usize, T)> = None;
    for id in state.unvisited().take_while(|&id| id < values.len()) {
        if best.is_none_or(|(_, b)| values[id] > b) {
            best = Some((id, values[id]));
        }
    }
    best.map(|(id, _)| id).ok_or(PlannerError::AllVisited)
}

/// Newly visible ground-truth voxels per view: `|𝕧 \ covered|`.
pub fn oracle_gains(table: &VisibilityTable, covered: &ElementSet) -> Vec<usize> {
    (0..table.num_views())
        .map(|v| table.view_set(v).difference_count(covered))
        .collect()
}

/// Greedy oracle: the unvisited view that sees the most uncovered voxels.
pub fn nbv_oracle(
    table: &VisibilityTable,
    covered: &ElementSet,
    state: ViewState,
) -> Result<usize, PlannerError> {
    argmax_lowest_id(&oracle_gains(table, covered), state)
}

/// Uniform draw over unvisited views.
pub fn nbv_random<R: Rng>(state: ViewState, rng: &mut R) -> Result<usize, PlannerError> {
    let open: Vec<usize> = state.unvisited().collect();
    open.choose(rng).copied().ok_or(PlannerError::AllVisited)
}

/// Distinct Unknown cells crossed by the strided pixel rays of each unvisited
/// view before the first Occupied cell. Visited views get 0.
pub fn unknown_gains(
    map: &OccupancyGrid,
    views: &ViewSpace,
    cam: &CameraIntrinsics,
    cfg: &ImagingConfig,
    state: ViewState,
) -> Vec<usize> {
    let [nx, ny, nz] = map.dims();
    let stride = cfg.stride.max(1);
    views
        .views
        .par_iter()
        .enumerate()
        .map(|(id, view)| {
            if state.is_visited(id) {
                return 0;
            }
            let rot = view.camera_to_world();
            let (u0, u1, v0, v1) = pixel_window(map, view, cam);
            let mut seen = vec![false; nx * ny * nz];
            let mut gain = 0;
            let first = |a: u32| a.div_ceil(stride) * stride;
            let mut v = first(v0);
            while v < v1 {
                let mut u = first(u0);
                while u < u1 {
                    let dir = (rot * cam.deproject(u as f64, v as f64)).normalize();
                    for cell in map.traverse(view.position, dir, cfg.max_range) {
                        match map.get(cell.key) {
                            CellState::Occupied => break,
                            CellState::Unknown => {
                                let k = cell.key;
                                let i = k.ix as usize + nx * (k.iy as usize + ny * k.iz as usize);
                                if !seen[i] {
                                    seen[i] = true;
                                    gain += 1;
                                }
                            }
                            CellState::Free => {}
                        }
                    }
                    u += stride;
                }
                v += stride;
            }
            gain
        })
        .collect()
}

/// Information-gain baseline that needs no ground truth.
pub fn nbv_unknown_gain(
    map: &OccupancyGrid,
    views: &ViewSpace,
    cam: &CameraIntrinsics,
    cfg: &ImagingConfig,
    state: ViewState,
) -> Result<usize, PlannerError> {
    argmax_lowest_id(&unknown_gains(map, views, cam, cfg, state), state)
}

/// `gain(v)/Σgain − cost(v)/Σcost` for every candidate.
pub fn movement_weighted_utility(gains: &[f64], costs: &[f64]) -> Result<Vec<f64>, PlannerError> {
    if gains.len() != costs.len() {
        return Err(PlannerError::LengthMismatch {
            gains: gains.len(),
            costs: costs.len(),
        });
    }
    let gs: f64 = gains.iter().sum();
    let cs: f64 = costs.iter().sum();
    if !(gs > 0.0) {
        return Err(PlannerError::ZeroGains);
    }
    if !(cs > 0.0) {
        return Err(PlannerError::ZeroCosts);
    }
    Ok(gains
        .iter()
        .zip(costs)
        .map(|(g, c)| g / gs - c / cs)
        .collect())
}

pub struct OracleNbv;

impl NbvPlanner for OracleNbv {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn next_view(&mut self, ctx: &PlanContext<'_>) -> Result<usize, PlannerError> {
        nbv_oracle(ctx.table, ctx.covered, ctx.state)
    }
}

/// Seeded random planner; successive calls continue one stream.
pub struct RandomNbv {
    rng: ChaCha8Rng,
}

impl RandomNbv {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl NbvPlanner for RandomNbv {
    fn name(&self) -> String {
        "random".into()
    }

    fn next_view(&mut self, ctx: &PlanContext<'_>) -> Result<usize, PlannerError> {
        nbv_random(ctx.state, &mut self.rng)
    }
}

pub struct UnknownGainNbv;

impl NbvPlanner for UnknownGainNbv {
    fn name(&self) -> String {
        "unknown-gain".into()
    }

    fn next_view(&mut self, ctx: &PlanContext<'_>) -> Result<usize, PlannerError> {
        nbv_unknown_gain(ctx.map, ctx.views, ctx.cam, ctx.imaging, ctx.state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainSource {
    Oracle,
    Unknown,
}

/// Gain/cost trade-off where cost is the local path length from the current view.
pub struct MovementWeightedNbv {
    pub source: GainSource,
}

impl NbvPlanner for MovementWeightedNbv {
    fn name(&self) -> String {
        match self.source {
            GainSource::Oracle => "mw-oracle".into(),
            GainSource::Unknown => "mw-unknown-gain".into(),
        }
    }

    fn next_view(&mut self, ctx: &PlanContext<'_>) -> Result<usize, PlannerError> {
        let all: Vec<usize> = match self.source {
            GainSource::Oracle => oracle_gains(ctx.table, ctx.covered),
            GainSource::Unknown => {
                unknown_gains(ctx.map, ctx.views, ctx.cam, ctx.imaging, ctx.state)
            }
        };
        let candidates: Vec<usize> = ctx.state.unvisited().filter(|&id| id < all.len()).collect();
        if candidates.is_empty() {
            return Err(PlannerError::AllVisited);
        }
        let from = ctx.views.view(ctx.current).position;
        let gains: Vec<f64> = candidates.iter().map(|&id| all[id] as f64).collect();
        let costs = candidates
            .iter()
            .map(|&id| local_path_length(from, ctx.views.view(id).position, ctx.obstacle))
            .collect::<Result<Vec<f64>, _>>()?;
        let utility = movement_weighted_utility(&gains, &costs)?;
        let mut best = 0;
        for i in 1..candidates.len() {
            if utility[i] > utility[best] {
                best = i;
            }
        }
        Ok(candidates[best])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_view_space, Vec3, NUM_VIEWS};
    use crate::voxel::VoxelKey;

    #[test]
    fn oracle_picks_largest_then_lowest_id() {
        let table =
            VisibilityTable::from_element_sets(9, &[vec![0], vec![1, 2, 3, 4, 5], vec![6, 7, 8]])
                .unwrap();
        let none = table.empty_cover();
        assert_eq!(nbv_oracle(&table, &none, ViewState::new()).unwrap(), 1);
        let all = table.cover_of(0..3);
        assert_eq!(nbv_oracle(&table, &all, ViewState::new()).unwrap(), 0);
        assert_eq!(
            nbv_oracle(&table, &all, ViewState::from_packed(0b1)).unwrap(),
            1
        );
        assert_eq!(
            nbv_oracle(&table, &none, ViewState::from_packed(u32::MAX)),
            Err(PlannerError::AllVisited)
        );
    }

    #[test]
    fn random_is_uniform_and_never_visited() {
        let state = ViewState::from_packed(!0b1001_0110u32);
        let open: Vec<usize> = state.unvisited().collect();
        assert_eq!(open, vec![1, 2, 4, 7]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; NUM_VIEWS];
        let n = 100_000;
        for _ in 0..n {
            counts[nbv_random(state, &mut rng).unwrap()] += 1;
        }
        for id in 0..NUM_VIEWS {
            if open.contains(&id) {
                assert!((counts[id] as f64 / n as f64 - 0.25).abs() < 0.01);
            } else {
                assert_eq!(counts[id], 0);
            }
        }
        let only = ViewState::from_packed(!(1 << 9));
        assert_eq!(nbv_random(only, &mut rng).unwrap(), 9);
        let seq = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| nbv_random(ViewState::new(), &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(4), seq(4));
    }

    #[test]
    fn utility_arithmetic() {
        let u = movement_weighted_utility(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((u[0] - 1.0 / 6.0).abs() < 1e-15 && (u[1] + 1.0 / 6.0).abs() < 1e-15);
        let u = movement_weighted_utility(&[3.0; 4], &[0.5; 4]).unwrap();
        assert!(u.iter().all(|x| x.abs() < 1e-15));
        let gains = [5.0, 1.0, 7.0, 0.0];
        let costs = [0.3, 0.9, 0.1, 0.4];
        let a = movement_weighted_utility(&gains, &costs).unwrap();
        let b = movement_weighted_utility(&gains, &costs.map(|c| c * 10.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(
            movement_weighted_utility(&[0.0, 0.0], &[1.0, 1.0]),
            Err(PlannerError::ZeroGains)
        );
        assert_eq!(
            movement_weighted_utility(&[1.0, 0.0], &[0.0, 0.0]),
            Err(PlannerError::ZeroCosts)
        );
        assert!(movement_weighted_utility(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn small_camera() -> CameraIntrinsics {
        CameraIntrinsics::new(40, 30, 30.0, 30.0, 20.0, 15.0).unwrap()
    }

    fn cube_world(fill: CellState) -> (OccupancyGrid, ViewSpace) {
        let map =
            OccupancyGrid::new(Vec3::new(-0.08, -0.08, 0.0), 0.01, [16, 16, 16], fill).unwrap();
        let views = build_view_space(Vec3::new(0.0, 0.0, 0.08), 0.3, 0.0, 7).unwrap();
        (map, views)
    }

    // Oracle: distinct cells met by a fine march along every pixel ray, stopping
    // at the first Occupied cell.
    fn marched_unknown(
        map: &OccupancyGrid,
        views: &ViewSpace,
        cam: &CameraIntrinsics,
        cfg: &ImagingConfig,
        id: usize,
    ) -> usize {
        let view = views.view(id);
        let rot = view.camera_to_world();
        let mut seen = std::collections::HashSet::new();
        let step = map.resolution() / 50.0;
        for v in (0..cam.height).step_by(cfg.stride as usize) {
            for u in (0..cam.width).step_by(cfg.stride as usize) {
                let dir = (rot * cam.deproject(u as f64, v as f64)).normalize();
                let mut t = 0.0;
                while t <= cfg.max_range {
                    let k = map.key_of(view.position + dir * t);
                    if map.in_bounds(k) {
                        match map.get(k) {
                            CellState::Occupied => break,
                            CellState::Unknown => {
                                seen.insert(k);
                            }
                            CellState::Free => {}
                        }
                    }
                    t += step;
                }
            }
        }
        seen.len()
    }

    #[test]
    fn unknown_gain_all_free_is_zero() {
        let (map, views) = cube_world(CellState::Free);
        let cfg = ImagingConfig::for_radius(0.3);
        let gains = unknown_gains(&map, &views, &small_camera(), &cfg, ViewState::new());
        assert!(gains.iter().all(|&g| g == 0));
        assert_eq!(
            nbv_unknown_gain(
                &map,
                &views,
                &small_camera(),
                &cfg,
                ViewState::from_packed(1)
            )
            .unwrap(),
            1
        );
    }

    #[test]
    fn unknown_gain_matches_march_oracle_on_unknown_world() {
        let (map, views) = cube_world(CellState::Unknown);
        let cam = small_camera();
        let cfg = ImagingConfig {
            stride: 1,
            max_range: 0.6,
        };
        let gains = unknown_gains(&map, &views, &cam, &cfg, ViewState::new());
        for id in [0, 5, 13, 31] {
            let oracle = marched_unknown(&map, &views, &cam, &cfg, id);
            // the march may miss cells a ray only clips at a corner
            assert!(
                gains[id] >= oracle && gains[id] as f64 <= oracle as f64 * 1.05 + 5.0,
                "view {id}: {} vs {oracle}",
                gains[id]
            );
        }
        let best = nbv_unknown_gain(&map, &views, &cam, &cfg, ViewState::new()).unwrap();
        let oracle_best = (0..NUM_VIEWS)
            .max_by_key(|&i| (gains[i], std::cmp::Reverse(i)))
            .unwrap();
        assert_eq!(best, oracle_best);
    }

    #[test]
    fn occluded_slab_is_seen_by_one_view() {
        let (mut map, views) = cube_world(CellState::Free);
        // occupied core at the center blocks every view's line of sight
        let c = Vec3::new(0.0, 0.0, 0.08);
        for iz in 0..16 {
            for iy in 0..16 {
                for ix in 0..16 {
                    let k = VoxelKey::new(ix, iy, iz);
                    if (map.center_of(k) - c).norm() < 0.045 {
                        map.set(k, CellState::Occupied).unwrap();
                    }
                }
            }
        }
        // unknown cells just in front of the core, toward view 7
        let toward = (views.view(7).position - c).normalize();
        for s in [0.055, 0.065] {
            let k = map.key_of(c + toward * s);
            if map.get(k) != CellState::Occupied {
                map.set(k, CellState::Unknown).unwrap();
            }
        }
        let cam = CameraIntrinsics::new(20, 20, 400.0, 400.0, 10.0, 10.0).unwrap();
        let cfg = ImagingConfig {
            stride: 1,
            max_range: 0.6,
        };
        let gains = unknown_gains(&map, &views, &cam, &cfg, ViewState::new());
        for id in 0..NUM_VIEWS {
            assert_eq!(
                gains[id],
                marched_unknown(&map, &views, &cam, &cfg, id),
                "view {id}"
            );
        }
        assert!(gains[7] > 0);
        assert_eq!(
            nbv_unknown_gain(&map, &views, &cam, &cfg, ViewState::new()).unwrap(),
            7
        );
    }
}
