use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GeometryError, Mat4, Vec3, AXIS_EPS, NUM_VIEWS};

/// Iterations of the hemisphere repulsion used to place the view positions.
pub const REPULSION_ITERATIONS: usize = 3000;

/// A candidate view: a position on the view sphere and the world-to-camera pose.
///
/// The camera looks along its local Z+ axis towards the object center.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub id: usize,
    pub position: Vec3,
    pub pose: Mat4,
}

impl View {
    /// Rotation taking camera-frame directions into the world frame; its columns
    /// are the camera X+, Y+ and Z+ axes expressed in world coordinates.
    pub fn camera_to_world(&self) -> nalgebra::Matrix3<f64> {
        self.pose.fixed_view::<3, 3>(0, 0).transpose()
    }

    pub fn forward(&self) -> Vec3 {
        self.camera_to_world().column(2).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpace {
    pub center: Vec3,
    pub radius: f64,
    pub world_origin: Vec3,
    pub views: Vec<View>,
}

impl ViewSpace {
    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn view(&self, id: usize) -> &View {
        &self.views[id]
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.views.iter().map(|v| v.position).collect()
    }

    /// Smallest angle (radians) between two view directions seen from the center.
    pub fn min_angular_distance(&self) -> f64 {
        let dirs: Vec<Vec3> = self
            .views
            .iter()
            .map(|v| (v.position - self.center).normalize())
            .collect();
        min_pairwise_angle(&dirs)
    }
}

pub(crate) fn min_pairwise_angle(dirs: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            let a = dirs[i].cross(&dirs[j]).norm().atan2(dirs[i].dot(&dirs[j]));
            best = best.min(a);
        }
    }
    best
}

/// World-to-camera pose of a view looking at `object_center`.
///
/// Z+ is the unit vector from the view to the object, Y+ is `vo × wv` and
/// X+ is `Y+ × Z+`, where `w` is the world origin. The matrix is the inverse of
/// the axis frame composed with a translation by `-(v - w)`.
pub fn view_pose(
    object_center: Vec3,
    view_position: Vec3,
    world_origin: Vec3,
) -> Result<Mat4, GeometryError> {
    let vo = object_center - view_position;
    if vo.norm() <= AXIS_EPS {
        return Err(GeometryError::ViewAtObjectCenter);
    }
    let wv = view_position - world_origin;
    let y = vo.cross(&wv);
    if y.norm() <= AXIS_EPS {
        return Err(GeometryError::DegenerateAxis);
    }
    Ok(compose_pose(vo.normalize(), y.normalize(), wv))
}

/// Like [`view_pose`], but when `vo × wv` vanishes uses the world up vector
/// projected orthogonally to `vo` as the Y+ axis.
pub fn view_pose_with_fallback(
    object_center: Vec3,
    view_position: Vec3,
    world_origin: Vec3,
) -> Result<Mat4, GeometryError> {
    match view_pose(object_center, view_position, world_origin) {
        Err(GeometryError::DegenerateAxis) => {
            let z = (object_center - view_position).normalize();
            let up = Vec3::z();
            let y = up - z * up.dot(&z);
            if y.norm() <= AXIS_EPS {
                return Err(GeometryError::DegenerateAxis);
            }
            Ok(compose_pose(z, y.normalize(), view_position - world_origin))
        }
        other => other,
    }
}

fn compose_pose(z: Vec3, y: Vec3, wv: Vec3) -> Mat4 {
    let x = y.cross(&z);
    // inverse of an orthonormal frame is its transpose
    let rt = nalgebra::Matrix3::from_columns(&[x, y, z]).transpose();
    let t = -(rt * wv);
    let mut m = Mat4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

/// Places 32 views on the upper hemisphere around `center`.
///
/// Positions come from a seeded repulsion on the unit hemisphere whose exponent
/// grows over the run, so the final configuration approximately maximises the
/// minimum pairwise distance (a spherical code). The best configuration seen is
/// kept. Views lie at `z >= center.z`, which is above `tabletop_z`.
pub fn build_view_space(
    center: Vec3,
    radius: f64,
    tabletop_z: f64,
    seed: u64,
) -> Result<ViewSpace, GeometryError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GeometryError::NonPositiveRadius(radius));
    }
    if !(tabletop_z < center.z) {
        return Err(GeometryError::CenterBelowTabletop {
            center_z: center.z,
            tabletop_z,
        });
    }
    let world_origin = Vec3::zeros();
    let dirs = hemisphere_code(NUM_VIEWS, seed);
    let views = dirs
        .iter()
        .enumerate()
        .map(|(id, d)| {
            let position = center + d * radius;
            view_pose_with_fallback(center, position, world_origin).map(|pose| View {
                id,
                position,
                pose,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ViewSpace {
        center,
        radius,
        world_origin,
        views,
    })
}

fn random_hemisphere_dir(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn project_hemisphere(v: Vec3) -> Vec3 {
    let mut v = v.normalize();
    if v.z < 0.0 {
        v.z = 0.0;
        v = v.normalize();
    }
    v
}

fn hemisphere_code(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec3> = (0..n).map(|_| random_hemisphere_dir(&mut rng)).collect();
    let mut best = pts.clone();
    let mut best_min = min_pairwise_angle(&pts);
    let mut forces = vec![Vec3::zeros(); n];
    for it in 0..REPULSION_ITERATIONS {
        let frac = it as f64 / REPULSION_ITERATIONS as f64;
        let exponent = 1.0 + 23.0 * frac;
        let step = 0.1 * (1.0 - frac) + 0.002;
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                dmin = dmin.min((pts[i] - pts[j]).norm());
            }
        }
        for f in forces.iter_mut() {
            *f = Vec3::zeros();
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = pts[i] - pts[j];
                let r = d.norm().max(1e-12);
                // weights normalised by the closest pair so high exponents stay finite
                let w = (dmin / r).powf(exponent) / r;
                forces[i] += d * w;
                forces[j] -= d * w;
            }
        }
        let fmax = forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
        if fmax <= 0.0 {
            break;
        }
        for (p, f) in pts.iter_mut().zip(&forces) {
            let tangential = f - *p * f.dot(p);
            *p = project_hemisphere(*p + tangential * (step / fmax));
        }
        let m = min_pairwise_angle(&pts);
        if m > best_min {
            best_min = m;
            best.clone_from(&pts);
        }
    }
    // stable ordering: by descending height, then azimuth
    best.sort_by(|a, b| {
        b.z.partial_cmp(&a.z)
            .unwrap()
            .then(a.y.atan2(a.x).partial_cmp(&b.y.atan2(b.x)).unwrap())
    });
    best
}

/// Formats like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= P {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One line per view: `id x y z` followed by the 16 row-major pose entries.
pub fn write_view_space<W: Write>(space: &ViewSpace, mut out: W) -> Result<(), GeometryError> {
    for v in &space.views {
        let mut line = format!(
            "{} {} {} {}",
            v.id,
            format_sig9(v.position.x),
            format_sig9(v.position.y),
            format_sig9(v.position.z)
        );
        for r in 0..4 {
            for c in 0..4 {
                line.push(' ');
                line.push_str(&format_sig9(v.pose[(r, c)]));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads positions and poses back; the sphere center and radius are not part of
/// the file and must be supplied.
pub fn read_view_space<R: BufRead>(
    input: R,
    center: Vec3,
    radius: f64,
) -> Result<ViewSpace, GeometryError> {
    let mut views = Vec::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| GeometryError::Parse { line: ln + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 20 {
            return Err(parse_err(format!(
                "expected 20 fields, found {}",
                fields.len()
            )));
        }
        let id: usize = fields[0].parse().map_err(|e| parse_err(format!("{e}")))?;
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("{e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let position = Vec3::new(nums[0], nums[1], nums[2]);
        let pose = Mat4::from_row_slice(&nums[3..19]);
        views.push(View { id, position, pose });
    }
    Ok(ViewSpace {
        center,
        radius,
        world_origin: Vec3::zeros(),
        views,
    })
}
