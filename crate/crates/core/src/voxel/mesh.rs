use std::io::BufRead;
use std::path::Path;

use rand::Rng;

use super::VoxelError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, VoxelError> {
        if let Some(&bad) = triangles.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(VoxelError::BadFaceIndex {
                index: bad as i64,
                count: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Vertices referenced by at least one triangle.
    fn used_vertices(&self) -> impl Iterator<Item = Vec3> + '_ {
        let mut used = vec![false; self.vertices.len()];
        for &i in self.triangles.iter().flatten() {
            used[i] = true;
        }
        self.vertices
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(v, _)| *v)
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in self.used_vertices() {
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        (lo, hi)
    }

    /// Bounding sphere centred on the box center; its radius is the object size.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        let (lo, hi) = self.aabb();
        let c = (lo + hi) / 2.0;
        let r = self
            .used_vertices()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max);
        (c, r)
    }

    pub fn transformed(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Uniformly scales about the bounding-sphere center so the object size becomes `o_size`.
    pub fn scaled_to_size(&self, o_size: f64) -> Self {
        let (c, r) = self.bounding_sphere();
        let s = o_size / r;
        self.transformed(|v| c + (v - c) * s)
    }

    /// Area-weighted uniform samples on the surface.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec3> {
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        (0..n)
            .map(|_| {
                let x = rng.gen_range(0.0..total);
                let t = cumulative
                    .partition_point(|&c| c <= x)
                    .min(self.triangles.len() - 1);
                let [a, b, c] = self.triangle(t);
                let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, VoxelError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        match ext.as_str() {
            "ply" => Self::read_ply(reader),
            "obj" => Self::read_obj(reader),
            other => Err(VoxelError::UnsupportedFormat(format!(
                "extension `{other}`"
            ))),
        }
    }

    /// ASCII PLY with `element vertex` (x y z among its properties) and
    /// `element face` (a `vertex_indices` list). Polygons are fan-triangulated.
    pub fn read_ply<R: BufRead>(input: R) -> Result<Self, VoxelError> {
        let mut lines = input.lines().enumerate();
        let mut next_line = || -> Result<Option<(usize, String)>, VoxelError> {
            match lines.next() {
                Some((i, l)) => Ok(Some((i + 1, l?))),
                None => Ok(None),
            }
        };
        let perr = |line: usize, msg: &str| VoxelError::Parse {
            line,
            msg: msg.to_string(),
        };

        struct Element {
            name: String,
            count: usize,
            props: Vec<String>,
        }
        let mut elements: Vec<Element> = Vec::new();
        match next_line()? {
            Some((_, l)) if l.trim() == "ply" => {}
            _ => return Err(perr(1, "missing `ply` magic")),
        }
        loop {
            let Some((ln, line)) = next_line()? else {
                return Err(perr(0, "unterminated header"));
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["format", fmt, ..] => {
                    if *fmt != "ascii" {
                        return Err(VoxelError::UnsupportedFormat(format!("PLY {fmt}")));
                    }
                }
                ["element", name, count] => elements.push(Element {
                    name: name.to_string(),
                    count: count.parse().map_err(|_| perr(ln, "bad element count"))?,
                    props: Vec::new(),
                }),
                ["property", "list", _, _, name] | ["property", _, name] => {
                    let el = elements
                        .last_mut()
                        .ok_or_else(|| perr(ln, "property before element"))?;
                    el.props.push(name.to_string());
                }
                ["end_header"] => break,
                _ => {}
            }
        }
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for el in &elements {
            for _ in 0..el.count {
                let Some((ln, line)) = next_line()? else {
                    return Err(perr(0, "unexpected end of body"));
                };
                let f: Vec<&str> = line.split_whitespace().collect();
                match el.name.as_str() {
                    "vertex" => {
                        let mut xyz = [0.0; 3];
                        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
                            let idx = el
                                .props
                                .iter()
                                .position(|p| p == name)
                                .ok_or_else(|| perr(ln, "vertex lacks x/y/z"))?;
                            xyz[axis] = f
                                .get(idx)
                                .and_then(|s| s.parse().ok())
                                .ok_or_else(|| perr(ln, "bad vertex coordinate"))?;
                        }
                        vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
                    }
                    "face" => {
                        let n: usize = f
                            .first()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| perr(ln, "bad face"))?;
                        let idx: Vec<usize> = f
                            .iter()
                            .skip(1)
                            .take(n)
                            .map(|s| s.parse().map_err(|_| perr(ln, "bad face index")))
                            .collect::<Result<_, _>>()?;
                        if idx.len() != n {
                            return Err(perr(ln, "short face"));
                        }
                        fan(&idx, &mut triangles);
                    }
                    _ => {}
                }
            }
        }
        Self::new(vertices, triangles)
    }

    /// Wavefront OBJ, `v` and `f` records only (other records are ignored).
    pub fn read_obj<R: BufRead>(input: R) -> Result<Self, VoxelError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let ln = i + 1;
            let perr = |msg: &str| VoxelError::Parse {
                line: ln,
                msg: msg.to_string(),
            };
            let mut f = line.split_whitespace();
            match f.next() {
                Some("v") => {
                    let c: Vec<f64> = f
                        .take(3)
                        .map(|s| s.parse().map_err(|_| perr("bad vertex coordinate")))
                        .collect::<Result<_, _>>()?;
                    if c.len() != 3 {
                        return Err(perr("vertex needs 3 coordinates"));
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in f {
                        let first = tok.split('/').next().unwrap_or("");
                        let raw: i64 = first.parse().map_err(|_| perr("bad face index"))?;
                        let resolved = if raw > 0 {
                            raw - 1
                        } else if raw < 0 {
                            vertices.len() as i64 + raw
                        } else {
                            return Err(perr("face index 0"));
                        };
                        if resolved < 0 {
                            return Err(VoxelError::BadFaceIndex {
                                index: raw,
                                count: vertices.len(),
                            });
                        }
                        idx.push(resolved as usize);
                    }
                    if idx.len() < 3 {
                        return Err(perr("face needs 3 vertices"));
                    }
                    fan(&idx, &mut triangles);
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles)
    }
}

fn fan(idx: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..idx.len().saturating_sub(1) {
        out.push([idx[0], idx[k], idx[k + 1]]);
    }
}

/// Closed procedural meshes used for desk-scale corpora and tests.
pub mod primitives {
    use super::TriangleMesh;
    use crate::geometry::Vec3;
    use std::collections::HashMap;

    /// Subdivided icosahedron of unit radius centred at the origin.
    pub fn icosphere(subdivisions: u32) -> TriangleMesh {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut verts);
                let bc = midpoint(b, c, &mut verts);
                let ca = midpoint(c, a, &mut verts);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        TriangleMesh {
            vertices: verts,
            triangles: faces,
        }
    }

    /// Axis-aligned box with the given half extents, centred at the origin.
    pub fn cuboid(half: Vec3) -> TriangleMesh {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            let s = |bit: usize| if i >> bit & 1 == 1 { 1.0 } else { -1.0 };
            vertices.push(Vec3::new(s(0) * half.x, s(1) * half.y, s(2) * half.z));
        }
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let mut triangles = Vec::new();
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriangleMesh {
            vertices,
            triangles,
        }
    }

    /// Closed cylinder along Z, centred at the origin.
    pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
        let h = height / 2.0;
        let mut vertices = vec![Vec3::new(0.0, 0.0, -h), Vec3::new(0.0, 0.0, h)];
        for k in 0..segments {
            let a = std::f64::consts::TAU * k as f64 / segments as f64;
            vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), -h));
            vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), h));
        }
        let mut triangles = Vec::new();
        for k in 0..segments {
            let b0 = 2 + 2 * k;
            let t0 = b0 + 1;
            let b1 = 2 + 2 * ((k + 1) % segments);
            let t1 = b1 + 1;
            triangles.push([0, b1, b0]);
            triangles.push([1, t0, t1]);
            triangles.push([b0, b1, t1]);
            triangles.push([b0, t1, t0]);
        }
        TriangleMesh {
            vertices,
            triangles,
        }
    }
}
