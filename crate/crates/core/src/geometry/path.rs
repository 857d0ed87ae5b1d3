use super::{GeometryError, ObstacleSphere, Vec3, View};

/// Length of the local path between two view positions around the obstacle.
///
/// If the segment does not cross the sphere (including tangency) the path is the
/// straight segment. Otherwise it runs straight to the first intersection point,
/// along the great-circle arc between the two intersection points, and straight
/// again to the far endpoint.
///
/// The endpoints are put in a canonical order first, so the result is exactly
/// symmetric, and the detour is added as `arc - chord >= 0` on top of the
/// Euclidean distance so the result never drops below it.
pub fn local_path_length(
    a: Vec3,
    b: Vec3,
    obstacle: &ObstacleSphere,
) -> Result<f64, GeometryError> {
    for p in [a, b] {
        if (p - obstacle.center).norm() <= obstacle.radius {
            return Err(GeometryError::EndpointInsideObstacle([p.x, p.y, p.z]));
        }
    }
    let (a, b) = if a.as_slice() <= b.as_slice() {
        (a, b)
    } else {
        (b, a)
    };
    let d = b - a;
    let straight = d.norm();
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return Ok(0.0);
    }
    // |a + t d - c|^2 = r^2
    let f = a - obstacle.center;
    let half_b = f.dot(&d);
    let c = f.norm_squared() - obstacle.radius * obstacle.radius;
    let disc = half_b * half_b - len2 * c;
    if disc <= 0.0 {
        return Ok(straight);
    }
    let sq = disc.sqrt();
    let t1 = (-half_b - sq) / len2;
    let t2 = (-half_b + sq) / len2;
    if !(t1 > 0.0 && t1 < 1.0 && t2 > 0.0 && t2 < 1.0) {
        return Ok(straight);
    }
    let u = a + d * t1 - obstacle.center;
    let w = a + d * t2 - obstacle.center;
    let theta = u.cross(&w).norm().atan2(u.dot(&w));
    let chord = 2.0 * obstacle.radius * (theta / 2.0).sin();
    let detour = (obstacle.radius * theta - chord).max(0.0);
    Ok(straight + detour)
}

/// Complete undirected graph over a set of views weighted by local path length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGraph {
    /// View id of each vertex.
    pub view_ids: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub start: usize,
}

impl PathGraph {
    pub fn from_views(
        views: &[&View],
        obstacle: &ObstacleSphere,
        start: usize,
    ) -> Result<Self, GeometryError> {
        let n = views.len();
        if start >= n {
            return Err(GeometryError::BadStart { start, n });
        }
        let mut weights = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = local_path_length(views[i].position, views[j].position, obstacle)?;
                weights[i][j] = w;
                weights[j][i] = w;
            }
        }
        Ok(Self {
            view_ids: views.iter().map(|v| v.id).collect(),
            weights,
            start,
        })
    }

    /// Builds a graph from an explicit weight matrix; vertex `i` gets view id `i`.
    pub fn from_weights(weights: Vec<Vec<f64>>, start: usize) -> Result<Self, GeometryError> {
        let n = weights.len();
        if start >= n {
            return Err(GeometryError::BadStart { start, n });
        }
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(GeometryError::BadWeights(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(GeometryError::BadWeights(format!(
                    "diagonal entry {i} is nonzero"
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(GeometryError::BadWeights(format!("weight ({i},{j}) = {w}")));
                }
                if w != weights[j][i] {
                    return Err(GeometryError::BadWeights(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            view_ids: (0..n).collect(),
            weights,
            start,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum of edge weights along a vertex sequence, accumulated in order.
    pub fn sequence_length(&self, order: &[usize]) -> f64 {
        order.windows(2).map(|w| self.weights[w[0]][w[1]]).sum()
    }
}
