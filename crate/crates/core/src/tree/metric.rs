use super::{GrowthTree, VertexId};
use crate::error::{Error, Result};

/// Symmetric matrix of pairwise distances between `k` marked points.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::input("distance matrix must be square"));
            }
            entries.extend_from_slice(row);
        }
        Ok(DistanceMatrix { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        DistanceMatrix {
            size: self.size,
            entries: self.entries.iter().map(|d| d * c).collect(),
        }
    }

    /// Zero diagonal, symmetry and the triangle inequality, up to `tol`.
    pub fn is_metric(&self, tol: f64) -> bool {
        let k = self.size;
        for i in 0..k {
            if self.get(i, i).abs() > tol {
                return false;
            }
            for j in 0..k {
                if (self.get(i, j) - self.get(j, i)).abs() > tol || self.get(i, j) < -tol {
                    return false;
                }
                for l in 0..k {
                    if self.get(i, l) > self.get(i, j) + self.get(j, l) + tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Four-point condition: for every quadruple the two largest of the three
    /// pair sums coincide.
    pub fn satisfies_four_point(&self, tol: f64) -> bool {
        let k = self.size;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    for m in 0..k {
                        let mut s = [
                            self.get(i, j) + self.get(l, m),
                            self.get(i, l) + self.get(j, m),
                            self.get(i, m) + self.get(j, l),
                        ];
                        s.sort_by(f64::total_cmp);
                        if (s[2] - s[1]).abs() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Graph distances between `points`, divided by `scale`. One BFS per point.
pub fn distance_matrix(
    tree: &GrowthTree,
    points: &[VertexId],
    scale: f64,
) -> Result<DistanceMatrix> {
    if !(scale > 0.0) {
        return Err(Error::param(format!("scale must be positive, got {scale}")));
    }
    for &p in points {
        tree.check_id(p)?;
    }
    let k = points.len();
    let mut entries = vec![0.0; k * k];
    for (i, &p) in points.iter().enumerate() {
        let dist = tree.bfs_distances(&[p]);
        for (j, &q) in points.iter().enumerate() {
            entries[i * k + j] = f64::from(dist[q.index()]) / scale;
        }
    }
    Ok(DistanceMatrix { size: k, entries })
}

/// Distortion of the index-matching correspondence between two point sets.
pub fn distortion(d1: &DistanceMatrix, d2: &DistanceMatrix) -> Result<f64> {
    if d1.size != d2.size {
        return Err(Error::input(format!(
            "distortion needs equal sizes, got {} and {}",
            d1.size, d2.size
        )));
    }
    Ok(d1
        .entries
        .iter()
        .zip(&d2.entries)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Largest distance from any vertex to its nearest center.
pub fn covering_radius(tree: &GrowthTree, centers: &[VertexId]) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::input("covering radius needs at least one center"));
    }
    for &c in centers {
        tree.check_id(c)?;
    }
    let dist = tree.bfs_distances(centers);
    Ok(f64::from(dist.into_iter().max().unwrap_or(0)))
}

/// Hausdorff distance between two vertex sets under the graph metric.
pub fn hausdorff_distance(tree: &GrowthTree, s1: &[VertexId], s2: &[VertexId]) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::input("Hausdorff distance needs nonempty sets"));
    }
    for &v in s1.iter().chain(s2) {
        tree.check_id(v)?;
    }
    let from1 = tree.bfs_distances(s1);
    let from2 = tree.bfs_distances(s2);
    let one_sided =
        |set: &[VertexId], dist: &[u32]| set.iter().map(|v| dist[v.index()]).max().unwrap_or(0);
    Ok(f64::from(one_sided(s2, &from1).max(one_sided(s1, &from2))))
}
