//! Spherical caps, cell partitions, cluster graphs and affine rank.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::budget::Budget;
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::lattice::{dist_sq, FrequencySet};

/// Points of the radius-R sphere within distance `size` of R·center.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cap {
    pub radius: f64,
    pub center: Vec<f64>,
    pub size: f64,
}

impl Cap {
    pub fn new(radius: f64, center: Vec<f64>, size: f64) -> Result<Self> {
        let norm = libm::sqrt(center.iter().map(|c| c * c).sum());
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("cap center must be a unit vector"));
        }
        if !(size > 0.0) {
            return Err(Error::invalid("cap size must be positive"));
        }
        Ok(Cap { radius, center, size })
    }

    /// Cap centred in the direction of an arbitrary nonzero vector.
    pub fn toward(radius: f64, direction: &[f64], size: f64) -> Result<Self> {
        let norm = libm::sqrt(direction.iter().map(|c| c * c).sum());
        if norm == 0.0 {
            return Err(Error::invalid("cap direction is zero"));
        }
        Cap::new(radius, direction.iter().map(|c| c / norm).collect(), size)
    }

    fn apex(&self) -> Vec<f64> {
        self.center.iter().map(|c| c * self.radius).collect()
    }
}

fn check_radius(set: &FrequencySet, cap: &Cap) -> Result<()> {
    if (cap.radius - set.radius()).abs() > 1e-9 {
        return Err(Error::invalid("cap radius does not match the sphere"));
    }
    if cap.center.len() != set.dim() {
        return Err(Error::invalid("cap dimension does not match the set"));
    }
    Ok(())
}

fn in_ball(p: &[i64], apex: &[f64], r_sq: f64) -> bool {
    p.iter().zip(apex).map(|(a, b)| (*a as f64 - b) * (*a as f64 - b)).sum::<f64>() <= r_sq
}

/// Indices of set points inside the cap.
pub fn cap_members(set: &FrequencySet, cap: &Cap) -> Result<Vec<usize>> {
    check_radius(set, cap)?;
    let apex = cap.apex();
    let r_sq = cap.size * cap.size;
    Ok((0..set.len()).filter(|&i| in_ball(set.point(i), &apex, r_sq)).collect())
}

pub fn cap_count(set: &FrequencySet, cap: &Cap) -> Result<usize> {
    cap_members(set, cap).map(|m| m.len())
}

/// Uniform bucket grid over integer points for radius queries.
struct PointIndex<'a> {
    set: &'a FrequencySet,
    cell: f64,
    buckets: BTreeMap<Vec<i64>, Vec<u32>>,
}

impl<'a> PointIndex<'a> {
    fn new(set: &'a FrequencySet, cell: f64) -> Self {
        let mut buckets: BTreeMap<Vec<i64>, Vec<u32>> = BTreeMap::new();
        for (i, p) in set.iter().enumerate() {
            let key = p.iter().map(|c| libm::floor(*c as f64 / cell) as i64).collect();
            buckets.entry(key).or_default().push(i as u32);
        }
        PointIndex { set, cell, buckets }
    }

    /// Calls `f` with every point index whose bucket meets the box of
    /// half-width `r` around `center`.
    fn for_near(&self, center: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let lo: Vec<i64> = center.iter().map(|c| libm::floor((c - r) / self.cell) as i64).collect();
        let hi: Vec<i64> = center.iter().map(|c| libm::floor((c + r) / self.cell) as i64).collect();
        let mut key = lo.clone();
        loop {
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    f(i as usize);
                }
            }
            let mut axis = 0;
            loop {
                if axis == key.len() {
                    return;
                }
                if key[axis] < hi[axis] {
                    key[axis] += 1;
                    break;
                }
                key[axis] = lo[axis];
                axis += 1;
            }
        }
    }

    fn count_in_ball(&self, apex: &[f64], r: f64) -> usize {
        let mut n = 0;
        let r_sq = r * r;
        self.for_near(apex, r, |i| {
            if in_ball(self.set.point(i), apex, r_sq) {
                n += 1;
            }
        });
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapMaximum {
    /// Largest count found; a lower bound for the true maximum.
    pub count: usize,
    pub witness: Cap,
    pub candidates: usize,
}

/// Cap centres tried by [`max_cap_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapCenters {
    /// Normalised set points.
    Points,
    /// Normalised set points and midpoints of pairs within 2r.
    PointsAndMidpoints,
}

/// Maximum cap count over centres at normalised set points and normalised
/// midpoints of pairs close enough to share a cap of size `r`.
pub fn estimate_max_cap_count(set: &FrequencySet, r: f64, budget: &Budget) -> Result<CapMaximum> {
    max_cap_count(set, r, CapCenters::PointsAndMidpoints, budget)
}

/// Largest cap count over the chosen family of centres.
pub fn max_cap_count(set: &FrequencySet, r: f64, centers: CapCenters, budget: &Budget) -> Result<CapMaximum> {
    if !(r > 0.0) {
        return Err(Error::invalid("cap size must be positive"));
    }
    if set.is_empty() {
        return Err(Error::invalid("cannot place caps on an empty set"));
    }
    let radius = set.radius();
    let index = PointIndex::new(set, r.max(1.0));
    let mut best: Option<(usize, Cap)> = None;
    let mut candidates = 0usize;
    let mut consider = |dir: &[f64], best: &mut Option<(usize, Cap)>| -> Result<()> {
        let cap = Cap::toward(radius, dir, r)?;
        let count = index.count_in_ball(&cap.apex(), r);
        candidates += 1;
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            *best = Some((count, cap));
        }
        Ok(())
    };
    budget.charge(set.len() as u64)?;
    for p in set.iter() {
        let dir: Vec<f64> = p.iter().map(|c| *c as f64).collect();
        consider(&dir, &mut best)?;
    }
    let pair_sq = 4.0 * r * r;
    let pair_range = if centers == CapCenters::Points { 0 } else { set.len() };
    for i in 0..pair_range {
        let pi: Vec<f64> = set.point(i).iter().map(|c| *c as f64).collect();
        let mut near = Vec::new();
        index.for_near(&pi, 2.0 * r, |j| {
            if j > i && (dist_sq(set.point(i), set.point(j)) as f64) <= pair_sq {
                near.push(j);
            }
        });
        near.sort_unstable();
        budget.charge(near.len() as u64)?;
        for j in near {
            let mid: Vec<f64> = set.point(i).iter().zip(set.point(j)).map(|(a, b)| (*a + *b) as f64).collect();
            if mid.iter().any(|c| *c != 0.0) {
                consider(&mid, &mut best)?;
            }
        }
    }
    let (count, witness) = best.expect("nonempty set yields a candidate");
    Ok(CapMaximum { count, witness, candidates })
}

/// Assignment of set points to the cubes of a grid of pitch `cell_size`
/// anchored at the corner (−R, …, −R) of the circumscribing cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPartition {
    pub radius: f64,
    pub cell_size: f64,
    /// Occupied cells keyed by cube index, with member point indices.
    pub cells: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl CellPartition {
    pub fn new(set: &FrequencySet, cell_size: f64) -> Result<Self> {
        let radius = set.radius();
        if !(cell_size > 0.0) {
            return Err(Error::invalid("cell size must be positive"));
        }
        let per_axis = libm::ceil(2.0 * radius / cell_size).max(1.0) as i64;
        let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, p) in set.iter().enumerate() {
            let key = p
                .iter()
                .map(|c| (libm::floor((*c as f64 + radius) / cell_size) as i64).clamp(0, per_axis - 1))
                .collect();
            cells.entry(key).or_default().push(i);
        }
        Ok(CellPartition { radius, cell_size, cells })
    }

    pub fn cells_per_axis(&self) -> i64 {
        libm::ceil(2.0 * self.radius / self.cell_size).max(1.0) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanSquare {
    pub sum_sq: u64,
    pub cells_hit: usize,
}

/// Σ over cells of (points in cell)².
pub fn cell_mean_square(set: &FrequencySet, cell_size: f64) -> Result<MeanSquare> {
    let radius = set.radius();
    if !(cell_size > 0.0 && cell_size <= 2.0 * radius) {
        return Err(Error::invalid("cell size must lie in (0, 2R]"));
    }
    let part = CellPartition::new(set, cell_size)?;
    Ok(MeanSquare {
        sum_sq: part.cells.values().map(|v| (v.len() * v.len()) as u64).sum(),
        cells_hit: part.cells.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    pub threshold: f64,
    /// Components as sorted point indices, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
}

impl ClusterPartition {
    pub fn largest(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Connected components of the graph joining points at distance < threshold.
pub fn cluster_components(set: &FrequencySet, threshold: f64) -> Result<ClusterPartition> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold must be non-negative"));
    }
    let n = set.len();
    let mut dsu = DisjointSet::new(n);
    let t_sq = threshold * threshold;
    for i in 0..n {
        for j in i + 1..n {
            if (dist_sq(set.point(i), set.point(j)) as f64) < t_sq {
                dsu.union(i, j);
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        by_root.entry(dsu.find(i)).or_default().push(i);
    }
    let mut components: Vec<Vec<usize>> = by_root.into_values().collect();
    components.sort_by_key(|c| c[0]);
    Ok(ClusterPartition { threshold, components })
}

/// Dimension of the affine span, by fraction-free elimination over i128.
pub fn affine_rank(points: &[&[i64]]) -> Result<usize> {
    let Some(base) = points.first() else {
        return Err(Error::invalid("affine rank of an empty set"));
    };
    let cols = base.len();
    let mut rows: Vec<Vec<i128>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base.iter()).map(|(a, b)| (*a - *b) as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in rank + 1..rows.len() {
            for c in col + 1..cols {
                rows[r][c] = (rows[rank][col] * rows[r][c] - rows[r][col] * rows[rank][c]) / prev;
            }
            rows[r][col] = 0;
        }
        prev = rows[rank][col];
        rank += 1;
    }
    Ok(rank)
}

/// Distance from the origin to the convex hull of at most four points.
fn hull_distance(points: &[[f64; 3]]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let sub: Vec<[f64; 3]> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| points[i]).collect();
        if let Some(w) = affine_projection_weights(&sub) {
            if w.iter().all(|x| *x >= -1e-12) {
                let mut y = [0.0; 3];
                for (wi, p) in w.iter().zip(&sub) {
                    for k in 0..3 {
                        y[k] += wi * p[k];
                    }
                }
                best = best.min(libm::sqrt(y.iter().map(|c| c * c).sum()));
            }
        }
    }
    best
}

/// Barycentric weights of the point of aff(points) nearest the origin.
fn affine_projection_weights(points: &[[f64; 3]]) -> Option<Vec<f64>> {
    let m = points.len();
    if m == 1 {
        return Some(alloc::vec![1.0]);
    }
    // Minimise |p0 + Σ t_i (p_i − p0)|², normal equations in t.
    let p0 = points[0];
    let dirs: Vec<[f64; 3]> = points[1..].iter().map(|p| [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]]).collect();
    let k = dirs.len();
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| dot(&dirs[i], &dirs[j])).collect();
            row.push(-dot(&dirs[i], &p0));
            row
        })
        .collect();
    let scale = a.iter().flat_map(|r| r[..k].iter()).fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, p) in row[col..=k].iter_mut().zip(&pivot_row[col..=k]) {
                    *x -= f * p;
                }
            }
        }
    }
    let t: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let mut w = alloc::vec![1.0 - t.iter().sum::<f64>()];
    w.extend(t);
    Some(w)
}

/// Whether some cap of size `r` on the sphere |x|² = e contains every point.
pub fn fits_in_cap(points: &[[f64; 3]], e: u64, r: f64) -> bool {
    let radius = libm::sqrt(e as f64);
    let threshold = (2.0 * e as f64 - r * r) / (2.0 * radius);
    if threshold <= 0.0 {
        return true;
    }
    hull_distance(points) >= threshold
}

/// Quadruples of affinely independent points (d = 3) sharing a cap of size `r`.
pub fn small_cap_rank_violations(set: &FrequencySet, r: f64, budget: &Budget) -> Result<Vec<[usize; 4]>> {
    if set.dim() != 3 {
        return Err(Error::invalid("coplanarity scan is defined for d = 3"));
    }
    let n = set.len();
    let reach = 4.0 * r * r;
    let close = |i: usize, j: usize| (dist_sq(set.point(i), set.point(j)) as f64) <= reach;
    let mut out = Vec::new();
    for i in 0..n {
        let nb: Vec<usize> = (i + 1..n).filter(|&j| close(i, j)).collect();
        budget.charge((nb.len() * nb.len() * nb.len()) as u64 + 1)?;
        for (x, &j) in nb.iter().enumerate() {
            for (y, &k) in nb.iter().enumerate().skip(x + 1) {
                if !close(j, k) {
                    continue;
                }
                for &l in nb.iter().skip(y + 1) {
                    if !close(j, l) || !close(k, l) {
                        continue;
                    }
                    let quad = [i, j, k, l];
                    let pts: Vec<&[i64]> = quad.iter().map(|&q| set.point(q)).collect();
                    if affine_rank(&pts)? < 3 {
                        continue;
                    }
                    let real: Vec<[f64; 3]> =
                        pts.iter().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();
                    if fits_in_cap(&real, set.energy(), r) {
                        out.push(quad);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Largest number of points on an arc of length `arc` of the circle
/// |x|² = e (d = 2), counting by angular order.
pub fn max_points_on_arc(set: &FrequencySet, arc: f64) -> Result<usize> {
    if set.dim() != 2 {
        return Err(Error::invalid("arc counting is defined for d = 2"));
    }
    let n = set.len();
    if n == 0 {
        return Ok(0);
    }
    let radius = set.radius();
    let mut angles: Vec<f64> = set.iter().map(|p| libm::atan2(p[1] as f64, p[0] as f64)).collect();
    angles.sort_by(f64::total_cmp);
    let span = arc / radius;
    let mut best = 1;
    for i in 0..n {
        let mut count = 1;
        for step in 1..n {
            let j = (i + step) % n;
            let mut delta = angles[j] - angles[i];
            if delta < 0.0 {
                delta += 2.0 * core::f64::consts::PI;
            }
            if delta <= span {
                count += 1;
            } else {
                break;
            }
        }
        best = best.max(count);
    }
    Ok(best)
}
