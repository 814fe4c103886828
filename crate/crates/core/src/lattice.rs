//! Integer points on spheres: enumeration, arithmetic classification,
//! separation statistics and the ideal-separated construction.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::arith::{is_square, isqrt};
use crate::budget::Budget;
use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

/// An integer vector in Z^d.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntPoint(pub Vec<i64>);

impl IntPoint {
    pub fn new(coords: &[i64]) -> Self {
        IntPoint(coords.to_vec())
    }

    pub fn norm_sq(&self) -> u64 {
        norm_sq(&self.0)
    }

    pub fn is_primitive(&self) -> bool {
        self.0.iter().fold(0u64, |g, c| crate::arith::gcd(g, c.unsigned_abs())) == 1
    }
}

impl Deref for IntPoint {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

pub fn norm_sq(p: &[i64]) -> u64 {
    p.iter().map(|c| (c * c) as u64).sum()
}

pub fn dist_sq(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) * (x - y)) as u64).sum()
}

fn check_dim(d: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&d) {
        return Err(Error::invalid(alloc::format!("dimension {d} outside {MIN_DIM}..={MAX_DIM}")));
    }
    Ok(())
}

/// All integer points with squared norm `e`, stored flat in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySet {
    d: usize,
    e: u64,
    coords: Vec<i64>,
}

impl FrequencySet {
    /// Build from an explicit list, checking the sphere condition and
    /// distinctness. Points are sorted lexicographically.
    pub fn from_points(d: usize, e: u64, points: &[IntPoint]) -> Result<Self> {
        check_dim(d)?;
        let mut pts: Vec<&IntPoint> = points.iter().collect();
        for p in &pts {
            if p.len() != d {
                return Err(Error::invalid("point dimension does not match set dimension"));
            }
            if p.norm_sq() != e {
                return Err(Error::invalid(alloc::format!("point {:?} is not on the sphere of norm {e}", p.0)));
            }
        }
        pts.sort();
        if pts.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate point"));
        }
        let coords = pts.iter().flat_map(|p| p.0.iter().copied()).collect();
        Ok(FrequencySet { d, e, coords })
    }

    pub fn empty(d: usize, e: u64) -> Self {
        FrequencySet { d, e, coords: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn energy(&self) -> u64 {
        self.e
    }

    /// Sphere radius √E.
    pub fn radius(&self) -> f64 {
        libm::sqrt(self.e as f64)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, i64> {
        self.coords.chunks_exact(self.d)
    }

    pub fn to_points(&self) -> Vec<IntPoint> {
        self.iter().map(IntPoint::new).collect()
    }

    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(p) {
                core::cmp::Ordering::Less => lo = mid + 1,
                core::cmp::Ordering::Greater => hi = mid,
                core::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.index_of(p).is_some()
    }

    /// Subset selected by index, keeping lexicographic order.
    pub fn subset(&self, indices: &[usize]) -> FrequencySet {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let coords = idx.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        FrequencySet { d: self.d, e: self.e, coords }
    }

    /// One representative of each ±pair: the one whose first nonzero
    /// coordinate is positive.
    pub fn half(&self) -> FrequencySet {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.point(i).iter().find(|c| **c != 0).is_some_and(|c| *c > 0))
            .collect();
        self.subset(&idx)
    }
}

fn descend(d: usize, depth: usize, rem: u64, prefix: &mut [i64; MAX_DIM], out: &mut Vec<i64>, budget: &Budget) -> Result<()> {
    if depth + 1 == d {
        if let Some(s) = is_square(rem) {
            let s = s as i64;
            prefix[depth] = -s;
            out.extend_from_slice(&prefix[..d]);
            if s != 0 {
                prefix[depth] = s;
                out.extend_from_slice(&prefix[..d]);
            }
        }
        return Ok(());
    }
    let m = isqrt(rem) as i64;
    budget.charge(2 * m as u64 + 1)?;
    for x in -m..=m {
        prefix[depth] = x;
        descend(d, depth + 1, rem - (x * x) as u64, prefix, out, budget)?;
    }
    Ok(())
}

/// Every x ∈ Z^d with |x|² = e, in lexicographic order.
pub fn enumerate_sphere(d: usize, e: u64, budget: &Budget) -> Result<FrequencySet> {
    check_dim(d)?;
    let mut prefix = [0i64; MAX_DIM];
    let mut coords = Vec::new();
    descend(d, 0, e, &mut prefix, &mut coords, budget)?;
    Ok(FrequencySet { d, e, coords })
}

/// Cross-check enumeration: scan the whole box over the first d−1
/// coordinates and solve for the last one.
pub fn enumerate_sphere_naive(d: usize, e: u64, budget: &Budget) -> Result<FrequencySet> {
    check_dim(d)?;
    let m = isqrt(e) as i64;
    let side = (2 * m + 1) as u64;
    budget.charge(side.saturating_pow(d as u32 - 1))?;
    let mut pts = Vec::new();
    let mut x = alloc::vec![-m; d - 1];
    'scan: loop {
        let s: u64 = norm_sq(&x);
        if s <= e {
            if let Some(t) = is_square(e - s) {
                let t = t as i64;
                let mut p = x.clone();
                p.push(-t);
                pts.push(IntPoint(p.clone()));
                if t != 0 {
                    *p.last_mut().unwrap() = t;
                    pts.push(IntPoint(p));
                }
            }
        }
        for i in (0..d - 1).rev() {
            if x[i] < m {
                x[i] += 1;
                continue 'scan;
            }
            x[i] = -m;
        }
        break;
    }
    FrequencySet::from_points(d, e, &pts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithmeticClass {
    pub rho: usize,
    pub has_points: bool,
    pub has_primitive: bool,
    /// Lexicographically last primitive point, if any.
    pub primitive_witness: Option<IntPoint>,
}

pub fn classify_arithmetic(d: usize, e: u64, budget: &Budget) -> Result<ArithmeticClass> {
    let set = enumerate_sphere(d, e, budget)?;
    let primitive_witness = set.iter().rev().map(IntPoint::new).find(IntPoint::is_primitive);
    Ok(ArithmeticClass {
        rho: set.len(),
        has_points: !set.is_empty(),
        has_primitive: primitive_witness.is_some(),
        primitive_witness,
    })
}

/// Number of points n with ⟨normal, n⟩ = offset.
pub fn plane_slice_count(set: &FrequencySet, normal: &[i64], offset: i64) -> Result<usize> {
    if normal.len() != set.dim() {
        return Err(Error::invalid("normal dimension does not match set dimension"));
    }
    if normal.iter().all(|c| *c == 0) {
        return Err(Error::invalid("plane normal is zero"));
    }
    Ok(set
        .iter()
        .filter(|p| p.iter().zip(normal).map(|(a, b)| a * b).sum::<i64>() == offset)
        .count())
}

/// Smallest pairwise squared distance, or None for fewer than two points.
pub fn min_pairwise_dist_sq(set: &FrequencySet) -> Option<u64> {
    let n = set.len();
    let mut best: Option<u64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let s = dist_sq(set.point(i), set.point(j));
            best = Some(best.map_or(s, |b| b.min(s)));
        }
    }
    best
}

/// Whether a minimum distance marks `e` as exceptional at exponent `eps`.
pub fn is_exceptional(e: u64, min_dist: f64, eps: f64) -> bool {
    min_dist <= libm::pow(libm::sqrt(e as f64), 1.0 - eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationScan {
    pub n: u64,
    pub eps: f64,
    /// Minimum pairwise distance for every E ≤ n with at least two points.
    pub per_e: BTreeMap<u64, f64>,
    pub exceptional: Vec<u64>,
}

impl SeparationScan {
    /// Size bound N^{1−eps/3} for the exceptional set.
    pub fn exceptional_bound(&self) -> f64 {
        libm::pow(self.n as f64, 1.0 - self.eps / 3.0)
    }
}

pub fn separation_scan(d: usize, n: u64, eps: f64, budget: &Budget) -> Result<SeparationScan> {
    if d != 2 {
        return Err(Error::invalid("separation scan is defined for d = 2"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps must lie in (0, 1)"));
    }
    budget.check(n)?;
    let mut per_e = BTreeMap::new();
    let mut exceptional = Vec::new();
    for e in 1..=n {
        let set = enumerate_sphere(2, e, budget)?;
        budget.charge((set.len() * set.len()) as u64)?;
        if let Some(s) = min_pairwise_dist_sq(&set) {
            let dist = libm::sqrt(s as f64);
            per_e.insert(e, dist);
            if is_exceptional(e, dist, eps) {
                exceptional.push(e);
            }
        }
    }
    Ok(SeparationScan { n, eps, per_e, exceptional })
}

/// Well-separated real points on a high-dimensional sphere, all inside a
/// small cap around R·e_d.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSet {
    pub d: usize,
    pub radius: f64,
    pub step: i64,
    /// Integer grid coordinates z of each point, flat with stride d−1.
    pub grid: Vec<i64>,
    /// Point coordinates, flat with stride d.
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCheck {
    /// Largest |‖x‖ − R| measured in units in the last place of R.
    pub max_norm_ulps: f64,
    /// Every grid vector is distinct and every leading coordinate is exactly step·z.
    pub grid_exact: bool,
    /// Lower bound on pairwise distance implied by the grid structure.
    pub min_distance_bound: f64,
    /// Largest distance from R·e_d.
    pub max_cap_distance: f64,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn grid_point(&self, i: usize) -> &[i64] {
        &self.grid[i * (self.d - 1)..(i + 1) * (self.d - 1)]
    }

    /// Cap radius R^{2/3}/100 within which all points must lie.
    pub fn cap_radius(&self) -> f64 {
        libm::pow(self.radius, 2.0 / 3.0) / 100.0
    }

    /// Checks all three invariants over the full set.
    ///
    /// Two distinct points closer than `step` would need every leading
    /// coordinate difference below `step`, which forces equal grid vectors;
    /// so exact leading coordinates plus distinct grid vectors prove the
    /// separation bound without a quadratic scan.
    pub fn verify(&self) -> SeparationCheck {
        let ulp = ulp(self.radius);
        let k = self.step as f64;
        let mut max_norm_ulps: f64 = 0.0;
        let mut max_cap_distance: f64 = 0.0;
        let mut grid_exact = true;
        for i in 0..self.len() {
            let x = self.point(i);
            let z = self.grid_point(i);
            let norm = libm::sqrt(x.iter().map(|c| c * c).sum::<f64>());
            max_norm_ulps = max_norm_ulps.max((norm - self.radius).abs() / ulp);
            let lead: f64 = x[..self.d - 1].iter().map(|c| c * c).sum();
            let h = self.radius - x[self.d - 1];
            max_cap_distance = max_cap_distance.max(libm::sqrt(lead + h * h));
            if x[..self.d - 1].iter().zip(z).any(|(c, zi)| *c != k * *zi as f64) {
                grid_exact = false;
            }
            if i > 0 && self.grid_point(i - 1) >= z {
                grid_exact = false;
            }
        }
        SeparationCheck {
            max_norm_ulps,
            grid_exact,
            min_distance_bound: if grid_exact { k } else { 0.0 },
            max_cap_distance,
        }
    }

    /// Exhaustive minimum pairwise distance; quadratic, for small sets.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let s: f64 = self.point(i).iter().zip(self.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                best = Some(best.map_or(s, |b: f64| b.min(s)));
            }
        }
        best.map(libm::sqrt)
    }
}

/// Spacing between `x` and the next larger double.
pub fn ulp(x: f64) -> f64 {
    let x = x.abs();
    f64::from_bits(x.to_bits() + 1) - x
}

pub fn build_ideal_separated_set(d: usize, radius: f64, budget: &Budget) -> Result<SeparatedSet> {
    if !(MAX_DIM..=64).contains(&d) {
        return Err(Error::invalid("ideal separated set needs 8 <= d <= 64"));
    }
    if !(radius >= 1.0) {
        return Err(Error::invalid("radius must be at least 1"));
    }
    let step = libm::floor(libm::pow(radius, 1.0 / (d as f64 - 1.0))) as i64;
    let k = step as f64;
    let zmax = libm::pow(radius, 2.0 / 3.0) / (100.0 * k);
    if zmax <= 1.0 {
        return Err(Error::degenerate(alloc::format!(
            "grid radius {zmax} admits only z = 0 at R = {radius}, d = {d}"
        )));
    }
    let m = libm::ceil(zmax) as i64 - 1;
    let dz = d - 1;
    let side = (2 * m + 1) as u64;
    budget.charge(side.saturating_pow(dz as u32))?;
    let zmax_sq = zmax * zmax;
    let mut grid = Vec::new();
    let mut coords = Vec::new();
    let mut z = alloc::vec![-m; dz];
    'scan: loop {
        let s = norm_sq(&z);
        if (s as f64) < zmax_sq {
            grid.extend_from_slice(&z);
            coords.extend(z.iter().map(|c| k * *c as f64));
            coords.push(libm::sqrt(radius * radius - k * k * s as f64));
        }
        for i in (0..dz).rev() {
            if z[i] < m {
                z[i] += 1;
                continue 'scan;
            }
            z[i] = -m;
        }
        break;
    }
    Ok(SeparatedSet { d, radius, step, grid, coords })
}
