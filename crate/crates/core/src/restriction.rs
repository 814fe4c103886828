//! Toral eigenfunctions and their L² and L⁴ mass on curves and surface
//! patches.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::budget::Budget;
use crate::caps::{cluster_components, ClusterPartition};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_sphere, separation_scan, FrequencySet, IntPoint};
use crate::report::{ExperimentReport, Value};
use crate::rng::{derive_seed, stream};
use crate::stats::{log_log_fit, sum_complex};
use crate::surface::{adaptive_square, sigma_hat_direct, QuadratureSettings, SurfacePatch};

/// e^{2πit}, with t reduced to [−1/2, 1/2] first so that integer t is exact.
pub fn unit_phase(t: f64) -> Complex64 {
    let r = t - libm::round(t);
    let (s, c) = libm::sincos(2.0 * PI * r);
    Complex64::new(c, s)
}

/// Σ aₙ e^{2πi n·x} over a frequency set, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    support: FrequencySet,
    coeffs: Vec<Complex64>,
}

impl Eigenfunction {
    pub fn new(support: FrequencySet, coeffs: Vec<Complex64>) -> Result<Self> {
        if support.len() != coeffs.len() {
            return Err(Error::invalid("one coefficient per frequency is required"));
        }
        Ok(Eigenfunction { support, coeffs })
    }

    /// Build from unordered (frequency, coefficient) pairs.
    pub fn from_terms(d: usize, e: u64, terms: &[(&[i64], Complex64)]) -> Result<Self> {
        let pts: Vec<IntPoint> = terms.iter().map(|(p, _)| IntPoint::new(p)).collect();
        let support = FrequencySet::from_points(d, e, &pts)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); support.len()];
        for (p, a) in terms {
            let i = support.index_of(p).expect("point was inserted");
            coeffs[i] = *a;
        }
        Eigenfunction::new(support, coeffs)
    }

    pub fn uniform(support: FrequencySet) -> Self {
        let a = Complex64::new(1.0 / libm::sqrt(support.len().max(1) as f64), 0.0);
        let coeffs = vec![a; support.len()];
        Eigenfunction { support, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn energy(&self) -> u64 {
        self.support.energy()
    }

    pub fn lambda(&self) -> f64 {
        self.support.radius()
    }

    pub fn support(&self) -> &FrequencySet {
        &self.support
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Σ|aₙ|², the squared L² norm on the torus.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).sum()
    }

    /// The function x ↦ φ(x − shift).
    pub fn translated(&self, shift: &[f64]) -> Self {
        let coeffs = self
            .support
            .iter()
            .zip(&self.coeffs)
            .map(|(n, a)| a * unit_phase(-n.iter().zip(shift).map(|(&k, &y)| k as f64 * y).sum::<f64>()))
            .collect();
        Eigenfunction { support: self.support.clone(), coeffs }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Eigenfunction { support: self.support.clone(), coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn restricted(&self, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        Eigenfunction { support: self.support.subset(&idx), coeffs: idx.iter().map(|&i| self.coeffs[i]).collect() }
    }

    /// Whether a₋ₙ = conj(aₙ) for every n, so the function is real.
    pub fn is_real(&self, tol: f64) -> bool {
        self.support.iter().zip(&self.coeffs).all(|(p, a)| {
            let neg: Vec<i64> = p.iter().map(|c| -c).collect();
            match self.support.index_of(&neg) {
                Some(j) => (self.coeffs[j] - a.conj()).norm() <= tol,
                None => a.norm() <= tol,
            }
        })
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let terms = self.support.iter().zip(&self.coeffs).map(|(n, a)| {
            let t: f64 = n.iter().zip(x).map(|(&k, &y)| k as f64 * y).sum();
            a * unit_phase(t)
        });
        sum_complex(terms, self.coeffs.len())
    }

    /// Values at the grid points ((k₁+shift)/n, …, (k_d+shift)/n), row-major
    /// with the first axis slowest, by partial sums along one axis at a time.
    pub fn eval_grid(&self, n: usize, shift: f64, budget: &Budget) -> Result<Vec<Complex64>> {
        let d = self.dim();
        if n == 0 {
            return Err(Error::invalid("grid size must be positive"));
        }
        let total = (n as u64).checked_pow(d as u32).ok_or_else(|| Error::invalid("grid too large"))?;
        budget.check(total)?;
        let lam = libm::ceil(self.lambda()) as i64;
        let width = (2 * lam + 1) as usize;
        let mut table = vec![Complex64::new(0.0, 0.0); width * n];
        for k in -lam..=lam {
            for j in 0..n {
                let t = k as f64 * (j as f64 + shift) / n as f64;
                table[(k + lam) as usize * n + j] = unit_phase(t);
            }
        }
        let row = |k: i64| &table[(k + lam) as usize * n..(k + lam + 1) as usize * n];

        let mut groups: Vec<(Vec<i64>, Vec<Complex64>)> = Vec::new();
        let mut work = 0u64;
        for (p, a) in self.support.iter().zip(&self.coeffs) {
            let prefix = &p[..d - 1];
            if groups.last().map(|g| g.0.as_slice() != prefix).unwrap_or(true) {
                groups.push((prefix.to_vec(), vec![Complex64::new(0.0, 0.0); n]));
            }
            let acc = &mut groups.last_mut().expect("group exists").1;
            for (v, e) in acc.iter_mut().zip(row(p[d - 1])) {
                *v += a * e;
            }
            work += n as u64;
        }
        budget.charge(work)?;
        let mut block = n;
        for axis in (0..d - 1).rev() {
            let cost = groups.len() as u64 * (block * n) as u64;
            budget.charge(cost)?;
            let mut next: Vec<(Vec<i64>, Vec<Complex64>)> = Vec::new();
            for (prefix, vals) in groups {
                let head = &prefix[..axis];
                if next.last().map(|g| g.0.as_slice() != head).unwrap_or(true) {
                    next.push((head.to_vec(), vec![Complex64::new(0.0, 0.0); block * n]));
                }
                let acc = &mut next.last_mut().expect("group exists").1;
                for (j, e) in row(prefix[axis]).iter().enumerate() {
                    for (v, w) in acc[j * block..(j + 1) * block].iter_mut().zip(&vals) {
                        *v += e * w;
                    }
                }
            }
            groups = next;
            block *= n;
        }
        Ok(match groups.pop() {
            Some((_, v)) => v,
            None => vec![Complex64::new(0.0, 0.0); total as usize],
        })
    }
}

pub fn eval_eigenfunction(f: &Eigenfunction, x: &[f64]) -> Complex64 {
    f.eval(x)
}

/// A surface patch placed in T³ by x ↦ origin + rotation·(x₁, x₂, φ(x)).
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPatch {
    pub patch: SurfacePatch,
    pub origin: [f64; 3],
    pub rotation: [[f64; 3]; 3],
}

impl PlacedPatch {
    pub fn point(&self, x: [f64; 2]) -> [f64; 3] {
        let v = [x[0], x[1], self.patch.eval_unchecked(x).phi];
        let mut p = self.origin;
        for (i, pi) in p.iter_mut().enumerate() {
            *pi += (0..3).map(|j| self.rotation[i][j] * v[j]).sum::<f64>();
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// c + ρ(cos 2πt, sin 2πt) in T².
    Circle { center: [f64; 2], radius: f64 },
    /// start + t·direction, t ∈ [0, 1), a closed geodesic in T².
    Geodesic { start: [f64; 2], direction: [i64; 2] },
    Patch(PlacedPatch),
}

/// A curve in T² or a weighted surface patch in T³ with its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    shape: Shape,
    normalized: bool,
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl CurveSpec {
    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("circle radius must be positive"));
        }
        Ok(CurveSpec { shape: Shape::Circle { center, radius }, normalized: true })
    }

    /// Radius 1/4 about the cell centre.
    pub fn standard_circle() -> Self {
        CurveSpec::circle([0.5, 0.5], 0.25).expect("valid circle")
    }

    pub fn geodesic(start: [f64; 2], direction: [i64; 2]) -> Result<Self> {
        if direction == [0, 0] {
            return Err(Error::invalid("geodesic direction must be nonzero"));
        }
        Ok(CurveSpec { shape: Shape::Geodesic { start, direction }, normalized: true })
    }

    /// The closed geodesic {x₁ = 0}.
    pub fn flat_geodesic() -> Self {
        CurveSpec::geodesic([0.0, 0.0], [0, 1]).expect("valid geodesic")
    }

    pub fn patch(patch: SurfacePatch, origin: [f64; 3], rotation: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(Error::invalid("rotation must be orthogonal"));
                }
            }
        }
        Ok(CurveSpec { shape: Shape::Patch(PlacedPatch { patch, origin, rotation }), normalized: true })
    }

    /// Sphere cap at the cell centre.
    pub fn standard_elliptic() -> Self {
        CurveSpec::patch(SurfacePatch::sphere_cap(), [0.5; 3], IDENTITY).expect("valid placement")
    }

    /// Saddle at the cell centre.
    pub fn standard_hyperbolic() -> Self {
        CurveSpec::patch(SurfacePatch::tilted_saddle(), [0.5; 3], IDENTITY).expect("valid placement")
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Patch(_) => 3,
            _ => 2,
        }
    }

    /// Translate so that the base point (t = 0, or the patch origin) is 0.
    pub fn through_origin(&self) -> Self {
        let shape = match &self.shape {
            Shape::Circle { radius, .. } => Shape::Circle { center: [-radius, 0.0], radius: *radius },
            Shape::Geodesic { direction, .. } => Shape::Geodesic { start: [0.0, 0.0], direction: *direction },
            Shape::Patch(p) => Shape::Patch(PlacedPatch { origin: [0.0; 3], ..p.clone() }),
        };
        CurveSpec { shape, normalized: self.normalized }
    }

    pub fn translated(&self, by: &[f64]) -> Self {
        let shape = match &self.shape {
            Shape::Circle { center, radius } => Shape::Circle { center: [center[0] + by[0], center[1] + by[1]], radius: *radius },
            Shape::Geodesic { start, direction } => Shape::Geodesic { start: [start[0] + by[0], start[1] + by[1]], direction: *direction },
            Shape::Patch(p) => {
                let o = p.origin;
                Shape::Patch(PlacedPatch { origin: [o[0] + by[0], o[1] + by[1], o[2] + by[2]], ..p.clone() })
            }
        };
        CurveSpec { shape, normalized: self.normalized }
    }

    /// Curve point at parameter t ∈ [0, 1).
    pub fn curve_point(&self, t: f64) -> Option<[f64; 2]> {
        match &self.shape {
            Shape::Circle { center, radius } => {
                let (s, c) = libm::sincos(2.0 * PI * t);
                Some([center[0] + radius * c, center[1] + radius * s])
            }
            Shape::Geodesic { start, direction } => {
                Some([start[0] + t * direction[0] as f64, start[1] + t * direction[1] as f64])
            }
            Shape::Patch(_) => None,
        }
    }

    /// Length of a curve, or the weight mass ∫ω of a patch.
    pub fn raw_mass(&self) -> f64 {
        match &self.shape {
            Shape::Circle { radius, .. } => 2.0 * PI * radius,
            Shape::Geodesic { direction, .. } => libm::hypot(direction[0] as f64, direction[1] as f64),
            Shape::Patch(p) => p.patch.bump_mass(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        if self.normalized {
            1.0
        } else {
            self.raw_mass()
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::invalid(alloc::format!("a {}-dimensional set cannot be restricted to this shape", d)));
        }
        Ok(())
    }
}

const NORM_TOL: f64 = 1e-8;

/// Mean of a 1-periodic function by trapezoid sums, doubled until stable.
fn periodic_mean<F>(n0: usize, floor: f64, budget: &Budget, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut n = n0.max(16);
    budget.charge(n as u64)?;
    let mut sum = crate::stats::ComplexKahan::default();
    for j in 0..n {
        sum.add(f(j as f64 / n as f64));
    }
    let mut total = sum.value();
    let mut value = total / n as f64;
    loop {
        budget.charge(n as u64)?;
        let mut odd = crate::stats::ComplexKahan::default();
        for j in 0..n {
            odd.add(f((2 * j + 1) as f64 / (2 * n) as f64));
        }
        total += odd.value();
        n *= 2;
        let next = total / n as f64;
        if (next - value).norm() <= NORM_TOL * next.norm().max(floor) {
            return Ok(next);
        }
        value = next;
    }
}

/// σ̂(k) = ∫ e^{2πi k·x} dσ(x).
pub fn sigma_hat(sigma: &CurveSpec, k: &[i64], budget: &Budget) -> Result<Complex64> {
    sigma.check_dim(k.len())?;
    let scale = sigma.total_mass();
    match &sigma.shape {
        Shape::Geodesic { start, direction } => {
            let m = k[0] * direction[0] + k[1] * direction[1];
            if m != 0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(unit_phase(k[0] as f64 * start[0] + k[1] as f64 * start[1]) * scale)
        }
        Shape::Circle { radius, .. } => {
            let freq = libm::hypot(k[0] as f64, k[1] as f64) * radius;
            let n0 = libm::ceil(8.0 * freq * 2.0 * PI) as usize + 16;
            let mean = periodic_mean(n0, 1e-12, budget, |t| {
                let p = sigma.curve_point(t).expect("curve");
                unit_phase(k[0] as f64 * p[0] + k[1] as f64 * p[1])
            })?;
            Ok(mean * scale)
        }
        Shape::Patch(p) => {
            let r = p.rotation;
            let xi: [f64; 3] = core::array::from_fn(|j| 2.0 * PI * (0..3).map(|i| r[i][j] * k[i] as f64).sum::<f64>());
            let base: f64 = (0..3).map(|i| k[i] as f64 * p.origin[i]).sum();
            let value = sigma_hat_direct(&p.patch, xi, QuadratureSettings::default(), budget)?;
            let mass = if sigma.normalized { p.patch.bump_mass() } else { 1.0 };
            Ok(unit_phase(base) * value / mass)
        }
    }
}

/// ∫_Σ |φ|^p dσ for p ∈ {2, 4}.
pub fn restriction_norm(f: &Eigenfunction, sigma: &CurveSpec, p: u32, budget: &Budget) -> Result<f64> {
    if p != 2 && p != 4 {
        return Err(Error::invalid("p must be 2 or 4"));
    }
    sigma.check_dim(f.dim())?;
    if f.is_empty() {
        return Ok(0.0);
    }
    let lam = f.lambda();
    let pf = p as f64;
    let power = |z: Complex64| {
        let m = z.norm_sqr();
        if p == 2 {
            m
        } else {
            m * m
        }
    };
    let l1p = libm::pow(f.coeff_l1(), pf);
    match &sigma.shape {
        Shape::Patch(placed) => {
            let patch = &placed.patch;
            let rho = patch.bump_width();
            let stretch = libm::sqrt(1.0 + patch.max_slope() * patch.max_slope());
            let oscillations = pf * lam * stretch * 2.0 * rho;
            let n0 = libm::ceil(8.0 * oscillations).max(16.0) as usize;
            let mass = patch.bump_mass();
            let floor = 1e-12 * l1p * mass;
            budget.check((n0 * n0 * f.len()) as u64)?;
            // The imaginary channel carries ∫ω at the same resolution.
            let value = adaptive_square(rho, n0, NORM_TOL, floor, budget, |x1, x2, _, _, _| {
                let w = patch.bump([x1, x2]);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(w * power(f.eval(&placed.point([x1, x2]))), w)
            })?;
            Ok(if sigma.normalized { value.re / value.im } else { value.re })
        }
        _ => {
            let length = sigma.raw_mass();
            let n0 = libm::ceil(8.0 * pf * lam * length) as usize;
            budget.check((n0 * f.len()) as u64)?;
            let mean = periodic_mean(n0, 1e-12 * l1p, budget, |t| {
                let x = sigma.curve_point(t).expect("curve");
                Complex64::new(power(f.eval(&x)), 0.0)
            })?;
            Ok(mean.re * if sigma.normalized { 1.0 } else { length })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNorm {
    /// Σ over clusters of ∫|φ restricted to the cluster|² dσ.
    pub diagonal: f64,
    /// Σ |aₘ||aₙ||σ̂(m−n)| over pairs in distinct clusters.
    pub offdiagonal_bound: f64,
    /// Σ Re(aₘ conj(aₙ) σ̂(m−n)) over pairs in distinct clusters.
    pub offdiagonal: f64,
    pub clusters: ClusterPartition,
    /// Indices of clusters with more than two points.
    pub oversized: Vec<usize>,
}

/// Cluster threshold 0.5·λ^{1/3} for circle arcs.
pub fn cluster_threshold(e: u64) -> f64 {
    0.5 * libm::cbrt(libm::sqrt(e as f64))
}

/// Split ∫|φ|²dσ over a curved curve into cluster-diagonal and cross terms.
pub fn cluster_norm_d2(f: &Eigenfunction, sigma: &CurveSpec, budget: &Budget) -> Result<ClusterNorm> {
    if f.dim() != 2 {
        return Err(Error::invalid("cluster decomposition needs d = 2"));
    }
    if !matches!(sigma.shape, Shape::Circle { .. }) {
        return Err(Error::invalid("cluster decomposition needs a curve of nonvanishing curvature"));
    }
    let clusters = cluster_components(f.support(), cluster_threshold(f.energy()))?;
    let oversized = clusters.components.iter().enumerate().filter(|(_, c)| c.len() > 2).map(|(i, _)| i).collect();
    let mut diagonal = 0.0;
    for comp in &clusters.components {
        diagonal += restriction_norm(&f.restricted(comp), sigma, 2, budget)?;
    }
    let mut label = vec![0usize; f.len()];
    for (c, comp) in clusters.components.iter().enumerate() {
        for &i in comp {
            label[i] = c;
        }
    }
    let mut cache: BTreeMap<[i64; 2], Complex64> = BTreeMap::new();
    let (mut bound, mut signed) = (0.0, 0.0);
    for i in 0..f.len() {
        for j in 0..f.len() {
            if label[i] == label[j] {
                continue;
            }
            let (m, n) = (f.support().point(i), f.support().point(j));
            let key = [m[0] - n[0], m[1] - n[1]];
            let s = match cache.get(&key) {
                Some(s) => *s,
                None => {
                    let s = sigma_hat(sigma, &key, budget)?;
                    cache.insert(key, s);
                    s
                }
            };
            let (a, b) = (f.coeffs()[i], f.coeffs()[j]);
            bound += a.norm() * b.norm() * s.norm();
            signed += (a * b.conj() * s).re;
        }
    }
    Ok(ClusterNorm { diagonal, offdiagonal_bound: bound, offdiagonal: signed, clusters, oversized })
}

/// Coefficient distributions for ratio sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// |aₙ| = |𝓔|^{−1/2} with independent uniform phases.
    UniformPhase,
    /// Uniform phases on the largest cluster, zero elsewhere.
    SingleCluster,
    /// Odd in the first coordinate, so the function vanishes on {x₁ = 0}.
    FlatCounterexample,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::UniformPhase => "uniform_phase",
            Sampler::SingleCluster => "single_cluster",
            Sampler::FlatCounterexample => "flat_counterexample",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform_phase" => Ok(Sampler::UniformPhase),
            "single_cluster" => Ok(Sampler::SingleCluster),
            "flat_counterexample" => Ok(Sampler::FlatCounterexample),
            _ => Err(Error::invalid(alloc::format!(
                "unknown sampler {s:?}; expected uniform_phase, single_cluster or flat_counterexample"
            ))),
        }
    }

    pub fn sample<R: Rng>(self, set: &FrequencySet, rng: &mut R) -> Result<Eigenfunction> {
        if set.is_empty() {
            return Err(Error::invalid("empty frequency set"));
        }
        let mut phase = || unit_phase(rng.random::<f64>());
        let coeffs = match self {
            Sampler::UniformPhase => {
                let a = 1.0 / libm::sqrt(set.len() as f64);
                (0..set.len()).map(|_| phase() * a).collect()
            }
            Sampler::SingleCluster => {
                let part = cluster_components(set, cluster_threshold(set.energy()))?;
                let largest = part.largest();
                let comp = part.components.iter().find(|c| c.len() == largest).expect("nonempty");
                let a = 1.0 / libm::sqrt(comp.len() as f64);
                let mut v = vec![Complex64::new(0.0, 0.0); set.len()];
                for &i in comp {
                    v[i] = phase() * a;
                }
                v
            }
            Sampler::FlatCounterexample => {
                let mut v = vec![Complex64::new(0.0, 0.0); set.len()];
                for (i, p) in set.iter().enumerate() {
                    if p[0] > 0 {
                        let a = phase();
                        let mut q = p.to_vec();
                        q[0] = -q[0];
                        let j = set.index_of(&q).expect("sphere is symmetric");
                        v[i] = a;
                        v[j] = -a;
                    }
                }
                let norm = libm::sqrt(v.iter().map(|a| a.norm_sqr()).sum::<f64>());
                if norm == 0.0 {
                    return Err(Error::degenerate("no frequency with nonzero first coordinate"));
                }
                v.iter().map(|a| a / norm).collect()
            }
        };
        Eigenfunction::new(set.clone(), coeffs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSweep {
    pub d: usize,
    pub e_min: u64,
    pub e_max: u64,
    pub sampler: Sampler,
    pub trials: usize,
    pub seed: u64,
    /// Exponent for the generic/exceptional split in d = 2.
    pub separation_eps: f64,
}

/// Ratios ∫_Σ|φ|²dσ / ‖φ‖₂² over every nonempty E in range and each trial.
pub fn ratio_sweep(cfg: &RatioSweep, sigma: &CurveSpec, budget: &Budget) -> Result<ExperimentReport> {
    if cfg.e_min > cfg.e_max {
        return Err(Error::invalid("empty energy range"));
    }
    sigma.check_dim(cfg.d)?;
    let mut report = ExperimentReport::new("ratio_sweep", &["E", "trial", "seed", "points", "class", "ratio"]);
    report.set_config("d", cfg.d);
    report.set_config("E_min", cfg.e_min);
    report.set_config("E_max", cfg.e_max);
    report.set_config("sampler", cfg.sampler.name());
    report.set_config("trials", cfg.trials);
    report.set_config("seed", cfg.seed);
    report.seeds.push(cfg.seed);
    if cfg.trials == 0 {
        return Ok(report);
    }
    let exceptional = if cfg.d == 2 {
        Some(separation_scan(2, cfg.e_max, cfg.separation_eps, budget)?.exceptional)
    } else {
        None
    };
    let mut ratios: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut per_e_max: Vec<(f64, f64)> = Vec::new();
    for e in cfg.e_min.max(1)..=cfg.e_max {
        let set = enumerate_sphere(cfg.d, e, budget)?;
        if set.is_empty() {
            continue;
        }
        let class = match &exceptional {
            Some(list) if list.binary_search(&e).is_ok() => "exceptional",
            Some(_) => "generic",
            None => "unclassified",
        };
        let mut best = 0.0f64;
        for trial in 0..cfg.trials {
            let seed = derive_seed(cfg.seed, &[e, trial as u64]);
            let f = cfg.sampler.sample(&set, &mut stream(seed))?;
            let ratio = restriction_norm(&f, sigma, 2, budget)? / f.l2_norm_sq();
            best = best.max(ratio);
            ratios.entry(class).or_default().push(ratio);
            report.push_row(vec![
                Value::from(e),
                Value::from(trial),
                Value::from(seed),
                Value::from(set.len()),
                Value::from(class),
                Value::from(ratio),
            ])?;
        }
        per_e_max.push((e as f64, best));
    }
    let all: Vec<f64> = ratios.values().flatten().copied().collect();
    if !all.is_empty() {
        report.set_summary("min_ratio", all.iter().copied().fold(f64::INFINITY, f64::min));
        report.set_summary("max_ratio", all.iter().copied().fold(0.0, f64::max));
    }
    for (class, v) in &ratios {
        report.set_summary(&alloc::format!("{class}_min_ratio"), v.iter().copied().fold(f64::INFINITY, f64::min));
        report.set_summary(&alloc::format!("{class}_max_ratio"), v.iter().copied().fold(0.0, f64::max));
        report.set_summary(&alloc::format!("{class}_samples"), v.len() as f64);
    }
    if let Some(list) = &exceptional {
        let in_range = list.iter().filter(|&&e| e >= cfg.e_min).count();
        report.set_summary("exceptional_energies", in_range as f64);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = per_e_max.iter().filter(|p| p.1 > 0.0).copied().unzip();
    if let Ok(fit) = log_log_fit(&xs, &ys) {
        report.set_summary("exponent_fit_max_ratio_slope", fit.slope);
        report.set_summary("exponent_fit_max_ratio_intercept", fit.intercept);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct L4Witness {
    pub f: Eigenfunction,
    pub l4: f64,
    /// |𝓔|²/E.
    pub bound: f64,
}

/// Uniform-coefficient eigenfunction whose L⁴ mass on Σ, translated through
/// the origin, grows like |𝓔|²/E.
pub fn l4_lower_bound_witness(sigma: &CurveSpec, e: u64, budget: &Budget) -> Result<L4Witness> {
    let set = enumerate_sphere(sigma.dim(), e, budget)?;
    if set.is_empty() {
        return Err(Error::invalid(alloc::format!("E = {e} has no lattice points")));
    }
    let bound = (set.len() * set.len()) as f64 / e as f64;
    let f = Eigenfunction::uniform(set);
    let l4 = restriction_norm(&f, &sigma.through_origin(), 4, budget)?;
    Ok(L4Witness { f, l4, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sine(k: i64) -> Eigenfunction {
        let a = c(0.0, -0.5);
        Eigenfunction::from_terms(2, (k * k) as u64, &[(&[k, 0], a), (&[-k, 0], -a)]).unwrap()
    }

    #[test]
    fn single_term_is_a_character() {
        let f = Eigenfunction::from_terms(2, 5, &[(&[1, 2], c(1.0, 0.0))]).unwrap();
        let x = [0.3, 0.7];
        let want = Complex64::from_polar(1.0, 2.0 * PI * (0.3 + 1.4));
        assert!((f.eval(&x) - want).norm() < 1e-14);
    }

    #[test]
    fn euler_sine() {
        let f = sine(1);
        for i in 0..50 {
            let x = [i as f64 / 37.0, 0.3];
            let z = f.eval(&x);
            assert!((z.re - libm::sin(2.0 * PI * x[0])).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn off_sphere_frequency_is_rejected() {
        assert!(Eigenfunction::from_terms(2, 5, &[(&[1, 1], c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn grid_parseval_and_direct_agreement() {
        let b = Budget::default();
        let set = enumerate_sphere(2, 65, &b).unwrap();
        let f = Sampler::UniformPhase.sample(&set, &mut stream(3)).unwrap();
        let n = 256;
        let grid = f.eval_grid(n, 0.0, &b).unwrap();
        let mean = grid.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.len() as f64;
        assert!((mean - f.l2_norm_sq()).abs() < 1e-10);
        for &(i, j) in &[(0usize, 0usize), (17, 200), (255, 3)] {
            let x = [i as f64 / n as f64, j as f64 / n as f64];
            assert!((grid[i * n + j] - f.eval(&x)).norm() < 1e-10);
        }
    }

    #[test]
    fn grid_in_three_dimensions() {
        let b = Budget::default();
        let set = enumerate_sphere(3, 11, &b).unwrap();
        let f = Sampler::UniformPhase.sample(&set, &mut stream(4)).unwrap();
        let n = 16;
        let grid = f.eval_grid(n, 0.5, &b).unwrap();
        let mean = grid.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.len() as f64;
        assert!((mean - f.l2_norm_sq()).abs() < 1e-10);
        let (i, j, k) = (3, 9, 14);
        let x = [(i as f64 + 0.5) / 16.0, (j as f64 + 0.5) / 16.0, (k as f64 + 0.5) / 16.0];
        assert!((grid[(i * n + j) * n + k] - f.eval(&x)).norm() < 1e-10);
    }

    #[test]
    fn flat_geodesic_kills_sines() {
        let b = Budget::default();
        let sigma = CurveSpec::flat_geodesic();
        for k in 1..=50 {
            assert!(restriction_norm(&sine(k), &sigma, 2, &b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_frequency_ratio_is_modulus() {
        let b = Budget::default();
        let f = Eigenfunction::from_terms(2, 25, &[(&[3, 4], c(0.6, -0.8) * 1.5)]).unwrap();
        for sigma in [CurveSpec::standard_circle(), CurveSpec::flat_geodesic()] {
            assert!((restriction_norm(&f, &sigma, 2, &b).unwrap() - 2.25).abs() < 1e-10);
        }
        let g = Eigenfunction::from_terms(3, 9, &[(&[2, 2, 1], c(1.0, 0.0))]).unwrap();
        assert!((restriction_norm(&g, &CurveSpec::standard_elliptic(), 2, &b).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circle_transform_matches_bessel() {
        let b = Budget::default();
        let sigma = CurveSpec::standard_circle();
        for k in [[0i64, 0], [1, 0], [3, 4], [-7, 2], [20, 11]] {
            let s = sigma_hat(&sigma, &k, &b).unwrap();
            let center = unit_phase(0.5 * (k[0] + k[1]) as f64);
            let want = center * libm::j0(2.0 * PI * 0.25 * libm::hypot(k[0] as f64, k[1] as f64));
            assert!((s - want).norm() < 1e-12, "{k:?}: {s} vs {want}");
        }
    }

    #[test]
    fn two_frequency_closed_form() {
        let b = Budget::default();
        let (am, an) = (c(0.3, 0.4), c(-0.7, 0.2));
        let f = Eigenfunction::from_terms(2, 25, &[(&[3, 4], am), (&[5, 0], an)]).unwrap();
        let sigma = CurveSpec::standard_circle();
        let s = sigma_hat(&sigma, &[-2, 4], &b).unwrap();
        let want = am.norm_sqr() + an.norm_sqr() + 2.0 * (am * an.conj() * s).re;
        assert!((restriction_norm(&f, &sigma, 2, &b).unwrap() - want).abs() < 1e-8);
        let g = Eigenfunction::from_terms(3, 9, &[(&[2, 2, 1], am), (&[1, 2, 2], an)]).unwrap();
        let patch = CurveSpec::standard_elliptic();
        let s = sigma_hat(&patch, &[1, 0, -1], &b).unwrap();
        let want = am.norm_sqr() + an.norm_sqr() + 2.0 * (am * an.conj() * s).re;
        assert!((restriction_norm(&g, &patch, 2, &b).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn cluster_decomposition_reconstructs_norm() {
        let b = Budget::default();
        let sigma = CurveSpec::standard_circle();
        let set = enumerate_sphere(2, 1105, &b).unwrap();
        let f = Sampler::UniformPhase.sample(&set, &mut stream(9)).unwrap();
        let cn = cluster_norm_d2(&f, &sigma, &b).unwrap();
        let total = restriction_norm(&f, &sigma, 2, &b).unwrap();
        assert!((cn.diagonal + cn.offdiagonal - total).abs() < 1e-8);
        assert!(cn.offdiagonal.abs() <= cn.offdiagonal_bound + 1e-12);
        assert!(cn.oversized.is_empty());
    }

    #[test]
    fn single_cluster_has_no_cross_terms() {
        let b = Budget::default();
        let sigma = CurveSpec::standard_circle();
        let f = Eigenfunction::from_terms(2, 25, &[(&[3, 4], c(1.0, 0.0))]).unwrap();
        let cn = cluster_norm_d2(&f, &sigma, &b).unwrap();
        assert_eq!(cn.offdiagonal_bound, 0.0);
        assert!((cn.diagonal - restriction_norm(&f, &sigma, 2, &b).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn two_point_clusters_keep_diagonal_mass() {
        let b = Budget::default();
        let sigma = CurveSpec::standard_circle();
        let mut checked = 0;
        for e in 500..3000u64 {
            let set = enumerate_sphere(2, e, &b).unwrap();
            let part = cluster_components(&set, cluster_threshold(e)).unwrap();
            for comp in part.components.iter().filter(|c| c.len() == 2) {
                let f = Sampler::UniformPhase.sample(&set, &mut stream(e)).unwrap().restricted(comp);
                let (m, n) = (f.support().point(0), f.support().point(1));
                let s = sigma_hat(&sigma, &[m[0] - n[0], m[1] - n[1]], &b).unwrap().norm();
                let diag = cluster_norm_d2(&f, &sigma, &b).unwrap().diagonal;
                assert!(diag >= (1.0 - s) * f.l2_norm_sq() - 1e-12);
                checked += 1;
            }
            if checked >= 10 {
                break;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn flat_counterexample_vanishes_on_geodesic() {
        let b = Budget::default();
        let cfg = RatioSweep { d: 2, e_min: 1, e_max: 200, sampler: Sampler::FlatCounterexample, trials: 2, seed: 7, separation_eps: 0.3 };
        let r = ratio_sweep(&cfg, &CurveSpec::flat_geodesic(), &b).unwrap();
        assert!(r.summary["max_ratio"] < 1e-10);
        assert!(r.summary["min_ratio"] < 1e-10);
    }

    #[test]
    fn circle_ratios_are_positive_and_reproducible() {
        let b = Budget::default();
        let cfg = RatioSweep { d: 2, e_min: 1, e_max: 300, sampler: Sampler::UniformPhase, trials: 2, seed: 11, separation_eps: 0.3 };
        let r = ratio_sweep(&cfg, &CurveSpec::standard_circle(), &b).unwrap();
        assert!(r.summary["min_ratio"] > 0.0);
        assert!(r.summary["max_ratio"] >= r.summary["min_ratio"]);
        assert_eq!(r.per_sample, ratio_sweep(&cfg, &CurveSpec::standard_circle(), &b).unwrap().per_sample);
    }

    #[test]
    fn zero_trials_is_empty() {
        let cfg = RatioSweep { d: 2, e_min: 1, e_max: 50, sampler: Sampler::UniformPhase, trials: 0, seed: 1, separation_eps: 0.3 };
        let r = ratio_sweep(&cfg, &CurveSpec::standard_circle(), &Budget::default()).unwrap();
        assert!(r.per_sample.is_empty());
    }

    #[test]
    fn l4_witness_reports_bound() {
        let b = Budget::default();
        let w = l4_lower_bound_witness(&CurveSpec::standard_elliptic(), 101, &b).unwrap();
        assert!(w.l4 >= 0.0);
        assert_eq!(w.bound, (w.f.len() * w.f.len()) as f64 / 101.0);
        let one = l4_lower_bound_witness(&CurveSpec::standard_elliptic(), 1, &b).unwrap();
        assert_eq!(one.f.len(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn norm_is_invariant_under_translation_and_phase(seed in 0u64..1000, e in 1u64..200, dx in 0.0f64..1.0, dy in 0.0f64..1.0, th in 0.0f64..1.0) {
            let b = Budget::default();
            let set = enumerate_sphere(2, e, &b).unwrap();
            prop_assume!(!set.is_empty());
            let f = Sampler::UniformPhase.sample(&set, &mut stream(seed)).unwrap();
            let sigma = CurveSpec::standard_circle();
            let base = restriction_norm(&f, &sigma, 2, &b).unwrap();
            let moved = restriction_norm(&f.translated(&[dx, dy]), &sigma.translated(&[dx, dy]), 2, &b).unwrap();
            prop_assert!((moved - base).abs() <= 1e-8 * base.max(1e-12) * 10.0);
            let shifted = restriction_norm(&f, &sigma.translated(&[3.0, -2.0]), 2, &b).unwrap();
            prop_assert!((shifted - base).abs() <= 1e-8 * base.max(1e-12) * 10.0);
            let rotated = restriction_norm(&f.scaled(unit_phase(th)), &sigma, 4, &b).unwrap();
            let base4 = restriction_norm(&f, &sigma, 4, &b).unwrap();
            prop_assert!((rotated - base4).abs() <= 1e-8 * base4 * 10.0);
        }

        #[test]
        fn parseval_bookkeeping(seed in 0u64..1000, e in 1u64..500) {
            let b = Budget::default();
            let set = enumerate_sphere(2, e, &b).unwrap();
            prop_assume!(!set.is_empty());
            let f = Sampler::UniformPhase.sample(&set, &mut stream(seed)).unwrap();
            let direct: f64 = f.coeffs().iter().map(|a| a.re * a.re + a.im * a.im).sum();
            prop_assert!((f.l2_norm_sq() - direct).abs() < 1e-14);
            prop_assert!((f.l2_norm_sq() - 1.0).abs() < 1e-12);
        }
    }
}
