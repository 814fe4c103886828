//! Gaussian random eigenfunctions and their zero sets: nodal domains,
//! crossings with curves, Crofton length estimates and the barrier profile.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::budget::Budget;
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::lattice::{enumerate_sphere, FrequencySet};
use crate::restriction::{CurveSpec, Eigenfunction, Shape};
use crate::rng::stream;

/// Values with modulus below this are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Parameter accuracy of refined zeros.
pub const BISECTION_TOL: f64 = 1e-10;
/// Kinematic constant of the Crofton estimator, frozen from
/// `calibrate_crofton(2..=10, 10⁴ lines, seed 1)`.
pub const CROFTON_CONSTANT: f64 = 0.495572;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomModel {
    full: FrequencySet,
    half: FrequencySet,
    seed: u64,
}

impl RandomModel {
    pub fn new(d: usize, e: u64, seed: u64, budget: &Budget) -> Result<Self> {
        RandomModel::from_set(enumerate_sphere(d, e, budget)?, seed)
    }

    pub fn from_set(full: FrequencySet, seed: u64) -> Result<Self> {
        if full.is_empty() {
            return Err(Error::invalid(alloc::format!("E = {} has no lattice points", full.energy())));
        }
        let half = full.half();
        Ok(RandomModel { full, half, seed })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RandomModel { seed, ..self.clone() }
    }

    pub fn full(&self) -> &FrequencySet {
        &self.full
    }

    pub fn half(&self) -> &FrequencySet {
        &self.half
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// |half|^{−1/2} Σ_{ξ∈half} (g_ξ cos 2πx·ξ + h_ξ sin 2πx·ξ), so that
/// E φ(x)² = 1.
pub fn sample_random(model: &RandomModel) -> Result<Eigenfunction> {
    let mut rng = stream(model.seed);
    let scale = 0.5 / libm::sqrt(model.half.len() as f64);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); model.full.len()];
    for p in model.half.iter() {
        let g: f64 = rng.sample(StandardNormal);
        let h: f64 = rng.sample(StandardNormal);
        let i = model.full.index_of(p).expect("half is a subset");
        let neg: Vec<i64> = p.iter().map(|c| -c).collect();
        let j = model.full.index_of(&neg).expect("sphere is symmetric");
        coeffs[i] = Complex64::new(g, -h) * scale;
        coeffs[j] = Complex64::new(g, h) * scale;
    }
    Eigenfunction::new(model.full.clone(), coeffs)
}

/// Unit vectors spread by the golden-angle spiral.
pub fn fibonacci_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - libm::sqrt(5.0));
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = libm::sqrt(1.0 - z * z);
            let (s, c) = libm::sincos(golden * k as f64);
            [rho * c, rho * s, z]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierProfile {
    /// N = |𝓔| = 2|half|.
    pub n: usize,
    pub f1_at_0: f64,
    pub radii: Vec<f64>,
    /// Sphere averages of F₁ at each radius.
    pub values: Vec<f64>,
    /// √N·sin(2πλr)/(2πλr), the equidistributed prediction.
    pub predicted: Vec<f64>,
    pub min_radius: f64,
    pub min_value: f64,
    pub max_deviation: f64,
    /// False when E ≡ 0, 4, 7 mod 8.
    pub equidistributed: bool,
}

pub const BARRIER_DIRECTIONS: usize = 64;
pub const BARRIER_RADII: usize = 200;

/// F₁(x) = √N·|half|⁻¹ Σ_{ξ∈half} cos 2πx·ξ, which equals √N at the origin.
pub fn barrier_value(half: &FrequencySet, n: usize, x: &[f64]) -> f64 {
    let s: f64 = half
        .iter()
        .map(|p| {
            let t: f64 = p.iter().zip(x).map(|(&k, &y)| k as f64 * y).sum();
            libm::cos(2.0 * PI * (t - libm::round(t)))
        })
        .sum();
    libm::sqrt(n as f64) * (s / half.len() as f64)
}

pub fn barrier_profile(set: &FrequencySet, budget: &Budget) -> Result<BarrierProfile> {
    if set.dim() != 3 || set.is_empty() {
        return Err(Error::invalid("barrier profile needs a nonempty set in d = 3"));
    }
    let half = set.half();
    let n = 2 * half.len();
    let lam = set.radius();
    let dirs = fibonacci_directions(BARRIER_DIRECTIONS);
    budget.charge((BARRIER_RADII * dirs.len() * half.len()) as u64)?;
    let mut radii = Vec::with_capacity(BARRIER_RADII);
    let mut values = Vec::with_capacity(BARRIER_RADII);
    let mut predicted = Vec::with_capacity(BARRIER_RADII);
    for k in 1..=BARRIER_RADII {
        let r = 4.0 / lam * k as f64 / BARRIER_RADII as f64;
        let avg = dirs.iter().map(|u| barrier_value(&half, n, &[r * u[0], r * u[1], r * u[2]])).sum::<f64>() / dirs.len() as f64;
        let arg = 2.0 * PI * lam * r;
        radii.push(r);
        values.push(avg);
        predicted.push(libm::sqrt(n as f64) * libm::sin(arg) / arg);
    }
    let (mut min_radius, mut min_value) = (radii[0], values[0]);
    for (r, v) in radii.iter().zip(&values) {
        if *v < min_value {
            min_value = *v;
            min_radius = *r;
        }
    }
    let max_deviation = values.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e = set.energy();
    let equidistributed = !matches!(e % 8, 0 | 4 | 7);
    Ok(BarrierProfile {
        n,
        f1_at_0: barrier_value(&half, n, &[0.0; 3]),
        radii,
        values,
        predicted,
        min_radius,
        min_value,
        max_deviation,
        equidistributed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalLabeling {
    pub grid_n: usize,
    /// Component id per cell, row-major with the first axis slowest.
    pub labels: Vec<u32>,
    /// Sign per component id.
    pub positive: Vec<bool>,
    pub positive_count: usize,
    pub negative_count: usize,
}

impl NodalLabeling {
    pub fn total(&self) -> usize {
        self.positive_count + self.negative_count
    }
}

/// Grid rule max(64, ⌈10λ⌉).
pub fn default_grid(lambda: f64) -> usize {
    (libm::ceil(10.0 * lambda) as usize).max(64)
}

/// Label face-connected same-sign cells of a periodic grid of values.
pub fn label_sign_components(values: &[f64], d: usize, n: usize) -> Result<NodalLabeling> {
    let total = n.checked_pow(d as u32).ok_or_else(|| Error::invalid("grid too large"))?;
    if values.len() != total {
        return Err(Error::invalid("value count does not match the grid"));
    }
    let sign: Vec<bool> = values.iter().map(|v| *v >= 0.0).collect();
    let mut dsu = DisjointSet::new(total);
    let mut stride = 1;
    for _ in 0..d {
        for idx in 0..total {
            let coord = (idx / stride) % n;
            let next = if coord + 1 == n { idx + stride - n * stride } else { idx + stride };
            if sign[idx] == sign[next] {
                dsu.union(idx, next);
            }
        }
        stride *= n;
    }
    let mut id = vec![u32::MAX; total];
    let mut labels = vec![0u32; total];
    let mut positive = Vec::new();
    for idx in 0..total {
        let root = dsu.find(idx);
        if id[root] == u32::MAX {
            id[root] = positive.len() as u32;
            positive.push(sign[idx]);
        }
        labels[idx] = id[root];
    }
    let positive_count = positive.iter().filter(|p| **p).count();
    let negative_count = positive.len() - positive_count;
    Ok(NodalLabeling { grid_n: n, labels, positive, positive_count, negative_count })
}

/// Nodal domains of Re φ on the cell-centre grid of side `grid_n`.
pub fn count_domains(f: &Eigenfunction, grid_n: usize, budget: &Budget) -> Result<NodalLabeling> {
    let d = f.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::invalid("domain counting supports d = 2 and d = 3"));
    }
    if (grid_n as f64) < 10.0 * f.lambda() {
        return Err(Error::invalid(alloc::format!("grid {grid_n} is below 10·λ = {}", 10.0 * f.lambda())));
    }
    let values: Vec<f64> = f.eval_grid(grid_n, 0.5, budget)?.iter().map(|z| z.re).collect();
    budget.charge((d * values.len()) as u64)?;
    label_sign_components(&values, d, grid_n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossings {
    pub crossings: usize,
    pub tangencies: usize,
    /// Refined parameters of the sign changes.
    pub zeros: Vec<f64>,
    /// Every sample was below the zero threshold.
    pub all_zero: bool,
}

fn classify(v: f64) -> i8 {
    if v.abs() < ZERO_THRESHOLD {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, sa: i8) -> f64 {
    while b - a > BISECTION_TOL {
        let m = 0.5 * (a + b);
        let s = classify(g(m));
        if s == 0 {
            return m;
        }
        if s == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of g over samples at `ts`, cyclic when `closed`.
fn scan(g: &impl Fn(f64) -> f64, ts: &[f64], period: Option<f64>) -> Crossings {
    let signs: Vec<i8> = ts.iter().map(|&t| classify(g(t))).collect();
    let nonzero: Vec<usize> = (0..ts.len()).filter(|&i| signs[i] != 0).collect();
    if nonzero.is_empty() {
        return Crossings { crossings: 0, tangencies: 0, zeros: Vec::new(), all_zero: true };
    }
    let mut out = Crossings { crossings: 0, tangencies: 0, zeros: Vec::new(), all_zero: false };
    let mut pairs: Vec<(usize, usize)> = nonzero.windows(2).map(|w| (w[0], w[1])).collect();
    if period.is_some() {
        pairs.push((*nonzero.last().expect("nonempty"), nonzero[0]));
    }
    for (i, j) in pairs {
        let gap = if j > i { j - i } else { j + ts.len() - i };
        if signs[i] != signs[j] {
            let (a, mut b) = (ts[i], ts[j]);
            if let Some(p) = period {
                if j <= i {
                    b += p;
                }
            }
            out.crossings += 1;
            let z = bisect(g, a, b, signs[i]);
            out.zeros.push(match period {
                Some(p) => z - p * libm::floor(z / p),
                None => z,
            });
        } else if gap > 1 {
            out.tangencies += 1;
        }
    }
    out.zeros.sort_by(f64::total_cmp);
    out
}

/// Sign changes of Re φ∘γ around a closed curve in T².
pub fn curve_crossings(f: &Eigenfunction, curve: &CurveSpec, samples: usize, budget: &Budget) -> Result<Crossings> {
    if curve.dim() != 2 || f.dim() != 2 || matches!(curve.shape(), Shape::Patch(_)) {
        return Err(Error::invalid("crossings need a curve in T² and a d = 2 eigenfunction"));
    }
    if (samples as f64) < 20.0 * f.lambda() {
        return Err(Error::invalid(alloc::format!("need at least 20·λ = {} samples", 20.0 * f.lambda())));
    }
    budget.charge((samples * f.len()) as u64)?;
    let g = |t: f64| f.eval(&curve.curve_point(t).expect("curve")).re;
    let ts: Vec<f64> = (0..samples).map(|j| j as f64 / samples as f64).collect();
    Ok(scan(&g, &ts, Some(1.0)))
}

/// Axis-aligned square [origin, origin + side]².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub origin: [f64; 2],
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CroftonEstimate {
    pub length: f64,
    /// π·mean(width × crossings) before the kinematic constant.
    pub raw: f64,
    pub lines: usize,
}

/// Segment of the line {u·x = p} inside the square, as (point, direction,
/// parameter range).
fn clip(square: &Square, u: [f64; 2], p: f64) -> Option<([f64; 2], [f64; 2], f64, f64)> {
    let base = [p * u[0], p * u[1]];
    let v = [-u[1], u[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..2 {
        let (a, b) = (square.origin[k], square.origin[k] + square.side);
        if v[k].abs() < 1e-15 {
            if base[k] < a || base[k] > b {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((a - base[k]) / v[k], (b - base[k]) / v[k]);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (hi > lo).then_some((base, v, lo, hi))
}

/// Zero-set length in a square from crossing counts on random lines.
pub fn crofton_estimate(f: &Eigenfunction, square: &Square, n_lines: usize, seed: u64, budget: &Budget) -> Result<CroftonEstimate> {
    let raw = crofton_raw(f, square, n_lines, seed, budget)?;
    Ok(CroftonEstimate { length: CROFTON_CONSTANT * raw, raw, lines: n_lines })
}

/// Calibration square for the straight-line family.
pub const CALIBRATION_SQUARE: Square = Square { origin: [0.1234, 0.1234], side: 1.0 };

/// Least-squares constant C with C·raw ≈ 2k for sin(2πkx₁) over the
/// calibration square.
pub fn calibrate_crofton(ks: &[i64], n_lines: usize, seed: u64, budget: &Budget) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for &k in ks {
        let a = Complex64::new(0.0, -0.5);
        let f = Eigenfunction::from_terms(2, (k * k) as u64, &[(&[k, 0], a), (&[-k, 0], -a)])?;
        let raw = crofton_raw(&f, &CALIBRATION_SQUARE, n_lines, seed, budget)?;
        num += raw * 2.0 * k as f64;
        den += raw * raw;
    }
    if den == 0.0 {
        return Err(Error::degenerate("calibration family produced no crossings"));
    }
    Ok(num / den)
}

/// π·mean(width·crossings), the unnormalised kinematic integral.
pub fn crofton_raw(f: &Eigenfunction, square: &Square, n_lines: usize, seed: u64, budget: &Budget) -> Result<f64> {
    if f.dim() != 2 {
        return Err(Error::invalid("Crofton estimate needs d = 2"));
    }
    if n_lines < 100 {
        return Err(Error::invalid("need at least 100 lines"));
    }
    if !(square.side > 0.0) {
        return Err(Error::invalid("square side must be positive"));
    }
    let mut rng = stream(seed);
    let corners = [
        square.origin,
        [square.origin[0] + square.side, square.origin[1]],
        [square.origin[0], square.origin[1] + square.side],
        [square.origin[0] + square.side, square.origin[1] + square.side],
    ];
    let mut total = 0.0;
    for _ in 0..n_lines {
        let theta = PI * rng.random::<f64>();
        let (s, c) = libm::sincos(theta);
        let u = [c, s];
        let proj: Vec<f64> = corners.iter().map(|x| u[0] * x[0] + u[1] * x[1]).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = hi - lo;
        let p = lo + width * rng.random::<f64>();
        let Some((base, v, t0, t1)) = clip(square, u, p) else { continue };
        let samples = (libm::ceil(20.0 * f.lambda() * (t1 - t0)) as usize).max(16);
        budget.charge((samples * f.len()) as u64)?;
        let g = |t: f64| f.eval(&[base[0] + t * v[0], base[1] + t * v[1]]).re;
        let ts: Vec<f64> = (0..=samples).map(|j| t0 + (t1 - t0) * j as f64 / samples as f64).collect();
        total += width * scan(&g, &ts, None).crossings as f64;
    }
    Ok(PI * total / n_lines as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionWitness {
    pub found: bool,
    pub point: Option<Vec<f64>>,
    pub degenerate: bool,
}

/// A zero of φ on Σ, located by a sampled sign change and bisection.
pub fn intersection_witness(f: &Eigenfunction, sigma: &CurveSpec, budget: &Budget) -> Result<IntersectionWitness> {
    if sigma.dim() != f.dim() {
        return Err(Error::invalid("dimension mismatch between function and Σ"));
    }
    let lam = f.lambda();
    match sigma.shape() {
        Shape::Patch(placed) => {
            let rho = placed.patch.bump_width();
            let stretch = libm::sqrt(1.0 + placed.patch.max_slope() * placed.patch.max_slope());
            let n = (libm::ceil(20.0 * lam * 2.0 * rho * stretch) as usize).max(32);
            budget.charge((n * n * f.len()) as u64)?;
            let inner = 0.95 * rho;
            let coord = |k: usize| -inner + 2.0 * inner * k as f64 / (n - 1) as f64;
            let inside = |i: usize, j: usize| libm::hypot(coord(i), coord(j)) <= inner;
            let val = |x: [f64; 2]| f.eval(&placed.point(x)).re;
            let mut signs = vec![0i8; n * n];
            let mut all_zero = true;
            for i in 0..n {
                for j in (0..n).filter(|&j| inside(i, j)) {
                    signs[i * n + j] = classify(val([coord(i), coord(j)]));
                    all_zero &= signs[i * n + j] == 0;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let s = signs[i * n + j];
                    if s == 0 {
                        continue;
                    }
                    for (k, l) in [(i + 1, j), (i, j + 1)] {
                        if k < n && l < n && signs[k * n + l] == -s {
                            let (a, c) = ([coord(i), coord(j)], [coord(k), coord(l)]);
                            let along = |t: f64| [a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1])];
                            let t = bisect(&|t| val(along(t)), 0.0, 1.0, s);
                            let hit = placed.point(along(t));
                            return Ok(IntersectionWitness { found: true, point: Some(hit.to_vec()), degenerate: false });
                        }
                    }
                }
            }
            Ok(IntersectionWitness { found: false, point: None, degenerate: all_zero })
        }
        _ => {
            let samples = (libm::ceil(20.0 * lam) as usize).max(64);
            let c = curve_crossings(f, sigma, samples, budget)?;
            let point = c.zeros.first().map(|&t| sigma.curve_point(t).expect("curve").to_vec());
            Ok(IntersectionWitness { found: point.is_some(), point, degenerate: c.all_zero })
        }
    }
}
