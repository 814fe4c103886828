//! Dirichlet approximation, the simultaneous-approximation dichotomy, the
//! hybrid construction built on it, and slice directions for caps.

use alloc::vec::Vec;

use crate::arith::gcd;
use crate::budget::Budget;
use crate::error::{Error, Result};

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - libm::round(x)).abs()
}

/// max_j |ζ_j − a_j/q|.
pub fn approx_error(zeta: &[f64], q: u64, a: &[i64]) -> f64 {
    zeta.iter().zip(a).map(|(z, n)| (z - *n as f64 / q as f64).abs()).fold(0.0, f64::max)
}

fn nearest_numerators(zeta: &[f64], q: u64) -> Vec<i64> {
    zeta.iter().map(|z| libm::round(q as f64 * z) as i64).collect()
}

fn max_dist(zeta: &[f64], q: u64) -> f64 {
    zeta.iter().map(|z| dist_to_int(q as f64 * z)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Branch {
    Dirichlet,
    CaseOne,
    CaseTwo,
    /// Relation with a vanishing leading coefficient; solved by direct scan.
    Fallback,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Dirichlet => "dirichlet",
            Branch::CaseOne => "case1",
            Branch::CaseTwo => "case2",
            Branch::Fallback => "fallback",
        }
    }
}

/// Intermediate quantities of the relation-based construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationStep {
    pub b: [i64; 2],
    pub shift: i64,
    pub q1_bound: u64,
    pub q1: u64,
    pub a_prime: i64,
    /// Whether the two coordinates were swapped to make |b₁| ≤ |b₂|.
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult {
    pub q: u64,
    pub a: Vec<i64>,
    pub error: f64,
    /// error·q^{1/2}·Q^{1/2+γ} for the hybrid construction, q·K·error for
    /// Dirichlet pairs.
    pub quality: f64,
    /// Largest denominator the branch may produce.
    pub q_max: u64,
    pub branch: Branch,
    pub relation: Option<RelationStep>,
}

/// Minimiser of q·max_j|ζ_j − a_j/q| over 1 ≤ q ≤ K², smallest q on ties.
/// The minimiser always satisfies error < 1/(qK).
pub fn dirichlet_pair(zeta: [f64; 2], k: u64) -> Result<ApproxResult> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let q_max = k * k;
    let mut best = (f64::INFINITY, 1u64);
    for q in 1..=q_max {
        let a = nearest_numerators(&zeta, q);
        let score = q as f64 * approx_error(&zeta, q, &a);
        if score < best.0 {
            best = (score, q);
            if score == 0.0 {
                break;
            }
        }
    }
    let q = best.1;
    let a = nearest_numerators(&zeta, q);
    let error = approx_error(&zeta, q, &a);
    Ok(ApproxResult { q, a, error, quality: q as f64 * k as f64 * error, q_max, branch: Branch::Dirichlet, relation: None })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DichotomyWitness {
    /// Some q ∈ [Q, 2Q] with max_j ‖qζ_j‖ = distance < η.
    Simultaneous { q: u64, a: Vec<i64>, distance: f64 },
    /// Integer b with 0 < max|b_j| < 1/η and |Σb_jζ_j + shift| = distance.
    Relation { b: Vec<i64>, shift: i64, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyOutcome {
    pub witness: DichotomyWitness,
    /// distance/η in case 1; distance·Q·η^d in case 2.
    pub measured_quality: f64,
}

impl DichotomyOutcome {
    pub fn case(&self) -> u8 {
        match self.witness {
            DichotomyWitness::Simultaneous { .. } => 1,
            DichotomyWitness::Relation { .. } => 2,
        }
    }
}

/// Integer vector b, canonical sign (first nonzero entry positive), with
/// 0 < max|b_j| < 1/η minimising ‖Σ b_j ζ_j‖; lexicographically first on ties.
pub fn best_linear_relation(zeta: &[f64], eta: f64, budget: &Budget) -> Result<(Vec<i64>, i64, f64)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid("eta must lie in (0, 1)"));
    }
    let d = zeta.len();
    let bound = libm::ceil(1.0 / eta) as i64 - 1;
    let side = (2 * bound + 1) as u64;
    budget.charge(side.saturating_pow(d as u32))?;
    let mut b = alloc::vec![-bound; d];
    let mut best: Option<(Vec<i64>, i64, f64)> = None;
    'scan: loop {
        if b.iter().find(|c| **c != 0).is_some_and(|c| *c > 0) {
            let v: f64 = b.iter().zip(zeta).map(|(bi, z)| *bi as f64 * z).sum();
            let dist = dist_to_int(v);
            if best.as_ref().is_none_or(|(_, _, bd)| dist < *bd) {
                best = Some((b.clone(), -(libm::round(v) as i64), dist));
            }
        }
        for i in (0..d).rev() {
            if b[i] < bound {
                b[i] += 1;
                continue 'scan;
            }
            b[i] = -bound;
        }
        break;
    }
    best.ok_or_else(|| Error::degenerate("no admissible integer relation"))
}

pub fn dichotomy(zeta: &[f64], q_param: u64, eta: f64, budget: &Budget) -> Result<DichotomyOutcome> {
    if q_param == 0 {
        return Err(Error::invalid("Q must be at least 1"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid("eta must lie in (0, 1)"));
    }
    if zeta.iter().any(|z| !(-1.0..=1.0).contains(z)) {
        return Err(Error::invalid("zeta must lie in [-1, 1]^d"));
    }
    budget.charge(q_param + 1)?;
    let mut best = (f64::INFINITY, q_param);
    for q in q_param..=2 * q_param {
        let m = max_dist(zeta, q);
        if m < best.0 {
            best = (m, q);
        }
    }
    if best.0 < eta {
        let q = best.1;
        return Ok(DichotomyOutcome {
            witness: DichotomyWitness::Simultaneous { q, a: nearest_numerators(zeta, q), distance: best.0 },
            measured_quality: best.0 / eta,
        });
    }
    let (b, shift, distance) = best_linear_relation(zeta, eta, budget)?;
    let measured_quality = distance * q_param as f64 * libm::pow(eta, zeta.len() as f64);
    Ok(DichotomyOutcome { witness: DichotomyWitness::Relation { b, shift, distance }, measured_quality })
}

/// Last continued-fraction convergent p/q of x with q ≤ bound.
pub fn best_convergent(x: f64, bound: u64) -> (i64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, libm::floor(x) as i64, 1u64);
    let mut frac = x - libm::floor(x);
    while frac > 1e-15 {
        let inv = 1.0 / frac;
        let term = libm::floor(inv);
        frac = inv - term;
        let t = term as u64;
        let Some(q2) = t.checked_mul(q1).and_then(|v| v.checked_add(q0)) else { break };
        if q2 > bound {
            break;
        }
        let p2 = t as i64 * p1 + p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    (p1, q1)
}

fn reduce(q: u64, a: &[i64]) -> (u64, Vec<i64>) {
    let g = a.iter().fold(q, |g, n| gcd(g, n.unsigned_abs()));
    (q / g, a.iter().map(|n| n / g as i64).collect())
}

struct Setup {
    zeta: [f64; 2],
    q_param: u64,
    gamma: f64,
}

impl Setup {
    fn finish(&self, q: u64, a: Vec<i64>, q_max: u64, branch: Branch, relation: Option<RelationStep>) -> ApproxResult {
        let (q, a) = reduce(q, &a);
        let error = approx_error(&self.zeta, q, &a);
        let quality = error * libm::sqrt(q as f64) * libm::pow(self.q_param as f64, 0.5 + self.gamma);
        ApproxResult { q, a, error, quality, q_max, branch, relation }
    }
}

/// Integer window (2Q^{(1+3γ)/2}, Q^{1−6γ}/4) for the auxiliary bound, if
/// it contains an integer; returns the smallest such integer.
pub fn auxiliary_bound(q_param: u64, gamma: f64) -> Option<u64> {
    if !(gamma > 0.0 && gamma < 1.0 / 15.0) {
        return None;
    }
    let q = q_param as f64;
    let lo = 2.0 * libm::pow(q, (1.0 + 3.0 * gamma) / 2.0);
    let hi = libm::pow(q, 1.0 - 6.0 * gamma) / 4.0;
    let candidate = libm::floor(lo) + 1.0;
    (candidate < hi).then_some(candidate as u64)
}

/// Build an approximation from an integer relation b₁ζ₁ + b₂ζ₂ + shift ≈ 0.
pub fn approx_from_relation(zeta: [f64; 2], b: [i64; 2], shift: i64, q_param: u64, gamma: f64) -> Result<ApproxResult> {
    let q1_bound = auxiliary_bound(q_param, gamma).ok_or_else(|| {
        Error::invalid(alloc::format!("Q = {q_param} admits no auxiliary bound for gamma = {gamma}"))
    })?;
    let setup = Setup { zeta, q_param, gamma };
    let swapped = b[0].abs() > b[1].abs();
    let (z, bb) = if swapped { ([zeta[1], zeta[0]], [b[1], b[0]]) } else { (zeta, b) };
    if bb[1] == 0 {
        let mut best = (f64::INFINITY, 1u64);
        for q in 1..=q_param {
            let m = max_dist(&zeta, q);
            if m < best.0 {
                best = (m, q);
            }
        }
        let a = nearest_numerators(&zeta, best.1);
        return Ok(setup.finish(best.1, a, q_param, Branch::Fallback, None));
    }
    let (a_prime, q1) = best_convergent(z[0], q1_bound);
    let scale = bb[1].abs();
    let first = a_prime * scale;
    let second = -bb[1].signum() * (bb[0] * a_prime + shift * q1 as i64);
    let a = if swapped { alloc::vec![second, first] } else { alloc::vec![first, second] };
    let step = RelationStep { b, shift, q1_bound, q1, a_prime, swapped };
    Ok(setup.finish(q1 * scale as u64, a, q_param, Branch::CaseTwo, Some(step)))
}

/// Simultaneous approximation of (ζ₁, ζ₂) at scale Q with exponent γ.
pub fn hybrid_approx(zeta1: f64, zeta2: f64, q_param: u64, gamma: f64, budget: &Budget) -> Result<ApproxResult> {
    if q_param < 2 {
        return Err(Error::invalid("Q must be at least 2"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma must lie in (0, 1)"));
    }
    let zeta = [zeta1, zeta2];
    let eta = libm::pow(q_param as f64, -gamma);
    let outcome = dichotomy(&zeta, q_param, eta, budget)?;
    match outcome.witness {
        DichotomyWitness::Simultaneous { q, a, .. } => {
            Ok(Setup { zeta, q_param, gamma }.finish(q, a, 2 * q_param, Branch::CaseOne, None))
        }
        DichotomyWitness::Relation { b, shift, .. } => approx_from_relation(zeta, [b[0], b[1]], shift, q_param, gamma),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceDirection {
    pub a: [i64; 3],
    pub nu: u64,
    pub theta1: f64,
    pub q_param: u64,
    pub gamma: f64,
    pub approx: ApproxResult,
}

/// Integer direction close to ζ and the number of parallel sections it
/// induces through a cap of size r on the radius-R sphere.
pub fn slice_direction(zeta: [f64; 3], r: f64, radius: f64, delta: f64, budget: &Budget) -> Result<SliceDirection> {
    if !(r > 1.0 && r < radius) {
        return Err(Error::invalid("need 1 < r < R"));
    }
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::invalid("delta must lie in (0, 1/4)"));
    }
    let norm = libm::sqrt(zeta.iter().map(|z| z * z).sum());
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("zeta must be a unit vector"));
    }
    let gamma = 2.0 * delta / (1.0 - 2.0 * delta);
    let q_param = libm::floor(libm::pow(radius / r, 1.0 - 2.0 * delta)) as u64;
    let mut axis = 0;
    for k in 1..3 {
        if zeta[k].abs() > zeta[axis].abs() {
            axis = k;
        }
    }
    let mut perm = zeta;
    perm.swap(axis, 2);
    let approx = hybrid_approx(perm[0] / perm[2], perm[1] / perm[2], q_param, gamma, budget)?;
    let sign = if perm[2] < 0.0 { -1 } else { 1 };
    let mut a = [sign * approx.a[0], sign * approx.a[1], sign * approx.q as i64];
    a.swap(axis, 2);
    let len = libm::sqrt(a.iter().map(|c| (c * c) as f64).sum());
    let miss = libm::sqrt(zeta.iter().zip(&a).map(|(z, c)| (z - *c as f64 / len) * (z - *c as f64 / len)).sum());
    let theta1 = r / radius + miss;
    let nu = 1 + libm::ceil(radius * theta1 * theta1 * len) as u64;
    Ok(SliceDirection { a, nu, theta1, q_param, gamma, approx })
}
