//! Bilinear oscillatory sums, pair measures, lattice phase sums and the
//! complete character sums (Gauss, Kloosterman, Salié).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::arith::{divisor_count, factorize, gcd, jacobi, mod_inv, totient};
use crate::budget::Budget;
use crate::caps::{max_cap_count, CapCenters, CellPartition};
use crate::error::{Error, Result};
use crate::lattice::{dist_sq, enumerate_sphere, FrequencySet};
use crate::report::{ExperimentReport, Value};
use crate::restriction::unit_phase;
use crate::stats::{log_log_fit, sum_complex, ComplexKahan, LineFit};
use crate::surface::{bump, phase_psi, SurfacePatch};

/// Point sets S, T ⊂ [0, R^{−1/5}] that are R^{−1/2}-separated, with scale R
/// and coupling q.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumInstance {
    r: f64,
    q: f64,
    s: Vec<f64>,
    t: Vec<f64>,
}

const SLACK: f64 = 1e-9;

fn check_points(points: &mut [f64], r: f64) -> Result<()> {
    points.sort_by(f64::total_cmp);
    let top = libm::pow(r, -0.2) * (1.0 + SLACK);
    let gap = libm::pow(r, -0.5) * (1.0 - SLACK);
    if points.iter().any(|&x| !(0.0..=top).contains(&x)) {
        return Err(Error::invalid("points must lie in [0, R^(-1/5)]"));
    }
    if points.windows(2).any(|w| w[1] - w[0] < gap) {
        return Err(Error::invalid("points must be R^(-1/2)-separated"));
    }
    Ok(())
}

impl ExpSumInstance {
    pub fn new(r: f64, q: f64, mut s: Vec<f64>, mut t: Vec<f64>) -> Result<Self> {
        if !(r > 1.0) || !q.is_finite() {
            return Err(Error::invalid("need R > 1 and finite q"));
        }
        check_points(&mut s, r)?;
        check_points(&mut t, r)?;
        Ok(ExpSumInstance { r, q, s, t })
    }

    /// {k·R^{−1/2}} ∩ [0, R^{−1/5}].
    pub fn grid_points(r: f64) -> Vec<f64> {
        let step = libm::pow(r, -0.5);
        let n = libm::floor(libm::pow(r, 0.3) * (1.0 + SLACK)) as usize;
        (0..=n).map(|k| k as f64 * step).filter(|&x| x <= libm::pow(r, -0.2) * (1.0 + SLACK)).collect()
    }

    pub fn full_grid(r: f64, q: f64) -> Result<Self> {
        let g = ExpSumInstance::grid_points(r);
        ExpSumInstance::new(r, q, g.clone(), g)
    }

    /// One point jittered uniformly inside the first half of each slot of
    /// width 2R^{−1/2}.
    pub fn random<G: Rng>(r: f64, q: f64, rng: &mut G) -> Result<Self> {
        let step = libm::pow(r, -0.5);
        let top = libm::pow(r, -0.2);
        let slots = libm::floor(top / (2.0 * step)) as usize;
        let mut draw = || (0..slots).map(|k| (2 * k) as f64 * step + rng.random::<f64>() * step).collect::<Vec<_>>();
        let s = draw();
        let t = draw();
        ExpSumInstance::new(r, q, s, t)
    }

    pub fn singleton(r: f64, q: f64) -> Result<Self> {
        ExpSumInstance::new(r, q, vec![0.0], vec![0.0])
    }

    pub fn scale(&self) -> f64 {
        self.r
    }

    pub fn coupling(&self) -> f64 {
        self.q
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }
}

/// Σ_{s,t} e^{iR(st + qs²t²)} in lexicographic (s, t) order.
pub fn bilinear_sum(inst: &ExpSumInstance, budget: &Budget) -> Result<Complex64> {
    oriented_sum(inst, 1.0, budget)
}

/// The same sum with the kernel e^{−iθ}; the exact conjugate of
/// [`bilinear_sum`].
pub fn bilinear_sum_conjugate(inst: &ExpSumInstance, budget: &Budget) -> Result<Complex64> {
    oriented_sum(inst, -1.0, budget)
}

fn oriented_sum(inst: &ExpSumInstance, sign: f64, budget: &Budget) -> Result<Complex64> {
    let count = inst.s.len() * inst.t.len();
    budget.charge(count as u64)?;
    let terms = inst.s.iter().flat_map(|&s| {
        inst.t.iter().map(move |&t| {
            let st = s * t;
            let (sn, cs) = libm::sincos(sign * inst.r * (st + inst.q * st * st));
            Complex64::new(cs, sn)
        })
    });
    Ok(sum_complex(terms, count))
}

/// Multiplicities of z = (R^{1/5}(s−s₁), R^{2/5}(s²−s₁²)) over ordered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasure {
    /// Quantised key ↦ (representative z, multiplicity).
    pub atoms: BTreeMap<(i64, i64), ([f64; 2], u64)>,
}

const Z_QUANTUM: f64 = 1e-9;

impl PairMeasure {
    pub fn total_mass(&self) -> u64 {
        self.atoms.values().map(|a| a.1).sum()
    }

    pub fn multiplicity(&self, z: [f64; 2]) -> u64 {
        self.atoms.get(&quantise(z)).map(|a| a.1).unwrap_or(0)
    }

    /// Largest total multiplicity in a half-open box of the given widths.
    pub fn box_max(&self, w1: f64, w2: f64, budget: &Budget) -> Result<u64> {
        let mut atoms: Vec<([f64; 2], u64)> = self.atoms.values().copied().collect();
        atoms.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
        let n = atoms.len();
        budget.charge((n * n) as u64)?;
        let mut best = 0;
        let mut column: Vec<(f64, u64)> = Vec::new();
        for i in 0..n {
            let left = atoms[i].0[0];
            column.clear();
            column.extend(atoms[i..].iter().take_while(|a| a.0[0] < left + w1).map(|a| (a.0[1], a.1)));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut lo, mut acc) = (0, 0u64);
            for hi in 0..column.len() {
                acc += column[hi].1;
                while column[hi].0 - column[lo].0 >= w2 {
                    acc -= column[lo].1;
                    lo += 1;
                }
                best = best.max(acc);
            }
        }
        Ok(best)
    }
}

fn quantise(z: [f64; 2]) -> (i64, i64) {
    (libm::round(z[0] / Z_QUANTUM) as i64, libm::round(z[1] / Z_QUANTUM) as i64)
}

pub fn pair_measure(s: &[f64], r: f64, budget: &Budget) -> Result<PairMeasure> {
    budget.charge((s.len() * s.len()) as u64)?;
    let (a, b) = (libm::pow(r, 0.2), libm::pow(r, 0.4));
    let mut atoms: BTreeMap<(i64, i64), ([f64; 2], u64)> = BTreeMap::new();
    for &x in s {
        for &y in s {
            let z = [a * (x - y), b * (x * x - y * y)];
            atoms.entry(quantise(z)).or_insert((z, 0)).1 += 1;
        }
    }
    Ok(PairMeasure { atoms })
}

/// r_min·(r_max/r_min)^{k/(n−1)} for k < n.
pub fn geometric_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![r_min];
    }
    (0..n).map(|k| r_min * libm::pow(r_max / r_min, k as f64 / (n - 1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub fit: LineFit,
    pub scales: Vec<f64>,
    pub moduli: Vec<f64>,
}

/// Least-squares slope of log|sum| against log R over a family.
pub fn exponent_fit<F>(scales: &[f64], mut family: F, budget: &Budget) -> Result<ExponentFit>
where
    F: FnMut(f64) -> Result<ExpSumInstance>,
{
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    if scales.len() < 2 || hi <= lo {
        return Err(Error::degenerate("exponent fit needs at least two distinct scales"));
    }
    if libm::log10(hi / lo) < 1.5 {
        return Err(Error::invalid("scales must span at least 1.5 decades"));
    }
    let mut moduli = Vec::with_capacity(scales.len());
    for &r in scales {
        let m = bilinear_sum(&family(r)?, budget)?.norm();
        if m == 0.0 {
            return Err(Error::degenerate("sum vanished exactly"));
        }
        moduli.push(m);
    }
    let fit = log_log_fit(scales, &moduli)?;
    Ok(ExponentFit { fit, scales: scales.to_vec(), moduli })
}

/// Points of one set peeled into dense cells and √R-separated layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Peeling {
    /// Points in cells of side √R holding more than R^{ε′} points.
    pub dense: Vec<usize>,
    pub layers: Vec<Vec<usize>>,
}

/// Exponent ε′ in the dense-cell threshold R^{ε′}.
pub const PEEL_EXPONENT: f64 = 0.1;

pub fn peel(set: &FrequencySet, budget: &Budget) -> Result<Peeling> {
    let r = set.radius();
    let side = libm::sqrt(r);
    let cells = CellPartition::new(set, side.min(2.0 * r))?;
    let threshold = libm::pow(r, PEEL_EXPONENT);
    let mut dense: Vec<usize> =
        cells.cells.values().filter(|c| c.len() as f64 > threshold).flatten().copied().collect();
    dense.sort_unstable();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let gap_sq = side * side;
    budget.charge((set.len() * set.len()) as u64)?;
    for i in (0..set.len()).filter(|i| dense.binary_search(i).is_err()) {
        let p = set.point(i);
        match layers.iter_mut().find(|l| l.iter().all(|&j| dist_sq(p, set.point(j)) as f64 >= gap_sq)) {
            Some(l) => l.push(i),
            None => layers.push(vec![i]),
        }
    }
    Ok(Peeling { dense, layers })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePhaseSum {
    pub value: Complex64,
    /// Pairs (x, y) with x − y in the cone and |x − y| < cone_cut·R.
    pub pairs: usize,
    pub peeling: Peeling,
}

/// Σ e^{iψ(x−y)} over admissible pairs x ∈ set1, y ∈ set2.
pub fn lattice_phase_sum(
    set1: &FrequencySet,
    set2: &FrequencySet,
    patch: &SurfacePatch,
    cone_cut: f64,
    budget: &Budget,
) -> Result<LatticePhaseSum> {
    if set1.dim() != 3 || set2.dim() != 3 || set1.energy() != set2.energy() {
        return Err(Error::invalid("both sets must lie on the same sphere in d = 3"));
    }
    let peeling = peel(set1, budget)?;
    let cut = cone_cut * set1.radius();
    budget.charge((set1.len() * set2.len()) as u64)?;
    let mut acc = ComplexKahan::default();
    let mut pairs = 0;
    for x in set1.iter() {
        for y in set2.iter() {
            let xi = [(x[0] - y[0]) as f64, (x[1] - y[1]) as f64, (x[2] - y[2]) as f64];
            if libm::sqrt(xi.iter().map(|c| c * c).sum()) >= cut {
                continue;
            }
            match phase_psi(patch, xi) {
                Ok(p) => {
                    acc.add(Complex64::from_polar(1.0, p.psi));
                    pairs += 1;
                }
                Err(Error::OutsideCone { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(LatticePhaseSum { value: acc.value(), pairs, peeling })
}

/// S(a, m; q) = (1/q) Σ_{k mod q} e_q(k²a − km).
pub fn gauss_sum(a: i64, m: i64, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::invalid("modulus must be positive"));
    }
    let qi = q as i128;
    let terms = (0..q).map(|k| {
        let k = k as i128;
        let e = (k * k % qi * a as i128 - k * m as i128).rem_euclid(qi);
        unit_phase(e as f64 / q as f64)
    });
    Ok(sum_complex(terms, q as usize) / q as f64)
}

/// Right side (a/q)·S(1,0;q)·e_q(−m²·(4a)⁻¹) of the completed-square
/// identity for odd q coprime to a.
pub fn gauss_identity_rhs(a: i64, m: i64, q: u64) -> Result<Complex64> {
    if q % 2 == 0 || gcd(a.rem_euclid(q as i64) as u64, q) != 1 {
        return Err(Error::invalid("need odd q with gcd(a, q) = 1"));
    }
    let qi = q as i64;
    let inv = mod_inv((4 * (a.rem_euclid(qi)) as i128 % qi as i128) as i64, qi).expect("coprime");
    let e = (-((m as i128 * m as i128) % qi as i128) * inv as i128).rem_euclid(qi as i128);
    Ok(gauss_sum(1, 0, q)? * jacobi(a, q) as f64 * unit_phase(e as f64 / q as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharSumKind {
    Gauss,
    Kloosterman,
    Salie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharSumParams {
    pub a: i64,
    pub b: i64,
    pub q: u64,
    pub kind: CharSumKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharSumValue {
    pub value: Complex64,
    /// τ(q)·√q·√gcd(a, b, q).
    pub weil_bound: f64,
}

fn twisted_direct(a: i64, b: i64, q: u64, twist: impl Fn(i64) -> i32) -> Complex64 {
    let qi = q as i64;
    let terms = (0..qi).filter(|&x| gcd(x as u64, q) == 1).map(|x| {
        let inv = mod_inv(x, qi).unwrap_or(0);
        let e = ((a as i128 * x as i128 + b as i128 * inv as i128).rem_euclid(qi as i128)) as f64;
        unit_phase(e / q as f64) * twist(x) as f64
    });
    sum_complex(terms, q as usize)
}

/// K(a, b; q) = Σ_{gcd(x,q)=1} e_q(ax + bx̄), by direct summation.
pub fn kloosterman(a: i64, b: i64, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::invalid("modulus must be positive"));
    }
    Ok(twisted_direct(a, b, q, |_| 1))
}

/// Salié sum Σ (x/q) e_q(ax + bx̄) for odd q, assembled from prime powers.
pub fn salie(a: i64, b: i64, q: u64) -> Result<Complex64> {
    if q == 0 || q % 2 == 0 {
        return Err(Error::invalid("Salié sums need odd q"));
    }
    let mut value = Complex64::new(1.0, 0.0);
    for (p, k) in factorize(q) {
        let pk = p.pow(k);
        let rest = q / pk;
        let inv = mod_inv((rest % pk) as i64, pk as i64).expect("coprime factors");
        let (ai, bi) = ((a as i128 * inv as i128) as i64 % pk as i64, (b as i128 * inv as i128) as i64 % pk as i64);
        let local = twisted_direct(ai, bi, pk, |x| jacobi(x, p).pow(k));
        value *= local;
    }
    Ok(value)
}

pub fn kloosterman_salie(params: CharSumParams) -> Result<CharSumValue> {
    let CharSumParams { a, b, q, kind } = params;
    let value = match kind {
        CharSumKind::Gauss => gauss_sum(a, b, q)?,
        CharSumKind::Kloosterman => kloosterman(a, b, q)?,
        CharSumKind::Salie => salie(a, b, q)?,
    };
    let g = gcd(gcd(a.unsigned_abs(), b.unsigned_abs()), q);
    let weil_bound = divisor_count(q) as f64 * libm::sqrt(q as f64) * libm::sqrt(g as f64);
    Ok(CharSumValue { value, weil_bound })
}

pub fn euler_phi(q: u64) -> u64 {
    totient(q)
}

/// ∫ γ(y/r) e^{2πi((φ + m/q)y + βy²)} dy with γ the unit mollifier.
pub fn oscillatory_j(phi: f64, beta: f64, m: i64, q: u64, r: f64, budget: &Budget) -> Result<Complex64> {
    if !(r > 0.0) || q == 0 {
        return Err(Error::invalid("need r > 0 and q >= 1"));
    }
    let linear = phi + m as f64 / q as f64;
    let oscillations = (linear.abs() + 2.0 * beta.abs() * r) * 2.0 * r;
    let mut n = (16.0 * oscillations) as usize + 32;
    let h = |n: usize| 2.0 * r / n as f64;
    let f = |y: f64| Complex64::from_polar(bump(y / r), 2.0 * PI * (linear * y + beta * y * y));
    budget.charge(n as u64)?;
    let mut acc = ComplexKahan::default();
    for k in 1..n {
        acc.add(f(-r + k as f64 * h(n)));
    }
    let mut sum = acc.value();
    let mut value = sum * h(n);
    loop {
        budget.charge(n as u64)?;
        let mut odd = ComplexKahan::default();
        for k in 0..n {
            odd.add(f(-r + (2 * k + 1) as f64 * h(2 * n)));
        }
        sum += odd.value();
        n *= 2;
        let next = sum * h(n);
        if (next - value).norm() <= 1e-10 * next.norm().max(1e-4 * r) {
            return Ok(next);
        }
        value = next;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixCheck {
    pub d: usize,
    pub energies: Vec<u64>,
    /// Cap size r = R^{r_exponent}.
    pub r_exponent: f64,
    pub centers: CapCenters,
}

/// Cap-count bound shape: r³/R + r^{3/2} in d = 4, r⁴/R + r² in d = 5.
pub fn appendix_formula(d: usize, radius: f64, r: f64) -> Result<f64> {
    match d {
        4 => Ok(r * r * r / radius + libm::pow(r, 1.5)),
        5 => Ok(r * r * r * r / radius + r * r),
        _ => Err(Error::invalid("appendix formula is stated for d = 4 and d = 5")),
    }
}

/// Largest observed cap count against the appendix bound shape.
pub fn appendix_cap_check(cfg: &AppendixCheck, budget: &Budget) -> Result<ExperimentReport> {
    appendix_formula(cfg.d, 1.0, 1.0)?;
    let mut report = ExperimentReport::new("appendix_cap_check", &["E", "R", "r", "points", "count", "formula", "ratio"]);
    report.set_config("d", cfg.d);
    report.set_config("r_exponent", cfg.r_exponent);
    report.set_config("centers", match cfg.centers {
        CapCenters::Points => "points",
        CapCenters::PointsAndMidpoints => "points_and_midpoints",
    });
    let mut ratios = Vec::new();
    for &e in &cfg.energies {
        let set = enumerate_sphere(cfg.d, e, budget)?;
        if set.is_empty() {
            continue;
        }
        let radius = set.radius();
        let r = libm::pow(radius, cfg.r_exponent);
        let count = max_cap_count(&set, r, cfg.centers, budget)?.count;
        let formula = appendix_formula(cfg.d, radius, r)?;
        let ratio = count as f64 / formula;
        ratios.push(ratio);
        report.push_row(vec![
            Value::from(e),
            Value::from(radius),
            Value::from(r),
            Value::from(set.len()),
            Value::from(count),
            Value::from(formula),
            Value::from(ratio),
        ])?;
    }
    if !ratios.is_empty() {
        report.set_summary("max_ratio", ratios.iter().copied().fold(0.0, f64::max));
        report.set_summary("min_ratio", ratios.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn singleton_sum_has_unit_modulus() {
        let b = Budget::default();
        let inst = ExpSumInstance::new(1e4, 0.5, vec![0.03], vec![0.07]).unwrap();
        assert!((bilinear_sum(&inst, &b).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn instance_validation() {
        assert!(ExpSumInstance::new(1e4, 1.0, vec![0.0, 0.001], vec![0.0]).is_err());
        assert!(ExpSumInstance::new(1e4, 1.0, vec![0.5], vec![0.0]).is_err());
        let g = ExpSumInstance::full_grid(1e6, 0.5).unwrap();
        assert_eq!(g.s().len(), 64);
        assert!(g.s().len() as f64 <= libm::pow(1e6, 0.3) + 1.0);
    }

    #[test]
    fn conjugate_kernel_is_exact() {
        let b = Budget::default();
        let inst = ExpSumInstance::random(1e6, 0.7, &mut stream(1)).unwrap();
        assert_eq!(bilinear_sum_conjugate(&inst, &b).unwrap(), bilinear_sum(&inst, &b).unwrap().conj());
    }

    #[test]
    fn pair_measure_basics() {
        let b = Budget::default();
        let single = pair_measure(&[0.01], 1e4, &b).unwrap();
        assert_eq!(single.atoms.len(), 1);
        assert_eq!(single.multiplicity([0.0, 0.0]), 1);
        let s = ExpSumInstance::grid_points(1e6);
        let mu = pair_measure(&s, 1e6, &b).unwrap();
        assert_eq!(mu.total_mass(), (s.len() * s.len()) as u64);
        for ((k1, k2), (_, m)) in &mu.atoms {
            assert_eq!(mu.atoms[&(-k1, -k2)].1, *m);
        }
    }

    #[test]
    fn box_max_matches_brute_force() {
        let b = Budget::default();
        let s = ExpSumInstance::random(1e6, 1.0, &mut stream(5)).unwrap().s().to_vec();
        let mu = pair_measure(&s, 1e6, &b).unwrap();
        let (w1, w2) = (0.05, 0.01);
        let atoms: Vec<_> = mu.atoms.values().copied().collect();
        let mut brute = 0;
        for a in &atoms {
            for c in &atoms {
                let (x, y) = (a.0[0], c.0[1]);
                let n: u64 = atoms
                    .iter()
                    .filter(|p| p.0[0] >= x && p.0[0] < x + w1 && p.0[1] >= y && p.0[1] < y + w2)
                    .map(|p| p.1)
                    .sum();
                brute = brute.max(n);
            }
        }
        assert_eq!(mu.box_max(w1, w2, &b).unwrap(), brute);
    }

    #[test]
    fn exponent_fit_rules() {
        let b = Budget::default();
        let scales = geometric_grid(1e3, 1e6, 6);
        let fit = exponent_fit(&scales, |r| ExpSumInstance::singleton(r, 1.0), &b).unwrap();
        assert!(fit.fit.slope.abs() < 1e-12);
        let narrow = geometric_grid(1e3, 1e4, 4);
        assert!(exponent_fit(&narrow, |r| ExpSumInstance::singleton(r, 1.0), &b).is_err());
        assert!(matches!(
            exponent_fit(&[1e3, 1e3], |r| ExpSumInstance::singleton(r, 1.0), &b),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn gauss_examples() {
        assert!((gauss_sum(1, 0, 1).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(gauss_sum(1, 0, 2).unwrap().norm() < 1e-15);
    }

    #[test]
    fn gauss_modulus_classes() {
        for q in 1..=200u64 {
            let m = gauss_sum(1, 0, q).unwrap().norm();
            let want = match q % 4 {
                2 => 0.0,
                0 => libm::sqrt(2.0 / q as f64),
                _ => 1.0 / libm::sqrt(q as f64),
            };
            assert!((m - want).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn kloosterman_examples() {
        assert!((kloosterman(1, 1, 5).unwrap() - c(0.381966011250105, 0.0)).norm() < 1e-12);
        for q in 1..=200 {
            assert!((kloosterman(0, 0, q).unwrap().re - totient(q) as f64).abs() < 1e-9);
        }
        for p in (2..500).filter(|&p| is_prime(p)) {
            let v = kloosterman_salie(CharSumParams { a: 1, b: 1, q: p, kind: CharSumKind::Kloosterman }).unwrap();
            assert!(v.value.norm() <= 2.0 * libm::sqrt(p as f64));
            assert_eq!(v.weil_bound, 2.0 * libm::sqrt(p as f64));
        }
    }

    #[test]
    fn salie_matches_direct_jacobi_twist() {
        for q in (3..120u64).step_by(2) {
            for (a, b) in [(1, 1), (2, 7), (5, 0), (3, 9)] {
                let direct = twisted_direct(a, b, q, |x| jacobi(x, q));
                assert!((salie(a, b, q).unwrap() - direct).norm() < 1e-9, "q={q} a={a} b={b}");
            }
        }
        assert!(salie(1, 1, 8).is_err());
    }

    #[test]
    fn j_examples() {
        let b = Budget::default();
        let r = 3.0;
        let j = oscillatory_j(0.0, 0.0, 0, 1, r, &b).unwrap();
        let mass: f64 = {
            let n = 200_000;
            (1..n).map(|k| bump(-1.0 + 2.0 * k as f64 / n as f64)).sum::<f64>() * 2.0 / n as f64
        };
        assert!((j.re - r * mass).abs() < 1e-9 && j.im.abs() < 1e-12);
    }

    #[test]
    fn appendix_small_caps_hold_one_point() {
        let cfg = AppendixCheck { d: 4, energies: vec![30, 50], r_exponent: -1.0, centers: CapCenters::PointsAndMidpoints };
        let rep = appendix_cap_check(&cfg, &Budget::default()).unwrap();
        assert!(rep.column_f64("count").unwrap().iter().all(|&c| c == 1.0));
        assert!(rep.summary["max_ratio"].is_finite());
    }

    #[test]
    fn lattice_phase_sum_bounds() {
        let b = Budget::default();
        let patch = SurfacePatch::sphere_cap();
        let set = enumerate_sphere(3, 101, &b).unwrap();
        let empty = FrequencySet::empty(3, 101);
        let z = lattice_phase_sum(&set, &empty, &patch, 2.5, &b).unwrap();
        assert_eq!(z.value, c(0.0, 0.0));
        let s = lattice_phase_sum(&set, &set, &patch, 2.5, &b).unwrap();
        assert!(s.pairs > 0);
        assert!(s.value.norm() <= s.pairs as f64 + 1e-9);
        let covered: usize = s.peeling.dense.len() + s.peeling.layers.iter().map(Vec::len).sum::<usize>();
        assert_eq!(covered, set.len());
        let gap = set.radius();
        for layer in &s.peeling.layers {
            for (i, &p) in layer.iter().enumerate() {
                for &q in &layer[i + 1..] {
                    assert!(dist_sq(set.point(p), set.point(q)) as f64 >= gap);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bilinear_is_bounded_by_term_count(seed in 0u64..10_000, logr in 3.0f64..7.0, q in -2.0f64..2.0) {
            let inst = ExpSumInstance::random(libm::pow(10.0, logr), q, &mut stream(seed)).unwrap();
            let v = bilinear_sum(&inst, &Budget::default()).unwrap();
            prop_assert!(v.norm() <= (inst.s().len() * inst.t().len()) as f64 + 1e-9);
        }

        #[test]
        fn gauss_identity_holds(q in (1u64..400).prop_map(|q| 2 * q + 1), a in -1000i64..1000, m in -1000i64..1000) {
            prop_assume!(gcd(a.unsigned_abs(), q) == 1);
            let lhs = gauss_sum(a, m, q).unwrap();
            let rhs = gauss_identity_rhs(a, m, q).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10);
            prop_assert!(lhs.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn kloosterman_is_real(a in -50i64..50, b in -50i64..50, q in 1u64..300) {
            prop_assert!(kloosterman(a, b, q).unwrap().im.abs() < 1e-10);
        }
    }
}
