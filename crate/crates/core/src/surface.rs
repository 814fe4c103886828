//! Analytic graph patches (x₁, x₂, φ(x₁, x₂)) with a compactly supported
//! weight, and the Fourier transform of the weighted surface measure.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::budget::Budget;
use crate::error::{Error, Result};

/// Polynomial term a·x₁^α·x₂^β.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monomial {
    pub alpha: u32,
    pub beta: u32,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchValue {
    pub phi: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// Graph of x₁² + εx₂² + Σ a_{αβ}x₁^αx₂^β over a disc, weighted by a
/// mollifier of the given width.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePatch {
    epsilon: i8,
    terms: Vec<Monomial>,
    domain_radius: f64,
    bump_width: f64,
    growth: f64,
    cone: f64,
    max_grad: f64,
}

const HESSIAN_TOLERANCE: f64 = 0.1;
const CHECK_GRID: usize = 41;

fn powi(x: f64, n: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

impl SurfacePatch {
    pub fn new(epsilon: i8, terms: Vec<Monomial>, domain_radius: f64, bump_width: f64) -> Result<Self> {
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::invalid("epsilon must be +1 or -1"));
        }
        if !(domain_radius > 0.0) || !(bump_width > 0.0 && bump_width <= domain_radius) {
            return Err(Error::invalid("need 0 < bump_width <= domain_radius"));
        }
        let mut terms = terms;
        terms.retain(|t| t.coeff != 0.0);
        if terms.iter().any(|t| t.alpha + t.beta < 3) {
            return Err(Error::invalid("higher-order terms must have degree at least 3"));
        }
        if terms.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        terms.sort_by_key(|t| (t.alpha, t.beta));
        if terms.windows(2).any(|w| (w[0].alpha, w[0].beta) == (w[1].alpha, w[1].beta)) {
            return Err(Error::invalid("repeated monomial"));
        }
        let growth = terms
            .iter()
            .map(|t| libm::pow(t.coeff.abs(), 1.0 / (t.alpha + t.beta) as f64))
            .fold(0.0, f64::max);
        let mut patch = SurfacePatch { epsilon, terms, domain_radius, bump_width, growth, cone: 0.0, max_grad: 0.0 };
        let mut max_grad: f64 = 0.0;
        for x in patch.disc_grid(domain_radius) {
            let v = patch.eval_unchecked(x);
            let dev = [
                v.hess[0][0] - 2.0,
                v.hess[0][1],
                v.hess[1][0],
                v.hess[1][1] - 2.0 * epsilon as f64,
            ];
            let frob = libm::sqrt(dev.iter().map(|d| d * d).sum());
            if frob > HESSIAN_TOLERANCE * 2.0 {
                return Err(Error::invalid(alloc::format!(
                    "hessian deviates by {frob} at {x:?}; shrink the domain radius"
                )));
            }
            max_grad = max_grad.max(libm::hypot(v.grad[0], v.grad[1]));
        }
        patch.max_grad = max_grad;
        patch.cone = patch.find_cone();
        Ok(patch)
    }

    /// x₁² + x₂².
    pub fn paraboloid(radius: f64) -> Self {
        SurfacePatch::new(1, Vec::new(), radius, radius).expect("paraboloid is valid")
    }

    /// x₁² − x₂².
    pub fn saddle(radius: f64) -> Self {
        SurfacePatch::new(-1, Vec::new(), radius, radius).expect("saddle is valid")
    }

    /// Degree-six Taylor polynomial of a sphere of radius 1/2 at its pole.
    pub fn sphere_cap() -> Self {
        let t = |alpha, beta, coeff| Monomial { alpha, beta, coeff };
        let terms = alloc::vec![
            t(4, 0, 1.0),
            t(2, 2, 2.0),
            t(0, 4, 1.0),
            t(6, 0, 2.0),
            t(4, 2, 6.0),
            t(2, 4, 6.0),
            t(0, 6, 2.0),
        ];
        SurfacePatch::new(1, terms, 0.1, 0.1).expect("sphere cap is valid")
    }

    /// Saddle with cubic corrections.
    pub fn tilted_saddle() -> Self {
        let terms = alloc::vec![
            Monomial { alpha: 3, beta: 0, coeff: 0.1 },
            Monomial { alpha: 1, beta: 2, coeff: 0.05 },
        ];
        SurfacePatch::new(-1, terms, 0.2, 0.2).expect("tilted saddle is valid")
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn bump_width(&self) -> f64 {
        self.bump_width
    }

    /// Smallest C with |a_{αβ}| ≤ C^{α+β}.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    /// Largest |∇φ| over the domain.
    pub fn max_slope(&self) -> f64 {
        self.max_grad
    }

    /// Frequencies with |ξ₁|, |ξ₂| < cone·|ξ₃| have a critical point.
    pub fn cone(&self) -> f64 {
        self.cone
    }

    fn disc_grid(&self, radius: f64) -> impl Iterator<Item = [f64; 2]> + '_ {
        let n = CHECK_GRID;
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| {
                let x = [
                    radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0),
                    radius * (2.0 * j as f64 / (n - 1) as f64 - 1.0),
                ];
                (x[0] * x[0] + x[1] * x[1] <= radius * radius).then_some(x)
            })
        })
    }

    pub(crate) fn eval_unchecked(&self, x: [f64; 2]) -> PatchValue {
        let e = self.epsilon as f64;
        let mut phi = x[0] * x[0] + e * x[1] * x[1];
        let mut grad = [2.0 * x[0], 2.0 * e * x[1]];
        let mut hess = [[2.0, 0.0], [0.0, 2.0 * e]];
        for t in &self.terms {
            let (a, b) = (t.alpha, t.beta);
            let pa = |k: u32| if a >= k { powi(x[0], a - k) } else { 0.0 };
            let pb = |k: u32| if b >= k { powi(x[1], b - k) } else { 0.0 };
            let (af, bf) = (a as f64, b as f64);
            phi += t.coeff * pa(0) * pb(0);
            grad[0] += t.coeff * af * pa(1) * pb(0);
            grad[1] += t.coeff * bf * pa(0) * pb(1);
            hess[0][0] += t.coeff * af * (af - 1.0) * pa(2) * pb(0);
            hess[1][1] += t.coeff * bf * (bf - 1.0) * pa(0) * pb(2);
            let mixed = t.coeff * af * bf * pa(1) * pb(1);
            hess[0][1] += mixed;
            hess[1][0] += mixed;
        }
        PatchValue { phi, grad, hess }
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<PatchValue> {
        if libm::hypot(x[0], x[1]) > self.domain_radius {
            return Err(Error::OutOfDomain(x[0], x[1]));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Mollifier exp(−1/(1−(|x|/ρ)²)) supported on |x| < ρ.
    pub fn bump(&self, x: [f64; 2]) -> f64 {
        bump(libm::hypot(x[0], x[1]) / self.bump_width)
    }

    /// ∫ω, by Simpson's rule in the radial variable.
    pub fn bump_mass(&self) -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let s: f64 = (1..n)
            .map(|k| {
                let t = k as f64 * h;
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                w * bump(t) * t
            })
            .sum();
        2.0 * PI * self.bump_width * self.bump_width * s * h / 3.0
    }

    fn newton(&self, target: [f64; 2]) -> Result<[f64; 2]> {
        let e = self.epsilon as f64;
        let mut x = [-target[0] / 2.0, -e * target[1] / 2.0];
        let scale = 1.0 + libm::hypot(target[0], target[1]);
        let mut last_step = f64::INFINITY;
        for _ in 0..50 {
            let v = self.eval_unchecked(x);
            let g = [v.grad[0] + target[0], v.grad[1] + target[1]];
            let h = v.hess;
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::NoConvergence(50));
            }
            let step = [(h[1][1] * g[0] - h[0][1] * g[1]) / det, (h[0][0] * g[1] - h[1][0] * g[0]) / det];
            let size = libm::hypot(step[0], step[1]);
            let residual = libm::hypot(g[0], g[1]);
            if residual <= 1e-12 * scale && size >= last_step {
                return Ok(x);
            }
            x = [x[0] - step[0], x[1] - step[1]];
            last_step = size;
            if residual == 0.0 {
                return Ok(x);
            }
            if libm::hypot(x[0], x[1]) > 4.0 * self.domain_radius {
                return Err(Error::NoConvergence(50));
            }
        }
        let v = self.eval_unchecked(x);
        if libm::hypot(v.grad[0] + target[0], v.grad[1] + target[1]) <= 1e-12 * scale {
            Ok(x)
        } else {
            Err(Error::NoConvergence(50))
        }
    }

    fn cone_ok(&self, c: f64) -> bool {
        let n = 9;
        for i in 0..n {
            for j in 0..n {
                let t = [c * (2.0 * i as f64 / (n - 1) as f64 - 1.0), c * (2.0 * j as f64 / (n - 1) as f64 - 1.0)];
                match self.newton(t) {
                    Ok(x) if libm::hypot(x[0], x[1]) < self.bump_width => {}
                    _ => return false,
                }
            }
        }
        true
    }

    fn find_cone(&self) -> f64 {
        let (mut lo, mut hi) = (0.0, 4.0 * self.domain_radius);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.cone_ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn check_cone(&self, xi: [f64; 3]) -> Result<[f64; 2]> {
        let lim = self.cone * xi[2].abs();
        if !(xi[0].abs() < lim && xi[1].abs() < lim) {
            return Err(Error::OutsideCone { xi, cone: self.cone });
        }
        Ok([xi[0] / xi[2], xi[1] / xi[2]])
    }
}

/// Standard mollifier on the unit interval, evaluated at t = |x|/ρ.
pub fn bump(t: f64) -> f64 {
    let t = t.abs();
    if t >= 1.0 {
        0.0
    } else {
        libm::exp(-1.0 / (1.0 - t * t))
    }
}

pub fn patch_eval(patch: &SurfacePatch, x: [f64; 2]) -> Result<PatchValue> {
    patch.eval(x)
}

/// Unique x with ξ₁ + ξ₃∂₁φ(x) = 0 and ξ₂ + ξ₃∂₂φ(x) = 0.
pub fn critical_point(patch: &SurfacePatch, xi: [f64; 3]) -> Result<[f64; 2]> {
    let target = patch.check_cone(xi)?;
    let x = patch.newton(target)?;
    patch.eval(x)?;
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub xi: [f64; 3],
    pub critical_point: [f64; 2],
    pub psi: f64,
    /// Signature of the phase hessian ξ₃·H at the critical point.
    pub hessian_signature: i32,
    /// det H of the patch at the critical point.
    pub hessian_det: f64,
}

fn signature(h: [[f64; 2]; 2]) -> i32 {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let tr = h[0][0] + h[1][1];
    if det < 0.0 {
        0
    } else if tr > 0.0 {
        2
    } else {
        -2
    }
}

pub fn phase_psi(patch: &SurfacePatch, xi: [f64; 3]) -> Result<PhaseResult> {
    let x = critical_point(patch, xi)?;
    let v = patch.eval(x)?;
    let psi = x[0] * xi[0] + x[1] * xi[1] + v.phi * xi[2];
    let sig = signature(v.hess) * if xi[2] < 0.0 { -1 } else { 1 };
    let det = v.hess[0][0] * v.hess[1][1] - v.hess[0][1] * v.hess[1][0];
    Ok(PhaseResult { xi, critical_point: x, psi, hessian_signature: sig, hessian_det: det })
}

/// Leading stationary-phase term of ∫e^{i(x₁ξ₁+x₂ξ₂+φξ₃)}ω dx.
pub fn sigma_hat_stationary(patch: &SurfacePatch, xi: [f64; 3]) -> Result<Complex64> {
    let norm = libm::sqrt(xi.iter().map(|c| c * c).sum());
    if norm < 10.0 {
        return Err(Error::invalid("stationary phase needs |xi| >= 10"));
    }
    let p = phase_psi(patch, xi)?;
    let amp = 2.0 * PI / xi[2].abs() / libm::sqrt(p.hessian_det.abs()) * patch.bump(p.critical_point);
    Ok(Complex64::from_polar(amp, PI * p.hessian_signature as f64 / 4.0 + p.psi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Initial samples per oscillation of the phase; at least 16.
    pub samples_per_oscillation: f64,
    /// Stop when one doubling moves the result by less than this, relative.
    pub rel_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { samples_per_oscillation: 16.0, rel_tol: 1e-6 }
    }
}

/// Nested tensor trapezoid sums over [−ρ, ρ]² for a compactly supported
/// integrand, refined by doubling until successive levels agree.
pub(crate) fn adaptive_square<F>(half_width: f64, n0: usize, rel_tol: f64, floor: f64, budget: &Budget, f: F) -> Result<Complex64>
where
    F: Fn(f64, f64, usize, usize, usize) -> Complex64,
{
    let mut n = n0.max(8);
    budget.charge(((n + 1) * (n + 1)) as u64)?;
    let mut sum = level_sum(half_width, n, false, &f);
    let mut value = sum * (2.0 * half_width / n as f64).powi(2);
    loop {
        let n2 = 2 * n;
        budget.charge(((n2 + 1) * (n2 + 1) * 3 / 4) as u64)?;
        sum += level_sum(half_width, n2, true, &f);
        let next = sum * (2.0 * half_width / n2 as f64).powi(2);
        let diff = (next - value).norm();
        if diff <= rel_tol * next.norm().max(floor) {
            return Ok(next);
        }
        value = next;
        n = n2;
    }
}

fn level_sum<F>(half_width: f64, n: usize, only_new: bool, f: &F) -> Complex64
where
    F: Fn(f64, f64, usize, usize, usize) -> Complex64,
{
    let h = 2.0 * half_width / n as f64;
    let mut acc = crate::stats::ComplexKahan::default();
    for i in 1..n {
        let x1 = -half_width + i as f64 * h;
        let row_new = only_new && i % 2 == 1;
        for j in 1..n {
            if only_new && !row_new && j % 2 == 0 {
                continue;
            }
            let x2 = -half_width + j as f64 * h;
            acc.add(f(x1, x2, i, j, n));
        }
    }
    acc.value()
}

/// ∫ e^{i(x₁ξ₁+x₂ξ₂+φ(x)ξ₃)} ω(x) dx by adaptive quadrature.
pub fn sigma_hat_direct(patch: &SurfacePatch, xi: [f64; 3], settings: QuadratureSettings, budget: &Budget) -> Result<Complex64> {
    if settings.samples_per_oscillation < 16.0 {
        return Err(Error::invalid("need at least 16 samples per oscillation"));
    }
    let rho = patch.bump_width;
    let grad = libm::hypot(xi[0], xi[1]) + xi[2].abs() * patch.max_grad;
    let oscillations = grad * 2.0 * rho / (2.0 * PI);
    let n0 = libm::ceil(settings.samples_per_oscillation * oscillations.max(2.0)) as usize;
    let floor = 1e-10 * patch.bump_mass();
    adaptive_square(rho, n0, settings.rel_tol, floor, budget, |x1, x2, _, _, _| {
        let w = patch.bump([x1, x2]);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let phi = patch.eval_unchecked([x1, x2]).phi;
        Complex64::from_polar(w, x1 * xi[0] + x2 * xi[1] + phi * xi[2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic() -> SurfacePatch {
        SurfacePatch::new(1, alloc::vec![Monomial { alpha: 3, beta: 0, coeff: 0.05 }], 0.5, 0.5).unwrap()
    }

    #[test]
    fn paraboloid_values() {
        let p = SurfacePatch::paraboloid(0.5);
        let v = p.eval([0.1, 0.2]).unwrap();
        assert!((v.phi - 0.05).abs() < 1e-16);
        assert_eq!(v.hess, [[2.0, 0.0], [0.0, 2.0]]);
        assert!(p.eval([0.5, 0.5]).is_err());
    }

    #[test]
    fn hessian_at_origin_is_diagonal() {
        for p in [SurfacePatch::sphere_cap(), SurfacePatch::tilted_saddle(), cubic()] {
            let v = p.eval([0.0, 0.0]).unwrap();
            assert_eq!(v.hess, [[2.0, 0.0], [0.0, 2.0 * p.epsilon() as f64]]);
        }
    }

    #[test]
    fn oversized_domain_is_rejected() {
        let t = alloc::vec![Monomial { alpha: 3, beta: 0, coeff: 1.0 }];
        assert!(SurfacePatch::new(1, t, 1.0, 1.0).is_err());
        let low = alloc::vec![Monomial { alpha: 1, beta: 1, coeff: 1.0 }];
        assert!(SurfacePatch::new(1, low, 0.1, 0.1).is_err());
    }

    #[test]
    fn critical_point_examples() {
        let p = SurfacePatch::paraboloid(0.5);
        let x = critical_point(&p, [2.0, 4.0, 10.0]).unwrap();
        assert!((x[0] + 0.1).abs() < 1e-15 && (x[1] + 0.2).abs() < 1e-15);
        assert!(matches!(critical_point(&p, [10.0, 0.0, 1.0]), Err(Error::OutsideCone { .. })));
    }

    #[test]
    fn critical_point_matches_grid_search() {
        let p = cubic();
        let xi = [1.0, 1.0, 20.0];
        let x = critical_point(&p, xi).unwrap();
        let n = 2000;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=n {
            for j in 0..=n {
                let y = [-0.1 + 0.2 * i as f64 / n as f64, -0.1 + 0.2 * j as f64 / n as f64];
                let v = p.eval(y).unwrap();
                let g = libm::hypot(xi[0] + xi[2] * v.grad[0], xi[1] + xi[2] * v.grad[1]);
                if g < best.0 {
                    best = (g, y);
                }
            }
        }
        assert!(libm::hypot(x[0] - best.1[0], x[1] - best.1[1]) < 1e-4);
    }

    #[test]
    fn psi_closed_forms() {
        let p = SurfacePatch::paraboloid(0.5);
        assert!((phase_psi(&p, [1.0, 1.0, 10.0]).unwrap().psi + 0.05).abs() < 1e-12);
        let s = SurfacePatch::saddle(0.5);
        assert!(phase_psi(&s, [1.0, 1.0, 10.0]).unwrap().psi.abs() < 1e-12);
    }

    #[test]
    fn signature_follows_curvature_and_orientation() {
        let p = SurfacePatch::paraboloid(0.5);
        assert_eq!(phase_psi(&p, [0.5, 0.5, 10.0]).unwrap().hessian_signature, 2);
        assert_eq!(phase_psi(&p, [0.5, 0.5, -10.0]).unwrap().hessian_signature, -2);
        let s = SurfacePatch::saddle(0.5);
        assert_eq!(phase_psi(&s, [0.5, 0.5, 10.0]).unwrap().hessian_signature, 0);
    }

    #[test]
    fn stationary_phase_offsets() {
        let p = SurfacePatch::paraboloid(0.5);
        let z = sigma_hat_stationary(&p, [0.0, 0.0, 40.0]).unwrap();
        assert!(z.re.abs() < 1e-15 && z.im > 0.0);
        let s = SurfacePatch::saddle(0.5);
        let z = sigma_hat_stationary(&s, [0.0, 0.0, 40.0]).unwrap();
        assert!(z.im.abs() < 1e-15 && z.re > 0.0);
        assert!(sigma_hat_stationary(&p, [0.0, 0.0, 5.0]).is_err());
        assert!(sigma_hat_stationary(&p, [100.0, 0.0, 40.0]).is_err());
    }

    #[test]
    fn direct_transform_at_zero_is_mass() {
        let p = SurfacePatch::sphere_cap();
        let z = sigma_hat_direct(&p, [0.0; 3], QuadratureSettings::default(), &Budget::default()).unwrap();
        assert!((z.re - p.bump_mass()).abs() < 1e-9 * p.bump_mass());
        assert_eq!(z.im, 0.0);
    }

    #[test]
    fn direct_transform_is_conjugate_symmetric() {
        let p = cubic();
        let xi = [3.0, -2.0, 25.0];
        let b = Budget::default();
        let a = sigma_hat_direct(&p, xi, QuadratureSettings::default(), &b).unwrap();
        let c = sigma_hat_direct(&p, [-3.0, 2.0, -25.0], QuadratureSettings::default(), &b).unwrap();
        assert!((a - c.conj()).norm() < 1e-12 * a.norm().max(1e-3));
    }

    #[test]
    fn direct_and_stationary_agree_at_moderate_frequency() {
        let p = SurfacePatch::paraboloid(0.5);
        let xi = [1.0, 1.0, 40.0];
        let d = sigma_hat_direct(&p, xi, QuadratureSettings::default(), &Budget::default()).unwrap();
        let s = sigma_hat_stationary(&p, xi).unwrap();
        let size = libm::sqrt(xi.iter().map(|c| c * c).sum());
        assert!((d - s).norm() < 10.0 / (size * size), "{d} vs {s}");
    }

    #[test]
    fn quadrature_respects_budget() {
        let p = SurfacePatch::paraboloid(0.5);
        let err = sigma_hat_direct(&p, [0.0, 0.0, 500.0], QuadratureSettings::default(), &Budget::new(1000)).unwrap_err();
        assert!(err.is_budget());
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(a30 in -0.05f64..0.05, a21 in -0.05f64..0.05, a04 in -0.04f64..0.04, x in -0.3f64..0.3, y in -0.3f64..0.3) {
            let t = alloc::vec![
                Monomial { alpha: 3, beta: 0, coeff: a30 },
                Monomial { alpha: 2, beta: 1, coeff: a21 },
                Monomial { alpha: 0, beta: 4, coeff: a04 },
            ];
            let p = SurfacePatch::new(1, t, 0.45, 0.45).unwrap();
            prop_assume!(x * x + y * y < 0.16);
            let h = 1e-6;
            let v = p.eval([x, y]).unwrap();
            let fx = (p.eval([x + h, y]).unwrap().phi - p.eval([x - h, y]).unwrap().phi) / (2.0 * h);
            let fy = (p.eval([x, y + h]).unwrap().phi - p.eval([x, y - h]).unwrap().phi) / (2.0 * h);
            prop_assert!((fx - v.grad[0]).abs() <= 1e-6 * v.grad[0].abs().max(1e-3));
            prop_assert!((fy - v.grad[1]).abs() <= 1e-6 * v.grad[1].abs().max(1e-3));
            let gx = (p.eval([x + h, y]).unwrap().grad[1] - p.eval([x - h, y]).unwrap().grad[1]) / (2.0 * h);
            prop_assert!((gx - v.hess[0][1]).abs() < 1e-6);
        }

        #[test]
        fn psi_is_homogeneous(u in -0.2f64..0.2, w in -0.2f64..0.2, s in 5.0f64..500.0, t in 2.0f64..10.0) {
            for p in [SurfacePatch::sphere_cap(), SurfacePatch::tilted_saddle(), cubic()] {
                let c = p.cone() * 0.9;
                let xi = [u * c * s * 4.0, w * c * s * 4.0, s];
                let a = phase_psi(&p, xi).unwrap();
                let b = phase_psi(&p, [t * xi[0], t * xi[1], t * xi[2]]).unwrap();
                prop_assert!((b.psi / t - a.psi).abs() <= 1e-10 * a.psi.abs().max(1e-300) + 1e-15 * s);
                let n = libm::sqrt(xi.iter().map(|c| c * c).sum());
                let v = p.eval(a.critical_point).unwrap();
                let g = libm::hypot(xi[0] + xi[2] * v.grad[0], xi[1] + xi[2] * v.grad[1]);
                prop_assert!(g <= 1e-9 * n);
            }
        }
    }
}
