use toral_core::stats::log_log_fit;
use toral_core::surface::{phase_psi, SurfacePatch};

fn psi(patch: &SurfacePatch, xi: [f64; 3]) -> f64 {
    phase_psi(patch, xi).unwrap().psi
}

fn hessian(patch: &SurfacePatch, xi: [f64; 3]) -> [[f64; 3]; 3] {
    let norm = (xi.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let h = 1e-4 * norm;
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = xi;
        y[i] += si * h;
        y[j] += sj * h;
        psi(patch, y)
    };
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0) + shifted(i, -1.0, j, -1.0))
                / (4.0 * h * h)
        })
    })
}

fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn apply(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    core::array::from_fn(|i| (0..3).map(|j| m[i][j] * v[j]).sum())
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Eigenvalues of the hessian restricted to the plane orthogonal to ξ.
fn transverse_eigenvalues(m: &[[f64; 3]; 3], xi: [f64; 3]) -> [f64; 2] {
    let n = dot(xi, xi).sqrt();
    let w = [xi[0] / n, xi[1] / n, xi[2] / n];
    let seed = if w[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let k = dot(seed, w);
    let mut u = [seed[0] - k * w[0], seed[1] - k * w[1], seed[2] - k * w[2]];
    let un = dot(u, u).sqrt();
    u.iter_mut().for_each(|c| *c /= un);
    let v = [w[1] * u[2] - w[2] * u[1], w[2] * u[0] - w[0] * u[2], w[0] * u[1] - w[1] * u[0]];
    let (a, b, d) = (dot(u, apply(m, u)), dot(u, apply(m, v)), dot(v, apply(m, v)));
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mid - rad, mid + rad]
}

fn patches() -> Vec<SurfacePatch> {
    vec![SurfacePatch::sphere_cap(), SurfacePatch::tilted_saddle(), SurfacePatch::paraboloid(0.5), SurfacePatch::saddle(0.5)]
}

#[test]
fn xi_is_a_null_direction_of_the_phase_hessian() {
    for p in patches() {
        let c = 0.5 * p.cone();
        for xi in [[0.3 * c, -0.2 * c, 1.0], [-0.1 * c, 0.4 * c, 1.0], [0.2 * c, 0.2 * c, -1.0]] {
            let xi = xi.map(|v| v * 80.0);
            let m = hessian(&p, xi);
            let n = dot(xi, xi).sqrt();
            let r = apply(&m, xi);
            assert!(dot(r, r).sqrt() <= 1e-6 * frobenius(&m) * n, "{xi:?}");
        }
    }
}

#[test]
fn transverse_curvatures_scale_inversely_with_frequency() {
    for p in patches() {
        let c = 0.5 * p.cone();
        let base = [0.25 * c, -0.15 * c, 1.0];
        let scales = [20.0, 40.0, 80.0, 160.0, 320.0];
        let mut first = Vec::new();
        let mut second = Vec::new();
        for s in scales {
            let xi = base.map(|v| v * s);
            let ev = transverse_eigenvalues(&hessian(&p, xi), xi);
            assert_eq!(ev[0].signum() == ev[1].signum(), p.epsilon() == 1, "{ev:?}");
            first.push(ev[0].abs());
            second.push(ev[1].abs());
        }
        for ys in [&first, &second] {
            let fit = log_log_fit(&scales, ys).unwrap();
            assert!((fit.slope + 1.0).abs() <= 0.1, "slope {}", fit.slope);
        }
    }
}

#[test]
fn homogeneity_over_integer_dilations() {
    for p in patches() {
        let c = 0.5 * p.cone();
        let xi = [0.3 * c * 30.0, -0.2 * c * 30.0, 30.0];
        let base = psi(&p, xi);
        for t in [2.0, 5.0, 10.0] {
            let scaled = psi(&p, xi.map(|v| v * t));
            assert!((scaled / t - base).abs() <= 1e-10 * base.abs());
        }
    }
}
