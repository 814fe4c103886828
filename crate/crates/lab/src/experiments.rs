//! Experiment implementations behind the registry.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use toral_core::arith::{gcd, is_prime, isqrt, totient};
use toral_core::caps::{
    cell_mean_square, max_points_on_arc, small_cap_rank_violations, CapCenters,
};
use toral_core::diophantine::{approx_error, dirichlet_pair, hybrid_approx, slice_direction};
use toral_core::expsum::{
    appendix_cap_check, bilinear_sum, gauss_identity_rhs, gauss_sum, geometric_grid, kloosterman,
    lattice_phase_sum, AppendixCheck, ExpSumInstance,
};
use toral_core::lattice::{
    build_ideal_separated_set, classify_arithmetic, enumerate_sphere, enumerate_sphere_naive, separation_scan,
    ulp,
};
use toral_core::nodal::{
    barrier_profile, calibrate_crofton, count_domains, crofton_estimate, crofton_raw, curve_crossings,
    intersection_witness, sample_random, RandomModel, Square, CALIBRATION_SQUARE, CROFTON_CONSTANT,
};
use toral_core::report::{ExperimentReport, Value};
use toral_core::restriction::{l4_lower_bound_witness, ratio_sweep, CurveSpec, Eigenfunction, RatioSweep, Sampler};
use toral_core::rng::{derive_seed, stream};
use toral_core::stats::{log_log_fit, mean};
use toral_core::surface::{sigma_hat_direct, sigma_hat_stationary, QuadratureSettings, SurfacePatch};
use toral_core::{Budget, Complex64};

use crate::error::{LabError, Result};
use crate::formats::read_patch;
use crate::registry::{Experiment, Key, Kind, Params};

const CURVES: Kind = Kind::Choice(&["circle", "flat_geodesic", "elliptic", "hyperbolic"]);
const SURFACES: Kind = Kind::Choice(&["paraboloid", "saddle", "sphere_cap", "tilted_saddle", "file"]);
const SAMPLERS: Kind = Kind::Choice(&["uniform_phase", "single_cluster", "flat_counterexample"]);

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "arithmetic_scan",
        about: "Point counts and primitive-point existence for every E up to a bound",
        keys: &[
            Key::optional("d", Kind::Int, "3", "dimension"),
            Key::optional("e_max", Kind::Int, "5000", "largest energy"),
        ],
        seeded: false,
        run: arithmetic_scan,
    },
    Experiment {
        name: "oracle_check",
        about: "Recursive enumeration against the full-box oracle on random (d, E)",
        keys: &[
            Key::optional("samples", Kind::Int, "200", "number of random (d, E) pairs"),
            Key::optional("d_max", Kind::Int, "5", "largest dimension drawn"),
            Key::optional("e_max", Kind::Int, "2000", "largest energy drawn"),
        ],
        seeded: true,
        run: oracle_check,
    },
    Experiment {
        name: "separation_scan",
        about: "Minimum pairwise distance on circles and the exceptional energies",
        keys: &[
            Key::required("d", Kind::Int, "dimension (must be 2)"),
            Key::required("N", Kind::Int, "largest energy"),
            Key::optional("eps", Kind::Real, "0.3", "exceptional-set exponent"),
        ],
        seeded: false,
        run: separation,
    },
    Experiment {
        name: "jarnik_scan",
        about: "Largest number of lattice points on a short circle arc",
        keys: &[
            Key::optional("e_max", Kind::Int, "10000", "largest energy"),
            Key::optional("c", Kind::Real, "0.5", "arc length is c·λ^{1/3}"),
        ],
        seeded: false,
        run: jarnik_scan,
    },
    Experiment {
        name: "coplanarity_scan",
        about: "Affinely independent quadruples in small caps of the 2-sphere",
        keys: &[
            Key::optional("e_max", Kind::Int, "2000", "largest energy"),
            Key::optional("c", Kind::Real, "0.5", "cap size is c·R^{1/4}"),
        ],
        seeded: false,
        run: coplanarity_scan,
    },
    Experiment {
        name: "mean_square_fit",
        about: "Sum of squared cell counts at cell size √R and its growth exponent",
        keys: &[
            Key::optional("d", Kind::Int, "3", "dimension"),
            Key::optional("e_min", Kind::Int, "500", "smallest energy"),
            Key::optional("e_max", Kind::Int, "5000", "largest energy"),
            Key::optional("stride", Kind::Int, "1", "energy step"),
        ],
        seeded: false,
        run: mean_square_fit,
    },
    Experiment {
        name: "appendix_cap_check",
        about: "Largest cap counts against the appendix bound shape in d = 4, 5",
        keys: &[
            Key::optional("d", Kind::Choice(&["4", "5"]), "4", "dimension"),
            Key::optional("e_min", Kind::Int, "1000", "smallest energy"),
            Key::optional("e_max", Kind::Int, "5000", "largest energy"),
            Key::optional("e_step", Kind::Int, "500", "energy step"),
            Key::optional("r_exponent", Kind::Real, "0.5", "cap size is R^{r_exponent}"),
            Key::optional("centers", Kind::Choice(&["points", "points_and_midpoints"]), "points", "candidate cap centres"),
        ],
        seeded: false,
        run: appendix,
    },
    Experiment {
        name: "ratio_sweep",
        about: "Restricted L² mass over the global L² mass for sampled eigenfunctions",
        keys: &[
            Key::optional("d", Kind::Int, "2", "dimension"),
            Key::optional("e_min", Kind::Int, "1", "smallest energy"),
            Key::optional("e_max", Kind::Int, "200", "largest energy"),
            Key::optional("sampler", SAMPLERS, "uniform_phase", "coefficient distribution"),
            Key::optional("trials", Kind::Int, "1", "samples per energy"),
            Key::optional("curve", CURVES, "circle", "hypersurface"),
            Key::optional("separation_eps", Kind::Real, "0.3", "exceptional-set exponent in d = 2"),
        ],
        seeded: true,
        run: ratio,
    },
    Experiment {
        name: "l4_witness",
        about: "L⁴ mass of the uniform eigenfunction on a curve through the origin",
        keys: &[
            Key::optional("curve", CURVES, "circle", "curve"),
            Key::required("energies", Kind::IntList, "energies"),
        ],
        seeded: false,
        run: l4_witness,
    },
    Experiment {
        name: "hybrid_approx_sweep",
        about: "Hybrid simultaneous approximation against the brute-force best",
        keys: &[
            Key::optional("samples", Kind::Int, "500", "random pairs ζ"),
            Key::optional("q_values", Kind::IntList, "64,128,256,512", "scales Q"),
            Key::optional("gamma", Kind::Real, "0.05", "exponent γ"),
        ],
        seeded: true,
        run: hybrid_sweep,
    },
    Experiment {
        name: "slice_direction_sweep",
        about: "Integer slice directions and section counts for random caps",
        keys: &[
            Key::optional("samples", Kind::Int, "200", "random unit vectors"),
            Key::optional("R", Kind::Real, "1e4", "sphere radius"),
            Key::optional("r", Kind::Real, "100", "cap size"),
            Key::optional("delta", Kind::Real, "0.05", "exponent δ"),
        ],
        seeded: true,
        run: slice_sweep,
    },
    Experiment {
        name: "stationary_phase_decay",
        about: "Direct surface transform against its leading stationary-phase term",
        keys: &[
            Key::optional("surface", SURFACES, "paraboloid", "patch"),
            Key::optional("radius", Kind::Real, "0.5", "domain radius for paraboloid and saddle"),
            Key::optional("patch_file", Kind::Text, "", "patch description when surface = file"),
            Key::optional("rays", Kind::Int, "20", "number of rays"),
            Key::optional("xi_min", Kind::Real, "20", "smallest |ξ|"),
            Key::optional("xi_max", Kind::Real, "200", "largest |ξ|"),
            Key::optional("points", Kind::Int, "8", "frequencies per ray"),
        ],
        seeded: true,
        run: stationary_decay,
    },
    Experiment {
        name: "crofton_calibration",
        about: "Kinematic constant fitted on sin(2πkx₁) and the frozen constant's error",
        keys: &[
            Key::optional("k_min", Kind::Int, "2", "smallest frequency"),
            Key::optional("k_max", Kind::Int, "10", "largest frequency"),
            Key::optional("lines", Kind::Int, "10000", "random lines"),
        ],
        seeded: true,
        run: crofton_calibration,
    },
    Experiment {
        name: "crofton_length",
        about: "Nodal length of random eigenfunctions in a unit square",
        keys: &[
            Key::required("energies", Kind::IntList, "energies (d = 2)"),
            Key::optional("samples", Kind::Int, "1", "random functions per energy"),
            Key::optional("lines", Kind::Int, "1000", "random lines"),
        ],
        seeded: true,
        run: crofton_length,
    },
    Experiment {
        name: "crossing_scaling",
        about: "Nodal crossings of random eigenfunctions along a closed curve",
        keys: &[
            Key::optional("e_min", Kind::Int, "1", "smallest energy"),
            Key::optional("e_max", Kind::Int, "2000", "largest energy"),
            Key::optional("min_points", Kind::Int, "8", "skip energies with fewer lattice points"),
            Key::optional("samples", Kind::Int, "1", "random functions per energy"),
            Key::optional("curve", Kind::Choice(&["circle"]), "circle", "curve"),
        ],
        seeded: true,
        run: crossing_scaling,
    },
    Experiment {
        name: "nodal_scaling",
        about: "Nodal domain counts of random eigenfunctions against λ",
        keys: &[
            Key::optional("d", Kind::Choice(&["2", "3"]), "2", "dimension"),
            Key::required("energies", Kind::IntList, "energies"),
            Key::optional("samples", Kind::Int, "2", "random functions per energy"),
            Key::optional("grid_factor", Kind::Real, "10", "grid points per unit λ"),
        ],
        seeded: true,
        run: nodal_scaling,
    },
    Experiment {
        name: "intersection_scan",
        about: "Zeros of random eigenfunctions on a curve or patch",
        keys: &[
            Key::optional("curve", CURVES, "circle", "hypersurface"),
            Key::required("energies", Kind::IntList, "energies"),
            Key::optional("samples", Kind::Int, "1", "random functions per energy"),
        ],
        seeded: true,
        run: intersection_scan,
    },
    Experiment {
        name: "barrier_scan",
        about: "Barrier function at the origin and its first radial minimum",
        keys: &[
            Key::optional("e_min", Kind::Int, "101", "smallest energy"),
            Key::optional("count", Kind::Int, "20", "number of admissible energies"),
        ],
        seeded: false,
        run: barrier_scan,
    },
    Experiment {
        name: "expsum_fit",
        about: "Growth exponent of the bilinear exponential sum",
        keys: &[
            Key::optional("family", Kind::Choice(&["full_grid", "random", "singleton"]), "full_grid", "instance family"),
            Key::optional("r_min", Kind::Real, "1e4", "smallest scale"),
            Key::optional("r_max", Kind::Real, "1e9", "largest scale"),
            Key::optional("scales", Kind::Int, "11", "number of scales"),
            Key::optional("coupling", Kind::Real, "1", "coupling q"),
        ],
        seeded: true,
        run: expsum_fit,
    },
    Experiment {
        name: "bilinear_check",
        about: "Bilinear sums against an independent direct summation",
        keys: &[
            Key::optional("instances", Kind::Int, "50", "random instances"),
            Key::optional("r_min", Kind::Real, "1e4", "smallest scale"),
            Key::optional("r_max", Kind::Real, "1e8", "largest scale"),
            Key::optional("coupling", Kind::Real, "0.5", "coupling q"),
        ],
        seeded: true,
        run: bilinear_check,
    },
    Experiment {
        name: "lattice_phase_sweep",
        about: "Lattice phase sums over the full sphere, normalised by R²",
        keys: &[
            Key::required("energies", Kind::IntList, "energies (d = 3)"),
            Key::optional("surface", SURFACES, "sphere_cap", "patch"),
            Key::optional("radius", Kind::Real, "0.5", "domain radius for paraboloid and saddle"),
            Key::optional("patch_file", Kind::Text, "", "patch description when surface = file"),
            Key::optional("cone_cut", Kind::Real, "1", "pairs need |x − y| < cone_cut·R"),
        ],
        seeded: false,
        run: lattice_phase_sweep,
    },
    Experiment {
        name: "char_sum_check",
        about: "Gauss identity, Weil bound and totient checks for complete sums",
        keys: &[
            Key::optional("gauss_samples", Kind::Int, "200", "random admissible triples"),
            Key::optional("q_max", Kind::Int, "999", "largest odd modulus for the identity"),
            Key::optional("prime_max", Kind::Int, "500", "primes below this get the Weil check"),
            Key::optional("totient_max", Kind::Int, "200", "moduli up to this get K(0,0;q) = φ(q)"),
        ],
        seeded: true,
        run: char_sum_check,
    },
    Experiment {
        name: "separated_set",
        about: "Invariants of the separated point set in high dimension",
        keys: &[
            Key::optional("d", Kind::Int, "8", "dimension"),
            Key::optional("R", Kind::Real, "1e5", "sphere radius"),
        ],
        seeded: false,
        run: separated_set,
    },
];

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Value::from($v)),*] };
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::INFINITY, f64::min)
}

fn set_fit(report: &mut ExperimentReport, prefix: &str, xs: &[f64], ys: &[f64]) {
    if let Ok(fit) = log_log_fit(xs, ys) {
        report.set_summary(&format!("{prefix}_slope"), fit.slope);
        report.set_summary(&format!("{prefix}_intercept"), fit.intercept);
    }
}

/// Whether E is a sum of three squares with a primitive representation.
pub fn three_square_admissible(e: u64) -> bool {
    !matches!(e % 8, 0 | 4 | 7)
}

/// E = 4^k(8m − 1), the energies with no representation as three squares.
pub fn legendre_excluded(mut e: u64) -> bool {
    while e > 0 && e % 4 == 0 {
        e /= 4;
    }
    e % 8 == 7
}

fn curve(name: &str) -> Result<CurveSpec> {
    Ok(match name {
        "circle" => CurveSpec::standard_circle(),
        "flat_geodesic" => CurveSpec::flat_geodesic(),
        "elliptic" => CurveSpec::standard_elliptic(),
        "hyperbolic" => CurveSpec::standard_hyperbolic(),
        other => return Err(LabError::bad_value("curve", format!("unknown curve {other:?}"))),
    })
}

fn surface(p: &Params) -> Result<SurfacePatch> {
    let name = p.text("surface")?;
    Ok(match name.as_str() {
        "paraboloid" => SurfacePatch::new(1, Vec::new(), p.positive("radius")?, p.positive("radius")?)?,
        "saddle" => SurfacePatch::new(-1, Vec::new(), p.positive("radius")?, p.positive("radius")?)?,
        "sphere_cap" => SurfacePatch::sphere_cap(),
        "tilted_saddle" => SurfacePatch::tilted_saddle(),
        "file" => {
            let path = p.text("patch_file")?;
            if path.is_empty() {
                return Err(LabError::MissingKey { key: "patch_file".into(), experiment: "surface = file".into() });
            }
            read_patch(Path::new(&path))?
        }
        other => return Err(LabError::bad_value("surface", format!("unknown surface {other:?}"))),
    })
}

fn arithmetic_scan(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let d = p.int_in("d", 2, 8)? as usize;
    let e_max = p.uint("e_max")?;
    let mut report = ExperimentReport::new("arithmetic_scan", &["E", "rho", "has_points", "has_primitive"]);
    let (mut point_mismatch, mut primitive_mismatch) = (0u64, 0u64);
    for e in 1..=e_max {
        let c = classify_arithmetic(d, e, budget)?;
        if d == 3 {
            point_mismatch += u64::from(c.has_points == legendre_excluded(e));
            primitive_mismatch += u64::from(c.has_primitive != three_square_admissible(e));
        }
        report.push_row(row![e, c.rho, c.has_points, c.has_primitive])?;
    }
    if d == 3 {
        report.set_summary("point_mismatches", point_mismatch as f64);
        report.set_summary("primitive_mismatches", primitive_mismatch as f64);
    }
    Ok(report)
}

fn oracle_check(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let samples = p.uint("samples")?;
    let d_max = p.int_in("d_max", 2, 8)? as usize;
    let e_max = p.int_in("e_max", 1, i64::MAX)? as u64;
    let mut report =
        ExperimentReport::new("oracle_check", &["sample", "seed", "d", "E", "points", "oracle_points", "equal"]);
    let mut mismatches = 0u64;
    for i in 0..samples {
        let seed = derive_seed(p.seed, &[i]);
        let mut rng = stream(seed);
        let d = rng.random_range(2..=d_max);
        let e = rng.random_range(1..=e_max);
        let fast = enumerate_sphere(d, e, budget)?;
        let oracle = enumerate_sphere_naive(d, e, budget)?;
        let equal = fast == oracle;
        mismatches += u64::from(!equal);
        report.push_row(row![i, seed, d, e, fast.len(), oracle.len(), equal])?;
    }
    report.set_summary("mismatches", mismatches as f64);
    Ok(report)
}

fn separation(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let d = p.int_in("d", 2, 2)? as usize;
    let scan = separation_scan(d, p.uint("N")?, p.real("eps")?, budget)?;
    let mut report = ExperimentReport::new("separation_scan", &["E", "min_dist", "exceptional"]);
    for (&e, &dist) in &scan.per_e {
        report.push_row(row![e, dist, scan.exceptional.binary_search(&e).is_ok()])?;
    }
    report.set_summary("exceptional_count", scan.exceptional.len() as f64);
    report.set_summary("exceptional_bound", scan.exceptional_bound());
    Ok(report)
}

fn jarnik_scan(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let c = p.positive("c")?;
    let mut report = ExperimentReport::new("jarnik_scan", &["E", "points", "arc", "max_on_arc"]);
    let mut violations = Vec::new();
    for e in 1..=p.uint("e_max")? {
        let set = enumerate_sphere(2, e, budget)?;
        if set.len() < 3 {
            continue;
        }
        let arc = c * set.radius().cbrt();
        let most = max_points_on_arc(&set, arc)?;
        if most > 2 {
            violations.push(e);
        }
        report.push_row(row![e, set.len(), arc, most])?;
    }
    report.set_summary("violations", violations.len() as f64);
    report.set_summary("max_on_arc", max_of(report.column_f64("max_on_arc").unwrap_or_default()).max(0.0));
    Ok(report)
}

fn coplanarity_scan(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let c = p.positive("c")?;
    let mut report = ExperimentReport::new("coplanarity_scan", &["E", "points", "r", "violations"]);
    let mut total = 0usize;
    for e in 1..=p.uint("e_max")? {
        let set = enumerate_sphere(3, e, budget)?;
        if set.len() < 4 {
            continue;
        }
        let r = c * set.radius().powf(0.25);
        let bad = small_cap_rank_violations(&set, r, budget)?.len();
        total += bad;
        report.push_row(row![e, set.len(), r, bad])?;
    }
    report.set_summary("violations", total as f64);
    Ok(report)
}

fn mean_square_fit(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let d = p.int_in("d", 2, 8)? as usize;
    let stride = p.int_in("stride", 1, i64::MAX)? as usize;
    let mut report = ExperimentReport::new("mean_square_fit", &["E", "R", "points", "sum_sq", "cells_hit"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in (p.uint("e_min")?.max(1)..=p.uint("e_max")?).step_by(stride) {
        if d == 3 && !three_square_admissible(e) {
            continue;
        }
        let set = enumerate_sphere(d, e, budget)?;
        if set.is_empty() {
            continue;
        }
        let radius = set.radius();
        let m = cell_mean_square(&set, radius.sqrt())?;
        xs.push(radius);
        ys.push(m.sum_sq as f64);
        report.push_row(row![e, radius, set.len(), m.sum_sq, m.cells_hit])?;
    }
    set_fit(&mut report, "exponent_fit", &xs, &ys);
    Ok(report)
}

fn appendix(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let step = p.int_in("e_step", 1, i64::MAX)? as usize;
    let cfg = AppendixCheck {
        d: p.int("d")? as usize,
        energies: (p.uint("e_min")?..=p.uint("e_max")?).step_by(step).collect(),
        r_exponent: p.positive("r_exponent")?,
        centers: if p.text("centers")? == "points" { CapCenters::Points } else { CapCenters::PointsAndMidpoints },
    };
    Ok(appendix_cap_check(&cfg, budget)?)
}

fn ratio(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let cfg = RatioSweep {
        d: p.int_in("d", 2, 8)? as usize,
        e_min: p.uint("e_min")?,
        e_max: p.uint("e_max")?,
        sampler: Sampler::parse(&p.text("sampler")?)?,
        trials: p.count("trials")?,
        seed: p.seed,
        separation_eps: p.real("separation_eps")?,
    };
    Ok(ratio_sweep(&cfg, &curve(&p.text("curve")?)?, budget)?)
}

fn l4_witness(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let sigma = curve(&p.text("curve")?)?;
    let mut report = ExperimentReport::new("l4_witness", &["E", "points", "l4", "bound", "ratio"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in p.uint_list("energies")? {
        let w = l4_lower_bound_witness(&sigma, e, budget)?;
        xs.push(w.bound);
        ys.push(w.l4);
        report.push_row(row![e, w.f.len(), w.l4, w.bound, w.l4 / w.bound])?;
    }
    report.set_summary("min_ratio", min_of(report.column_f64("ratio").unwrap_or_default()));
    set_fit(&mut report, "l4_vs_bound", &xs, &ys);
    Ok(report)
}

/// Smallest error·√q·Q^{1/2+γ} over 1 ≤ q ≤ Q with nearest numerators.
pub fn brute_force_quality(zeta: [f64; 2], q_param: u64, gamma: f64) -> (u64, f64) {
    let scale = (q_param as f64).powf(0.5 + gamma);
    let mut best = (1, f64::INFINITY);
    for q in 1..=q_param {
        let a: Vec<i64> = zeta.iter().map(|z| (q as f64 * z).round() as i64).collect();
        let quality = approx_error(&zeta, q, &a) * (q as f64).sqrt() * scale;
        if quality < best.1 {
            best = (q, quality);
        }
    }
    best
}

fn hybrid_sweep(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let gamma = p.positive("gamma")?;
    let qs = p.uint_list("q_values")?;
    let mut report = ExperimentReport::new(
        "hybrid_approx_sweep",
        &[
            "sample", "seed", "zeta1", "zeta2", "Q", "gamma", "branch", "q", "a1", "a2", "error", "quality",
            "brute_q", "brute_quality", "ratio", "dirichlet_q", "dirichlet_error", "dirichlet_bound",
        ],
    );
    let mut per_q: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let (mut violations, mut fallbacks) = (0u64, 0u64);
    for i in 0..p.uint("samples")? {
        let seed = derive_seed(p.seed, &[i]);
        let mut rng = stream(seed);
        let zeta = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        for &q_param in &qs {
            let h = hybrid_approx(zeta[0], zeta[1], q_param, gamma, budget)?;
            budget.charge(q_param)?;
            let (brute_q, brute) = brute_force_quality(zeta, q_param, gamma);
            let k = isqrt(q_param).max(1);
            let dir = dirichlet_pair(zeta, k)?;
            let bound = 1.0 / (dir.q as f64 * k as f64);
            violations += u64::from(!(dir.error < bound));
            fallbacks += u64::from(h.branch.name() == "fallback");
            let ratio = if brute > 0.0 { h.quality / brute } else if h.quality == 0.0 { 1.0 } else { f64::INFINITY };
            let entry = per_q.entry(q_param).or_insert((0.0, 0.0));
            entry.0 = entry.0.max(h.quality);
            entry.1 = entry.1.max(brute);
            report.push_row(row![
                i, seed, zeta[0], zeta[1], q_param, gamma, h.branch.name(), h.q, h.a[0], h.a[1], h.error, h.quality,
                brute_q, brute, ratio, dir.q, dir.error, bound
            ])?;
        }
    }
    for (q, (hq, bq)) in &per_q {
        report.set_summary(&format!("max_quality_Q{q}"), *hq);
        report.set_summary(&format!("max_brute_quality_Q{q}"), *bq);
    }
    let ratios = report.column_f64("ratio").unwrap_or_default();
    report.set_summary("max_ratio", max_of(ratios.iter().copied()));
    report.set_summary("median_ratio", median(ratios));
    report.set_summary("max_quality", max_of(per_q.values().map(|v| v.0)));
    report.set_summary("max_brute_quality", max_of(per_q.values().map(|v| v.1)));
    report.set_summary("dirichlet_violations", violations as f64);
    report.set_summary("fallbacks", fallbacks as f64);
    Ok(report)
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn slice_sweep(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let (radius, r, delta) = (p.positive("R")?, p.positive("r")?, p.positive("delta")?);
    let mut report = ExperimentReport::new(
        "slice_direction_sweep",
        &["sample", "seed", "zeta1", "zeta2", "zeta3", "a1", "a2", "a3", "nu", "theta1"],
    );
    for i in 0..p.uint("samples")? {
        let seed = derive_seed(p.seed, &[i]);
        let mut rng = stream(seed);
        let z = loop {
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 0.1 && n <= 1.0 {
                break [v[0] / n, v[1] / n, v[2] / n];
            }
        };
        let s = slice_direction(z, r, radius, delta, budget)?;
        report.push_row(row![i, seed, z[0], z[1], z[2], s.a[0], s.a[1], s.a[2], s.nu, s.theta1])?;
    }
    let nus = report.column_f64("nu").unwrap_or_default();
    report.set_summary("max_nu", max_of(nus.iter().copied()));
    report.set_summary("mean_nu", mean(&nus));
    report.set_summary("max_nu_over_r", max_of(nus.iter().copied()) / r);
    Ok(report)
}

fn stationary_decay(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let patch = surface(p)?;
    let (lo, hi) = (p.positive("xi_min")?, p.positive("xi_max")?);
    if !(hi > lo) || lo < 10.0 {
        return Err(LabError::bad_value("xi_min", "need 10 <= xi_min < xi_max"));
    }
    let points = p.count("points")?.max(2);
    let mut report = ExperimentReport::new(
        "stationary_phase_decay",
        &[
            "ray", "seed", "norm", "xi1", "xi2", "xi3", "direct_re", "direct_im", "stationary_re", "stationary_im",
            "error",
        ],
    );
    report.set_config("epsilon", patch.epsilon());
    let mut slopes = Vec::new();
    let (mut all_n, mut all_err) = (Vec::new(), Vec::new());
    let spread = 0.5 * patch.cone();
    for ray in 0..p.uint("rays")? {
        let seed = derive_seed(p.seed, &[ray]);
        let mut rng = stream(seed);
        let sign = if ray % 2 == 0 { 1.0 } else { -1.0 };
        let dir = [rng.random_range(-spread..spread), rng.random_range(-spread..spread), sign];
        let len = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (mut ns, mut errs) = (Vec::new(), Vec::new());
        for norm in geometric_grid(lo, hi, points) {
            let xi = [dir[0] * norm / len, dir[1] * norm / len, dir[2] * norm / len];
            let direct = sigma_hat_direct(&patch, xi, QuadratureSettings::default(), budget)?;
            let stationary = sigma_hat_stationary(&patch, xi)?;
            let err = (direct - stationary).norm();
            ns.push(norm);
            errs.push(err);
            report.push_row(row![
                ray, seed, norm, xi[0], xi[1], xi[2], direct.re, direct.im, stationary.re, stationary.im, err
            ])?;
        }
        if let Ok(fit) = log_log_fit(&ns, &errs) {
            slopes.push(fit.slope);
        }
        all_n.extend(ns);
        all_err.extend(errs);
    }
    report.set_summary("max_ray_slope", max_of(slopes.iter().copied()));
    report.set_summary("min_ray_slope", min_of(slopes.iter().copied()));
    set_fit(&mut report, "pooled", &all_n, &all_err);
    Ok(report)
}

fn sine(k: i64) -> Result<Eigenfunction> {
    let a = Complex64::new(0.0, -0.5);
    Ok(Eigenfunction::from_terms(2, (k * k) as u64, &[(&[k, 0], a), (&[-k, 0], -a)])?)
}

fn crofton_calibration(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let (k_min, k_max) = (p.int_in("k_min", 1, 1000)?, p.int_in("k_max", 1, 1000)?);
    let lines = p.count("lines")?;
    let ks: Vec<i64> = (k_min..=k_max).collect();
    if ks.is_empty() {
        return Err(LabError::bad_value("k_max", "must be at least k_min"));
    }
    let mut report = ExperimentReport::new("crofton_calibration", &["k", "raw", "length", "expected", "rel_error"]);
    for &k in &ks {
        let raw = crofton_raw(&sine(k)?, &CALIBRATION_SQUARE, lines, p.seed, budget)?;
        let expected = 2.0 * k as f64;
        let length = CROFTON_CONSTANT * raw;
        report.push_row(row![k, raw, length, expected, (length - expected).abs() / expected])?;
    }
    report.set_summary("calibrated_constant", calibrate_crofton(&ks, lines, p.seed, budget)?);
    report.set_summary("frozen_constant", CROFTON_CONSTANT);
    report.set_summary("max_rel_error", max_of(report.column_f64("rel_error").unwrap_or_default()));
    Ok(report)
}

fn random_function(d: usize, e: u64, seed: u64, budget: &Budget) -> Result<Eigenfunction> {
    Ok(sample_random(&RandomModel::new(d, e, seed, budget)?)?)
}

fn crofton_length(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let lines = p.count("lines")?;
    let square = Square { origin: [0.0, 0.0], side: 1.0 };
    let mut report = ExperimentReport::new("crofton_length", &["E", "lambda", "sample", "seed", "length"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in p.uint_list("energies")? {
        for s in 0..p.uint("samples")? {
            let seed = derive_seed(p.seed, &[e, s]);
            let f = random_function(2, e, seed, budget)?;
            let est = crofton_estimate(&f, &square, lines, derive_seed(seed, &[1]), budget)?;
            xs.push(f.lambda());
            ys.push(est.length);
            report.push_row(row![e, f.lambda(), s, seed, est.length])?;
        }
    }
    set_fit(&mut report, "length_vs_lambda", &xs, &ys);
    Ok(report)
}

fn crossing_scaling(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let sigma = curve(&p.text("curve")?)?;
    let min_points = p.count("min_points")?;
    let mut report = ExperimentReport::new(
        "crossing_scaling",
        &["E", "lambda", "points", "sample", "seed", "crossings", "tangencies"],
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in p.uint("e_min")?.max(1)..=p.uint("e_max")? {
        let set = enumerate_sphere(2, e, budget)?;
        if set.len() < min_points.max(1) {
            continue;
        }
        let model = RandomModel::from_set(set, 0)?;
        for s in 0..p.uint("samples")? {
            let seed = derive_seed(p.seed, &[e, s]);
            let f = sample_random(&model.with_seed(seed))?;
            let samples = (40.0 * f.lambda()).ceil() as usize;
            let c = curve_crossings(&f, &sigma, samples, budget)?;
            if c.crossings > 0 {
                xs.push(f.lambda());
                ys.push(c.crossings as f64);
            }
            report.push_row(row![e, f.lambda(), f.len(), s, seed, c.crossings, c.tangencies])?;
        }
    }
    set_fit(&mut report, "crossings_vs_lambda", &xs, &ys);
    Ok(report)
}

fn nodal_scaling(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let d = p.int("d")? as usize;
    let factor = p.positive("grid_factor")?;
    if factor < 10.0 {
        return Err(LabError::bad_value("grid_factor", "grids need at least 10 points per unit λ"));
    }
    let mut report = ExperimentReport::new(
        "nodal_scaling",
        &["E", "lambda", "points", "sample", "seed", "grid", "domains", "positive", "negative"],
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in p.uint_list("energies")? {
        let model = RandomModel::new(d, e, 0, budget)?;
        let lam = (e as f64).sqrt();
        let grid = ((factor * lam).ceil() as usize).max(64);
        let mut counts = Vec::new();
        for s in 0..p.uint("samples")? {
            let seed = derive_seed(p.seed, &[e, s]);
            let f = sample_random(&model.with_seed(seed))?;
            let lab = count_domains(&f, grid, budget)?;
            counts.push(lab.total() as f64);
            report.push_row(row![
                e, lam, f.len(), s, seed, grid, lab.total(), lab.positive_count, lab.negative_count
            ])?;
        }
        if !counts.is_empty() {
            xs.push(lam);
            ys.push(mean(&counts));
        }
    }
    set_fit(&mut report, "domains_vs_lambda", &xs, &ys);
    Ok(report)
}

fn intersection_scan(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let sigma = curve(&p.text("curve")?)?;
    let mut report = ExperimentReport::new("intersection_scan", &["E", "sample", "seed", "found", "degenerate"]);
    let mut missed = 0u64;
    for e in p.uint_list("energies")? {
        let model = RandomModel::new(sigma.dim(), e, 0, budget)?;
        for s in 0..p.uint("samples")? {
            let seed = derive_seed(p.seed, &[e, s]);
            let w = intersection_witness(&sample_random(&model.with_seed(seed))?, &sigma, budget)?;
            missed += u64::from(!w.found);
            report.push_row(row![e, s, seed, w.found, w.degenerate])?;
        }
    }
    report.set_summary("missed", missed as f64);
    Ok(report)
}

fn barrier_scan(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let count = p.count("count")?;
    let mut report = ExperimentReport::new(
        "barrier_scan",
        &["E", "N", "f1_at_0", "sqrt_n", "min_radius", "min_value", "early_min", "radius_bound", "max_deviation"],
    );
    let mut e = p.uint("e_min")?.max(1);
    let (mut f1_errors, mut late) = (0u64, 0u64);
    while report.per_sample.len() < count {
        if three_square_admissible(e) {
            let set = enumerate_sphere(3, e, budget)?;
            let prof = barrier_profile(&set, budget)?;
            let bound = 2.0 / set.radius();
            let early = min_of(prof.radii.iter().zip(&prof.values).filter(|(r, _)| **r <= bound).map(|(_, v)| *v));
            let sqrt_n = (prof.n as f64).sqrt();
            f1_errors += u64::from(prof.f1_at_0 != sqrt_n);
            late += u64::from(!(early < 0.0));
            report.push_row(row![
                e, prof.n, prof.f1_at_0, sqrt_n, prof.min_radius, prof.min_value, early, bound, prof.max_deviation
            ])?;
        }
        e += 1;
    }
    report.set_summary("f1_mismatches", f1_errors as f64);
    report.set_summary("nonnegative_early_minima", late as f64);
    Ok(report)
}

fn expsum_fit(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let family = p.text("family")?;
    let q = p.positive("coupling")?;
    let scales = geometric_grid(p.positive("r_min")?, p.positive("r_max")?, p.count("scales")?);
    let mut report = ExperimentReport::new("expsum_fit", &["R", "seed", "points_s", "points_t", "modulus"]);
    let mut moduli = Vec::new();
    for (k, &r) in scales.iter().enumerate() {
        let seed = derive_seed(p.seed, &[k as u64]);
        let inst = match family.as_str() {
            "full_grid" => ExpSumInstance::full_grid(r, q)?,
            "random" => ExpSumInstance::random(r, q, &mut stream(seed))?,
            _ => ExpSumInstance::singleton(r, q)?,
        };
        let m = bilinear_sum(&inst, budget)?.norm();
        moduli.push(m);
        report.push_row(row![r, seed, inst.s().len(), inst.t().len(), m])?;
    }
    if (scales[scales.len() - 1] / scales[0]).log10() < 1.5 {
        return Err(LabError::bad_value("r_max", "scales must span at least 1.5 decades"));
    }
    set_fit(&mut report, "exponent_fit", &scales, &moduli);
    Ok(report)
}

/// Direct double loop over (s, t) with std trigonometry; shares no code
/// with the library summation.
pub fn duplicate_bilinear_sum(r: f64, q: f64, s: &[f64], t: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for &a in s {
        for &b in t {
            let st = a * b;
            let (sin, cos) = (r * (st + q * st * st)).sin_cos();
            re += cos;
            im += sin;
        }
    }
    Complex64::new(re, im)
}

fn bilinear_check(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let (lo, hi, q) = (p.positive("r_min")?, p.positive("r_max")?, p.real("coupling")?);
    let mut report = ExperimentReport::new(
        "bilinear_check",
        &["instance", "seed", "R", "points_s", "points_t", "re", "im", "dup_re", "dup_im", "diff"],
    );
    for i in 0..p.uint("instances")? {
        let seed = derive_seed(p.seed, &[i]);
        let mut rng = stream(seed);
        let r = lo * (hi / lo).powf(rng.random::<f64>());
        let inst = ExpSumInstance::random(r, q, &mut rng)?;
        let z = bilinear_sum(&inst, budget)?;
        let w = duplicate_bilinear_sum(r, q, inst.s(), inst.t());
        report.push_row(row![i, seed, r, inst.s().len(), inst.t().len(), z.re, z.im, w.re, w.im, (z - w).norm()])?;
    }
    report.set_summary("max_diff", max_of(report.column_f64("diff").unwrap_or_default()).max(0.0));
    Ok(report)
}

fn lattice_phase_sweep(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let patch = surface(p)?;
    let cut = p.positive("cone_cut")?;
    let mut report = ExperimentReport::new(
        "lattice_phase_sweep",
        &["E", "R", "points", "pairs", "dense", "layers", "modulus", "normalized"],
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for e in p.uint_list("energies")? {
        let set = enumerate_sphere(3, e, budget)?;
        if set.is_empty() {
            continue;
        }
        let s = lattice_phase_sum(&set, &set, &patch, cut, budget)?;
        let radius = set.radius();
        let normalized = s.value.norm() / (radius * radius);
        xs.push(radius);
        ys.push(normalized);
        report.push_row(row![
            e, radius, set.len(), s.pairs, s.peeling.dense.len(), s.peeling.layers.len(), s.value.norm(), normalized
        ])?;
    }
    set_fit(&mut report, "normalized", &xs, &ys);
    Ok(report)
}

fn char_sum_check(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let q_max = p.int_in("q_max", 3, 1_000_000)? as u64;
    let mut report = ExperimentReport::new(
        "char_sum_check",
        &["check", "a", "b", "q", "re", "im", "measured", "limit", "holds"],
    );
    let mut failures: BTreeMap<&str, u64> = BTreeMap::new();
    let mut push = |report: &mut ExperimentReport, check: &'static str, a: i64, b: i64, q: u64, z: Complex64, measured: f64, limit: f64| {
        let holds = measured <= limit;
        *failures.entry(check).or_default() += u64::from(!holds);
        report.push_row(row![check, a, b, q, z.re, z.im, measured, limit, holds])
    };
    let mut max_gauss = 0.0f64;
    for i in 0..p.uint("gauss_samples")? {
        let seed = derive_seed(p.seed, &[i]);
        let mut rng = stream(seed);
        let q = 2 * rng.random_range(1..=(q_max - 1) / 2) + 1;
        let a = loop {
            let a = rng.random_range(1..q as i64);
            if gcd(a as u64, q) == 1 {
                break a;
            }
        };
        let m = rng.random_range(0..q as i64);
        budget.charge(q)?;
        let lhs = gauss_sum(a, m, q)?;
        let dev = (lhs - gauss_identity_rhs(a, m, q)?).norm();
        max_gauss = max_gauss.max(dev);
        push(&mut report, "gauss_identity", a, m, q, lhs, dev, 1e-10)?;
    }
    for prime in (2..p.uint("prime_max")?).filter(|&n| is_prime(n)) {
        budget.charge(prime)?;
        let k = kloosterman(1, 1, prime)?;
        push(&mut report, "weil_bound", 1, 1, prime, k, k.norm(), 2.0 * (prime as f64).sqrt())?;
    }
    for q in 1..=p.uint("totient_max")? {
        budget.charge(q)?;
        let k = kloosterman(0, 0, q)?;
        let phi = totient(q) as f64;
        push(&mut report, "kloosterman_totient", 0, 0, q, k, (k - Complex64::new(phi, 0.0)).norm(), 0.0)?;
    }
    for (check, n) in &failures {
        report.set_summary(&format!("{check}_failures"), *n as f64);
    }
    report.set_summary("max_gauss_deviation", max_gauss);
    Ok(report)
}

fn separated_set(p: &Params, budget: &Budget) -> Result<ExperimentReport> {
    let d = p.int_in("d", 8, 64)? as usize;
    let radius = p.positive("R")?;
    let set = build_ideal_separated_set(d, radius, budget)?;
    let check = set.verify();
    let ulps = 4.0;
    let mut report = ExperimentReport::new("separated_set", &["invariant", "measured", "limit", "holds"]);
    let cap = radius.powf(2.0 / 3.0) / 50.0;
    let rows: [(&str, f64, f64, bool); 3] = [
        ("norm_ulps", check.max_norm_ulps, ulps, check.max_norm_ulps <= ulps),
        ("min_distance", check.min_distance_bound, set.step as f64, check.grid_exact && check.min_distance_bound >= set.step as f64),
        ("cap_distance", check.max_cap_distance, cap, check.max_cap_distance < cap),
    ];
    for (name, measured, limit, holds) in rows {
        report.push_row(row![name, measured, limit, holds])?;
    }
    report.set_summary("points", set.len() as f64);
    report.set_summary("step", set.step as f64);
    report.set_summary("ulp_of_radius", ulp(radius));
    report.set_summary("all_hold", if rows.iter().all(|r| r.3) { 1.0 } else { 0.0 });
    Ok(report)
}
