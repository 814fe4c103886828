use toral_core::nodal::{count_domains, default_grid, sample_random, RandomModel};
use toral_core::Budget;

fn model(d: usize, e: u64) -> RandomModel {
    RandomModel::new(d, e, 0, &Budget::default()).unwrap()
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn mean_l2_norm_is_one() {
    let m = model(2, 325);
    let mean: f64 = (0..200).map(|s| sample_random(&m.with_seed(s)).unwrap().l2_norm_sq()).sum::<f64>() / 200.0;
    assert!((0.8..=1.2).contains(&mean), "{mean}");
}

#[test]
fn pointwise_variance_is_one() {
    for (d, e) in [(2, 325), (3, 101)] {
        let m = model(d, e);
        let x0: Vec<f64> = (0..d).map(|k| 0.137 + 0.29 * k as f64).collect();
        let n = 1000;
        let vals: Vec<f64> = (0..n).map(|s| sample_random(&m.with_seed(s)).unwrap().eval(&x0).re).collect();
        let var = vals.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let se = (2.0 / n as f64).sqrt();
        assert!((var - 1.0).abs() <= 3.0 * se, "d = {d}: {var}");
    }
}

#[test]
fn translation_leaves_domain_statistics_unchanged() {
    let b = Budget::default();
    let m = model(2, 325);
    let n = default_grid(m.full().radius());
    let shift = [0.3141, 0.2718];
    let plain: Vec<f64> =
        (0..200).map(|s| count_domains(&sample_random(&m.with_seed(s)).unwrap(), n, &b).unwrap().total() as f64).collect();
    let moved: Vec<f64> = (1000..1200)
        .map(|s| count_domains(&sample_random(&m.with_seed(s)).unwrap().translated(&shift), n, &b).unwrap().total() as f64)
        .collect();
    let critical = 1.628 * (2.0f64 / 200.0).sqrt();
    assert!(ks(plain, moved) <= critical);
}

fn refinement_pairs(samples: u64) -> Vec<(usize, usize)> {
    let b = Budget::default();
    let m = model(2, 325);
    let n = (10.0 * m.full().radius()).ceil() as usize;
    (0..samples)
        .map(|s| {
            let f = sample_random(&m.with_seed(s)).unwrap();
            (count_domains(&f, n, &b).unwrap().total(), count_domains(&f, 2 * n, &b).unwrap().total())
        })
        .collect()
}

#[test]
fn counts_concentrate_within_a_factor_three() {
    let counts: Vec<usize> = refinement_pairs(20).iter().map(|p| p.0).collect();
    let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
    assert!(hi <= 3 * lo, "{counts:?}");
}

#[test]
fn counts_move_less_than_ten_percent_under_refinement() {
    for (coarse, fine) in refinement_pairs(20) {
        assert!((coarse as f64 - fine as f64).abs() <= 0.1 * fine as f64, "{coarse} vs {fine}");
    }
}

#[test]
#[ignore = "exact agreement between 10λ and 20λ grids holds for about 20% of samples, not 95%"]
fn counts_are_identical_under_refinement() {
    let pairs = refinement_pairs(20);
    let stable = pairs.iter().filter(|p| p.0 == p.1).count();
    assert!(stable >= 19, "{stable} of 20 stable: {pairs:?}");
}
