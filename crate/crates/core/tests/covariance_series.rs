use billiard_walk::exec::Exec;
use billiard_walk::presets::preset;
use billiard_walk::rng::RngStream;
use billiard_walk::stats::covariance::{series_tail_bound, MAX_LAG};
use billiard_walk::stats::{
    empirical_sigma, expected_a, expected_a_product, gaussian_moment_tensor, interaction_matrices,
    martingale_schedule, sample_a, schur_average, sigma_via_series,
};
use billiard_walk::{Arrangement, Error};
use nalgebra::DMatrix;

#[test]
fn a1_window_expectations_are_geometric() {
    let arr = Arrangement::parse("A1").unwrap();
    for p in [0.2, 0.3, 0.7] {
        let single = expected_a(&arr, &[1], p).unwrap();
        assert!((single[(0, 0)] - (1.0 - p)).abs() < 1e-15);
        for m in 1..10 {
            let iota: Vec<u8> = (0..=m).map(|k| (k % 2) as u8).collect();
            let e = expected_a(&arr, &iota, p).unwrap()[(0, 0)];
            let target = (1.0 - p).powi(2) * (1.0 - 2.0 * p).powi(m - 1);
            assert!((e - target).abs() < 1e-14, "m = {m}: {e} vs {target}");
        }
    }
}

#[test]
fn enumeration_product_and_sampling_agree() {
    let arr = Arrangement::parse("A2").unwrap();
    let mut pick = RngStream::new(5, 0);
    for trial in 0..3 {
        let iota: Vec<u8> = (0..6).map(|_| (pick.next_u64() % 3) as u8).collect();
        let p = 0.3;
        let enumerated = expected_a(&arr, &iota, p).unwrap();
        let product = expected_a_product(&arr, &iota, p).unwrap();
        assert!((&enumerated - &product).amax() < 1e-12);

        let draws = 1_000_000u64;
        let mut rng = RngStream::new(6, trial);
        let mut sum = DMatrix::zeros(2, 2);
        let mut sq = DMatrix::zeros(2, 2);
        for _ in 0..draws {
            let a = sample_a(&arr, &iota, p, &mut rng).unwrap();
            sq += a.component_mul(&a);
            sum += a;
        }
        let m = draws as f64;
        let mean = &sum / m;
        for idx in 0..4 {
            let var = sq[idx] / m - mean[idx] * mean[idx];
            let se = (var.max(0.0) / m).sqrt();
            assert!(
                (mean[idx] - enumerated[idx]).abs() <= 3.0 * se + 1e-12,
                "{iota:?} entry {idx}: {} vs {}",
                mean[idx],
                enumerated[idx]
            );
        }
    }
}

#[test]
fn window_expectations_vanish_without_transmission() {
    let arr = Arrangement::parse("G2").unwrap();
    for m in 0..5 {
        let iota: Vec<u8> = (0..=m).map(|k| (k % 3) as u8).collect();
        assert_eq!(expected_a(&arr, &iota, 1.0).unwrap().amax(), 0.0);
    }
    let long = vec![0u8; MAX_LAG + 2];
    assert!(matches!(
        expected_a(&arr, &long, 0.3),
        Err(Error::WindowTooLong { .. })
    ));
}

#[test]
fn schur_average_examples() {
    for ty in ["A3", "B3", "G2"] {
        let arr = Arrangement::parse(ty).unwrap();
        let g = arr.group().unwrap();
        let d = arr.rank();
        let id = DMatrix::identity(d, d);
        assert!((schur_average(g, &id) - &id).amax() < 1e-12);
        let mut e = DMatrix::zeros(d, d);
        e[(0, 0)] = 1.0;
        assert!((schur_average(g, &e) - &id / d as f64).amax() < 1e-12);
    }
}

fn a1_series_oracle(p: f64, m_max: usize) -> f64 {
    (1.0 - p)
        + 2.0
            * (1.0 - p).powi(2)
            * (1..=m_max)
                .map(|m| (1.0 - 2.0 * p).powi(m as i32 - 1))
                .sum::<f64>()
}

#[test]
fn a1_series_matches_the_geometric_sum() {
    let arr = Arrangement::parse("A1").unwrap();
    let labels: Vec<u8> = (0..10_000).map(|k| (k % 2) as u8).collect();
    let mut last = f64::INFINITY;
    for k in 1..10 {
        let p = k as f64 / 10.0;
        let rep = sigma_via_series(&arr, &labels, p, 12, None).unwrap();
        assert!((rep.sigma2 - a1_series_oracle(p, 12)).abs() < 1e-12);
        // decreasing in p, like (1−p)/p
        assert!(rep.sigma2 < last);
        last = rep.sigma2;
    }
    let rep = sigma_via_series(&arr, &labels, 0.3, 12, None).unwrap();
    assert!((rep.sigma2 - 7.0 / 3.0).abs() < 1e-3);
    assert_eq!(
        sigma_via_series(&arr, &labels, 1.0, 12, None)
            .unwrap()
            .sigma2,
        0.0
    );
}

#[test]
fn tail_bound_covers_the_a1_remainder() {
    let arr = Arrangement::parse("A1").unwrap();
    let p = 0.3;
    let exact_tail = (1.0 - p) / p - a1_series_oracle(p, 12);
    let c = (1.0 - 2.0 * p).abs();
    assert!(series_tail_bound(&arr, p, 12, c) >= exact_tail.abs());
}

#[test]
fn a2_interaction_estimates_match_the_series() {
    let pr = preset("a2-irrational").unwrap();
    let arr = pr.arrangement().unwrap();
    let model = pr.model(&arr, 2_000).unwrap();
    let rep = interaction_matrices(&model, 8, 2_000, 9, Some(0.75), Exec::Auto).unwrap();
    let labels = pr.model(&arr, 200_000).unwrap().labels;
    let series = sigma_via_series(&arr, &labels, pr.p, 8, Some(0.75)).unwrap();
    assert!((rep.sigma2_series - series.sigma2).abs() / series.sigma2 < 0.05);
    // Σ_0 trace/d is the mean square step (1−p)·mean ‖β‖²
    let beta2 = arr.frame.beta[0].norm_squared();
    let trace0: f64 = (0..2).map(|r| rep.sigma_m[0][r][r]).sum::<f64>() / 2.0;
    assert!((trace0 - (1.0 - pr.p) * beta2 / 2.0).abs() < 0.02);
    for m in 0..=8 {
        assert!(
            rep.op_norm[m] <= 4.0 * (1.0 - pr.p) * beta2 * 0.75f64.powi(m as i32) + rep.band[m]
        );
    }
}

#[test]
fn g2_series_and_ensemble_agree() {
    let pr = preset("g2").unwrap();
    let arr = pr.arrangement().unwrap();
    let labels = pr.model(&arr, 1_000_000).unwrap().labels;
    let series = sigma_via_series(&arr, &labels, pr.p, 12, None).unwrap();
    let model = pr.model(&arr, 10_000).unwrap();
    let est = empirical_sigma(&model, 10_000, 3, Exec::Auto).unwrap();
    assert!(
        (series.sigma2 - est.sigma2).abs() / est.sigma2 < 0.05,
        "{} vs {}",
        series.sigma2,
        est.sigma2
    );
    assert!(est.isotropy.max_off_diagonal <= 3.0 * est.isotropy.off_diagonal_se);
}

#[test]
fn a1_variance_vanishes_as_reflection_dominates() {
    let pr = preset("a1-p0.3").unwrap();
    let arr = pr.arrangement().unwrap();
    let frozen = billiard_walk::walk::WalkModel::new(&arr, &[0.5], &[1.0], 1.0, 500).unwrap();
    assert_eq!(
        empirical_sigma(&frozen, 100, 1, Exec::Sequential)
            .unwrap()
            .sigma2,
        0.0
    );
}

/// `E[Z_{i1}⋯Z_{ik}]` for independent `N(0, σ²)` coordinates from the
/// per-coordinate Gaussian moments `(2j−1)!! σ^{2j}`.
fn gaussian_entry(idx: &[usize], dim: usize, sigma2: f64) -> f64 {
    let mut value = 1.0;
    for c in 0..dim {
        let n = idx.iter().filter(|&&i| i == c).count();
        if n % 2 == 1 {
            return 0.0;
        }
        let double_factorial: f64 = (1..n).step_by(2).map(|x| x as f64).product();
        value *= double_factorial * sigma2.powi(n as i32 / 2);
    }
    value
}

#[test]
fn gaussian_tensors_match_coordinatewise_moments() {
    for k in 1..=6 {
        let t = gaussian_moment_tensor(k, 3, 0.7).unwrap();
        for flat in 0..t.entries.len() {
            let idx = t.multi_index(flat);
            assert!(
                (t.entries[flat] - gaussian_entry(&idx, 3, 0.7)).abs() < 1e-12,
                "k = {k} {idx:?}"
            );
        }
    }
}

#[test]
fn schedule_growth_depends_on_the_rate() {
    let fast = martingale_schedule(2_000, 0.1).unwrap();
    for n in 100..=2_000 {
        let r = fast.s[n] as f64 / (n as f64).powf(4.0 / 3.0);
        assert!((0.5..=2.0).contains(&r), "n = {n}: {r}");
    }
    // for slower mixing the logarithmic mixing steps dominate at this range
    let slow = martingale_schedule(100, 0.75).unwrap();
    assert!(slow.s[100] as f64 / 100f64.powf(4.0 / 3.0) > 2.0);
    assert!(slow.b[100] > slow.a[100]);
}
