use billiard_walk::affine::AffineIsometry;
use billiard_walk::exec::Exec;
use billiard_walk::lattice::DirectionClass;
use billiard_walk::presets::{from_coroot, preset};
use billiard_walk::ray::{
    classify_direction, crossings_up_to, cutting_sequence, first_return, hit_rate,
    hit_rate_lipschitz, window_frequencies,
};
use billiard_walk::rng::RngStream;
use billiard_walk::root_system::reflection_matrix;
use billiard_walk::stats::empirical_sigma;
use billiard_walk::walk::{ensemble, WalkModel};
use billiard_walk::Arrangement;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn a2() -> Arrangement {
    Arrangement::parse("A2").unwrap()
}

fn irrational_a2(arr: &Arrangement) -> (Vec<f64>, Vec<f64>) {
    let pr = preset("a2-irrational").unwrap();
    (pr.start_point(arr).unwrap(), pr.direction(arr).unwrap())
}

fn affine_word(arr: &Arrangement, word: &[usize], shift: &[i32]) -> AffineIsometry {
    let d = arr.rank();
    let mut u = AffineIsometry::identity(d);
    for &i in word {
        u = u.compose(&arr.frame.simple_affine[i % (d + 1)]);
    }
    let t: Vec<f64> = shift.iter().map(|&k| k as f64).collect();
    AffineIsometry::translation(&arr.spec.coroot_basis * DVector::from_vec(t)).compose(&u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_are_invariant_under_the_affine_group(
        word in proptest::collection::vec(0usize..3, 0..16),
        shift in proptest::collection::vec(-4i32..=4, 2),
    ) {
        let arr = a2();
        let (l0, b) = irrational_a2(&arr);
        let reference = cutting_sequence(&arr, &l0, &b, 400).unwrap();
        let u = affine_word(&arr, &word, &shift);
        let l1 = u.apply(&DVector::from_vec(l0));
        let b1 = &u.linear * DVector::from_vec(b);
        prop_assert_eq!(cutting_sequence(&arr, l1.as_slice(), b1.as_slice(), 400).unwrap(), reference);
    }

    #[test]
    fn reflections_are_orthogonal_involutions(v in proptest::collection::vec(-3.0f64..3.0, 4)) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let a = DVector::from_vec(v);
        let r = reflection_matrix(&a).unwrap();
        prop_assert!((&r * &r - DMatrix::identity(4, 4)).amax() < 1e-12);
        prop_assert!((&r * &a + &a).amax() < 1e-12);
        prop_assert!((r.transpose() - &r).amax() < 1e-15);
    }

    #[test]
    fn steps_have_prescribed_lengths_and_labels_ignore_the_seed(seed in any::<u64>(), p in 0.05f64..0.95) {
        let arr = Arrangement::parse("G2").unwrap();
        let pr = preset("g2").unwrap();
        let model = WalkModel::new(&arr, &pr.start_point(&arr).unwrap(), &pr.direction(&arr).unwrap(), p, 300).unwrap();
        let tr = model.simulate_discrete(&mut RngStream::new(seed, 0));
        prop_assert_eq!(&tr.labels, &model.labels);
        let norms: Vec<f64> = arr.frame.beta.iter().map(|b| b.norm()).collect();
        for (n, w) in tr.points.windows(2).enumerate() {
            let step: f64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if tr.epsilons[n] == 0 {
                prop_assert_eq!(step, 0.0);
            } else {
                prop_assert!(norms.iter().any(|nb| (nb - step).abs() < 1e-9));
            }
        }
    }
}

#[test]
fn crossing_count_tracks_the_hit_rate() {
    let arr = a2();
    let (l0, b) = irrational_a2(&arr);
    let k = hit_rate(&arr, &b).unwrap();
    for horizon in [1e3, 1e4] {
        let count = crossings_up_to(&arr, &l0, &b, horizon).unwrap() as f64;
        // one crossing per hyperplane family at most off at either end
        assert!((count - k * horizon).abs() <= 2.0 * arr.n_positive() as f64);
        let model = WalkModel::for_horizon(&arr, &l0, &b, 0.3, horizon).unwrap();
        assert_eq!(model.steps() as f64, count);
    }
    let lip = hit_rate_lipschitz(&arr);
    let mut rng = RngStream::new(2, 0);
    for _ in 0..100 {
        let u: Vec<f64> = (0..2).map(|_| rng.next_f64() - 0.5).collect();
        let v: Vec<f64> = (0..2).map(|_| rng.next_f64() - 0.5).collect();
        let nu = DVector::from_vec(u.clone()).normalize();
        let nv = DVector::from_vec(v.clone()).normalize();
        let gap = (hit_rate(&arr, &u).unwrap() - hit_rate(&arr, &v).unwrap()).abs();
        assert!(gap <= lip * (nu - nv).norm() + 1e-12);
    }
}

#[test]
fn window_frequencies_a1_and_rational() {
    let a1 = Arrangement::parse("A1").unwrap();
    let t = window_frequencies(&a1, &[0.5], &[1.0], 2, 1_000, 0).unwrap();
    assert!((t.frequency(&[0, 1]) - 0.5).abs() < 1e-3);
    assert!((t.frequency(&[1, 0]) - 0.5).abs() < 1e-3);
    assert_eq!(t.frequency(&[0, 0]) + t.frequency(&[1, 1]), 0.0);

    let pr = preset("a2-rational").unwrap();
    let arr = pr.arrangement().unwrap();
    let (l0, b) = (pr.start_point(&arr).unwrap(), pr.direction(&arr).unwrap());
    let labels = cutting_sequence(&arr, &l0, &b, 10_000).unwrap();
    // brute-force period search
    let period = (1..50)
        .find(|&q| {
            labels[100..]
                .iter()
                .zip(&labels[100 + q..])
                .all(|(a, b)| a == b)
        })
        .expect("eventually periodic");
    assert_eq!(period, 3);
    let cycle = &labels[100..100 + period];
    let t = window_frequencies(&arr, &l0, &b, 2, 9_000, 100).unwrap();
    for j in 0..period {
        let pattern = [cycle[j], cycle[(j + 1) % period]];
        assert!((t.frequency(&pattern) - 1.0 / period as f64).abs() < 1e-3);
    }
}

#[test]
fn irrational_window_tables_do_not_depend_on_the_offset() {
    let arr = a2();
    let (l0, b) = irrational_a2(&arr);
    let n = 1_000_000;
    let early = window_frequencies(&arr, &l0, &b, 3, n, 0).unwrap();
    let late = window_frequencies(&arr, &l0, &b, 3, n, 100_000).unwrap();
    for (pattern, f) in early.frequencies() {
        let g = late.frequency(pattern);
        let band = 4.0 * (f.max(g) / n as f64).sqrt() + 1e-5;
        assert!((f - g).abs() <= band, "{pattern:?}: {f} vs {g}");
    }
}

#[test]
fn first_return_is_a_fixed_translation() {
    let arr = a2();
    let (_, b) = irrational_a2(&arr);
    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let b: Vec<f64> = b.iter().map(|v| v / norm).collect();
    let mut rng = RngStream::new(4, 0);
    for j in 0..arr.n_positive() {
        let alpha = DVector::from_column_slice(arr.positive_root(j));
        let along: f64 = alpha.dot(&DVector::from_column_slice(&b));
        for parity in 0..2u8 {
            let mut first: Option<Vec<f64>> = None;
            for _ in 0..100 {
                // random point of the hyperplane x·α = parity
                let z = DVector::from_vec(vec![
                    rng.next_f64() * 10.0 - 5.0,
                    rng.next_f64() * 10.0 - 5.0,
                ]);
                let x = &z - &alpha * ((z.dot(&alpha) - parity as f64) / alpha.norm_squared());
                let (y, tau) = first_return(&arr, j, parity, x.as_slice(), &b).unwrap();
                assert!((tau - 2.0 / along.abs()).abs() < 1e-9);
                let disp: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                match &first {
                    None => first = Some(disp),
                    Some(f) => assert!(f.iter().zip(&disp).all(|(a, b)| (a - b).abs() < 1e-8)),
                }
                let back: Vec<f64> = b.iter().map(|v| -v).collect();
                let (y2, _) = first_return(&arr, j, parity, x.as_slice(), &back).unwrap();
                for r in 0..2 {
                    assert!(((y2[r] - x[r]) + (y[r] - x[r])).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn direction_classes() {
    let arr = a2();
    let along_coroot = from_coroot(&arr, &[1.0, 0.0]).unwrap();
    assert_eq!(
        classify_direction(&arr, &along_coroot, 1e6).unwrap().class,
        DirectionClass::Rational
    );
    let irr = from_coroot(&arr, &[1.0, 2f64.sqrt()]).unwrap();
    assert_eq!(
        classify_direction(&arr, &irr, 1e6).unwrap().class,
        DirectionClass::FullyIrrational
    );
    let near = from_coroot(&arr, &[1.0, 1.0 + 1e-12]).unwrap();
    assert_eq!(
        classify_direction(&arr, &near, 1e6).unwrap().class,
        DirectionClass::Intermediate
    );
}

#[test]
fn continuous_paths_have_unit_speed() {
    let arr = a2();
    let (l0, b) = irrational_a2(&arr);
    let model = WalkModel::for_horizon(&arr, &l0, &b, 0.3, 50.0).unwrap();
    for tr in [
        model
            .simulate_continuous(&mut RngStream::new(8, 0), 50.0)
            .unwrap(),
        model
            .simulate_physical(&mut RngStream::new(8, 0), 50.0, false)
            .unwrap(),
        model
            .simulate_refraction(&mut RngStream::new(8, 0), 50.0)
            .unwrap(),
    ] {
        let mut length = 0.0;
        for (w, t) in tr.points.windows(2).zip(tr.times.windows(2)) {
            let seg: f64 = w[0]
                .iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(seg <= t[1] - t[0] + 1e-9);
            length += seg;
        }
        assert!((length - 50.0).abs() < 1e-6, "{:?}: {length}", tr.mode);
    }
    // the reconstructed and the re-traced reflecting laser agree
    let a = model
        .simulate_continuous(&mut RngStream::new(8, 0), 50.0)
        .unwrap();
    let b2 = model
        .simulate_physical(&mut RngStream::new(8, 0), 50.0, false)
        .unwrap();
    assert_eq!(a.labels, b2.labels);
    for (x, y) in a.points.iter().zip(&b2.points) {
        assert!(x.iter().zip(y).all(|(u, v)| (u - v).abs() < 1e-7));
    }
}

#[test]
fn a1_refraction_walk_is_ballistic() {
    let arr = Arrangement::parse("A1").unwrap();
    let model = WalkModel::for_horizon(&arr, &[0.5], &[1.0], 0.5, 1_000.0).unwrap();
    let tr = model
        .simulate_refraction(&mut RngStream::new(1, 0), 1_000.0)
        .unwrap();
    let end = tr.points.last().unwrap()[0];
    assert!((end - 1_000.5).abs() < 1e-6);
}

#[test]
fn ensembles_match_a_binomial_and_ignore_worker_count() {
    let arr = a2();
    let (l0, b) = irrational_a2(&arr);
    let p = 0.3;
    let n = 1_000;
    let model = WalkModel::new(&arr, &l0, &b, p, n).unwrap();
    let count = |rng: &mut RngStream| -> billiard_walk::Result<f64> {
        Ok(model
            .simulate_discrete(rng)
            .epsilons
            .iter()
            .map(|&e| e as f64)
            .sum())
    };
    let seq = ensemble(Exec::Sequential, 1_000, 11, count).unwrap();
    let par = ensemble(Exec::Parallel(3), 1_000, 11, count).unwrap();
    assert_eq!(seq, par);
    let mean = seq.iter().sum::<f64>() / seq.len() as f64;
    let n = n as f64;
    assert!((mean - (1.0 - p) * n).abs() <= 4.0 * (n * p * (1.0 - p)).sqrt());
    let one = ensemble(Exec::Auto, 1, 11, count).unwrap();
    assert_eq!(one, vec![seq[0]]);
}

#[test]
fn estimators_are_bit_identical_across_thread_counts() {
    let arr = a2();
    let (l0, b) = irrational_a2(&arr);
    let model = WalkModel::new(&arr, &l0, &b, 0.3, 500).unwrap();
    let a = empirical_sigma(&model, 3_000, 5, Exec::Sequential).unwrap();
    for threads in [2, 4] {
        let b = empirical_sigma(&model, 3_000, 5, Exec::Parallel(threads)).unwrap();
        assert_eq!(a.covariance, b.covariance);
        assert_eq!(a.sigma2.to_bits(), b.sigma2.to_bits());
    }
}

#[test]
fn large_types_simulate_without_enumeration() {
    let arr = Arrangement::parse("E8").unwrap();
    assert!(arr.group().is_err());
    let b: Vec<f64> = (1..=8).map(|k| (k as f64).sqrt()).collect();
    let l0 = arr.frame.centroid.as_slice().to_vec();
    let model = WalkModel::new(&arr, &l0, &b, 0.3, 2_000).unwrap();
    let tr = model.simulate_discrete(&mut RngStream::new(1, 0));
    let norms: Vec<f64> = arr.frame.beta.iter().map(|b| b.norm()).collect();
    for w in tr.points.windows(2) {
        let step: f64 = w[0]
            .iter()
            .zip(&w[1])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(step == 0.0 || norms.iter().any(|nb| (nb - step).abs() < 1e-8));
    }
}
