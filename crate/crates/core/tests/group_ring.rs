use billiard_walk::exec::Exec;
use billiard_walk::mixing::{
    apply_t, certify_rate, contraction_constant, covering_length, exact_direction_law,
    mixing_curve, propagate, restricted_singular_values, Distribution,
};
use billiard_walk::presets::preset;
use billiard_walk::Arrangement;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Order of the subgroup generated by the reflection matrices of the given
/// labels, by closure of matrix products (no use of the group tables).
fn generated_by_matrices(arr: &Arrangement, labels: &[u8]) -> usize {
    let gens: Vec<DMatrix<f64>> = labels
        .iter()
        .map(|&i| arr.frame.simple_affine[i as usize].linear.clone())
        .collect();
    let d = arr.rank();
    let mut found = vec![DMatrix::identity(d, d)];
    let mut frontier = found.clone();
    while let Some(m) = frontier.pop() {
        for g in &gens {
            let next = &m * g;
            if !found.iter().any(|f| (f - &next).amax() < 1e-9) {
                found.push(next.clone());
                frontier.push(next);
            }
        }
    }
    found.len()
}

fn all_windows(n_labels: u8, max_len: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for code in 0..(n_labels as usize).pow(len) {
            out.push(
                (0..len)
                    .map(|k| (code / (n_labels as usize).pow(k) % n_labels as usize) as u8)
                    .collect(),
            );
        }
    }
    out
}

#[test]
fn contraction_iff_labels_generate_the_group() {
    for ty in ["A2", "B2", "G2"] {
        let arr = Arrangement::parse(ty).unwrap();
        let g = arr.group().unwrap();
        let d = arr.rank() as u8;
        for iota in all_windows(d + 1, d as u32 + 2) {
            let c = contraction_constant(g, &iota, 0.3).unwrap();
            let generates = generated_by_matrices(&arr, &iota) == g.order();
            if generates {
                assert!(c.value < 1.0 - 1e-9, "{ty} {iota:?}: {}", c.value);
            } else {
                assert!((c.value - 1.0).abs() < 1e-10, "{ty} {iota:?}: {}", c.value);
            }
            // every label present is sufficient
            if c.all_labels {
                assert!(generates && c.value < 1.0);
            }
            assert!(c.value >= 0.4f64.powi(iota.len() as i32) - 1e-12);
        }
    }
}

#[test]
fn a2_windows_with_two_labels_already_contract() {
    // the three reflections of A2 pairwise generate S3
    let arr = Arrangement::parse("A2").unwrap();
    let c = contraction_constant(arr.group().unwrap(), &[0, 1], 0.3).unwrap();
    assert!(!c.all_labels);
    assert!(c.value < 0.7);
    let single = contraction_constant(arr.group().unwrap(), &[2, 2, 2], 0.3).unwrap();
    assert!((single.value - 1.0).abs() < 1e-12);
}

#[test]
fn a1_half_averages_in_one_step() {
    let arr = Arrangement::parse("A1").unwrap();
    let c = contraction_constant(arr.group().unwrap(), &[0], 0.5).unwrap();
    assert!(c.value.abs() < 1e-12);
}

#[test]
fn restricted_spectrum_is_one_and_two_p_minus_one() {
    for ty in ["A1", "A2", "B3", "G2", "D4"] {
        let arr = Arrangement::parse(ty).unwrap();
        let g = arr.group().unwrap();
        for p in [0.1, 0.3, 0.5, 0.8] {
            for i in 0..=arr.rank() {
                let sv = restricted_singular_values(g, i, p);
                let target = (2.0 * p - 1.0f64).abs();
                for s in sv.iter() {
                    assert!(
                        (s - 1.0).abs() < 1e-9 || (s - target).abs() < 1e-9,
                        "{ty} i={i} p={p}: {s}"
                    );
                }
            }
        }
    }
}

#[test]
fn a1_two_point_transition() {
    let arr = Arrangement::parse("A1").unwrap();
    let g = arr.group().unwrap();
    let d = apply_t(g, &Distribution::point_mass(2, g.identity()), 1, 0.3);
    let mut probs = d.probs().to_vec();
    probs.sort_by(f64::total_cmp);
    assert!((probs[0] - 0.3).abs() < 1e-15 && (probs[1] - 0.7).abs() < 1e-15);
    assert_eq!(d.probs()[g.identity()], 0.3);
}

#[test]
fn uniform_a1_is_exactly_mixed_at_one_half() {
    let pr = preset("a1-p0.5").unwrap();
    let arr = pr.arrangement().unwrap();
    let model = pr.model(&arr, 60).unwrap();
    let curve = mixing_curve(&model, 0, 20, 2_000, 1, Exec::Sequential).unwrap();
    assert!(curve.tv_exact[1..].iter().all(|&t| t < 1e-15));
}

#[test]
fn certificate_bounds_the_exact_curve() {
    let pr = preset("a2-irrational").unwrap();
    let arr = pr.arrangement().unwrap();
    let model = pr.model(&arr, 5_000).unwrap();
    let cert = certify_rate(&model, 0, 5_000).unwrap();
    assert!(cert.c_certified < 1.0);
    assert_eq!(Some(cert.m_cover), covering_length(&model.labels, 3));
    let g = arr.group().unwrap();
    // |P_n(w) − 1/|W|| ≤ c^n / κ on every prefix
    for n in [10, 50, 200] {
        let law = exact_direction_law(g, &model.labels[..n], model.p);
        let bound = cert.c_certified.powi(n as i32) / cert.kappa;
        assert!(law.max_deviation() <= bound + 1e-12, "n = {n}");
    }
}

proptest! {
    #[test]
    fn apply_t_preserves_mass_and_sign(
        weights in proptest::collection::vec(0.0f64..1.0, 6),
        labels in proptest::collection::vec(0u8..3, 0..20),
        p in 0.0f64..=1.0,
    ) {
        let arr = Arrangement::parse("A2").unwrap();
        let g = arr.group().unwrap();
        let total: f64 = weights.iter().sum::<f64>() + 1e-9;
        let probs: Vec<f64> = weights.iter().map(|w| (w + 1e-9 / 6.0) / total).collect();
        let d = Distribution::from_probs(probs).unwrap();
        let out = propagate(g, &d, &labels, p);
        prop_assert!((out.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.probs().iter().all(|&x| x >= 0.0));
        // TV to uniform never grows
        prop_assert!(out.tv_to_uniform() <= d.tv_to_uniform() + 1e-12);
    }

    #[test]
    fn uniform_is_fixed(i in 0usize..3, p in 0.0f64..=1.0) {
        let arr = Arrangement::parse("A2").unwrap();
        let g = arr.group().unwrap();
        let u = Distribution::uniform(g.order());
        let out = apply_t(g, &u, i, p);
        prop_assert!(out.tv_to_uniform() < 1e-15);
    }
}
