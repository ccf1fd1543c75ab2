//! The end-to-end verification criteria, runnable at full or reduced budget.
//!
//! Each criterion returns an [`Outcome`] whose `Display` is the one-line
//! pass/fail summary printed by the test suite and by `rbw verify-all`.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::affine::AffineIsometry;
use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mixing::{
    self, contraction_constant, mixing_curve, quotient_equidistribution, step_bias,
};
use crate::presets::{preset, Preset};
use crate::ray::{cutting_sequence, hit_rate};
use crate::rng::RngStream;
use crate::stats::{
    almost_martingale_constant, empirical_moment_tensors, empirical_sigma, fourth_moment_ratio,
    functional_tests, growth_function, martingale_error, schur_average, sigma_via_series,
};
use crate::walk::{Trajectory, WalkModel};

pub const CRITERIA: [(u8, &str); 14] = [
    (1, "simple random walk variance"),
    (2, "A1 closed-form variance"),
    (3, "Schur averaging identity"),
    (4, "contraction constants"),
    (5, "mixing bound"),
    (6, "step bias decay"),
    (7, "determinism and label invariance"),
    (8, "continuous/discrete coupling"),
    (9, "isotropy and moment tensors"),
    (10, "series vs empirical variance"),
    (11, "growth function"),
    (12, "quotient equidistribution"),
    (13, "martingale approximation"),
    (14, "functional limit proxies"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Budget {
    /// Sample sizes as stated for each criterion.
    Full,
    /// A tenth of the Monte-Carlo work, never below 10⁴ runs. Bands widen accordingly;
    /// fixed tolerances are widened to three standard errors when the
    /// smaller ensemble cannot resolve them.
    Reduced,
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub budget: Budget,
    pub exec: Exec,
    pub seed: u64,
    /// Negate `β_i` in every arrangement (a deliberately corrupted geometry
    /// that verification must reject).
    pub flip_beta: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            budget: Budget::Full,
            exec: Exec::Auto,
            seed: 20240601,
            flip_beta: None,
        }
    }
}

impl Settings {
    pub fn reduced() -> Self {
        Self {
            budget: Budget::Reduced,
            ..Self::default()
        }
    }

    fn runs(&self, full: u64) -> u64 {
        match self.budget {
            Budget::Full => full,
            Budget::Reduced => (full / 10).max(10_000).min(full),
        }
    }

    fn full(&self) -> bool {
        self.budget == Budget::Full
    }

    fn arrangement(&self, type_name: &str) -> Result<Arrangement> {
        let mut arr = Arrangement::parse(type_name)?;
        if let Some(i) = self.flip_beta {
            if i <= arr.rank() {
                let mut beta = arr.frame.beta.clone();
                beta[i] = -&beta[i];
                arr.override_beta(beta);
            }
        }
        Ok(arr)
    }

    fn preset(&self, name: &str) -> Result<(Preset, Arrangement)> {
        let pr = preset(name)?;
        let arr = self.arrangement(pr.type_name)?;
        Ok((pr, arr))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} [{:.1} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

fn title(id: u8) -> &'static str {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown", |c| c.1)
}

/// Runs one criterion. Errors raised while evaluating it are reported as a
/// failure with the error in the detail.
pub fn run(id: u8, settings: &Settings) -> Outcome {
    let start = Instant::now();
    let result = match id {
        1 => srw_variance(settings),
        2 => a1_closed_form(settings),
        3 => schur_identity(settings),
        4 => contraction_exactness(settings),
        5 => mixing_bound(settings),
        6 => bias_decay(settings),
        7 => determinism(settings),
        8 => coupling(settings),
        9 => isotropy_moments(settings),
        10 => series_consistency(settings),
        11 => growth(settings),
        12 => quotient(settings),
        13 => martingale(settings),
        14 => functional(settings),
        _ => Err(Error::Config(format!("no criterion {id}"))),
    };
    let (passed, detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        title: title(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the criteria in order, stopping after the first failure when
/// `stop_on_failure` is set.
pub fn run_all(
    settings: &Settings,
    stop_on_failure: bool,
    mut report: impl FnMut(&Outcome),
) -> Vec<Outcome> {
    let mut out = Vec::new();
    for (id, _) in CRITERIA {
        let o = run(id, settings);
        report(&o);
        let failed = !o.passed;
        out.push(o);
        if failed && stop_on_failure {
            break;
        }
    }
    out
}

type Verdict = Result<(bool, String)>;

fn srw_variance(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a1-p0.5")?;
    let model = pr.model(&arr, 10_000)?;
    let est = empirical_sigma(&model, s.runs(100_000), s.seed, s.exec)?;
    let tol = 0.02f64.max(3.0 * est.sigma2_se);
    let ok = (est.sigma2 - 1.0).abs() <= tol;
    Ok((
        ok,
        format!(
            "σ̂² = {:.4} ± {:.4}, |σ̂² − 1| ≤ {tol:.4}",
            est.sigma2, est.sigma2_se
        ),
    ))
}

/// Exact `E[(X_N − X_0)²]` for the A1 walk from the finite geometric sum of
/// step correlations `E[ΔX_j ΔX_{j+m}] = (1−p)²(1−2p)^{m−1}`.
fn a1_exact_second_moment(p: f64, n: usize) -> f64 {
    let mut total = n as f64 * (1.0 - p);
    for m in 1..n {
        total += 2.0 * (n - m) as f64 * (1.0 - p).powi(2) * (1.0 - 2.0 * p).powi(m as i32 - 1);
    }
    total
}

fn a1_closed_form(s: &Settings) -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["a1-p0.3", "a1-p0.7"] {
        let (pr, arr) = s.preset(name)?;
        let p = pr.p;
        let target = (1.0 - p) / p;
        // every ε-word of length 16 pushed through the walk engine
        let n_enum = 16;
        let small = pr.model(&arr, n_enum)?;
        let mut enumerated = 0.0;
        for word in 0u32..1 << n_enum {
            let mut st = small.initial_state();
            let mut weight = 1.0;
            for k in 0..n_enum {
                let eps = word >> k & 1 == 1;
                weight *= if eps { 1.0 - p } else { p };
                small.step_with(&mut st, eps);
            }
            enumerated += weight * (st.centroid[0] - small.x0[0]).powi(2);
        }
        let exact = a1_exact_second_moment(p, n_enum);
        let enum_ok = (enumerated - exact).abs() < 1e-9;

        let model = pr.model(&arr, 10_000)?;
        let est = empirical_sigma(&model, s.runs(100_000), s.seed, s.exec)?;
        let emp_ok = (est.sigma2 - target).abs() <= 3.0 * est.sigma2_se;
        let series = sigma_via_series(&arr, &pr.model(&arr, 100_000)?.labels, p, 12, None)?;
        let series_ok = (series.sigma2 - target).abs() < 1e-3;
        ok &= enum_ok && emp_ok && series_ok;
        detail.push(format!(
            "p={p}: enum E[X₁₆²] {enumerated:.6} vs {exact:.6}; σ̂² {:.4} ± {:.4}; series {:.6}; target {target:.6}",
            est.sigma2, est.sigma2_se, series.sigma2
        ));
    }
    Ok((ok, detail.join(" | ")))
}

fn schur_identity(s: &Settings) -> Verdict {
    let mut worst = 0.0f64;
    for (t, ty) in ["A2", "B2", "G2", "F4"].into_iter().enumerate() {
        let arr = s.arrangement(ty)?;
        let g = arr.group()?;
        let d = arr.rank();
        let mut rng = RngStream::new(s.seed, 1000 + t as u64);
        for _ in 0..100 {
            let x = DMatrix::from_fn(d, d, |_, _| 2.0 * rng.next_f64() - 1.0);
            let target = DMatrix::identity(d, d) * (x.trace() / d as f64);
            worst = worst.max((schur_average(g, &x) - target).amax());
        }
    }
    Ok((
        worst < 1e-10,
        format!("max |avg − Tr(X)/d·I| = {worst:.2e} over A2, B2, G2, F4"),
    ))
}

/// Size of the subgroup of `W` generated by `π(s_i)`, `i ∈ labels`.
fn generated_order(group: &crate::weyl_group::FiniteWeylGroup, labels: &[u8]) -> usize {
    let mut seen = vec![false; group.order()];
    let mut stack = vec![group.identity()];
    seen[group.identity()] = true;
    while let Some(w) = stack.pop() {
        for &i in labels {
            let v = group.mul_gen(w, i as usize);
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().filter(|&&x| x).count()
}

fn contraction_exactness(s: &Settings) -> Verdict {
    let a1 = s.arrangement("A1")?;
    let g1 = a1.group()?;
    let mut a1_err = 0.0f64;
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let c = contraction_constant(g1, &[0, 1], p)?.value;
        a1_err = a1_err.max((c - (2.0 * p - 1.0).powi(2)).abs());
    }
    let a2 = s.arrangement("A2")?;
    let g2 = a2.group()?;
    let mut checked = 0;
    // windows violating "< 1 with every label, = 1 otherwise"
    let mut label_rule = 0;
    // windows violating "< 1 iff the labels generate W"
    let mut generation_rule = 0;
    let mut worst_full = 0.0f64;
    for p in [0.3, 0.7] {
        for len in 1..=4u32 {
            for code in 0..3usize.pow(len) {
                let iota: Vec<u8> = (0..len).map(|k| (code / 3usize.pow(k) % 3) as u8).collect();
                let c = contraction_constant(g2, &iota, p)?;
                let all = (0..3).all(|l| iota.contains(&l));
                let strict = c.value < 1.0 - 1e-9;
                let unit = (c.value - 1.0).abs() <= 1e-12;
                checked += 1;
                if all {
                    worst_full = worst_full.max(c.value);
                }
                label_rule += usize::from(if all { !strict } else { !unit } || c.all_labels != all);
                let generates = generated_order(g2, &iota) == g2.order();
                generation_rule += usize::from(if generates { !strict } else { !unit });
            }
        }
    }
    let ok = a1_err < 1e-12 && label_rule == 0;
    Ok((
        ok,
        format!(
            "A1 max |c − (2p−1)²| = {a1_err:.1e}; A2 {checked} windows: max c with every label {worst_full:.4}, \
             {label_rule} windows break \"= 1 when a label is missing\", \
             {generation_rule} break \"< 1 iff the labels generate W\""
        ),
    ))
}

/// Joint decay fit for the irrational A2 preset from the starts `0` and
/// `10³`: the envelope `ĉ` and both curves.
struct RateFit {
    c_hat: f64,
    curves: Vec<mixing::MixingCurve>,
}

fn a2_rate(s: &Settings) -> Result<RateFit> {
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 1_100)?;
    let curves = [0, 1_000]
        .into_iter()
        // cheap at any budget, and the slope comparison needs the full ensemble
        .map(|n0| mixing_curve(&model, n0, 40, 100_000, s.seed, s.exec))
        .collect::<Result<Vec<_>>>()?;
    let c_hat = curves.iter().map(|c| c.fit.c_hat).fold(0.0, f64::max);
    if !(c_hat > 0.0 && c_hat < 1.0) {
        return Err(Error::Estimator(format!("decay fit gave c = {c_hat}")));
    }
    Ok(RateFit { c_hat, curves })
}

fn mixing_bound(s: &Settings) -> Verdict {
    let fit = a2_rate(s)?;
    let c = fit.c_hat;
    let mut worst = f64::NEG_INFINITY;
    let mut exact_worst = 0.0f64;
    for curve in &fit.curves {
        for k in 0..curve.n.len() {
            let excess = curve.tv[k] - c.powi(curve.n[k] as i32) - 3.0 * curve.band[k];
            worst = worst.max(excess);
            exact_worst = exact_worst
                .max(curve.tv_exact[k] - c.powi(curve.n[k] as i32) - 3.0 * curve.band[k]);
        }
    }
    let slopes: Vec<f64> = fit.curves.iter().filter_map(|c| c.fit.c_slope).collect();
    let same_profile = slopes.len() == 2 && (slopes[0] - slopes[1]).abs() <= 0.05;
    let ok = worst <= 0.0 && exact_worst <= 0.0 && same_profile;
    Ok((
        ok,
        format!(
            "ĉ = {c:.4}; max (TV − ĉⁿ − 3·band) = {worst:.2e}; exact curves {exact_worst:.2e}; \
             slope rates {:?} (n0 = 0, 10³) differ by ≤ 0.05",
            slopes.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    ))
}

fn bias_decay(s: &Settings) -> Verdict {
    let c = a2_rate(s)?.c_hat;
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 1_100)?;
    let order = arr.group()?.order() as f64;
    let mut worst = f64::NEG_INFINITY;
    for n0 in [0, 1_000] {
        let curve = step_bias(&model, n0, 40, s.runs(100_000), s.seed, s.exec)?;
        for k in 0..curve.n.len() {
            let bound = (1.0 - pr.p) * order * c.powi(curve.n[k] as i32) + 3.0 * curve.band[k];
            worst = worst.max(curve.bias[k] - bound);
        }
    }
    Ok((
        worst <= 0.0,
        format!("ĉ = {c:.4}; max (‖Ê[ΔX]‖ − (1−p)|W|ĉⁿ − 3·se) = {worst:.2e} for n ≤ 40, n0 ∈ {{0, 10³}}"),
    ))
}

fn random_affine_element(arr: &Arrangement, rng: &mut RngStream) -> AffineIsometry {
    let d = arr.rank();
    let mut u = AffineIsometry::identity(d);
    let len = 1 + (rng.next_u64() % 12) as usize;
    for _ in 0..len {
        let i = (rng.next_u64() % (d as u64 + 1)) as usize;
        u = u.compose(&arr.frame.simple_affine[i]);
    }
    let shift: Vec<f64> = (0..d).map(|_| (rng.next_u64() % 7) as f64 - 3.0).collect();
    let t = &arr.spec.coroot_basis * DVector::from_vec(shift);
    AffineIsometry::translation(t).compose(&u)
}

fn determinism(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 2_000)?;
    let l0 = pr.start_point(&arr)?;
    let b = pr.direction(&arr)?;
    let reference = cutting_sequence(&arr, &l0, &b, 2_000)?;
    let mut seeds_ok = true;
    for seed in 0..16 {
        let a = model.simulate_discrete(&mut RngStream::new(seed, 0));
        let again = model.simulate_discrete(&mut RngStream::new(seed, 0));
        seeds_ok &=
            a.labels == reference && a.points == again.points && a.epsilons == again.epsilons;
    }
    let mut rng = RngStream::new(s.seed, 77);
    let mut invariant = 0;
    for _ in 0..50 {
        let u = random_affine_element(&arr, &mut rng);
        let l1 = u.apply(&DVector::from_column_slice(&l0));
        let b1 = &u.linear * DVector::from_column_slice(&b);
        let moved = cutting_sequence(&arr, l1.as_slice(), b1.as_slice(), 2_000)?;
        invariant += usize::from(moved == reference);
    }
    let ok = seeds_ok && invariant == 50;
    Ok((
        ok,
        format!("labels identical across 16 seeds: {seeds_ok}; invariant under {invariant}/50 affine Weyl elements"),
    ))
}

/// `sup_t ‖L_t − X_{⌊k t⌋}‖` over `[0, T]`, checked at every breakpoint of
/// either path (the distance is convex between breakpoints).
fn coupling_distance(cont: &Trajectory, disc: &Trajectory, k: f64, horizon: f64) -> f64 {
    let mut marks: Vec<f64> = cont.times.clone();
    let jumps = (k * horizon).floor() as usize;
    marks.extend((1..=jumps).map(|m| m as f64 / k));
    marks.sort_by(f64::total_cmp);
    let pos = |t: f64| -> Vec<f64> {
        let j = cont.times.partition_point(|&x| x <= t).saturating_sub(1);
        let j = j.min(cont.times.len() - 2);
        let span = cont.times[j + 1] - cont.times[j];
        let f = if span > 0.0 {
            ((t - cont.times[j]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        cont.points[j]
            .iter()
            .zip(&cont.points[j + 1])
            .map(|(a, b)| a + f * (b - a))
            .collect()
    };
    let last = disc.points.len() - 1;
    let mut worst = 0.0f64;
    for &t in &marks {
        let l = pos(t);
        let hi = ((k * t).floor() as usize).min(last);
        let lo = ((k * t).ceil() as usize).saturating_sub(1).min(hi);
        for idx in [lo, hi] {
            let dist: f64 = l
                .iter()
                .zip(&disc.points[idx])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(dist);
        }
    }
    worst
}

fn coupling(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a2-irrational")?;
    let horizon = 1_000.0;
    let l0 = pr.start_point(&arr)?;
    let b = pr.direction(&arr)?;
    let k = hit_rate(&arr, &b)?;
    let model = WalkModel::new(&arr, &l0, &b, pr.p, (k * horizon).ceil() as usize + 16)?;
    let limit = 2.0 * arr.frame.diameter();
    let mut worst = 0.0f64;
    for r in 0..100 {
        let disc = model.simulate_discrete(&mut RngStream::new(s.seed, r));
        let cont = model.simulate_physical(&mut RngStream::new(s.seed, r), horizon, false)?;
        worst = worst.max(coupling_distance(&cont, &disc, k, horizon));
    }
    Ok((
        worst <= limit,
        format!("k_b = {k:.4}; max sup_t ‖L_t − X_⌊k_b t⌋‖ = {worst:.4} ≤ 2·diam = {limit:.4}"),
    ))
}

fn isotropy_moments(s: &Settings) -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["a2-irrational", "g2"] {
        let (pr, arr) = s.preset(name)?;
        let model = pr.model(&arr, 10_000)?;
        let runs = s.runs(10_000);
        let est = empirical_sigma(&model, runs, s.seed, s.exec)?;
        let iso = &est.isotropy;
        let off_ok = iso.max_off_diagonal <= 3.0 * iso.off_diagonal_se;
        let moments = empirical_moment_tensors(&model, &[3, 4], runs, s.seed, s.exec)?;
        let (t3, se3) = (&moments.tensors[0], &moments.se[0]);
        let odd = t3
            .entries
            .iter()
            .zip(&se3.entries)
            .map(|(x, e)| x.abs() / e)
            .fold(0.0, f64::max);
        let ratio = fourth_moment_ratio(&moments.tensors[1])?;
        let case_ok = off_ok && odd <= 3.0 && (ratio - 3.0).abs() <= 0.3;
        ok &= case_ok;
        detail.push(format!(
            "{name}: off-diag {:.4} (3·band {:.4}); max |T₃|/se {odd:.2}; fourth ratio {ratio:.3}",
            iso.max_off_diagonal,
            3.0 * iso.off_diagonal_se
        ));
    }
    Ok((ok, detail.join(" | ")))
}

fn series_consistency(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a2-irrational")?;
    let labels = pr.model(&arr, 1_000_000)?.labels;
    let series = sigma_via_series(&arr, &labels, pr.p, 12, None)?;
    let model = pr.model(&arr, 10_000)?;
    let est = empirical_sigma(&model, s.runs(10_000), s.seed, s.exec)?;
    let rel = (series.sigma2 - est.sigma2).abs() / est.sigma2;
    let tol = if s.full() {
        0.05
    } else {
        0.05f64.max(3.0 * est.sigma2_se / est.sigma2)
    };
    Ok((
        rel <= tol,
        format!(
            "series σ² = {:.5}, empirical σ̂² = {:.5} ± {:.5}, relative gap {:.2}% (≤ {:.1}%)",
            series.sigma2,
            est.sigma2,
            est.sigma2_se,
            100.0 * rel,
            100.0 * tol
        ),
    ))
}

fn growth(s: &Settings) -> Verdict {
    let c = a2_rate(s)?.c_hat;
    let (pr, arr) = s.preset("a2-irrational")?;
    let c_const = almost_martingale_constant(&arr, pr.p, c)?;
    let sigma2 = sigma_via_series(&arr, &pr.model(&arr, 1_000_000)?.labels, pr.p, 12, None)?.sigma2;
    let grid = [
        100, 200, 1_000, 1_100, 2_000, 10_000, 10_100, 11_000, 20_000,
    ];
    let n0_grid = [0, 1_000, 5_000];
    let model = pr.model(&arr, 25_000)?;
    let report = growth_function(
        &model,
        &grid,
        &n0_grid,
        s.runs(10_000),
        s.seed,
        c_const,
        s.exec,
    )?;
    // f(n)/n → d·σ²; the band is a factor of two either side
    let centre = arr.rank() as f64 * sigma2;
    let (lo, hi) = (0.5 * centre, 2.0 * centre);
    let ratios: Vec<f64> = [100, 1_000, 10_000]
        .iter()
        .map(|n| report.ratio[grid.iter().position(|g| g == n).expect("on grid")])
        .collect();
    let band_ok = ratios.iter().all(|r| (lo..=hi).contains(r));
    let applicable: Vec<_> = report.induct.iter().filter(|c| c.applicable).collect();
    let induct_ok = !applicable.is_empty() && applicable.iter().all(|c| c.holds);
    Ok((
        band_ok && induct_ok,
        format!(
            "f̂(n)/n at n = 10², 10³, 10⁴: {:.4}, {:.4}, {:.4} in [{lo:.4}, {hi:.4}]; \
             C = {c_const:.3}; inequality holds on {}/{} applicable pairs ({} pairs total)",
            ratios[0],
            ratios[1],
            ratios[2],
            applicable.iter().filter(|c| c.holds).count(),
            applicable.len(),
            report.induct.len()
        ),
    ))
}

fn quotient(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 1_000)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for lambda in [2, 3] {
        let rep =
            quotient_equidistribution(&model, lambda, &[1_000], s.runs(100_000), s.seed, s.exec)?;
        let limit = 2.0 / rep.size as f64;
        ok &= rep.size == 6 * lambda * lambda && rep.deviation[0] < limit;
        detail.push(format!(
            "λ = {lambda}: |𝒟| = {}, deviation {:.5} < {limit:.5}",
            rep.size, rep.deviation[0]
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn martingale(s: &Settings) -> Verdict {
    let c = a2_rate(s)?.c_hat;
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 2_000)?;
    let mut medians = Vec::new();
    let mut sums_ok = true;
    let mut sums = Vec::new();
    for n in [16, 32, 64] {
        let rep = martingale_error(&model, n, c, s.runs(10_000), s.seed, s.exec)?;
        medians.push(rep.median);
        sums_ok &= rep.correction_sum <= rep.bound_sum;
        sums.push(format!("{:.3} ≤ {:.3}", rep.correction_sum, rep.bound_sum));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    Ok((
        decreasing && sums_ok,
        format!(
            "ĉ = {c:.4}; medians at n = 16, 32, 64: {:.4}, {:.4}, {:.4} (strictly decreasing: {decreasing}); \
             correction sums {}",
            medians[0],
            medians[1],
            medians[2],
            sums.join(", ")
        ),
    ))
}

fn functional(s: &Settings) -> Verdict {
    let (pr, arr) = s.preset("a2-irrational")?;
    let model = pr.model(&arr, 10_000)?;
    let rep = functional_tests(&model, s.runs(10_000), s.seed, s.exec)?;
    let ks_max = rep.ks.iter().flatten().copied().fold(0.0, f64::max);
    let corr_max = rep
        .increment_correlations
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let ok = ks_max < rep.ks_critical && corr_max <= rep.correlation_band;
    let raw_max = rep.ks_raw.iter().flatten().copied().fold(0.0, f64::max);
    Ok((
        ok,
        format!(
            "max KS {ks_max:.4} < {:.4} (uncentered {raw_max:.4}); max increment correlation {corr_max:.4} ≤ {:.4}",
            rep.ks_critical, rep.correlation_band
        ),
    ))
}
