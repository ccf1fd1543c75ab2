//! Dynamics of the direction `π(w_n)` in the group ring `ℝ[W]`.
//!
//! Conditionally on the cutting sequence, the law `P_n` of `π(w_n)` evolves by
//! right multiplication, `P_n = P_{n−1}·(p + (1−p)π(s_{i_n}))`. Each factor
//! acts on `ℝ[W]` as a symmetric operator `T_i` fixing the uniform
//! distribution, and products of `T_i` contract its orthogonal complement
//! exactly when the labels involved generate `W` (in particular, whenever
//! every label occurs). This module computes those operators
//! exactly and measures the resulting mixing by Monte Carlo.
//!
//! Laws are always followed relative to the state at the conditioning time:
//! `π(w_{n0+n}) = π(w_{n0})·v_n` where `v_n` starts at the identity, and the
//! distance to uniform is invariant under left multiplication.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::exec::{map_fold, Exec};
use crate::rng::RngStream;
use crate::walk::{GroupElem, WalkModel, WalkState};
use crate::weyl_group::FiniteWeylGroup;

/// Largest `|W|` for which operator norms use a dense SVD.
pub const DENSE_NORM_MAX: usize = 1200;
/// Largest `|W|` for which operator norms are computed at all.
pub const NORM_MAX: usize = 20_000;
/// Default memory budget (cells) for finite quotients of `W̃`.
pub const QUOTIENT_BUDGET: usize = 10_000_000;

/// A probability distribution on the enumerated group `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn point_mass(order: usize, w: usize) -> Self {
        let mut probs = vec![0.0; order];
        probs[w] = 1.0;
        Self { probs }
    }

    pub fn uniform(order: usize) -> Self {
        Self {
            probs: vec![1.0 / order as f64; order],
        }
    }

    /// Validates nonnegativity and total mass (to `1e-12`).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&q| !(q >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config("not a probability vector".into()));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn order(&self) -> usize {
        self.probs.len()
    }

    /// Total variation distance to the uniform distribution.
    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.order() as f64;
        0.5 * self.probs.iter().map(|q| (q - u).abs()).sum::<f64>()
    }

    /// `max_w |P(w) − 1/|W||`.
    pub fn max_deviation(&self) -> f64 {
        let u = 1.0 / self.order() as f64;
        self.probs.iter().fold(0.0, |m, q| m.max((q - u).abs()))
    }

    /// `Σ_w P(w) ρ(w) β_i`, i.e. `E[ρ(v)]β_i` for `v ~ P`.
    pub fn mean_step(&self, arr: &Arrangement, i: usize) -> Vec<f64> {
        let d = arr.rank();
        let mut out = vec![0.0; d];
        for (w, &q) in self.probs.iter().enumerate() {
            if q != 0.0 {
                for (o, s) in out.iter_mut().zip(arr.step_vector(w, i)) {
                    *o += q * s;
                }
            }
        }
        out
    }
}

/// `P·(p + (1−p)π(s_i))`.
pub fn apply_t(group: &FiniteWeylGroup, dist: &Distribution, i: usize, p: f64) -> Distribution {
    let mut probs = vec![0.0; dist.order()];
    for (w, &q) in dist.probs.iter().enumerate() {
        probs[w] += p * q;
        probs[group.mul_gen(w, i)] += (1.0 - p) * q;
    }
    Distribution { probs }
}

/// Applies `T_{labels[0]}`, then `T_{labels[1]}`, and so on.
pub fn propagate(
    group: &FiniteWeylGroup,
    dist: &Distribution,
    labels: &[u8],
    p: f64,
) -> Distribution {
    labels
        .iter()
        .fold(dist.clone(), |acc, &i| apply_t(group, &acc, i as usize, p))
}

/// Matrix of `T_i` in the standard basis of `ℝ[W]` (symmetric).
pub fn transition_matrix(group: &FiniteWeylGroup, i: usize, p: f64) -> DMatrix<f64> {
    let n = group.order();
    let mut m = DMatrix::zeros(n, n);
    for w in 0..n {
        m[(w, w)] += p;
        m[(group.mul_gen(w, i), w)] += 1.0 - p;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Svd,
    PowerIteration,
}

#[derive(Clone, Debug, Serialize)]
pub struct Contraction {
    /// Operator norm of `T_{ι_m}⋯T_{ι_1}` on the complement of `𝟙`.
    pub value: f64,
    /// Whether `ι` contains every label `0..=d`; the norm is below one
    /// exactly when it does.
    pub all_labels: bool,
    pub method: NormMethod,
}

/// Norm of the window operator restricted to `𝟙⊥`.
///
/// All `T_i` are symmetric and preserve `𝟙⊥`, so the order of the window
/// does not change the norm.
pub fn contraction_constant(group: &FiniteWeylGroup, iota: &[u8], p: f64) -> Result<Contraction> {
    let n = group.order();
    let d = group.rank();
    if iota.iter().any(|&i| i as usize > d) {
        return Err(Error::Config("label out of range".into()));
    }
    let mut seen = vec![false; d + 1];
    for &i in iota {
        seen[i as usize] = true;
    }
    let all_labels = seen.iter().all(|&s| s);
    if n > NORM_MAX {
        return Err(Error::GroupTooLarge { cap: NORM_MAX });
    }
    if n <= DENSE_NORM_MAX {
        let centering = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let mut op = centering.clone();
        for &i in iota {
            op = transition_matrix(group, i as usize, p) * op;
        }
        let op = &centering * op;
        let s = op.singular_values();
        Ok(Contraction {
            value: s.max(),
            all_labels,
            method: NormMethod::Svd,
        })
    } else {
        Ok(Contraction {
            value: power_norm(group, iota, p),
            all_labels,
            method: NormMethod::PowerIteration,
        })
    }
}

fn power_norm(group: &FiniteWeylGroup, iota: &[u8], p: f64) -> f64 {
    let n = group.order();
    let center = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let apply = |v: &[f64], i: usize| {
        let mut out = vec![0.0; n];
        for (w, &x) in v.iter().enumerate() {
            out[w] += p * x;
            out[group.mul_gen(w, i)] += (1.0 - p) * x;
        }
        out
    };
    let mut rng = RngStream::new(0x5eed, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    center(&mut v);
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let mut u = v.clone();
        for &i in iota {
            u = apply(&u, i as usize);
        }
        for &i in iota.iter().rev() {
            u = apply(&u, i as usize);
        }
        center(&mut u);
        let rayleigh: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let next = rayleigh.max(0.0).sqrt();
        v = u;
        if (next - estimate).abs() <= 1e-14 * next.max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Smallest `m` such that every window of length `m` of `labels` contains
/// all `n_labels` labels: one more than the longest run avoiding some label.
/// `None` if some label never occurs.
pub fn covering_length(labels: &[u8], n_labels: usize) -> Option<usize> {
    let mut last = vec![None::<usize>; n_labels];
    let mut longest = 0;
    for (k, &l) in labels.iter().enumerate() {
        let gap = last[l as usize].map_or(k, |j| k - j - 1);
        longest = longest.max(gap);
        last[l as usize] = Some(k);
    }
    for j in &last {
        longest = longest.max(labels.len() - 1 - (*j)?);
    }
    Some(longest + 1)
}

/// Decay rate of a TV curve.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Smallest `c` with `TV(n) ≤ cⁿ` on the fitted regime (`0` if the
    /// regime is empty).
    pub c_hat: f64,
    /// `exp` of the least-squares slope of `log TV(n)` against `n` on the
    /// fitted regime (asymptotic rate, ignores the prefactor).
    pub c_slope: Option<f64>,
    /// The `n` used: `n ≥ 1` with `TV(n)` above ten times the noise band.
    pub regime: Vec<usize>,
}

pub fn fit_decay(n: &[usize], tv: &[f64], band: &[f64]) -> DecayFit {
    let regime: Vec<usize> = (0..n.len())
        .filter(|&k| n[k] >= 1 && tv[k] > 10.0 * band[k] && tv[k] > 0.0)
        .collect();
    let c_hat = regime
        .iter()
        .map(|&k| tv[k].powf(1.0 / n[k] as f64))
        .fold(0.0, f64::max);
    let c_slope = (regime.len() >= 2).then(|| {
        let xs: Vec<f64> = regime.iter().map(|&k| n[k] as f64).collect();
        let ys: Vec<f64> = regime.iter().map(|&k| tv[k].ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        (sxy / sxx).exp()
    });
    DecayFit {
        c_hat,
        c_slope,
        regime: regime.iter().map(|&k| n[k]).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingCurve {
    pub n0: usize,
    pub runs: u64,
    pub n: Vec<usize>,
    /// Monte-Carlo TV distance of `π(w_{n0+n})` to uniform.
    pub tv: Vec<f64>,
    /// The same, computed exactly in `ℝ[W]`.
    pub tv_exact: Vec<f64>,
    /// One Monte-Carlo standard error of the TV estimate,
    /// `½Σ_w √(q̂_w(1−q̂_w)/M)`.
    pub band: Vec<f64>,
    pub fit: DecayFit,
}

/// TV-to-uniform of `π(w_{n0+n})` given `F_{n0}`, for `n = 0..=n_max`.
pub fn mixing_curve(
    model: &WalkModel,
    n0: usize,
    n_max: usize,
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<MixingCurve> {
    let group = model.arr.group()?;
    check_horizon(model, n0 + n_max)?;
    let order = group.order();
    let d = model.dim();
    let right = group.right_table();
    let thr = model.transmit_threshold();
    let labels = &model.labels[n0..n0 + n_max];
    let counts = map_fold(
        exec,
        runs,
        |r| {
            let mut rng = RngStream::new(seed, r);
            let mut path = Vec::with_capacity(n_max + 1);
            let mut w = group.identity();
            path.push(w as u32);
            for &i in labels {
                if rng.next_u64() < thr {
                    w = right[w * (d + 1) + i as usize] as usize;
                }
                path.push(w as u32);
            }
            Ok(path)
        },
        || vec![0u64; (n_max + 1) * order],
        |acc, path| {
            for (k, &w) in path.iter().enumerate() {
                acc[k * order + w as usize] += 1;
            }
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    )?;

    let m = runs as f64;
    let u = 1.0 / order as f64;
    let mut tv = Vec::with_capacity(n_max + 1);
    let mut band = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let row = &counts[k * order..(k + 1) * order];
        tv.push(0.5 * row.iter().map(|&c| (c as f64 / m - u).abs()).sum::<f64>());
        band.push(
            0.5 * row
                .iter()
                .map(|&c| {
                    let q = c as f64 / m;
                    (q * (1.0 - q) / m).sqrt()
                })
                .sum::<f64>(),
        );
    }
    let mut dist = Distribution::point_mass(order, group.identity());
    let mut tv_exact = vec![dist.tv_to_uniform()];
    for &i in labels {
        dist = apply_t(group, &dist, i as usize, model.p);
        tv_exact.push(dist.tv_to_uniform());
    }
    let n: Vec<usize> = (0..=n_max).collect();
    let fit = fit_decay(&n, &tv, &band);
    Ok(MixingCurve {
        n0,
        runs,
        n,
        tv,
        tv_exact,
        band,
        fit,
    })
}

/// Per-step rate certified by contraction constants.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    /// Covering length `M` of the inspected label stretch.
    pub m_cover: usize,
    /// Largest contraction constant over the distinct windows of length `M`.
    pub kappa: f64,
    /// `κ^{1/M}`: `|P_n(w) − 1/|W|| ≤ κ^{⌊n/M⌋} ≤ c^n/κ`.
    pub c_certified: f64,
    pub windows: usize,
}

/// Contraction certificate from the labels `labels[from..from+len]`.
pub fn certify_rate(model: &WalkModel, from: usize, len: usize) -> Result<Certificate> {
    let group = model.arr.group()?;
    let end = (from + len).min(model.steps());
    let stretch = &model.labels[from..end];
    let m_cover = covering_length(stretch, model.dim() + 1)
        .ok_or_else(|| Error::Estimator("label stretch never covers all labels".into()))?;
    let mut windows: Vec<&[u8]> = stretch.windows(m_cover).collect();
    windows.sort_unstable();
    windows.dedup();
    let mut kappa = 0.0f64;
    for w in &windows {
        kappa = kappa.max(contraction_constant(group, w, model.p)?.value);
    }
    Ok(Certificate {
        m_cover,
        kappa,
        c_certified: kappa.powf(1.0 / m_cover as f64),
        windows: windows.len(),
    })
}

fn check_horizon(model: &WalkModel, needed: usize) -> Result<()> {
    if needed > model.steps() {
        return Err(Error::HorizonExceeded {
            requested: needed as f64,
            available: model.steps() as f64,
        });
    }
    Ok(())
}

/// `E[ΔX_{τ+k+1} | F_τ] = ρ(w_τ)·drift[k]` for `k < len`, given the labels
/// after time `τ`.
pub fn conditional_drift(arr: &Arrangement, labels: &[u8], p: f64) -> Result<Vec<Vec<f64>>> {
    let group = arr.group()?;
    let mut dist = Distribution::point_mass(group.order(), group.identity());
    let mut out = Vec::with_capacity(labels.len());
    for &i in labels {
        let mut m = dist.mean_step(arr, i as usize);
        m.iter_mut().for_each(|x| *x *= 1.0 - p);
        out.push(m);
        dist = apply_t(group, &dist, i as usize, p);
    }
    Ok(out)
}

/// The walk's state after `n0` crossings on stream `(seed, 0)`, and that
/// stream, from which continuations branch.
pub fn frozen_prefix(model: &WalkModel, seed: u64, n0: usize) -> Result<(WalkState, RngStream)> {
    check_horizon(model, n0)?;
    let mut rng = RngStream::new(seed, 0);
    let mut st = model.initial_state();
    model.advance(&mut st, &mut rng, n0, |_, _, _| {});
    Ok((st, rng))
}

#[derive(Clone, Debug, Serialize)]
pub struct BiasCurve {
    pub n0: usize,
    pub runs: u64,
    pub n: Vec<usize>,
    /// `‖Ê[ΔX_{n0+n+1} | F_{n0}]‖`.
    pub bias: Vec<f64>,
    /// Exact conditional mean norm.
    pub exact: Vec<f64>,
    /// One standard error of the estimated mean vector's norm.
    pub band: Vec<f64>,
}

/// Per-run sums over continuations: `ΔX` and `ΔX²` per `(k, coordinate)`.
fn continuation_moments<F>(
    model: &WalkModel,
    prefix: &(WalkState, RngStream),
    len: usize,
    runs: u64,
    exec: Exec,
    record: F,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(usize, &[f64], &[f64], &mut [f64]) + Sync,
{
    let d = model.dim();
    let (state, rng0) = prefix;
    let start = state.n;
    let width = len * d;
    map_fold(
        exec,
        runs,
        |r| {
            let mut rng = rng0.branch(r);
            let mut st = state.clone();
            let mut row = vec![0.0; width];
            let mut prev = st.centroid.clone();
            model.advance(&mut st, &mut rng, start + len, |n, _, x| {
                let k = n - start - 1;
                record(k, &prev, x, &mut row[k * d..(k + 1) * d]);
                prev.copy_from_slice(x);
            });
            Ok(row)
        },
        || (vec![0.0; width], vec![0.0; width]),
        |acc, row| {
            for (j, v) in row.into_iter().enumerate() {
                acc.0[j] += v;
                acc.1[j] += v * v;
            }
        },
        |acc, part| {
            acc.0.iter_mut().zip(part.0).for_each(|(a, b)| *a += b);
            acc.1.iter_mut().zip(part.1).for_each(|(a, b)| *a += b);
        },
    )
}

fn mean_and_band(sum: &[f64], sq: &[f64], runs: u64) -> (Vec<f64>, f64) {
    let m = runs as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let var: f64 = sq
        .iter()
        .zip(&mean)
        .map(|(q, mu)| ((q / m - mu * mu) * m / (m - 1.0).max(1.0)).max(0.0))
        .sum();
    (mean, (var / m).sqrt())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Conditional mean step `‖E[ΔX_{n0+n+1} | F_{n0}]‖` for `n = 0..=n_max`,
/// from `runs` continuations of one frozen prefix.
pub fn step_bias(
    model: &WalkModel,
    n0: usize,
    n_max: usize,
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<BiasCurve> {
    check_horizon(model, n0 + n_max + 1)?;
    let d = model.dim();
    let prefix = frozen_prefix(model, seed, n0)?;
    let len = n_max + 1;
    let (sum, sq) = continuation_moments(model, &prefix, len, runs, exec, |_, prev, x, out| {
        for r in 0..d {
            out[r] = x[r] - prev[r];
        }
    })?;
    let drift = conditional_drift(model.arr, &model.labels[n0..n0 + len], model.p)?;
    let mut bias = Vec::with_capacity(len);
    let mut band = Vec::with_capacity(len);
    for k in 0..len {
        let (mean, se) = mean_and_band(&sum[k * d..(k + 1) * d], &sq[k * d..(k + 1) * d], runs);
        bias.push(norm(&mean));
        band.push(se);
    }
    Ok(BiasCurve {
        n0,
        runs,
        n: (0..len).collect(),
        bias,
        exact: drift.iter().map(|v| norm(v)).collect(),
        band,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleGap {
    pub n0: usize,
    pub runs: u64,
    pub horizons: Vec<usize>,
    /// `‖Ê[X_{n0+N} | F_{n0}] − X_{n0}‖`.
    pub gap: Vec<f64>,
    pub exact: Vec<f64>,
    pub band: Vec<f64>,
    /// `(1−p)|W| max‖β_i‖ / (1−c)` for the supplied rate `c`.
    pub bound: f64,
}

/// Displacement bias over the horizons `N`, conditioned on the time-`n0`
/// state of one frozen prefix.
pub fn martingale_gap(
    model: &WalkModel,
    n0: usize,
    horizons: &[usize],
    runs: u64,
    seed: u64,
    c: f64,
    exec: Exec,
) -> Result<MartingaleGap> {
    let group = model.arr.group()?;
    let d = model.dim();
    let n_max = horizons.iter().copied().max().unwrap_or(0);
    check_horizon(model, n0 + n_max)?;
    let prefix = frozen_prefix(model, seed, n0)?;
    let x_start = prefix.0.centroid.clone();
    let mut gap = Vec::new();
    let mut band = Vec::new();
    if n_max > 0 {
        let (sum, sq) = continuation_moments(model, &prefix, n_max, runs, exec, |_, _, x, out| {
            for r in 0..d {
                out[r] = x[r] - x_start[r];
            }
        })?;
        for &h in horizons {
            if h == 0 {
                gap.push(0.0);
                band.push(0.0);
                continue;
            }
            let k = h - 1;
            let (mean, se) = mean_and_band(&sum[k * d..(k + 1) * d], &sq[k * d..(k + 1) * d], runs);
            gap.push(norm(&mean));
            band.push(se);
        }
    } else {
        gap = vec![0.0; horizons.len()];
        band = vec![0.0; horizons.len()];
    }
    let drift = conditional_drift(model.arr, &model.labels[n0..n0 + n_max], model.p)?;
    let mut cumulative = vec![0.0; d];
    let mut partial = vec![norm(&cumulative)];
    for v in &drift {
        cumulative.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        partial.push(norm(&cumulative));
    }
    let bound =
        (1.0 - model.p) * group.order() as f64 * model.arr.frame.max_beta_norm() / (1.0 - c);
    Ok(MartingaleGap {
        n0,
        runs,
        horizons: horizons.to_vec(),
        gap,
        exact: horizons.iter().map(|&h| partial[h]).collect(),
        band,
        bound,
    })
}

/// The finite quotient `𝒟 = W̃/λQ∨`, elements `(π(w), t mod λQ∨)` with `t`
/// the translation part in coroot coordinates.
#[derive(Clone, Debug)]
pub struct QuotientChain {
    pub lambda: usize,
    pub dim: usize,
    pub order: usize,
    /// `ρ(w)θ∨` in coroot coordinates, `order × d`.
    theta_shift: Vec<i64>,
}

impl QuotientChain {
    pub fn new(arr: &Arrangement, lambda: usize, budget: usize) -> Result<Self> {
        let group = arr.group()?;
        if lambda == 0 {
            return Err(Error::Config("lambda must be positive".into()));
        }
        let d = arr.rank();
        let size = (lambda as u128)
            .checked_pow(d as u32)
            .and_then(|v| v.checked_mul(group.order() as u128));
        match size {
            Some(s) if s <= budget as u128 => {}
            _ => {
                return Err(Error::QuotientTooLarge {
                    size: size.map_or(usize::MAX, |s| s.min(usize::MAX as u128) as usize),
                    budget,
                })
            }
        }
        let theta = crate::root_system::coroot(arr.spec.highest_root());
        let mut theta_shift = Vec::with_capacity(group.order() * d);
        for w in 0..group.order() {
            let c = arr.spec.coroot_coordinates(&group.apply(w, &theta));
            theta_shift.extend(c.iter().map(|x| x.round() as i64));
        }
        Ok(Self {
            lambda,
            dim: d,
            order: group.order(),
            theta_shift,
        })
    }

    /// `|𝒟| = |W|·λ^d`.
    pub fn size(&self) -> usize {
        self.order * self.lambda.pow(self.dim as u32)
    }

    /// Index of `(w, t mod λ)`.
    pub fn cell(&self, w: usize, t: &[i64]) -> usize {
        let l = self.lambda as i64;
        t.iter()
            .rev()
            .fold(w, |acc, &x| acc * self.lambda + x.rem_euclid(l) as usize)
    }

    /// Translation update for a transmitted crossing of label `i` from `w`.
    pub fn shift(&self, w: usize, i: usize, t: &mut [i64]) {
        if i == 0 {
            let s = &self.theta_shift[w * self.dim..(w + 1) * self.dim];
            t.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub lambda: usize,
    pub size: usize,
    pub runs: u64,
    pub n: Vec<usize>,
    /// `max_cell |p̂ − 1/|𝒟||`.
    pub deviation: Vec<f64>,
}

/// Empirical law of the walk's image in `W̃/λQ∨` at the checkpoints `n`.
pub fn quotient_equidistribution(
    model: &WalkModel,
    lambda: usize,
    checkpoints: &[usize],
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<QuotientReport> {
    let group = model.arr.group()?;
    let chain = QuotientChain::new(model.arr, lambda, QUOTIENT_BUDGET)?;
    let n_max = checkpoints.iter().copied().max().unwrap_or(0);
    check_horizon(model, n_max)?;
    let d = model.dim();
    let size = chain.size();
    let GroupElem::Indexed(w0) = model.initial_state().w else {
        return Err(Error::GroupTooLarge { cap: 0 });
    };
    let t0: Vec<i64> = model
        .arr
        .spec
        .coroot_coordinates(&model.start.translation)
        .iter()
        .map(|x| x.round() as i64)
        .collect();
    let right = group.right_table();
    let thr = model.transmit_threshold();
    let counts = map_fold(
        exec,
        runs,
        |r| {
            let mut rng = RngStream::new(seed, r);
            let mut w = w0;
            let mut t = t0.clone();
            let mut cells = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            let mut order: Vec<usize> = (0..checkpoints.len()).collect();
            order.sort_by_key(|&k| checkpoints[k]);
            let mut out = vec![0usize; checkpoints.len()];
            for n in 0..=n_max {
                while next < order.len() && checkpoints[order[next]] == n {
                    out[order[next]] = chain.cell(w, &t);
                    next += 1;
                }
                if n == n_max {
                    break;
                }
                let i = model.labels[n] as usize;
                if rng.next_u64() < thr {
                    chain.shift(w, i, &mut t);
                    w = right[w * (d + 1) + i] as usize;
                }
            }
            cells.extend(out);
            Ok(cells)
        },
        || vec![0u64; checkpoints.len() * size],
        |acc, cells| {
            for (k, c) in cells.into_iter().enumerate() {
                acc[k * size + c] += 1;
            }
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    )?;
    let m = runs as f64;
    let u = 1.0 / size as f64;
    let deviation = (0..checkpoints.len())
        .map(|k| {
            counts[k * size..(k + 1) * size]
                .iter()
                .fold(0.0f64, |acc, &c| acc.max((c as f64 / m - u).abs()))
        })
        .collect();
    Ok(QuotientReport {
        lambda,
        size,
        runs,
        n: checkpoints.to_vec(),
        deviation,
    })
}

/// Exact law of the direction after `labels`, from the identity.
pub fn exact_direction_law(group: &FiniteWeylGroup, labels: &[u8], p: f64) -> Distribution {
    propagate(
        group,
        &Distribution::point_mass(group.order(), group.identity()),
        labels,
        p,
    )
}

/// `T_i` restricted to `𝟙⊥` has singular values in `{1, |2p−1|}`.
pub fn restricted_singular_values(group: &FiniteWeylGroup, i: usize, p: f64) -> DVector<f64> {
    let n = group.order();
    // Helmert basis of 𝟙⊥
    let basis = DMatrix::from_fn(n, n - 1, |r, k| {
        let k1 = (k + 1) as f64;
        let scale = (k1 * (k1 + 1.0)).sqrt().recip();
        match r.cmp(&(k + 1)) {
            std::cmp::Ordering::Less => scale,
            std::cmp::Ordering::Equal => -k1 * scale,
            std::cmp::Ordering::Greater => 0.0,
        }
    });
    (basis.transpose() * transition_matrix(group, i, p) * &basis).singular_values()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::{CartanType, Family};

    fn arr(f: Family, r: usize) -> Arrangement {
        Arrangement::new(CartanType::new(f, r).unwrap()).unwrap()
    }

    #[test]
    fn apply_t_basics() {
        let a = arr(Family::A, 1);
        let g = a.group().unwrap();
        let d = apply_t(g, &Distribution::point_mass(2, g.identity()), 1, 0.3);
        let other = g.generator(1);
        assert!((d.probs()[g.identity()] - 0.3).abs() < 1e-15);
        assert!((d.probs()[other] - 0.7).abs() < 1e-15);
        let a2 = arr(Family::A, 2);
        let g2 = a2.group().unwrap();
        let u = Distribution::uniform(g2.order());
        for i in 0..3 {
            let v = apply_t(g2, &u, i, 0.37);
            assert!(v.probs().iter().all(|q| (q - 1.0 / 6.0).abs() < 1e-15));
        }
        let delta = Distribution::point_mass(6, 0);
        assert_eq!(apply_t(g2, &delta, 2, 1.0), delta);
    }

    #[test]
    fn a1_contraction_closed_form() {
        let a = arr(Family::A, 1);
        let g = a.group().unwrap();
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let c = contraction_constant(g, &[0, 1], p).unwrap();
            assert!((c.value - (2.0 * p - 1.0).powi(2)).abs() < 1e-12);
            assert!(c.all_labels);
        }
        assert!(contraction_constant(g, &[0], 0.5).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let a = arr(Family::B, 3);
        let g = a.group().unwrap();
        let iota = [0u8, 1, 2, 3, 1, 0];
        let svd = contraction_constant(g, &iota, 0.3).unwrap().value;
        let pow = power_norm(g, &iota, 0.3);
        assert!((svd - pow).abs() < 1e-8, "{svd} {pow}");
        let pow1 = power_norm(g, &[0, 1, 2], 0.3);
        assert!((pow1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn covering() {
        assert_eq!(covering_length(&[0, 1, 2, 0, 1, 2], 3), Some(3));
        assert_eq!(covering_length(&[0, 1, 1, 2, 0], 3), Some(4));
        assert_eq!(covering_length(&[0, 1, 1], 3), None);
    }

    #[test]
    fn quotient_sizes() {
        let a = arr(Family::A, 2);
        assert_eq!(
            QuotientChain::new(&a, 3, QUOTIENT_BUDGET).unwrap().size(),
            54
        );
        assert!(matches!(
            QuotientChain::new(&a, 10_000, QUOTIENT_BUDGET),
            Err(Error::QuotientTooLarge { .. })
        ));
    }
}
