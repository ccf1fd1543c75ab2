//! Covariance of the walk: direct Monte-Carlo estimates and the series of
//! lag-`m` step interactions.
//!
//! Writing `ΔX_n ΔX_{n+m}^⊤ = U A_ι U^⊤` with `U = ρ(w_{n−1})` and `ι` the
//! window `(i_n, …, i_{n+m})`, the interaction matrix is
//! `A_ι = ε_n ε_{n+m} β_{ι_0} β_{ι_m}^⊤ ρ(s_{ι_{m−1}}^{ε} ⋯ s_{ι_1}^{ε} s_{ι_0})`
//! (the factor for `ι_0` is always present because `ε_n = 1` on the event
//! that contributes). Averaging `U` over `W` replaces `A_ι` by
//! `Tr(A_ι)/d · I`, which gives the series
//! `σ² = (1/d) Σ_ι p_ι Tr E[A_ι]` over windows of all lengths, with lags
//! `m ≥ 1` counted twice.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::exec::{map_fold, Exec};
use crate::ray::hit_rate;
use crate::rng::RngStream;
use crate::walk::WalkModel;
use crate::weyl_group::FiniteWeylGroup;

/// Longest lag `m` for interaction matrices.
pub const MAX_LAG: usize = 16;

/// Deviation of an empirical covariance from a scalar matrix.
#[derive(Clone, Debug, Serialize)]
pub struct Isotropy {
    /// Largest `|Σ̂_{rs}|`, `r ≠ s`.
    pub max_off_diagonal: f64,
    /// Largest standard error among off-diagonal entries.
    pub off_diagonal_se: f64,
    /// `max_r Σ̂_{rr} − min_r Σ̂_{rr}`.
    pub diagonal_spread: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaEstimate {
    pub steps: usize,
    pub runs: u64,
    /// `(1/M) Σ (X_N − X_0)(X_N − X_0)^⊤ / N`.
    pub covariance: Vec<Vec<f64>>,
    pub covariance_se: Vec<Vec<f64>>,
    /// Per-step variance `Tr(Σ̂)/d`.
    pub sigma2: f64,
    pub sigma2_se: f64,
    pub isotropy: Isotropy,
    /// Mirror crossings per unit time, `k_b`.
    pub hit_rate: Option<f64>,
    /// Per-unit-time variance `σ² k_b` of the continuous walk.
    pub sigma2_continuous: Option<f64>,
}

/// Empirical covariance of `X_N − X_0` over `runs` independent walks of all
/// precomputed crossings.
pub fn empirical_sigma(
    model: &WalkModel,
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<SigmaEstimate> {
    let d = model.dim();
    let n = model.steps();
    if n == 0 || runs < 2 {
        return Err(Error::Config("need at least one step and two runs".into()));
    }
    let nf = n as f64;
    // entries d×d of D D^⊤/N, their squares, then ‖D‖²/(Nd) and its square
    let width = d * d;
    let acc = map_fold(
        exec,
        runs,
        |r| Ok(model.displacement(&mut RngStream::new(seed, r))),
        || vec![0.0; 2 * width + 2],
        |acc, dx| {
            for i in 0..d {
                for j in 0..d {
                    let v = dx[i] * dx[j] / nf;
                    acc[i * d + j] += v;
                    acc[width + i * d + j] += v * v;
                }
            }
            let s = dx.iter().map(|x| x * x).sum::<f64>() / (nf * d as f64);
            acc[2 * width] += s;
            acc[2 * width + 1] += s * s;
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    )?;
    let m = runs as f64;
    let se = |sum: f64, sq: f64| {
        let mean = sum / m;
        ((sq / m - mean * mean).max(0.0) / (m - 1.0)).sqrt()
    };
    let covariance: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| acc[i * d + j] / m).collect())
        .collect();
    let covariance_se: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| se(acc[i * d + j], acc[width + i * d + j]))
                .collect()
        })
        .collect();
    let sigma2 = acc[2 * width] / m;
    let sigma2_se = se(acc[2 * width], acc[2 * width + 1]);
    let mut isotropy = Isotropy {
        max_off_diagonal: 0.0,
        off_diagonal_se: 0.0,
        diagonal_spread: 0.0,
    };
    let diag: Vec<f64> = (0..d).map(|i| covariance[i][i]).collect();
    isotropy.diagonal_spread = diag.iter().cloned().fold(f64::MIN, f64::max)
        - diag.iter().cloned().fold(f64::MAX, f64::min);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                isotropy.max_off_diagonal = isotropy.max_off_diagonal.max(covariance[i][j].abs());
                isotropy.off_diagonal_se = isotropy.off_diagonal_se.max(covariance_se[i][j]);
            }
        }
    }
    let k_b = hit_rate(model.arr, &model.b).ok();
    Ok(SigmaEstimate {
        steps: n,
        runs,
        covariance,
        covariance_se,
        sigma2,
        sigma2_se,
        isotropy,
        hit_rate: k_b,
        sigma2_continuous: k_b.map(|k| k * sigma2),
    })
}

fn check_window(iota: &[u8], arr: &Arrangement) -> Result<()> {
    if iota.is_empty() || iota.len() > MAX_LAG + 1 {
        return Err(Error::WindowTooLong {
            len: iota.len(),
            max: MAX_LAG + 1,
        });
    }
    if iota.iter().any(|&i| i as usize > arr.rank()) {
        return Err(Error::Config("label out of range".into()));
    }
    Ok(())
}

fn reflection(arr: &Arrangement, i: u8) -> &DMatrix<f64> {
    &arr.frame.simple_affine[i as usize].linear
}

/// `E[A_ι]` by enumerating the `2^{m−1}` interior `ε` patterns of the
/// window `ι = (ι_0, …, ι_m)`.
pub fn expected_a(arr: &Arrangement, iota: &[u8], p: f64) -> Result<DMatrix<f64>> {
    check_window(iota, arr)?;
    let m = iota.len() - 1;
    let b0 = &arr.frame.beta[iota[0] as usize];
    let bm = &arr.frame.beta[iota[m] as usize];
    let outer = b0 * bm.transpose();
    if m == 0 {
        return Ok(outer * (1.0 - p));
    }
    let d = arr.rank();
    let interior = &iota[1..m];
    let mut avg = DMatrix::zeros(d, d);
    for pattern in 0u32..(1u32 << interior.len()) {
        let mut weight = 1.0;
        let mut prod = reflection(arr, iota[0]).clone();
        for (k, &i) in interior.iter().enumerate() {
            if pattern >> k & 1 == 1 {
                weight *= 1.0 - p;
                prod = reflection(arr, i) * prod;
            } else {
                weight *= p;
            }
        }
        if weight != 0.0 {
            avg += prod * weight;
        }
    }
    Ok(outer * avg * (1.0 - p).powi(2))
}

/// `E[A_ι]` as the product `β_{ι_0}β_{ι_m}^⊤ Π (p + (1−p)R_{ι_j}) R_{ι_0}`.
pub fn expected_a_product(arr: &Arrangement, iota: &[u8], p: f64) -> Result<DMatrix<f64>> {
    check_window(iota, arr)?;
    let m = iota.len() - 1;
    let b0 = &arr.frame.beta[iota[0] as usize];
    let bm = &arr.frame.beta[iota[m] as usize];
    let outer = b0 * bm.transpose();
    if m == 0 {
        return Ok(outer * (1.0 - p));
    }
    let d = arr.rank();
    let id = DMatrix::identity(d, d);
    let mut prod = reflection(arr, iota[0]).clone();
    for &i in &iota[1..m] {
        prod = (&id * p + reflection(arr, i) * (1.0 - p)) * prod;
    }
    Ok(outer * prod * (1.0 - p).powi(2))
}

/// One draw of `A_ι` with independent `ε`.
pub fn sample_a(
    arr: &Arrangement,
    iota: &[u8],
    p: f64,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    check_window(iota, arr)?;
    let d = arr.rank();
    let m = iota.len() - 1;
    let transmit = |rng: &mut RngStream| rng.next_f64() >= p;
    let b0 = &arr.frame.beta[iota[0] as usize];
    let bm = &arr.frame.beta[iota[m] as usize];
    let outer = b0 * bm.transpose();
    let e0 = transmit(rng);
    if m == 0 {
        return Ok(if e0 { outer } else { DMatrix::zeros(d, d) });
    }
    let mut prod = reflection(arr, iota[0]).clone();
    for &i in &iota[1..m] {
        if transmit(rng) {
            prod = reflection(arr, i) * prod;
        }
    }
    let em = transmit(rng);
    Ok(if e0 && em {
        outer * prod
    } else {
        DMatrix::zeros(d, d)
    })
}

/// `(1/|W|) Σ_w ρ(w) X ρ(w)^⊤`.
pub fn schur_average(group: &FiniteWeylGroup, x: &DMatrix<f64>) -> DMatrix<f64> {
    let d = group.rank();
    let mut out = DMatrix::zeros(d, d);
    for w in 0..group.order() {
        let r = group.matrix(w);
        out += &r * x * r.transpose();
    }
    out / group.order() as f64
}

/// Bound on the lag-`m ≥ 1` contributions beyond `m_max`:
/// `‖Σ_m‖ ≤ 2(1−p)²β²c^{m−1}` when the TV distance decays like `cⁿ`, so the
/// two-sided tail is at most `4(1−p)²β² c^{m_max}/(1−c)`.
pub fn series_tail_bound(arr: &Arrangement, p: f64, m_max: usize, c: f64) -> f64 {
    let beta = arr.frame.max_beta_norm();
    4.0 * (1.0 - p).powi(2) * beta * beta * c.powi(m_max as i32) / (1.0 - c)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub m_max: usize,
    pub labels_used: usize,
    /// `(1/d) Σ_ι p̂_ι Tr E[A_ι]` for windows of length `m+1`.
    pub terms: Vec<f64>,
    /// `terms[0] + 2 Σ_{m≥1} terms[m]`.
    pub sigma2: f64,
    /// Tail bound for the supplied decay rate.
    pub truncation_bound: Option<f64>,
    /// Distinct windows evaluated.
    pub windows: usize,
}

/// Per-step variance from the interaction series with window frequencies
/// measured on `labels`.
pub fn sigma_via_series(
    arr: &Arrangement,
    labels: &[u8],
    p: f64,
    m_max: usize,
    c: Option<f64>,
) -> Result<SeriesReport> {
    if m_max > MAX_LAG {
        return Err(Error::WindowTooLong {
            len: m_max + 1,
            max: MAX_LAG + 1,
        });
    }
    if labels.len() <= m_max {
        return Err(Error::Config(
            "label sequence shorter than the longest window".into(),
        ));
    }
    let d = arr.rank();
    let base = (d + 2) as u64;
    let mut terms = Vec::with_capacity(m_max + 1);
    let mut windows = 0;
    for m in 0..=m_max {
        let mut counts: HashMap<u64, (usize, u32)> = HashMap::new();
        for (start, w) in labels.windows(m + 1).enumerate() {
            let key = w.iter().fold(0u64, |k, &l| k * base + l as u64 + 1);
            counts.entry(key).or_insert((start, 0)).1 += 1;
        }
        windows += counts.len();
        let total = (labels.len() - m) as f64;
        let mut term = 0.0;
        for (start, count) in counts.values() {
            let iota = &labels[*start..*start + m + 1];
            term += *count as f64 / total * expected_a_product(arr, iota, p)?.trace();
        }
        terms.push(term / d as f64);
    }
    let sigma2 = terms[0] + 2.0 * terms[1..].iter().sum::<f64>();
    Ok(SeriesReport {
        m_max,
        labels_used: labels.len(),
        terms,
        sigma2,
        truncation_bound: c.map(|c| series_tail_bound(arr, p, m_max, c)),
        windows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InteractionReport {
    pub steps: usize,
    pub runs: u64,
    pub m_max: usize,
    /// `Σ̂_{m;N,0} = (1/N) Σ_n ΔX_n ΔX_{n+m}^⊤`, averaged over runs.
    pub sigma_m: Vec<Vec<Vec<f64>>>,
    pub op_norm: Vec<f64>,
    /// Frobenius-norm standard error of each `Σ̂_m`.
    pub band: Vec<f64>,
    /// `(1/d) Tr(Σ̂_0 + Σ_{m≥1} (Σ̂_m + Σ̂_m^⊤))`.
    pub sigma2_series: f64,
    pub truncation_bound: Option<f64>,
}

/// Empirical lag-`m` interaction matrices over the precomputed crossings.
pub fn interaction_matrices(
    model: &WalkModel,
    m_max: usize,
    runs: u64,
    seed: u64,
    c: Option<f64>,
    exec: Exec,
) -> Result<InteractionReport> {
    if m_max > MAX_LAG {
        return Err(Error::WindowTooLong {
            len: m_max + 1,
            max: MAX_LAG + 1,
        });
    }
    let d = model.dim();
    let n = model.steps();
    if n <= m_max || runs < 2 {
        return Err(Error::Config(
            "need more steps than lags and two runs".into(),
        ));
    }
    let dd = d * d;
    let width = (m_max + 1) * dd;
    let lags = m_max + 1;
    let acc = map_fold(
        exec,
        runs,
        |r| {
            let mut rng = RngStream::new(seed, r);
            let mut st = model.initial_state();
            let mut ring = vec![0.0; lags * d];
            let mut nonzero = vec![false; lags];
            let mut sums = vec![0.0; width];
            let mut prev = st.centroid.clone();
            model.advance(&mut st, &mut rng, n, |k, eps, x| {
                let slot = (k - 1) % lags;
                nonzero[slot] = eps;
                for r in 0..d {
                    ring[slot * d + r] = x[r] - prev[r];
                }
                prev.copy_from_slice(x);
                if !eps {
                    return;
                }
                // pairs (ΔX_{k−m}, ΔX_k)
                for m in 0..lags.min(k) {
                    let s = (k - 1 - m) % lags;
                    if !nonzero[s] {
                        continue;
                    }
                    let a = &ring[s * d..(s + 1) * d];
                    let b = &ring[slot * d..(slot + 1) * d];
                    let out = &mut sums[m * dd..(m + 1) * dd];
                    for i in 0..d {
                        for j in 0..d {
                            out[i * d + j] += a[i] * b[j];
                        }
                    }
                }
            });
            sums.iter_mut().for_each(|v| *v /= n as f64);
            Ok(sums)
        },
        || vec![0.0; 2 * width],
        |acc, sums| {
            for (k, v) in sums.into_iter().enumerate() {
                acc[k] += v;
                acc[width + k] += v * v;
            }
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    )?;
    let mf = runs as f64;
    let mut sigma_m = Vec::with_capacity(lags);
    let mut op_norm = Vec::with_capacity(lags);
    let mut band = Vec::with_capacity(lags);
    let mut trace_sum = 0.0;
    for m in 0..lags {
        let mean: Vec<f64> = (0..dd).map(|k| acc[m * dd + k] / mf).collect();
        let var: f64 = (0..dd)
            .map(|k| (acc[width + m * dd + k] / mf - mean[k] * mean[k]).max(0.0) / (mf - 1.0))
            .sum();
        let mat = DMatrix::from_row_slice(d, d, &mean);
        op_norm.push(mat.singular_values().max());
        band.push(var.sqrt());
        trace_sum += if m == 0 {
            mat.trace()
        } else {
            2.0 * mat.trace()
        };
        sigma_m.push((0..d).map(|i| mean[i * d..(i + 1) * d].to_vec()).collect());
    }
    Ok(InteractionReport {
        steps: n,
        runs,
        m_max,
        sigma_m,
        op_norm,
        band,
        sigma2_series: trace_sum / d as f64,
        truncation_bound: c.map(|c| series_tail_bound(model.arr, model.p, m_max, c)),
    })
}
