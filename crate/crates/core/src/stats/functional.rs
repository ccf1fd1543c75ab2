//! Distributional checks on rescaled trajectories `t ↦ (X_{⌊Nt⌋} − X_0)/√N`.
//!
//! The walk started at a fixed alcove carries a deterministic drift
//! `E[X_n − X_0]` that stays bounded in `n` but is visible at `M = 10⁴`
//! samples. When the finite group is enumerated the exact drift is
//! subtracted before the marginals are compared with `N(0, σ̂²t)`; the
//! uncentered distances are reported alongside.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exec::{map_runs, Exec};
use crate::mixing::conditional_drift;
use crate::rng::RngStream;
use crate::walk::{GroupElem, WalkModel};

/// Times at which the marginals are tested.
pub const TIMES: [f64; 3] = [0.25, 0.5, 1.0];

/// Asymptotic Kolmogorov–Smirnov critical value at level 1%, `1.628/√M`.
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.628 / (samples as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the sample and `N(0, var)`.
pub fn ks_distance(samples: &mut [f64], var: f64) -> Result<f64> {
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| Error::Estimator(e.to_string()))?;
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    for (k, &x) in samples.iter().enumerate() {
        let f = normal.cdf(x);
        worst = worst
            .max((f - k as f64 / n).abs())
            .max(((k + 1) as f64 / n - f).abs());
    }
    Ok(worst)
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalReport {
    pub steps: usize,
    pub runs: u64,
    /// Per-coordinate variance at `t = 1`, pooled over coordinates.
    pub sigma2: f64,
    pub times: Vec<f64>,
    /// `ks[t][r]`: distance of coordinate `r` at `times[t]`, centered by the
    /// exact drift, from `N(0, σ̂² t)`.
    pub ks: Vec<Vec<f64>>,
    /// Same distances without centering.
    pub ks_raw: Vec<Vec<f64>>,
    /// Rescaled exact drift `E[X_{⌊Nt⌋} − X_0]/√N` per time, or `None` when
    /// the group is not enumerated (then `ks == ks_raw`).
    pub drift: Option<Vec<Vec<f64>>>,
    pub ks_critical: f64,
    /// Correlations between coordinate `r` of the increment over
    /// `[0, ½]` and coordinate `s` of the increment over `[½, 1]`, row-major.
    pub increment_correlations: Vec<f64>,
    /// `3/√M`.
    pub correlation_band: f64,
    /// Cross-coordinate correlations at `t = 1` for `r < s`.
    pub cross_correlations: Vec<f64>,
    /// `Var(t=½)/Var(t=1)`, pooled over coordinates.
    pub variance_ratio: f64,
    pub variance_ratio_se: f64,
}

pub fn functional_tests(
    model: &WalkModel,
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<FunctionalReport> {
    let n = model.steps();
    let d = model.dim();
    if n < 4 || runs < 10 {
        return Err(Error::Config("need at least 4 steps and 10 runs".into()));
    }
    let marks: Vec<usize> = TIMES
        .iter()
        .map(|t| (t * n as f64).floor() as usize)
        .collect();
    let scale = (n as f64).sqrt().recip();
    let samples = map_runs(exec, runs, |r| {
        let mut rng = RngStream::new(seed, r);
        let mut st = model.initial_state();
        let x0 = st.centroid.clone();
        let mut out = vec![0.0; marks.len() * d];
        model.advance(&mut st, &mut rng, n, |k, _, x| {
            for (slot, &mk) in marks.iter().enumerate() {
                if mk == k {
                    for r in 0..d {
                        out[slot * d + r] = (x[r] - x0[r]) * scale;
                    }
                }
            }
        });
        Ok(out)
    })?;
    let drift = exact_drift(model, &marks)?.map(|rows| {
        rows.into_iter()
            .map(|v| v.into_iter().map(|x| x * scale).collect::<Vec<f64>>())
            .collect::<Vec<_>>()
    });
    let raw = samples;
    let samples: Vec<Vec<f64>> = match &drift {
        Some(mu) => raw
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(j, x)| x - mu[j / d][j % d])
                    .collect()
            })
            .collect(),
        None => raw.clone(),
    };
    let column =
        |slot: usize, r: usize| -> Vec<f64> { samples.iter().map(|s| s[slot * d + r]).collect() };
    let raw_column =
        |slot: usize, r: usize| -> Vec<f64> { raw.iter().map(|s| s[slot * d + r]).collect() };
    let last = marks.len() - 1;
    let second_moment = |slot: usize| -> (f64, Vec<f64>) {
        let per: Vec<f64> = samples
            .iter()
            .map(|s| (0..d).map(|r| s[slot * d + r].powi(2)).sum::<f64>() / d as f64)
            .collect();
        (per.iter().sum::<f64>() / per.len() as f64, per)
    };
    let (sigma2, per_one) = second_moment(last);
    let (half, per_half) = second_moment(1);
    let m = runs as f64;
    let ks = TIMES
        .iter()
        .enumerate()
        .map(|(slot, &t)| {
            (0..d)
                .map(|r| ks_distance(&mut column(slot, r), sigma2 * t))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let ks_raw = TIMES
        .iter()
        .enumerate()
        .map(|(slot, &t)| {
            (0..d)
                .map(|r| ks_distance(&mut raw_column(slot, r), sigma2 * t))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut increment_correlations = Vec::with_capacity(d * d);
    for r in 0..d {
        let first = column(1, r);
        for s in 0..d {
            let second: Vec<f64> = column(last, s)
                .iter()
                .zip(column(1, s))
                .map(|(a, b)| a - b)
                .collect();
            increment_correlations.push(correlation(&first, &second));
        }
    }
    let mut cross_correlations = Vec::new();
    for r in 0..d {
        for s in r + 1..d {
            cross_correlations.push(correlation(&column(last, r), &column(last, s)));
        }
    }
    // delta method for the ratio of two correlated means
    let ratio = half / sigma2;
    let (mut vh, mut vo, mut cov) = (0.0, 0.0, 0.0);
    for (h, o) in per_half.iter().zip(&per_one) {
        vh += (h - half).powi(2);
        vo += (o - sigma2).powi(2);
        cov += (h - half) * (o - sigma2);
    }
    let (vh, vo, cov) = (vh / (m - 1.0), vo / (m - 1.0), cov / (m - 1.0));
    let var_ratio = (vh / (sigma2 * sigma2) + half * half * vo / sigma2.powi(4)
        - 2.0 * half * cov / sigma2.powi(3))
        / m;
    Ok(FunctionalReport {
        steps: n,
        runs,
        sigma2,
        times: TIMES.to_vec(),
        ks,
        ks_raw,
        drift,
        ks_critical: ks_critical_1pct(runs as usize),
        increment_correlations,
        correlation_band: 3.0 / m.sqrt(),
        cross_correlations,
        variance_ratio: ratio,
        variance_ratio_se: var_ratio.max(0.0).sqrt(),
    })
}

/// `E[X_k − X_0]` at each `k` in `marks`, from the group-ring recursion.
fn exact_drift(model: &WalkModel, marks: &[usize]) -> Result<Option<Vec<Vec<f64>>>> {
    let Ok(group) = model.arr.group() else {
        return Ok(None);
    };
    let GroupElem::Indexed(w0) = model.initial_state().w else {
        return Ok(None);
    };
    let d = model.dim();
    let last = marks.iter().copied().max().unwrap_or(0);
    let steps = conditional_drift(model.arr, &model.labels[..last], model.p)?;
    let rho = group.matrix_slice(w0);
    let mut sum = vec![0.0; d];
    let mut partial = vec![sum.clone()];
    for v in &steps {
        sum.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        partial.push(sum.clone());
    }
    Ok(Some(
        marks
            .iter()
            .map(|&k| {
                (0..d)
                    .map(|r| (0..d).map(|c| rho[r * d + c] * partial[k][c]).sum())
                    .collect()
            })
            .collect(),
    ))
}
