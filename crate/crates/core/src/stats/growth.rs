//! The growth function `f(n)`: the smallest conditional second moment of
//! `X_{n0+n} − X_{n0}` over start times `n0`.

use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::exec::{map_fold, Exec};
use crate::mixing::frozen_prefix;
use crate::walk::WalkModel;

/// `C = (1−p)|W| max‖β_i‖ / (1−c)`, the constant bounding the conditional
/// drift accumulated after any stopping time.
pub fn almost_martingale_constant(arr: &Arrangement, p: f64, c: f64) -> Result<f64> {
    Ok((1.0 - p) * arr.group()?.order() as f64 * arr.frame.max_beta_norm() / (1.0 - c))
}

#[derive(Clone, Debug, Serialize)]
pub struct InductCheck {
    pub n: usize,
    pub m: usize,
    /// `f̂(n+m)`.
    pub lhs: f64,
    /// `f̂(n) + f̂(m) − 2C√f̂(m)`.
    pub rhs: f64,
    /// Three combined standard errors.
    pub band: f64,
    /// Whether `f̂(m) ≥ C²`, the regime where the inequality is claimed.
    pub applicable: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub runs: u64,
    pub n: Vec<usize>,
    pub n0: Vec<usize>,
    /// `table[a][k]`: `Ê[‖X_{n0_a+n_k} − X_{n0_a}‖² | F_{n0_a}]`.
    pub table: Vec<Vec<f64>>,
    pub table_se: Vec<Vec<f64>>,
    /// `min_a table[a][k]`.
    pub f_hat: Vec<f64>,
    /// Standard error of the minimizing entry.
    pub f_se: Vec<f64>,
    /// `f̂(n)/n` (zero at `n = 0`).
    pub ratio: Vec<f64>,
    /// The almost-martingale constant `C` used in the checks.
    pub c_const: f64,
    pub induct: Vec<InductCheck>,
}

/// Estimates `f̂(n)` on `n_grid` using one frozen prefix per `n0` and
/// `runs` continuations each, then checks `f̂(n+m) ≥ f̂(n) + f̂(m) − 2C√f̂(m)`
/// for every pair with `n`, `m`, `n+m` all on the grid.
pub fn growth_function(
    model: &WalkModel,
    n_grid: &[usize],
    n0_grid: &[usize],
    runs: u64,
    seed: u64,
    c_const: f64,
    exec: Exec,
) -> Result<GrowthReport> {
    if runs < 2 || n0_grid.is_empty() {
        return Err(Error::Config(
            "need two runs and at least one start time".into(),
        ));
    }
    let d = model.dim();
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let mut table = Vec::new();
    let mut table_se = Vec::new();
    for &n0 in n0_grid {
        if n0 + n_max > model.steps() {
            return Err(Error::HorizonExceeded {
                requested: (n0 + n_max) as f64,
                available: model.steps() as f64,
            });
        }
        let (state, rng0) = frozen_prefix(model, seed, n0)?;
        let x0 = state.centroid.clone();
        let k = n_grid.len();
        let acc = map_fold(
            exec,
            runs,
            |r| {
                let mut rng = rng0.branch(r);
                let mut st = state.clone();
                let mut out = vec![0.0; k];
                let mut record = |n: usize, x: &[f64]| {
                    let sq: f64 = (0..d).map(|c| (x[c] - x0[c]).powi(2)).sum();
                    for (slot, &g) in n_grid.iter().enumerate() {
                        if g == n {
                            out[slot] = sq;
                        }
                    }
                };
                record(0, &st.centroid);
                model.advance(&mut st, &mut rng, n0 + n_max, |n, _, x| record(n - n0, x));
                Ok(out)
            },
            || vec![0.0; 2 * k],
            |acc, out| {
                for (j, v) in out.into_iter().enumerate() {
                    acc[j] += v;
                    acc[k + j] += v * v;
                }
            },
            |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
        )?;
        let m = runs as f64;
        let means: Vec<f64> = (0..k).map(|j| acc[j] / m).collect();
        let ses: Vec<f64> = (0..k)
            .map(|j| ((acc[k + j] / m - means[j] * means[j]).max(0.0) / (m - 1.0)).sqrt())
            .collect();
        table.push(means);
        table_se.push(ses);
    }
    let mut f_hat = Vec::new();
    let mut f_se = Vec::new();
    for k in 0..n_grid.len() {
        let a = (0..n0_grid.len())
            .min_by(|&x, &y| table[x][k].total_cmp(&table[y][k]))
            .expect("nonempty");
        f_hat.push(table[a][k]);
        f_se.push(table_se[a][k]);
    }
    let ratio = n_grid
        .iter()
        .zip(&f_hat)
        .map(|(&n, &f)| if n == 0 { 0.0 } else { f / n as f64 })
        .collect();
    let pos = |n: usize| n_grid.iter().position(|&g| g == n);
    let mut induct = Vec::new();
    for (a, &n) in n_grid.iter().enumerate() {
        for (b, &m) in n_grid.iter().enumerate() {
            if n == 0 || m == 0 {
                continue;
            }
            let Some(c) = pos(n + m) else { continue };
            let fm = f_hat[b];
            let rhs = f_hat[a] + fm - 2.0 * c_const * fm.max(0.0).sqrt();
            let band = 3.0 * (f_se[a].powi(2) + f_se[b].powi(2) + f_se[c].powi(2)).sqrt();
            let lhs = f_hat[c];
            induct.push(InductCheck {
                n,
                m,
                lhs,
                rhs,
                band,
                applicable: fm >= c_const * c_const,
                holds: lhs + band >= rhs,
            });
        }
    }
    Ok(GrowthReport {
        runs,
        n: n_grid.to_vec(),
        n0: n0_grid.to_vec(),
        table,
        table_se,
        f_hat,
        f_se,
        ratio,
        c_const,
        induct,
    })
}
