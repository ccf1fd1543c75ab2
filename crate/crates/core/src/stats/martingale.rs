//! Martingale approximation with alternating moving and mixing steps.
//!
//! Moving steps have lengths `a_i = ⌈i^{1/3}⌉`, mixing steps
//! `b_i = ⌈2 log_{1/c}(i+1)⌉`, and `s_n = Σ_{i≤n} (a_i + b_i)`. With
//! `A_i = X_{s_{i−1}+a_i} − X_{s_{i−1}}` the compensated sum
//! `M_k = Σ_{i≤k} (A_i − E[A_i | F_{s_{i−1}−b_{i−1}}])` is a martingale, and
//! `X_{s_k} − X_0 − M_k` collects the compensators and the mixing steps.
//!
//! The compensators are computed exactly: given the state at time `τ`,
//! `E[ΔX_{τ+k+1} | F_τ] = ρ(w_τ)·drift[k]` with `drift` obtained from the
//! group-ring recursion, so no nested simulation is needed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_runs, Exec};
use crate::mixing::conditional_drift;
use crate::rng::RngStream;
use crate::walk::{GroupElem, WalkModel};

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleSchedule {
    pub c: f64,
    /// `a[i]` for `i = 0..=n` (`a[0] = 0`).
    pub a: Vec<usize>,
    /// `b[i]` for `i = 0..=n` (`b[0] = 0`).
    pub b: Vec<usize>,
    /// `s[i]`, `s[0] = 0`.
    pub s: Vec<usize>,
}

fn ceil_cbrt(i: usize) -> usize {
    let mut a = (i as f64).cbrt().round() as usize;
    while a * a * a < i {
        a += 1;
    }
    while a > 0 && (a - 1).pow(3) >= i {
        a -= 1;
    }
    a
}

/// `a_n`, `b_n` and `s_n` for `n ≤ n_max`.
pub fn martingale_schedule(n_max: usize, c: f64) -> Result<MartingaleSchedule> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Config(format!(
            "mixing rate c = {c} must lie in (0, 1)"
        )));
    }
    let rate = (1.0 / c).ln();
    let mut a = vec![0];
    let mut b = vec![0];
    let mut s = vec![0];
    for i in 1..=n_max {
        a.push(ceil_cbrt(i));
        // guard against 2·log(i+1)/log(1/c) landing a rounding error above
        // an integer
        let raw = 2.0 * ((i + 1) as f64).ln() / rate;
        b.push((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize);
        s.push(s[i - 1] + a[i] + b[i]);
    }
    Ok(MartingaleSchedule { c, a, b, s })
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleErrorReport {
    pub n: usize,
    pub s_n: usize,
    pub runs: u64,
    pub schedule: MartingaleSchedule,
    /// Per run, `max_{k≤n} ‖X_{s_k} − X_0 − M_k‖ / √s_n`.
    pub errors: Vec<f64>,
    pub median: f64,
    /// `‖E[A_i | F_{s_{i−1}−b_{i−1}}]‖` for `i = 1..=n`; it does not depend
    /// on the run because `ρ(w_τ)` is orthogonal.
    pub correction_norms: Vec<f64>,
    /// `C c^{b_{i−1}}` with `C = (1−p)|W| max‖β_i‖ / (1−c)`.
    pub correction_bounds: Vec<f64>,
    pub correction_sum: f64,
    /// `C Σ_{i≤n} 1/i²`.
    pub bound_sum: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Approximation error of the martingale `M_k` over `n` moving steps.
pub fn martingale_error(
    model: &WalkModel,
    n: usize,
    c: f64,
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<MartingaleErrorReport> {
    let group = model.arr.group()?;
    let schedule = martingale_schedule(n, c)?;
    let s_n = schedule.s[n];
    if s_n > model.steps() {
        return Err(Error::HorizonExceeded {
            requested: s_n as f64,
            available: model.steps() as f64,
        });
    }
    if n == 0 {
        return Err(Error::Config("need at least one moving step".into()));
    }
    let d = model.dim();
    let (a, b, s) = (&schedule.a, &schedule.b, &schedule.s);
    // compensator directions v_i and conditioning times τ_i
    let mut tau = vec![0; n + 1];
    let mut comp = vec![vec![0.0; d]; n + 1];
    for i in 1..=n {
        tau[i] = s[i - 1] - b[i - 1];
        let drift = conditional_drift(model.arr, &model.labels[tau[i]..s[i - 1] + a[i]], model.p)?;
        for v in &drift[b[i - 1]..b[i - 1] + a[i]] {
            comp[i].iter_mut().zip(v).for_each(|(x, y)| *x += y);
        }
    }
    let big_c =
        (1.0 - model.p) * group.order() as f64 * model.arr.frame.max_beta_norm() / (1.0 - c);
    let correction_norms: Vec<f64> = comp[1..]
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let correction_bounds: Vec<f64> = (1..=n).map(|i| big_c * c.powi(b[i - 1] as i32)).collect();
    let bound_sum = big_c * (1..=n).map(|i| 1.0 / (i * i) as f64).sum::<f64>();

    let norm_scale = (s_n as f64).sqrt().recip();
    let errors = map_runs(exec, runs, |r| {
        let mut rng = RngStream::new(seed, r);
        let st = model.initial_state();
        let mut xs = vec![st.centroid.clone()];
        let mut ws = vec![match st.w {
            GroupElem::Indexed(w) => w,
            GroupElem::Dense { .. } => unreachable!("group is enumerated"),
        }];
        let mut w = ws[0];
        let mut x = st.centroid.clone();
        let mut k = 0;
        model.run_indexed(&mut w, &mut x, &mut rng, &mut k, s_n, |_, _, w, x| {
            xs.push(x.to_vec());
            ws.push(w);
        });
        let x0 = &xs[0];
        let mut m = vec![0.0; d];
        let mut worst = 0.0f64;
        for i in 1..=n {
            let start = s[i - 1];
            let rho = group.matrix_slice(ws[tau[i]]);
            for r in 0..d {
                let compensator: f64 = (0..d).map(|c| rho[r * d + c] * comp[i][c]).sum();
                m[r] += xs[start + a[i]][r] - xs[start][r] - compensator;
            }
            let err: f64 = (0..d)
                .map(|r| (xs[s[i]][r] - x0[r] - m[r]).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
        }
        Ok(worst * norm_scale)
    })?;
    Ok(MartingaleErrorReport {
        n,
        s_n,
        runs,
        median: median(&errors),
        errors,
        correction_sum: correction_norms.iter().sum(),
        correction_norms,
        correction_bounds,
        bound_sum,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let sch = martingale_schedule(200, 0.5).unwrap();
        assert_eq!(sch.a[1], 1);
        assert_eq!(sch.a[8], 2);
        assert_eq!(sch.a[9], 3);
        assert_eq!(sch.a[27], 3);
        assert_eq!(sch.a[28], 4);
        // 2·log_2(4) = 4 exactly
        assert_eq!(sch.b[3], 4);
        assert!(sch.b[1..].iter().all(|&b| b >= 1));
        for i in 1..=200 {
            assert_eq!(sch.s[i], sch.s[i - 1] + sch.a[i] + sch.b[i]);
        }
        assert!(martingale_schedule(5, 1.0).is_err());
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
