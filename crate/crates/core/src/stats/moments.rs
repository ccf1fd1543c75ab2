//! Moment tensors of the rescaled displacement and their Gaussian targets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_fold, Exec};
use crate::rng::RngStream;
use crate::walk::WalkModel;

/// Highest supported tensor order.
pub const MAX_ORDER: usize = 6;

/// A `k`-tensor over `ℝ^d`, stored densely with the first index slowest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTensor {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl MomentTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self {
            order,
            dim,
            entries: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat_index(idx)]
    }

    /// Largest difference between an entry and any permutation of its index.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 0..self.entries.len() {
            let mut idx = self.multi_index(flat);
            for a in 0..self.order {
                for b in a + 1..self.order {
                    idx.swap(a, b);
                    worst = worst.max((self.entries[flat] - self.get(&idx)).abs());
                    idx.swap(a, b);
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::Config(format!(
            "moment order {k} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Number of perfect matchings of positions `0..k` pairing equal indices.
fn matchings(idx: &mut Vec<usize>) -> u64 {
    if idx.is_empty() {
        return 1;
    }
    let first = idx.remove(0);
    let mut total = 0;
    for j in 0..idx.len() {
        if idx[j] == first {
            let partner = idx.remove(j);
            total += matchings(idx);
            idx.insert(j, partner);
        }
    }
    idx.insert(0, first);
    total
}

/// `E[Z^{⊗k}]` for `Z ~ N(0, σ² I_d)`: zero for odd `k`, otherwise
/// `σ^k` times the number of perfect matchings compatible with the index.
pub fn gaussian_moment_tensor(k: usize, dim: usize, sigma2: f64) -> Result<MomentTensor> {
    check_order(k)?;
    let mut t = MomentTensor::zeros(k, dim);
    if k % 2 == 1 {
        return Ok(t);
    }
    let scale = sigma2.powi(k as i32 / 2);
    for flat in 0..t.entries.len() {
        let mut idx = t.multi_index(flat);
        t.entries[flat] = scale * matchings(&mut idx) as f64;
    }
    Ok(t)
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalMoments {
    pub steps: usize,
    pub runs: u64,
    /// `(1/M) Σ ((X_N − X_0)/√N)^{⊗k}` for each requested `k`.
    pub tensors: Vec<MomentTensor>,
    /// Entrywise standard errors.
    pub se: Vec<MomentTensor>,
}

/// Empirical moment tensors of the rescaled displacement for each order in
/// `orders`, from one ensemble.
pub fn empirical_moment_tensors(
    model: &WalkModel,
    orders: &[usize],
    runs: u64,
    seed: u64,
    exec: Exec,
) -> Result<EmpiricalMoments> {
    for &k in orders {
        check_order(k)?;
    }
    if runs < 2 || model.steps() == 0 {
        return Err(Error::Config("need at least one step and two runs".into()));
    }
    let d = model.dim();
    let scale = (model.steps() as f64).sqrt().recip();
    let sizes: Vec<usize> = orders.iter().map(|&k| d.pow(k as u32)).collect();
    let total: usize = sizes.iter().sum();
    let acc = map_fold(
        exec,
        runs,
        |r| {
            let z: Vec<f64> = model
                .displacement(&mut RngStream::new(seed, r))
                .iter()
                .map(|x| x * scale)
                .collect();
            Ok(z)
        },
        || vec![0.0; 2 * total],
        |acc, z| {
            let mut offset = 0;
            for (&k, &size) in orders.iter().zip(&sizes) {
                for flat in 0..size {
                    let mut f = flat;
                    let mut v = 1.0;
                    for _ in 0..k {
                        v *= z[f % d];
                        f /= d;
                    }
                    acc[offset + flat] += v;
                    acc[total + offset + flat] += v * v;
                }
                offset += size;
            }
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    )?;
    let m = runs as f64;
    let mut tensors = Vec::new();
    let mut se = Vec::new();
    let mut offset = 0;
    for (&k, &size) in orders.iter().zip(&sizes) {
        let mut t = MomentTensor::zeros(k, d);
        let mut s = MomentTensor::zeros(k, d);
        for flat in 0..size {
            let mean = acc[offset + flat] / m;
            t.entries[flat] = mean;
            s.entries[flat] =
                ((acc[total + offset + flat] / m - mean * mean).max(0.0) / (m - 1.0)).sqrt();
        }
        tensors.push(t);
        se.push(s);
        offset += size;
    }
    Ok(EmpiricalMoments {
        steps: model.steps(),
        runs,
        tensors,
        se,
    })
}

/// Mean of the diagonal entries `T_{iiii}` over the mean of the entries
/// `T_{iijj}`, `i ≠ j`, of a fourth-order tensor; `3` for an isotropic
/// Gaussian.
pub fn fourth_moment_ratio(t: &MomentTensor) -> Result<f64> {
    if t.order != 4 || t.dim < 2 {
        return Err(Error::Config(
            "need a fourth-order tensor in dimension ≥ 2".into(),
        ));
    }
    let d = t.dim;
    let diag = (0..d).map(|i| t.get(&[i, i, i, i])).sum::<f64>() / d as f64;
    let mut off = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                off += t.get(&[i, i, j, j]);
            }
        }
    }
    Ok(diag / (off / (d * (d - 1)) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_targets() {
        let s2 = 1.7;
        let t1 = gaussian_moment_tensor(1, 3, s2).unwrap();
        assert_eq!(t1.max_abs(), 0.0);
        let t2 = gaussian_moment_tensor(2, 3, s2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t2.get(&[i, j]), if i == j { s2 } else { 0.0 });
            }
        }
        let t4 = gaussian_moment_tensor(4, 2, s2).unwrap();
        assert!((t4.get(&[0, 0, 1, 1]) - s2 * s2).abs() < 1e-12);
        assert!((t4.get(&[0, 1, 0, 1]) - s2 * s2).abs() < 1e-12);
        assert!((t4.get(&[0, 0, 0, 0]) - 3.0 * s2 * s2).abs() < 1e-12);
        assert_eq!(t4.get(&[0, 0, 0, 1]), 0.0);
        let t6 = gaussian_moment_tensor(6, 2, 1.0).unwrap();
        assert_eq!(t6.get(&[1; 6]), 15.0);
        assert_eq!(t6.get(&[0, 0, 1, 1, 1, 1]), 3.0);
        assert!(t6.asymmetry() == 0.0);
        assert!((fourth_moment_ratio(&t4).unwrap() - 3.0).abs() < 1e-12);
        assert!(gaussian_moment_tensor(7, 2, 1.0).is_err());
    }
}
