//! The random billiard walk.
//!
//! The laser starts at `L0` and moves in direction `b`. At every mirror it
//! crosses it is transmitted with probability `1 − p` (`ε = 1`) and
//! reflected otherwise (`ε = 0`). By label invariance the `n`-th facet hit
//! has the label `i_n` of the unreflected ray, and the alcove visited after
//! `n` crossings is `w_n𝒜₀` with `w_n = u₀ s_{i_1}^{ε_1} ⋯ s_{i_n}^{ε_n}`.
//! Its centroid `X_n` moves by `ε_n ρ(w_{n−1}) β_{i_n}`.
//!
//! The continuous position is reconstructed from the discrete state: on
//! `[t_n, t_{n+1})` the laser sits at `X_n + ρ(w_n)(y − c₀)` where `y` is the
//! unreflected position folded into `𝒜₀` and `c₀` the centroid of `𝒜₀`.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::affine::AffineIsometry;
use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::exec::{map_runs, Exec};
use crate::ray::{cutting_sequence_with_times, unit_direction, Ray};
use crate::rng::{probability_threshold, RngStream};

/// Re-orthonormalization period for walks without an enumerated group.
const DENSE_REORTHO: u32 = 1024;

/// Current alcove's linear part `π(w)`.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElem {
    /// Index into the enumerated Weyl group.
    Indexed(usize),
    /// Row-major orthogonal matrix, for groups too large to enumerate.
    Dense {
        matrix: Vec<f64>,
        since_reortho: u32,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    pub w: GroupElem,
    /// `X_n`.
    pub centroid: Vec<f64>,
    /// Crossings processed so far.
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Continuous,
    Discrete,
    Refraction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub mode: Mode,
    /// Sample times; for the discrete walk these are the crossing times.
    pub times: Vec<f64>,
    /// Positions at `times` (`X_n` for the discrete walk).
    pub points: Vec<Vec<f64>>,
    /// Label of each crossing.
    pub labels: Vec<u8>,
    /// `ε` of each crossing.
    pub epsilons: Vec<u8>,
}

impl Trajectory {
    /// Number of crossings.
    pub fn crossings(&self) -> usize {
        self.labels.len()
    }

    /// Writes `n,t,eps,label,x_1..x_d`, one row per crossing.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.points.first().map_or(0, Vec::len);
        write!(out, "n,t,eps,label")?;
        for i in 1..=d {
            write!(out, ",x_{i}")?;
        }
        writeln!(out)?;
        for n in 1..=self.crossings() {
            write!(
                out,
                "{},{},{},{}",
                n,
                self.times[n],
                self.epsilons[n - 1],
                self.labels[n - 1]
            )?;
            for x in &self.points[n] {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Everything about a walk that does not depend on the random draws.
#[derive(Clone, Debug)]
pub struct WalkModel<'a> {
    pub arr: &'a Arrangement,
    pub l0: Vec<f64>,
    /// Unit direction.
    pub b: Vec<f64>,
    pub p: f64,
    /// `labels[n]` is `i_{n+1}`.
    pub labels: Vec<u8>,
    /// `times[n]` is `t_{n+1}`.
    pub times: Vec<f64>,
    /// `u₀` with `L0 ∈ u₀(𝒜₀)`.
    pub start: AffineIsometry,
    pub x0: Vec<f64>,
    /// The crossings listed are all crossings with `t` up to this time.
    known_until: f64,
    threshold: u64,
    start_w: GroupElem,
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("p = {p} is not a probability")))
    }
}

impl<'a> WalkModel<'a> {
    /// Walk with the first `n` crossings precomputed.
    pub fn new(arr: &'a Arrangement, l0: &[f64], b: &[f64], p: f64, n: usize) -> Result<Self> {
        check_p(p)?;
        let b = unit_direction(b)?;
        let (labels, times) = cutting_sequence_with_times(arr, l0, &b, n)?;
        let known = times.last().copied().unwrap_or(0.0);
        Self::assemble(arr, l0, b, p, labels, times, known)
    }

    /// Walk with every crossing up to time `horizon` precomputed.
    pub fn for_horizon(
        arr: &'a Arrangement,
        l0: &[f64],
        b: &[f64],
        p: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_p(p)?;
        let b = unit_direction(b)?;
        let mut ray = Ray::new(arr, l0, &b)?;
        let mut labels = Vec::new();
        let mut times = Vec::new();
        loop {
            let (label, t) = ray.next_label()?;
            if t > horizon {
                break;
            }
            labels.push(label as u8);
            times.push(t);
        }
        Self::assemble(arr, l0, b, p, labels, times, horizon)
    }

    /// Walk driven by an arbitrary label sequence, starting at the centroid
    /// of `𝒜₀` (no geometry behind the labels; times are `1, 2, …`).
    pub fn from_labels(arr: &'a Arrangement, labels: Vec<u8>, p: f64) -> Result<Self> {
        check_p(p)?;
        let d = arr.rank();
        if labels.iter().any(|&l| l as usize > d) {
            return Err(Error::Config("label out of range".into()));
        }
        let times: Vec<f64> = (1..=labels.len()).map(|n| n as f64).collect();
        let mut b = vec![0.0; d];
        b[0] = 1.0;
        let c0 = arr.frame.centroid.as_slice().to_vec();
        let known = times.len() as f64;
        Self::assemble(arr, &c0, b, p, labels, times, known)
    }

    fn assemble(
        arr: &'a Arrangement,
        l0: &[f64],
        b: Vec<f64>,
        p: f64,
        labels: Vec<u8>,
        times: Vec<f64>,
        known_until: f64,
    ) -> Result<Self> {
        let (y, start) = arr.frame.fold(&DVector::from_column_slice(l0));
        if arr.frame.walls.iter().any(|w| w.eval(&y) < 1e-12) {
            return Err(Error::Config("L0 lies on a mirror".into()));
        }
        let x0 = start.apply(&arr.frame.centroid).as_slice().to_vec();
        let start_w = match &arr.group {
            Some(g) => GroupElem::Indexed(g.locate(&arr.spec, &start.linear)?),
            None => GroupElem::Dense {
                matrix: start.linear.transpose().as_slice().to_vec(),
                since_reortho: 0,
            },
        };
        Ok(Self {
            arr,
            l0: l0.to_vec(),
            b,
            p,
            labels,
            times,
            start,
            x0,
            known_until,
            threshold: probability_threshold(1.0 - p),
            start_w,
        })
    }

    pub fn steps(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.arr.rank()
    }

    /// `P(u < threshold) = 1 − p` for a uniform word `u`.
    pub fn transmit_threshold(&self) -> u64 {
        self.threshold
    }

    pub fn initial_state(&self) -> WalkState {
        WalkState {
            w: self.start_w.clone(),
            centroid: self.x0.clone(),
            n: 0,
        }
    }

    /// A state at the start alcove but with `π(w)` reset to the identity,
    /// used to follow the walk's increments relative to a fresh start.
    pub fn identity_state(&self, n: usize, centroid: Vec<f64>) -> Result<WalkState> {
        let g = self.arr.group()?;
        Ok(WalkState {
            w: GroupElem::Indexed(g.identity()),
            centroid,
            n,
        })
    }

    /// `ρ(π(w))` as a row-major matrix.
    pub fn linear(&self, w: &GroupElem) -> Vec<f64> {
        match w {
            GroupElem::Indexed(i) => self
                .arr
                .group
                .as_ref()
                .expect("indexed element")
                .matrix_slice(*i)
                .to_vec(),
            GroupElem::Dense { matrix, .. } => matrix.clone(),
        }
    }

    /// One crossing with a given `ε`; returns the displacement `ΔX`.
    pub fn step_with(&self, st: &mut WalkState, eps: bool) -> Vec<f64> {
        let d = self.dim();
        let i = self.labels[st.n] as usize;
        st.n += 1;
        let mut delta = vec![0.0; d];
        if !eps {
            return delta;
        }
        match &mut st.w {
            GroupElem::Indexed(w) => {
                delta.copy_from_slice(self.arr.step_vector(*w, i));
                *w = self
                    .arr
                    .group
                    .as_ref()
                    .expect("indexed element")
                    .mul_gen(*w, i);
            }
            GroupElem::Dense {
                matrix,
                since_reortho,
            } => {
                let beta = &self.arr.frame.beta[i];
                for r in 0..d {
                    delta[r] = (0..d).map(|c| matrix[r * d + c] * beta[c]).sum();
                }
                let m = DMatrix::from_row_slice(d, d, matrix);
                let mut prod = m * &self.arr.frame.simple_affine[i].linear;
                *since_reortho += 1;
                if *since_reortho >= DENSE_REORTHO {
                    let mut iso = AffineIsometry {
                        linear: prod,
                        translation: DVector::zeros(d),
                    };
                    iso.reorthonormalize();
                    prod = iso.linear;
                    *since_reortho = 0;
                }
                matrix.copy_from_slice(prod.transpose().as_slice());
            }
        }
        for (x, dx) in st.centroid.iter_mut().zip(&delta) {
            *x += dx;
        }
        delta
    }

    /// One crossing, drawing `ε` from `rng`. Returns `ε`.
    pub fn step(&self, st: &mut WalkState, rng: &mut RngStream) -> bool {
        let eps = rng.next_u64() < self.threshold;
        self.step_with(st, eps);
        eps
    }

    /// Runs crossings `st.n .. upto`, calling `obs(n, ε, X_n)` after each.
    pub fn advance<F: FnMut(usize, bool, &[f64])>(
        &self,
        st: &mut WalkState,
        rng: &mut RngStream,
        upto: usize,
        mut obs: F,
    ) {
        if let GroupElem::Indexed(mut w) = st.w {
            let mut n = st.n;
            self.run_indexed(
                &mut w,
                &mut st.centroid,
                rng,
                &mut n,
                upto,
                |n, eps, _, x| obs(n, eps, x),
            );
            st.w = GroupElem::Indexed(w);
            st.n = n;
        } else {
            while st.n < upto {
                let eps = self.step(st, rng);
                obs(st.n, eps, &st.centroid);
            }
        }
    }

    /// Hot loop over an enumerated group: `obs(n, ε, w_n, X_n)`.
    #[inline]
    pub fn run_indexed<F: FnMut(usize, bool, usize, &[f64])>(
        &self,
        w: &mut usize,
        x: &mut [f64],
        rng: &mut RngStream,
        n: &mut usize,
        upto: usize,
        mut obs: F,
    ) {
        let d = self.dim();
        let g = self.arr.group.as_ref().expect("indexed element");
        let right = g.right_table();
        let steps = &self.arr.step;
        let thr = self.threshold;
        let mut cur = *w;
        for k in *n..upto {
            let i = self.labels[k] as usize;
            let slot = cur * (d + 1) + i;
            let eps = rng.next_u64() < thr;
            if eps {
                let s = &steps[slot * d..slot * d + d];
                for (xr, sr) in x.iter_mut().zip(s) {
                    *xr += sr;
                }
                cur = right[slot] as usize;
            }
            obs(k + 1, eps, cur, x);
        }
        *w = cur;
        *n = upto.max(*n);
    }

    /// `X_N − X_0` over all precomputed crossings.
    pub fn displacement(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut st = self.initial_state();
        self.advance(&mut st, rng, self.steps(), |_, _, _| {});
        st.centroid
            .iter()
            .zip(&self.x0)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `X_0 … X_N` with labels and `ε`.
    pub fn simulate_discrete(&self, rng: &mut RngStream) -> Trajectory {
        let n = self.steps();
        let mut points = Vec::with_capacity(n + 1);
        let mut epsilons = Vec::with_capacity(n);
        points.push(self.x0.clone());
        let mut st = self.initial_state();
        self.advance(&mut st, rng, n, |_, eps, x| {
            epsilons.push(eps as u8);
            points.push(x.to_vec());
        });
        let mut times = vec![0.0];
        times.extend_from_slice(&self.times);
        Trajectory {
            mode: Mode::Discrete,
            times,
            points,
            labels: self.labels.clone(),
            epsilons,
        }
    }

    /// Laser position when the walk is in state `st` and the unreflected ray
    /// is at time `t`.
    pub fn laser_position(&self, st: &WalkState, t: f64) -> Vec<f64> {
        let d = self.dim();
        let mut y: Vec<f64> = self
            .l0
            .iter()
            .zip(&self.b)
            .map(|(x, v)| x + t * v)
            .collect();
        self.arr.frame.fold_in_place(&mut y);
        let m = self.linear(&st.w);
        let c0 = &self.arr.frame.centroid;
        (0..d)
            .map(|r| st.centroid[r] + (0..d).map(|c| m[r * d + c] * (y[c] - c0[c])).sum::<f64>())
            .collect()
    }

    /// `L_t` sampled at `0`, at every crossing time up to `horizon`, and at
    /// `horizon`. Uses the same `ε` per crossing index as the discrete walk.
    pub fn simulate_continuous(&self, rng: &mut RngStream, horizon: f64) -> Result<Trajectory> {
        let n = self.crossings_before(horizon)?;
        let mut st = self.initial_state();
        let mut times = vec![0.0];
        let mut points = vec![self.l0.clone()];
        let mut epsilons = Vec::with_capacity(n);
        for k in 0..n {
            epsilons.push(self.step(&mut st, rng) as u8);
            times.push(self.times[k]);
            points.push(self.laser_position(&st, self.times[k]));
        }
        times.push(horizon);
        points.push(self.laser_position(&st, horizon));
        Ok(Trajectory {
            mode: Mode::Continuous,
            times,
            points,
            labels: self.labels[..n].to_vec(),
            epsilons,
        })
    }

    /// Number of precomputed crossings with `t ≤ horizon`; fails if the
    /// precomputed ray may end before `horizon`.
    pub fn crossings_before(&self, horizon: f64) -> Result<usize> {
        if horizon > self.known_until {
            return Err(Error::HorizonExceeded {
                requested: horizon,
                available: self.known_until,
            });
        }
        Ok(self.times.partition_point(|&t| t <= horizon))
    }

    /// Physical simulation that re-traces the ray after every crossing.
    /// `refract` selects the index −1 rule instead of mirror reflection.
    pub fn simulate_physical(
        &self,
        rng: &mut RngStream,
        horizon: f64,
        refract: bool,
    ) -> Result<Trajectory> {
        let mut pos = self.l0.clone();
        let mut dir = self.b.clone();
        let mut t = 0.0;
        let mut times = vec![0.0];
        let mut points = vec![pos.clone()];
        let mut labels = Vec::new();
        let mut epsilons = Vec::new();
        loop {
            let ev = Ray::new(self.arr, &pos, &dir)?
                .next_event()
                .map_err(|e| match e {
                    Error::DegenerateDirection { time, .. } => Error::DegenerateDirection {
                        crossing: labels.len() + 1,
                        time: t + time,
                    },
                    other => other,
                })?;
            if t + ev.t > horizon {
                break;
            }
            t += ev.t;
            pos = ev.point;
            let eps = rng.next_u64() < self.threshold;
            if !eps {
                let alpha = self.arr.positive_root(ev.alpha);
                let nn: f64 = alpha.iter().map(|a| a * a).sum();
                let along: f64 = alpha.iter().zip(&dir).map(|(a, v)| a * v).sum::<f64>() / nn;
                for (v, a) in dir.iter_mut().zip(alpha) {
                    let normal = along * a;
                    *v = if refract {
                        2.0 * normal - *v
                    } else {
                        *v - 2.0 * normal
                    };
                }
                dir = unit_direction(&dir)?;
            }
            times.push(t);
            points.push(pos.clone());
            labels.push(ev.label as u8);
            epsilons.push(eps as u8);
        }
        times.push(horizon);
        points.push(
            pos.iter()
                .zip(&dir)
                .map(|(x, v)| x + (horizon - t) * v)
                .collect(),
        );
        Ok(Trajectory {
            mode: if refract {
                Mode::Refraction
            } else {
                Mode::Continuous
            },
            times,
            points,
            labels,
            epsilons,
        })
    }

    /// Refraction walk `R_t`: with probability `p` the tangential component
    /// of the direction is negated, otherwise the laser passes straight on.
    pub fn simulate_refraction(&self, rng: &mut RngStream, horizon: f64) -> Result<Trajectory> {
        self.simulate_physical(rng, horizon, true)
    }
}

/// `t ↦ n^{-1/2} · value(n t)` with linear interpolation between samples.
#[derive(Clone, Copy, Debug)]
pub struct Rescaled<'t> {
    traj: &'t Trajectory,
    n: f64,
}

pub fn rescale(traj: &Trajectory, n: f64) -> Result<Rescaled<'_>> {
    let available = horizon_of(traj);
    if n > available * (1.0 + 1e-12) || n <= 0.0 {
        return Err(Error::HorizonExceeded {
            requested: n,
            available,
        });
    }
    Ok(Rescaled { traj, n })
}

fn horizon_of(traj: &Trajectory) -> f64 {
    match traj.mode {
        Mode::Discrete => traj.crossings() as f64,
        _ => traj.times.last().copied().unwrap_or(0.0),
    }
}

impl Rescaled<'_> {
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let s = self.n * t;
        let available = horizon_of(self.traj);
        if !(0.0..=available * (1.0 + 1e-12)).contains(&s) {
            return Err(Error::HorizonExceeded {
                requested: s,
                available,
            });
        }
        let pts = &self.traj.points;
        let (k, frac) = match self.traj.mode {
            Mode::Discrete => {
                let k = (s.floor() as usize).min(pts.len() - 1);
                (k, s - k as f64)
            }
            _ => {
                let times = &self.traj.times;
                let k = times
                    .partition_point(|&x| x <= s)
                    .saturating_sub(1)
                    .min(times.len() - 1);
                let span = times.get(k + 1).map_or(0.0, |&x| x - times[k]);
                (
                    k,
                    if span > 0.0 {
                        (s - times[k]) / span
                    } else {
                        0.0
                    },
                )
            }
        };
        let scale = self.n.sqrt().recip();
        let a = &pts[k];
        let b = pts.get(k + 1).unwrap_or(a);
        Ok(a.iter()
            .zip(b)
            .map(|(x, y)| (x + frac * (y - x)) * scale)
            .collect())
    }
}

/// `runs` independent evaluations of `statistic`, run `r` using stream
/// `(seed, r)`.
pub fn ensemble<T, F>(exec: Exec, runs: u64, seed: u64, statistic: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    map_runs(exec, runs, |r| statistic(&mut RngStream::new(seed, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::{CartanType, Family};

    fn arr(f: Family, r: usize) -> Arrangement {
        Arrangement::new(CartanType::new(f, r).unwrap()).unwrap()
    }

    #[test]
    fn a1_exhaustive_small_words() {
        let a = arr(Family::A, 1);
        let model = WalkModel::new(&a, &[0.5], &[1.0], 0.3, 10).unwrap();
        for word in 0u32..1024 {
            let mut st = model.initial_state();
            let mut dir = 1.0;
            for k in 0..10 {
                let eps = word >> k & 1 == 1;
                let before = st.centroid[0];
                model.step_with(&mut st, eps);
                let dx = st.centroid[0] - before;
                if eps {
                    assert_eq!(dx, dir);
                } else {
                    assert_eq!(dx, 0.0);
                    dir = -dir;
                }
            }
        }
    }

    #[test]
    fn limits_in_p() {
        let a = arr(Family::A, 2);
        let l0 = [0.2, 0.1];
        let b = [0.6, 0.8];
        let frozen = WalkModel::new(&a, &l0, &b, 1.0, 50).unwrap();
        let tr = frozen.simulate_discrete(&mut RngStream::new(1, 0));
        assert!(tr.points.iter().all(|x| x == &tr.points[0]));
        let free = WalkModel::new(&a, &l0, &b, 0.0, 50).unwrap();
        let tr = free.simulate_discrete(&mut RngStream::new(1, 0));
        // every X_n is the centroid of the alcove of the straight ray
        let times = &free.times;
        for n in 1..50 {
            let mid = 0.5 * (times[n - 1] + times[n]);
            let y: Vec<f64> = l0.iter().zip(&free.b).map(|(x, v)| x + mid * v).collect();
            let (_, u) = a.frame.fold(&DVector::from_vec(y));
            let c = u.apply(&a.frame.centroid);
            assert!((DVector::from_vec(tr.points[n].clone()) - c).amax() < 1e-9);
        }
        assert!(free
            .simulate_continuous(&mut RngStream::new(1, 0), 1e3)
            .is_err());
        let long = WalkModel::for_horizon(&a, &l0, &b, 0.0, 7.5).unwrap();
        let tr = long
            .simulate_continuous(&mut RngStream::new(3, 0), 7.5)
            .unwrap();
        let end = tr.points.last().unwrap();
        for r in 0..2 {
            assert!((end[r] - (l0[r] + 7.5 * long.b[r])).abs() < 1e-9);
        }
    }

    #[test]
    fn first_step_mean() {
        let a = arr(Family::A, 2);
        let p = 0.3;
        let model = WalkModel::new(&a, &[0.2, 0.1], &[0.6, 0.8], p, 1).unwrap();
        let runs = 200_000;
        let mut sum = [0.0; 2];
        for r in 0..runs {
            let d = model.displacement(&mut RngStream::new(5, r));
            sum[0] += d[0];
            sum[1] += d[1];
        }
        let st = model.initial_state();
        let GroupElem::Indexed(w) = st.w else {
            panic!()
        };
        let expect = a.step_vector(w, model.labels[0] as usize);
        let beta_norm = a.frame.beta[0].norm();
        for r in 0..2 {
            let mean = sum[r] / runs as f64;
            let se = beta_norm * (p * (1.0 - p) / runs as f64).sqrt();
            assert!((mean - (1.0 - p) * expect[r]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn rescaling() {
        let a = arr(Family::A, 1);
        let model = WalkModel::new(&a, &[0.5], &[1.0], 0.5, 100).unwrap();
        let tr = model.simulate_discrete(&mut RngStream::new(0, 0));
        let r1 = rescale(&tr, 1.0).unwrap();
        assert_eq!(r1.eval(0.0).unwrap(), tr.points[0]);
        assert_eq!(r1.eval(3.0).unwrap(), tr.points[3]);
        let r = rescale(&tr, 100.0).unwrap();
        assert!((r.eval(0.0).unwrap()[0] - 0.05).abs() < 1e-15);
        let mid = r.eval(0.035).unwrap()[0];
        assert!((mid - 0.5 * (tr.points[3][0] + tr.points[4][0]) / 10.0).abs() < 1e-12);
        assert!(matches!(
            rescale(&tr, 101.0),
            Err(Error::HorizonExceeded { .. })
        ));
    }
}
