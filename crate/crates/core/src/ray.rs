//! Straight-line dynamics through the Coxeter arrangement.
//!
//! A ray `L0 + t·b` meets the hyperplanes of the family `x·α = k` at the
//! times `(k − L0·α) / (b·α)`, an arithmetic progression in `k`. The tracer
//! merges these progressions, recomputing every time and point from the
//! integers `k` and the starting data, so nothing accumulates along the ray.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::lattice::{classify_coordinates, Classification};

/// Default longest window accepted by [`window_frequencies`].
pub const MAX_WINDOW: usize = 8;

/// Magnitude of the optional random perturbation of a direction.
pub const JITTER: f64 = 1e-9;

/// Two crossings closer than this are treated as simultaneous.
///
/// Crossing times carry a rounding error of a few ulps of `t`, so the
/// tolerance is an absolute floor plus a term growing with `t`. It stays well
/// below the effect of a [`JITTER`]-sized perturbation of the direction.
pub fn tie_tolerance(t: f64) -> f64 {
    1e-12 + 1e-15 * t.abs()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuttingEvent {
    /// 1-based crossing index.
    pub n: usize,
    pub t: f64,
    /// Index of the positive root whose family was crossed.
    pub alpha: usize,
    pub k: i64,
    pub label: usize,
    pub point: Vec<f64>,
}

/// Normalizes `b`, failing on the zero vector.
pub fn unit_direction(b: &[f64]) -> Result<Vec<f64>> {
    let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(b.iter().map(|x| x / n).collect())
}

/// Perturbs `b` by a seeded vector of size about [`JITTER`] and renormalizes.
pub fn jitter_direction(b: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed: Vec<f64> = b
        .iter()
        .map(|x| x + JITTER * rng.random_range(-1.0..1.0))
        .collect();
    unit_direction(&perturbed)
}

/// The unreflected ray from `L0` in direction `b`.
#[derive(Clone, Debug)]
pub struct Ray<'a> {
    arr: &'a Arrangement,
    origin: Vec<f64>,
    dir: Vec<f64>,
    start_level: Vec<f64>,
    inv_rate: Vec<f64>,
    step: Vec<i64>,
    next_k: Vec<i64>,
    n: usize,
}

impl<'a> Ray<'a> {
    /// `b` is normalized. A start point lying on a hyperplane is allowed;
    /// that hyperplane is not reported again.
    pub fn new(arr: &'a Arrangement, origin: &[f64], b: &[f64]) -> Result<Self> {
        let d = arr.rank();
        if origin.len() != d || b.len() != d {
            return Err(Error::Config(format!(
                "expected vectors of dimension {d}, got {} and {}",
                origin.len(),
                b.len()
            )));
        }
        let dir = unit_direction(b)?;
        let np = arr.n_positive();
        let mut start_level = Vec::with_capacity(np);
        let mut inv_rate = Vec::with_capacity(np);
        let mut step = Vec::with_capacity(np);
        let mut next_k = Vec::with_capacity(np);
        for j in 0..np {
            let alpha = arr.positive_root(j);
            let s: f64 = alpha.iter().zip(origin).map(|(a, x)| a * x).sum();
            let rate: f64 = alpha.iter().zip(&dir).map(|(a, x)| a * x).sum();
            let tol = 1e-12 * (1.0 + s.abs());
            start_level.push(s);
            if rate.abs() < 1e-15 {
                inv_rate.push(0.0);
                step.push(0);
                next_k.push(0);
            } else if rate > 0.0 {
                inv_rate.push(1.0 / rate);
                step.push(1);
                next_k.push((s + tol).floor() as i64 + 1);
            } else {
                inv_rate.push(1.0 / rate);
                step.push(-1);
                next_k.push((s - tol).ceil() as i64 - 1);
            }
        }
        Ok(Self {
            arr,
            origin: origin.to_vec(),
            dir,
            start_level,
            inv_rate,
            step,
            next_k,
            n: 0,
        })
    }

    pub fn direction(&self) -> &[f64] {
        &self.dir
    }

    #[inline]
    fn time(&self, j: usize) -> f64 {
        if self.step[j] == 0 {
            f64::INFINITY
        } else {
            (self.next_k[j] as f64 - self.start_level[j]) * self.inv_rate[j]
        }
    }

    /// Advances to the next crossing, returning `(t, positive root, k)`.
    pub fn advance(&mut self) -> Result<(f64, usize, i64)> {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut second = f64::INFINITY;
        for j in 0..self.step.len() {
            let t = self.time(j);
            if t < best.0 {
                second = best.0;
                best = (t, j);
            } else if t < second {
                second = t;
            }
        }
        let (t, j) = best;
        self.n += 1;
        if !t.is_finite() {
            return Err(Error::DegenerateDirection {
                crossing: self.n,
                time: t,
            });
        }
        if second - t < tie_tolerance(t) {
            return Err(Error::DegenerateDirection {
                crossing: self.n,
                time: t,
            });
        }
        let k = self.next_k[j];
        self.next_k[j] += self.step[j];
        Ok((t, j, k))
    }

    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.dir)
            .map(|(x, b)| x + t * b)
            .collect()
    }

    pub fn next_event(&mut self) -> Result<CuttingEvent> {
        let (t, alpha, k) = self.advance()?;
        let point = self.point_at(t);
        let label = self.arr.frame.point_label(&point);
        Ok(CuttingEvent {
            n: self.n,
            t,
            alpha,
            k,
            label,
            point,
        })
    }

    /// Label and time of the next crossing, without materializing the event.
    pub fn next_label(&mut self) -> Result<(usize, f64)> {
        let (t, _, _) = self.advance()?;
        let mut p = [0.0f64; 16];
        let d = self.origin.len();
        for (r, out) in p[..d].iter_mut().enumerate() {
            *out = self.origin[r] + t * self.dir[r];
        }
        Ok((self.arr.frame.point_label(&p[..d]), t))
    }
}

/// First crossing of the ray from `x` in direction `b`.
pub fn next_crossing(arr: &Arrangement, x: &[f64], b: &[f64]) -> Result<CuttingEvent> {
    Ray::new(arr, x, b)?.next_event()
}

/// The first `n` crossings.
pub fn cutting_events(
    arr: &Arrangement,
    l0: &[f64],
    b: &[f64],
    n: usize,
) -> Result<Vec<CuttingEvent>> {
    let mut ray = Ray::new(arr, l0, b)?;
    (0..n).map(|_| ray.next_event()).collect()
}

/// Labels of the first `n` facets crossed by the unreflected ray.
pub fn cutting_sequence(arr: &Arrangement, l0: &[f64], b: &[f64], n: usize) -> Result<Vec<u8>> {
    Ok(cutting_sequence_with_times(arr, l0, b, n)?.0)
}

/// Labels and crossing times of the first `n` crossings.
pub fn cutting_sequence_with_times(
    arr: &Arrangement,
    l0: &[f64],
    b: &[f64],
    n: usize,
) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut ray = Ray::new(arr, l0, b)?;
    let mut labels = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        let (label, t) = ray.next_label()?;
        labels.push(label as u8);
        times.push(t);
    }
    Ok((labels, times))
}

/// Crossings per unit time of a unit-speed ray: `½ Σ_{α∈Φ} |b·α|`.
pub fn hit_rate(arr: &Arrangement, b: &[f64]) -> Result<f64> {
    let b = unit_direction(b)?;
    Ok((0..arr.n_positive())
        .map(|j| {
            arr.positive_root(j)
                .iter()
                .zip(&b)
                .map(|(a, x)| a * x)
                .sum::<f64>()
                .abs()
        })
        .sum())
}

/// Lipschitz constant of [`hit_rate`] on the unit sphere: `½ Σ_{α∈Φ} ‖α‖`.
pub fn hit_rate_lipschitz(arr: &Arrangement) -> f64 {
    (0..arr.n_positive())
        .map(|j| {
            arr.positive_root(j)
                .iter()
                .map(|a| a * a)
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// Number of hyperplanes strictly between `L0` and `L0 + T·b`, counted
/// family by family.
pub fn crossings_up_to(arr: &Arrangement, l0: &[f64], b: &[f64], horizon: f64) -> Result<u64> {
    let b = unit_direction(b)?;
    let mut total = 0u64;
    for j in 0..arr.n_positive() {
        let alpha = arr.positive_root(j);
        let s0: f64 = alpha.iter().zip(l0).map(|(a, x)| a * x).sum();
        let s1: f64 = alpha
            .iter()
            .zip(l0.iter().zip(&b))
            .map(|(a, (x, v))| a * (x + horizon * v))
            .sum();
        total += (s1.floor() - s0.floor()).abs() as u64;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowFrequencyTable {
    pub window_length: usize,
    /// Pattern (labels in order) → number of occurrences.
    pub counts: BTreeMap<Vec<u8>, u64>,
    pub total: u64,
}

impl WindowFrequencyTable {
    /// Sliding windows of length `w` over `labels`, which take values in
    /// `0..n_labels`.
    pub fn from_labels(labels: &[u8], w: usize, n_labels: usize) -> Self {
        let mut packed: HashMap<u64, u64> = HashMap::new();
        let base = n_labels as u64;
        let total = labels.len().saturating_sub(w - 1) as u64;
        if w > 0 && labels.len() >= w {
            let top = base.pow(w as u32 - 1);
            let mut code = labels[..w - 1]
                .iter()
                .fold(0u64, |c, &l| c * base + l as u64);
            for &l in &labels[w - 1..] {
                code = code * base + l as u64;
                *packed.entry(code).or_insert(0) += 1;
                code %= top;
            }
        }
        let counts = packed
            .into_iter()
            .map(|(mut code, c)| {
                let mut pattern = vec![0u8; w];
                for slot in pattern.iter_mut().rev() {
                    *slot = (code % base) as u8;
                    code /= base;
                }
                (pattern, c)
            })
            .collect();
        Self {
            window_length: w,
            counts,
            total,
        }
    }

    pub fn frequency(&self, pattern: &[u8]) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(pattern).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = (&Vec<u8>, f64)> + '_ {
        self.counts
            .iter()
            .map(move |(p, &c)| (p, c as f64 / self.total as f64))
    }
}

/// Window statistics of the labels `i_{n0+1} … i_{n0+n}`.
pub fn window_frequencies(
    arr: &Arrangement,
    l0: &[f64],
    b: &[f64],
    window_length: usize,
    n: usize,
    n0: usize,
) -> Result<WindowFrequencyTable> {
    window_frequencies_capped(arr, l0, b, window_length, n, n0, MAX_WINDOW)
}

pub fn window_frequencies_capped(
    arr: &Arrangement,
    l0: &[f64],
    b: &[f64],
    window_length: usize,
    n: usize,
    n0: usize,
    max_window: usize,
) -> Result<WindowFrequencyTable> {
    check_window(arr, window_length, max_window)?;
    let labels = cutting_sequence(arr, l0, b, n0 + n)?;
    Ok(WindowFrequencyTable::from_labels(
        &labels[n0..],
        window_length,
        arr.rank() + 1,
    ))
}

pub(crate) fn check_window(arr: &Arrangement, w: usize, max_window: usize) -> Result<()> {
    let fits = (arr.rank() as f64 + 1.0).powi(w as i32) < 1.8e19;
    if w == 0 || w > max_window || !fits {
        return Err(Error::WindowTooLong {
            len: w,
            max: max_window,
        });
    }
    Ok(())
}

/// Follows the unreflected ray from `x`, a point of `{y : y·α = k}` with
/// `k ≡ parity (mod 2)`, to the next hyperplane of the same family and
/// parity. Returns the landing point and the elapsed time.
pub fn first_return(
    arr: &Arrangement,
    alpha_index: usize,
    parity: u8,
    x: &[f64],
    b: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let alpha = arr.positive_root(alpha_index);
    let level: f64 = alpha.iter().zip(x).map(|(a, v)| a * v).sum();
    let k0 = level.round();
    if (level - k0).abs() > 1e-8 || (k0 as i64).rem_euclid(2) != parity as i64 % 2 {
        return Err(Error::Config(format!(
            "start point is not on a hyperplane of the requested family (x·α = {level})"
        )));
    }
    let mut ray = Ray::new(arr, x, b)?;
    if ray.step[alpha_index] == 0 {
        return Err(Error::DegenerateDirection {
            crossing: 0,
            time: f64::INFINITY,
        });
    }
    loop {
        let (t, j, k) = ray.advance()?;
        if j == alpha_index && k.rem_euclid(2) == parity as i64 % 2 {
            return Ok((ray.point_at(t), t));
        }
    }
}

/// Advisory classification of `b` by integer relations among its coroot
/// coordinates.
pub fn classify_direction(arr: &Arrangement, b: &[f64], height: f64) -> Result<Classification> {
    let b = unit_direction(b)?;
    let c = arr.spec.coroot_coordinates(&DVector::from_vec(b));
    Ok(classify_coordinates(c.as_slice(), height))
}

/// Writes `n,t,alpha,k,label,x_1..x_d`.
pub fn write_events_csv<W: Write>(events: &[CuttingEvent], mut out: W) -> io::Result<()> {
    let d = events.first().map_or(0, |e| e.point.len());
    write!(out, "n,t,alpha,k,label")?;
    for i in 1..=d {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for e in events {
        write!(out, "{},{},{},{},{}", e.n, e.t, e.alpha, e.k, e.label)?;
        for x in &e.point {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::{CartanType, Family};

    fn arr(f: Family, r: usize) -> Arrangement {
        Arrangement::new(CartanType::new(f, r).unwrap()).unwrap()
    }

    #[test]
    fn a1_crossings() {
        let a = arr(Family::A, 1);
        let e = next_crossing(&a, &[0.5], &[1.0]).unwrap();
        assert!((e.t - 0.5).abs() < 1e-15);
        assert_eq!(e.label, 0);
        assert_eq!(e.k, 1);
        let labels = cutting_sequence(&a, &[0.3], &[-1.0], 20).unwrap();
        for (n, l) in labels.iter().enumerate() {
            assert_eq!(*l as usize, (n + 1) % 2);
        }
        assert!((hit_rate(&a, &[1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_points_lie_on_their_hyperplanes() {
        let a = arr(Family::G, 2);
        let b = [0.3, 0.7 * 2f64.sqrt()];
        let events = cutting_events(&a, &[0.11, 0.07], &b, 500).unwrap();
        for w in events.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        for e in &events {
            let alpha = a.positive_root(e.alpha);
            let s: f64 = alpha.iter().zip(&e.point).map(|(x, y)| x * y).sum();
            assert!((s - e.k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_direction_detected() {
        let a = arr(Family::A, 2);
        // Aim the ray from the centroid at the origin, a vertex of the alcove.
        let c = a.frame.centroid.clone();
        let b: Vec<f64> = c.iter().map(|x| -x).collect();
        let err = cutting_sequence(&a, c.as_slice(), &b, 5).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateDirection { crossing: 1, .. }
        ));
        let jittered = jitter_direction(&b, 7).unwrap();
        assert!(cutting_sequence(&a, c.as_slice(), &jittered, 5).is_ok());
        assert_eq!(unit_direction(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn window_table_counts() {
        let t = WindowFrequencyTable::from_labels(&[0, 1, 0, 1, 0, 1], 2, 2);
        assert_eq!(t.total, 5);
        assert_eq!(t.counts[&vec![0, 1]], 3);
        assert_eq!(t.counts[&vec![1, 0]], 2);
        assert_eq!(t.frequency(&[1, 1]), 0.0);
        let a = arr(Family::A, 1);
        assert!(matches!(
            window_frequencies(&a, &[0.5], &[1.0], 9, 100, 0),
            Err(Error::WindowTooLong { len: 9, max: 8 })
        ));
    }

    #[test]
    fn first_return_a1() {
        let a = arr(Family::A, 1);
        let (x, tau) = first_return(&a, 0, 0, &[0.0], &[1.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((tau - 2.0).abs() < 1e-15);
        assert!(first_return(&a, 0, 1, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn csv_header() {
        let a = arr(Family::A, 2);
        let ev = cutting_events(&a, &[0.1, 0.2], &[0.6, 0.8], 2).unwrap();
        let mut buf = Vec::new();
        write_events_csv(&ev, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,t,alpha,k,label,x_1,x_2\n1,"));
        assert_eq!(s.lines().count(), 3);
    }
}
