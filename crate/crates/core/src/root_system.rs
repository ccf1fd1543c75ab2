//! Root systems of the irreducible crystallographic types.
//!
//! Every root system is realized in `ℝ^d`, `d` the rank. The coordinate
//! convention follows Bourbaki's planches:
//!
//! | type | ambient space | roots | simple roots |
//! |------|---------------|-------|--------------|
//! | `A1` | `ℝ` | `±1` | `α₁ = 1` (mirrors at the integers) |
//! | `A_d`, d ≥ 2 | `{x ∈ ℝ^{d+1} : Σx = 0}` | `eᵢ − eⱼ` | `eᵢ − eᵢ₊₁` |
//! | `B_d` | `ℝ^d` | `±eᵢ ± eⱼ`, `±eᵢ` | `eᵢ − eᵢ₊₁`, `e_d` |
//! | `C_d` | `ℝ^d` | `±eᵢ ± eⱼ`, `±2eᵢ` | `eᵢ − eᵢ₊₁`, `2e_d` |
//! | `D_d` | `ℝ^d` | `±eᵢ ± eⱼ` | `eᵢ − eᵢ₊₁`, `e_{d−1} + e_d` |
//! | `E8` | `ℝ⁸` | `±eᵢ ± eⱼ`, `½(±1,…,±1)` (even # of minus) | Bourbaki `α₁…α₈` |
//! | `E7`, `E6` | subspaces of `ℝ⁸` | `E8` roots orthogonal to `e₇+e₈` (and `e₆+e₈`) | `α₁…α₇` (`α₁…α₆`) |
//! | `F4` | `ℝ⁴` | `±eᵢ`, `±eᵢ ± eⱼ`, `½(±1,±1,±1,±1)` | `e₂−e₃, e₃−e₄, e₄, ½(e₁−e₂−e₃−e₄)` |
//! | `G2` | `{x ∈ ℝ³ : Σx = 0}` | `±(eᵢ−eⱼ)`, `±(2eᵢ−eⱼ−eₖ)` | `e₁−e₂`, `−2e₁+e₂+e₃` |
//!
//! When the ambient space is larger than the rank, coordinates are taken in
//! the orthonormal basis obtained by Gram–Schmidt on the simple roots in
//! order. With this normalization long roots have `⟨α,α⟩ = 2` (`6` for `G2`),
//! except `A1`, where `α = 1` and `α∨ = 2` so the mirrors sit on `ℤ`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rank accepted by [`build_root_system`].
pub const MAX_RANK: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CartanType {
    pub family: Family,
    pub rank: usize,
}

impl CartanType {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let ok = match family {
            Family::A => (1..=MAX_RANK).contains(&rank),
            Family::B => (2..=MAX_RANK).contains(&rank),
            Family::C => (3..=MAX_RANK).contains(&rank),
            Family::D => (4..=MAX_RANK).contains(&rank),
            Family::E => (6..=8).contains(&rank),
            Family::F => rank == 4,
            Family::G => rank == 2,
        };
        if ok {
            Ok(Self { family, rank })
        } else {
            Err(Error::InvalidType(format!("{family:?}{rank}")))
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.family, self.rank)
    }
}

impl FromStr for CartanType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let family = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Family::A,
            Some('B') => Family::B,
            Some('C') => Family::C,
            Some('D') => Family::D,
            Some('E') => Family::E,
            Some('F') => Family::F,
            Some('G') => Family::G,
            _ => return Err(Error::InvalidType(s.to_string())),
        };
        let rank: usize = chars
            .as_str()
            .parse()
            .map_err(|_| Error::InvalidType(s.to_string()))?;
        CartanType::new(family, rank)
    }
}

impl Serialize for CartanType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CartanType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Roots, coroots and the distinguished roots of one irreducible type.
#[derive(Clone, Debug)]
pub struct RootSystem {
    pub cartan: CartanType,
    /// All roots `Φ`, in a fixed order.
    pub roots: Vec<DVector<f64>>,
    /// `coroots[k]` is the coroot of `roots[k]`.
    pub coroots: Vec<DVector<f64>>,
    /// Indices into `roots` of the positive roots.
    pub positive: Vec<usize>,
    /// Indices into `roots` of `α₁ … α_d`.
    pub simple: Vec<usize>,
    /// Index into `roots` of the highest root `θ`.
    pub highest: usize,
    /// `negation[k]` is the index of `−roots[k]`.
    pub negation: Vec<usize>,
    /// Columns are the simple coroots `α∨₁ … α∨_d`.
    pub coroot_basis: DMatrix<f64>,
    lookup: HashMap<Vec<i64>, usize>,
}

fn lookup_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e6).round() as i64).collect()
}

impl RootSystem {
    pub fn rank(&self) -> usize {
        self.cartan.rank
    }

    pub fn simple_root(&self, i: usize) -> &DVector<f64> {
        &self.roots[self.simple[i]]
    }

    pub fn highest_root(&self) -> &DVector<f64> {
        &self.roots[self.highest]
    }

    /// Index of the root equal to `v` within `tol` (max-norm), if any.
    pub fn find_root(&self, v: &DVector<f64>, tol: f64) -> Option<usize> {
        if let Some(&k) = self.lookup.get(&lookup_key(v.as_slice())) {
            if (&self.roots[k] - v).amax() <= tol {
                return Some(k);
            }
        }
        self.nearest_root(v)
            .filter(|&(_, dist)| dist <= tol)
            .map(|(k, _)| k)
    }

    /// Nearest root in max-norm together with its distance.
    pub fn nearest_root(&self, v: &DVector<f64>) -> Option<(usize, f64)> {
        self.roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, (r - v).amax()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Coefficients of `v` in the basis of simple roots.
    pub fn simple_coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        let basis = DMatrix::from_columns(
            &self
                .simple
                .iter()
                .map(|&k| self.roots[k].clone())
                .collect::<Vec<_>>(),
        );
        basis.lu().solve(v).expect("simple roots form a basis")
    }

    /// Coordinates of `v` in the simple coroot basis.
    pub fn coroot_coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.coroot_basis
            .clone()
            .lu()
            .solve(v)
            .expect("simple coroots form a basis")
    }
}

/// `r_α = I − 2αα^⊤ / α^⊤α`.
pub fn reflection_matrix(alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    let nn = alpha.norm_squared();
    if nn == 0.0 || !nn.is_finite() {
        return Err(Error::ZeroVector);
    }
    let d = alpha.len();
    Ok(DMatrix::identity(d, d) - alpha * alpha.transpose() * (2.0 / nn))
}

/// `α∨ = 2α / ⟨α, α⟩`.
pub fn coroot(alpha: &DVector<f64>) -> DVector<f64> {
    alpha * (2.0 / alpha.norm_squared())
}

pub fn build_root_system(family: Family, rank: usize) -> Result<RootSystem> {
    let cartan = CartanType::new(family, rank)?;
    let (ambient_roots, ambient_simple) = ambient(cartan);
    let n = ambient_simple[0].len();

    // Coordinates in ℝ^d: identity when the ambient space already has the
    // right dimension, otherwise Gram–Schmidt on the simple roots.
    let project: Box<dyn Fn(&[f64]) -> DVector<f64>> = if n == rank {
        Box::new(|v: &[f64]| DVector::from_column_slice(v))
    } else {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
        for s in &ambient_simple {
            let mut u = DVector::from_column_slice(s);
            for q in &basis {
                let c = q.dot(&u);
                u -= q * c;
            }
            basis.push(u.normalize());
        }
        Box::new(move |v: &[f64]| {
            let v = DVector::from_column_slice(v);
            DVector::from_iterator(rank, basis.iter().map(|q| q.dot(&v)))
        })
    };

    let roots: Vec<DVector<f64>> = ambient_roots.iter().map(|r| project(r)).collect();
    let simple_vecs: Vec<DVector<f64>> = ambient_simple.iter().map(|r| project(r)).collect();

    let index_of = |v: &DVector<f64>| -> usize {
        roots
            .iter()
            .position(|r| (r - v).amax() < 1e-9)
            .expect("vector is a root")
    };
    let simple: Vec<usize> = simple_vecs.iter().map(index_of).collect();
    let negation: Vec<usize> = roots.iter().map(|r| index_of(&(-r))).collect();

    let simple_basis = DMatrix::from_columns(&simple_vecs);
    let lu = simple_basis.clone().lu();
    let mut positive = Vec::new();
    let mut highest = (usize::MAX, f64::NEG_INFINITY);
    for (k, r) in roots.iter().enumerate() {
        let coeffs = lu.solve(r).expect("simple roots form a basis");
        let height: f64 = coeffs.iter().sum();
        if coeffs.iter().all(|&c| c > -1e-9) {
            positive.push(k);
            if height > highest.1 + 0.5 {
                highest = (k, height);
            }
        }
    }

    let coroots: Vec<DVector<f64>> = roots.iter().map(coroot).collect();
    let coroot_basis = DMatrix::from_columns(
        &simple
            .iter()
            .map(|&k| coroots[k].clone())
            .collect::<Vec<_>>(),
    );

    let lookup = roots
        .iter()
        .enumerate()
        .map(|(k, r)| (lookup_key(r.as_slice()), k))
        .collect();

    Ok(RootSystem {
        cartan,
        lookup,
        roots,
        coroots,
        positive,
        simple,
        highest: highest.0,
        negation,
        coroot_basis,
    })
}

fn unit(n: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = scale;
    v
}

fn pm_pairs(n: usize, out: &mut Vec<Vec<f64>>) {
    for i in 0..n {
        for j in (i + 1)..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; n];
                v[i] = si;
                v[j] = sj;
                out.push(v);
            }
        }
    }
}

fn e8_roots() -> Vec<Vec<f64>> {
    let mut roots = Vec::with_capacity(240);
    pm_pairs(8, &mut roots);
    for mask in 0u32..256 {
        if mask.count_ones() % 2 == 0 {
            roots.push(
                (0..8)
                    .map(|i| if mask >> i & 1 == 1 { -0.5 } else { 0.5 })
                    .collect(),
            );
        }
    }
    roots
}

fn e8_simple() -> Vec<Vec<f64>> {
    let mut simple = vec![vec![0.0; 8]; 8];
    simple[0] = vec![0.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5, 0.5];
    simple[1][0] = 1.0;
    simple[1][1] = 1.0;
    for k in 2..8 {
        // α₃ = e₂ − e₁, …, α₈ = e₇ − e₆
        simple[k][k - 1] = 1.0;
        simple[k][k - 2] = -1.0;
    }
    simple
}

fn ambient(cartan: CartanType) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = cartan.rank;
    match cartan.family {
        Family::A if d == 1 => (vec![vec![1.0], vec![-1.0]], vec![vec![1.0]]),
        Family::A => {
            let n = d + 1;
            let mut roots = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let mut v = vec![0.0; n];
                        v[i] = 1.0;
                        v[j] = -1.0;
                        roots.push(v);
                    }
                }
            }
            let simple = (0..d)
                .map(|i| {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    v[i + 1] = -1.0;
                    v
                })
                .collect();
            (roots, simple)
        }
        Family::B | Family::C | Family::D => {
            let mut roots = Vec::new();
            pm_pairs(d, &mut roots);
            let short = match cartan.family {
                Family::B => Some(1.0),
                Family::C => Some(2.0),
                _ => None,
            };
            if let Some(s) = short {
                for i in 0..d {
                    roots.push(unit(d, i, s));
                    roots.push(unit(d, i, -s));
                }
            }
            let mut simple: Vec<Vec<f64>> = (0..d - 1)
                .map(|i| {
                    let mut v = vec![0.0; d];
                    v[i] = 1.0;
                    v[i + 1] = -1.0;
                    v
                })
                .collect();
            simple.push(match cartan.family {
                Family::B => unit(d, d - 1, 1.0),
                Family::C => unit(d, d - 1, 2.0),
                _ => {
                    let mut v = vec![0.0; d];
                    v[d - 2] = 1.0;
                    v[d - 1] = 1.0;
                    v
                }
            });
            (roots, simple)
        }
        Family::E => {
            let mut normals = vec![vec![0., 0., 0., 0., 0., 0., 1., 1.]];
            if d == 6 {
                normals.push(vec![0., 0., 0., 0., 0., 1., 0., 1.]);
            }
            let roots = e8_roots()
                .into_iter()
                .filter(|r| {
                    d == 8
                        || normals
                            .iter()
                            .all(|n| n.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12)
                })
                .collect();
            let mut simple = e8_simple();
            simple.truncate(d);
            (roots, simple)
        }
        Family::F => {
            let mut roots = Vec::new();
            pm_pairs(4, &mut roots);
            for i in 0..4 {
                roots.push(unit(4, i, 1.0));
                roots.push(unit(4, i, -1.0));
            }
            for mask in 0u32..16 {
                roots.push(
                    (0..4)
                        .map(|i| if mask >> i & 1 == 1 { -0.5 } else { 0.5 })
                        .collect(),
                );
            }
            let simple = vec![
                vec![0.0, 1.0, -1.0, 0.0],
                vec![0.0, 0.0, 1.0, -1.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.5, -0.5, -0.5, -0.5],
            ];
            (roots, simple)
        }
        Family::G => {
            let mut roots = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        let mut short = vec![0.0; 3];
                        short[i] = 1.0;
                        short[j] = -1.0;
                        roots.push(short);
                    }
                }
                let mut long = vec![-1.0; 3];
                long[i] = 2.0;
                roots.push(long.clone());
                roots.push(long.iter().map(|x| -x).collect());
            }
            let simple = vec![vec![1.0, -1.0, 0.0], vec![-2.0, 1.0, 1.0]];
            (roots, simple)
        }
    }
}
