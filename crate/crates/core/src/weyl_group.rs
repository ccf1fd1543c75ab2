//! Enumeration of the finite Weyl group `W = W̃ / Q∨`.
//!
//! Elements are stored exactly, as permutations of the root system. An
//! element is determined by where it sends the simple roots, so those images
//! serve as the deduplication key; real matrices are derived from them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::root_system::{reflection_matrix, Family, RootSystem};

/// Default enumeration cap; refuses `E7` and `E8`.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Full multiplication tables are only built up to this order.
pub const MULT_TABLE_MAX: usize = 2048;

#[derive(Clone, Debug)]
pub struct FiniteWeylGroup {
    rank: usize,
    n_roots: usize,
    /// `perms[w * n_roots + k]` is the index of `w·roots[k]`.
    perms: Vec<u16>,
    /// Row-major `d×d` matrices, one per element.
    mats: Vec<f64>,
    /// `gens[i]` is the element index of `π(s_i)`.
    gens: Vec<usize>,
    /// `right[w * (d+1) + i]` is the index of `w·π(s_i)`.
    right: Vec<u32>,
    inverse: Vec<u32>,
    mult: Option<Vec<u32>>,
    index: HashMap<Vec<u16>, u32>,
    simple: Vec<usize>,
}

/// Order of the Weyl group of each irreducible type.
pub fn weyl_group_order(family: Family, rank: usize) -> u128 {
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    match family {
        Family::A => fact(rank + 1),
        Family::B | Family::C => (1u128 << rank) * fact(rank),
        Family::D => (1u128 << (rank - 1)) * fact(rank),
        Family::E => match rank {
            6 => 51_840,
            7 => 2_903_040,
            _ => 696_729_600,
        },
        Family::F => 1152,
        Family::G => 12,
    }
}

fn root_permutation(spec: &RootSystem, m: &DMatrix<f64>) -> Vec<u16> {
    spec.roots
        .iter()
        .map(|r| {
            spec.find_root(&(m * r), 1e-8)
                .expect("reflection permutes the roots") as u16
        })
        .collect()
}

/// Breadth-first closure of `{π(s_0), …, π(s_d)}`.
pub fn enumerate_weyl_group(spec: &RootSystem, cap: usize) -> Result<FiniteWeylGroup> {
    let d = spec.rank();
    if weyl_group_order(spec.cartan.family, d) > cap as u128 {
        return Err(Error::GroupTooLarge { cap });
    }
    let n_roots = spec.roots.len();
    let mut gen_mats = vec![reflection_matrix(spec.highest_root())?];
    for i in 0..d {
        gen_mats.push(reflection_matrix(spec.simple_root(i))?);
    }
    let gen_perms: Vec<Vec<u16>> = gen_mats.iter().map(|m| root_permutation(spec, m)).collect();

    let key_of = |perm: &[u16]| -> Vec<u16> { spec.simple.iter().map(|&k| perm[k]).collect() };

    let mut perms: Vec<u16> = (0..n_roots as u16).collect();
    let mut index: HashMap<Vec<u16>, u32> = HashMap::new();
    index.insert(key_of(&perms[..n_roots]), 0);
    let mut right: Vec<u32> = Vec::new();
    let mut next = 0usize;
    let mut product = vec![0u16; n_roots];
    while next < index.len() {
        for g in &gen_perms {
            let w = &perms[next * n_roots..(next + 1) * n_roots];
            for k in 0..n_roots {
                product[k] = w[g[k] as usize];
            }
            let key = key_of(&product);
            let id = match index.get(&key) {
                Some(&id) => id,
                None => {
                    let id = index.len() as u32;
                    if index.len() >= cap {
                        return Err(Error::GroupTooLarge { cap });
                    }
                    index.insert(key, id);
                    perms.extend_from_slice(&product);
                    id
                }
            };
            right.push(id);
        }
        next += 1;
    }
    let order = index.len();

    let mut inverse = vec![0u32; order];
    let mut inv_perm = vec![0u16; n_roots];
    for w in 0..order {
        let p = &perms[w * n_roots..(w + 1) * n_roots];
        for (k, &img) in p.iter().enumerate() {
            inv_perm[img as usize] = k as u16;
        }
        inverse[w] = index[&key_of(&inv_perm)];
    }

    // ρ(w) = [w α_1 … w α_d] · S⁻¹
    let simple_basis = DMatrix::from_columns(
        &spec
            .simple
            .iter()
            .map(|&k| spec.roots[k].clone())
            .collect::<Vec<_>>(),
    );
    let s_inv = simple_basis
        .try_inverse()
        .expect("simple roots form a basis");
    let mut mats = Vec::with_capacity(order * d * d);
    for w in 0..order {
        let p = &perms[w * n_roots..(w + 1) * n_roots];
        let images = DMatrix::from_columns(
            &spec
                .simple
                .iter()
                .map(|&k| spec.roots[p[k] as usize].clone())
                .collect::<Vec<_>>(),
        );
        let m = images * &s_inv;
        for r in 0..d {
            for c in 0..d {
                mats.push(m[(r, c)]);
            }
        }
    }

    let gens = (0..=d).map(|i| right[i] as usize).collect();
    let mut group = FiniteWeylGroup {
        rank: d,
        n_roots,
        perms,
        mats,
        gens,
        right,
        inverse,
        mult: None,
        index,
        simple: spec.simple.clone(),
    };
    if order <= MULT_TABLE_MAX {
        let mut mult = Vec::with_capacity(order * order);
        for a in 0..order {
            for b in 0..order {
                mult.push(group.compose_slow(a, b) as u32);
            }
        }
        group.mult = Some(mult);
    }
    Ok(group)
}

impl FiniteWeylGroup {
    pub fn order(&self) -> usize {
        self.inverse.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Element index of `π(s_i)`, `i ∈ {0..d}`.
    pub fn generator(&self, i: usize) -> usize {
        self.gens[i]
    }

    /// `w·π(s_i)`.
    #[inline]
    pub fn mul_gen(&self, w: usize, i: usize) -> usize {
        self.right[w * (self.rank + 1) + i] as usize
    }

    /// Flat table behind [`mul_gen`](Self::mul_gen), for hot loops.
    pub fn right_table(&self) -> &[u32] {
        &self.right
    }

    pub fn inverse(&self, w: usize) -> usize {
        self.inverse[w] as usize
    }

    /// Index of `a·b`.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        match &self.mult {
            Some(t) => t[a * self.order() + b] as usize,
            None => self.compose_slow(a, b),
        }
    }

    pub fn has_mult_table(&self) -> bool {
        self.mult.is_some()
    }

    fn compose_slow(&self, a: usize, b: usize) -> usize {
        let pa = self.perm(a);
        let pb = self.perm(b);
        let key: Vec<u16> = self.simple.iter().map(|&k| pa[pb[k] as usize]).collect();
        self.index[&key] as usize
    }

    /// Root permutation of `w`.
    pub fn perm(&self, w: usize) -> &[u16] {
        &self.perms[w * self.n_roots..(w + 1) * self.n_roots]
    }

    /// Index of `w·roots[k]`.
    #[inline]
    pub fn act_on_root(&self, w: usize, k: usize) -> usize {
        self.perms[w * self.n_roots + k] as usize
    }

    /// Row-major entries of `ρ(w)`.
    #[inline]
    pub fn matrix_slice(&self, w: usize) -> &[f64] {
        let dd = self.rank * self.rank;
        &self.mats[w * dd..(w + 1) * dd]
    }

    pub fn matrix(&self, w: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rank, self.rank, self.matrix_slice(w))
    }

    /// `ρ(w)·v`.
    pub fn apply(&self, w: usize, v: &DVector<f64>) -> DVector<f64> {
        let m = self.matrix_slice(w);
        let d = self.rank;
        DVector::from_iterator(d, (0..d).map(|r| (0..d).map(|c| m[r * d + c] * v[c]).sum()))
    }

    /// Element whose root permutation sends the simple roots to `images`.
    pub fn from_simple_images(&self, images: &[u16]) -> Option<usize> {
        self.index.get(images).map(|&i| i as usize)
    }

    /// Element of `W` nearest to the orthogonal matrix `m`.
    ///
    /// Snaps the images of the simple roots to roots; fails with
    /// [`Error::NotInGroup`] if any image is farther than `1e-4`.
    pub fn locate(&self, spec: &RootSystem, m: &DMatrix<f64>) -> Result<usize> {
        let mut key = Vec::with_capacity(self.rank);
        let mut worst = 0.0f64;
        for &k in &self.simple {
            let (idx, dist) = spec
                .nearest_root(&(m * &spec.roots[k]))
                .expect("nonempty root system");
            worst = worst.max(dist);
            key.push(idx as u16);
        }
        if worst > 1e-4 {
            return Err(Error::NotInGroup { distance: worst });
        }
        self.from_simple_images(&key)
            .ok_or(Error::NotInGroup { distance: worst })
    }
}
