//! The fundamental alcove, affine simple reflections and face labels.
//!
//! `𝒜₀ = {x : x·αᵢ > 0 (i = 1..d), x·θ < 1}`. The wall on `x·αᵢ = 0` carries
//! label `i` and the wall on `x·θ = 1` carries label `0`. Labels of other
//! facets are obtained by folding a point of the facet back into the closure
//! of `𝒜₀` with wall reflections and translations by coroots; since those
//! are elements of `W̃`, the label read off there is the invariant one.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::root_system::{reflection_matrix, RootSystem};
use crate::weyl_group::FiniteWeylGroup;

/// `x ↦ Ax + v` with `A` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineIsometry {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl AffineIsometry {
    pub fn identity(d: usize) -> Self {
        Self {
            linear: DMatrix::identity(d, d),
            translation: DVector::zeros(d),
        }
    }

    pub fn translation(v: DVector<f64>) -> Self {
        Self {
            linear: DMatrix::identity(v.len(), v.len()),
            translation: v,
        }
    }

    /// Reflection in the hyperplane `x·α = k`.
    pub fn reflection(alpha: &DVector<f64>, k: f64) -> Result<Self> {
        let linear = reflection_matrix(alpha)?;
        let translation = alpha * (2.0 * k / alpha.norm_squared());
        Ok(Self {
            linear,
            translation,
        })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let lt = self.linear.transpose();
        let translation = -(&lt * &self.translation);
        Self {
            linear: lt,
            translation,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// Re-orthonormalize the linear part (modified Gram–Schmidt on columns).
    pub fn reorthonormalize(&mut self) {
        let d = self.dim();
        for c in 0..d {
            for prev in 0..c {
                let dot = self.linear.column(prev).dot(&self.linear.column(c));
                let q = self.linear.column(prev).clone_owned();
                let mut col = self.linear.column_mut(c);
                col -= q * dot;
            }
            let n = self.linear.column(c).norm();
            self.linear.column_mut(c).unscale_mut(n);
        }
    }
}

/// An affine functional `x ↦ normal·x + offset`, positive on `𝒜₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wall {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Wall {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) + self.offset
    }

    /// Euclidean distance from `x` to the wall's hyperplane.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let v: f64 = self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset;
        v.abs() / self.normal.norm()
    }
}

#[derive(Clone, Debug)]
pub struct AlcoveFrame {
    pub rank: usize,
    pub centroid: DVector<f64>,
    /// Vertices of `𝒜₀`: the origin followed by `ωⱼ∨ / mⱼ`.
    pub vertices: Vec<DVector<f64>>,
    /// `s_0 … s_d`.
    pub simple_affine: Vec<AffineIsometry>,
    /// `β_i = s_i(centroid) − centroid`.
    pub beta: Vec<DVector<f64>>,
    /// `walls[i]` is the wall labeled `i`.
    pub walls: Vec<Wall>,
    fold: FoldData,
}

#[derive(Clone, Debug)]
struct FoldData {
    d: usize,
    /// Rows are the simple roots.
    simple: Vec<f64>,
    simple_coroot: Vec<f64>,
    theta: Vec<f64>,
    theta_coroot: Vec<f64>,
    /// Row-major coroot basis and its inverse.
    basis: Vec<f64>,
    basis_inv: Vec<f64>,
    wall_norms: Vec<f64>,
}

pub fn fundamental_alcove(spec: &RootSystem) -> AlcoveFrame {
    let d = spec.rank();
    let theta = spec.highest_root().clone();
    let theta_coroot = &spec.coroots[spec.highest];
    let marks = spec.simple_coordinates(&theta);

    let mut walls = vec![Wall {
        normal: -theta.clone(),
        offset: 1.0,
    }];
    let mut simple_affine =
        vec![AffineIsometry::reflection(&theta, 1.0).expect("highest root is nonzero")];
    for i in 0..d {
        let a = spec.simple_root(i).clone();
        simple_affine.push(AffineIsometry::reflection(&a, 0.0).expect("roots are nonzero"));
        walls.push(Wall {
            normal: a,
            offset: 0.0,
        });
    }

    // vⱼ·αᵢ = δᵢⱼ / mⱼ, so vⱼ·θ = 1.
    let simple_rows = DMatrix::from_rows(
        &(0..d)
            .map(|i| spec.simple_root(i).transpose())
            .collect::<Vec<_>>(),
    );
    let lu = simple_rows.lu();
    let mut vertices = vec![DVector::zeros(d)];
    for j in 0..d {
        let mut rhs = DVector::zeros(d);
        rhs[j] = 1.0 / marks[j];
        vertices.push(lu.solve(&rhs).expect("simple roots form a basis"));
    }
    let centroid = vertices.iter().fold(DVector::zeros(d), |acc, v| acc + v) / (d + 1) as f64;
    let beta = simple_affine
        .iter()
        .map(|s| s.apply(&centroid) - &centroid)
        .collect();

    let flat_rows = |vs: &mut dyn Iterator<Item = DVector<f64>>| -> Vec<f64> {
        vs.flat_map(|v| v.iter().copied().collect::<Vec<_>>())
            .collect()
    };
    let basis = &spec.coroot_basis;
    let basis_inv = basis
        .clone()
        .try_inverse()
        .expect("coroot basis is invertible");
    let fold = FoldData {
        d,
        simple: flat_rows(&mut (0..d).map(|i| spec.simple_root(i).clone())),
        simple_coroot: flat_rows(&mut spec.simple.iter().map(|&k| spec.coroots[k].clone())),
        theta: theta.iter().copied().collect(),
        theta_coroot: theta_coroot.iter().copied().collect(),
        basis: basis.transpose().iter().copied().collect(),
        basis_inv: basis_inv.transpose().iter().copied().collect(),
        wall_norms: walls.iter().map(|w| w.normal.norm()).collect(),
    };

    AlcoveFrame {
        rank: d,
        centroid,
        vertices,
        simple_affine,
        beta,
        walls,
        fold,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AlcoveFrame {
    /// Largest distance between two vertices of `𝒜₀`.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for a in &self.vertices {
            for b in &self.vertices {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    pub fn max_beta_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    /// True if every wall functional is at least `-tol` at `x`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.walls.iter().all(|w| w.eval(x) >= -tol)
    }

    /// Move `x` into the closure of `𝒜₀` in place. Returns the number of
    /// wall reflections used (translations by coroots not counted).
    pub fn fold_in_place(&self, x: &mut [f64]) -> usize {
        let f = &self.fold;
        let d = f.d;
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;

        // Reduce modulo the coroot lattice.
        let mut shift = [0.0f64; 16];
        for r in 0..d {
            shift[r] = dot(&f.basis_inv[r * d..(r + 1) * d], x).floor();
        }
        for (r, xr) in x.iter_mut().enumerate() {
            *xr -= dot(&f.basis[r * d..(r + 1) * d], &shift[..d]);
        }

        let mut count = 0;
        loop {
            let mut moved = false;
            for i in 0..d {
                let s = dot(&f.simple[i * d..(i + 1) * d], x);
                if s < -tol {
                    for (xr, c) in x.iter_mut().zip(&f.simple_coroot[i * d..(i + 1) * d]) {
                        *xr -= s * c;
                    }
                    count += 1;
                    moved = true;
                }
            }
            if moved {
                continue;
            }
            let s = dot(&f.theta, x) - 1.0;
            if s > tol {
                for (xr, c) in x.iter_mut().zip(&f.theta_coroot) {
                    *xr -= s * c;
                }
                count += 1;
                continue;
            }
            return count;
        }
    }

    /// Label of the wall nearest to the folded image of `x`.
    ///
    /// For a point on a facet of the arrangement (and on no other
    /// hyperplane) this is the facet's label.
    pub fn point_label(&self, x: &[f64]) -> usize {
        let mut y = [0.0f64; 16];
        let y = &mut y[..self.rank];
        y.copy_from_slice(x);
        self.fold_in_place(y);
        self.nearest_wall(y).0
    }

    /// Index of the wall of `𝒜₀` closest to `y`, and its distance.
    pub fn nearest_wall(&self, y: &[f64]) -> (usize, f64) {
        let f = &self.fold;
        let d = f.d;
        let mut best = ((1.0 - dot(&f.theta, y)).abs() / f.wall_norms[0], 0);
        for i in 0..d {
            let v = dot(&f.simple[i * d..(i + 1) * d], y).abs() / f.wall_norms[i + 1];
            if v < best.0 {
                best = (v, i + 1);
            }
        }
        (best.1, best.0)
    }

    /// Fold `x` into the closure of `𝒜₀`, returning the image and the
    /// element `u ∈ W̃` with `x = u(image)`.
    pub fn fold(&self, x: &DVector<f64>) -> (DVector<f64>, AffineIsometry) {
        let d = self.rank;
        let mut g = AffineIsometry::identity(d);
        let mut y = x.clone();
        let basis = DMatrix::from_row_slice(d, d, &self.fold.basis);
        let basis_inv = DMatrix::from_row_slice(d, d, &self.fold.basis_inv);
        let shift = (&basis_inv * &y).map(f64::floor);
        let t = AffineIsometry::translation(-(&basis * shift));
        y = t.apply(&y);
        g = t.compose(&g);
        let tol = 1e-12 * (1.0 + x.amax());
        loop {
            let hit = (1..=d)
                .find(|&i| self.walls[i].eval(&y) < -tol)
                .or_else(|| (self.walls[0].eval(&y) < -tol).then_some(0));
            match hit {
                Some(i) => {
                    let s = &self.simple_affine[i];
                    y = s.apply(&y);
                    g = s.compose(&g);
                }
                None => return (y, g.inverse()),
            }
        }
    }

    /// Label of the facet of `w𝒜₀` lying on `{x : x·α = k}`, or `None` if
    /// that hyperplane does not bound `w𝒜₀`. Pulls the hyperplane back
    /// through `w⁻¹` and matches it against the walls of `𝒜₀`.
    pub fn facet_label(&self, w: &AffineIsometry, alpha: &DVector<f64>, k: f64) -> Option<usize> {
        // α·(Ax + v) = k  ⇔  (Aᵀα)·x = k − α·v
        let normal = w.linear.transpose() * alpha;
        let level = k - alpha.dot(&w.translation);
        self.walls.iter().position(|wall| {
            // wall: n·x + o = 0
            let same = (&normal - &wall.normal).amax() < 1e-8 && (level + wall.offset).abs() < 1e-8;
            let flip = (&normal + &wall.normal).amax() < 1e-8 && (level - wall.offset).abs() < 1e-8;
            same || flip
        })
    }

    /// Hyperplane `(α, k)` carrying the image under `w` of the wall labeled `j`.
    pub fn wall_image(&self, w: &AffineIsometry, j: usize) -> (DVector<f64>, f64) {
        let wall = &self.walls[j];
        // n·y + o = 0 with y = w⁻¹x = Aᵀ(x − v)  ⇔  (An)·x = −o + n·(Aᵀv)
        let alpha = &w.linear * &wall.normal;
        let k = -wall.offset + alpha.dot(&w.translation);
        (alpha, k)
    }

    /// Label of the facet separating `w𝒜₀` from `ws_j𝒜₀`.
    pub fn crossing_label(&self, w: &AffineIsometry, j: usize) -> usize {
        let (alpha, k) = self.wall_image(w, j);
        self.facet_label(w, &alpha, k)
            .expect("image of a wall bounds the image alcove")
    }
}

/// `π(g)`: the element of `W` equal to the linear part of `g`.
pub fn project_to_w(
    spec: &RootSystem,
    group: &FiniteWeylGroup,
    g: &AffineIsometry,
) -> Result<usize> {
    group.locate(spec, &g.linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::{build_root_system, Family};
    use crate::weyl_group::{enumerate_weyl_group, DEFAULT_CAP};

    #[test]
    fn a1_alcove() {
        let rs = build_root_system(Family::A, 1).unwrap();
        let fr = fundamental_alcove(&rs);
        assert!((fr.centroid[0] - 0.5).abs() < 1e-15);
        let x = DVector::from_vec(vec![0.3]);
        assert!((fr.simple_affine[1].apply(&x)[0] + 0.3).abs() < 1e-15);
        assert!((fr.simple_affine[0].apply(&x)[0] - 1.7).abs() < 1e-15);
        assert!((fr.beta[1][0] + 1.0).abs() < 1e-15);
        assert!((fr.beta[0][0] - 1.0).abs() < 1e-15);
        assert_eq!(fr.point_label(&[1.0]), 0);
        assert_eq!(fr.point_label(&[2.0]), 1);
        assert_eq!(fr.point_label(&[-3.0]), 0);
    }

    #[test]
    fn a2_alcove_is_equilateral() {
        let rs = build_root_system(Family::A, 2).unwrap();
        let fr = fundamental_alcove(&rs);
        let n0 = fr.beta[0].norm();
        for b in &fr.beta {
            assert!((b.norm() - n0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_invariants() {
        for (f, r) in [
            (Family::A, 1),
            (Family::A, 3),
            (Family::B, 3),
            (Family::C, 3),
            (Family::G, 2),
            (Family::F, 4),
            (Family::E, 8),
        ] {
            let rs = build_root_system(f, r).unwrap();
            let fr = fundamental_alcove(&rs);
            let d = rs.rank();
            for w in &fr.walls {
                assert!(w.eval(&fr.centroid) > 0.0);
            }
            for (i, s) in fr.simple_affine.iter().enumerate() {
                let ss = s.compose(s);
                assert!((ss.linear - DMatrix::identity(d, d)).amax() < 1e-12);
                assert!(ss.translation.amax() < 1e-12);
                let normal = if i == 0 {
                    rs.highest_root()
                } else {
                    rs.simple_root(i - 1)
                };
                let b = &fr.beta[i];
                let cos = b.dot(normal) / (b.norm() * normal.norm());
                assert!((cos.abs() - 1.0).abs() < 1e-10);
                // a short step along β_i leaves through wall i first
                let mut hit = fr
                    .walls
                    .iter()
                    .enumerate()
                    .map(|(j, w)| {
                        let rate = w.normal.dot(b);
                        (
                            if rate < 0.0 {
                                -w.eval(&fr.centroid) / rate
                            } else {
                                f64::INFINITY
                            },
                            j,
                        )
                    })
                    .collect::<Vec<_>>();
                hit.sort_by(|a, b| a.0.total_cmp(&b.0));
                assert_eq!(hit[0].1, i);
            }
            for v in &fr.vertices {
                assert!(fr.contains(v, 1e-12));
            }
        }
    }

    #[test]
    fn isometry_algebra() {
        let rs = build_root_system(Family::B, 3).unwrap();
        let fr = fundamental_alcove(&rs);
        let a = fr.simple_affine[0].compose(&fr.simple_affine[2]);
        let b = fr.simple_affine[3].compose(&fr.simple_affine[0]);
        let x = DVector::from_vec(vec![0.3, -1.2, 2.5]);
        let ab = a.compose(&b);
        assert!((ab.apply(&x) - a.apply(&b.apply(&x))).amax() < 1e-12);
        assert!((a.inverse().apply(&a.apply(&x)) - &x).amax() < 1e-12);
        let id = AffineIsometry::identity(3);
        assert_eq!(id.apply(&x), x);
    }

    #[test]
    fn fold_returns_preimage_element() {
        let rs = build_root_system(Family::G, 2).unwrap();
        let fr = fundamental_alcove(&rs);
        for k in 0..50 {
            let x = DVector::from_vec(vec![
                (k as f64 * 0.731).sin() * 9.0,
                (k as f64 * 1.37).cos() * 7.0,
            ]);
            let (y, u) = fr.fold(&x);
            assert!(fr.contains(&y, 1e-10));
            assert!((u.apply(&y) - &x).amax() < 1e-10);
            let mut z = x.as_slice().to_vec();
            fr.fold_in_place(&mut z);
            assert!((DVector::from_vec(z) - &y).amax() < 1e-10);
        }
    }

    #[test]
    fn crossing_labels_from_both_sides() {
        let rs = build_root_system(Family::A, 2).unwrap();
        let fr = fundamental_alcove(&rs);
        let mut w = AffineIsometry::identity(2);
        for step in 0..200usize {
            let j = (step * 7 + step / 3) % 3;
            assert_eq!(fr.crossing_label(&w, j), j);
            let (alpha, k) = fr.wall_image(&w, j);
            let next = w.compose(&fr.simple_affine[j]);
            assert_eq!(fr.facet_label(&next, &alpha, k), Some(j));
            // folding a point of the shared facet gives the same label
            let facet_pts: Vec<_> = fr
                .vertices
                .iter()
                .filter(|v| fr.walls[j].eval(v).abs() < 1e-12)
                .collect();
            let p =
                facet_pts.iter().fold(DVector::zeros(2), |a, v| a + *v) / facet_pts.len() as f64;
            assert_eq!(fr.point_label(w.apply(&p).as_slice()), j);
            w = next;
        }
    }

    #[test]
    fn projection_to_finite_group() {
        let rs = build_root_system(Family::A, 2).unwrap();
        let g = enumerate_weyl_group(&rs, DEFAULT_CAP).unwrap();
        let fr = fundamental_alcove(&rs);
        assert_eq!(
            project_to_w(&rs, &g, &fr.simple_affine[0]).unwrap(),
            g.generator(0)
        );
        let t = AffineIsometry::translation(rs.coroots[rs.simple[0]].clone());
        assert_eq!(project_to_w(&rs, &g, &t).unwrap(), g.identity());
        let prod = fr.simple_affine[0].compose(&fr.simple_affine[1]);
        assert_eq!(
            project_to_w(&rs, &g, &prod).unwrap(),
            g.mul(g.generator(0), g.generator(1))
        );
    }
}
