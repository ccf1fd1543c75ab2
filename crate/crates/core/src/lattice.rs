//! Integer-relation search for direction classification.

use serde::Serialize;

/// Floating-point LLL reduction (δ = 0.99) of the rows of `basis`.
pub fn lll_reduce(basis: &mut [Vec<f64>]) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let delta = 0.99;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram_schmidt = |basis: &[Vec<f64>]| {
        let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        let mut norms = vec![0.0; n];
        for i in 0..n {
            let mut v = basis[i].clone();
            for j in 0..i {
                mu[i][j] = dot(&basis[i], &star[j]) / norms[j];
                for (a, b) in v.iter_mut().zip(&star[j]) {
                    *a -= mu[i][j] * b;
                }
            }
            norms[i] = dot(&v, &v);
            star.push(v);
        }
        (mu, norms)
    };

    let (mut mu, mut norms) = gram_schmidt(basis);
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let bj = basis[j].clone();
                for (a, b) in basis[k].iter_mut().zip(&bj) {
                    *a -= q * b;
                }
                (mu, norms) = gram_schmidt(basis);
            }
        }
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            (mu, norms) = gram_schmidt(basis);
            k = (k - 1).max(1);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionClass {
    Rational,
    FullyIrrational,
    Intermediate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: DirectionClass,
    /// Integer relations `m` with `m·c ≈ 0` found at the requested height.
    pub relations: Vec<Vec<i64>>,
    /// Relations that hold only approximately (`|m·c|` between the rounding
    /// bound and `1e-9`); their presence makes the verdict ambiguous.
    pub near_relations: Vec<Vec<i64>>,
    pub note: String,
}

/// Classifies the real vector `c` by the integer relations of height at
/// most `height` among its entries.
pub fn classify_coordinates(c: &[f64], height: f64) -> Classification {
    let d = c.len();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if d <= 1 || scale == 0.0 {
        return Classification {
            class: DirectionClass::Rational,
            relations: Vec::new(),
            near_relations: Vec::new(),
            note: "one-dimensional".into(),
        };
    }
    let c: Vec<f64> = c.iter().map(|x| x / scale).collect();
    let weight = 1e12;
    let mut basis: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row = vec![0.0; d + 1];
            row[i] = 1.0;
            row[d] = weight * c[i];
            row
        })
        .collect();
    lll_reduce(&mut basis);

    let mut relations = Vec::new();
    let mut near = Vec::new();
    for row in &basis {
        let m: Vec<i64> = row[..d].iter().map(|x| x.round() as i64).collect();
        let max = m.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        if max == 0 || max as f64 > height {
            continue;
        }
        let residual: f64 = m
            .iter()
            .zip(&c)
            .map(|(&a, b)| a as f64 * b)
            .sum::<f64>()
            .abs();
        // entries of c carry absolute error of order eps after scaling
        let rounding: f64 =
            64.0 * f64::EPSILON * m.iter().map(|&a| a.unsigned_abs() as f64).sum::<f64>();
        if residual <= rounding {
            relations.push(m);
        } else if residual <= 1e-9 {
            near.push(m);
        }
    }
    let rank = integer_rank(&relations);
    let (class, note) = if !near.is_empty() {
        (
            DirectionClass::Intermediate,
            format!("relations hold only to ~1e-9 at height {height:e}"),
        )
    } else if rank == d - 1 {
        (DirectionClass::Rational, String::new())
    } else if rank == 0 {
        (
            DirectionClass::FullyIrrational,
            format!("no relation up to height {height:e}"),
        )
    } else {
        (
            DirectionClass::Intermediate,
            format!("{rank} independent relations"),
        )
    };
    Classification {
        class,
        relations,
        near_relations: near,
        note,
    }
}

fn integer_rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c] as f64);
    m.rank(1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lll_finds_short_relation() {
        let c = [1.0, 2.0f64.sqrt(), 1.0 + 2.0 * 2.0f64.sqrt()];
        let cl = classify_coordinates(&c, 1e6);
        assert_eq!(cl.class, DirectionClass::Intermediate);
        assert_eq!(cl.relations.len(), 1);
        let m = &cl.relations[0];
        let r: f64 = m.iter().zip(&c).map(|(&a, b)| a as f64 * b).sum();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn classes() {
        assert_eq!(
            classify_coordinates(&[1.0, 0.0], 1e6).class,
            DirectionClass::Rational
        );
        assert_eq!(
            classify_coordinates(&[3.0, 7.0], 1e6).class,
            DirectionClass::Rational
        );
        assert_eq!(
            classify_coordinates(&[1.0, 2.0f64.sqrt()], 1e6).class,
            DirectionClass::FullyIrrational
        );
        assert_eq!(
            classify_coordinates(&[1.0, 1.0 + 1e-12], 1e6).class,
            DirectionClass::Intermediate
        );
        assert_eq!(
            classify_coordinates(&[1.0, 2.0f64.sqrt(), 3.0f64.sqrt()], 1e6).class,
            DirectionClass::FullyIrrational
        );
        assert_eq!(
            classify_coordinates(&[2.0, 4.0, -6.0], 1e6).class,
            DirectionClass::Rational
        );
    }
}
