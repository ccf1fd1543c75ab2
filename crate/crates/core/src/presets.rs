//! Reference configurations shared by the command line and the acceptance
//! suite.

use nalgebra::DVector;
use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::walk::WalkModel;

/// Where the walk starts: either the centroid of `𝒜₀` or a point of `𝒜₀`
/// given by barycentric weights on its vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Start {
    Centroid,
    Barycentric(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub type_name: &'static str,
    pub p: f64,
    /// Direction in coroot coordinates (not normalized).
    pub b_coroot: Vec<f64>,
    /// The same direction as written in configs.
    pub b_text: &'static str,
    pub start: Start,
}

const FIGURE_START: [f64; 3] = [0.3, 0.6, 0.1];

pub fn presets() -> Vec<Preset> {
    let s2 = std::f64::consts::SQRT_2;
    let a1 = |name, p| Preset {
        name,
        type_name: "A1",
        p,
        b_coroot: vec![1.0],
        b_text: "1",
        start: Start::Centroid,
    };
    vec![
        a1("a1-p0.3", 0.3),
        a1("a1-p0.5", 0.5),
        a1("a1-p0.7", 0.7),
        Preset {
            name: "a2-rational",
            type_name: "A2",
            p: 0.3,
            b_coroot: vec![1.0, 2.0],
            b_text: "1,2",
            start: Start::Centroid,
        },
        Preset {
            name: "a2-irrational",
            type_name: "A2",
            p: 0.3,
            b_coroot: vec![-s2, -1.0],
            b_text: "-sqrt(2),-1",
            start: Start::Barycentric(FIGURE_START.to_vec()),
        },
        Preset {
            name: "g2",
            type_name: "G2",
            p: 0.3,
            b_coroot: vec![-s2, -1.0],
            b_text: "-sqrt(2),-1",
            start: Start::Barycentric(FIGURE_START.to_vec()),
        },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
}

/// Ambient vector with the given coordinates in the coroot basis.
pub fn from_coroot(arr: &Arrangement, coords: &[f64]) -> Result<Vec<f64>> {
    if coords.len() != arr.rank() {
        return Err(Error::Config(format!(
            "expected {} coroot coordinates, got {}",
            arr.rank(),
            coords.len()
        )));
    }
    Ok(
        (&arr.spec.coroot_basis * DVector::from_column_slice(coords))
            .as_slice()
            .to_vec(),
    )
}

/// The point of `𝒜₀` with the given vertex weights.
pub fn barycentric_point(arr: &Arrangement, weights: &[f64]) -> Result<Vec<f64>> {
    let verts = &arr.frame.vertices;
    if weights.len() != verts.len() || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Config(format!(
            "need {} nonnegative vertex weights",
            verts.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    let mut x = DVector::zeros(arr.rank());
    for (v, w) in verts.iter().zip(weights) {
        x += v * (w / total);
    }
    Ok(x.as_slice().to_vec())
}

impl Preset {
    pub fn arrangement(&self) -> Result<Arrangement> {
        Arrangement::parse(self.type_name)
    }

    pub fn direction(&self, arr: &Arrangement) -> Result<Vec<f64>> {
        from_coroot(arr, &self.b_coroot)
    }

    pub fn start_point(&self, arr: &Arrangement) -> Result<Vec<f64>> {
        match &self.start {
            Start::Centroid => Ok(arr.frame.centroid.as_slice().to_vec()),
            Start::Barycentric(w) if w.len() == arr.rank() + 1 => barycentric_point(arr, w),
            Start::Barycentric(_) => Ok(arr.frame.centroid.as_slice().to_vec()),
        }
    }

    /// The walk with the first `steps` crossings, on an arrangement built by
    /// the caller (so that it may be modified).
    pub fn model<'a>(&self, arr: &'a Arrangement, steps: usize) -> Result<WalkModel<'a>> {
        WalkModel::new(
            arr,
            &self.start_point(arr)?,
            &self.direction(arr)?,
            self.p,
            steps,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::cutting_sequence;

    #[test]
    fn figure_prefix() {
        let pr = preset("a2-irrational").unwrap();
        let arr = pr.arrangement().unwrap();
        let seq = cutting_sequence(
            &arr,
            &pr.start_point(&arr).unwrap(),
            &pr.direction(&arr).unwrap(),
            5,
        )
        .unwrap();
        assert_eq!(seq, vec![2, 1, 2, 0, 1]);
    }

    #[test]
    fn rational_preset_is_periodic() {
        let pr = preset("a2-rational").unwrap();
        let arr = pr.arrangement().unwrap();
        let seq = cutting_sequence(
            &arr,
            &pr.start_point(&arr).unwrap(),
            &pr.direction(&arr).unwrap(),
            300,
        )
        .unwrap();
        assert!(seq[3..].chunks(3).all(|c| c == &seq[3..6]));
        let mut period = seq[3..6].to_vec();
        period.sort();
        assert_eq!(period, vec![0, 1, 2]);
    }

    #[test]
    fn every_preset_builds() {
        for pr in presets() {
            let arr = pr.arrangement().unwrap();
            pr.model(&arr, 100).unwrap();
        }
        assert!(preset("nope").is_err());
    }
}
