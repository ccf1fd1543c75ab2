//! A root system together with its alcove frame and, when it is small
//! enough, the enumerated finite Weyl group and the step tables used by the
//! walk kernels.

use nalgebra::DVector;

use crate::affine::{fundamental_alcove, AlcoveFrame};
use crate::error::{Error, Result};
use crate::root_system::{build_root_system, CartanType, RootSystem};
use crate::weyl_group::{enumerate_weyl_group, FiniteWeylGroup, DEFAULT_CAP};

#[derive(Clone, Debug)]
pub struct Arrangement {
    pub spec: RootSystem,
    pub frame: AlcoveFrame,
    pub group: Option<FiniteWeylGroup>,
    /// Positive roots, row-major `|Φ⁺| × d`.
    pub(crate) positive_flat: Vec<f64>,
    /// `step[(w * (d+1) + i) * d ..]` is `ρ(w)β_i`.
    pub(crate) step: Vec<f64>,
}

impl Arrangement {
    pub fn new(cartan: CartanType) -> Result<Self> {
        Self::with_cap(cartan, DEFAULT_CAP)
    }

    /// Builds the arrangement; the Weyl group is enumerated only if its
    /// order does not exceed `cap`.
    pub fn with_cap(cartan: CartanType, cap: usize) -> Result<Self> {
        let spec = build_root_system(cartan.family, cartan.rank)?;
        let frame = fundamental_alcove(&spec);
        let group = match enumerate_weyl_group(&spec, cap) {
            Ok(g) => Some(g),
            Err(Error::GroupTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        let positive_flat = spec
            .positive
            .iter()
            .flat_map(|&k| spec.roots[k].iter().copied().collect::<Vec<_>>())
            .collect();
        let mut arr = Self {
            spec,
            frame,
            group,
            positive_flat,
            step: Vec::new(),
        };
        arr.rebuild_step_table();
        Ok(arr)
    }

    pub fn parse(type_name: &str) -> Result<Self> {
        Self::new(type_name.parse()?)
    }

    pub fn rank(&self) -> usize {
        self.spec.rank()
    }

    pub fn cartan(&self) -> CartanType {
        self.spec.cartan
    }

    pub fn group(&self) -> Result<&FiniteWeylGroup> {
        self.group
            .as_ref()
            .ok_or(Error::GroupTooLarge { cap: DEFAULT_CAP })
    }

    pub fn n_positive(&self) -> usize {
        self.spec.positive.len()
    }

    /// Replaces the step vectors `β_i` (used to probe that verification
    /// catches a corrupted geometry) and refreshes the step tables.
    pub fn override_beta(&mut self, beta: Vec<DVector<f64>>) {
        self.frame.beta = beta;
        self.rebuild_step_table();
    }

    fn rebuild_step_table(&mut self) {
        let d = self.rank();
        self.step.clear();
        if let Some(g) = &self.group {
            self.step.reserve(g.order() * (d + 1) * d);
            for w in 0..g.order() {
                for b in &self.frame.beta {
                    self.step.extend(g.apply(w, b).iter());
                }
            }
        }
    }

    /// `ρ(w)β_i` as a slice of length `d`.
    #[inline]
    pub fn step_vector(&self, w: usize, i: usize) -> &[f64] {
        let d = self.rank();
        let at = (w * (d + 1) + i) * d;
        &self.step[at..at + d]
    }

    /// The `k`-th positive root as a slice.
    #[inline]
    pub fn positive_root(&self, k: usize) -> &[f64] {
        let d = self.rank();
        &self.positive_flat[k * d..(k + 1) * d]
    }

    /// Index into `spec.roots` of the `k`-th positive root.
    pub fn positive_root_index(&self, k: usize) -> usize {
        self.spec.positive[k]
    }
}
