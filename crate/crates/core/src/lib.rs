pub mod acceptance;
pub mod affine;
pub mod arrangement;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod mixing;
pub mod presets;
pub mod ray;
pub mod rng;
pub mod root_system;
pub mod stats;
pub mod walk;
pub mod weyl_group;

pub use arrangement::Arrangement;
pub use error::{Error, Result};
