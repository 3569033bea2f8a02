//! Haar-averaging rectification of almost-morphisms from finite (local)
//! groupoids with cores into compact matrix groups.

pub mod error;
pub mod group;
pub mod groupoid;
pub mod harness;
pub mod holomorphic;
pub mod rectifier;

pub use error::{RectifyError, Result};
