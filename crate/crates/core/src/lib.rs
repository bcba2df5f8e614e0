//! Heine–Stieltjes spectra of the Heun equation `Q S'' + P S' + V S = 0`,
//! the limiting root locus of its Van Vleck polynomials, the associated
//! rational quadratic differentials and their signed measures.

pub mod abelian;
pub mod error;
pub mod locus;
pub mod poly;
pub mod qdiff;
pub mod measures;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use poly::{Polynomial, Triangle, C64};
