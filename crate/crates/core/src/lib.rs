//! Exact surface birational geometry on blow-up towers: Zariski
//! decompositions, discrepancies, potential discrepancies, potentially
//! non-klt loci, Fano-type tests and rational chain connectedness.
//!
//! All arithmetic is over the rationals. Nef, big and pseudoeffective are
//! always relative to the model's declared curve catalog.

pub mod cli;
pub mod lattice;
pub mod potential;
pub mod rcc;
pub mod surface;
pub mod zariski;

pub use lattice::{DivisorClass, IntersectionForm, Matrix, Rational};
pub use surface::{BaseSpec, BlowUpCenter, RDivisor, SurfaceModel};
pub use zariski::{zariski_decompose, ZariskiDecomposition};
pub use potential::{classify_pair, PairSpec, PotentialReport};
