//! Systematic DFT frame codes: generator construction, subframe spectra,
//! systematic-index selection, coset classification of index sets and a
//! Monte-Carlo model of quantized reconstruction.

pub mod codec;
pub mod coset;
pub mod dft;
pub mod eigen;
pub mod error;
pub mod index_set;
pub mod matrix;
pub mod report;
pub mod spectra;
pub mod systematic;

pub use codec::{run_simulation, Quantizer, QuantizerSpec, Scenario, SimReport};
pub use coset::{canonical_leader, enumerate_cosets, Coset, CosetCatalog};
pub use dft::{generator, FrameSpec, GeneratorSet, Variant};
pub use error::{Error, Result};
pub use index_set::IndexSet;
pub use matrix::ComplexMatrix;
pub use spectra::{gram_spectrum, hermitian_eigenvalues, subframe, BoundReport, Spectrum};
pub use systematic::{optimal_index_set, systematic_frame, worst_index_set, SystematicFrame};
