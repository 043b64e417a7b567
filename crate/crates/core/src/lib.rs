//! Pointwise behaviour of wavelet series in Besov spaces: dyadic geometry,
//! compactly supported wavelets, Cantor constructions and saturating expansions.

pub mod analysis;
pub mod cantor;
pub mod cli;
pub mod dyadic;
pub mod error;
pub mod expansion;
pub mod saturate;
pub mod wavelet;

pub use error::{Error, Result};
