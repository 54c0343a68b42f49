//! Hierarchical PAM with bit-interleaved coded modulation: constellations,
//! codes, bit multiplexers, weight spectra, error bounds, simulation and
//! design search.

pub mod constellation;
pub mod convcode;
pub mod mux;
pub mod spectrum;
pub mod lvalues;
pub mod bounds;
pub mod optimizer;
pub mod montecarlo;
