//! Sparse linear algebra for the Newton systems.

mod band;
mod csr;
mod gmres;
mod ilu;

pub use band::BandLu;
pub use csr::{CsrMatrix, MappedSink, PatternSink, Sink, TripletSink};
pub use gmres::{gmres, GmresOutcome};
pub use ilu::Ilu0;

/// Discards every entry; used when only the residual is wanted.
pub struct NoSink;

impl Sink for NoSink {
    #[inline(always)]
    fn add(&mut self, _row: usize, _col: usize, _v: f64) {}
}
