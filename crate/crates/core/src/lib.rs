//! Vulnerability detection over code property graphs of C functions.
//!
//! The pipeline mines vulnerable/patched function pairs from commits
//! ([`ingest`]), builds code property graphs ([`cfront`], [`cpg`]), slices the
//! statements related to a patch ([`slicer`]) so that the rest of the function
//! can be mutated without touching the vulnerability ([`augment`]), and trains
//! one edge-aware gated graph network per weakness type ([`autodiff`],
//! [`ggnn`]) whose outputs are combined by majority vote ([`ensemble`]).

pub mod cfront;
pub mod cpg;
pub mod slicer;
pub mod augment;
pub mod ingest;
pub mod autodiff;
pub mod ggnn;
pub mod ensemble;
pub mod fixtures;

/// Any error raised by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Front(#[from] cfront::FrontError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Slice(#[from] slicer::SliceError),
    #[error(transparent)]
    Augment(#[from] augment::AugmentError),
    #[error(transparent)]
    Tensor(#[from] autodiff::TensorError),
    #[error(transparent)]
    Checkpoint(#[from] autodiff::CheckpointError),
    #[error(transparent)]
    Model(#[from] ggnn::GgnnError),
    #[error(transparent)]
    Ensemble(#[from] ensemble::EnsembleError),
}
