//! Prequential evaluation, continual-learning metrics and checkpoints.

mod checkpoint;
mod cl;
mod kappa;
mod prequential;

pub use checkpoint::{
    load_checkpoint, load_mask_store, mask_store_from_bytes, mask_store_to_bytes, save_checkpoint,
    save_mask_store, CheckpointMeta, ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
    MASK_STORE_MAGIC,
};
pub use cl::{
    avg_metric, bwt_metric, evaluate_checkpoint, run_cl_eval, Bwt, CandidateRace, RMatrix,
    SELECTION_POINTS,
};
pub use kappa::{cohen_kappa, Confusion, KappaAccumulator, DECISION_THRESHOLD};
pub use prequential::{
    run_prequential, DriftScore, PrequentialConfig, PrequentialOutcome, PrequentialReport,
    TestSet, TracePoint,
};
