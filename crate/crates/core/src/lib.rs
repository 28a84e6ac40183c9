pub mod detectors;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod learners;
pub mod masking;
pub mod numcore;
pub mod streams;
