//! C ABI over the streaming learners, checkpoints and metrics.
//!
//! Every fallible function returns an [`MnStatus`]; on failure the message is
//! available from [`mn_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use magic_net::error::Error;
use magic_net::eval::{
    avg_metric, bwt_metric, cohen_kappa, load_checkpoint, save_checkpoint, CheckpointMeta,
    Confusion, ModelCheckpoint, RMatrix,
};
use magic_net::learners::{new_learner, Hyperparams, LearnerKind, StreamLearner};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// A file exists but is not a valid checkpoint of a supported version.
    Format = 4,
    /// Internal failure; the handle involved should be freed.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnLearnerKind {
    Cgru = 0,
    Magic = 1,
    Cpnn = 2,
}

impl From<MnLearnerKind> for LearnerKind {
    fn from(k: MnLearnerKind) -> Self {
        match k {
            MnLearnerKind::Cgru => LearnerKind::CGru,
            MnLearnerKind::Magic => LearnerKind::Magic,
            MnLearnerKind::Cpnn => LearnerKind::Cpnn,
        }
    }
}

/// Training hyperparameters. Start from [`mn_hyperparams_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnHyperparams {
    pub window: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub exp_size: usize,
    pub num_batches: usize,
}

impl From<Hyperparams> for MnHyperparams {
    fn from(h: Hyperparams) -> Self {
        Self {
            window: h.window,
            batch_size: h.batch_size,
            epochs: h.epochs,
            lr: h.lr,
            hidden: h.hidden,
            exp_size: h.exp_size,
            num_batches: h.num_batches,
        }
    }
}

impl From<MnHyperparams> for Hyperparams {
    fn from(h: MnHyperparams) -> Self {
        Self {
            window: h.window,
            batch_size: h.batch_size,
            epochs: h.epochs,
            lr: h.lr,
            hidden: h.hidden,
            exp_size: h.exp_size,
            num_batches: h.num_batches,
        }
    }
}

/// Opaque streaming learner.
pub struct MnLearner {
    inner: Box<dyn StreamLearner>,
    input_dim: usize,
    window: usize,
    seed: u64,
}

/// Opaque, immutable model checkpoint.
pub struct MnCheckpoint {
    inner: ModelCheckpoint,
}

struct Failure(MnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => MnStatus::Io,
            Error::BadMagic
            | Error::VersionMismatch { .. }
            | Error::Truncated(_)
            | Error::Shape(_) => MnStatus::Format,
            _ => MnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MnStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_last_error(&msg);
            MnStatus::Panic
        }
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(MnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(MnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure(MnStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure(MnStatus::NullPointer, "path is null".into()));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn features<'a>(l: &MnLearner, x: &'a [f64]) -> Result<&'a [f64], Failure> {
    if x.len() != l.input_dim {
        return Err(invalid(format!(
            "expected {} features, got {}",
            l.input_dim,
            x.len()
        )));
    }
    Ok(x)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn mn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Defaults for synthetic streams (hidden 50, window 10).
#[no_mangle]
pub extern "C" fn mn_hyperparams_default() -> MnHyperparams {
    Hyperparams::srw().into()
}

/// Creates a learner. `hyper` may be null for the defaults.
///
/// # Safety
/// `hyper` must be null or point to a valid `MnHyperparams`; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_new(
    kind: MnLearnerKind,
    input_dim: usize,
    hyper: *const MnHyperparams,
    seed: u64,
    out: *mut *mut MnLearner,
) -> MnStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = std::ptr::null_mut();
        let hyper: Hyperparams = match hyper.as_ref() {
            Some(h) => (*h).into(),
            None => Hyperparams::srw(),
        };
        if input_dim == 0 {
            return Err(invalid("input_dim must be at least 1"));
        }
        if hyper.window == 0 || hyper.batch_size == 0 || hyper.hidden == 0 || hyper.epochs == 0 {
            return Err(invalid("window, batch_size, hidden and epochs must be at least 1"));
        }
        if hyper.exp_size == 0 || !(hyper.lr > 0.0 && hyper.lr.is_finite()) {
            return Err(invalid("exp_size must be at least 1 and lr positive"));
        }
        let learner = MnLearner {
            inner: new_learner(kind.into(), input_dim, hyper, seed),
            input_dim,
            window: hyper.window,
            seed,
        };
        *out = Box::into_raw(Box::new(learner));
        Ok(())
    })
}

/// # Safety
/// `learner` must be null or a handle from [`mn_learner_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_free(learner: *mut MnLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

/// Advances the learner's window with `x` and writes P(y = 1).
///
/// # Safety
/// `learner` must be a live handle, `x` must point to `len` doubles and
/// `out_probability` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_predict(
    learner: *mut MnLearner,
    x: *const f64,
    len: usize,
    out_probability: *mut f64,
) -> MnStatus {
    guard(|| {
        let l = deref_mut(learner, "learner")?;
        let out = deref_mut(out_probability, "out_probability")?;
        let x = features(l, slice(x, len, "x")?)?;
        *out = l.inner.predict_one(x);
        Ok(())
    })
}

/// Advances the window without predicting (held-out points).
///
/// # Safety
/// As [`mn_learner_predict`].
#[no_mangle]
pub unsafe extern "C" fn mn_learner_observe(
    learner: *mut MnLearner,
    x: *const f64,
    len: usize,
) -> MnStatus {
    guard(|| {
        let l = deref_mut(learner, "learner")?;
        let x = features(l, slice(x, len, "x")?)?;
        l.inner.observe(x);
        Ok(())
    })
}

/// Adds a labelled point. `out_trained` (nullable) is set when a mini-batch
/// was trained.
///
/// # Safety
/// As [`mn_learner_predict`]; `out_trained` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_learn(
    learner: *mut MnLearner,
    x: *const f64,
    len: usize,
    label: u8,
    out_trained: *mut bool,
) -> MnStatus {
    guard(|| {
        let l = deref_mut(learner, "learner")?;
        let x = features(l, slice(x, len, "x")?)?;
        if label > 1 {
            return Err(invalid(format!("label must be 0 or 1, got {label}")));
        }
        let trained = l.inner.learn_one(x, label).is_some();
        if let Some(t) = out_trained.as_mut() {
            *t = trained;
        }
        Ok(())
    })
}

/// Signals a detected concept drift.
///
/// # Safety
/// `learner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_drift_detected(learner: *mut MnLearner) -> MnStatus {
    guard(|| {
        deref_mut(learner, "learner")?.inner.on_drift_detected();
        Ok(())
    })
}

/// Number of stored real values.
///
/// # Safety
/// `learner` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_param_count(
    learner: *const MnLearner,
    out: *mut usize,
) -> MnStatus {
    guard(|| {
        let l = deref(learner, "learner")?;
        *deref_mut(out, "out")? = l.inner.param_count();
        Ok(())
    })
}

/// Writes the learner's current model as a checkpoint file.
///
/// # Safety
/// `learner` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mn_learner_save_checkpoint(
    learner: *const MnLearner,
    path_utf8: *const c_char,
    concept_index: usize,
) -> MnStatus {
    guard(|| {
        let l = deref(learner, "learner")?;
        let p = path(path_utf8)?;
        let ck = ModelCheckpoint {
            meta: CheckpointMeta {
                concept_index,
                kind: l.inner.kind(),
                seed: l.seed,
                window: l.window,
            },
            model: l.inner.snapshot(),
        };
        save_checkpoint(&p, &ck)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_checkpoint_load(
    path_utf8: *const c_char,
    out: *mut *mut MnCheckpoint,
) -> MnStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = std::ptr::null_mut();
        let inner = load_checkpoint(&path(path_utf8)?)?;
        *out = Box::into_raw(Box::new(MnCheckpoint { inner }));
        Ok(())
    })
}

/// # Safety
/// `ck` must be null or a handle from [`mn_checkpoint_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mn_checkpoint_free(ck: *mut MnCheckpoint) {
    if !ck.is_null() {
        drop(Box::from_raw(ck));
    }
}

/// Window length `W` and feature count of a checkpoint.
///
/// # Safety
/// `ck` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_checkpoint_shape(
    ck: *const MnCheckpoint,
    out_window: *mut usize,
    out_input_dim: *mut usize,
    out_candidates: *mut usize,
) -> MnStatus {
    guard(|| {
        let c = &deref(ck, "checkpoint")?.inner;
        *deref_mut(out_window, "out_window")? = c.meta.window;
        *deref_mut(out_input_dim, "out_input_dim")? = c.model.input_dim();
        *deref_mut(out_candidates, "out_candidates")? = c.model.candidate_count();
        Ok(())
    })
}

/// P(y = 1) of the checkpoint's answering model on one sequence of `steps`
/// rows of `input_dim` features (row-major, oldest first).
///
/// # Safety
/// `ck` must be a live handle, `seq` must point to `steps * input_dim`
/// doubles and `out_probability` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_checkpoint_predict(
    ck: *const MnCheckpoint,
    seq: *const f64,
    steps: usize,
    input_dim: usize,
    out_probability: *mut f64,
) -> MnStatus {
    guard(|| {
        let c = &deref(ck, "checkpoint")?.inner;
        let out = deref_mut(out_probability, "out_probability")?;
        if input_dim != c.model.input_dim() {
            return Err(invalid(format!(
                "checkpoint expects {} features, got {input_dim}",
                c.model.input_dim()
            )));
        }
        if steps == 0 {
            return Err(invalid("sequence must have at least one step"));
        }
        let n = steps
            .checked_mul(input_dim)
            .ok_or_else(|| invalid("sequence too long"))?;
        let rows: Vec<&[f64]> = slice(seq, n, "seq")?.chunks(input_dim).collect();
        *out = c.model.predict_window(&rows);
        Ok(())
    })
}

/// Cohen's Kappa of a binary confusion matrix.
#[no_mangle]
pub extern "C" fn mn_cohen_kappa(tp: u64, fn_: u64, fp: u64, tn: u64) -> f64 {
    cohen_kappa(&Confusion::new(tp, fn_, fp, tn))
}

/// AVG and BWT of an `n x n` lower-triangular score matrix packed row by
/// row (`n (n + 1) / 2` values: `R[0][0], R[1][0], R[1][1], ...`).
/// `out_bwt_defined` is false for `n = 1`, where BWT is reported as 0.
///
/// # Safety
/// `packed` must point to `n (n + 1) / 2` doubles; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mn_avg_bwt(
    packed: *const f64,
    n: usize,
    out_avg: *mut f64,
    out_bwt: *mut f64,
    out_bwt_defined: *mut bool,
) -> MnStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("matrix must have at least one row"));
        }
        let count = n
            .checked_add(1)
            .and_then(|m| m.checked_mul(n))
            .ok_or_else(|| invalid("matrix too large"))?
            / 2;
        let values = slice(packed, count, "packed")?;
        let mut rows = Vec::with_capacity(n);
        let mut off = 0;
        for i in 0..n {
            rows.push(values[off..off + i + 1].to_vec());
            off += i + 1;
        }
        let r = RMatrix::from_rows(rows);
        let bwt = bwt_metric(&r);
        *deref_mut(out_avg, "out_avg")? = avg_metric(&r);
        *deref_mut(out_bwt, "out_bwt")? = bwt.value;
        *deref_mut(out_bwt_defined, "out_bwt_defined")? = bwt.defined;
        Ok(())
    })
}
