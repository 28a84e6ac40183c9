//! Binary checkpoint format.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! magic "MAGICNET" | version u32 | kind u8 | concept u64 | seed u64 | window u64 | payload
//! ```
//!
//! A network is `input u64 | hidden u64` followed by its eleven tensors, each
//! `rows u64 | cols u64 | rows * cols f64`. Payloads: cGRU one network; cPNN a
//! count and that many networks; MAGIC Net a count and that many records
//! `concept u64 | option u8 | network | has_mask u8 | [mask network]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learners::{LearnerKind, ModelSnapshot};
use crate::masking::{MaskRecord, MaskSet, MaskStore, OptionKind};
use crate::numcore::{NetParams, TENSOR_NAMES};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"MAGICNET";
pub const MASK_STORE_MAGIC: [u8; 8] = *b"MAGICMSK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub concept_index: usize,
    pub kind: LearnerKind,
    pub seed: u64,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub meta: CheckpointMeta,
    pub model: ModelSnapshot,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn net(&mut self, net: &NetParams) {
        self.usize(net.input_dim());
        self.usize(net.hidden_dim());
        for ((rows, cols), data) in net.shapes().into_iter().zip(net.tensors()) {
            self.usize(rows);
            self.usize(cols);
            for v in data {
                self.0.extend_from_slice(&v.to_le_bytes());
            }
        }
    }

    fn record(&mut self, r: &MaskRecord) {
        self.usize(r.concept_index);
        self.u8(r.option.code());
        self.net(&r.snapshot);
        match &r.mask {
            Some(m) => {
                self.u8(1);
                self.net(m.pre_activations());
            }
            None => self.u8(0),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!(
                "{what}: need {n} bytes at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::Shape(format!("{what}: {v} does not fit in memory")))
    }

    /// A length that must be backed by at least `min_bytes_each` bytes per item.
    fn count(&mut self, what: &str, min_bytes_each: usize) -> Result<usize> {
        let n = self.usize(what)?;
        let left = self.buf.len() - self.pos;
        if n.saturating_mul(min_bytes_each) > left {
            return Err(Error::Truncated(format!(
                "{what}: {n} entries cannot fit in {left} remaining bytes"
            )));
        }
        Ok(n)
    }

    fn net(&mut self) -> Result<NetParams> {
        let input = self.usize("input_dim")?;
        let hidden = self.usize("hidden_dim")?;
        if input == 0 || hidden == 0 {
            return Err(Error::Shape(format!("network {input}x{hidden} is empty")));
        }
        // reject absurd sizes before allocating
        let left = self.buf.len() - self.pos;
        let needed = hidden
            .checked_mul(hidden.checked_add(input).and_then(|s| s.checked_mul(3)).unwrap_or(usize::MAX))
            .and_then(|v| v.checked_mul(8));
        if needed.is_none_or(|n| n > left) {
            return Err(Error::Truncated(format!(
                "network {input}x{hidden} does not fit in {left} remaining bytes"
            )));
        }
        let mut net = NetParams::zeros(input, hidden);
        let shapes = net.shapes();
        for (k, dst) in net.tensors_mut().into_iter().enumerate() {
            let rows = self.usize(TENSOR_NAMES[k])?;
            let cols = self.usize(TENSOR_NAMES[k])?;
            if (rows, cols) != shapes[k] {
                return Err(Error::Shape(format!(
                    "{}: stored {rows}x{cols}, expected {}x{} for a {input}x{hidden} network",
                    TENSOR_NAMES[k], shapes[k].0, shapes[k].1
                )));
            }
            let bytes = self.take(rows * cols * 8, TENSOR_NAMES[k])?;
            for (d, chunk) in dst.iter_mut().zip(bytes.chunks_exact(8)) {
                *d = f64::from_le_bytes(chunk.try_into().unwrap());
            }
        }
        Ok(net)
    }

    fn record(&mut self) -> Result<MaskRecord> {
        let concept_index = self.usize("concept_index")?;
        let code = self.u8("option")?;
        let option = OptionKind::from_code(code)
            .ok_or_else(|| Error::Shape(format!("unknown option code {code}")))?;
        let snapshot = self.net()?;
        let mask = match self.u8("has_mask")? {
            0 => None,
            1 => Some(MaskSet::from_pre_activations(self.net()?)),
            other => return Err(Error::Shape(format!("mask flag {other}"))),
        };
        Ok(MaskRecord {
            concept_index,
            snapshot,
            mask,
            option,
        })
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.buf.len() < 8 || &self.buf[..8] != magic {
            return Err(Error::BadMagic);
        }
        self.pos = 8;
        let found = self.u32("version")?;
        if found != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Shape(format!(
                "{} trailing bytes after the payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Smallest encoded network: two dims plus eleven empty-ish tensor headers.
const MIN_NET_BYTES: usize = 16 + 11 * 16;

impl ModelCheckpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(&CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.u8(self.model.kind().code());
        w.usize(self.meta.concept_index);
        w.u64(self.meta.seed);
        w.usize(self.meta.window);
        match &self.model {
            ModelSnapshot::CGru { net } => w.net(net),
            ModelSnapshot::Cpnn { columns } => {
                w.usize(columns.len());
                columns.iter().for_each(|c| w.net(c));
            }
            ModelSnapshot::Magic { records } => {
                w.usize(records.len());
                records.iter().for_each(|r| w.record(r));
            }
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        r.header(&CHECKPOINT_MAGIC)?;
        let code = r.u8("kind")?;
        let kind = LearnerKind::from_code(code)
            .ok_or_else(|| Error::Shape(format!("unknown learner code {code}")))?;
        let concept_index = r.usize("concept_index")?;
        let seed = r.u64("seed")?;
        let window = r.usize("window")?;
        let model = match kind {
            LearnerKind::CGru => ModelSnapshot::CGru { net: r.net()? },
            LearnerKind::Cpnn => {
                let n = r.count("columns", MIN_NET_BYTES)?;
                let columns = (0..n).map(|_| r.net()).collect::<Result<Vec<_>>>()?;
                if columns.is_empty() {
                    return Err(Error::Shape("cPNN checkpoint without columns".into()));
                }
                for pair in columns.windows(2) {
                    if pair[1].input_dim() != columns[0].input_dim() + pair[0].hidden_dim() {
                        return Err(Error::Shape("cPNN lateral input width".into()));
                    }
                }
                ModelSnapshot::Cpnn { columns }
            }
            LearnerKind::Magic => {
                let n = r.count("records", MIN_NET_BYTES)?;
                let records = (0..n).map(|_| r.record()).collect::<Result<Vec<_>>>()?;
                if records.is_empty() {
                    return Err(Error::Shape("MAGIC checkpoint without records".into()));
                }
                ModelSnapshot::Magic { records }
            }
        };
        r.finish()?;
        Ok(ModelCheckpoint {
            meta: CheckpointMeta {
                concept_index,
                kind,
                seed,
                window,
            },
            model,
        })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &ModelCheckpoint) -> Result<()> {
    fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelCheckpoint::from_bytes(&bytes)
}

/// Mask store as its own versioned record file.
pub fn mask_store_to_bytes(store: &MaskStore) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&MASK_STORE_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.usize(store.len());
    store.records().iter().for_each(|r| w.record(r));
    w.0
}

pub fn mask_store_from_bytes(buf: &[u8]) -> Result<MaskStore> {
    let mut r = Reader { buf, pos: 0 };
    r.header(&MASK_STORE_MAGIC)?;
    let n = r.count("records", MIN_NET_BYTES)?;
    let mut store = MaskStore::new();
    for _ in 0..n {
        store.push(r.record()?);
    }
    r.finish()?;
    Ok(store)
}

pub fn save_mask_store(path: &Path, store: &MaskStore) -> Result<()> {
    fs::write(path, mask_store_to_bytes(store)).map_err(|e| Error::io(path, e))
}

pub fn load_mask_store(path: &Path) -> Result<MaskStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    mask_store_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cgru_ckpt() -> ModelCheckpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ModelCheckpoint {
            meta: CheckpointMeta {
                concept_index: 2,
                kind: LearnerKind::CGru,
                seed: 77,
                window: 10,
            },
            model: ModelSnapshot::CGru {
                net: NetParams::glorot(3, 4, &mut rng),
            },
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = cgru_ckpt();
        let back = ModelCheckpoint::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        let ModelSnapshot::CGru { net: a } = &c.model else { panic!() };
        let ModelSnapshot::CGru { net: b } = &back.model else { panic!() };
        for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn distinct_error_kinds() {
        let bytes = cgru_ckpt().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelCheckpoint::from_bytes(&bad), Err(Error::BadMagic)));

        let mut ver = bytes.clone();
        ver[8] = 9;
        assert!(matches!(
            ModelCheckpoint::from_bytes(&ver),
            Err(Error::VersionMismatch { found: 9, .. })
        ));

        assert!(matches!(
            ModelCheckpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated(_))
        ));

        // hidden_dim field right after the header says 5 instead of 4
        let mut shape = bytes.clone();
        let hidden_at = 8 + 4 + 1 + 8 + 8 + 8 + 8;
        shape[hidden_at] = 5;
        assert!(matches!(
            ModelCheckpoint::from_bytes(&shape),
            Err(Error::Shape(_)) | Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn corrupted_length_is_truncation_not_crash() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = ModelCheckpoint {
            meta: CheckpointMeta {
                concept_index: 0,
                kind: LearnerKind::Cpnn,
                seed: 1,
                window: 3,
            },
            model: ModelSnapshot::Cpnn {
                columns: vec![NetParams::glorot(2, 3, &mut rng)],
            },
        };
        let mut bytes = c.to_bytes();
        let count_at = 8 + 4 + 1 + 8 + 8 + 8;
        bytes[count_at..count_at + 8].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(
            ModelCheckpoint::from_bytes(&bytes),
            Err(Error::Truncated(_))
        ));
    }
}
