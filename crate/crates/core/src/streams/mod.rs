//! Stream sources: SineRW, labelled real series, configuration assembly,
//! temporal augmentation and the stream dump format.

mod dump;
mod real;
mod srw;

use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::{read_dump, sidecar_path, write_dump, DUMP_VERSION};
pub use real::{
    ingest_csv, interpolate, label_real, tumbling_mean, CsvSchema, LabelFunction, LabelKind,
    OnlineStandardizer, Series, STD_EPSILON,
};
pub use srw::{
    mode_labels, sample_boundary_pool, sine_rw_generate, BoundaryFunction, Family, Polarity,
    RandomWalk, MODE_WINDOW, WALK_STEP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Labeler {
    Boundary(BoundaryFunction),
    Real(LabelFunction),
}

impl fmt::Display for Labeler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeler::Boundary(b) => b.fmt(f),
            Labeler::Real(r) => r.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub start: usize,
    pub length: usize,
    pub labeler: Labeler,
    /// Where a real-data concept came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<String>,
}

impl ConceptSpec {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// Everything needed to describe, and with the points to replay, a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub format_version: u32,
    pub seed: u64,
    pub source: String,
    pub input_dim: usize,
    #[serde(default)]
    pub augment_order: usize,
    pub concepts: Vec<ConceptSpec>,
    pub true_drifts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub meta: StreamMeta,
    pub points: Vec<LabeledPoint>,
}

impl Stream {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.meta.input_dim
    }

    pub fn concepts(&self) -> &[ConceptSpec] {
        &self.meta.concepts
    }

    /// Appends the previous `order` labels to every feature vector.
    pub fn augmented(&self, order: usize) -> Stream {
        if order == 0 {
            return self.clone();
        }
        let mut meta = self.meta.clone();
        meta.input_dim += order;
        meta.augment_order += order;
        Stream {
            meta,
            points: temporal_augment(&self.points, order),
        }
    }
}

/// `X_t` extended with `y_{t-1}, ..., y_{t-o}`; labels before the stream head are 0.
pub fn temporal_augment(points: &[LabeledPoint], order: usize) -> Vec<LabeledPoint> {
    points
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let mut x = p.x.clone();
            x.extend((1..=order).map(|lag| {
                t.checked_sub(lag)
                    .map_or(0.0, |i| f64::from(points[i].y))
            }));
            LabeledPoint { t: p.t, x, y: p.y }
        })
        .collect()
}

/// Independent sub-seed for one purpose (splitmix64 of the pair).
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed
        .wrapping_add(purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const POOL_SEED: u64 = 1;
const WALK_SEED: u64 = 2;
const PICK_SEED: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    /// One concept per input file.
    PerFile,
    /// All files concatenated and cut into equal consecutive segments.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSource {
    pub paths: Vec<PathBuf>,
    #[serde(flatten)]
    pub schema: CsvSchema,
    pub segmentation: Segmentation,
    /// Lookback of the labelling functions.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Srw {
        /// Let one later concept reuse an earlier labeller.
        #[serde(default)]
        recurrence: bool,
    },
    Csv(RealSource),
}

/// Picks `n` labellers, distinct unless `recurrence` lets one later concept
/// reuse an earlier one (never its direct predecessor).
fn pick_labelers<T: Copy>(pool: &[T], n: usize, recurrence: bool, seed: u64) -> Result<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, PICK_SEED));
    let distinct = if recurrence && n >= 3 { n - 1 } else { n };
    if distinct > pool.len() {
        return Err(Error::Config(format!(
            "n_concepts: {n} concepts need {distinct} distinct labelling functions, only {} exist",
            pool.len()
        )));
    }
    let mut picked: Vec<T> = pool.choose_multiple(&mut rng, distinct).copied().collect();
    if distinct < n {
        let at = rng.gen_range(2..n);
        let from = rng.gen_range(0..at - 1);
        picked.insert(at, picked[from]);
    }
    Ok(picked)
}

/// Builds a stream of `n_concepts` abrupt concepts.
///
/// For SineRW every concept has `concept_length` points. For real sources each
/// concept drops its first `k + 1` points (labelling lookback);
/// `concept_length = 0` uses the whole segment.
pub fn build_configuration(
    source: &SourceSpec,
    n_concepts: usize,
    concept_length: usize,
    seed: u64,
) -> Result<Stream> {
    if n_concepts == 0 {
        return Err(Error::Config("n_concepts: must be at least 1".into()));
    }
    match source {
        SourceSpec::Srw { recurrence } => {
            if concept_length == 0 {
                return Err(Error::Config("concept_length: must be at least 1".into()));
            }
            let pool = sample_boundary_pool(derive_seed(seed, POOL_SEED));
            let labelers = pick_labelers(&pool, n_concepts, *recurrence, seed)?;
            let (xs, ys) =
                sine_rw_generate(&labelers, concept_length, derive_seed(seed, WALK_SEED));
            let points = xs
                .into_iter()
                .zip(ys)
                .enumerate()
                .map(|(t, (x, y))| LabeledPoint { t, x: x.to_vec(), y })
                .collect();
            let concepts = labelers
                .iter()
                .enumerate()
                .map(|(i, f)| ConceptSpec {
                    start: i * concept_length,
                    length: concept_length,
                    labeler: Labeler::Boundary(*f),
                    segment: None,
                })
                .collect();
            Ok(assemble("srw", seed, 2, concepts, points))
        }
        SourceSpec::Csv(real) => build_real(real, n_concepts, concept_length, seed),
    }
}

fn assemble(
    source: &str,
    seed: u64,
    input_dim: usize,
    concepts: Vec<ConceptSpec>,
    points: Vec<LabeledPoint>,
) -> Stream {
    let true_drifts = concepts.iter().skip(1).map(|c| c.start).collect();
    Stream {
        meta: StreamMeta {
            format_version: DUMP_VERSION,
            seed,
            source: source.to_string(),
            input_dim,
            augment_order: 0,
            concepts,
            true_drifts,
        },
        points,
    }
}

fn build_real(real: &RealSource, n: usize, concept_length: usize, seed: u64) -> Result<Stream> {
    let files = real
        .paths
        .iter()
        .map(|p| ingest_csv(p, &real.schema).map(|s| (p.display().to_string(), s)))
        .collect::<Result<Vec<_>>>()?;
    let skip = real.k + 1;
    let segments: Vec<(String, Series)> = match real.segmentation {
        Segmentation::PerFile => {
            if files.len() < n {
                return Err(Error::Config(format!(
                    "paths: per_file segmentation needs {n} files, got {}",
                    files.len()
                )));
            }
            files
                .into_iter()
                .take(n)
                .map(|(name, s)| {
                    let len = if concept_length == 0 { s.len() } else { concept_length + skip };
                    if s.len() < len || len <= skip {
                        return Err(Error::InsufficientData {
                            required: len.max(skip + 1),
                            available: s.len(),
                        });
                    }
                    Ok((name, s.slice(0, len)))
                })
                .collect::<Result<_>>()?
        }
        Segmentation::Equal => {
            let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
            let all = Series::concat(&files.into_iter().map(|(_, s)| s).collect::<Vec<_>>());
            let len = if concept_length == 0 { all.len() / n } else { concept_length + skip };
            if all.len() < n * len || len <= skip {
                return Err(Error::InsufficientData {
                    required: n * len.max(skip + 1),
                    available: all.len(),
                });
            }
            (0..n)
                .map(|i| {
                    let tag = format!("{}[{}..{}]", names.join("+"), i * len, (i + 1) * len);
                    (tag, all.slice(i * len, (i + 1) * len))
                })
                .collect()
        }
    };

    let labelers = pick_labelers(&LabelFunction::all(real.k), n, false, seed)?;
    let dim = real.schema.features.len();
    let mut scaler = OnlineStandardizer::new(dim);
    let mut points = Vec::new();
    let mut concepts = Vec::new();
    for ((name, seg), lf) in segments.into_iter().zip(labelers) {
        let labels = label_real(&seg.target, lf);
        let start = points.len();
        for (x, y) in seg.features.iter().zip(labels).skip(skip) {
            let y = y.expect("lookback within the skipped head");
            points.push(LabeledPoint {
                t: points.len(),
                x: scaler.transform(x),
                y,
            });
        }
        concepts.push(ConceptSpec {
            start,
            length: points.len() - start,
            labeler: Labeler::Real(lf),
            segment: Some(name),
        });
    }
    Ok(assemble("csv", seed, dim, concepts, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srw_configuration_layout() {
        let s = build_configuration(&SourceSpec::Srw { recurrence: false }, 3, 500, 9).unwrap();
        assert_eq!(s.len(), 1500);
        assert_eq!(s.meta.true_drifts, vec![500, 1000]);
        assert_eq!(s.input_dim(), 2);
        let labelers: Vec<_> = s.concepts().iter().map(|c| c.labeler).collect();
        assert!(labelers[0] != labelers[1] && labelers[1] != labelers[2] && labelers[0] != labelers[2]);
        assert_eq!(s, build_configuration(&SourceSpec::Srw { recurrence: false }, 3, 500, 9).unwrap());
        assert_ne!(s.points, build_configuration(&SourceSpec::Srw { recurrence: false }, 3, 500, 10).unwrap().points);
    }

    #[test]
    fn recurrence_reuses_exactly_one_labeler() {
        for seed in 0..20 {
            let s = build_configuration(&SourceSpec::Srw { recurrence: true }, 5, 50, seed).unwrap();
            let l: Vec<_> = s.concepts().iter().map(|c| c.labeler).collect();
            let repeats = (1..5).filter(|&i| l[..i].contains(&l[i])).count();
            assert_eq!(repeats, 1);
            assert!(l.windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn augmentation_bookkeeping() {
        let pts: Vec<LabeledPoint> = [1u8, 0, 1, 1]
            .iter()
            .enumerate()
            .map(|(t, &y)| LabeledPoint { t, x: vec![t as f64], y })
            .collect();
        let aug = temporal_augment(&pts, 2);
        assert_eq!(aug[0].x, [0.0, 0.0, 0.0]);
        assert_eq!(aug[2].x, [2.0, 0.0, 1.0]);
        assert!(aug.iter().zip(&pts).all(|(a, p)| a.y == p.y));
        assert_eq!(temporal_augment(&pts, 1)[0].x, [0.0, 0.0]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
    }
}
