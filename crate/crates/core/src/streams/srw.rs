//! SineRW: two-dimensional reflected random walks labelled by sine boundaries.

use std::f64::consts::PI;
use std::fmt;

use rand::distributions::{Distribution, Open01, Uniform};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-coordinate step half-width of the walk.
pub const WALK_STEP: f64 = 0.65;

/// Length of the label majority window.
pub const MODE_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    S1,
    S2,
}

/// Which side of the boundary is labelled 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    GeqIsOne,
    LtIsOne,
}

/// `S1: x1 - a - b sin(g x2)`, `S2: x1 - a - b sin(g pi x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub polarity: Polarity,
}

impl BoundaryFunction {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let arg = match self.family {
            Family::S1 => self.gamma * x2,
            Family::S2 => self.gamma * PI * x2,
        };
        x1 - self.alpha - self.beta * arg.sin()
    }

    pub fn raw_label(&self, x1: f64, x2: f64) -> u8 {
        let above = self.eval(x1, x2) >= 0.0;
        match self.polarity {
            Polarity::GeqIsOne => u8::from(above),
            Polarity::LtIsOne => u8::from(!above),
        }
    }
}

impl fmt::Display for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pol = match self.polarity {
            Polarity::GeqIsOne => ">=0",
            Polarity::LtIsOne => "<0",
        };
        write!(
            f,
            "{:?}(alpha={}, beta={}, gamma={}) {pol}",
            self.family, self.alpha, self.beta, self.gamma
        )
    }
}

/// 16 S1 and 16 S2 functions: 8 parameter draws per family, each used with
/// both polarities. S1 pairs `alpha = 0` with `beta = 1` and `alpha = 1` with
/// `beta = -1`; the other two combinations never cross the unit square.
pub fn sample_boundary_pool(seed: u64) -> Vec<BoundaryFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(32);
    let both = |f: BoundaryFunction, pool: &mut Vec<BoundaryFunction>| {
        for polarity in [Polarity::GeqIsOne, Polarity::LtIsOne] {
            pool.push(BoundaryFunction { polarity, ..f });
        }
    };
    for _ in 0..8 {
        let alpha = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let f = BoundaryFunction {
            family: Family::S1,
            alpha,
            beta: 1.0 - 2.0 * alpha,
            gamma: rng.gen_range(0.8..=1.2),
            polarity: Polarity::GeqIsOne,
        };
        both(f, &mut pool);
    }
    for _ in 0..8 {
        let f = BoundaryFunction {
            family: Family::S2,
            alpha: 0.5,
            beta: rng.gen_range(-0.25..=-0.15),
            gamma: rng.gen_range(-2.2..=-1.8),
            polarity: Polarity::GeqIsOne,
        };
        both(f, &mut pool);
    }
    pool
}

/// Independent reflected random walks on both coordinates, strictly inside (0, 1).
#[derive(Debug, Clone)]
pub struct RandomWalk {
    pos: [f64; 2],
    step: Uniform<f64>,
    rng: ChaCha8Rng,
}

impl RandomWalk {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = [Open01.sample(&mut rng), Open01.sample(&mut rng)];
        Self {
            pos,
            step: Uniform::new_inclusive(-WALK_STEP, WALK_STEP),
            rng,
        }
    }

    /// Current position, then advances.
    pub fn next_point(&mut self) -> [f64; 2] {
        let out = self.pos;
        for c in &mut self.pos {
            loop {
                let mut p = *c + self.step.sample(&mut self.rng);
                if p < 0.0 {
                    p = -p;
                } else if p > 1.0 {
                    p = 2.0 - p;
                }
                if p > 0.0 && p < 1.0 {
                    *c = p;
                    break;
                }
            }
        }
        out
    }
}

/// Majority over the current and up to four previous raw labels. While fewer
/// than five labels exist the majority covers those available; an even split
/// keeps the current raw label.
pub fn mode_labels(raw: &[u8]) -> Vec<u8> {
    (0..raw.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(MODE_WINDOW);
            let ones = raw[lo..=t].iter().filter(|&&y| y == 1).count();
            let n = t + 1 - lo;
            match (2 * ones).cmp(&n) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => raw[t],
            }
        })
        .collect()
}

/// Points and MODE labels for consecutive concepts sharing one walk. The
/// majority window restarts at each concept boundary.
pub fn sine_rw_generate(
    concepts: &[BoundaryFunction],
    concept_length: usize,
    seed: u64,
) -> (Vec<[f64; 2]>, Vec<u8>) {
    let mut walk = RandomWalk::new(seed);
    let mut xs = Vec::with_capacity(concepts.len() * concept_length);
    let mut ys = Vec::with_capacity(concepts.len() * concept_length);
    for f in concepts {
        let pts: Vec<[f64; 2]> = (0..concept_length).map(|_| walk.next_point()).collect();
        let raw: Vec<u8> = pts.iter().map(|p| f.raw_label(p[0], p[1])).collect();
        ys.extend(mode_labels(&raw));
        xs.extend(pts);
    }
    (xs, ys)
}
