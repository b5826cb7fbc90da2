//! Twirl plans and deterministic ensemble reduction.
//!
//! Sampled plans draw Pauli indices i.i.d. uniformly with replacement from a
//! ChaCha8 stream. `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(k)`
//! gives independent, platform-stable substreams keyed by `(seed, k)`.
//! Ensemble means are reduced by pairwise summation in index order, so the
//! result does not depend on how work was scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::SuperOp;
use crate::pauli::{all_paulis, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwirlMode {
    /// Every one of the `4ⁿ` Paulis exactly once.
    Full,
    /// `count` uniform draws with replacement.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwirlPlan {
    pub mode: TwirlMode,
    /// Number of draws for sampled plans; ignored by full plans.
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TwirlPlan {
    pub fn full() -> Self {
        Self { mode: TwirlMode::Full, count: 0, seed: 0 }
    }

    pub fn sampled(count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Invalid("sampled twirl plan needs count >= 1".into()));
        }
        Ok(Self { mode: TwirlMode::Sampled, count, seed })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn is_full(&self) -> bool {
        self.mode == TwirlMode::Full
    }

    /// Number of twirl realizations on `n` qubits.
    pub fn len(&self, n: usize) -> usize {
        match self.mode {
            TwirlMode::Full => 1 << (2 * n),
            TwirlMode::Sampled => self.count,
        }
    }

    /// Draws from substream 0.
    pub fn draw(&self, n: usize) -> Vec<PauliString> {
        self.draw_stream(n, 0)
    }

    /// Draws from substream `stream`; full plans ignore the stream.
    pub fn draw_stream(&self, n: usize, stream: u64) -> Vec<PauliString> {
        match self.mode {
            TwirlMode::Full => all_paulis(n),
            TwirlMode::Sampled => {
                let total = 1usize << (2 * n);
                let mut rng = substream(self.seed, stream);
                (0..self.count).map(|_| PauliString::from_index(n, rng.random_range(0..total))).collect()
            }
        }
    }
}

/// Independent RNG substream keyed by `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sum in a fixed pairwise tree over the slice order.
pub fn pairwise_sum(items: &[SuperOp]) -> SuperOp {
    match items.len() {
        0 => panic!("pairwise_sum of an empty slice"),
        1 => items[0].clone(),
        len => {
            let (left, right) = items.split_at(len / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

pub fn mean_fixed_order(items: &[SuperOp]) -> SuperOp {
    pairwise_sum(items).scale(1.0 / items.len() as f64)
}

/// Evaluate `f` on every twirl in parallel and return the deterministic mean.
pub fn parallel_mean<F>(twirls: &[PauliString], f: F) -> Result<SuperOp>
where
    F: Fn(&PauliString) -> Result<SuperOp> + Sync,
{
    if twirls.is_empty() {
        return Err(Error::Invalid("empty twirl ensemble".into()));
    }
    let terms = twirls.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    Ok(mean_fixed_order(&terms))
}
