//! Seeded, order-independent Monte Carlo aggregation.

use rayon::prelude::*;
use serde::Serialize;

use crate::protocol::Transcript;
use crate::Result;

/// Acceptance counts, split by the announced bit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Tally {
    pub trials: u64,
    pub accepted: [u64; 2],
}

impl Tally {
    fn record(mut self, t: &Transcript) -> Self {
        self.trials += 1;
        if t.accepted {
            self.accepted[t.bit_announced.index()] += 1;
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        Self {
            trials: self.trials + other.trials,
            accepted: [self.accepted[0] + other.accepted[0], self.accepted[1] + other.accepted[1]],
        }
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted[0] + self.accepted[1]
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.total_accepted() as f64 / self.trials as f64
        }
    }

    /// Binomial standard error of [`Tally::rate`].
    pub fn std_error(&self) -> f64 {
        binomial_std_error(self.rate(), self.trials)
    }
}

/// `sqrt(p(1 − p)/n)`.
pub fn binomial_std_error(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).max(0.0).sqrt()
    }
}

/// Whether an empirical rate sits within `k` standard errors of `expected`.
/// The standard error is taken at `expected`, so a degenerate expectation
/// (0 or 1) demands an exact match.
pub fn within_std_errors(rate: f64, expected: f64, trials: u64, k: f64) -> bool {
    let se = binomial_std_error(expected, trials);
    (rate - expected).abs() <= k * se + 1e-12
}

/// Runs `session(trial)` for every trial index in parallel and sums the
/// outcomes. Results do not depend on thread count or scheduling.
pub fn tally<F>(trials: u64, session: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<Transcript> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|trial| session(trial).map(|t| Tally::default().record(&t)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}
