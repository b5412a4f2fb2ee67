use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Sca,
    Manifold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Outer alternating-optimization iteration (0 for the starting point).
    pub outer: usize,
    pub phase: Phase,
    /// Iteration index inside the phase.
    pub iteration: usize,
    pub f: f64,
    pub sum_secrecy: f64,
    pub power_used: f64,
    /// Largest `lambda_2 / lambda_1` over the beamforming matrices, when computed.
    pub max_rank_residual: Option<f64>,
    pub elapsed_ms: f64,
}

/// Ordered objective trace of one optimizer run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<HistoryRecord>,
}

impl RunHistory {
    pub fn push(&mut self, record: HistoryRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: RunHistory) {
        self.records.extend(other.records);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_f(&self) -> Option<f64> {
        self.records.last().map(|r| r.f)
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.records.iter().filter(|r| r.phase == phase).count()
    }

    /// Largest increase `f[i+1] - f[i]` across consecutive records (<= 0 for a
    /// monotone trace).
    pub fn max_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].f - w[0].f)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records.len() < 2 || self.max_increase() <= slack
    }
}
