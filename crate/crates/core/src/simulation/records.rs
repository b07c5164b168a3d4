//! Per-replication records: the raw material every report aggregate is
//! reconstructible from.

use serde::{Deserialize, Serialize};

/// One strategy round inside one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Estimate per positive class. Design-based for NSRS/SRS; the running
    /// label mean (biased baseline) for UES.
    pub estimate: Vec<f64>,
    /// Estimated sampling variance per positive class; absent for UES.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_est: Option<Vec<f64>>,
    /// Fresh annotations paid for this round.
    pub fresh_cost: usize,
    /// Distinct labeled units after this round (including the initial set).
    pub cumulative_cost: usize,
    /// Selection histogram over collapsed-score bins.
    pub histogram: Vec<u64>,
    /// A stratum was sampled with n_h = 1 (variance recorded 0).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub singleton_strata: bool,
}

/// One strategy's full trajectory inside one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub strategy: String,
    pub supports_unbiased_estimation: bool,
    pub rounds: Vec<RoundRecord>,
    /// Cross-round combination (mean of rounds) for design strategies; the
    /// last running mean for UES.
    pub final_estimate: Vec<f64>,
    /// Combined variance (independence approximation); absent for UES.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_variance_est: Option<Vec<f64>>,
    /// Total annotation cost: n_init plus all fresh labels.
    pub total_cost: usize,
    /// False when the unlabeled pool ran out before the budget did.
    pub complete: bool,
}

/// Everything one replication produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub strategies: Vec<StrategyRecord>,
}
