//! Per-stage timing aggregates and the analytic cost model.

use std::collections::BTreeMap;
use std::fmt::Write;

use pqmiss_core::mqmap::quad_terms;
use pqmiss_core::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    LsSign,
    LsVer,
    LaSign,
    LaVer,
    BlockBuild,
    ConsensusRound,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::LsSign,
        Stage::LsVer,
        Stage::LaSign,
        Stage::LaVer,
        Stage::BlockBuild,
        Stage::ConsensusRound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::LsSign => "ls_sign",
            Stage::LsVer => "ls_ver",
            Stage::LaSign => "la_sign",
            Stage::LaVer => "la_ver",
            Stage::BlockBuild => "block_build",
            Stage::ConsensusRound => "consensus_round",
        }
    }
}

pub const METRICS_HEADER: &str = "stage,count,total_ms,mean_ms,p50_ms,p95_ms";

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    samples: BTreeMap<Stage, Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSummary {
    pub count: usize,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl Metrics {
    pub fn record(&mut self, stage: Stage, ms: f64) {
        self.samples.entry(stage).or_default().push(ms);
    }

    pub fn summary(&self, stage: Stage) -> StageSummary {
        let mut s = self.samples.get(&stage).cloned().unwrap_or_default();
        s.sort_by(f64::total_cmp);
        let total: f64 = s.iter().sum();
        StageSummary {
            count: s.len(),
            total_ms: total,
            mean_ms: if s.is_empty() { 0.0 } else { total / s.len() as f64 },
            p50_ms: percentile(&s, 50.0),
            p95_ms: percentile(&s, 95.0),
        }
    }

    /// One row per stage, always in the same order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for stage in Stage::ALL {
            let s = self.summary(stage);
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                stage.name(),
                s.count,
                s.total_ms,
                s.mean_ms,
                s.p50_ms,
                s.p95_ms
            )
            .unwrap();
        }
        out
    }
}

/// Nominal throughput figures of the reference machine assumed by the model.
const MULTS_PER_MS: f64 = 100_000.0;
const HASH_BYTES_PER_MS: f64 = 500_000.0;
const AEAD_BYTES_PER_MS: f64 = 1_000_000.0;

/// Operation-count cost model. Costs scale with the number of quadratic-map
/// evaluations and the bytes hashed or encrypted.
#[derive(Clone, Debug)]
pub struct CostModel {
    eval_ms: f64,
    psi: f64,
    transcript_bytes: f64,
    pk_bytes: f64,
}

impl CostModel {
    pub fn new(params: &ParamSet) -> Self {
        let (n, m) = (params.n(), params.m());
        let eval_mults = (m * (quad_terms(n) + n)) as f64;
        Self {
            eval_ms: eval_mults / MULTS_PER_MS,
            psi: params.psi as f64,
            transcript_bytes: (params.psi * (3 * n + 2 * m + 64)) as f64,
            pk_bytes: params.public_key_elements() as f64,
        }
    }

    fn hash_ms(&self, bytes: f64) -> f64 {
        bytes / HASH_BYTES_PER_MS
    }

    /// Four evaluations for the polar form plus `P(f₀)` per round.
    pub fn sign_ms(&self, msg_len: usize) -> f64 {
        5.0 * self.psi * self.eval_ms + self.hash_ms(self.pk_bytes + msg_len as f64 + self.transcript_bytes)
    }

    /// `P(0)` once, then on average half the rounds open `f₁` (five evaluations)
    /// and half open `f₀` (one).
    pub fn verify_ms(&self, msg_len: usize) -> f64 {
        (3.0 * self.psi + 1.0) * self.eval_ms + self.hash_ms(self.pk_bytes + msg_len as f64 + self.transcript_bytes)
    }

    pub fn la_sign_ms(&self, batch_bytes: usize) -> f64 {
        self.hash_ms(batch_bytes as f64) + self.sign_ms(32)
    }

    pub fn la_ver_ms(&self, batch_bytes: usize) -> f64 {
        self.hash_ms(batch_bytes as f64) + self.verify_ms(32)
    }

    pub fn block_build_ms(&self, etx_bytes: usize) -> f64 {
        etx_bytes as f64 / AEAD_BYTES_PER_MS + self.hash_ms(2.0 * etx_bytes as f64) + self.sign_ms(32)
    }

    /// Every server verifies the block and handles two sealed envelopes.
    pub fn consensus_round_ms(&self, nodes: usize, block_bytes: usize) -> f64 {
        nodes as f64 * (self.verify_ms(32) + self.hash_ms(3.0 * block_bytes as f64) + 2.0 * 64.0 / AEAD_BYTES_PER_MS)
    }
}
