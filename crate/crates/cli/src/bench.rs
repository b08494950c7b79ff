//! Timing sweeps over packet size, batch size, cluster size and
//! transaction count.
//!
//! Absolute numbers depend on the machine. Only trends and ratios between
//! rows of one run are meaningful.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use pqmiss_chain::block::BLOCK_VERSION;
use pqmiss_chain::{
    build_partial_block, complete_block, encrypt_tx, genesis_block, Cluster, FaultConfig, FaultScript,
    IbsBlockSigner, IbsBlockVerifier, PartialBlock, SealKey, Transaction,
};
use pqmiss_core::aggsig::{la_sign, la_ver, ls_sign, ls_ver, SignedMessage};
use pqmiss_core::ibs::{extract, setup};
use pqmiss_core::{Gf31, MasterPublicKey31, MasterSecretKey31, ParamSet};
use pqmiss_sim::metrics::percentile;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const BENCH_HEADER: &str = "sweep,value,stage,mean_ms,p50_ms,p95_ms,reps,profile,seed";

pub const MIN_REPS: usize = 5;
pub const DEFAULT_WARMUP: usize = 2;

/// Each measured repetition loops the operation until at least this much
/// time has passed, so sub-millisecond stages are not lost in timer noise.
const MIN_REP_MS: f64 = 2.0;
const MAX_INNER_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sweep {
    Packet,
    Batch,
    Nodes,
    Tx,
}

impl Sweep {
    pub const ALL: [Sweep; 4] = [Sweep::Packet, Sweep::Batch, Sweep::Nodes, Sweep::Tx];

    pub fn name(self) -> &'static str {
        match self {
            Sweep::Packet => "packet",
            Sweep::Batch => "batch",
            Sweep::Nodes => "nodes",
            Sweep::Tx => "tx",
        }
    }

    /// Reference grid for each axis.
    pub fn preset(self) -> Vec<usize> {
        match self {
            Sweep::Packet => vec![100, 500, 1000, 2000, 5000, 10_000],
            Sweep::Batch => vec![1, 2, 5, 10, 20, 50, 100],
            Sweep::Nodes => vec![5, 10, 15, 20, 25],
            Sweep::Tx => vec![30, 40, 50, 60, 70, 80],
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sweep {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Sweep::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .with_context(|| format!("unknown sweep `{s}` (expected packet, batch, nodes or tx)"))
    }
}

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub sweep: Sweep,
    pub values: Vec<usize>,
    pub reps: usize,
    pub warmup: usize,
    pub profile: ParamSet,
    pub seed: u64,
    /// Run sweep points on separate threads. Repetitions within a point
    /// always run sequentially.
    pub parallel: bool,
}

impl BenchPlan {
    pub fn preset(sweep: Sweep, profile: ParamSet, seed: u64) -> Self {
        Self {
            sweep,
            values: sweep.preset(),
            reps: MIN_REPS,
            warmup: DEFAULT_WARMUP,
            profile,
            seed,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.reps >= MIN_REPS, "reps must be at least {MIN_REPS}");
        ensure!(!self.values.is_empty(), "no sweep values");
        ensure!(self.values.iter().all(|&v| v > 0), "sweep values must be positive");
        if self.sweep == Sweep::Nodes {
            ensure!(self.values.iter().all(|&v| v >= 2), "node counts must be at least 2");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub sweep: String,
    pub value: usize,
    pub stage: String,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub reps: usize,
    pub profile: String,
    pub seed: u64,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
            self.sweep, self.value, self.stage, self.mean_ms, self.p50_ms, self.p95_ms, self.reps, self.profile, self.seed
        )
    }

    pub fn parse_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        ensure!(f.len() == 9, "expected 9 columns, found {}", f.len());
        let num = |i: usize| -> Result<f64> {
            f[i].parse().with_context(|| format!("column {} is not a number: `{}`", i + 1, f[i]))
        };
        Ok(Self {
            sweep: f[0].to_string(),
            value: f[1].parse().with_context(|| format!("bad value `{}`", f[1]))?,
            stage: f[2].to_string(),
            mean_ms: num(3)?,
            p50_ms: num(4)?,
            p95_ms: num(5)?,
            reps: f[6].parse().with_context(|| format!("bad reps `{}`", f[6]))?,
            profile: f[7].to_string(),
            seed: f[8].parse().with_context(|| format!("bad seed `{}`", f[8]))?,
        })
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Parses a bench CSV; the header must match exactly.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == BENCH_HEADER => {}
        Some(h) => bail!("schema mismatch: header `{h}`"),
        None => bail!("schema mismatch: empty file"),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| BenchRecord::parse_row(l).with_context(|| format!("line {}", i + 2)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub reps: usize,
}

pub fn stats(samples: &[f64]) -> Stats {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Stats {
        mean_ms: s.iter().sum::<f64>() / s.len().max(1) as f64,
        p50_ms: percentile(&s, 50.0),
        p95_ms: percentile(&s, 95.0),
        reps: s.len(),
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// One measured repetition of a stage; returns milliseconds per call.
pub type Sampler = Box<dyn FnMut() -> f64 + Send>;

/// Wraps `op` so each repetition loops it enough times to span at least
/// `MIN_REP_MS`, calibrated on the first call.
pub fn looped<F: FnMut() + Send + 'static>(mut op: F) -> Sampler {
    let mut iters = 0usize;
    Box::new(move || {
        if iters == 0 {
            let start = Instant::now();
            op();
            let once = elapsed_ms(start).max(1e-6);
            iters = ((MIN_REP_MS / once).ceil() as usize).clamp(1, MAX_INNER_ITERS);
        }
        let start = Instant::now();
        for _ in 0..iters {
            op();
        }
        elapsed_ms(start) / iters as f64
    })
}

/// `warmup` discarded repetitions of every sampler, then `reps` rounds
/// that visit every sampler once each. Interleaving spreads clock drift
/// evenly over all stages instead of biasing whichever ran last.
pub fn sample_interleaved(samplers: &mut [Sampler], warmup: usize, reps: usize) -> Vec<Vec<f64>> {
    for s in samplers.iter_mut() {
        for _ in 0..warmup {
            s();
        }
    }
    let mut out = vec![Vec::with_capacity(reps); samplers.len()];
    for _ in 0..reps {
        for (i, s) in samplers.iter_mut().enumerate() {
            out[i].push(s());
        }
    }
    out
}

/// Shared key material for one bench run.
struct Fixture {
    mpk: Arc<MasterPublicKey31>,
    msk: MasterSecretKey31,
}

impl Fixture {
    fn new(profile: &ParamSet, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mpk, msk) = setup::<Gf31, _>(profile, &mut rng)?;
        Ok(Self { mpk: Arc::new(mpk), msk })
    }

    fn signed_batch(&self, n: usize, msg_len: usize, rng: &mut ChaCha20Rng) -> Result<Vec<SignedMessage<Gf31>>> {
        (0..n)
            .map(|i| {
                let id = format!("uav-{i}").into_bytes();
                let usk = extract(&self.msk, &id)?;
                let mut msg = vec![0u8; msg_len];
                rng.fill_bytes(&mut msg);
                let sig = ls_sign(&self.mpk, &usk, &msg, rng)?;
                Ok(SignedMessage { signer_id: id, msg, sig })
            })
            .collect()
    }
}

const BATCH_MSG_LEN: usize = 256;
const TX_PAYLOAD: usize = 1000;
const BLOCK_CAPACITY: usize = 30;

type Stages = Vec<(&'static str, Sampler)>;

fn point_rng(seed: u64, value: usize, salt: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ (value as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Prepares the samplers of one sweep point. Setup work happens here and is
/// never timed.
fn prepare_point(plan: &BenchPlan, fx: &Fixture, value: usize) -> Result<Stages> {
    let mut rng = point_rng(plan.seed, value, 0);
    let mpk = fx.mpk.clone();
    Ok(match plan.sweep {
        Sweep::Packet => {
            let usk = extract(&fx.msk, b"uav-0")?;
            let mut msg = vec![0u8; value];
            rng.fill_bytes(&mut msg);
            let sig = ls_sign(&mpk, &usk, &msg, &mut rng)?;
            let (m1, u1, msg1) = (mpk.clone(), usk.clone(), msg.clone());
            let mut r1 = point_rng(plan.seed, value, 1);
            vec![
                ("ls_sign", looped(move || {
                    ls_sign(&m1, &u1, &msg1, &mut r1).expect("sign");
                })),
                ("ls_ver", looped(move || assert!(ls_ver(&mpk, &usk.id, &msg, &sig).is_accept()))),
            ]
        }
        Sweep::Batch => {
            let batch = fx.signed_batch(value, BATCH_MSG_LEN, &mut rng)?;
            let agg_usk = extract(&fx.msk, b"fog-0")?;
            let agg = Arc::new(la_sign(&mpk, &agg_usk, batch.clone(), &mut rng)?);
            let batch = Arc::new(batch);
            let (m1, b1) = (mpk.clone(), batch.clone());
            let mut r1 = point_rng(plan.seed, value, 1);
            let (m2, a2) = (mpk.clone(), agg.clone());
            let (m3, a3) = (mpk.clone(), agg);
            vec![
                ("la_sign", looped(move || {
                    la_sign(&m1, &agg_usk, b1.to_vec(), &mut r1).expect("complete batch");
                })),
                ("la_ver", looped(move || assert!(la_ver(&m2, &a2, false).is_accept()))),
                ("la_ver_deep", looped(move || assert!(la_ver(&m3, &a3, true).is_accept()))),
                ("ls_ver_x_n", looped(move || {
                    for m in batch.iter() {
                        assert!(ls_ver(&mpk, &m.signer_id, &m.msg, &m.sig).is_accept());
                    }
                })),
            ]
        }
        Sweep::Nodes => {
            let (mut cluster, partial, _) = consensus_fixture(fx, value, BLOCK_CAPACITY, &mut rng)?;
            let script = FaultScript::new();
            vec![(
                "consensus_round",
                Box::new(move || {
                    let blk = complete_block(partial.clone(), cluster.tip_hash(), BLOCK_VERSION, cluster.verifier())
                        .expect("fixture block verifies");
                    let start = Instant::now();
                    let out = cluster.run_round(blk, 10, &script);
                    let ms = elapsed_ms(start);
                    assert!(out.committed);
                    ms
                }) as Sampler,
            )]
        }
        Sweep::Tx => {
            let (mut cluster, _, owner) = consensus_fixture(fx, 5, 1, &mut rng)?;
            let agg_usk = extract(&fx.msk, b"fog-0")?;
            let signer = Arc::new(IbsBlockSigner::new(fx.mpk.clone(), agg_usk.clone()));
            let keys: Vec<_> = (0..value)
                .map(|i| extract(&fx.msk, format!("uav-{i}").as_bytes()))
                .collect::<pqmiss_core::Result<_>>()?;
            let txs: Vec<Transaction> = (0..value)
                .map(|i| {
                    let mut data = vec![0u8; TX_PAYLOAD];
                    rng.fill_bytes(&mut data);
                    Transaction::new(data, format!("uav-{i}").into_bytes(), 1 + i as u64)
                })
                .collect::<pqmiss_chain::Result<_>>()?;
            let (s1, o1) = (signer.clone(), owner.clone());
            let mut r1 = point_rng(plan.seed, value, 1);
            let mut r2 = point_rng(plan.seed, value, 2);
            let script = FaultScript::new();
            vec![
                ("block_build", looped(move || {
                    for c in txs.chunks(BLOCK_CAPACITY) {
                        let etx = c.iter().map(|t| encrypt_tx(t, &o1, &mut r1)).collect();
                        build_partial_block(etx, s1.as_ref(), "bench", 10, BLOCK_CAPACITY, &mut r1).expect("block");
                    }
                })),
                ("pipeline_total", Box::new(move || {
                    let start = Instant::now();
                    let mut batch = Vec::with_capacity(value);
                    for usk in &keys {
                        let mut msg = vec![0u8; TX_PAYLOAD];
                        r2.fill_bytes(&mut msg);
                        let sig = ls_sign(&mpk, usk, &msg, &mut r2).expect("sign");
                        assert!(ls_ver(&mpk, &usk.id, &msg, &sig).is_accept());
                        batch.push(SignedMessage {
                            signer_id: usk.id.clone(),
                            msg,
                            sig,
                        });
                    }
                    let txs: Vec<Transaction> = batch
                        .iter()
                        .map(|m| Transaction::new(m.msg.clone(), m.signer_id.clone(), 1).expect("nonzero ts"))
                        .collect();
                    la_sign(&mpk, &agg_usk, batch, &mut r2).expect("complete batch");
                    for c in txs.chunks(BLOCK_CAPACITY) {
                        let etx = c.iter().map(|t| encrypt_tx(t, &owner, &mut r2)).collect();
                        let p = build_partial_block(etx, signer.as_ref(), "bench", 10, BLOCK_CAPACITY, &mut r2)
                            .expect("block");
                        let blk = complete_block(p, cluster.tip_hash(), BLOCK_VERSION, cluster.verifier()).expect("verifies");
                        assert!(cluster.run_round(blk, 10, &script).committed);
                    }
                    elapsed_ms(start)
                }) as Sampler),
            ]
        }
    })
}

/// Cluster of `nodes` servers with the largest tolerable fault bound, plus
/// one signed partial block of `tx` encrypted transactions.
fn consensus_fixture(
    fx: &Fixture,
    nodes: usize,
    tx: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(Cluster, PartialBlock, SealKey)> {
    let verifier = Arc::new(IbsBlockVerifier::new(fx.mpk.clone()));
    let system = IbsBlockSigner::new(fx.mpk.clone(), extract(&fx.msk, b"system")?);
    let genesis = genesis_block(&system, 1, verifier.as_ref(), rng)?;
    let faults = FaultConfig {
        n_f: nodes.saturating_sub(2) / 3,
        delta_t: 2000,
    };
    let cluster = Cluster::new(nodes, faults, genesis, verifier, rng.next_u64())?;
    let owner = SealKey::generate(b"fog-0".to_vec(), rng);
    let signer = IbsBlockSigner::new(fx.mpk.clone(), extract(&fx.msk, b"fog-0")?);
    let etx = (0..tx)
        .map(|i| {
            let mut data = vec![0u8; TX_PAYLOAD];
            rng.fill_bytes(&mut data);
            Ok(encrypt_tx(&Transaction::new(data, format!("uav-{i}").into_bytes(), 1 + i as u64)?, &owner, rng))
        })
        .collect::<Result<Vec<_>>>()?;
    let partial = build_partial_block(etx, &signer, "bench", 10, tx.max(BLOCK_CAPACITY), rng)?;
    Ok((cluster, partial, owner))
}

/// Runs every point of `plan` and returns one record per (point, stage),
/// ordered by point then stage. Sequential plans interleave repetitions
/// across all points; parallel plans give each point its own thread.
pub fn run_plan(plan: &BenchPlan) -> Result<Vec<BenchRecord>> {
    plan.validate()?;
    let fx = Fixture::new(&plan.profile, plan.seed)?;
    let points = plan
        .values
        .iter()
        .map(|&v| prepare_point(plan, &fx, v))
        .collect::<Result<Vec<Stages>>>()?;
    let shape: Vec<(usize, Vec<&'static str>)> = plan
        .values
        .iter()
        .zip(&points)
        .map(|(&v, p)| (v, p.iter().map(|(name, _)| *name).collect()))
        .collect();
    let samples: Vec<Vec<f64>> = if plan.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = points
                .into_iter()
                .map(|p| {
                    s.spawn(move || {
                        let mut samplers: Vec<Sampler> = p.into_iter().map(|(_, f)| f).collect();
                        sample_interleaved(&mut samplers, plan.warmup, plan.reps)
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("bench thread panicked"))
                .collect()
        })
    } else {
        let mut samplers: Vec<Sampler> = points.into_iter().flatten().map(|(_, f)| f).collect();
        sample_interleaved(&mut samplers, plan.warmup, plan.reps)
    };
    let mut samples = samples.into_iter();
    let mut out = Vec::new();
    for (value, stages) in shape {
        for stage in stages {
            let s = stats(&samples.next().expect("one sample set per stage"));
            out.push(BenchRecord {
                sweep: plan.sweep.name().to_string(),
                value,
                stage: stage.to_string(),
                mean_ms: s.mean_ms,
                p50_ms: s.p50_ms,
                p95_ms: s.p95_ms,
                reps: s.reps,
                profile: plan.profile.name().to_string(),
                seed: plan.seed,
            });
        }
    }
    Ok(out)
}
