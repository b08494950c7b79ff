//! The discrete-event loop driving devices, fogs and the cloud cluster.
//!
//! Logical time only advances through the queue. Cryptographic cost is
//! reported as metrics and never feeds back into event times, so the trace
//! depends on nothing but the configuration, the seed and the fault script.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::Arc;
use std::time::Instant;

use pqmiss_chain::{
    decrypt_tx, genesis_block, Cluster, FaultConfig, FaultScript, FullBlock, IbsBlockSigner, IbsBlockVerifier,
    SealKey, Transaction,
};
use pqmiss_core::ibs::{extract, setup};
use pqmiss_core::{Gf31, MasterPublicKey31, MasterSecretKey31};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::cloud::Cloud;
use crate::config::{SimConfig, TimingMode};
use crate::error::Result;
use crate::message::{aggregate_buffer, build_fog_block, collect, fog_ingest, CollectionMessage, DropReason, FogPayload};
use crate::metrics::{CostModel, Metrics, Stage};
use crate::trace::SimTrace;
use crate::world::{add_node_dynamic, register_all, DeviceRecord, FogRecord};

/// Identity that signs the genesis block.
pub const SYSTEM_ID: &[u8] = b"system";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub sent: usize,
    pub accepted: usize,
    pub dropped_stale: usize,
    pub dropped_badsig: usize,
    pub dropped_misroute: usize,
    pub payloads: usize,
    pub quarantined: usize,
    pub blocks_committed: usize,
    pub blocks_failed: usize,
    pub tx_committed: usize,
    pub rounds: usize,
    pub joined: usize,
}

impl Counters {
    pub fn dropped(&self) -> usize {
        self.dropped_stale + self.dropped_badsig + self.dropped_misroute
    }
}

/// A message the fog buffered, with where and when it arrived.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptedTx {
    pub tx: Transaction,
    pub fog: usize,
    pub arrival_ms: u64,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub config: SimConfig,
    pub trace: SimTrace,
    pub metrics: Metrics,
    pub counters: Counters,
    pub accepted: Vec<AcceptedTx>,
    /// Ledger of server 0, genesis first.
    pub blocks: Vec<FullBlock>,
    pub ledgers_agree: bool,
    pub owner_keys: Vec<SealKey>,
    pub joined: Vec<Vec<u8>>,
    /// Largest device-to-fog distance seen at a send event.
    pub max_send_distance: f64,
}

impl SimOutcome {
    /// Decrypts every committed transaction with its owner key. Returns the
    /// transaction and the owning fog index.
    pub fn committed_transactions(&self) -> Result<Vec<(Transaction, usize)>> {
        let mut out = Vec::new();
        for blk in self.blocks.iter().filter(|b| !b.is_genesis()) {
            for etx in &blk.partial.etx {
                let owner = self
                    .owner_keys
                    .iter()
                    .position(|k| k.id() == etx.owner_key_id.as_slice())
                    .ok_or_else(|| {
                        crate::error::Error::UnknownFog(String::from_utf8_lossy(&etx.owner_key_id).into_owned())
                    })?;
                out.push((decrypt_tx(etx, &self.owner_keys[owner])?, owner));
            }
        }
        Ok(out)
    }

    /// Number of (transaction, key) pairs that open under a key other than
    /// the owner's. Zero in a sound run.
    pub fn foreign_decryptions(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| &b.partial.etx)
            .map(|etx| {
                self.owner_keys
                    .iter()
                    .filter(|k| k.id() != etx.owner_key_id.as_slice() && decrypt_tx(etx, k).is_ok())
                    .count()
            })
            .sum()
    }

    pub fn summary(&self) -> String {
        let c = &self.counters;
        format!(
            "blocks_committed={} tx_committed={} sent={} accepted={} dropped={} (stale={} badsig={} misroute={}) quarantined={} joined={} ledgers_agree={}",
            c.blocks_committed,
            c.tx_committed,
            c.sent,
            c.accepted,
            c.dropped(),
            c.dropped_stale,
            c.dropped_badsig,
            c.dropped_misroute,
            c.quarantined,
            c.joined,
            self.ledgers_agree
        )
    }
}

enum Event {
    Send(usize),
    Arrive(Box<CollectionMessage>, usize),
    Flush,
    CloudIngest(Box<FogPayload>),
    Join,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    script: &'a FaultScript,
    rng: ChaCha20Rng,
    mpk: Arc<MasterPublicKey31>,
    msk: MasterSecretKey31,
    devices: Vec<DeviceRecord>,
    fogs: Vec<FogRecord>,
    cloud: Cloud,
    cost: CostModel,
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
    trace: SimTrace,
    metrics: Metrics,
    counters: Counters,
    accepted: Vec<AcceptedTx>,
    joined: Vec<Vec<u8>>,
    max_send_distance: f64,
}

fn actor(id: &[u8]) -> String {
    String::from_utf8_lossy(id).into_owned()
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, time: u64, ev: Event) {
        self.queue.insert((time, self.seq), ev);
        self.seq += 1;
    }

    fn record(&mut self, stage: Stage, started: Instant, model_ms: f64) -> f64 {
        let ms = match self.cfg.timing {
            TimingMode::Model => model_ms,
            TimingMode::Wall => started.elapsed().as_secs_f64() * 1e3,
        };
        self.metrics.record(stage, ms);
        ms
    }

    fn first_send(&mut self, dev: usize, from: u64) {
        let t = from + self.rng.gen_range(1..=self.cfg.send_interval_ms);
        if t < self.cfg.sim_duration_ms {
            self.schedule(t, Event::Send(dev));
        }
    }

    fn on_send(&mut self, now: u64, dev: usize) -> Result<()> {
        let group = self.devices[dev].group;
        self.devices[dev].advance(now, &self.fogs[group], self.cfg, &mut self.rng)?;
        let dist = self.devices[dev].position.dist(&self.fogs[group].position);
        self.max_send_distance = self.max_send_distance.max(dist);

        let size = self.rng.gen_range(self.cfg.packet_min..=self.cfg.packet_max);
        let agg_id = self.fogs[group].agg_id.clone();
        let started = Instant::now();
        let msg = collect(&self.mpk, &mut self.devices[dev], &agg_id, now, size, &mut self.rng)?;
        let body_len = msg.body().len();
        let ms = self.record(Stage::LsSign, started, self.cost.sign_ms(body_len));
        self.counters.sent += 1;

        let delay = self.rng.gen_range(self.cfg.link_delay_min_ms..=self.cfg.link_delay_max_ms);
        self.trace.push(
            now,
            actor(&msg.device_id),
            "send",
            format!("to={} bytes={body_len} dist={dist:.1} sign_ms={ms:.3}", actor(&agg_id)),
        );
        self.schedule(now + delay, Event::Arrive(Box::new(msg), group));

        let next = now + self.cfg.send_interval_ms;
        if next < self.cfg.sim_duration_ms {
            self.schedule(next, Event::Send(dev));
        }
        Ok(())
    }

    fn on_arrive(&mut self, now: u64, msg: CollectionMessage, fog: usize) {
        let body_len = msg.body().len();
        let tx = msg.to_transaction();
        let from = actor(&msg.device_id);
        let started = Instant::now();
        let verdict = fog_ingest(&self.mpk, &mut self.fogs[fog], msg, now, self.cfg.delta_t_ms);
        if verdict != Err(DropReason::Stale) {
            self.record(Stage::LsVer, started, self.cost.verify_ms(body_len));
        }
        let fog_actor = actor(&self.fogs[fog].agg_id);
        match verdict {
            Ok(()) => {
                self.counters.accepted += 1;
                self.trace.push(now, fog_actor, "accept", format!("from={from} cts={}", tx.ts));
                self.accepted.push(AcceptedTx {
                    tx,
                    fog,
                    arrival_ms: now,
                });
            }
            Err(reason) => {
                match reason {
                    DropReason::Stale => self.counters.dropped_stale += 1,
                    DropReason::BadSig => self.counters.dropped_badsig += 1,
                    DropReason::Misroute => self.counters.dropped_misroute += 1,
                }
                self.trace.push(now, fog_actor, "drop", format!("from={from} reason={reason}"));
            }
        }
    }

    fn on_flush(&mut self, now: u64) -> Result<()> {
        for j in 0..self.fogs.len() {
            let fog_actor = actor(&self.fogs[j].agg_id);
            let batch_bytes: usize = self.fogs[j].buffer.iter().map(|m| m.body().len()).sum();
            let started = Instant::now();
            let Some((aggregate, txs)) = aggregate_buffer(&self.mpk, &mut self.fogs[j], &mut self.rng)? else {
                continue;
            };
            let sign_ms = self.record(Stage::LaSign, started, self.cost.la_sign_ms(batch_bytes));
            let mut partials = Vec::new();
            for chunk in txs.chunks(self.cfg.block_capacity) {
                let started = Instant::now();
                let par = build_fog_block(
                    &self.mpk,
                    &self.fogs[j],
                    chunk,
                    &self.cfg.app_type,
                    self.cfg.block_capacity,
                    now,
                    &mut self.rng,
                )?;
                let etx_bytes: usize = par.etx.iter().map(|e| e.encode().len()).sum();
                self.record(Stage::BlockBuild, started, self.cost.block_build_ms(etx_bytes));
                partials.push(par);
            }
            let payload = FogPayload {
                fog_id: self.fogs[j].agg_id.clone(),
                aggregate,
                partials,
            };
            self.counters.payloads += 1;
            self.trace.push(
                now,
                fog_actor,
                "flush",
                format!(
                    "batch={} blocks={} wire_bytes={} la_sign_ms={sign_ms:.3}",
                    txs.len(),
                    payload.partials.len(),
                    payload.wire_len(&self.mpk)
                ),
            );
            self.schedule(now + self.cfg.fog_cloud_delay_ms, Event::CloudIngest(Box::new(payload)));
        }
        Ok(())
    }

    fn on_cloud_ingest(&mut self, now: u64, payload: FogPayload) {
        let from = actor(&payload.fog_id);
        let batch_bytes: usize = payload.aggregate.batch.iter().map(|s| s.msg.len()).sum();
        let started = Instant::now();
        let admitted = self.cloud.admit(&self.mpk, &payload);
        self.record(Stage::LaVer, started, self.cost.la_ver_ms(batch_bytes));
        if let Err(q) = admitted {
            self.counters.quarantined += 1;
            self.trace.push(now, "cloud", "quarantine", format!("from={from} reason={q}"));
            return;
        }
        self.trace.push(
            now,
            "cloud",
            "admit",
            format!("from={from} batch={}", payload.aggregate.batch.len()),
        );
        for par in payload.partials {
            let block_bytes = par.encode().len() + 72;
            let started = Instant::now();
            let commit = self.cloud.commit_partial(par, now, self.script);
            let model = commit.attempts as f64 * self.cost.consensus_round_ms(self.cfg.cs_count, block_bytes);
            let ms = self.record(Stage::ConsensusRound, started, model);
            self.counters.rounds += commit.attempts;
            for r in self.cloud.cluster.take_trace() {
                let who = r.node.map_or_else(|| "cluster".to_string(), |n| format!("cs-{n}"));
                let mut detail = if r.reason.is_empty() { String::new() } else { r.reason.replace(' ', "_") };
                if r.time_ms != now {
                    let _ = write!(detail, "{}offset_ms={}", if detail.is_empty() { "" } else { "," }, r.time_ms - now);
                }
                self.trace.push(now, who, r.event, detail);
            }
            let hash = pqmiss_chain::ledger::hex(&commit.hash);
            if commit.committed {
                self.counters.blocks_committed += 1;
                self.counters.tx_committed += commit.tx_count;
                self.trace.push(
                    now,
                    "cloud",
                    "commit",
                    format!(
                        "block={} tx={} height={} attempts={} round_ms={ms:.3}",
                        &hash[..16],
                        commit.tx_count,
                        self.cloud.cluster.height(),
                        commit.attempts
                    ),
                );
            } else {
                self.counters.blocks_failed += 1;
                self.trace.push(
                    now,
                    "cloud",
                    "commit_failed",
                    format!("block={} tx={} attempts={}", &hash[..16], commit.tx_count, commit.attempts),
                );
            }
        }
    }

    fn on_join(&mut self, now: u64) -> Result<()> {
        for _ in 0..self.cfg.join_count {
            let fog_idx = self.rng.gen_range(0..self.fogs.len());
            let dev = add_node_dynamic(&self.msk, &self.devices, &mut self.fogs, fog_idx, now, self.cfg, &mut self.rng)?;
            self.counters.joined += 1;
            self.trace.push(now, actor(&dev.id), "join", format!("fog={}", actor(&self.fogs[fog_idx].agg_id)));
            self.joined.push(dev.id.clone());
            self.devices.push(dev);
            self.first_send(self.devices.len() - 1, now);
        }
        Ok(())
    }

    fn run(mut self) -> Result<SimOutcome> {
        for dev in 0..self.devices.len() {
            self.first_send(dev, 0);
        }
        let last_arrival = self.cfg.sim_duration_ms + self.cfg.link_delay_max_ms;
        let mut t = self.cfg.flush_interval_ms;
        while t <= last_arrival {
            self.schedule(t, Event::Flush);
            t += self.cfg.flush_interval_ms;
        }
        self.schedule(last_arrival + 1, Event::Flush);
        if self.cfg.join_count > 0 && self.cfg.join_at_ms < self.cfg.sim_duration_ms {
            self.schedule(self.cfg.join_at_ms, Event::Join);
        }

        while let Some(((now, _), ev)) = self.queue.pop_first() {
            match ev {
                Event::Send(dev) => self.on_send(now, dev)?,
                Event::Arrive(msg, fog) => self.on_arrive(now, *msg, fog),
                Event::Flush => self.on_flush(now)?,
                Event::CloudIngest(payload) => self.on_cloud_ingest(now, *payload),
                Event::Join => self.on_join(now)?,
            }
        }

        let nodes = self.cloud.cluster.nodes();
        let reference = nodes[0].ledger.encode();
        let ledgers_agree = nodes.iter().all(|n| n.ledger.encode() == reference);
        Ok(SimOutcome {
            config: self.cfg.clone(),
            blocks: nodes[0].ledger.blocks().to_vec(),
            ledgers_agree,
            owner_keys: self.fogs.iter().map(|f| f.owner_key.clone()).collect(),
            trace: self.trace,
            metrics: self.metrics,
            counters: self.counters,
            accepted: self.accepted,
            joined: self.joined,
            max_send_distance: self.max_send_distance,
        })
    }
}

/// Fault-free run.
pub fn run(cfg: &SimConfig) -> Result<SimOutcome> {
    run_with(cfg, &FaultScript::new())
}

/// Run with scripted consensus faults; script rounds count cluster rounds
/// from zero.
pub fn run_with(cfg: &SimConfig, script: &FaultScript) -> Result<SimOutcome> {
    cfg.validate()?;
    let params = cfg.params()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let (mpk, msk) = setup::<Gf31, _>(&params, &mut rng)?;
    let mpk = Arc::new(mpk);
    let (devices, fogs) = register_all(&msk, cfg, &mut rng)?;

    let verifier = Arc::new(IbsBlockVerifier::new(mpk.clone()));
    let system = IbsBlockSigner::new(mpk.clone(), extract(&msk, SYSTEM_ID)?);
    let genesis = genesis_block(&system, 1, verifier.as_ref(), &mut rng)?;
    let faults = FaultConfig {
        n_f: cfg.n_f,
        delta_t: cfg.delta_t_ms,
    };
    let cluster = Cluster::new(cfg.cs_count, faults, genesis, verifier.clone(), rng.next_u64())?;
    let cloud = Cloud::new(cluster, verifier, fogs.iter().map(|f| f.agg_id.clone()));

    let mut trace = SimTrace::default();
    trace.push(
        0,
        "kgc",
        "setup",
        format!(
            "profile={} devices={} fogs={} servers={}",
            params.name(),
            devices.len(),
            fogs.len(),
            cfg.cs_count
        ),
    );
    Sim {
        cfg,
        script,
        rng,
        cost: CostModel::new(&params),
        mpk,
        msk,
        devices,
        fogs,
        cloud,
        queue: BTreeMap::new(),
        seq: 0,
        trace,
        metrics: Metrics::default(),
        counters: Counters::default(),
        accepted: Vec::new(),
        joined: Vec::new(),
        max_send_distance: 0.0,
    }
    .run()
}
