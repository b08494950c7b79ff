//! Leader-driven voting rounds that commit full blocks across a cluster of
//! cloud servers.
//!
//! Each round the round-robin leader seals a vote request to every node
//! (itself included). A node answers only if the request is fresh, opens
//! under its key, and the block verifies against its own tip; any failure
//! is silence. The leader counts responses that open under its key and are
//! fresh, and commits iff the count is strictly greater than `2 n_f + 1`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use pqmiss_core::codec::{put_u32, put_u64, Reader};
use pqmiss_core::hash::Digest;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::block::{verify_block, BlockFault, BlockVerifier, FullBlock};
use crate::envelope::{SealKey, Sealed};
use crate::error::{Error, Result};
use crate::ledger::{hex, Ledger};

const REQ_TAG: &[u8; 4] = b"VREQ";
const RES_TAG: &[u8; 4] = b"VRES";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaultConfig {
    pub n_f: usize,
    /// Freshness window ΔT in milliseconds.
    pub delta_t: u64,
}

impl FaultConfig {
    /// `V_c > 2 n_f + 1`, strictly.
    pub fn commits(&self, votes: usize) -> bool {
        votes > 2 * self.n_f + 1
    }

    /// Smallest cluster that still commits with `n_f` nodes silent.
    pub fn min_cluster(&self) -> usize {
        3 * self.n_f + 2
    }

    pub fn check_cluster(&self, size: usize) -> Result<()> {
        if size < self.min_cluster() {
            return Err(Error::Cluster(format!(
                "{size} servers cannot tolerate n_f = {} (need at least {})",
                self.n_f,
                self.min_cluster()
            )));
        }
        Ok(())
    }

    fn fresh(&self, now: u64, ts: u64) -> bool {
        now.abs_diff(ts) < self.delta_t
    }
}

pub fn select_leader(round: u64, nodes: &[u32]) -> Result<u32> {
    if nodes.is_empty() {
        return Err(Error::Cluster("empty cluster has no leader".into()));
    }
    Ok(nodes[(round % nodes.len() as u64) as usize])
}

#[derive(Debug)]
pub struct ConsensusNode {
    pub node_id: u32,
    key: SealKey,
    pub ledger: Ledger,
}

impl ConsensusNode {
    pub fn key(&self) -> &SealKey {
        &self.key
    }
}

#[derive(Clone, Debug)]
pub struct VoteRequest {
    pub to: u32,
    pub block: FullBlock,
    pub sealed_req: Sealed,
    pub ts_l: u64,
}

#[derive(Clone, Debug)]
pub struct VoteResponse {
    pub responder: u32,
    pub sealed_res: Sealed,
    pub ts_cs: u64,
}

/// Why a node stayed silent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Withheld {
    Stale,
    Envelope,
    TimestampMismatch,
    Block(BlockFault),
}

impl fmt::Display for Withheld {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Withheld::Stale => f.write_str("stale"),
            Withheld::Envelope => f.write_str("envelope"),
            Withheld::TimestampMismatch => f.write_str("timestamp-mismatch"),
            Withheld::Block(b) => write!(f, "{b}"),
        }
    }
}

fn request_plaintext(hash: &Digest, ts_l: u64) -> Vec<u8> {
    let mut out = REQ_TAG.to_vec();
    out.extend_from_slice(hash);
    put_u64(&mut out, ts_l);
    out
}

fn response_plaintext(hash: &Digest, ts_cs: u64, responder: u32) -> Vec<u8> {
    let mut out = RES_TAG.to_vec();
    out.extend_from_slice(hash);
    put_u64(&mut out, ts_cs);
    put_u32(&mut out, responder);
    out
}

fn parse_tagged(pt: &[u8], tag: &[u8; 4]) -> Option<(Digest, u64, Option<u32>)> {
    let mut r = Reader::new(pt);
    if r.take(4).ok()? != tag {
        return None;
    }
    let hash = r.array::<32>().ok()?;
    let ts = r.u64().ok()?;
    let who = if r.remaining() > 0 { Some(r.u32().ok()?) } else { None };
    r.finish().ok()?;
    Some((hash, ts, who))
}

/// One sealed request per `(node_id, key)` recipient, all stamped `ts_l`.
pub fn propose<R: RngCore + ?Sized>(
    block: &FullBlock,
    recipients: &[(u32, &SealKey)],
    ts_l: u64,
    rng: &mut R,
) -> Vec<VoteRequest> {
    let pt = request_plaintext(&block.cur_hash, ts_l);
    recipients
        .iter()
        .map(|&(to, key)| VoteRequest {
            to,
            block: block.clone(),
            sealed_req: key.seal(&pt, rng),
            ts_l,
        })
        .collect()
}

/// Freshness, envelope, then block checks against `expected_prev`.
#[allow(clippy::too_many_arguments)]
pub fn validate_and_vote<R: RngCore + ?Sized>(
    node: &ConsensusNode,
    req: &VoteRequest,
    expected_prev: &Digest,
    leader_key: &SealKey,
    now: u64,
    faults: &FaultConfig,
    verifier: &dyn BlockVerifier,
    rng: &mut R,
) -> std::result::Result<VoteResponse, Withheld> {
    if !faults.fresh(now, req.ts_l) {
        return Err(Withheld::Stale);
    }
    let pt = node.key.open(&req.sealed_req).map_err(|_| Withheld::Envelope)?;
    let (hash, ts, _) = parse_tagged(&pt, REQ_TAG).ok_or(Withheld::Envelope)?;
    if ts != req.ts_l {
        return Err(Withheld::TimestampMismatch);
    }
    verify_block(&req.block, expected_prev, verifier).map_err(Withheld::Block)?;
    if hash != req.block.cur_hash {
        return Err(Withheld::Envelope);
    }
    Ok(VoteResponse {
        responder: node.node_id,
        sealed_res: leader_key.seal(&response_plaintext(&hash, now, node.node_id), rng),
        ts_cs: now,
    })
}

/// Counts valid, fresh, distinct affirmative votes for `hash`.
pub fn tally(leader_key: &SealKey, hash: &Digest, responses: &[VoteResponse], now: u64, faults: &FaultConfig) -> usize {
    let mut seen = HashSet::new();
    for res in responses {
        let Ok(pt) = leader_key.open(&res.sealed_res) else { continue };
        let Some((h, ts, Some(who))) = parse_tagged(&pt, RES_TAG) else { continue };
        if h == *hash && ts == res.ts_cs && who == res.responder && faults.fresh(now, ts) {
            seen.insert(who);
        }
    }
    seen.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultAction {
    /// The request to this node is never delivered.
    Drop,
    /// The request reaches this node late.
    DelayMs(u64),
    CorruptMtr,
    CorruptSig,
}

/// Line format `round node action [param]`; `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultScript {
    actions: BTreeMap<(u64, u32), Vec<FaultAction>>,
}

impl FaultScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, round: u64, node: u32, action: FaultAction) -> Self {
        self.actions.entry((round, node)).or_default().push(action);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut script = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::FaultScript {
                line: i + 1,
                reason: reason.to_owned(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 3 {
                return Err(bad("expected `round node action [param]`"));
            }
            let round = f[0].parse().map_err(|_| bad("round is not an integer"))?;
            let node = f[1].parse().map_err(|_| bad("node is not an integer"))?;
            let action = match (f[2], f.get(3)) {
                ("drop", None) => FaultAction::Drop,
                ("corrupt_mtr", None) => FaultAction::CorruptMtr,
                ("corrupt_sig", None) => FaultAction::CorruptSig,
                ("delay_ms", Some(p)) => FaultAction::DelayMs(p.parse().map_err(|_| bad("delay is not an integer"))?),
                ("delay_ms", None) => return Err(bad("delay_ms needs a parameter")),
                (a, _) if ["drop", "corrupt_mtr", "corrupt_sig"].contains(&a) => {
                    return Err(bad("action takes no parameter"))
                }
                (a, _) => return Err(bad(&format!("unknown action `{a}`"))),
            };
            script = script.with(round, node, action);
        }
        Ok(script)
    }

    fn for_node(&self, round: u64, node: u32) -> &[FaultAction] {
        self.actions.get(&(round, node)).map_or(&[], Vec::as_slice)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub time_ms: u64,
    pub node: Option<u32>,
    pub event: &'static str,
    pub reason: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "time={} node=", self.time_ms)?;
        match self.node {
            Some(n) => write!(f, "cs-{n}")?,
            None => f.write_str("-")?,
        }
        write!(f, " event={} reason={}", self.event, if self.reason.is_empty() { "-" } else { &self.reason })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub round: u64,
    pub leader: u32,
    pub votes: usize,
    pub committed: bool,
    pub block_hash: Digest,
}

pub struct Cluster {
    nodes: Vec<ConsensusNode>,
    faults: FaultConfig,
    verifier: Arc<dyn BlockVerifier>,
    rng: ChaCha20Rng,
    round: u64,
    trace: Vec<TraceRecord>,
}

impl fmt::Debug for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cluster")
            .field("nodes", &self.nodes.len())
            .field("faults", &self.faults)
            .field("round", &self.round)
            .finish_non_exhaustive()
    }
}

impl Cluster {
    /// `size` nodes with ids `0..size`, all rooted at the same genesis.
    pub fn new(
        size: usize,
        faults: FaultConfig,
        genesis: FullBlock,
        verifier: Arc<dyn BlockVerifier>,
        seed: u64,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::Cluster("cluster needs at least one server".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let nodes = (0..size as u32)
            .map(|node_id| ConsensusNode {
                node_id,
                key: SealKey::generate(format!("cs-{node_id}"), &mut rng),
                ledger: Ledger::new(genesis.clone()),
            })
            .collect();
        Ok(Self {
            nodes,
            faults,
            verifier,
            rng,
            round: 0,
            trace: Vec::new(),
        })
    }

    pub fn nodes(&self) -> &[ConsensusNode] {
        &self.nodes
    }

    pub fn faults(&self) -> &FaultConfig {
        &self.faults
    }

    pub fn verifier(&self) -> &dyn BlockVerifier {
        self.verifier.as_ref()
    }

    pub fn next_round(&self) -> u64 {
        self.round
    }

    /// Tip shared by every node. Ledgers never diverge because every node
    /// appends exactly the committed blocks.
    pub fn tip_hash(&self) -> Digest {
        self.nodes[0].ledger.tip_hash()
    }

    pub fn height(&self) -> u64 {
        self.nodes[0].ledger.height()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    fn log(&mut self, time_ms: u64, node: Option<u32>, event: &'static str, reason: impl Into<String>) {
        self.trace.push(TraceRecord {
            time_ms,
            node,
            event,
            reason: reason.into(),
        });
    }

    fn ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.node_id).collect()
    }

    /// Runs one full round for `block` at logical time `now`.
    pub fn run_round(&mut self, block: FullBlock, now: u64, script: &FaultScript) -> RoundOutcome {
        let round = self.round;
        self.round += 1;
        let leader = select_leader(round, &self.ids()).expect("cluster is nonempty");
        let hash = block.cur_hash;
        let mut outcome = RoundOutcome {
            round,
            leader,
            votes: 0,
            committed: false,
            block_hash: hash,
        };
        self.log(now, Some(leader), "leader", format!("round {round} block {}", &hex(&hash)[..16]));

        if script.for_node(round, leader).contains(&FaultAction::Drop) {
            self.log(now, Some(leader), "abort", "leader silent");
            return outcome;
        }

        let requests = {
            let recipients: Vec<(u32, &SealKey)> = self.nodes.iter().map(|n| (n.node_id, &n.key)).collect();
            propose(&block, &recipients, now, &mut self.rng)
        };
        self.log(now, Some(leader), "propose", format!("{} requests", requests.len()));

        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.shuffle(&mut self.rng);

        let leader_key = self.nodes[leader as usize].key.clone();
        let mut responses = Vec::new();
        let mut tally_time = now;
        for i in order {
            let mut req = requests[i].clone();
            let to = req.to;
            let mut arrival = now;
            let mut dropped = false;
            for action in script.for_node(round, to) {
                match *action {
                    FaultAction::Drop => dropped = true,
                    FaultAction::DelayMs(d) => arrival += d,
                    FaultAction::CorruptMtr => req.block.partial.mtr[0] ^= 1,
                    FaultAction::CorruptSig => {
                        if let Some(b) = req.block.partial.sig_blk.last_mut() {
                            *b ^= 1;
                        }
                    }
                }
            }
            if dropped {
                self.log(now, Some(to), "drop", "scripted");
                continue;
            }
            let node = &self.nodes[to as usize];
            let expected_prev = node.ledger.tip_hash();
            let verdict = validate_and_vote(
                node,
                &req,
                &expected_prev,
                &leader_key,
                arrival,
                &self.faults,
                self.verifier.as_ref(),
                &mut self.rng,
            );
            match verdict {
                Ok(res) => {
                    self.log(arrival, Some(to), "vote", "");
                    tally_time = tally_time.max(arrival);
                    responses.push(res);
                }
                Err(why) => self.log(arrival, Some(to), "withhold", why.to_string()),
            }
        }

        outcome.votes = tally(&leader_key, &hash, &responses, tally_time, &self.faults);
        let threshold = 2 * self.faults.n_f + 1;
        self.log(
            tally_time,
            Some(leader),
            "tally",
            format!("V_c={} threshold>{threshold}", outcome.votes),
        );
        if !self.faults.commits(outcome.votes) {
            self.log(tally_time, Some(leader), "abort", "insufficient votes");
            return outcome;
        }
        outcome.committed = true;
        self.log(tally_time, Some(leader), "commit", "");
        for idx in 0..self.nodes.len() {
            let id = self.nodes[idx].node_id;
            let res = self.nodes[idx].ledger.append(block.clone(), self.verifier.as_ref());
            match res {
                Ok(()) => {
                    let h = self.nodes[idx].ledger.height();
                    self.log(tally_time, Some(id), "append", format!("height {h}"));
                }
                Err(e) => self.log(tally_time, Some(id), "append-failed", e.to_string()),
            }
        }
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::testkit::{kit, Kit};
    use crate::block::{complete_block, BLOCK_VERSION};

    fn cluster(k: &mut Kit, size: usize, n_f: usize) -> Cluster {
        let faults = FaultConfig { n_f, delta_t: 2000 };
        Cluster::new(size, faults, k.genesis(), Arc::new(k.verifier.clone()), 9).unwrap()
    }

    fn next_block(k: &mut Kit, c: &Cluster, ts: u64) -> FullBlock {
        let p = k.partial(2, ts);
        complete_block(p, c.tip_hash(), BLOCK_VERSION, &k.verifier).unwrap()
    }

    #[test]
    fn round_robin() {
        let ids = [0, 1, 2, 3, 4];
        assert_eq!(select_leader(0, &ids).unwrap(), 0);
        assert_eq!(select_leader(5, &ids).unwrap(), 0);
        let mut counts = [0; 5];
        for r in 0..10 {
            counts[select_leader(r, &ids).unwrap() as usize] += 1;
        }
        assert_eq!(counts, [2; 5]);
        assert!(select_leader(0, &[]).is_err());
    }

    #[test]
    fn threshold_predicate() {
        let f = FaultConfig { n_f: 1, delta_t: 1 };
        assert!(f.commits(4));
        assert!(!f.commits(3));
        assert_eq!((0..=5).filter(|&v| f.commits(v)).collect::<Vec<_>>(), vec![4, 5]);
        assert_eq!(f.min_cluster(), 5);
        assert!(f.check_cluster(4).is_err());
    }

    #[test]
    fn requests_open_only_for_addressee() {
        let mut k = kit(30);
        let c = cluster(&mut k, 5, 1);
        let b = next_block(&mut k, &c, 10);
        let recipients: Vec<(u32, &SealKey)> = c.nodes().iter().map(|n| (n.node_id, n.key())).collect();
        let reqs = propose(&b, &recipients, 1234, &mut k.rng);
        assert_eq!(reqs.len(), 5);
        for req in &reqs {
            assert_eq!(req.ts_l, 1234);
            for node in c.nodes() {
                assert_eq!(node.key().open(&req.sealed_req).is_ok(), node.node_id == req.to);
            }
        }
    }

    #[test]
    fn validate_paths() {
        let mut k = kit(31);
        let c = cluster(&mut k, 5, 1);
        let b = next_block(&mut k, &c, 10);
        let node = &c.nodes()[1];
        let leader_key = c.nodes()[0].key().clone();
        let reqs = propose(&b, &[(1, node.key())], 1000, &mut k.rng);
        let faults = *c.faults();
        let prev = node.ledger.tip_hash();
        let vote = |req: &VoteRequest, now: u64, rng: &mut ChaCha20Rng| {
            validate_and_vote(node, req, &prev, &leader_key, now, &faults, &k.verifier, rng)
        };
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let res = vote(&reqs[0], 1500, &mut rng).unwrap();
        assert_eq!(tally(&leader_key, &b.cur_hash, &[res.clone(), res.clone()], 1600, &faults), 1);
        assert_eq!(tally(node.key(), &b.cur_hash, std::slice::from_ref(&res), 1600, &faults), 0);
        assert_eq!(tally(&leader_key, &b.cur_hash, &[res], 1500 + 2000, &faults), 0);
        assert_eq!(vote(&reqs[0], 3000, &mut rng).unwrap_err(), Withheld::Stale);
        let mut bad = reqs[0].clone();
        bad.block.partial.mtr[3] ^= 1;
        assert_eq!(vote(&bad, 1000, &mut rng).unwrap_err(), Withheld::Block(BlockFault::Mtr));
        let mut bad = reqs[0].clone();
        bad.ts_l += 1;
        assert_eq!(vote(&bad, 1000, &mut rng).unwrap_err(), Withheld::TimestampMismatch);
        let mut bad = reqs[0].clone();
        bad.sealed_req.ciphertext[0] ^= 1;
        assert_eq!(vote(&bad, 1000, &mut rng).unwrap_err(), Withheld::Envelope);
    }

    #[test]
    fn honest_round_commits_everywhere() {
        let mut k = kit(32);
        let mut c = cluster(&mut k, 5, 1);
        for r in 0..3 {
            let b = next_block(&mut k, &c, 100 + r);
            let out = c.run_round(b, 10_000 + r, &FaultScript::new());
            assert!(out.committed);
            assert_eq!(out.votes, 5);
            assert_eq!(out.leader, r as u32);
        }
        let reference = c.nodes()[0].ledger.encode();
        for n in c.nodes() {
            assert_eq!(n.ledger.height(), 3);
            assert_eq!(n.ledger.encode(), reference);
        }
    }

    #[test]
    fn silent_nodes_against_threshold() {
        let mut k = kit(33);
        let mut c = cluster(&mut k, 5, 1);
        let b = next_block(&mut k, &c, 1);
        let one = FaultScript::new().with(0, 3, FaultAction::Drop);
        assert!(c.run_round(b, 5000, &one).committed);
        let b = next_block(&mut k, &c, 2);
        let two = FaultScript::new()
            .with(1, 2, FaultAction::Drop)
            .with(1, 4, FaultAction::CorruptSig);
        let out = c.run_round(b, 6000, &two);
        assert_eq!(out.votes, 3);
        assert!(!out.committed);
        assert_eq!(c.height(), 1);
    }

    #[test]
    fn faulty_leader_aborts_and_delay_is_stale() {
        let mut k = kit(34);
        let mut c = cluster(&mut k, 5, 1);
        let b = next_block(&mut k, &c, 1);
        let out = c.run_round(b.clone(), 100, &FaultScript::new().with(0, 0, FaultAction::Drop));
        assert!(!out.committed);
        let script = FaultScript::new()
            .with(1, 2, FaultAction::DelayMs(2000))
            .with(1, 3, FaultAction::CorruptMtr);
        let out = c.run_round(b, 200, &script);
        assert_eq!(out.votes, 3);
        assert!(c.trace().iter().any(|t| t.event == "withhold" && t.reason == "stale"));
        assert!(c.trace().iter().any(|t| t.event == "withhold" && t.reason == "MTR"));
    }

    #[test]
    fn rounds_are_deterministic() {
        let run = || {
            let mut k = kit(35);
            let mut c = cluster(&mut k, 5, 1);
            let b = next_block(&mut k, &c, 1);
            c.run_round(b, 10, &FaultScript::new().with(0, 1, FaultAction::Drop));
            c.trace().iter().map(ToString::to_string).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn script_parsing() {
        let s = FaultScript::parse("# comment\n0 1 drop\n\n2 3 delay_ms 2500\n4 0 corrupt_mtr\n4 1 corrupt_sig # x\n").unwrap();
        let expected = FaultScript::new()
            .with(0, 1, FaultAction::Drop)
            .with(2, 3, FaultAction::DelayMs(2500))
            .with(4, 0, FaultAction::CorruptMtr)
            .with(4, 1, FaultAction::CorruptSig);
        assert_eq!(s, expected);
        for bad in ["0 1", "x 1 drop", "0 1 explode", "0 1 delay_ms", "0 1 drop 5", "0 1 delay_ms x"] {
            assert!(FaultScript::parse(bad).is_err(), "{bad}");
        }
    }
}
