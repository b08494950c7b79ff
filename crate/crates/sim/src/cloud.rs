//! Cloud tier: admits fog payloads and commits their blocks through the
//! server cluster.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use pqmiss_chain::block::BLOCK_VERSION;
use pqmiss_chain::{complete_block, verify_partial, BlockFault, Cluster, FaultScript, IbsBlockVerifier, PartialBlock};
use pqmiss_core::aggsig::la_ver;
use pqmiss_core::hash::Digest;
use pqmiss_core::{Gf31, MasterPublicKey31, Verdict};

use crate::message::FogPayload;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Quarantine {
    UnknownAggregator,
    Aggregate(String),
    OwnerMismatch,
    Partial(BlockFault),
    CountMismatch { batch: usize, etx: usize },
}

impl fmt::Display for Quarantine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quarantine::UnknownAggregator => f.write_str("unknown aggregator"),
            Quarantine::Aggregate(r) => write!(f, "aggregate rejected: {r}"),
            Quarantine::OwnerMismatch => f.write_str("partial block owner is not the aggregator"),
            Quarantine::Partial(b) => write!(f, "partial block rejected: {b}"),
            Quarantine::CountMismatch { batch, etx } => write!(f, "{batch} signed messages but {etx} transactions"),
        }
    }
}

/// Result of pushing one partial block through consensus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCommit {
    pub hash: Digest,
    pub committed: bool,
    pub attempts: usize,
    pub tx_count: usize,
}

pub struct Cloud {
    pub cluster: Cluster,
    verifier: Arc<IbsBlockVerifier<Gf31>>,
    fog_directory: BTreeSet<Vec<u8>>,
}

impl fmt::Debug for Cloud {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cloud")
            .field("cluster", &self.cluster)
            .field("fogs", &self.fog_directory.len())
            .finish_non_exhaustive()
    }
}

impl Cloud {
    pub fn new(cluster: Cluster, verifier: Arc<IbsBlockVerifier<Gf31>>, fog_ids: impl IntoIterator<Item = Vec<u8>>) -> Self {
        Self {
            cluster,
            verifier,
            fog_directory: fog_ids.into_iter().collect(),
        }
    }

    /// Aggregate check with `deep = false`, then every partial block.
    pub fn admit(&self, mpk: &MasterPublicKey31, x: &FogPayload) -> Result<(), Quarantine> {
        let agg = &x.aggregate;
        if !self.fog_directory.contains(&agg.agg_id) || agg.agg_id != x.fog_id {
            return Err(Quarantine::UnknownAggregator);
        }
        if let Verdict::Reject(r) = la_ver(mpk, agg, false) {
            return Err(Quarantine::Aggregate(r.to_string()));
        }
        for p in &x.partials {
            if p.owner_id != agg.agg_id {
                return Err(Quarantine::OwnerMismatch);
            }
            verify_partial(p, self.verifier.as_ref()).map_err(Quarantine::Partial)?;
        }
        let etx: usize = x.partials.iter().map(|p| p.etx.len()).sum();
        if etx != agg.batch.len() {
            return Err(Quarantine::CountMismatch {
                batch: agg.batch.len(),
                etx,
            });
        }
        Ok(())
    }

    /// Completes `partial` on the current tip and runs rounds until one
    /// commits, giving every server one turn as leader.
    pub fn commit_partial(&mut self, partial: PartialBlock, now: u64, script: &FaultScript) -> BlockCommit {
        let tx_count = partial.etx.len();
        let block = complete_block(partial, self.cluster.tip_hash(), BLOCK_VERSION, self.verifier.as_ref())
            .expect("admitted partial blocks verify");
        let mut out = BlockCommit {
            hash: block.cur_hash,
            committed: false,
            attempts: 0,
            tx_count,
        };
        let attempts = self.cluster.nodes().len();
        while out.attempts < attempts && !out.committed {
            out.attempts += 1;
            out.committed = self.cluster.run_round(block.clone(), now, script).committed;
        }
        out
    }

    /// [`Cloud::admit`] followed by [`Cloud::commit_partial`] for each block.
    pub fn ingest_and_commit(
        &mut self,
        mpk: &MasterPublicKey31,
        x: FogPayload,
        now: u64,
        script: &FaultScript,
    ) -> Result<Vec<BlockCommit>, Quarantine> {
        self.admit(mpk, &x)?;
        Ok(x.partials.into_iter().map(|p| self.commit_partial(p, now, script)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::tests::env;
    use crate::message::{fog_flush, fog_ingest};
    use pqmiss_chain::{genesis_block, FaultConfig, IbsBlockSigner};
    use pqmiss_core::ibs::{extract, sign};

    fn cloud_for(e: &mut crate::message::tests::Env) -> Cloud {
        let verifier = Arc::new(IbsBlockVerifier::new(e.mpk.clone()));
        let system = IbsBlockSigner::new(e.mpk.clone(), extract(&e.msk, b"system").unwrap());
        let genesis = genesis_block(&system, 1, verifier.as_ref(), &mut e.rng).unwrap();
        let faults = FaultConfig { n_f: 1, delta_t: 2000 };
        let cluster = Cluster::new(5, faults, genesis, verifier.clone(), 7).unwrap();
        Cloud::new(cluster, verifier, e.fogs.iter().map(|f| f.agg_id.clone()))
    }

    fn payload(e: &mut crate::message::tests::Env, n: usize) -> FogPayload {
        let g = e.devices[0].group;
        let mpk = e.mpk.clone();
        for i in 0..n {
            let m = e.message(0, 10 + i as u64, 16);
            fog_ingest(&mpk, &mut e.fogs[g], m, 10 + i as u64, 2000).unwrap();
        }
        fog_flush(&mpk, &mut e.fogs[g], "telemetry", 30, 100, &mut e.rng).unwrap().unwrap()
    }

    #[test]
    fn capacity_arithmetic_commits_three_blocks() {
        let mut e = env(10);
        let mut cloud = cloud_for(&mut e);
        let x = payload(&mut e, 80);
        let mpk = e.mpk.clone();
        let commits = cloud.ingest_and_commit(&mpk, x, 200, &FaultScript::new()).unwrap();
        assert_eq!(commits.iter().map(|c| c.tx_count).collect::<Vec<_>>(), vec![30, 30, 20]);
        assert!(commits.iter().all(|c| c.committed && c.attempts == 1));
        for n in cloud.cluster.nodes() {
            assert_eq!(n.ledger.height(), 3);
        }
    }

    #[test]
    fn forged_aggregator_signature_is_quarantined() {
        let mut e = env(11);
        let mut cloud = cloud_for(&mut e);
        let mut x = payload(&mut e, 30);
        let mpk = e.mpk.clone();
        let d = x.aggregate.batch_digest;
        x.aggregate.agg_sig = sign(&mpk, &e.devices[0].usk, &d, &mut e.rng).unwrap();
        let err = cloud.ingest_and_commit(&mpk, x, 200, &FaultScript::new()).unwrap_err();
        assert!(matches!(err, Quarantine::Aggregate(_)));
        assert_eq!(cloud.cluster.height(), 0);
    }

    #[test]
    fn unknown_fog_and_swapped_partials_are_quarantined() {
        let mut e = env(12);
        let cloud = cloud_for(&mut e);
        let mpk = e.mpk.clone();
        let x = payload(&mut e, 5);
        let mut y = x.clone();
        y.fog_id = b"fog-99".to_vec();
        assert_eq!(cloud.admit(&mpk, &y), Err(Quarantine::UnknownAggregator));
        let mut y = x.clone();
        y.partials[0].etx.pop();
        assert_eq!(cloud.admit(&mpk, &y), Err(Quarantine::Partial(BlockFault::Mtr)));
        let mut y = x;
        let extra = y.partials[0].clone();
        y.partials.push(extra);
        assert!(matches!(cloud.admit(&mpk, &y), Err(Quarantine::CountMismatch { .. })));
    }
}
