use std::sync::Arc;

use pqmiss_chain::{
    build_partial_block, complete_block, decrypt_tx, encrypt_tx, genesis_block, merkle_root, Cluster, Error,
    FaultAction, FaultConfig, FaultScript, FullBlock, IbsBlockSigner, IbsBlockVerifier, SealKey, Transaction,
};
use pqmiss_core::ibs::{extract, setup};
use pqmiss_core::{Gf31, ParamSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct World {
    signer: IbsBlockSigner<Gf31>,
    verifier: IbsBlockVerifier<Gf31>,
    key: SealKey,
    rng: ChaCha20Rng,
}

fn world(seed: u64) -> World {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mpk, msk) = setup::<Gf31, _>(&ParamSet::desk(), &mut rng).unwrap();
    let mpk = Arc::new(mpk);
    World {
        signer: IbsBlockSigner::new(mpk.clone(), extract(&msk, b"fog-3").unwrap()),
        verifier: IbsBlockVerifier::new(mpk),
        key: SealKey::generate("fog-3", &mut rng),
        rng,
    }
}

impl World {
    fn block_on(&mut self, prev: [u8; 32], ts: u64) -> FullBlock {
        let etx = (0..3)
            .map(|i| {
                let tx = Transaction::new(vec![i; 16], b"uav-1".to_vec(), ts + i as u64).unwrap();
                encrypt_tx(&tx, &self.key, &mut self.rng)
            })
            .collect();
        let par = build_partial_block(etx, &self.signer, "telemetry", ts, 30, &mut self.rng).unwrap();
        complete_block(par, prev, 1, &self.verifier).unwrap()
    }
}

#[test]
fn merkle_roots_separate_distinct_sequences() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let len = rng.gen_range(1..9);
        let a: Vec<Vec<u8>> = (0..len).map(|_| (0..rng.gen_range(0..6)).map(|_| rng.gen()).collect()).collect();
        let mut b = a.clone();
        let i = rng.gen_range(0..len);
        b[i].push(rng.gen());
        assert_ne!(merkle_root(&a).unwrap(), merkle_root(&b).unwrap());
    }
}

#[test]
fn only_the_owner_decrypts() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let keys: Vec<SealKey> = (0..10).map(|i| SealKey::generate(format!("fog-{i}"), &mut rng)).collect();
    for (i, owner) in keys.iter().enumerate() {
        let tx = Transaction::new(vec![i as u8; 20], b"uav".to_vec(), 5).unwrap();
        let etx = encrypt_tx(&tx, owner, &mut rng);
        for (j, k) in keys.iter().enumerate() {
            let r = decrypt_tx(&etx, k);
            if i == j {
                assert_eq!(r.unwrap(), tx);
            } else {
                assert!(matches!(r, Err(Error::Authentication)));
            }
        }
    }
}

#[test]
fn threshold_is_exact_for_small_clusters() {
    let mut w = world(13);
    let genesis = genesis_block(&w.signer, 1, &w.verifier, &mut w.rng).unwrap();
    let verifier: Arc<IbsBlockVerifier<Gf31>> = Arc::new(w.verifier.clone());
    for size in 4..=7usize {
        for n_f in 0..=1usize {
            for silent in 0..=size - 1 {
                let faults = FaultConfig { n_f, delta_t: 2000 };
                let mut c = Cluster::new(size, faults, genesis.clone(), verifier.clone(), 1).unwrap();
                let block = w.block_on(c.tip_hash(), 100);
                // round 0 is led by node 0; silence nodes 1..=silent
                let script = (1..=silent as u32).fold(FaultScript::new(), |s, n| s.with(0, n, FaultAction::Drop));
                let out = c.run_round(block, 500, &script);
                let votes = size - silent;
                assert_eq!(out.votes, votes);
                assert_eq!(out.committed, votes > 2 * n_f + 1, "size {size} n_f {n_f} silent {silent}");
            }
        }
    }
}

#[test]
fn ledgers_agree_after_mixed_rounds() {
    let mut w = world(14);
    let genesis = genesis_block(&w.signer, 1, &w.verifier, &mut w.rng).unwrap();
    let faults = FaultConfig { n_f: 1, delta_t: 2000 };
    let mut c = Cluster::new(5, faults, genesis, Arc::new(w.verifier.clone()), 3).unwrap();
    let script = FaultScript::parse("0 4 drop\n1 2 corrupt_mtr\n1 3 corrupt_sig\n2 1 delay_ms 5000\n3 3 drop\n").unwrap();
    let mut committed = Vec::new();
    for r in 0..6u64 {
        let b = w.block_on(c.tip_hash(), 1000 + r);
        let out = c.run_round(b, 10_000 * (r + 1), &script);
        committed.push(out.committed);
        let reference = c.nodes()[0].ledger.encode();
        for n in c.nodes() {
            assert_eq!(n.ledger.encode(), reference);
            assert_eq!(n.ledger.audit(&w.verifier), Ok(()));
        }
    }
    assert_eq!(committed, vec![true, false, true, false, true, true]);
    assert_eq!(c.height(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transaction_round_trip(data in proptest::collection::vec(any::<u8>(), 0..300), ts in 1u64..u64::MAX, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = SealKey::generate("k", &mut rng);
        let tx = Transaction::new(data, b"dev".to_vec(), ts).unwrap();
        let etx = encrypt_tx(&tx, &key, &mut rng);
        prop_assert_eq!(decrypt_tx(&etx, &key).unwrap(), tx);
    }
}
