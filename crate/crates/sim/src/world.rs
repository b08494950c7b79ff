//! Registration, placement and random-waypoint mobility.

use pqmiss_chain::SealKey;
use pqmiss_core::aggsig::keygen_all;
use pqmiss_core::ibs::extract;
use pqmiss_core::{MasterSecretKey31, UserSecretKey31};
use rand::Rng;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::message::CollectionMessage;

const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, o: &Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Uniform point in `disk(center, r) ∩ [0, w] × [0, h]`.
fn sample_near<R: Rng + ?Sized>(center: Point, r: f64, w: f64, h: f64, rng: &mut R) -> Result<Point> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = Point {
            x: center.x + rng.gen_range(-r..=r),
            y: center.y + rng.gen_range(-r..=r),
        };
        if p.dist(&center) <= r && (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y) {
            return Ok(p);
        }
    }
    Err(Error::Config(vec![format!(
        "tx_range: no position within {r} m of ({:.1}, {:.1}) inside the arena",
        center.x, center.y
    )]))
}

#[derive(Clone, Debug)]
pub struct DeviceRecord {
    pub id: Vec<u8>,
    pub usk: UserSecretKey31,
    pub position: Point,
    /// Index of the assigned fog.
    pub group: usize,
    pub registered_at: u64,
    waypoint: Point,
    speed: f64,
    last_move: u64,
    pub(crate) last_send: u64,
}

#[derive(Clone, Debug)]
pub struct FogRecord {
    pub agg_id: Vec<u8>,
    pub agg_usk: UserSecretKey31,
    pub owner_key: SealKey,
    pub position: Point,
    pub group_members: Vec<Vec<u8>>,
    /// Accepted, not yet flushed.
    pub buffer: Vec<CollectionMessage>,
}

impl DeviceRecord {
    /// Moves along the waypoint path up to time `now`. The mobility region is
    /// convex, so straight legs never leave it.
    pub fn advance<R: Rng + ?Sized>(&mut self, now: u64, fog: &FogRecord, cfg: &SimConfig, rng: &mut R) -> Result<()> {
        let mut budget = self.speed * now.saturating_sub(self.last_move) as f64 / 1000.0;
        self.last_move = self.last_move.max(now);
        loop {
            let d = self.position.dist(&self.waypoint);
            if budget < d {
                let t = budget / d;
                self.position = Point {
                    x: self.position.x + t * (self.waypoint.x - self.position.x),
                    y: self.position.y + t * (self.waypoint.y - self.position.y),
                };
                return Ok(());
            }
            budget -= d;
            self.position = self.waypoint;
            self.waypoint = sample_near(fog.position, cfg.tx_range, cfg.area_w, cfg.area_h, rng)?;
            self.speed = rng.gen_range(cfg.speed_min..=cfg.speed_max);
        }
    }
}

fn new_device<R: Rng + ?Sized>(
    id: Vec<u8>,
    usk: UserSecretKey31,
    group: usize,
    fog: &FogRecord,
    now: u64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<DeviceRecord> {
    let position = sample_near(fog.position, cfg.tx_range, cfg.area_w, cfg.area_h, rng)?;
    let waypoint = sample_near(fog.position, cfg.tx_range, cfg.area_w, cfg.area_h, rng)?;
    Ok(DeviceRecord {
        id,
        usk,
        position,
        group,
        registered_at: now,
        waypoint,
        speed: rng.gen_range(cfg.speed_min..=cfg.speed_max),
        last_move: now,
        last_send: now,
    })
}

pub fn fog_id(j: usize) -> Vec<u8> {
    format!("fog-{j}").into_bytes()
}

pub fn device_id(i: usize) -> Vec<u8> {
    format!("uav-{i}").into_bytes()
}

/// Places fogs uniformly, deals devices round-robin to fogs, places each
/// device inside its fog's range and extracts every key.
pub fn register_all<R: Rng + ?Sized>(
    msk: &MasterSecretKey31,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(Vec<DeviceRecord>, Vec<FogRecord>)> {
    cfg.validate()?;
    let positions: Vec<Point> = (0..cfg.fog_count)
        .map(|_| Point {
            x: rng.gen_range(0.0..=cfg.area_w),
            y: rng.gen_range(0.0..=cfg.area_h),
        })
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cfg.fog_count];
    for i in 0..cfg.device_count {
        members[i % cfg.fog_count].push(i);
    }
    let mut fogs = Vec::with_capacity(cfg.fog_count);
    let mut keyed: Vec<Option<UserSecretKey31>> = vec![None; cfg.device_count];
    for (j, group) in members.iter().enumerate() {
        let ids: Vec<Vec<u8>> = group.iter().map(|&i| device_id(i)).collect();
        let ring = keygen_all(msk, &ids, &fog_id(j))?;
        for (&i, usk) in group.iter().zip(ring.signers) {
            keyed[i] = Some(usk);
        }
        fogs.push(FogRecord {
            agg_id: fog_id(j),
            agg_usk: ring.aggregator,
            owner_key: SealKey::generate(fog_id(j), rng),
            position: positions[j],
            group_members: ids,
            buffer: Vec::new(),
        });
    }
    let devices = keyed
        .into_iter()
        .enumerate()
        .map(|(i, usk)| {
            let j = i % cfg.fog_count;
            new_device(device_id(i), usk.expect("every device belongs to one group"), j, &fogs[j], 0, cfg, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((devices, fogs))
}

/// Registers a fresh device with fog `fog_idx` at time `now`.
pub fn add_node_dynamic<R: Rng + ?Sized>(
    msk: &MasterSecretKey31,
    devices: &[DeviceRecord],
    fogs: &mut [FogRecord],
    fog_idx: usize,
    now: u64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<DeviceRecord> {
    let fog = fogs.get_mut(fog_idx).ok_or_else(|| Error::UnknownFog(format!("fog-{fog_idx}")))?;
    let mut k = devices.len();
    let id = loop {
        let candidate = format!("uav-{k}@{now}").into_bytes();
        if !devices.iter().any(|d| d.id == candidate) {
            break candidate;
        }
        k += 1;
    };
    let usk = extract(msk, &id)?;
    fog.group_members.push(id.clone());
    new_device(id, usk, fog_idx, fog, now, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pqmiss_core::ibs::{identity_target, setup};
    use pqmiss_core::{Gf31, ParamSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn registered(seed: u64) -> (pqmiss_core::MasterPublicKey31, MasterSecretKey31, Vec<DeviceRecord>, Vec<FogRecord>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mpk, msk) = setup::<Gf31, _>(&ParamSet::desk(), &mut rng).unwrap();
        let (d, f) = register_all(&msk, &SimConfig::default(), &mut rng).unwrap();
        (mpk, msk, d, f)
    }

    #[test]
    fn every_key_is_valid_and_in_range() {
        let (mpk, _, devices, fogs) = registered(1);
        assert_eq!(devices.len() + fogs.len(), 60);
        let p = mpk.params();
        for (id, u) in devices
            .iter()
            .map(|d| (&d.id, &d.usk.u))
            .chain(fogs.iter().map(|f| (&f.agg_id, &f.agg_usk.u)))
        {
            assert_eq!(mpk.map().evaluate(u).unwrap(), identity_target::<Gf31>(p, id));
        }
        for d in &devices {
            assert!(d.position.dist(&fogs[d.group].position) <= 100.0);
            assert!(fogs[d.group].group_members.contains(&d.id));
        }
    }

    #[test]
    fn placement_is_deterministic() {
        let (_, _, a, _) = registered(2);
        let (_, _, b, _) = registered(2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.position, &x.usk), (y.position, &y.usk));
        }
    }

    #[test]
    fn mobility_stays_in_range_and_arena() {
        let (_, _, mut devices, fogs) = registered(3);
        let cfg = SimConfig::default();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for t in (0..=200_000).step_by(700) {
            for d in devices.iter_mut() {
                let fog = &fogs[d.group];
                d.advance(t, fog, &cfg, &mut rng).unwrap();
                assert!(d.position.dist(&fog.position) <= cfg.tx_range + 1e-9);
                assert!((0.0..=cfg.area_w).contains(&d.position.x));
                assert!((0.0..=cfg.area_h).contains(&d.position.y));
            }
        }
    }

    #[test]
    fn dynamic_join_gets_fresh_id() {
        let (mpk, msk, devices, mut fogs) = registered(5);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let d = add_node_dynamic(&msk, &devices, &mut fogs, 3, 42_000, &SimConfig::default(), &mut rng).unwrap();
        assert!(devices.iter().all(|x| x.id != d.id));
        assert_eq!(d.group, 3);
        assert_eq!(d.registered_at, 42_000);
        assert!(fogs[3].group_members.contains(&d.id));
        assert_eq!(mpk.map().evaluate(&d.usk.u).unwrap(), identity_target::<Gf31>(mpk.params(), &d.id));
        assert!(add_node_dynamic(&msk, &devices, &mut fogs, 99, 1, &SimConfig::default(), &mut rng).is_err());
    }
}
