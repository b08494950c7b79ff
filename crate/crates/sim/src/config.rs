//! `key = value` simulation configuration.

use std::fmt;
use std::str::FromStr;

use pqmiss_core::ParamSet;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingMode {
    /// Stage costs from an analytic operation-count model; reproducible.
    Model,
    /// Measured wall-clock time; not reproducible.
    Wall,
}

impl FromStr for TimingMode {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "model" => Ok(Self::Model),
            "wall" => Ok(Self::Wall),
            _ => Err(()),
        }
    }
}

impl fmt::Display for TimingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Model => "model",
            Self::Wall => "wall",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub device_count: usize,
    pub fog_count: usize,
    pub cs_count: usize,
    pub n_f: usize,
    pub area_w: f64,
    pub area_h: f64,
    pub tx_range: f64,
    pub delta_t_ms: u64,
    pub block_capacity: usize,
    pub sim_duration_ms: u64,
    pub packet_min: usize,
    pub packet_max: usize,
    /// Per-device send cadence.
    pub send_interval_ms: u64,
    pub flush_interval_ms: u64,
    pub link_delay_min_ms: u64,
    pub link_delay_max_ms: u64,
    pub fog_cloud_delay_ms: u64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Devices registered mid-run.
    pub join_count: usize,
    pub join_at_ms: u64,
    pub app_type: String,
    pub profile: String,
    pub timing: TimingMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            device_count: 50,
            fog_count: 10,
            cs_count: 5,
            n_f: 1,
            area_w: 1000.0,
            area_h: 1000.0,
            tx_range: 100.0,
            delta_t_ms: 2000,
            block_capacity: 30,
            sim_duration_ms: 100_000,
            packet_min: 100,
            packet_max: 10_000,
            send_interval_ms: 5000,
            flush_interval_ms: 10_000,
            link_delay_min_ms: 2,
            link_delay_max_ms: 40,
            fog_cloud_delay_ms: 20,
            speed_min: 1.0,
            speed_max: 15.0,
            join_count: 1,
            join_at_ms: 50_000,
            app_type: "telemetry".into(),
            profile: "desk".into(),
            timing: TimingMode::Model,
            seed: 1,
        }
    }
}

const KEYS: &[&str] = &[
    "device_count",
    "fog_count",
    "cs_count",
    "n_f",
    "area_w",
    "area_h",
    "tx_range",
    "delta_t_ms",
    "block_capacity",
    "sim_duration_ms",
    "packet_min",
    "packet_max",
    "send_interval_ms",
    "flush_interval_ms",
    "link_delay_min_ms",
    "link_delay_max_ms",
    "fog_cloud_delay_ms",
    "speed_min",
    "speed_max",
    "join_count",
    "join_at_ms",
    "app_type",
    "profile",
    "timing",
    "seed",
];

impl SimConfig {
    pub fn params(&self) -> Result<ParamSet> {
        ParamSet::by_name(&self.profile).ok_or_else(|| Error::Config(vec![format!("profile: unknown `{}`", self.profile)]))
    }

    /// Parses `key = value` lines over the defaults. Every bad line is
    /// reported, not only the first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut bad = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bad.push(format!("line {}: expected `key = value`", i + 1));
                continue;
            };
            if let Err(e) = cfg.set(k.trim(), v.trim()) {
                bad.push(e);
            }
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn p<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse `{v}`"))
        }
        match key {
            "device_count" => self.device_count = p(key, value)?,
            "fog_count" => self.fog_count = p(key, value)?,
            "cs_count" => self.cs_count = p(key, value)?,
            "n_f" => self.n_f = p(key, value)?,
            "area_w" => self.area_w = p(key, value)?,
            "area_h" => self.area_h = p(key, value)?,
            "tx_range" => self.tx_range = p(key, value)?,
            "delta_t_ms" => self.delta_t_ms = p(key, value)?,
            "block_capacity" => self.block_capacity = p(key, value)?,
            "sim_duration_ms" => self.sim_duration_ms = p(key, value)?,
            "packet_min" => self.packet_min = p(key, value)?,
            "packet_max" => self.packet_max = p(key, value)?,
            "send_interval_ms" => self.send_interval_ms = p(key, value)?,
            "flush_interval_ms" => self.flush_interval_ms = p(key, value)?,
            "link_delay_min_ms" => self.link_delay_min_ms = p(key, value)?,
            "link_delay_max_ms" => self.link_delay_max_ms = p(key, value)?,
            "fog_cloud_delay_ms" => self.fog_cloud_delay_ms = p(key, value)?,
            "speed_min" => self.speed_min = p(key, value)?,
            "speed_max" => self.speed_max = p(key, value)?,
            "join_count" => self.join_count = p(key, value)?,
            "join_at_ms" => self.join_at_ms = p(key, value)?,
            "app_type" => self.app_type = value.to_owned(),
            "profile" => self.profile = value.to_owned(),
            "timing" => self.timing = value.parse().map_err(|_| format!("timing: expected model or wall, got `{value}`"))?,
            "seed" => self.seed = p(key, value)?,
            _ => return Err(format!("{key}: unknown key")),
        }
        Ok(())
    }

    /// Lists every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_owned());
            }
        };
        need(self.fog_count >= 1, "fog_count: must be >= 1");
        need(self.cs_count >= 1, "cs_count: must be >= 1");
        need(self.cs_count >= 3 * self.n_f + 2, "cs_count: must be >= 3·n_f + 2");
        need(self.area_w > 0.0 && self.area_h > 0.0, "area_w/area_h: must be positive");
        need(self.tx_range > 0.0, "tx_range: must be positive");
        need(self.delta_t_ms >= 1, "delta_t_ms: must be >= 1");
        need(self.block_capacity >= 1, "block_capacity: must be >= 1");
        need(self.sim_duration_ms >= 1, "sim_duration_ms: must be >= 1");
        need(self.packet_min <= self.packet_max, "packet_min: must not exceed packet_max");
        need(self.send_interval_ms >= 1, "send_interval_ms: must be >= 1");
        need(self.flush_interval_ms >= 1, "flush_interval_ms: must be >= 1");
        need(self.link_delay_min_ms <= self.link_delay_max_ms, "link_delay_min_ms: must not exceed link_delay_max_ms");
        need(self.speed_min > 0.0 && self.speed_min <= self.speed_max, "speed_min: must be in (0, speed_max]");
        need(ParamSet::by_name(&self.profile).is_some(), "profile: expected desk or paper128");
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// Every key, one per line, in a form [`SimConfig::parse`] accepts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let v = match *key {
                "device_count" => self.device_count.to_string(),
                "fog_count" => self.fog_count.to_string(),
                "cs_count" => self.cs_count.to_string(),
                "n_f" => self.n_f.to_string(),
                "area_w" => self.area_w.to_string(),
                "area_h" => self.area_h.to_string(),
                "tx_range" => self.tx_range.to_string(),
                "delta_t_ms" => self.delta_t_ms.to_string(),
                "block_capacity" => self.block_capacity.to_string(),
                "sim_duration_ms" => self.sim_duration_ms.to_string(),
                "packet_min" => self.packet_min.to_string(),
                "packet_max" => self.packet_max.to_string(),
                "send_interval_ms" => self.send_interval_ms.to_string(),
                "flush_interval_ms" => self.flush_interval_ms.to_string(),
                "link_delay_min_ms" => self.link_delay_min_ms.to_string(),
                "link_delay_max_ms" => self.link_delay_max_ms.to_string(),
                "fog_cloud_delay_ms" => self.fog_cloud_delay_ms.to_string(),
                "speed_min" => self.speed_min.to_string(),
                "speed_max" => self.speed_max.to_string(),
                "join_count" => self.join_count.to_string(),
                "join_at_ms" => self.join_at_ms.to_string(),
                "app_type" => self.app_type.clone(),
                "profile" => self.profile.clone(),
                "timing" => self.timing.to_string(),
                "seed" => self.seed.to_string(),
                _ => unreachable!(),
            };
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }
}
