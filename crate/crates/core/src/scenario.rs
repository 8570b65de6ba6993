//! Experiment configuration.
//!
//! Scenarios are described by UTF-8 text with `key = value` lines and
//! `#` comments; omitted keys take the documented nominal defaults.
//! Unknown and duplicate keys are rejected with the offending key and
//! line number.

use crate::channel::{ChannelModel, RadioConfig};
use crate::geometry::PropagationConfig;
use crate::protocol::hello::ProtocolConfig;
use crate::{FlowId, NodeId};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config error: {message}")]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Routing protocol under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Cooperative-beamforming routing.
    Undercover,
    /// Local location-aided greedy baseline.
    LaunchLike,
    /// Global flooding-discovery baseline.
    CaodvLike,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Undercover, Protocol::LaunchLike, Protocol::CaodvLike];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Undercover => "undercover",
            Protocol::LaunchLike => "launch_like",
            Protocol::CaodvLike => "caodv_like",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "undercover" => Ok(Protocol::Undercover),
            "launch_like" => Ok(Protocol::LaunchLike),
            "caodv_like" => Ok(Protocol::CaodvLike),
            other => Err(ConfigError::new(format!(
                "unknown protocol '{other}' (expected undercover, launch_like or caodv_like)"
            ))),
        }
    }
}

/// Whether an established next hop is reused for subsequent packets of
/// the same flow or rediscovered per packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteReuse {
    PerFlow,
    PerPacket,
}

impl fmt::Display for RouteReuse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteReuse::PerFlow => "per_flow",
            RouteReuse::PerPacket => "per_packet",
        })
    }
}

impl std::str::FromStr for RouteReuse {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_flow" => Ok(RouteReuse::PerFlow),
            "per_packet" => Ok(RouteReuse::PerPacket),
            other => Err(ConfigError::new(format!(
                "unknown route_reuse '{other}' (expected per_flow or per_packet)"
            ))),
        }
    }
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_sus: usize,
    pub num_pus: usize,
    /// Side length of the square deployment area, meters.
    pub area_side: f64,
    pub su_range: f64,
    pub pu_range: f64,
    pub num_flows: usize,
    pub frequency: f64,
    /// Bandwidth used in all capacity formulas, bits/s at unit spectral
    /// efficiency.
    pub effective_bandwidth: f64,
    pub packet_size: usize,
    /// Long-run fraction of time each PU is active, in `[0, 1]`.
    pub pu_activity: f64,
    pub rate_per_source: f64,
    pub hello_period: f64,
    pub hello_timeout: f64,
    pub rrep_timeout: f64,
    /// One-way latency of a control packet on the common control channel.
    pub ctrl_latency: f64,
    pub coherence_time: f64,
    pub channel_variance: f64,
    pub tx_power: f64,
    pub noise_variance: f64,
    pub beta: f64,
    pub fsp_constant: f64,
    pub interference_limit: f64,
    pub protocol: Protocol,
    pub seed: u64,
    pub horizon: f64,
    pub replications: usize,
    pub route_reuse: RouteReuse,
    /// Mean ON+OFF cycle length of the PU activity process, seconds.
    pub pu_cycle_mean: f64,
    pub table_samples: usize,
    pub table_seed: u64,
    pub table_max_size: usize,
    pub table_max_pus: usize,
    /// Explicit placements for fixtures; random placement when absent.
    pub su_positions: Option<Vec<(f64, f64)>>,
    pub pu_positions: Option<Vec<(f64, f64)>>,
    /// Explicit flow endpoints for fixtures (`src>dst` pairs).
    pub flow_endpoints: Option<Vec<(NodeId, NodeId)>>,
}

impl Default for ScenarioConfig {
    /// Nominal experiment parameters.
    fn default() -> Self {
        Self {
            num_sus: 25,
            num_pus: 4,
            area_side: 250.0,
            su_range: 125.0,
            pu_range: 140.0,
            num_flows: 8,
            frequency: 2.4e9,
            effective_bandwidth: 1.5e6,
            packet_size: 512,
            pu_activity: 0.2,
            rate_per_source: 100_000.0,
            hello_period: 1.0,
            hello_timeout: 3.0,
            rrep_timeout: 0.02,
            ctrl_latency: 0.002,
            coherence_time: 20.0,
            channel_variance: 1.0,
            tx_power: 1.0,
            noise_variance: 1.0,
            beta: 0.5,
            fsp_constant: 9.9e-5,
            // Power of one unit-weight transmitter at the edge of its own
            // transmission disk: the default interference footprint of a
            // cooperative group equals the transmission range.
            interference_limit: 9.9e-5 / (125.0 * 125.0),
            protocol: Protocol::Undercover,
            seed: 0,
            horizon: 300.0,
            replications: 10,
            route_reuse: RouteReuse::PerFlow,
            pu_cycle_mean: 10.0,
            table_samples: 20_000,
            table_seed: 77,
            table_max_size: 10,
            table_max_pus: 3,
            su_positions: None,
            pu_positions: None,
            flow_endpoints: None,
        }
    }
}

impl ScenarioConfig {
    pub fn radio(&self) -> RadioConfig {
        RadioConfig::new(self.tx_power, self.noise_variance, self.effective_bandwidth)
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel::new(self.channel_variance, self.coherence_time)
    }

    pub fn propagation(&self) -> PropagationConfig {
        PropagationConfig::new(self.fsp_constant, self.interference_limit)
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig::new(self.hello_period, self.rrep_timeout, self.hello_timeout)
    }

    /// Field-level sanity checks.  Counts outside the nominal experiment
    /// ranges are allowed (fixtures use tiny topologies); physical
    /// nonsense is not.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(format!("{name} must be positive, got {v}")))
            }
        }
        if self.num_sus == 0 {
            return Err(ConfigError::new("num_sus must be at least 1"));
        }
        if self.num_flows == 0 {
            return Err(ConfigError::new("num_flows must be at least 1"));
        }
        positive("area_side", self.area_side)?;
        positive("su_range", self.su_range)?;
        positive("pu_range", self.pu_range)?;
        positive("frequency", self.frequency)?;
        positive("effective_bandwidth", self.effective_bandwidth)?;
        if self.packet_size == 0 {
            return Err(ConfigError::new("packet_size must be at least 1 byte"));
        }
        if !(0.0..=1.0).contains(&self.pu_activity) {
            return Err(ConfigError::new(format!(
                "pu_activity must lie in [0, 1], got {}",
                self.pu_activity
            )));
        }
        positive("rate_per_source", self.rate_per_source)?;
        positive("hello_period", self.hello_period)?;
        positive("hello_timeout", self.hello_timeout)?;
        positive("rrep_timeout", self.rrep_timeout)?;
        positive("ctrl_latency", self.ctrl_latency)?;
        positive("coherence_time", self.coherence_time)?;
        if !(self.channel_variance.is_finite() && self.channel_variance >= 0.0) {
            return Err(ConfigError::new("channel_variance must be non-negative"));
        }
        positive("tx_power", self.tx_power)?;
        positive("noise_variance", self.noise_variance)?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ConfigError::new(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        positive("fsp_constant", self.fsp_constant)?;
        positive("interference_limit", self.interference_limit)?;
        positive("horizon", self.horizon)?;
        if self.replications == 0 {
            return Err(ConfigError::new("replications must be at least 1"));
        }
        positive("pu_cycle_mean", self.pu_cycle_mean)?;
        if self.table_samples < 10_000 {
            return Err(ConfigError::new("table_samples must be at least 10000"));
        }
        if self.table_max_size <= self.table_max_pus {
            return Err(ConfigError::new("table_max_size must exceed table_max_pus"));
        }
        if let Some(p) = &self.su_positions {
            if p.len() != self.num_sus {
                return Err(ConfigError::new(format!(
                    "su_positions lists {} nodes but num_sus is {}",
                    p.len(),
                    self.num_sus
                )));
            }
        }
        if let Some(p) = &self.pu_positions {
            if p.len() != self.num_pus {
                return Err(ConfigError::new(format!(
                    "pu_positions lists {} nodes but num_pus is {}",
                    p.len(),
                    self.num_pus
                )));
            }
        }
        if let Some(f) = &self.flow_endpoints {
            if f.len() != self.num_flows {
                return Err(ConfigError::new(format!(
                    "flow_endpoints lists {} flows but num_flows is {}",
                    f.len(),
                    self.num_flows
                )));
            }
            for (s, d) in f {
                if *s == *d || *s as usize >= self.num_sus || *d as usize >= self.num_sus {
                    return Err(ConfigError::new(format!(
                        "flow endpoints {s}>{d} invalid for {} SUs",
                        self.num_sus
                    )));
                }
            }
        }
        Ok(())
    }

    /// Apply one `key = value` assignment; shared by the parser and the
    /// sweep axis machinery.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn p<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| ConfigError::new(format!("key '{key}': bad value '{value}' ({e})")))
        }
        match key {
            "num_sus" => self.num_sus = p(key, value)?,
            "num_pus" => self.num_pus = p(key, value)?,
            "area_side" => self.area_side = p(key, value)?,
            "su_range" => self.su_range = p(key, value)?,
            "pu_range" => self.pu_range = p(key, value)?,
            "num_flows" => self.num_flows = p(key, value)?,
            "frequency" => self.frequency = p(key, value)?,
            "effective_bandwidth" => self.effective_bandwidth = p(key, value)?,
            "packet_size" => self.packet_size = p(key, value)?,
            "pu_activity" => self.pu_activity = p(key, value)?,
            "rate_per_source" => self.rate_per_source = p(key, value)?,
            "hello_period" => self.hello_period = p(key, value)?,
            "hello_timeout" => self.hello_timeout = p(key, value)?,
            "rrep_timeout" => self.rrep_timeout = p(key, value)?,
            "ctrl_latency" => self.ctrl_latency = p(key, value)?,
            "coherence_time" => self.coherence_time = p(key, value)?,
            "channel_variance" => self.channel_variance = p(key, value)?,
            "tx_power" => self.tx_power = p(key, value)?,
            "noise_variance" => self.noise_variance = p(key, value)?,
            "beta" => self.beta = p(key, value)?,
            "fsp_constant" => self.fsp_constant = p(key, value)?,
            "interference_limit" => self.interference_limit = p(key, value)?,
            "protocol" => self.protocol = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            "horizon" => self.horizon = p(key, value)?,
            "replications" => self.replications = p(key, value)?,
            "route_reuse" => self.route_reuse = p(key, value)?,
            "pu_cycle_mean" => self.pu_cycle_mean = p(key, value)?,
            "table_samples" => self.table_samples = p(key, value)?,
            "table_seed" => self.table_seed = p(key, value)?,
            "table_max_size" => self.table_max_size = p(key, value)?,
            "table_max_pus" => self.table_max_pus = p(key, value)?,
            "su_positions" => self.su_positions = Some(parse_positions(key, value)?),
            "pu_positions" => self.pu_positions = Some(parse_positions(key, value)?),
            "flow_endpoints" => self.flow_endpoints = Some(parse_flows(key, value)?),
            other => {
                return Err(ConfigError::new(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Render as parseable `key = value` text.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("num_sus", self.num_sus.to_string());
        kv("num_pus", self.num_pus.to_string());
        kv("area_side", self.area_side.to_string());
        kv("su_range", self.su_range.to_string());
        kv("pu_range", self.pu_range.to_string());
        kv("num_flows", self.num_flows.to_string());
        kv("frequency", self.frequency.to_string());
        kv("effective_bandwidth", self.effective_bandwidth.to_string());
        kv("packet_size", self.packet_size.to_string());
        kv("pu_activity", self.pu_activity.to_string());
        kv("rate_per_source", self.rate_per_source.to_string());
        kv("hello_period", self.hello_period.to_string());
        kv("hello_timeout", self.hello_timeout.to_string());
        kv("rrep_timeout", self.rrep_timeout.to_string());
        kv("ctrl_latency", self.ctrl_latency.to_string());
        kv("coherence_time", self.coherence_time.to_string());
        kv("channel_variance", self.channel_variance.to_string());
        kv("tx_power", self.tx_power.to_string());
        kv("noise_variance", self.noise_variance.to_string());
        kv("beta", self.beta.to_string());
        kv("fsp_constant", self.fsp_constant.to_string());
        kv("interference_limit", self.interference_limit.to_string());
        kv("protocol", self.protocol.to_string());
        kv("seed", self.seed.to_string());
        kv("horizon", self.horizon.to_string());
        kv("replications", self.replications.to_string());
        kv("route_reuse", self.route_reuse.to_string());
        kv("pu_cycle_mean", self.pu_cycle_mean.to_string());
        kv("table_samples", self.table_samples.to_string());
        kv("table_seed", self.table_seed.to_string());
        kv("table_max_size", self.table_max_size.to_string());
        kv("table_max_pus", self.table_max_pus.to_string());
        if let Some(p) = &self.su_positions {
            kv("su_positions", render_positions(p));
        }
        if let Some(p) = &self.pu_positions {
            kv("pu_positions", render_positions(p));
        }
        if let Some(f) = &self.flow_endpoints {
            kv("flow_endpoints", render_flows(f));
        }
        out
    }
}

fn parse_positions(key: &str, value: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    let mut out = Vec::new();
    for (i, item) in value.split(';').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (x, y) = item.split_once(',').ok_or_else(|| {
            ConfigError::new(format!("key '{key}': entry {i} ('{item}') is not 'x,y'"))
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                ConfigError::new(format!("key '{key}': entry {i}: bad coordinate '{s}' ({e})"))
            })
        };
        out.push((parse(x)?, parse(y)?));
    }
    if out.is_empty() {
        return Err(ConfigError::new(format!("key '{key}': no positions given")));
    }
    Ok(out)
}

fn render_positions(p: &[(f64, f64)]) -> String {
    p.iter()
        .map(|(x, y)| format!("{x},{y}"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_flows(key: &str, value: &str) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    let mut out = Vec::new();
    for (i, item) in value.split(';').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (s, d) = item.split_once('>').ok_or_else(|| {
            ConfigError::new(format!("key '{key}': entry {i} ('{item}') is not 'src>dst'"))
        })?;
        let parse = |s: &str| {
            s.trim().parse::<NodeId>().map_err(|e| {
                ConfigError::new(format!("key '{key}': entry {i}: bad node id '{s}' ({e})"))
            })
        };
        out.push((parse(s)?, parse(d)?));
    }
    if out.is_empty() {
        return Err(ConfigError::new(format!("key '{key}': no flows given")));
    }
    Ok(out)
}

fn render_flows(f: &[(NodeId, NodeId)]) -> String {
    f.iter()
        .map(|(s, d)| format!("{s}>{d}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parse a scenario description.  An empty file yields the nominal
/// defaults; `interference_limit` defaults to the free-space power a
/// unit-weight transmitter leaves at the edge of its own transmission
/// disk (`c * P_T / su_range^2`) unless set explicitly.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut interference_set = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::new(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
        seen.push(key.to_string());
        cfg.apply_kv(key, value)
            .map_err(|e| ConfigError::new(format!("line {}: {}", lineno + 1, e.message)))?;
        if key == "interference_limit" {
            interference_set = true;
        }
    }
    if !interference_set {
        cfg.interference_limit = cfg.fsp_constant * cfg.tx_power / (cfg.su_range * cfg.su_range);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Per-replication seed derivation.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Flow id assigned to the k-th connection.
pub fn flow_id(k: usize) -> FlowId {
    k as FlowId
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_nominal_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.num_sus, 25);
        assert_eq!(cfg.num_pus, 4);
        assert_eq!(cfg.num_flows, 8);
        assert_eq!(cfg.packet_size, 512);
        assert_eq!(cfg.pu_activity, 0.2);
        assert_eq!(cfg.rate_per_source, 100_000.0);
        assert_eq!(cfg.area_side, 250.0);
    }

    #[test]
    fn negative_count_is_rejected() {
        assert!(parse_config("num_pus = -1").is_err());
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = parse_config("nom_sus = 10").unwrap_err();
        assert!(err.message.contains("nom_sus"));
        assert!(err.message.contains("line 1"));
    }

    #[test]
    fn duplicates_are_rejected() {
        assert!(parse_config("beta = 0.5\nbeta = 0.7").is_err());
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let cfg = parse_config("# a comment\n\nbeta = 0.25  # trailing\n").unwrap();
        assert_eq!(cfg.beta, 0.25);
    }

    #[test]
    fn round_trip_preserves_values() {
        let cfg = parse_config("pu_activity = 0.2\nprotocol = launch_like\nseed = 9").unwrap();
        let again = parse_config(&cfg.serialize()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.pu_activity, 0.2);
    }

    #[test]
    fn interference_limit_default_tracks_range_and_power() {
        // Default: unit-weight interference disk equals the tx disk.
        let cfg = parse_config("tx_power = 2\nsu_range = 100\nfsp_constant = 0.0001").unwrap();
        assert!((cfg.interference_limit - 0.0001 * 2.0 / 10_000.0).abs() < 1e-18);
        let explicit = parse_config("tx_power = 2\ninterference_limit = 0.5").unwrap();
        assert_eq!(explicit.interference_limit, 0.5);
    }

    #[test]
    fn fixture_lists_parse() {
        let text = "num_sus = 2\nnum_pus = 1\nnum_flows = 1\n\
                    su_positions = 0,0; 50,0\npu_positions = 100,0\nflow_endpoints = 0>1\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.su_positions.as_ref().unwrap().len(), 2);
        assert_eq!(cfg.flow_endpoints.as_ref().unwrap()[0], (0, 1));
        let again = parse_config(&cfg.serialize()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn mismatched_fixture_lengths_fail() {
        let text = "num_sus = 3\nsu_positions = 0,0; 50,0\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn beta_bounds_checked() {
        assert!(parse_config("beta = 1.5").is_err());
        assert!(parse_config("pu_activity = 1.5").is_err());
    }
}
