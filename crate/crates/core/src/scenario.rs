//! Scenario files, parameter sweeps and CSV output.
//!
//! A scenario file is flat `key = value` text. Top-level keys describe the
//! network; `[dsdv]`, `[fsr]`, `[olsr]`, `[olsr_m]` and `[analytic]`
//! sections override protocol and model parameters. `#` and `;` start
//! comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic::ScopeReading;
use crate::error::{ConfigError, SimError};
use crate::medium::RadioParams;
use crate::mobility::init_positions;
use crate::network::{ProtocolParams, RunOutput, SimSetup, Simulation, DEFAULT_LSM_INTERVAL};
use crate::protocol::ProtocolKind;
use crate::sim::{RandomSource, Stream};
use crate::traffic::random_flows;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub field_side: f64,
    pub range: f64,
    pub bandwidth: f64,
    pub speed: f64,
    pub pause: f64,
    pub duration: f64,
    pub flows: usize,
    pub flow_rate: f64,
    pub pkt_size: u32,
    /// Traffic starts once routing has had time to converge.
    pub flow_start: f64,
    pub seed: u64,
    pub jitter_max: f64,
    pub lsm_interval: f64,
    pub params: ProtocolParams,
    pub scope_reading: ScopeReading,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            protocol: ProtocolKind::Dsdv,
            n: 50,
            field_side: 1000.0,
            range: 250.0,
            bandwidth: 2_000_000.0,
            speed: 15.0,
            pause: 2.0,
            duration: 900.0,
            flows: 10,
            flow_rate: 4.0,
            pkt_size: 512,
            flow_start: 30.0,
            seed: 1,
            jitter_max: 0.001,
            lsm_interval: DEFAULT_LSM_INTERVAL,
            params: ProtocolParams::standard(),
            scope_reading: ScopeReading::PerNode,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::invalid(key, format!("expected a boolean, got `{raw}`"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Top,
    Dsdv,
    Fsr,
    Olsr,
    OlsrM,
    Analytic,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "scenario" => Section::Top,
            "dsdv" => Section::Dsdv,
            "fsr" => Section::Fsr,
            "olsr" => Section::Olsr,
            "olsr_m" => Section::OlsrM,
            "analytic" => Section::Analytic,
            _ => return None,
        })
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parses and validates; defaults fill every unset key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut section = Section::Top;
        let mut lines: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?;
                section = Section::parse(name.trim()).ok_or_else(|| ConfigError::UnknownSection {
                    line,
                    section: name.trim().to_string(),
                })?;
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let at_line = |e: ConfigError| match e {
                ConfigError::Invalid { key, reason } => ConfigError::Parse {
                    line,
                    message: format!("invalid value for `{key}`: {reason}"),
                },
                other => other,
            };
            match cfg.set(section, key, value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
                Err(e) => return Err(at_line(e)),
            }
            lines.insert(key.to_string(), line);
        }
        cfg.validate().map_err(|e| match e {
            ConfigError::Invalid { key, reason } => match lines.get(&key) {
                Some(&line) => ConfigError::Parse {
                    line,
                    message: format!("invalid value for `{key}`: {reason}"),
                },
                None => ConfigError::Invalid { key, reason },
            },
            other => other,
        })?;
        Ok(cfg)
    }

    /// Returns `Ok(false)` for keys unknown in `section`.
    fn set(&mut self, section: Section, key: &str, v: &str) -> Result<bool, ConfigError> {
        match section {
            Section::Top => match key {
                "protocol" => {
                    self.protocol = ProtocolKind::parse(v)
                        .ok_or_else(|| ConfigError::invalid(key, format!("unknown protocol `{v}`")))?
                }
                "n" => self.n = parse_value(key, v)?,
                "field_side" => self.field_side = parse_value(key, v)?,
                "range" => self.range = parse_value(key, v)?,
                "bandwidth" => self.bandwidth = parse_value(key, v)?,
                "speed" => self.speed = parse_value(key, v)?,
                "pause" => self.pause = parse_value(key, v)?,
                "duration" => self.duration = parse_value(key, v)?,
                "flows" => self.flows = parse_value(key, v)?,
                "flow_rate" => self.flow_rate = parse_value(key, v)?,
                "pkt_size" => self.pkt_size = parse_value(key, v)?,
                "flow_start" => self.flow_start = parse_value(key, v)?,
                "seed" => self.seed = parse_value(key, v)?,
                "jitter_max" => self.jitter_max = parse_value(key, v)?,
                "lsm_interval" => self.lsm_interval = parse_value(key, v)?,
                _ => return Ok(false),
            },
            Section::Dsdv => {
                let d = &mut self.params.dsdv;
                match key {
                    "ru_per_interval" => d.ru_per_interval = parse_value(key, v)?,
                    "settling_time" => d.settling_time = parse_value(key, v)?,
                    "buffer_during_settling" => d.buffer_during_settling = parse_bool(key, v)?,
                    "buffer_capacity" => d.buffer_capacity = parse_value(key, v)?,
                    _ => return Ok(false),
                }
            }
            Section::Fsr => {
                let f = &mut self.params.fsr;
                match key {
                    "intra_ttl" => f.intra_ttl = parse_value(key, v)?,
                    "intra_interval" => f.intra_interval = parse_value(key, v)?,
                    "inter_ttl" => f.inter_ttl = parse_value(key, v)?,
                    "inter_interval" => f.inter_interval = parse_value(key, v)?,
                    _ => return Ok(false),
                }
            }
            Section::Olsr | Section::OlsrM => {
                let o = if section == Section::Olsr {
                    &mut self.params.olsr
                } else {
                    &mut self.params.olsr_m
                };
                match key {
                    "hello_interval" => o.hello_interval = parse_value(key, v)?,
                    "tc_interval" => o.tc_interval = parse_value(key, v)?,
                    "neighbor_hold" => o.neighbor_hold = parse_value(key, v)?,
                    "topology_hold" => o.topology_hold = parse_value(key, v)?,
                    _ => return Ok(false),
                }
            }
            Section::Analytic => match key {
                "scope_reading" => {
                    self.scope_reading = match v {
                        "per_node" => ScopeReading::PerNode,
                        "uniform" => ScopeReading::Uniform,
                        _ => {
                            return Err(ConfigError::invalid(
                                key,
                                format!("expected `per_node` or `uniform`, got `{v}`"),
                            ))
                        }
                    }
                }
                _ => return Ok(false),
            },
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be positive, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(ConfigError::invalid("n", "must be positive"));
        }
        for (key, v) in [
            ("field_side", self.field_side),
            ("range", self.range),
            ("bandwidth", self.bandwidth),
            ("speed", self.speed),
            ("duration", self.duration),
            ("flow_rate", self.flow_rate),
            ("lsm_interval", self.lsm_interval),
        ] {
            positive(key, v)?;
        }
        if self.pkt_size == 0 {
            return Err(ConfigError::invalid("pkt_size", "must be positive"));
        }
        if !(self.pause >= 0.0 && self.pause <= self.duration) {
            return Err(ConfigError::invalid(
                "pause",
                format!("{} must lie in [0, duration = {}]", self.pause, self.duration),
            ));
        }
        if !(self.jitter_max >= 0.0) {
            return Err(ConfigError::invalid("jitter_max", "must be non-negative"));
        }
        if !(self.flow_start >= 0.0 && self.flow_start < self.duration) {
            return Err(ConfigError::invalid(
                "flow_start",
                format!("{} must lie in [0, duration)", self.flow_start),
            ));
        }
        if self.flows > 0 && self.n < 2 {
            return Err(ConfigError::invalid("flows", "traffic needs at least two nodes"));
        }
        let d = &self.params.dsdv;
        positive("ru_per_interval", d.ru_per_interval)?;
        if !(d.settling_time >= 0.0) {
            return Err(ConfigError::invalid("settling_time", "must be non-negative"));
        }
        let f = &self.params.fsr;
        positive("intra_interval", f.intra_interval)?;
        positive("inter_interval", f.inter_interval)?;
        if f.intra_ttl == 0 || f.inter_ttl < f.intra_ttl {
            return Err(ConfigError::invalid(
                "inter_ttl",
                format!("scopes must satisfy 0 < intra_ttl ({}) <= inter_ttl ({})", f.intra_ttl, f.inter_ttl),
            ));
        }
        if f.intra_interval > f.inter_interval {
            return Err(ConfigError::invalid(
                "inter_interval",
                "the outer scope must not refresh faster than the inner one",
            ));
        }
        for o in [&self.params.olsr, &self.params.olsr_m] {
            positive("hello_interval", o.hello_interval)?;
            positive("tc_interval", o.tc_interval)?;
            if !(o.neighbor_hold > o.hello_interval) {
                return Err(ConfigError::invalid("neighbor_hold", "must exceed hello_interval"));
            }
            if !(o.topology_hold > 0.0) {
                return Err(ConfigError::invalid("topology_hold", "must be positive"));
            }
        }
        Ok(())
    }

    /// Draws placement and flows from the seed and resolves a run setup.
    pub fn setup(&self) -> Result<SimSetup, ConfigError> {
        self.validate()?;
        let mut placement = RandomSource::stream(self.seed, Stream::Placement);
        let positions = init_positions(self.n, self.field_side, &mut placement)?;
        let mut flow_rng = RandomSource::stream(self.seed, Stream::Flows);
        let flows = random_flows(
            self.n,
            self.flows,
            self.flow_rate,
            self.pkt_size,
            (self.flow_start, self.duration),
            &mut flow_rng,
        )?;
        Ok(SimSetup {
            protocol: self.protocol,
            params: self.params.clone(),
            radio: RadioParams {
                range: self.range,
                bandwidth: self.bandwidth,
                jitter_max: self.jitter_max,
            },
            field_side: self.field_side,
            speed: self.speed,
            pause: self.pause,
            duration: self.duration,
            lsm_interval: self.lsm_interval,
            seed: self.seed,
            positions,
            flows,
            trace: false,
        })
    }

    pub fn run(&self) -> Result<RunOutput, SimError> {
        let mut out = Simulation::new(self.setup()?)?.run()?;
        if self.scope_reading != out.analytic.scope_reading {
            out.analytic.scope_reading = self.scope_reading;
            out.reconciliation = crate::analytic::reconcile(
                self.protocol,
                &out.analytic,
                &out.per_node,
                out.metrics.ce_control_tx,
            )
            .expect("inputs already validated");
        }
        Ok(out)
    }

    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::None => {}
            SweepAxis::Pause => c.pause = value,
            SweepAxis::N => c.n = value as usize,
            SweepAxis::FlowRate => c.flow_rate = value,
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Single configuration, no axis.
    None,
    Pause,
    N,
    FlowRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::Pause => "pause",
            SweepAxis::N => "n",
            SweepAxis::FlowRate => "flow_rate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: u32,
}

impl SweepSpec {
    pub fn single(seeds: u32) -> Self {
        SweepSpec {
            axis: SweepAxis::None,
            values: vec![f64::NAN],
            seeds,
        }
    }

    /// Parses `axis=v1,v2,...`.
    pub fn parse(spec: &str, seeds: u32) -> Result<Self, ConfigError> {
        let (axis, values) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid("sweep", format!("expected axis=v1,v2,..., got `{spec}`")))?;
        let axis = match axis.trim() {
            "pause" => SweepAxis::Pause,
            "n" => SweepAxis::N,
            "flow_rate" => SweepAxis::FlowRate,
            other => return Err(ConfigError::invalid("sweep", format!("unknown axis `{other}`"))),
        };
        let values = values
            .split(',')
            .map(|v| parse_value::<f64>("sweep", v.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let s = SweepSpec { axis, values, seeds };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds == 0 {
            return Err(ConfigError::invalid("seeds", "must be at least 1"));
        }
        if self.axis == SweepAxis::None {
            return Ok(());
        }
        if self.values.is_empty() {
            return Err(ConfigError::invalid("sweep", "no values"));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ConfigError::invalid("sweep", "values must be strictly increasing"));
        }
        if self.axis == SweepAxis::N && self.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(ConfigError::invalid("sweep", "node counts must be positive integers"));
        }
        Ok(())
    }
}

/// One CSV line: a single run, or the mean over a value's seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub protocol: ProtocolKind,
    pub axis: SweepAxis,
    pub axis_value: f64,
    /// `None` marks the aggregate row.
    pub seed: Option<u64>,
    pub result: Result<RowValues, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowValues {
    pub throughput_bps: f64,
    pub ct_mean_s: Option<f64>,
    pub ce_control_tx: f64,
    pub ce_control_bytes: f64,
    pub sent: f64,
    pub delivered: f64,
    pub dropped_no_route: f64,
    pub dropped_ttl: f64,
    pub dropped_buffer: f64,
    pub analytic_ce_total: f64,
    pub analytic_sim_ratio: Option<f64>,
}

impl RowValues {
    fn from_run(out: &RunOutput) -> Self {
        let m = &out.metrics;
        RowValues {
            throughput_bps: m.throughput,
            ct_mean_s: m.ct_mean,
            ce_control_tx: m.ce_control_tx as f64,
            ce_control_bytes: m.ce_control_bytes as f64,
            sent: m.sent as f64,
            delivered: m.delivered as f64,
            dropped_no_route: m.dropped_no_route as f64,
            dropped_ttl: m.dropped_ttl as f64,
            dropped_buffer: m.dropped_buffer as f64,
            analytic_ce_total: out.reconciliation.analytic_ce,
            analytic_sim_ratio: out.reconciliation.ratio,
        }
    }

    fn mean(rows: &[&RowValues]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let k = rows.len() as f64;
        let avg = |f: fn(&RowValues) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / k;
        let avg_opt = |f: fn(&RowValues) -> Option<f64>| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Some(RowValues {
            throughput_bps: avg(|r| r.throughput_bps),
            ct_mean_s: avg_opt(|r| r.ct_mean_s),
            ce_control_tx: avg(|r| r.ce_control_tx),
            ce_control_bytes: avg(|r| r.ce_control_bytes),
            sent: avg(|r| r.sent),
            delivered: avg(|r| r.delivered),
            dropped_no_route: avg(|r| r.dropped_no_route),
            dropped_ttl: avg(|r| r.dropped_ttl),
            dropped_buffer: avg(|r| r.dropped_buffer),
            analytic_ce_total: avg(|r| r.analytic_ce_total),
            analytic_sim_ratio: avg_opt(|r| r.analytic_sim_ratio),
        })
    }
}

pub const CSV_HEADER: &str = "protocol,axis,axis_value,seed,throughput_bps,ct_mean_s,ce_control_tx,ce_control_bytes,sent,delivered,dropped_no_route,dropped_ttl,dropped_buffer,analytic_ce_total,analytic_sim_ratio";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.result.is_err()
    }

    pub fn to_csv(&self) -> String {
        let axis_value = if self.axis == SweepAxis::None {
            String::new()
        } else {
            self.axis_value.to_string()
        };
        let seed = self.seed.map_or("mean".to_string(), |s| s.to_string());
        let mut line = format!("{},{},{},{}", self.protocol, self.axis.name(), axis_value, seed);
        match &self.result {
            Ok(r) => {
                let _ = write!(
                    line,
                    ",{},{},{},{},{},{},{},{},{},{},{}",
                    r.throughput_bps,
                    opt(r.ct_mean_s),
                    r.ce_control_tx,
                    r.ce_control_bytes,
                    r.sent,
                    r.delivered,
                    r.dropped_no_route,
                    r.dropped_ttl,
                    r.dropped_buffer,
                    r.analytic_ce_total,
                    opt(r.analytic_sim_ratio),
                );
            }
            Err(_) => line.push_str(&",".repeat(11)),
        }
        line
    }
}

/// Runs every (value, seed) pair in parallel; rows come back in value
/// order with each value's seed rows followed by their mean.
pub fn run_sweep(cfg: &ScenarioConfig, sweep: &SweepSpec) -> Result<Vec<SweepRow>, ConfigError> {
    sweep.validate()?;
    let jobs: Vec<(f64, u64)> = sweep
        .values
        .iter()
        .flat_map(|&v| (0..u64::from(sweep.seeds)).map(move |k| (v, cfg.seed + k)))
        .collect();
    for &(v, _) in &jobs {
        cfg.with_axis(sweep.axis, v).validate()?;
    }
    let results: Vec<Result<RowValues, String>> = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let mut c = cfg.with_axis(sweep.axis, v);
            c.seed = seed;
            c.run().map(|out| RowValues::from_run(&out)).map_err(|e| e.to_string())
        })
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() + sweep.values.len());
    let per_value = sweep.seeds as usize;
    for (vi, &v) in sweep.values.iter().enumerate() {
        let chunk = &results[vi * per_value..(vi + 1) * per_value];
        for (k, r) in chunk.iter().enumerate() {
            rows.push(SweepRow {
                protocol: cfg.protocol,
                axis: sweep.axis,
                axis_value: v,
                seed: Some(cfg.seed + k as u64),
                result: r.clone(),
            });
        }
        let ok: Vec<&RowValues> = chunk.iter().filter_map(|r| r.as_ref().ok()).collect();
        rows.push(SweepRow {
            protocol: cfg.protocol,
            axis: sweep.axis,
            axis_value: v,
            seed: None,
            result: RowValues::mean(&ok).ok_or_else(|| "every run failed".to_string()),
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ScenarioConfig::parse("protocol = dsdv\nn = 10\n").unwrap();
        assert_eq!(c.n, 10);
        assert_eq!(c.duration, 900.0);
        assert_eq!(c.field_side, 1000.0);
        assert_eq!(c.params.dsdv.ru_per_interval, 15.0);
        assert_eq!(c.params.fsr.intra_ttl, 2);
        assert_eq!(c.params.olsr.hello_interval, 2.0);
        assert_eq!(c.params.olsr_m.tc_interval, 2.5);
    }

    #[test]
    fn pause_beyond_duration_rejected_with_line() {
        let err = ScenarioConfig::parse("protocol = dsdv\n\npause = 1000\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("pause"));
    }

    #[test]
    fn unknown_key_named() {
        let err = ScenarioConfig::parse("protocol = fsr\nwarp = 9\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { line: 2, key: "warp".into() });
        let err = ScenarioConfig::parse("[fsr]\nhello_interval = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }));
    }

    #[test]
    fn sections_override() {
        let c = ScenarioConfig::parse(
            "protocol = olsr_m # comment\n[olsr_m]\nhello_interval = 0.5\nneighbor_hold = 1.5\n[dsdv]\nsettling_time = 0\n[analytic]\nscope_reading = uniform\n",
        )
        .unwrap();
        assert_eq!(c.protocol, ProtocolKind::OlsrM);
        assert_eq!(c.params.olsr_m.hello_interval, 0.5);
        assert_eq!(c.params.dsdv.settling_time, 0.0);
        assert_eq!(c.scope_reading, ScopeReading::Uniform);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(ScenarioConfig::parse("n 10"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(
            ScenarioConfig::parse("[tora]"),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
        assert!(matches!(ScenarioConfig::parse("n = ten"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn sweep_parsing() {
        let s = SweepSpec::parse("pause=0,100,900", 3).unwrap();
        assert_eq!(s.axis, SweepAxis::Pause);
        assert_eq!(s.values, vec![0.0, 100.0, 900.0]);
        assert!(SweepSpec::parse("pause=100,0", 1).is_err());
        assert!(SweepSpec::parse("n=10,10.5", 1).is_err());
        assert!(SweepSpec::parse("speed=1,2", 1).is_err());
    }

    #[test]
    fn sweep_row_layout() {
        let cfg = ScenarioConfig {
            n: 6,
            duration: 40.0,
            flows: 2,
            flow_start: 20.0,
            field_side: 400.0,
            ..ScenarioConfig::default()
        };
        let sweep = SweepSpec::parse("pause=0,40", 2).unwrap();
        let rows = run_sweep(&cfg, &sweep).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.seed.is_none()).count(), 2);
        assert!(rows.iter().all(|r| !r.is_error()));
        let csv = to_csv(&rows);
        assert!(csv.lines().all(|l| l.split(',').count() == 15));
        let mean = rows[2].result.as_ref().unwrap();
        let a = rows[0].result.as_ref().unwrap();
        let b = rows[1].result.as_ref().unwrap();
        assert_eq!(mean.sent, (a.sent + b.sent) / 2.0);
    }
}
