//! Experiment configuration and its text format.
//!
//! The format is line based: `[section]` headers, `key = value` pairs and
//! `#` comments. Unknown keys, missing required keys and invalid values are
//! all collected and reported with their line numbers.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::channel::{Fading, PathLoss};
use crate::geometry::Arena;
use crate::mobility::{calibrate_brownian, MobilityModel, DEFAULT_LEG_DURATION};
use crate::queueing::{ArrivalProcess, ServicePolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render_issues(.issues))]
pub struct ConfigError {
    pub issues: Vec<Issue>,
}

fn render_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SingleQueue,
    Interacting,
    Static,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::SingleQueue => "single",
            Mode::Interacting => "interacting",
            Mode::Static => "static",
        }
    }
}

/// How the initial interferers are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Poisson count, uniform positions.
    Poisson,
    /// Exactly `round(Λ · area)` uniform points.
    FixedCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Static,
    RandomDirection,
    RandomWaypoint,
    Brownian,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Static,
        ModelKind::RandomDirection,
        ModelKind::RandomWaypoint,
        ModelKind::Brownian,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::RandomDirection => "rd",
            ModelKind::RandomWaypoint => "rwp",
            ModelKind::Brownian => "bm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Mobility as configured: a model family and a nominal speed. Brownian
/// motion is calibrated so its mean displacement over `calibration_step`
/// equals that of straight motion at the same speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilitySpec {
    pub kind: ModelKind,
    pub speed: f64,
    pub leg_duration: f64,
    /// Defaults to the simulation tick.
    pub calibration_step: Option<f64>,
}

impl MobilitySpec {
    pub fn new(kind: ModelKind, speed: f64) -> Self {
        Self {
            kind,
            speed,
            leg_duration: DEFAULT_LEG_DURATION,
            calibration_step: None,
        }
    }

    pub fn model(&self, tick: f64) -> crate::Result<MobilityModel> {
        match self.kind {
            ModelKind::Static => Ok(MobilityModel::Static),
            ModelKind::RandomDirection => MobilityModel::random_direction(self.speed),
            ModelKind::RandomWaypoint => MobilityModel::random_waypoint(self.speed, self.leg_duration),
            ModelKind::Brownian => {
                let scale = calibrate_brownian(self.speed, self.calibration_step.unwrap_or(tick))?;
                MobilityModel::brownian(scale.per_unit_time)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arena_side: f64,
    pub intensity: f64,
    pub placement: Placement,
    pub link_distance: f64,
    pub noise: f64,
    pub path_loss: PathLoss,
    pub signal_fading: Fading,
    pub interferer_fading: Fading,
    /// Fade coherence time; `None` means one tick.
    pub coherence: Option<f64>,
    pub mobility: MobilitySpec,
    pub policy: ServicePolicy,
    pub arrivals: ArrivalProcess,
    /// Tick length `Δ`.
    pub tick: f64,
    /// Slot length `δ`, a multiple of the tick.
    pub slot: f64,
    /// Number of slots.
    pub horizon: u64,
    /// Slots discarded before steady-state estimation; `None` means 20%.
    pub warmup: Option<u64>,
    pub replications: u64,
    pub batches: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for ExperimentConfig {
    /// The paper's single-queue parameter block with a short horizon.
    fn default() -> Self {
        Self {
            arena_side: 100.0,
            intensity: 0.1,
            placement: Placement::Poisson,
            link_distance: 0.3,
            noise: 0.0,
            path_loss: PathLoss::Bounded { exponent: 4.0 },
            signal_fading: Fading::unit_rayleigh(),
            interferer_fading: Fading::unit_rayleigh(),
            coherence: None,
            mobility: MobilitySpec::new(ModelKind::RandomDirection, 1.0),
            policy: ServicePolicy::TruncatedShannon { threshold: 8.0 },
            arrivals: ArrivalProcess::Bernoulli { rate: 1.2 },
            tick: 1e-3,
            slot: 1e-3,
            horizon: 10_000,
            warmup: None,
            replications: 1,
            batches: 30,
            seed: 1,
            mode: Mode::SingleQueue,
        }
    }
}

impl ExperimentConfig {
    pub fn arena(&self) -> Arena {
        Arena::new(self.arena_side).expect("validated arena")
    }

    pub fn ticks_per_slot(&self) -> u64 {
        (self.slot / self.tick).round() as u64
    }

    pub fn coherence_ticks(&self) -> u64 {
        self.coherence.map_or(1, |c| (c / self.tick).round().max(1.0) as u64)
    }

    pub fn warmup_slots(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 5)
    }

    pub fn mobility_model(&self) -> crate::Result<MobilityModel> {
        if self.mode == Mode::Static {
            return Ok(MobilityModel::Static);
        }
        self.mobility.model(self.tick)
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrivals.rate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues: Vec<Issue> = self
            .violations()
            .into_iter()
            .map(|message| Issue { line: None, message })
            .collect();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.arena_side) {
            v.push("arena side must be positive".into());
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            v.push("intensity must be non-negative".into());
        }
        if !pos(self.link_distance) {
            v.push("link distance must be positive".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            v.push("noise must be non-negative".into());
        }
        if !pos(self.tick) {
            v.push("tick must be positive".into());
        }
        if !pos(self.slot) {
            v.push("slot must be positive".into());
        } else if pos(self.tick) {
            let ratio = self.slot / self.tick;
            if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                v.push(format!(
                    "slot {} is not a positive integer multiple of tick {}",
                    self.slot, self.tick
                ));
            }
        }
        if let Some(c) = self.coherence {
            if !pos(c) {
                v.push("coherence must be positive".into());
            } else if pos(self.tick) {
                let ratio = c / self.tick;
                if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    v.push("coherence must be a positive integer multiple of tick".into());
                }
            }
        }
        if self.horizon == 0 {
            v.push("horizon must be at least one slot".into());
        }
        if let Some(w) = self.warmup {
            if w >= self.horizon {
                v.push("warmup must be shorter than the horizon".into());
            }
        }
        if self.replications == 0 {
            v.push("replications must be at least 1".into());
        }
        if self.batches < 2 {
            v.push("batches must be at least 2".into());
        }
        if !(self.mobility.speed >= 0.0 && self.mobility.speed.is_finite()) {
            v.push("speed must be non-negative".into());
        }
        if !pos(self.mobility.leg_duration) {
            v.push("leg duration must be positive".into());
        }
        if let Some(c) = self.mobility.calibration_step {
            if !pos(c) {
                v.push("calibration step must be positive".into());
            }
        }
        if let Some(t) = self.policy.threshold() {
            if !pos(t) {
                v.push("SINR threshold must be positive".into());
            }
        }
        if let Err(e) = self.arrivals.check(self.slot) {
            v.push(e.to_string().trim_start_matches("invalid parameter: ").to_string());
        }
        if self.mode == Mode::Interacting && self.coherence_ticks() != 1 {
            v.push("interacting mode redraws link fades every tick; coherence must equal tick".into());
        }
        v
    }

    /// Canonical text form; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[network]");
        let _ = writeln!(s, "side = {}", self.arena_side);
        let _ = writeln!(s, "intensity = {}", self.intensity);
        let _ = writeln!(
            s,
            "placement = {}",
            match self.placement {
                Placement::Poisson => "poisson",
                Placement::FixedCount => "fixed",
            }
        );
        let _ = writeln!(s, "\n[link]");
        let _ = writeln!(s, "distance = {}", self.link_distance);
        let _ = writeln!(s, "noise = {}", self.noise);
        match &self.path_loss {
            PathLoss::Bounded { exponent } => {
                let _ = writeln!(s, "path_loss = bounded\nexponent = {exponent}");
            }
            PathLoss::PowerLaw {
                scale,
                exponent,
                min_radius,
            } => {
                let _ = writeln!(
                    s,
                    "path_loss = power_law\nexponent = {exponent}\nscale = {scale}\nmin_radius = {min_radius}"
                );
            }
            PathLoss::Table(t) => {
                let _ = writeln!(
                    s,
                    "path_loss = table\ntable_radii = {}\ntable_gains = {}",
                    join(t.radii()),
                    join(t.gains())
                );
            }
        }
        let _ = writeln!(s, "\n[fading]");
        emit_fading(&mut s, "signal", &self.signal_fading);
        emit_fading(&mut s, "interferer", &self.interferer_fading);
        if let Some(c) = self.coherence {
            let _ = writeln!(s, "coherence = {c}");
        }
        let _ = writeln!(s, "\n[mobility]");
        let _ = writeln!(s, "model = {}", self.mobility.kind.name());
        let _ = writeln!(s, "speed = {}", self.mobility.speed);
        let _ = writeln!(s, "leg_duration = {}", self.mobility.leg_duration);
        if let Some(c) = self.mobility.calibration_step {
            let _ = writeln!(s, "calibration_step = {c}");
        }
        let _ = writeln!(s, "\n[queue]");
        match self.policy {
            ServicePolicy::Shannon => {
                let _ = writeln!(s, "policy = shannon");
            }
            ServicePolicy::TruncatedShannon { threshold } => {
                let _ = writeln!(s, "policy = truncated_shannon\nthreshold = {threshold}");
            }
            ServicePolicy::Indicator { threshold } => {
                let _ = writeln!(s, "policy = indicator\nthreshold = {threshold}");
            }
        }
        match self.arrivals {
            ArrivalProcess::Bernoulli { rate } => {
                let _ = writeln!(s, "arrivals = bernoulli\narrival_rate = {rate}");
            }
            ArrivalProcess::Deterministic { rate } => {
                let _ = writeln!(s, "arrivals = deterministic\narrival_rate = {rate}");
            }
        }
        let _ = writeln!(s, "\n[schedule]");
        let _ = writeln!(s, "tick = {}", self.tick);
        let _ = writeln!(s, "slot = {}", self.slot);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        if let Some(w) = self.warmup {
            let _ = writeln!(s, "warmup = {w}");
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "batches = {}", self.batches);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::read(text)?;
        raw.build()
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn emit_fading(s: &mut String, who: &str, f: &Fading) {
    match f {
        Fading::Rayleigh { rate } => {
            let _ = writeln!(s, "{who} = rayleigh\n{who}_rate = {rate}");
        }
        Fading::DeterministicUnit => {
            let _ = writeln!(s, "{who} = unit");
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("network", &["side", "intensity", "placement"]),
    (
        "link",
        &[
            "distance",
            "noise",
            "path_loss",
            "exponent",
            "scale",
            "min_radius",
            "table_radii",
            "table_gains",
        ],
    ),
    (
        "fading",
        &["signal", "signal_rate", "interferer", "interferer_rate", "coherence"],
    ),
    ("mobility", &["model", "speed", "leg_duration", "calibration_step"]),
    ("queue", &["policy", "threshold", "arrivals", "arrival_rate"]),
    ("schedule", &["tick", "slot", "horizon", "warmup"]),
    ("run", &["mode", "replications", "batches", "seed"]),
];

const REQUIRED: &[(&str, &str)] = &[
    ("network", "intensity"),
    ("mobility", "model"),
    ("queue", "policy"),
    ("queue", "arrival_rate"),
    ("schedule", "tick"),
    ("schedule", "horizon"),
];

struct RawConfig {
    values: BTreeMap<(String, String), (usize, String)>,
    issues: Vec<Issue>,
}

impl RawConfig {
    fn read(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut issues = Vec::new();
        let mut section: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if KEYS.iter().any(|(s, _)| *s == name.trim()) => {
                        section = Some(name.trim().to_string());
                    }
                    Some(name) => {
                        issues.push(Issue {
                            line: Some(line_no),
                            message: format!("unknown section [{}]", name.trim()),
                        });
                        section = None;
                    }
                    None => issues.push(Issue {
                        line: Some(line_no),
                        message: "malformed section header".into(),
                    }),
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                issues.push(Issue {
                    line: Some(line_no),
                    message: format!("expected `key = value`, got `{line}`"),
                });
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            let Some(sec) = &section else {
                issues.push(Issue {
                    line: Some(line_no),
                    message: format!("key `{k}` outside a known section"),
                });
                continue;
            };
            let known = KEYS
                .iter()
                .find(|(s, _)| s == sec)
                .map(|(_, ks)| ks.contains(&k))
                .unwrap_or(false);
            if !known {
                issues.push(Issue {
                    line: Some(line_no),
                    message: format!("unknown key `{k}` in [{sec}]"),
                });
                continue;
            }
            if let Some((prev, _)) = values.insert((sec.clone(), k.to_string()), (line_no, v.to_string())) {
                issues.push(Issue {
                    line: Some(line_no),
                    message: format!("duplicate key `{k}` (first set on line {prev})"),
                });
            }
        }
        for (sec, key) in REQUIRED {
            if !values.contains_key(&(sec.to_string(), key.to_string())) {
                issues.push(Issue {
                    line: None,
                    message: format!("missing required key `{key}` in [{sec}]"),
                });
            }
        }
        Ok(Self { values, issues })
    }

    fn get(&self, sec: &str, key: &str) -> Option<&(usize, String)> {
        self.values.get(&(sec.to_string(), key.to_string()))
    }

    fn line(&self, sec: &str, key: &str) -> Option<usize> {
        self.get(sec, key).map(|(l, _)| *l)
    }

    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue {
            line,
            message: message.into(),
        });
    }

    fn f64(&mut self, sec: &str, key: &str, default: f64) -> f64 {
        match self.get(sec, key).cloned() {
            None => default,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => {
                    self.issue(Some(line), format!("`{key}` must be a finite number, got `{v}`"));
                    default
                }
            },
        }
    }

    fn opt_f64(&mut self, sec: &str, key: &str) -> Option<f64> {
        self.get(sec, key)?;
        Some(self.f64(sec, key, f64::NAN))
    }

    fn u64(&mut self, sec: &str, key: &str, default: u64) -> u64 {
        match self.get(sec, key).cloned() {
            None => default,
            Some((line, v)) => v.parse::<u64>().unwrap_or_else(|_| {
                self.issue(Some(line), format!("`{key}` must be a non-negative integer, got `{v}`"));
                default
            }),
        }
    }

    fn word(&self, sec: &str, key: &str) -> Option<(usize, String)> {
        self.get(sec, key).cloned()
    }

    fn list(&mut self, sec: &str, key: &str) -> Vec<f64> {
        let Some((line, v)) = self.get(sec, key).cloned() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for item in v.split(',') {
            match item.trim().parse::<f64>() {
                Ok(x) => out.push(x),
                Err(_) => self.issue(Some(line), format!("`{key}` entry `{}` is not a number", item.trim())),
            }
        }
        out
    }

    fn fading(&mut self, who: &str) -> Fading {
        let rate_key = format!("{who}_rate");
        let rate = self.f64("fading", &rate_key, 1.0);
        match self.word("fading", who) {
            None => Fading::Rayleigh { rate },
            Some((_, w)) if w == "rayleigh" => match Fading::rayleigh(rate) {
                Ok(f) => f,
                Err(e) => {
                    let line = self.line("fading", &rate_key);
                    self.issue(line, e.to_string());
                    Fading::unit_rayleigh()
                }
            },
            Some((_, w)) if w == "unit" => Fading::DeterministicUnit,
            Some((line, w)) => {
                self.issue(Some(line), format!("unknown fading `{w}` (rayleigh | unit)"));
                Fading::unit_rayleigh()
            }
        }
    }

    fn build(mut self) -> Result<ExperimentConfig, ConfigError> {
        let d = ExperimentConfig::default();
        let arena_side = self.f64("network", "side", d.arena_side);
        let intensity = self.f64("network", "intensity", d.intensity);
        let placement = match self.word("network", "placement") {
            None => Placement::Poisson,
            Some((_, w)) if w == "poisson" => Placement::Poisson,
            Some((_, w)) if w == "fixed" => Placement::FixedCount,
            Some((line, w)) => {
                self.issue(Some(line), format!("unknown placement `{w}` (poisson | fixed)"));
                Placement::Poisson
            }
        };
        let link_distance = self.f64("link", "distance", d.link_distance);
        let noise = self.f64("link", "noise", d.noise);
        let exponent = self.f64("link", "exponent", 4.0);
        let path_loss = match self
            .word("link", "path_loss")
            .map(|(l, w)| (Some(l), w))
            .unwrap_or((None, "bounded".into()))
        {
            (line, w) if w == "bounded" => PathLoss::bounded(exponent).map_err(|e| (line, e.to_string())),
            (line, w) if w == "power_law" => {
                let scale = self.f64("link", "scale", 1.0);
                let min_radius = self.f64("link", "min_radius", 1e-6 * link_distance);
                PathLoss::power_law(scale, exponent, min_radius).map_err(|e| (line, e.to_string()))
            }
            (line, w) if w == "table" => {
                let radii = self.list("link", "table_radii");
                let gains = self.list("link", "table_gains");
                PathLoss::table(radii, gains).map_err(|e| (line, e.to_string()))
            }
            (line, w) => Err((line, format!("unknown path_loss `{w}` (bounded | power_law | table)"))),
        }
        .unwrap_or_else(|(line, msg)| {
            self.issue(line, msg);
            d.path_loss.clone()
        });
        let signal_fading = self.fading("signal");
        let interferer_fading = self.fading("interferer");
        let coherence = self.opt_f64("fading", "coherence");

        let kind = match self.word("mobility", "model") {
            None => d.mobility.kind,
            Some((line, w)) => ModelKind::parse(&w).unwrap_or_else(|| {
                self.issue(
                    Some(line),
                    format!("unknown mobility model `{w}` (static | rd | rwp | bm)"),
                );
                d.mobility.kind
            }),
        };
        if kind != ModelKind::Static && self.get("mobility", "speed").is_none() {
            self.issue(None, "missing required key `speed` in [mobility]");
        }
        let mobility = MobilitySpec {
            kind,
            speed: self.f64("mobility", "speed", 0.0),
            leg_duration: self.f64("mobility", "leg_duration", DEFAULT_LEG_DURATION),
            calibration_step: self.opt_f64("mobility", "calibration_step"),
        };

        let threshold = self.f64("queue", "threshold", 8.0);
        let policy = match self.word("queue", "policy") {
            None => d.policy,
            Some((_, w)) if w == "shannon" => ServicePolicy::Shannon,
            Some((_, w)) if w == "truncated_shannon" => ServicePolicy::TruncatedShannon { threshold },
            Some((_, w)) if w == "indicator" => ServicePolicy::Indicator { threshold },
            Some((line, w)) => {
                self.issue(
                    Some(line),
                    format!("unknown policy `{w}` (shannon | truncated_shannon | indicator)"),
                );
                d.policy
            }
        };
        let rate = self.f64("queue", "arrival_rate", 0.0);
        let arrivals = match self.word("queue", "arrivals") {
            None => ArrivalProcess::Bernoulli { rate },
            Some((_, w)) if w == "bernoulli" => ArrivalProcess::Bernoulli { rate },
            Some((_, w)) if w == "deterministic" => ArrivalProcess::Deterministic { rate },
            Some((line, w)) => {
                self.issue(
                    Some(line),
                    format!("unknown arrivals `{w}` (bernoulli | deterministic)"),
                );
                ArrivalProcess::Bernoulli { rate }
            }
        };

        let tick = self.f64("schedule", "tick", d.tick);
        let slot = self.f64("schedule", "slot", tick);
        let horizon = self.u64("schedule", "horizon", d.horizon);
        let warmup = self
            .get("schedule", "warmup")
            .is_some()
            .then(|| self.u64("schedule", "warmup", 0));

        let mode = match self.word("run", "mode") {
            None => Mode::SingleQueue,
            Some((_, w)) if w == "single" => Mode::SingleQueue,
            Some((_, w)) if w == "interacting" => Mode::Interacting,
            Some((_, w)) if w == "static" => Mode::Static,
            Some((line, w)) => {
                self.issue(
                    Some(line),
                    format!("unknown mode `{w}` (single | interacting | static)"),
                );
                Mode::SingleQueue
            }
        };
        let replications = self.u64("run", "replications", 1);
        let batches = self.u64("run", "batches", d.batches as u64) as usize;
        let seed = self.u64("run", "seed", d.seed);

        let cfg = ExperimentConfig {
            arena_side,
            intensity,
            placement,
            link_distance,
            noise,
            path_loss,
            signal_fading,
            interferer_fading,
            coherence,
            mobility,
            policy,
            arrivals,
            tick,
            slot,
            horizon,
            warmup,
            replications,
            batches,
            seed,
            mode,
        };
        // attach the most relevant line to semantic violations
        for msg in cfg.violations() {
            let line = semantic_line(&msg).and_then(|(s, k)| self.line(s, k));
            self.issue(line, msg);
        }
        if self.issues.is_empty() {
            Ok(cfg)
        } else {
            self.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
            self.issues.dedup();
            Err(ConfigError { issues: self.issues })
        }
    }
}

fn semantic_line(msg: &str) -> Option<(&'static str, &'static str)> {
    let table: &[(&str, (&str, &str))] = &[
        ("arena side", ("network", "side")),
        ("intensity", ("network", "intensity")),
        ("link distance", ("link", "distance")),
        ("noise", ("link", "noise")),
        ("tick must", ("schedule", "tick")),
        ("slot", ("schedule", "slot")),
        ("coherence", ("fading", "coherence")),
        ("horizon", ("schedule", "horizon")),
        ("warmup", ("schedule", "warmup")),
        ("replications", ("run", "replications")),
        ("batches", ("run", "batches")),
        ("speed", ("mobility", "speed")),
        ("leg duration", ("mobility", "leg_duration")),
        ("calibration", ("mobility", "calibration_step")),
        ("threshold", ("queue", "threshold")),
        ("Bernoulli", ("queue", "arrival_rate")),
        ("arrival rate", ("queue", "arrival_rate")),
    ];
    table.iter().find(|(needle, _)| msg.contains(needle)).map(|(_, sk)| *sk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Velocity,
    Model,
    ArrivalRate,
    Load,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "velocity" | "speed" => Some(SweepAxis::Velocity),
            "model" | "mobility-model" => Some(SweepAxis::Model),
            "arrival_rate" | "lambda" => Some(SweepAxis::ArrivalRate),
            "load" | "rho" => Some(SweepAxis::Load),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Velocity => "velocity",
            SweepAxis::Model => "model",
            SweepAxis::ArrivalRate => "arrival_rate",
            SweepAxis::Load => "load",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Model(ModelKind),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Model(m) => write!(f, "{}", m.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
}

impl SweepSpec {
    /// Velocities must be ascending integer multiples of the smallest
    /// positive value, so every pair of speeds has a rational ratio.
    pub fn parse(axis: &str, values: &str) -> Result<Self, ConfigError> {
        let fail = |m: String| ConfigError {
            issues: vec![Issue { line: None, message: m }],
        };
        let axis = SweepAxis::parse(axis).ok_or_else(|| fail(format!("unknown sweep axis `{axis}`")))?;
        let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(fail("sweep needs at least one value".into()));
        }
        let values = if axis == SweepAxis::Model {
            items
                .iter()
                .map(|s| {
                    ModelKind::parse(s)
                        .map(SweepValue::Model)
                        .ok_or_else(|| fail(format!("unknown model `{s}`")))
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let nums = items
                .iter()
                .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| fail("sweep values must be non-negative numbers".into()))?;
            if axis == SweepAxis::Velocity {
                if nums.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(fail("velocity sweeps must be strictly ascending".into()));
                }
                if let Some(&base) = nums.iter().find(|&&x| x > 0.0) {
                    for &x in &nums {
                        let m = x / base;
                        if (m - m.round()).abs() > 1e-9 * m.max(1.0) {
                            return Err(fail(format!("velocity {x} is not an integer multiple of {base}")));
                        }
                    }
                }
            }
            if axis == SweepAxis::Load && nums.iter().any(|&r| r >= 1.0 || r <= 0.0) {
                return Err(fail("load values must lie in (0, 1)".into()));
            }
            nums.into_iter().map(SweepValue::Number).collect()
        };
        Ok(Self { axis, values })
    }

    /// The configuration for one sweep point. `mean_service` is `E[V(1)]`
    /// per slot, needed only for load sweeps.
    pub fn apply(
        &self,
        base: &ExperimentConfig,
        index: usize,
        mean_service: Option<f64>,
    ) -> crate::Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match (&self.axis, &self.values[index]) {
            (SweepAxis::Velocity, SweepValue::Number(v)) => cfg.mobility.speed = *v,
            (SweepAxis::Model, SweepValue::Model(m)) => cfg.mobility.kind = *m,
            (SweepAxis::ArrivalRate, SweepValue::Number(r)) => cfg.arrivals = cfg.arrivals.with_rate(*r),
            (SweepAxis::Load, SweepValue::Number(rho)) => {
                let ev = mean_service.ok_or_else(|| crate::Error::param("load sweeps need the mean slot service"))?;
                cfg.arrivals = cfg.arrivals.with_rate(rho * ev / cfg.slot);
            }
            _ => return Err(crate::Error::param("sweep value does not match its axis")),
        }
        Ok(cfg)
    }
}
