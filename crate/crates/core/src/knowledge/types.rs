use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result, ValidationError};
use crate::spectrum::{DataSignature, ModelId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RollingMae,
    #[serde(alias = "energy_per_inference")]
    EnergyPerInferenceJ,
    LatencyMs,
    DriftScore,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RollingMae => "rolling_mae",
            Metric::EnergyPerInferenceJ => "energy_per_inference_j",
            Metric::LatencyMs => "latency_ms",
            Metric::DriftScore => "drift_score",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, ValidationError> {
        match s {
            "rolling_mae" => Ok(Metric::RollingMae),
            "energy_per_inference_j" | "energy_per_inference" => Ok(Metric::EnergyPerInferenceJ),
            "latency_ms" => Ok(Metric::LatencyMs),
            "drift_score" => Ok(Metric::DriftScore),
            other => Err(ValidationError::new("", format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        }
    }

    /// Whether `value` lies outside a boundary at `threshold`.
    pub fn breached(self, value: f64, threshold: f64) -> bool {
        match self {
            Direction::Upper => value > threshold,
            Direction::Lower => value < threshold,
        }
    }
}

impl FromStr for Direction {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, ValidationError> {
        match s {
            "upper" => Ok(Direction::Upper),
            "lower" => Ok(Direction::Lower),
            other => Err(ValidationError::new("", format!("unknown direction `{other}`"))),
        }
    }
}

/// A bound on one runtime metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SustainabilityGoal {
    pub metric: Metric,
    pub direction: Direction,
    pub static_threshold: f64,
    #[serde(default)]
    pub dynamic: bool,
    #[serde(default = "default_alpha")]
    pub ewma_alpha: f64,
    #[serde(default = "default_band_k")]
    pub band_k: f64,
    #[serde(default = "default_hysteresis")]
    pub hysteresis_n: u32,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_band_k() -> f64 {
    3.0
}
fn default_hysteresis() -> u32 {
    3
}

impl SustainabilityGoal {
    /// A static goal with the default hysteresis.
    pub fn fixed(metric: Metric, direction: Direction, threshold: f64) -> Self {
        Self {
            metric,
            direction,
            static_threshold: threshold,
            dynamic: false,
            ewma_alpha: default_alpha(),
            band_k: default_band_k(),
            hysteresis_n: default_hysteresis(),
        }
    }

    pub fn key(&self) -> (Metric, Direction) {
        (self.metric, self.direction)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !self.static_threshold.is_finite() {
            return Err(ValidationError::new("static_threshold", "must be finite"));
        }
        if self.hysteresis_n < 1 {
            return Err(ValidationError::new("hysteresis_n", "must be >= 1"));
        }
        if self.dynamic {
            if !(self.ewma_alpha > 0.0 && self.ewma_alpha <= 1.0) {
                return Err(ValidationError::new("ewma_alpha", "must be in (0, 1]"));
            }
            if !(self.band_k.is_finite() && self.band_k >= 0.0) {
                return Err(ValidationError::new("band_k", "must be a finite value >= 0"));
            }
        }
        Ok(())
    }
}

/// Checks every goal and rejects duplicate (metric, direction) pairs. Field
/// paths are rooted at `goals`.
pub fn validate_goals(goals: &[SustainabilityGoal]) -> Result<(), ValidationError> {
    for (i, g) in goals.iter().enumerate() {
        g.validate().map_err(|e| e.within(format!("goals[{i}]")))?;
        if goals[..i].iter().any(|o| o.key() == g.key()) {
            return Err(ValidationError::new(
                format!("goals[{i}].metric"),
                format!("duplicate goal for ({}, {})", g.metric, g.direction.as_str()),
            ));
        }
    }
    Ok(())
}

/// Parses a goal list from JSON, reporting field paths for type errors too.
pub fn parse_goals(value: &Value) -> Result<Vec<SustainabilityGoal>, ValidationError> {
    let items = value
        .as_array()
        .ok_or_else(|| ValidationError::new("goals", "expected a list of goals"))?;
    let mut goals = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let at = |e: ValidationError| e.within(format!("goals[{i}]"));
        let obj = item
            .as_object()
            .ok_or_else(|| ValidationError::new(format!("goals[{i}]"), "expected an object"))?;
        let metric: Metric = str_field(obj, "metric").map_err(at)?.parse().map_err(|e: ValidationError| at(e.within("metric")))?;
        let direction: Direction = str_field(obj, "direction")
            .map_err(at)?
            .parse()
            .map_err(|e: ValidationError| at(e.within("direction")))?;
        let mut g = SustainabilityGoal::fixed(metric, direction, num_field(obj, "static_threshold").map_err(at)?);
        if let Some(v) = obj.get("dynamic") {
            g.dynamic = v.as_bool().ok_or_else(|| at(ValidationError::new("dynamic", "expected a boolean")))?;
        }
        if obj.contains_key("ewma_alpha") {
            g.ewma_alpha = num_field(obj, "ewma_alpha").map_err(at)?;
        }
        if obj.contains_key("band_k") {
            g.band_k = num_field(obj, "band_k").map_err(at)?;
        }
        if let Some(v) = obj.get("hysteresis_n") {
            g.hysteresis_n = v
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| at(ValidationError::new("hysteresis_n", "expected an integer >= 1")))?;
        }
        goals.push(g);
    }
    validate_goals(&goals)?;
    Ok(goals)
}

fn str_field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a str, ValidationError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ValidationError::new(key, "expected a string")),
        None => Err(ValidationError::new(key, "missing")),
    }
}

fn num_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<f64, ValidationError> {
    match obj.get(key) {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| ValidationError::new(key, "expected a number")),
        Some(_) => Err(ValidationError::new(key, "expected a number")),
        None => Err(ValidationError::new(key, "missing")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TacticKind {
    SwitchUp,
    SwitchDown,
    SwitchTo,
    Retrain,
    ReuseVersion,
    #[serde(rename = "noop")]
    NoOp,
}

impl TacticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TacticKind::SwitchUp => "switch_up",
            TacticKind::SwitchDown => "switch_down",
            TacticKind::SwitchTo => "switch_to",
            TacticKind::Retrain => "retrain",
            TacticKind::ReuseVersion => "reuse_version",
            TacticKind::NoOp => "noop",
        }
    }
}

impl fmt::Display for TacticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TacticKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, ValidationError> {
        Ok(match s {
            "switch_up" => TacticKind::SwitchUp,
            "switch_down" => TacticKind::SwitchDown,
            "switch_to" => TacticKind::SwitchTo,
            "retrain" => TacticKind::Retrain,
            "reuse_version" => TacticKind::ReuseVersion,
            "noop" | "no_op" => TacticKind::NoOp,
            other => return Err(ValidationError::new("", format!("unknown tactic `{other}`"))),
        })
    }
}

/// A concrete action chosen by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tactic {
    SwitchUp,
    SwitchDown,
    SwitchTo(ModelId),
    Retrain,
    ReuseVersion(u64),
    NoOp,
}

impl Tactic {
    pub fn kind(&self) -> TacticKind {
        match self {
            Tactic::SwitchUp => TacticKind::SwitchUp,
            Tactic::SwitchDown => TacticKind::SwitchDown,
            Tactic::SwitchTo(_) => TacticKind::SwitchTo,
            Tactic::Retrain => TacticKind::Retrain,
            Tactic::ReuseVersion(_) => TacticKind::ReuseVersion,
            Tactic::NoOp => TacticKind::NoOp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Goal { metric: Metric, direction: Direction },
    /// Matches whenever the drift goal fired.
    Drift,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRule {
    pub condition: Condition,
    pub tactic: TacticKind,
    /// Target of `switch_to`.
    pub tactic_arg: Option<ModelId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyKind {
    /// One model, no tactics.
    Static(ModelId),
    /// lin -> ridge2 -> mlp -> lin ... every `switch_interval` inferences.
    RoundRobin,
    /// Ordered condition -> tactic rules, first match wins.
    Rules,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptationPolicy {
    pub name: String,
    pub kind: PolicyKind,
    pub rules: Vec<PolicyRule>,
    pub switch_interval: u64,
}

pub const DEFAULT_SWITCH_INTERVAL: u64 = 100;

impl AdaptationPolicy {
    pub fn static_model(model: ModelId) -> Self {
        Self {
            name: format!("static:{model}"),
            kind: PolicyKind::Static(model),
            rules: Vec::new(),
            switch_interval: DEFAULT_SWITCH_INTERVAL,
        }
    }

    pub fn switch() -> Self {
        Self {
            name: "switch".into(),
            kind: PolicyKind::RoundRobin,
            rules: Vec::new(),
            switch_interval: DEFAULT_SWITCH_INTERVAL,
        }
    }

    pub fn harmone() -> Self {
        let rule = |condition, tactic| PolicyRule { condition, tactic, tactic_arg: None };
        Self {
            name: "harmone".into(),
            kind: PolicyKind::Rules,
            rules: vec![
                rule(Condition::Drift, TacticKind::ReuseVersion),
                rule(
                    Condition::Goal { metric: Metric::RollingMae, direction: Direction::Upper },
                    TacticKind::SwitchUp,
                ),
                rule(
                    Condition::Goal { metric: Metric::EnergyPerInferenceJ, direction: Direction::Upper },
                    TacticKind::SwitchDown,
                ),
            ],
            switch_interval: DEFAULT_SWITCH_INTERVAL,
        }
    }

    /// Resolves `static:<model>`, `switch` or `harmone`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "switch" => Some(Self::switch()),
            "harmone" => Some(Self::harmone()),
            _ => name
                .strip_prefix("static:")
                .and_then(|m| m.parse::<ModelId>().ok())
                .map(Self::static_model),
        }
    }

    /// The model a run starts on when the policy does not pin one.
    pub fn pinned_model(&self) -> Option<ModelId> {
        match self.kind {
            PolicyKind::Static(m) => Some(m),
            PolicyKind::RoundRobin => Some(ModelId::Lin),
            PolicyKind::Rules => None,
        }
    }

    /// Parses an approach: a builtin name (bare JSON string or `{name}` alone)
    /// or an inline policy document.
    pub fn from_json(value: &Value) -> Result<Self> {
        let doc = match value {
            Value::String(name) => {
                return Self::builtin(name).ok_or_else(|| Error::UnknownPolicy(name.clone()));
            }
            Value::Object(obj) => obj,
            _ => return Err(ValidationError::new("", "expected a policy name or document").into()),
        };
        let name = str_field(doc, "name")?;
        if !doc.contains_key("rules") {
            let mut p = Self::builtin(name).ok_or_else(|| Error::UnknownPolicy(name.to_string()))?;
            if doc.contains_key("switch_interval") {
                p.switch_interval = parse_interval(doc)?;
            }
            return Ok(p);
        }
        if name.is_empty() {
            return Err(ValidationError::new("name", "must not be empty").into());
        }
        let rules_val = doc
            .get("rules")
            .and_then(Value::as_array)
            .ok_or_else(|| ValidationError::new("rules", "expected a list"))?;
        let mut rules = Vec::with_capacity(rules_val.len());
        for (i, r) in rules_val.iter().enumerate() {
            rules.push(parse_rule(r).map_err(|e| e.within(format!("rules[{i}]")))?);
        }
        let switch_interval = if doc.contains_key("switch_interval") {
            parse_interval(doc)?
        } else {
            DEFAULT_SWITCH_INTERVAL
        };
        Ok(Self {
            name: name.to_string(),
            kind: PolicyKind::Rules,
            rules,
            switch_interval,
        })
    }

    /// The document form, as accepted by [`AdaptationPolicy::from_json`].
    pub fn to_json(&self) -> Value {
        let rules: Vec<Value> = self
            .rules
            .iter()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                match r.condition {
                    Condition::Drift => {
                        obj.insert("metric".into(), "drift".into());
                    }
                    Condition::Goal { metric, direction } => {
                        obj.insert("metric".into(), metric.as_str().into());
                        obj.insert("direction".into(), direction.as_str().into());
                    }
                }
                obj.insert("tactic".into(), r.tactic.as_str().into());
                if let Some(m) = r.tactic_arg {
                    obj.insert("tactic_arg".into(), m.as_str().into());
                }
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "name": self.name,
            "switch_interval": self.switch_interval,
            "rules": rules,
        })
    }
}

fn parse_interval(doc: &serde_json::Map<String, Value>) -> Result<u64, ValidationError> {
    doc.get("switch_interval")
        .and_then(Value::as_u64)
        .filter(|n| *n >= 1)
        .ok_or_else(|| ValidationError::new("switch_interval", "expected an integer >= 1"))
}

fn parse_rule(value: &Value) -> Result<PolicyRule, ValidationError> {
    let obj = value.as_object().ok_or_else(|| ValidationError::new("", "expected an object"))?;
    let metric = str_field(obj, "metric")?;
    let condition = if metric == "drift" {
        Condition::Drift
    } else {
        let metric: Metric = metric.parse().map_err(|e: ValidationError| e.within("metric"))?;
        let direction: Direction = str_field(obj, "direction")?
            .parse()
            .map_err(|e: ValidationError| e.within("direction"))?;
        Condition::Goal { metric, direction }
    };
    let tactic: TacticKind = str_field(obj, "tactic")?
        .parse()
        .map_err(|e: ValidationError| e.within("tactic"))?;
    let tactic_arg = match (tactic, obj.get("tactic_arg")) {
        (TacticKind::SwitchTo, Some(Value::String(m))) => Some(
            m.parse::<ModelId>()
                .map_err(|_| ValidationError::new("tactic_arg", format!("unknown model `{m}`")))?,
        ),
        (TacticKind::SwitchTo, _) => {
            return Err(ValidationError::new("tactic_arg", "switch_to needs a model id"));
        }
        (_, Some(_)) => {
            return Err(ValidationError::new("tactic_arg", "only switch_to takes an argument"));
        }
        (_, None) => None,
    };
    Ok(PolicyRule { condition, tactic, tactic_arg })
}

/// Trained weights plus the fingerprint of the data they were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVersion {
    pub version_id: u64,
    pub model_id: ModelId,
    pub trained_at_seq: u64,
    pub signature: DataSignature,
    pub weights: Vec<u8>,
    pub training_cost_j: f64,
}

/// Metadata of a stored version, without the weight block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version_id: u64,
    pub model_id: ModelId,
    pub trained_at_seq: u64,
    pub signature: DataSignature,
    pub training_cost_j: f64,
}

impl From<&ModelVersion> for VersionInfo {
    fn from(v: &ModelVersion) -> Self {
        Self {
            version_id: v.version_id,
            model_id: v.model_id,
            trained_at_seq: v.trained_at_seq,
            signature: v.signature,
            training_cost_j: v.training_cost_j,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub seq: u64,
    pub timestamp: String,
    pub model_id: ModelId,
    pub prediction: f64,
    pub actual: Option<f64>,
    pub abs_error: Option<f64>,
    pub latency_ms: f64,
    pub energy_j: f64,
    pub cumulative_energy_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Applied,
    ReuseHit,
    Retrained,
    Noop,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Applied => "applied",
            Outcome::ReuseHit => "reuse_hit",
            Outcome::Retrained => "retrained",
            Outcome::Noop => "noop",
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "applied" => Outcome::Applied,
            "reuse_hit" => Outcome::ReuseHit,
            "retrained" => Outcome::Retrained,
            "noop" => Outcome::Noop,
            other => return Err(Error::InvalidInput(format!("unknown outcome `{other}`"))),
        })
    }
}

/// Goal label for drift-triggered events.
pub const GOAL_DRIFT: &str = "drift";
/// Goal label for round-robin switches.
pub const GOAL_SCHEDULE: &str = "schedule";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationEvent {
    /// Seq of the first telemetry record produced after the tactic.
    pub seq: u64,
    pub timestamp: String,
    /// Metric name, `drift`, or `schedule`.
    pub goal: String,
    pub metric_value: f64,
    pub threshold: f64,
    pub tactic: TacticKind,
    pub model_before: ModelId,
    pub model_after: ModelId,
    pub version_used: Option<u64>,
    pub outcome: Outcome,
    /// Diagnostic for failed tactics; not part of the CSV export.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}
