//! Scenario files.
//!
//! A scenario is a TOML document describing the band, the rate model, the
//! system limits, costs and prices, the licensees present at t = 0 and a
//! timeline of events. Unknown keys are rejected. See
//! `scenarios/reference.toml` for a fully commented example.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{CostModel, MvnoRequest, SystemLimits};
use crate::band::{BandPlan, Incumbent};
use crate::protocol::{ProtocolConfig, Urgency};
use crate::rate::RateModelParams;
use crate::sim::{EventKind, SimEvent};
use crate::units::{Bps, Hertz, IncumbentId, Micros, MvnoId, SimDuration, SimTime};

pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/reference.toml");

/// One invariant violation, located by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key at line {line}: {message}")]
    UnknownKey { line: usize, message: String },
    #[error("invalid scenario: {}", join_violations(.0))]
    Invariant(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// Band layout; incumbents marked active hold their block at t = 0.
    pub band: BandPlan,
    pub rate_model: RateModelParams,
    pub limits: SystemLimits,
    pub cost: CostModel,
    /// Default price; licensees may override it.
    pub price_per_bps: Micros,
    /// Licensees present at t = 0.
    pub mvnos: Vec<MvnoRequest>,
    pub events: Vec<SimEvent>,
    pub baseline: bool,
    pub protocol: ProtocolConfig,
}

impl Scenario {
    pub fn reference() -> Self {
        parse_scenario(REFERENCE_SCENARIO).expect("shipped reference scenario is valid")
    }

    /// Same scenario with every licensee (including later joiners) asking
    /// for `rate`.
    pub fn with_min_rate(&self, rate: Bps) -> Scenario {
        let mut s = self.clone();
        for m in &mut s.mvnos {
            m.min_rate = rate;
        }
        for e in &mut s.events {
            if let EventKind::MvnoJoin(m) = &mut e.kind {
                m.min_rate = rate;
            }
        }
        s
    }

    /// Checks cross-references and value ranges. The band layout itself is
    /// validated when the [`BandPlan`] is built.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: String, message: &str| {
            out.push(Violation {
                field,
                message: message.to_owned(),
            })
        };

        if self.limits.antennas_min_per_mvno > self.limits.antennas_total {
            bad("limits.antennas_min_per_mvno".into(), "exceeds antennas_total");
        }
        if self.cost.per_antenna.0 < 0 {
            bad("cost.cost_per_antenna_micros".into(), "must be >= 0");
        }
        if self.cost.per_hz.0 < 0 {
            bad("cost.cost_per_hz_micros".into(), "must be >= 0");
        }
        if self.price_per_bps.0 < 0 {
            bad("pricing.price_per_bps_micros".into(), "must be >= 0");
        }
        if self.protocol.hop_latency.0 == 0 {
            bad("protocol.hop_latency".into(), "must be positive");
        }

        let mut present = BTreeSet::new();
        for (i, m) in self.mvnos.iter().enumerate() {
            check_request(m, &format!("mvnos[{i}]"), &mut bad);
            if !present.insert(m.id.clone()) {
                bad(format!("mvnos[{i}].id"), "duplicate licensee id");
            }
        }

        let mut order: Vec<usize> = (0..self.events.len()).collect();
        order.sort_by_key(|&i| (self.events[i].time, self.events[i].seq));
        let mut seqs = BTreeSet::new();
        let mut active: BTreeSet<IncumbentId> = self
            .band
            .incumbents()
            .iter()
            .filter(|i| i.active)
            .map(|i| i.id.clone())
            .collect();
        for i in order {
            let ev = &self.events[i];
            let at = format!("events[{i}]");
            if !seqs.insert(ev.seq) {
                bad(format!("{at}.seq"), "duplicate sequence number");
            }
            match &ev.kind {
                EventKind::IncumbentReturn { incumbent, .. } => {
                    if self.band.incumbent(incumbent).is_none() {
                        bad(format!("{at}.incumbent"), "unknown incumbent");
                    } else if !active.insert(incumbent.clone()) {
                        bad(format!("{at}.incumbent"), "incumbent is already active at this time");
                    }
                }
                EventKind::IncumbentRelease { incumbent } => {
                    if self.band.incumbent(incumbent).is_none() {
                        bad(format!("{at}.incumbent"), "unknown incumbent");
                    } else if !active.remove(incumbent) {
                        bad(format!("{at}.incumbent"), "incumbent is not active at this time");
                    }
                }
                EventKind::MvnoJoin(m) => {
                    check_request(m, &at, &mut bad);
                    if !present.insert(m.id.clone()) {
                        bad(format!("{at}.id"), "licensee already present at this time");
                    }
                }
                EventKind::MvnoLeave(id) => {
                    if !present.remove(id) {
                        bad(format!("{at}.id"), "licensee not present at this time");
                    }
                }
            }
        }
        out
    }
}

fn check_request(m: &MvnoRequest, at: &str, bad: &mut impl FnMut(String, &str)) {
    if m.id.0.is_empty() {
        bad(format!("{at}.id"), "must not be empty");
    }
    if m.min_rate.0 == 0 {
        bad(format!("{at}.min_rate_bps"), "must be > 0");
    }
    if m.price_per_bps.0 < 0 {
        bad(format!("{at}.price_per_bps_micros"), "must be >= 0");
    }
}

// ---------------------------------------------------------------------------
// File representation
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    band: RawBand,
    #[serde(default)]
    rate_model: RawRateModel,
    #[serde(default)]
    limits: RawLimits,
    cost: RawCost,
    pricing: RawPricing,
    #[serde(default)]
    protocol: RawProtocol,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    mvnos: Vec<RawMvno>,
    #[serde(default)]
    events: Vec<RawEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    channel_width_hz: i64,
    channel_count: i64,
    #[serde(default)]
    incumbents: Vec<RawIncumbent>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIncumbent {
    id: String,
    channels: Vec<i64>,
    #[serde(default)]
    active: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRateModel {
    m0: i64,
    sigma_bps_hz: f64,
}

impl Default for RawRateModel {
    fn default() -> Self {
        RawRateModel {
            m0: 10,
            sigma_bps_hz: 10.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    antennas_min_per_mvno: i64,
    antennas_total: i64,
    static_antennas_per_mvno: i64,
}

impl Default for RawLimits {
    fn default() -> Self {
        let d = SystemLimits::default();
        RawLimits {
            antennas_min_per_mvno: d.antennas_min_per_mvno.into(),
            antennas_total: d.antennas_total.into(),
            static_antennas_per_mvno: d.static_antennas_per_mvno.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    cost_per_antenna_micros: i64,
    cost_per_hz_micros: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPricing {
    price_per_bps_micros: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    hop_latency: String,
    graceful_deadline: String,
    urgent_deadline: String,
    distinct_cran_operator: bool,
}

impl Default for RawProtocol {
    fn default() -> Self {
        let d = ProtocolConfig::default();
        RawProtocol {
            hop_latency: d.hop_latency.to_string(),
            graceful_deadline: d.graceful_deadline.to_string(),
            urgent_deadline: d.urgent_deadline.to_string(),
            distinct_cran_operator: d.distinct_cran_operator,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    baseline: bool,
}

impl Default for RawSimulation {
    fn default() -> Self {
        RawSimulation { baseline: true }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMvno {
    id: String,
    min_rate_bps: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_per_bps_micros: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incumbent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    urgency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_rate_bps: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_per_bps_micros: Option<i64>,
}

const EV_RETURN: &str = "incumbent-return";
const EV_RELEASE: &str = "incumbent-release";
const EV_JOIN: &str = "mvno-join";
const EV_LEAVE: &str = "mvno-leave";

fn line_of(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

/// Collects violations while converting raw values.
#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn bad(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    fn non_negative(&mut self, field: &str, v: i64) -> u64 {
        if v < 0 {
            self.bad(field, format!("must be >= 0, got {v}"));
            0
        } else {
            v as u64
        }
    }

    fn positive(&mut self, field: &str, v: i64) -> u64 {
        if v <= 0 {
            self.bad(field, format!("must be > 0, got {v}"));
            1
        } else {
            v as u64
        }
    }

    fn count(&mut self, field: &str, v: i64) -> u32 {
        match u32::try_from(v) {
            Ok(n) => n,
            Err(_) => {
                self.bad(field, format!("must be a count in 0..={}, got {v}", u32::MAX));
                0
            }
        }
    }

    fn duration(&mut self, field: &str, v: &str) -> SimDuration {
        match humantime::parse_duration(v) {
            Ok(d) => SimDuration::from_std(d),
            Err(e) => {
                self.bad(field, format!("invalid duration `{v}`: {e}"));
                SimDuration(0)
            }
        }
    }

    fn urgency(&mut self, field: &str, v: Option<&str>) -> Urgency {
        match v {
            None | Some("graceful") => Urgency::Graceful,
            Some("urgent") => Urgency::Urgent,
            Some(other) => {
                self.bad(field, format!("expected `graceful` or `urgent`, got `{other}`"));
                Urgency::Graceful
            }
        }
    }

    fn request(&mut self, at: &str, id: String, rate: i64, price: Option<i64>, default_price: Micros) -> MvnoRequest {
        let min_rate = Bps(self.positive(&format!("{at}.min_rate_bps"), rate));
        let price_per_bps = match price {
            Some(p) => Micros(self.non_negative(&format!("{at}.price_per_bps_micros"), p) as i128),
            None => default_price,
        };
        MvnoRequest {
            id: MvnoId(id),
            min_rate,
            price_per_bps,
        }
    }
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    if let Err(e) = text.parse::<toml::Table>() {
        return Err(ScenarioError::Syntax {
            line: line_of(text, e.span()),
            message: e.message().to_owned(),
        });
    }
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let line = line_of(text, e.span());
        let message = e.message().to_owned();
        if message.starts_with("unknown field") {
            ScenarioError::UnknownKey { line, message }
        } else {
            ScenarioError::Syntax { line, message }
        }
    })?;
    convert(raw)
}

fn convert(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let mut ck = Checker::default();

    let width = Hertz(ck.positive("band.channel_width_hz", raw.band.channel_width_hz));
    let channel_count = ck.non_negative("band.channel_count", raw.band.channel_count) as usize;
    let mut incumbents = Vec::new();
    for (i, inc) in raw.band.incumbents.into_iter().enumerate() {
        let mut channels = BTreeSet::new();
        for (j, &ch) in inc.channels.iter().enumerate() {
            let ch = ck.non_negative(&format!("band.incumbents[{i}].channels[{j}]"), ch) as usize;
            if !channels.insert(ch) {
                ck.bad(format!("band.incumbents[{i}].channels[{j}]"), "duplicate channel");
            }
        }
        incumbents.push(Incumbent {
            id: IncumbentId(inc.id),
            channels,
            active: inc.active,
        });
    }

    let m0 = ck.count("rate_model.m0", raw.rate_model.m0);
    let sigma = raw.rate_model.sigma_bps_hz;
    let sigma_milli = (sigma * 1000.0).round();
    if !sigma.is_finite() || sigma <= 0.0 || (sigma * 1000.0 - sigma_milli).abs() > 1e-6 || sigma_milli > 1e15 {
        ck.bad("rate_model.sigma_bps_hz", "must be positive with at most three decimals");
    }
    let rate_model = RateModelParams::new(m0, sigma_milli.max(0.0) as u64).unwrap_or_else(|| {
        if m0 == 0 {
            ck.bad("rate_model.m0", "must be >= 1");
        }
        RateModelParams::default()
    });

    let limits = SystemLimits {
        antennas_min_per_mvno: ck.count("limits.antennas_min_per_mvno", raw.limits.antennas_min_per_mvno),
        antennas_total: ck.count("limits.antennas_total", raw.limits.antennas_total),
        static_antennas_per_mvno: ck.count("limits.static_antennas_per_mvno", raw.limits.static_antennas_per_mvno),
    };
    let cost = CostModel {
        per_antenna: Micros(ck.non_negative("cost.cost_per_antenna_micros", raw.cost.cost_per_antenna_micros) as i128),
        per_hz: Micros(ck.non_negative("cost.cost_per_hz_micros", raw.cost.cost_per_hz_micros) as i128),
    };
    let price = Micros(ck.non_negative("pricing.price_per_bps_micros", raw.pricing.price_per_bps_micros) as i128);

    let protocol = ProtocolConfig {
        hop_latency: ck.duration("protocol.hop_latency", &raw.protocol.hop_latency),
        graceful_deadline: ck.duration("protocol.graceful_deadline", &raw.protocol.graceful_deadline),
        urgent_deadline: ck.duration("protocol.urgent_deadline", &raw.protocol.urgent_deadline),
        distinct_cran_operator: raw.protocol.distinct_cran_operator,
    };

    let mvnos: Vec<MvnoRequest> = raw
        .mvnos
        .into_iter()
        .enumerate()
        .map(|(i, m)| ck.request(&format!("mvnos[{i}]"), m.id, m.min_rate_bps, m.price_per_bps_micros, price))
        .collect();

    let mut events = Vec::new();
    for (i, ev) in raw.events.into_iter().enumerate() {
        let at = format!("events[{i}]");
        let time = SimTime(ck.duration(&format!("{at}.at"), &ev.at).0);
        let allowed: &[&str] = match ev.kind.as_str() {
            EV_RETURN => &["incumbent", "urgency"],
            EV_RELEASE => &["incumbent"],
            EV_JOIN => &["id", "min_rate_bps", "price_per_bps_micros"],
            EV_LEAVE => &["id"],
            _ => &[],
        };
        let present = [
            ("incumbent", ev.incumbent.is_some()),
            ("urgency", ev.urgency.is_some()),
            ("id", ev.id.is_some()),
            ("min_rate_bps", ev.min_rate_bps.is_some()),
            ("price_per_bps_micros", ev.price_per_bps_micros.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                ck.bad(format!("{at}.{key}"), format!("not allowed for kind `{}`", ev.kind));
            }
        }
        let need = |ck: &mut Checker, key: &str, v: Option<String>| {
            v.unwrap_or_else(|| {
                ck.bad(format!("{at}.{key}"), "missing");
                String::new()
            })
        };
        let kind = match ev.kind.as_str() {
            EV_RETURN => EventKind::IncumbentReturn {
                incumbent: IncumbentId(need(&mut ck, "incumbent", ev.incumbent)),
                urgency: ck.urgency(&format!("{at}.urgency"), ev.urgency.as_deref()),
            },
            EV_RELEASE => EventKind::IncumbentRelease {
                incumbent: IncumbentId(need(&mut ck, "incumbent", ev.incumbent)),
            },
            EV_JOIN => {
                let id = need(&mut ck, "id", ev.id);
                let rate = ev.min_rate_bps.unwrap_or_else(|| {
                    ck.bad(format!("{at}.min_rate_bps"), "missing");
                    1
                });
                EventKind::MvnoJoin(ck.request(&at, id, rate, ev.price_per_bps_micros, price))
            }
            EV_LEAVE => EventKind::MvnoLeave(MvnoId(need(&mut ck, "id", ev.id))),
            other => {
                ck.bad(
                    format!("{at}.kind"),
                    format!("unknown event kind `{other}` (expected {EV_RETURN}, {EV_RELEASE}, {EV_JOIN} or {EV_LEAVE})"),
                );
                continue;
            }
        };
        events.push(SimEvent {
            time,
            seq: i as u64,
            kind,
        });
    }

    let band = match BandPlan::new(width, channel_count, incumbents) {
        Ok(b) => Some(b),
        Err(e) => {
            ck.bad("band.incumbents", e.to_string());
            None
        }
    };

    let (Some(band), true) = (band, ck.violations.is_empty()) else {
        return Err(ScenarioError::Invariant(ck.violations));
    };
    let scenario = Scenario {
        band,
        rate_model,
        limits,
        cost,
        price_per_bps: price,
        mvnos,
        events,
        baseline: raw.simulation.baseline,
        protocol,
    };
    let violations = scenario.validate();
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invariant(violations))
    }
}

fn to_i64(v: impl TryInto<i64>) -> i64 {
    v.try_into().unwrap_or(i64::MAX)
}

/// Serializes a scenario back to TOML. Events are written in `seq` order;
/// parsing the result yields an identical scenario when `seq` values are
/// `0..n`, as produced by [`parse_scenario`].
pub fn emit_scenario(s: &Scenario) -> String {
    let price = s.price_per_bps;
    let override_price = |p: Micros| (p != price).then(|| to_i64(p.0));
    let mut events: Vec<&SimEvent> = s.events.iter().collect();
    events.sort_by_key(|e| e.seq);

    let raw = RawScenario {
        band: RawBand {
            channel_width_hz: to_i64(s.band.channel_width().0),
            channel_count: to_i64(s.band.channel_count()),
            incumbents: s
                .band
                .incumbents()
                .iter()
                .map(|i| RawIncumbent {
                    id: i.id.0.clone(),
                    channels: i.channels.iter().map(|&c| to_i64(c)).collect(),
                    active: i.active,
                })
                .collect(),
        },
        rate_model: RawRateModel {
            m0: s.rate_model.antennas_per_stream.into(),
            sigma_bps_hz: s.rate_model.sigma_milli_bps_hz as f64 / 1000.0,
        },
        limits: RawLimits {
            antennas_min_per_mvno: s.limits.antennas_min_per_mvno.into(),
            antennas_total: s.limits.antennas_total.into(),
            static_antennas_per_mvno: s.limits.static_antennas_per_mvno.into(),
        },
        cost: RawCost {
            cost_per_antenna_micros: to_i64(s.cost.per_antenna.0),
            cost_per_hz_micros: to_i64(s.cost.per_hz.0),
        },
        pricing: RawPricing {
            price_per_bps_micros: to_i64(price.0),
        },
        protocol: RawProtocol {
            hop_latency: s.protocol.hop_latency.to_string(),
            graceful_deadline: s.protocol.graceful_deadline.to_string(),
            urgent_deadline: s.protocol.urgent_deadline.to_string(),
            distinct_cran_operator: s.protocol.distinct_cran_operator,
        },
        simulation: RawSimulation { baseline: s.baseline },
        mvnos: s
            .mvnos
            .iter()
            .map(|m| RawMvno {
                id: m.id.0.clone(),
                min_rate_bps: to_i64(m.min_rate.0),
                price_per_bps_micros: override_price(m.price_per_bps),
            })
            .collect(),
        events: events
            .into_iter()
            .map(|e| {
                let mut r = RawEvent {
                    at: SimDuration(e.time.0).to_string(),
                    kind: String::new(),
                    incumbent: None,
                    urgency: None,
                    id: None,
                    min_rate_bps: None,
                    price_per_bps_micros: None,
                };
                match &e.kind {
                    EventKind::IncumbentReturn { incumbent, urgency } => {
                        r.kind = EV_RETURN.into();
                        r.incumbent = Some(incumbent.0.clone());
                        r.urgency = Some(urgency.to_string());
                    }
                    EventKind::IncumbentRelease { incumbent } => {
                        r.kind = EV_RELEASE.into();
                        r.incumbent = Some(incumbent.0.clone());
                    }
                    EventKind::MvnoJoin(m) => {
                        r.kind = EV_JOIN.into();
                        r.id = Some(m.id.0.clone());
                        r.min_rate_bps = Some(to_i64(m.min_rate.0));
                        r.price_per_bps_micros = override_price(m.price_per_bps);
                    }
                    EventKind::MvnoLeave(id) => {
                        r.kind = EV_LEAVE.into();
                        r.id = Some(id.0.clone());
                    }
                }
                r
            })
            .collect(),
    };
    toml::to_string(&raw).expect("scenario always serializes")
}
