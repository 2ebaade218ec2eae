//! Deterministic discrete-event driver.
//!
//! Events are dispatched in `(time, seq)` order. After every event the
//! dynamic allocation is recomputed from scratch on the current band and,
//! when the baseline is enabled, the static system is solved on the same
//! spectrum. One [`SimRecord`] is produced per event, plus an initial
//! record at t = 0.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use thiserror::Error;

use crate::allocator::{allocate_dynamic, allocate_static, Allocation, MvnoRequest};
use crate::band::BandPlan;
use crate::protocol::{Controller, EvacuationRecord, LsaMessage, ProtocolError, Reallocate, Urgency};
use crate::scenario::{Scenario, Violation};
use crate::units::{Hertz, IncumbentId, MvnoId, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    IncumbentReturn { incumbent: IncumbentId, urgency: Urgency },
    IncumbentRelease { incumbent: IncumbentId },
    MvnoJoin(MvnoRequest),
    MvnoLeave(MvnoId),
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::IncumbentReturn { incumbent, urgency } => write!(f, "incumbent-return:{incumbent}:{urgency}"),
            EventKind::IncumbentRelease { incumbent } => write!(f, "incumbent-release:{incumbent}"),
            EventKind::MvnoJoin(req) => write!(f, "mvno-join:{}", req.id),
            EventKind::MvnoLeave(id) => write!(f, "mvno-leave:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimEvent {
    pub time: SimTime,
    /// Unique; breaks ties between events at the same time.
    pub seq: u64,
    pub kind: EventKind,
}

/// System state right after one event has been processed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRecord {
    pub time: SimTime,
    /// `None` for the initial record.
    pub event: Option<EventKind>,
    pub active_incumbents: usize,
    pub available: Hertz,
    pub dynamic: Allocation,
    pub baseline: Option<Allocation>,
    pub evacuation: Option<EvacuationRecord>,
    /// Licensees whose (served, antennas, channels) changed since the
    /// previous record.
    pub churn: usize,
}

impl SimRecord {
    pub fn served_dynamic(&self) -> usize {
        self.dynamic.served_count()
    }

    pub fn served_static(&self) -> Option<usize> {
        self.baseline.as_ref().map(Allocation::served_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutput {
    pub records: Vec<SimRecord>,
    pub log: Vec<LsaMessage>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario is invalid: {}", crate::scenario::join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("protocol failure at {time}: {source}")]
    Protocol {
        time: SimTime,
        #[source]
        source: ProtocolError,
    },
}

/// The licensees currently in the system and the allocation in force.
struct Licensees<'a> {
    scenario: &'a Scenario,
    active: Vec<MvnoRequest>,
    current: Allocation,
}

impl Reallocate for Licensees<'_> {
    fn reallocate(&mut self, plan: &mut BandPlan) {
        let s = self.scenario;
        plan.clear_assignments();
        self.current = allocate_dynamic(&self.active, plan, &s.rate_model, &s.limits, &s.cost);
        for e in &self.current.entries {
            for &ch in &e.channels {
                plan.assign(ch, &e.id).expect("allocator only hands out free channels");
            }
        }
    }
}

fn churn(prev: &Allocation, next: &Allocation) -> usize {
    let ids: BTreeSet<&MvnoId> = prev.entries.iter().chain(&next.entries).map(|e| &e.id).collect();
    ids.into_iter()
        .filter(|id| {
            let a = prev.entry(id).filter(|e| e.served);
            let b = next.entry(id).filter(|e| e.served);
            match (a, b) {
                (None, None) => false,
                (Some(a), Some(b)) => a.antennas != b.antennas || a.channels != b.channels,
                _ => true,
            }
        })
        .count()
}

/// Simulates a scenario. Identical input gives identical output.
pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }

    let controller = Controller::new(scenario.protocol);
    let mut plan = scenario.band.clone();
    let mut world = Licensees {
        scenario,
        active: scenario.mvnos.clone(),
        current: Allocation::default(),
    };
    world.reallocate(&mut plan);

    let mut out = RunOutput::default();
    let mut prev = Allocation::default();
    let mut push = |out: &mut RunOutput, plan: &BandPlan, world: &Licensees, time, event, evacuation| {
        let baseline = scenario.baseline.then(|| {
            let mut spectrum = plan.clone();
            spectrum.clear_assignments();
            let s = scenario;
            allocate_static(&world.active, &spectrum, &s.rate_model, &s.limits, &s.cost)
        });
        out.records.push(SimRecord {
            time,
            event,
            active_incumbents: plan.active_incumbents(),
            available: plan.available_bandwidth(),
            churn: churn(&prev, &world.current),
            dynamic: world.current.clone(),
            baseline,
            evacuation,
        });
        prev = world.current.clone();
    };
    push(&mut out, &plan, &world, SimTime::ZERO, None, None);

    let mut queue: BinaryHeap<Reverse<(SimTime, u64, usize)>> = scenario
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| Reverse((e.time, e.seq, i)))
        .collect();

    while let Some(Reverse((time, _, i))) = queue.pop() {
        let kind = &scenario.events[i].kind;
        let protocol_err = |source| SimError::Protocol { time, source };
        let mut evacuation = None;
        match kind {
            EventKind::IncumbentReturn { incumbent, urgency } => {
                let channels = block_of(&plan, incumbent);
                let deadline = time + scenario.protocol.deadline_for(*urgency);
                let request = LsaMessage::evacuation_request(incumbent.clone(), channels, time, deadline);
                let ev = controller
                    .handle_evacuation(request, &mut plan, &mut world, *urgency)
                    .map_err(protocol_err)?;
                out.log.extend(ev.trace);
                evacuation = Some(ev.record);
            }
            EventKind::IncumbentRelease { incumbent } => {
                let request = LsaMessage::band_released(incumbent.clone(), block_of(&plan, incumbent), time);
                let trace = controller
                    .handle_release(request, &mut plan, &mut world)
                    .map_err(protocol_err)?;
                out.log.extend(trace);
            }
            EventKind::MvnoJoin(req) => {
                world.active.push(req.clone());
                world.reallocate(&mut plan);
            }
            EventKind::MvnoLeave(id) => {
                world.active.retain(|r| &r.id != id);
                world.reallocate(&mut plan);
            }
        }
        debug_assert!(plan.check_invariants().is_ok());
        push(&mut out, &plan, &world, time, Some(kind.clone()), evacuation);
    }
    Ok(out)
}

fn block_of(plan: &BandPlan, id: &IncumbentId) -> BTreeSet<usize> {
    plan.incumbent(id).map(|i| i.channels.clone()).unwrap_or_default()
}

/// The latest record at or before `time`; the initial record if none is.
///
/// `records` must be non-empty and sorted by time, as [`run`] produces.
pub fn snapshot_at(records: &[SimRecord], time: SimTime) -> &SimRecord {
    let after = records.partition_point(|r| r.time <= time);
    &records[after.saturating_sub(1)]
}
