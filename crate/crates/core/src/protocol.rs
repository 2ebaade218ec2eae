//! Evacuation and release message flows between an incumbent, the LSA
//! repository, the LSA controller and the C-RAN operator.
//!
//! An evacuation is handled at a single control point: the repository marks
//! the block unavailable, the controller recomputes the allocation and sends
//! one reconfiguration command, and the C-RAN operator vacates the band by
//! stopping IQ transfer from the BBU pool to the remote radio heads. Each
//! hop costs a fixed latency.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::band::{BandError, BandPlan};
use crate::units::{IncumbentId, MvnoId, SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    EvacuationRequest,
    AvailabilityUpdate,
    ReconfigurationCommand,
    /// Licensee tells the C-RAN operator to vacate; only present when the
    /// two are distinct entities.
    LicenseeNotification,
    StopIqTransfer,
    EvacuationConfirmed,
    BandReleased,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Actor {
    Incumbent(IncumbentId),
    Repository,
    Controller,
    CranOperator,
    Licensees,
    RemoteRadioHeads,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Incumbent(id) => write!(f, "incumbent:{id}"),
            Actor::Repository => f.write_str("repository"),
            Actor::Controller => f.write_str("controller"),
            Actor::CranOperator => f.write_str("cran-operator"),
            Actor::Licensees => f.write_str("licensees"),
            Actor::RemoteRadioHeads => f.write_str("rrhs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LsaMessage {
    pub kind: MessageKind,
    pub sender: Actor,
    pub receiver: Actor,
    /// Intermediate actors a relayed message passes through.
    pub via: Vec<Actor>,
    pub channels: BTreeSet<usize>,
    pub issued_at: SimTime,
    /// Only set on evacuation requests.
    pub deadline: Option<SimTime>,
}

impl LsaMessage {
    pub fn evacuation_request(
        incumbent: IncumbentId,
        channels: BTreeSet<usize>,
        issued_at: SimTime,
        deadline: SimTime,
    ) -> Self {
        LsaMessage {
            kind: MessageKind::EvacuationRequest,
            sender: Actor::Incumbent(incumbent),
            receiver: Actor::Repository,
            via: Vec::new(),
            channels,
            issued_at,
            deadline: Some(deadline),
        }
    }

    pub fn band_released(incumbent: IncumbentId, channels: BTreeSet<usize>, issued_at: SimTime) -> Self {
        LsaMessage {
            kind: MessageKind::BandReleased,
            sender: Actor::Incumbent(incumbent),
            receiver: Actor::Repository,
            via: Vec::new(),
            channels,
            issued_at,
            deadline: None,
        }
    }

    fn hop(kind: MessageKind, sender: Actor, receiver: Actor, channels: &BTreeSet<usize>, at: SimTime) -> Self {
        LsaMessage {
            kind,
            sender,
            receiver,
            via: Vec::new(),
            channels: channels.clone(),
            issued_at: at,
            deadline: None,
        }
    }

    /// One run-log line: time, kind, sender, receiver, channels.
    pub fn log_line(&self) -> String {
        let channels: Vec<String> = self.channels.iter().map(usize::to_string).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.issued_at.0,
            self.kind,
            self.sender,
            self.receiver,
            channels.join(",")
        )
    }

    fn incumbent(&self) -> Option<&IncumbentId> {
        match &self.sender {
            Actor::Incumbent(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Urgency {
    Graceful,
    Urgent,
}

impl fmt::Display for Urgency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Urgency::Graceful => "graceful",
            Urgency::Urgent => "urgent",
        })
    }
}

/// Timing of the message flow.
///
/// The default deadlines (30 s graceful, 1 s urgent) are placeholders, not
/// regulatory values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProtocolConfig {
    pub hop_latency: SimDuration,
    pub graceful_deadline: SimDuration,
    pub urgent_deadline: SimDuration,
    /// Adds the licensee -> C-RAN operator notification hop.
    pub distinct_cran_operator: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            hop_latency: SimDuration::from_millis(10),
            graceful_deadline: SimDuration::from_secs(30),
            urgent_deadline: SimDuration::from_secs(1),
            distinct_cran_operator: false,
        }
    }
}

impl ProtocolConfig {
    pub fn deadline_for(&self, urgency: Urgency) -> SimDuration {
        match urgency {
            Urgency::Graceful => self.graceful_deadline,
            Urgency::Urgent => self.urgent_deadline,
        }
    }

    /// Number of messages in an evacuation trace.
    pub fn evacuation_hops(&self) -> usize {
        if self.distinct_cran_operator {
            6
        } else {
            5
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EvacuationRecord {
    pub incumbent: IncumbentId,
    pub urgency: Urgency,
    pub requested_at: SimTime,
    pub completed_at: SimTime,
    pub deadline: SimTime,
    pub displaced: BTreeSet<MvnoId>,
}

impl EvacuationRecord {
    pub fn compliant(&self) -> bool {
        self.completed_at <= self.deadline
    }

    pub fn violation(&self) -> Option<DeadlineViolation> {
        (!self.compliant()).then(|| DeadlineViolation {
            incumbent: self.incumbent.clone(),
            late_by: self.completed_at.since(self.deadline),
        })
    }
}

/// An evacuation that completed after its deadline. Recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evacuation for `{incumbent}` missed its deadline by {late_by}")]
pub struct DeadlineViolation {
    pub incumbent: IncumbentId,
    pub late_by: SimDuration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("expected a {expected} message, got {got}")]
    WrongKind { expected: MessageKind, got: MessageKind },
    #[error("message must be sent by an incumbent")]
    NotFromIncumbent,
    #[error("message channels {got:?} do not match the block of `{incumbent}`")]
    ChannelMismatch {
        incumbent: IncumbentId,
        got: BTreeSet<usize>,
    },
    #[error("evacuation request has no deadline")]
    MissingDeadline,
    #[error("deadline precedes issue time")]
    DeadlineBeforeIssue,
    #[error(transparent)]
    Band(#[from] BandError),
}

/// Whatever holds the licensees' allocation. Called by the controller once
/// the repository state has changed.
pub trait Reallocate {
    /// Recompute the allocation and record its channel assignments in `plan`.
    fn reallocate(&mut self, plan: &mut BandPlan);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evacuation {
    pub trace: Vec<LsaMessage>,
    pub record: EvacuationRecord,
}

fn check_block(request: &LsaMessage, plan: &BandPlan) -> Result<IncumbentId, ProtocolError> {
    let id = request.incumbent().ok_or(ProtocolError::NotFromIncumbent)?.clone();
    let inc = plan
        .incumbent(&id)
        .ok_or_else(|| BandError::UnknownIncumbent(id.clone()))?;
    if inc.channels != request.channels {
        return Err(ProtocolError::ChannelMismatch {
            incumbent: id,
            got: request.channels.clone(),
        });
    }
    Ok(id)
}

/// The LSA controller's side of the flows.
#[derive(Debug, Clone, Default)]
pub struct Controller {
    pub config: ProtocolConfig,
}

impl Controller {
    pub fn new(config: ProtocolConfig) -> Self {
        Controller { config }
    }

    /// Processes an incumbent's evacuation request end to end.
    pub fn handle_evacuation(
        &self,
        request: LsaMessage,
        plan: &mut BandPlan,
        world: &mut impl Reallocate,
        urgency: Urgency,
    ) -> Result<Evacuation, ProtocolError> {
        if request.kind != MessageKind::EvacuationRequest {
            return Err(ProtocolError::WrongKind {
                expected: MessageKind::EvacuationRequest,
                got: request.kind,
            });
        }
        let deadline = request.deadline.ok_or(ProtocolError::MissingDeadline)?;
        if deadline < request.issued_at {
            return Err(ProtocolError::DeadlineBeforeIssue);
        }
        let id = check_block(&request, plan)?;
        if plan.incumbent(&id).is_some_and(|i| i.active) {
            return Err(BandError::AlreadyActive(id).into());
        }

        let latency = self.config.hop_latency;
        let requested_at = request.issued_at;
        let channels = request.channels.clone();
        let mut at = requested_at;
        let mut trace = vec![request];

        let displaced = plan.reclaim(&id)?;
        at = at + latency;
        trace.push(LsaMessage::hop(
            MessageKind::AvailabilityUpdate,
            Actor::Repository,
            Actor::Controller,
            &channels,
            at,
        ));

        world.reallocate(plan);
        at = at + latency;
        let reconfig_target = if self.config.distinct_cran_operator {
            Actor::Licensees
        } else {
            Actor::CranOperator
        };
        trace.push(LsaMessage::hop(
            MessageKind::ReconfigurationCommand,
            Actor::Controller,
            reconfig_target,
            &channels,
            at,
        ));
        if self.config.distinct_cran_operator {
            at = at + latency;
            trace.push(LsaMessage::hop(
                MessageKind::LicenseeNotification,
                Actor::Licensees,
                Actor::CranOperator,
                &channels,
                at,
            ));
        }

        at = at + latency;
        trace.push(LsaMessage::hop(
            MessageKind::StopIqTransfer,
            Actor::CranOperator,
            Actor::RemoteRadioHeads,
            &channels,
            at,
        ));

        at = at + latency;
        let mut confirmed = LsaMessage::hop(
            MessageKind::EvacuationConfirmed,
            Actor::CranOperator,
            Actor::Incumbent(id.clone()),
            &channels,
            at,
        );
        confirmed.via = vec![Actor::Controller, Actor::Repository];
        trace.push(confirmed);

        let record = EvacuationRecord {
            incumbent: id,
            urgency,
            requested_at,
            completed_at: at + latency,
            deadline,
            displaced,
        };
        Ok(Evacuation { trace, record })
    }

    /// Processes an incumbent giving its block back; licensees may expand.
    pub fn handle_release(
        &self,
        request: LsaMessage,
        plan: &mut BandPlan,
        world: &mut impl Reallocate,
    ) -> Result<Vec<LsaMessage>, ProtocolError> {
        if request.kind != MessageKind::BandReleased {
            return Err(ProtocolError::WrongKind {
                expected: MessageKind::BandReleased,
                got: request.kind,
            });
        }
        let id = check_block(&request, plan)?;
        plan.release(&id)?;
        let update = LsaMessage::hop(
            MessageKind::AvailabilityUpdate,
            Actor::Repository,
            Actor::Controller,
            &request.channels,
            request.issued_at + self.config.hop_latency,
        );
        world.reallocate(plan);
        Ok(vec![request, update])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{allocate_dynamic, CostModel, MvnoRequest, SystemLimits};
    use crate::rate::RateModelParams;
    use crate::units::{Bps, Micros};

    struct Licensees {
        requests: Vec<MvnoRequest>,
        calls: usize,
        served: usize,
    }

    impl Licensees {
        fn new(n: usize) -> Self {
            Licensees {
                requests: (1..=n)
                    .map(|i| MvnoRequest::new(format!("m{i}"), Bps::from_mbps(200), Micros(10)))
                    .collect(),
                calls: 0,
                served: 0,
            }
        }
    }

    impl Reallocate for Licensees {
        fn reallocate(&mut self, plan: &mut BandPlan) {
            self.calls += 1;
            plan.clear_assignments();
            let alloc = allocate_dynamic(
                &self.requests,
                plan,
                &RateModelParams::default(),
                &SystemLimits::default(),
                &CostModel::reference(),
            );
            for e in &alloc.entries {
                for &ch in &e.channels {
                    plan.assign(ch, &e.id).unwrap();
                }
            }
            self.served = alloc.served_count();
        }
    }

    fn tv(n: u32) -> IncumbentId {
        IncumbentId(format!("tv{n}"))
    }

    fn block(plan: &BandPlan, n: u32) -> BTreeSet<usize> {
        plan.incumbent(&tv(n)).unwrap().channels.clone()
    }

    fn evacuate(
        ctl: &Controller,
        plan: &mut BandPlan,
        world: &mut Licensees,
        n: u32,
        at: SimTime,
        urgency: Urgency,
    ) -> Result<Evacuation, ProtocolError> {
        let deadline = at + ctl.config.deadline_for(urgency);
        let req = LsaMessage::evacuation_request(tv(n), block(plan, n), at, deadline);
        ctl.handle_evacuation(req, plan, world, urgency)
    }

    #[test]
    fn evacuation_trace_and_timing() {
        let ctl = Controller::new(ProtocolConfig::default());
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(5);
        world.reallocate(&mut plan);
        let holders: BTreeSet<MvnoId> = block(&plan, 2)
            .iter()
            .filter_map(|&ch| match plan.state(ch) {
                Some(crate::band::ChannelState::Assigned(m)) => Some(m.clone()),
                _ => None,
            })
            .collect();

        let t = SimTime::from_secs(20);
        let ev = evacuate(&ctl, &mut plan, &mut world, 2, t, Urgency::Urgent).unwrap();
        let kinds: Vec<_> = ev.trace.iter().map(|m| m.kind).collect();
        assert_eq!(
            kinds,
            [
                MessageKind::EvacuationRequest,
                MessageKind::AvailabilityUpdate,
                MessageKind::ReconfigurationCommand,
                MessageKind::StopIqTransfer,
                MessageKind::EvacuationConfirmed,
            ]
        );
        assert_eq!(ev.trace[0].sender, Actor::Incumbent(tv(2)));
        assert_eq!(ev.trace[2].receiver, Actor::CranOperator);
        assert_eq!(ev.trace[3].receiver, Actor::RemoteRadioHeads);
        assert_eq!(ev.trace[4].receiver, Actor::Incumbent(tv(2)));
        assert!(ev.trace.windows(2).all(|w| w[0].issued_at <= w[1].issued_at));
        assert_eq!(ev.record.completed_at, t + SimDuration::from_millis(50));
        assert!(ev.record.compliant());
        assert_eq!(ev.record.displaced, holders);
        assert!(!holders.is_empty());
        // The new allocation avoids the reclaimed block.
        for ch in block(&plan, 2) {
            assert!(matches!(plan.state(ch), Some(crate::band::ChannelState::IncumbentHeld(_))));
        }
        assert_eq!(world.calls, 2);
    }

    #[test]
    fn tight_deadline_is_a_violation() {
        let ctl = Controller::new(ProtocolConfig {
            urgent_deadline: SimDuration::from_millis(20),
            ..ProtocolConfig::default()
        });
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(1);
        let ev = evacuate(&ctl, &mut plan, &mut world, 1, SimTime::ZERO, Urgency::Urgent).unwrap();
        assert!(!ev.record.compliant());
        let v = ev.record.violation().unwrap();
        assert_eq!(v.late_by, SimDuration::from_millis(30));
        // Still applied.
        assert_eq!(plan.active_incumbents(), 1);
    }

    #[test]
    fn evacuation_of_unused_channels() {
        let ctl = Controller::default();
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(0);
        let ev = evacuate(&ctl, &mut plan, &mut world, 3, SimTime::ZERO, Urgency::Graceful).unwrap();
        assert_eq!(ev.trace.len(), 5);
        assert!(ev.record.displaced.is_empty());
    }

    #[test]
    fn distinct_operator_adds_one_hop() {
        let ctl = Controller::new(ProtocolConfig {
            distinct_cran_operator: true,
            ..ProtocolConfig::default()
        });
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(2);
        let ev = evacuate(&ctl, &mut plan, &mut world, 1, SimTime::ZERO, Urgency::Graceful).unwrap();
        assert_eq!(ev.trace.len(), ctl.config.evacuation_hops());
        assert_eq!(ev.trace[3].kind, MessageKind::LicenseeNotification);
        assert_eq!(
            ev.trace.iter().filter(|m| m.kind == MessageKind::ReconfigurationCommand).count(),
            1
        );
        assert_eq!(ev.record.completed_at, SimTime(60_000));
    }

    #[test]
    fn repeated_evacuation_is_rejected() {
        let ctl = Controller::default();
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(1);
        evacuate(&ctl, &mut plan, &mut world, 1, SimTime::ZERO, Urgency::Graceful).unwrap();
        let err = evacuate(&ctl, &mut plan, &mut world, 1, SimTime(5), Urgency::Graceful).unwrap_err();
        assert_eq!(err, ProtocolError::Band(BandError::AlreadyActive(tv(1))));
    }

    #[test]
    fn malformed_requests() {
        let ctl = Controller::default();
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(1);
        let bad_block = LsaMessage::evacuation_request(tv(1), BTreeSet::from([0]), SimTime::ZERO, SimTime(1));
        assert!(matches!(
            ctl.handle_evacuation(bad_block, &mut plan, &mut world, Urgency::Urgent),
            Err(ProtocolError::ChannelMismatch { .. })
        ));
        let backwards = LsaMessage::evacuation_request(tv(1), block(&plan, 1), SimTime(10), SimTime(5));
        assert_eq!(
            ctl.handle_evacuation(backwards, &mut plan, &mut world, Urgency::Urgent),
            Err(ProtocolError::DeadlineBeforeIssue)
        );
        let release = LsaMessage::band_released(tv(1), block(&plan, 1), SimTime::ZERO);
        assert!(matches!(
            ctl.handle_evacuation(release, &mut plan, &mut world, Urgency::Urgent),
            Err(ProtocolError::WrongKind { .. })
        ));
    }

    #[test]
    fn release_flow() {
        let ctl = Controller::default();
        let mut plan = BandPlan::reference();
        let mut world = Licensees::new(5);
        for n in 1..=4 {
            evacuate(&ctl, &mut plan, &mut world, n, SimTime::ZERO, Urgency::Graceful).unwrap();
        }
        assert_eq!(world.served, 0);
        let mut last = 0;
        for n in 1..=4 {
            let msg = LsaMessage::band_released(tv(n), block(&plan, n), SimTime::from_secs(n as u64));
            let trace = ctl.handle_release(msg, &mut plan, &mut world).unwrap();
            assert_eq!(trace[1].kind, MessageKind::AvailabilityUpdate);
            assert!(world.served >= last);
            last = world.served;
        }
        assert_eq!(plan.available_bandwidth(), crate::units::Hertz::from_mhz(40));
        assert_eq!(world.served, 5);

        let again = LsaMessage::band_released(tv(1), block(&plan, 1), SimTime::from_secs(9));
        assert_eq!(
            ctl.handle_release(again, &mut plan, &mut world),
            Err(ProtocolError::Band(BandError::NotActive(tv(1))))
        );
    }

    #[test]
    fn log_line_format() {
        let msg = LsaMessage::evacuation_request(tv(2), BTreeSet::from([2, 3]), SimTime(10_000_000), SimTime(11_000_000));
        assert_eq!(msg.log_line(), "10000000\tEvacuationRequest\tincumbent:tv2\trepository\t2,3");
    }
}
