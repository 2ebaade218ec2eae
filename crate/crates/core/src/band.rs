//! The shared LSA spectrum pool: fixed-width channels, the incumbents that
//! own them and the per-channel occupancy kept by the repository.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::units::{Hertz, IncumbentId, MvnoId};

/// Width of one LSA channel in the reference band.
pub const CHANNEL_WIDTH: Hertz = Hertz::from_mhz(5);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BandError {
    #[error("unknown incumbent `{0}`")]
    UnknownIncumbent(IncumbentId),
    #[error("incumbent `{0}` is already active")]
    AlreadyActive(IncumbentId),
    #[error("incumbent `{0}` is not active")]
    NotActive(IncumbentId),
    #[error("channel {channel} is outside the {count}-channel band")]
    ChannelOutOfRange { channel: usize, count: usize },
    #[error("channel {channel} is claimed by both `{first}` and `{second}`")]
    OverlappingBlocks {
        channel: usize,
        first: IncumbentId,
        second: IncumbentId,
    },
    #[error("incumbent `{0}` owns no channels")]
    EmptyBlock(IncumbentId),
    #[error("duplicate incumbent id `{0}`")]
    DuplicateIncumbent(IncumbentId),
    #[error("channel {0} is not free")]
    ChannelNotFree(usize),
    #[error("channel width must be positive")]
    ZeroWidth,
}

/// Occupancy of a single channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChannelState {
    IncumbentHeld(IncumbentId),
    Free,
    Assigned(MvnoId),
}

/// An incumbent and the block of channels it may reclaim at any time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incumbent {
    pub id: IncumbentId,
    pub channels: BTreeSet<usize>,
    pub active: bool,
}

impl Incumbent {
    pub fn new(id: impl Into<String>, channels: impl IntoIterator<Item = usize>) -> Self {
        Incumbent {
            id: IncumbentId(id.into()),
            channels: channels.into_iter().collect(),
            active: false,
        }
    }
}

/// Channel layout plus live occupancy. Channel indices run `0..channel_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandPlan {
    channel_width: Hertz,
    incumbents: Vec<Incumbent>,
    occupancy: Vec<ChannelState>,
}

impl BandPlan {
    /// Builds a plan. Incumbents marked active start out holding their block.
    pub fn new(
        channel_width: Hertz,
        channel_count: usize,
        incumbents: Vec<Incumbent>,
    ) -> Result<Self, BandError> {
        if channel_width.0 == 0 {
            return Err(BandError::ZeroWidth);
        }
        let mut owner: Vec<Option<&IncumbentId>> = vec![None; channel_count];
        let mut seen = BTreeSet::new();
        for inc in &incumbents {
            if !seen.insert(&inc.id) {
                return Err(BandError::DuplicateIncumbent(inc.id.clone()));
            }
            if inc.channels.is_empty() {
                return Err(BandError::EmptyBlock(inc.id.clone()));
            }
            for &ch in &inc.channels {
                let slot = owner.get_mut(ch).ok_or(BandError::ChannelOutOfRange {
                    channel: ch,
                    count: channel_count,
                })?;
                if let Some(first) = slot {
                    return Err(BandError::OverlappingBlocks {
                        channel: ch,
                        first: (*first).clone(),
                        second: inc.id.clone(),
                    });
                }
                *slot = Some(&inc.id);
            }
        }

        let mut occupancy = vec![ChannelState::Free; channel_count];
        for inc in incumbents.iter().filter(|i| i.active) {
            for &ch in &inc.channels {
                occupancy[ch] = ChannelState::IncumbentHeld(inc.id.clone());
            }
        }
        Ok(BandPlan {
            channel_width,
            incumbents,
            occupancy,
        })
    }

    /// Eight 5 MHz channels, four incumbents `tv1..tv4` owning `{0,1}`,
    /// `{2,3}`, `{4,5}`, `{6,7}`, all inactive.
    pub fn reference() -> Self {
        let incumbents = (0..4)
            .map(|i| Incumbent::new(format!("tv{}", i + 1), [2 * i, 2 * i + 1]))
            .collect();
        BandPlan::new(CHANNEL_WIDTH, 8, incumbents).expect("reference layout is valid")
    }

    pub fn channel_width(&self) -> Hertz {
        self.channel_width
    }

    pub fn channel_count(&self) -> usize {
        self.occupancy.len()
    }

    pub fn incumbents(&self) -> &[Incumbent] {
        &self.incumbents
    }

    pub fn incumbent(&self, id: &IncumbentId) -> Option<&Incumbent> {
        self.incumbents.iter().find(|i| &i.id == id)
    }

    pub fn active_incumbents(&self) -> usize {
        self.incumbents.iter().filter(|i| i.active).count()
    }

    pub fn state(&self, channel: usize) -> Option<&ChannelState> {
        self.occupancy.get(channel)
    }

    pub fn occupancy(&self) -> &[ChannelState] {
        &self.occupancy
    }

    /// Bandwidth of every channel not currently held by an incumbent.
    pub fn available_bandwidth(&self) -> Hertz {
        let usable = self
            .occupancy
            .iter()
            .filter(|s| !matches!(s, ChannelState::IncumbentHeld(_)))
            .count();
        self.channel_width * usable as u64
    }

    /// Channels in state `Free`, ascending.
    pub fn free_channels(&self) -> Vec<usize> {
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == ChannelState::Free)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn channels_of(&self, mvno: &MvnoId) -> BTreeSet<usize> {
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ChannelState::Assigned(m) if m == mvno))
            .map(|(i, _)| i)
            .collect()
    }

    fn incumbent_index(&self, id: &IncumbentId) -> Result<usize, BandError> {
        self.incumbents
            .iter()
            .position(|i| &i.id == id)
            .ok_or_else(|| BandError::UnknownIncumbent(id.clone()))
    }

    /// The incumbent takes its block back. Returns the licensees that held
    /// any of the reclaimed channels; their assignments on those channels
    /// are dropped.
    pub fn reclaim(&mut self, id: &IncumbentId) -> Result<BTreeSet<MvnoId>, BandError> {
        let idx = self.incumbent_index(id)?;
        if self.incumbents[idx].active {
            return Err(BandError::AlreadyActive(id.clone()));
        }
        self.incumbents[idx].active = true;
        let mut displaced = BTreeSet::new();
        for &ch in &self.incumbents[idx].channels {
            let prev = std::mem::replace(
                &mut self.occupancy[ch],
                ChannelState::IncumbentHeld(id.clone()),
            );
            if let ChannelState::Assigned(m) = prev {
                displaced.insert(m);
            }
        }
        Ok(displaced)
    }

    /// The incumbent stops using its block; the channels become free.
    pub fn release(&mut self, id: &IncumbentId) -> Result<(), BandError> {
        let idx = self.incumbent_index(id)?;
        if !self.incumbents[idx].active {
            return Err(BandError::NotActive(id.clone()));
        }
        self.incumbents[idx].active = false;
        for &ch in &self.incumbents[idx].channels {
            self.occupancy[ch] = ChannelState::Free;
        }
        Ok(())
    }

    pub fn assign(&mut self, channel: usize, mvno: &MvnoId) -> Result<(), BandError> {
        let count = self.channel_count();
        match self.occupancy.get_mut(channel) {
            None => Err(BandError::ChannelOutOfRange { channel, count }),
            Some(s @ ChannelState::Free) => {
                *s = ChannelState::Assigned(mvno.clone());
                Ok(())
            }
            Some(_) => Err(BandError::ChannelNotFree(channel)),
        }
    }

    /// Returns every `Assigned` channel to `Free`.
    pub fn clear_assignments(&mut self) {
        for s in &mut self.occupancy {
            if matches!(s, ChannelState::Assigned(_)) {
                *s = ChannelState::Free;
            }
        }
    }

    /// Activates exactly the first `k` incumbents (in declaration order) on
    /// an otherwise empty band.
    pub fn with_active_prefix(&self, k: usize) -> BandPlan {
        let mut incumbents = self.incumbents.clone();
        for (i, inc) in incumbents.iter_mut().enumerate() {
            inc.active = i < k;
        }
        BandPlan::new(self.channel_width, self.channel_count(), incumbents)
            .expect("layout already validated")
    }

    /// Checks the occupancy invariants; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (ch, state) in self.occupancy.iter().enumerate() {
            let owner = self.incumbents.iter().find(|i| i.channels.contains(&ch));
            match state {
                ChannelState::IncumbentHeld(id) => match owner {
                    Some(o) if &o.id == id && o.active => {}
                    _ => return Err(format!("channel {ch} held by `{id}` which is not its active owner")),
                },
                ChannelState::Assigned(m) => {
                    if owner.is_some_and(|o| o.active) {
                        return Err(format!("channel {ch} assigned to `{m}` under an active incumbent"));
                    }
                }
                ChannelState::Free => {
                    if owner.is_some_and(|o| o.active) {
                        return Err(format!("channel {ch} free under an active incumbent"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(n: u32) -> IncumbentId {
        IncumbentId(format!("tv{n}"))
    }

    #[test]
    fn available_bandwidth_tracks_active_incumbents() {
        let mut plan = BandPlan::reference();
        assert_eq!(plan.available_bandwidth(), Hertz::from_mhz(40));
        plan.reclaim(&tv(1)).unwrap();
        assert_eq!(plan.available_bandwidth(), Hertz::from_mhz(30));
        for n in 2..=4 {
            plan.reclaim(&tv(n)).unwrap();
        }
        assert_eq!(plan.available_bandwidth(), Hertz(0));
    }

    #[test]
    fn reclaim_displaces_assigned_licensees() {
        let mut plan = BandPlan::reference();
        let m3 = MvnoId::from("m3");
        plan.assign(1, &m3).unwrap();
        let displaced = plan.reclaim(&tv(1)).unwrap();
        assert_eq!(displaced, BTreeSet::from([m3]));
        assert_eq!(plan.state(0), Some(&ChannelState::IncumbentHeld(tv(1))));
        assert_eq!(plan.state(1), Some(&ChannelState::IncumbentHeld(tv(1))));

        let displaced = plan.reclaim(&tv(2)).unwrap();
        assert!(displaced.is_empty());
    }

    #[test]
    fn double_reclaim_is_rejected() {
        let mut plan = BandPlan::reference();
        plan.reclaim(&tv(2)).unwrap();
        assert_eq!(plan.reclaim(&tv(2)), Err(BandError::AlreadyActive(tv(2))));
    }

    #[test]
    fn release_frees_block() {
        let mut plan = BandPlan::reference();
        plan.reclaim(&tv(1)).unwrap();
        let before = plan.available_bandwidth();
        plan.release(&tv(1)).unwrap();
        assert_eq!(plan.state(0), Some(&ChannelState::Free));
        assert_eq!(plan.state(1), Some(&ChannelState::Free));
        assert_eq!(plan.available_bandwidth(), before + Hertz::from_mhz(10));
    }

    #[test]
    fn release_of_inactive_incumbent_is_rejected() {
        let mut plan = BandPlan::reference();
        assert_eq!(plan.release(&tv(3)), Err(BandError::NotActive(tv(3))));
        assert!(matches!(
            plan.release(&IncumbentId::from("nope")),
            Err(BandError::UnknownIncumbent(_))
        ));
    }

    #[test]
    fn overlapping_blocks_are_rejected() {
        let err = BandPlan::new(
            CHANNEL_WIDTH,
            8,
            vec![Incumbent::new("a", [0, 1]), Incumbent::new("b", [1, 2])],
        )
        .unwrap_err();
        assert!(matches!(err, BandError::OverlappingBlocks { channel: 1, .. }));
        let err = BandPlan::new(CHANNEL_WIDTH, 4, vec![Incumbent::new("a", [3, 4])]).unwrap_err();
        assert!(matches!(err, BandError::ChannelOutOfRange { channel: 4, .. }));
    }

    #[test]
    fn assign_requires_free_channel() {
        let mut plan = BandPlan::reference();
        plan.reclaim(&tv(1)).unwrap();
        assert_eq!(plan.assign(0, &"m".into()), Err(BandError::ChannelNotFree(0)));
        plan.assign(2, &"m".into()).unwrap();
        assert_eq!(plan.assign(2, &"n".into()), Err(BandError::ChannelNotFree(2)));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Reclaim(u32),
        Release(u32),
        Assign(usize, u8),
        Clear,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (1u32..=4).prop_map(Op::Reclaim),
            (1u32..=4).prop_map(Op::Release),
            (0usize..8, 0u8..4).prop_map(|(c, m)| Op::Assign(c, m)),
            Just(Op::Clear),
        ]
    }

    proptest! {
        #[test]
        fn occupancy_invariants_hold_under_any_sequence(ops in prop::collection::vec(op(), 0..60)) {
            let mut plan = BandPlan::reference();
            for op in ops {
                // Errors are expected for invalid operations; the plan must stay consistent.
                let _ = match op {
                    Op::Reclaim(n) => plan.reclaim(&tv(n)).map(|_| ()),
                    Op::Release(n) => plan.release(&tv(n)),
                    Op::Assign(c, m) => plan.assign(c, &MvnoId(format!("m{m}"))),
                    Op::Clear => { plan.clear_assignments(); Ok(()) }
                };
                prop_assert!(plan.check_invariants().is_ok(), "{:?}", plan.check_invariants());
                let held = plan.occupancy().iter()
                    .filter(|s| matches!(s, ChannelState::IncumbentHeld(_))).count() as u64;
                prop_assert_eq!(plan.available_bandwidth(), CHANNEL_WIDTH * (8 - held));
                prop_assert_eq!(
                    plan.available_bandwidth(),
                    Hertz::from_mhz(40 - 10 * plan.active_incumbents() as u64)
                );
            }
        }

        #[test]
        fn reclaim_then_release_restores_free_pattern(n in 1u32..=4, assigned in prop::collection::vec(0usize..8, 0..8)) {
            let mut plan = BandPlan::reference();
            for ch in assigned {
                let _ = plan.assign(ch, &"m".into());
            }
            let mut expected = plan.clone();
            for &ch in &plan.incumbent(&tv(n)).unwrap().channels {
                expected.occupancy[ch] = ChannelState::Free;
            }
            plan.reclaim(&tv(n)).unwrap();
            plan.release(&tv(n)).unwrap();
            prop_assert_eq!(plan, expected);
        }
    }
}
