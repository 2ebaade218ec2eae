//! Revenue-maximizing assignment of antennas and LSA channels to licensees.
//!
//! Two systems are modelled. In the dynamic C-RAN every licensee may rent
//! any number of shared antennas within `[antennas_min_per_mvno,
//! antennas_total]`; remote radio heads are shared across licensees since
//! their channels are disjoint. In the static baseline each licensee runs a
//! fixed set of dedicated antennas and only the spectrum is pooled.
//!
//! Revenue is income minus cost. A served licensee pays
//! `price_per_bps * min_rate`; cost is linear in rented antennas and used
//! bandwidth. Licensees whose rate cannot be met are not served at all.
//!
//! Solving happens in two stages: [`per_mvno_options`] lists the
//! Pareto-efficient (channels, antennas) configurations of each licensee,
//! then a multiple-choice knapsack over the free channels picks at most one
//! option per licensee. [`allocate_oracle`] enumerates every combination
//! and is kept as the reference for small instances.
//!
//! Equal-revenue optima are broken deterministically: more licensees
//! served, then the lexicographically smallest set of served ids, then
//! fewer channels, fewer antennas, and finally fewer channels for smaller
//! ids. Both solvers use the same order, so their outputs are identical.

mod knapsack;
mod options;
mod oracle;

use std::collections::BTreeSet;

use crate::band::BandPlan;
use crate::rate::RateModelParams;
use crate::units::{Bps, Hertz, Micros, MvnoId};

pub use options::{per_mvno_options, static_options, ResourceOption};
pub use oracle::{allocate_oracle, OracleError, ORACLE_MAX_CHANNELS, ORACLE_MAX_MVNOS};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MvnoRequest {
    pub id: MvnoId,
    pub min_rate: Bps,
    /// Micro-units per bps of contracted rate.
    pub price_per_bps: Micros,
}

impl MvnoRequest {
    pub fn new(id: impl Into<String>, min_rate: Bps, price_per_bps: Micros) -> Self {
        MvnoRequest {
            id: MvnoId(id.into()),
            min_rate,
            price_per_bps,
        }
    }

    pub fn income(&self) -> Micros {
        Micros(self.price_per_bps.0 * self.min_rate.0 as i128)
    }
}

/// Linear operating cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CostModel {
    /// Micro-units per rented antenna per epoch.
    pub per_antenna: Micros,
    /// Micro-units per Hz of used spectrum per epoch.
    pub per_hz: Micros,
}

impl CostModel {
    /// 1 unit per antenna, 10 units per MHz.
    pub fn reference() -> Self {
        CostModel {
            per_antenna: Micros::from_units(1),
            per_hz: Micros(10),
        }
    }

    pub fn of(&self, antennas: u32, bandwidth: Hertz) -> Micros {
        Micros(self.per_antenna.0 * antennas as i128 + self.per_hz.0 * bandwidth.0 as i128)
    }

    pub fn scale(&self, k: i128) -> CostModel {
        CostModel {
            per_antenna: self.per_antenna.scale(k),
            per_hz: self.per_hz.scale(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemLimits {
    pub antennas_min_per_mvno: u32,
    /// Per-licensee cap in the dynamic system; also the size of the static
    /// system's antenna pool.
    pub antennas_total: u32,
    pub static_antennas_per_mvno: u32,
}

impl Default for SystemLimits {
    fn default() -> Self {
        SystemLimits {
            antennas_min_per_mvno: 20,
            antennas_total: 100,
            static_antennas_per_mvno: 20,
        }
    }
}

impl SystemLimits {
    /// How many licensees the static system can equip with dedicated antennas.
    pub fn static_capacity(&self) -> Option<usize> {
        (self.static_antennas_per_mvno > 0)
            .then(|| (self.antennas_total / self.static_antennas_per_mvno) as usize)
    }
}

/// Which system produced an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Dynamic,
    Static,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MvnoAllocation {
    pub id: MvnoId,
    pub served: bool,
    pub antennas: u32,
    pub channels: BTreeSet<usize>,
    pub rate: Bps,
}

impl MvnoAllocation {
    fn unserved(id: MvnoId) -> Self {
        MvnoAllocation {
            id,
            served: false,
            antennas: 0,
            channels: BTreeSet::new(),
            rate: Bps(0),
        }
    }
}

/// Result of one allocation round. Entries follow the request order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Allocation {
    pub entries: Vec<MvnoAllocation>,
    pub total_income: Micros,
    pub total_cost: Micros,
    pub revenue: Micros,
}

impl Allocation {
    pub fn served_count(&self) -> usize {
        self.entries.iter().filter(|e| e.served).count()
    }

    pub fn served_ids(&self) -> BTreeSet<&MvnoId> {
        self.entries.iter().filter(|e| e.served).map(|e| &e.id).collect()
    }

    pub fn entry(&self, id: &MvnoId) -> Option<&MvnoAllocation> {
        self.entries.iter().find(|e| &e.id == id)
    }

    pub fn total_channels(&self) -> usize {
        self.entries.iter().map(|e| e.channels.len()).sum()
    }

    pub fn total_antennas(&self) -> u64 {
        self.entries.iter().map(|e| e.antennas as u64).sum()
    }

    /// All channels held by any served licensee.
    pub fn assigned_channels(&self) -> BTreeSet<usize> {
        self.entries.iter().flat_map(|e| e.channels.iter().copied()).collect()
    }

    /// Checks every structural guarantee of an allocation made against
    /// `plan`: rate satisfaction, antenna bounds, disjoint channels drawn
    /// from free spectrum, and exact revenue bookkeeping.
    pub fn check(
        &self,
        requests: &[MvnoRequest],
        plan: &BandPlan,
        params: &RateModelParams,
        limits: &SystemLimits,
        cost: &CostModel,
        mode: Mode,
    ) -> Result<(), String> {
        if self.entries.len() != requests.len() {
            return Err("entry count differs from request count".into());
        }
        let free: BTreeSet<usize> = plan.free_channels().into_iter().collect();
        let mut used = BTreeSet::new();
        let mut income = Micros::ZERO;
        let mut spent = Micros::ZERO;
        let mut static_antennas = 0u64;
        for (e, req) in self.entries.iter().zip(requests) {
            if e.id != req.id {
                return Err(format!("entry `{}` out of order", e.id));
            }
            if !e.served {
                if e.antennas != 0 || !e.channels.is_empty() || e.rate != Bps(0) {
                    return Err(format!("unserved `{}` holds resources", e.id));
                }
                continue;
            }
            if e.rate < req.min_rate {
                return Err(format!("`{}` gets {} < {}", e.id, e.rate, req.min_rate));
            }
            let bandwidth = plan.channel_width() * e.channels.len() as u64;
            if e.rate != params.rate(e.antennas, bandwidth) {
                return Err(format!("`{}` rate does not match its resources", e.id));
            }
            match mode {
                Mode::Dynamic => {
                    if e.antennas < limits.antennas_min_per_mvno || e.antennas > limits.antennas_total {
                        return Err(format!("`{}` has {} antennas, outside bounds", e.id, e.antennas));
                    }
                }
                Mode::Static => {
                    if e.antennas != limits.static_antennas_per_mvno {
                        return Err(format!("`{}` has {} antennas in the static system", e.id, e.antennas));
                    }
                    static_antennas += e.antennas as u64;
                }
            }
            for &ch in &e.channels {
                if !free.contains(&ch) {
                    return Err(format!("`{}` assigned non-free channel {ch}", e.id));
                }
                if !used.insert(ch) {
                    return Err(format!("channel {ch} assigned twice"));
                }
            }
            income += req.income();
            spent += cost.of(e.antennas, bandwidth);
        }
        if mode == Mode::Static && static_antennas > limits.antennas_total as u64 {
            return Err("static system exceeds its antenna pool".into());
        }
        if income != self.total_income || spent != self.total_cost {
            return Err("income or cost bookkeeping mismatch".into());
        }
        if self.revenue != self.total_income - self.total_cost {
            return Err("revenue differs from income minus cost".into());
        }
        Ok(())
    }
}

/// Turns per-request picks of (channel count, antennas) into an allocation,
/// handing out free channels lowest index first in request order.
pub(crate) fn build_allocation(
    requests: &[MvnoRequest],
    picks: &[Option<(usize, u32)>],
    plan: &BandPlan,
    params: &RateModelParams,
    cost: &CostModel,
) -> Allocation {
    let mut free = plan.free_channels().into_iter();
    let mut out = Allocation::default();
    for (req, pick) in requests.iter().zip(picks) {
        let Some((channels, antennas)) = *pick else {
            out.entries.push(MvnoAllocation::unserved(req.id.clone()));
            continue;
        };
        let set: BTreeSet<usize> = free.by_ref().take(channels).collect();
        debug_assert_eq!(set.len(), channels, "picks exceed the free channels");
        let bandwidth = plan.channel_width() * channels as u64;
        out.total_income += req.income();
        out.total_cost += cost.of(antennas, bandwidth);
        out.entries.push(MvnoAllocation {
            id: req.id.clone(),
            served: true,
            antennas,
            channels: set,
            rate: params.rate(antennas, bandwidth),
        });
    }
    out.revenue = out.total_income - out.total_cost;
    out
}

/// Request indices sorted by id; tie-breaking prefers earlier positions here.
fn id_order(requests: &[MvnoRequest]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| requests[a].id.cmp(&requests[b].id));
    order
}

fn solve_with(
    requests: &[MvnoRequest],
    plan: &BandPlan,
    params: &RateModelParams,
    cost: &CostModel,
    option_sets: Vec<Vec<ResourceOption>>,
    max_served: Option<usize>,
) -> Allocation {
    let capacity = plan.free_channels().len();
    let order = id_order(requests);
    let groups: Vec<Vec<knapsack::Item>> = order
        .iter()
        .map(|&i| {
            let income = requests[i].income();
            option_sets[i]
                .iter()
                .map(|o| knapsack::Item {
                    channels: o.channels,
                    antennas: o.antennas,
                    value: income - o.cost,
                })
                .collect()
        })
        .collect();
    let chosen = knapsack::solve(&groups, capacity, max_served);

    let mut picks = vec![None; requests.len()];
    for (pos, &i) in order.iter().enumerate() {
        picks[i] = chosen[pos].map(|o| (option_sets[i][o].channels, option_sets[i][o].antennas));
    }
    build_allocation(requests, &picks, plan, params, cost)
}

/// Optimal allocation for the dynamic C-RAN over the plan's free channels.
pub fn allocate_dynamic(
    requests: &[MvnoRequest],
    plan: &BandPlan,
    params: &RateModelParams,
    limits: &SystemLimits,
    cost: &CostModel,
) -> Allocation {
    let capacity = plan.free_channels().len();
    let option_sets = requests
        .iter()
        .map(|r| per_mvno_options(r, params, limits, cost, plan.channel_width(), capacity))
        .collect();
    solve_with(requests, plan, params, cost, option_sets, None)
}

/// Optimal allocation for the static baseline: fixed dedicated antennas per
/// licensee, drawn from a pool of `antennas_total`.
pub fn allocate_static(
    requests: &[MvnoRequest],
    plan: &BandPlan,
    params: &RateModelParams,
    limits: &SystemLimits,
    cost: &CostModel,
) -> Allocation {
    let capacity = plan.free_channels().len();
    let option_sets = requests
        .iter()
        .map(|r| static_options(r, params, limits, cost, plan.channel_width(), capacity))
        .collect();
    solve_with(requests, plan, params, cost, option_sets, limits.static_capacity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::IncumbentId;

    /// 10 micros/bps: 200 Mbps earns 2000 units, more than the 1200 units
    /// the most expensive possible 8-licensee configuration can cost.
    const HIGH_PRICE: Micros = Micros(10);

    fn requests(n: usize, mbps: u64) -> Vec<MvnoRequest> {
        (1..=n)
            .map(|i| MvnoRequest::new(format!("mvno{i}"), Bps::from_mbps(mbps), HIGH_PRICE))
            .collect()
    }

    fn plan_with(active: usize) -> BandPlan {
        BandPlan::reference().with_active_prefix(active)
    }

    fn run(mode: Mode, reqs: &[MvnoRequest], plan: &BandPlan) -> Allocation {
        let (p, l, c) = (RateModelParams::default(), SystemLimits::default(), CostModel::reference());
        let alloc = match mode {
            Mode::Dynamic => allocate_dynamic(reqs, plan, &p, &l, &c),
            Mode::Static => allocate_static(reqs, plan, &p, &l, &c),
        };
        alloc.check(reqs, plan, &p, &l, &c, mode).unwrap();
        alloc
    }

    #[test]
    fn dynamic_serves_all_five_with_one_incumbent() {
        let alloc = run(Mode::Dynamic, &requests(5, 200), &plan_with(1));
        assert_eq!(alloc.served_count(), 5);
        for e in &alloc.entries {
            assert_eq!(e.channels.len(), 1);
            assert_eq!(e.antennas, 40);
        }
    }

    #[test]
    fn dynamic_serves_eight_on_empty_band() {
        assert_eq!(run(Mode::Dynamic, &requests(8, 200), &plan_with(0)).served_count(), 8);
    }

    #[test]
    fn nothing_served_without_spectrum() {
        let alloc = run(Mode::Dynamic, &requests(5, 200), &plan_with(4));
        assert_eq!(alloc.served_count(), 0);
        assert_eq!(alloc.revenue, Micros::ZERO);
    }

    #[test]
    fn dynamic_430_mbps_fits_five() {
        let alloc = run(Mode::Dynamic, &requests(5, 430), &plan_with(0));
        assert_eq!(alloc.served_count(), 5);
        assert!(alloc.entries.iter().all(|e| e.antennas == 90 && e.channels.len() == 1));
    }

    #[test]
    fn static_examples() {
        let alloc = run(Mode::Static, &requests(5, 200), &plan_with(1));
        assert_eq!(alloc.served_count(), 3);
        assert!(alloc.entries.iter().filter(|e| e.served).all(|e| e.channels.len() == 2));
        assert_eq!(run(Mode::Static, &requests(5, 200), &plan_with(0)).served_count(), 4);
        let alloc = run(Mode::Static, &requests(5, 430), &plan_with(0));
        assert_eq!(alloc.served_count(), 1);
        assert_eq!(alloc.entries[0].channels.len(), 5);
    }

    #[test]
    fn static_pool_caps_served_count() {
        // 16 channels would fit 8 two-channel licensees, but 100 antennas
        // only equip five of them.
        let plan = BandPlan::new(Hertz::from_mhz(5), 16, vec![]).unwrap();
        assert_eq!(run(Mode::Static, &requests(8, 200), &plan).served_count(), 5);
        assert_eq!(run(Mode::Dynamic, &requests(8, 200), &plan).served_count(), 8);
    }

    #[test]
    fn channels_are_assigned_lowest_free_first() {
        let mut plan = BandPlan::reference();
        plan.reclaim(&IncumbentId::from("tv1")).unwrap();
        let alloc = run(Mode::Dynamic, &requests(2, 200), &plan);
        assert_eq!(alloc.entries[0].channels, BTreeSet::from([2]));
        assert_eq!(alloc.entries[1].channels, BTreeSet::from([3]));
    }

    #[test]
    fn ties_favour_smaller_ids() {
        let plan = plan_with(3);
        let mut reqs = requests(3, 200);
        reqs.reverse();
        let alloc = run(Mode::Dynamic, &reqs, &plan);
        let served: Vec<_> = alloc.served_ids().into_iter().map(|m| m.as_str()).collect();
        assert_eq!(served, vec!["mvno1", "mvno2"]);
    }

    #[test]
    fn income_counts_contracted_rate_only() {
        let cheap = CostModel {
            per_antenna: Micros(0),
            per_hz: Micros(0),
        };
        let reqs = requests(1, 200);
        let plan = plan_with(0);
        let alloc = allocate_dynamic(&reqs, &plan, &RateModelParams::default(), &SystemLimits::default(), &cheap);
        assert_eq!(alloc.total_income, Micros(10 * 200_000_000));
        // Extra spectrum earns nothing, so the narrowest option is kept.
        assert_eq!(alloc.entries[0].channels.len(), 1);
    }

    #[test]
    fn unprofitable_licensees_are_not_served() {
        let reqs = vec![MvnoRequest::new("m", Bps::from_mbps(200), Micros(0))];
        let alloc = run(Mode::Dynamic, &reqs, &plan_with(0));
        assert_eq!(alloc.served_count(), 0);
    }
}
