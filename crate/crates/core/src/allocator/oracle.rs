//! Exhaustive reference allocator for small instances.
//!
//! Enumerates every assignment of a channel count (or nothing) to every
//! licensee, finds the fewest antennas by scanning the whole antenna range
//! and keeps the best combination. It shares no solver code with the
//! option/knapsack path.

use std::cmp::Reverse;

use thiserror::Error;

use crate::band::BandPlan;
use crate::rate::RateModelParams;
use crate::units::{Hertz, Micros};

use super::{build_allocation, Allocation, CostModel, MvnoRequest, SystemLimits};

pub const ORACLE_MAX_MVNOS: usize = 8;
pub const ORACLE_MAX_CHANNELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {mvnos} licensees, {channels} free channels (limits {ORACLE_MAX_MVNOS}/{ORACLE_MAX_CHANNELS})")]
    TooLarge { mvnos: usize, channels: usize },
}

type Picks = Vec<Option<(usize, u32)>>;
type Score = (Micros, usize, Vec<bool>, Reverse<usize>, Reverse<u64>, Reverse<Vec<usize>>);

struct Search<'a> {
    requests: &'a [MvnoRequest],
    order: Vec<usize>,
    /// `choices[i][c]` = antennas needed by request `i` on `c` channels.
    choices: Vec<Vec<Option<u32>>>,
    width: Hertz,
    cost: &'a CostModel,
    current: Picks,
    best: Option<(Score, Picks)>,
}

impl Search<'_> {
    fn score(&self) -> Score {
        let mut revenue = Micros::ZERO;
        let mut served = 0;
        let mut chosen = vec![false; self.order.len()];
        let mut channels = 0;
        let mut antennas = 0u64;
        let mut sizes = vec![0; self.order.len()];
        for (pos, &i) in self.order.iter().enumerate() {
            if let Some((c, m)) = self.current[i] {
                revenue += self.requests[i].income() - self.cost.of(m, self.width * c as u64);
                served += 1;
                chosen[pos] = true;
                channels += c;
                antennas += m as u64;
                sizes[pos] = c;
            }
        }
        (revenue, served, chosen, Reverse(channels), Reverse(antennas), Reverse(sizes))
    }

    fn walk(&mut self, pos: usize, remaining: usize) {
        if pos == self.order.len() {
            let score = self.score();
            if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
                self.best = Some((score, self.current.clone()));
            }
            return;
        }
        let i = self.order[pos];
        self.current[i] = None;
        self.walk(pos + 1, remaining);
        for c in 1..=remaining {
            if let Some(m) = self.choices[i][c] {
                self.current[i] = Some((c, m));
                self.walk(pos + 1, remaining - c);
            }
        }
        self.current[i] = None;
    }
}

/// Maximum-revenue dynamic allocation by brute force. Ties go to more
/// licensees served, then the lexicographically smallest set of served ids,
/// then fewer channels, fewer antennas, and fewer channels for smaller ids.
pub fn allocate_oracle(
    requests: &[MvnoRequest],
    plan: &BandPlan,
    params: &RateModelParams,
    limits: &SystemLimits,
    cost: &CostModel,
) -> Result<Allocation, OracleError> {
    let free = plan.free_channels().len();
    if requests.len() > ORACLE_MAX_MVNOS || free > ORACLE_MAX_CHANNELS {
        return Err(OracleError::TooLarge {
            mvnos: requests.len(),
            channels: free,
        });
    }
    let width = plan.channel_width();
    let choices = requests
        .iter()
        .map(|r| {
            (0..=free)
                .map(|c| {
                    if c == 0 {
                        return None;
                    }
                    let b = width * c as u64;
                    (limits.antennas_min_per_mvno..=limits.antennas_total)
                        .find(|&m| params.rate(m, b) >= r.min_rate)
                })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| requests[a].id.cmp(&requests[b].id));

    let mut search = Search {
        requests,
        order,
        choices,
        width,
        cost,
        current: vec![None; requests.len()],
        best: None,
    };
    search.walk(0, free);
    let (score, picks) = search.best.expect("the empty allocation is always scored");
    let alloc = build_allocation(requests, &picks, plan, params, cost);
    debug_assert_eq!(alloc.revenue, score.0);
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::Bps;

    fn defaults() -> (RateModelParams, SystemLimits, CostModel) {
        (RateModelParams::default(), SystemLimits::default(), CostModel::reference())
    }

    #[test]
    fn no_requests_gives_empty_allocation() {
        let (p, l, c) = defaults();
        let alloc = allocate_oracle(&[], &BandPlan::reference(), &p, &l, &c).unwrap();
        assert!(alloc.entries.is_empty());
        assert_eq!(alloc.revenue, Micros::ZERO);
    }

    #[test]
    fn infeasible_single_request() {
        let (p, l, c) = defaults();
        let reqs = [MvnoRequest::new("m", Bps::from_mbps(5_000), Micros(10))];
        let alloc = allocate_oracle(&reqs, &BandPlan::reference(), &p, &l, &c).unwrap();
        assert_eq!(alloc.served_count(), 0);
        assert_eq!(alloc.revenue, Micros::ZERO);
    }

    #[test]
    fn refuses_large_instances() {
        let (p, l, c) = defaults();
        let reqs: Vec<_> = (0..9)
            .map(|i| MvnoRequest::new(format!("m{i}"), Bps::from_mbps(200), Micros(10)))
            .collect();
        assert_eq!(
            allocate_oracle(&reqs, &BandPlan::reference(), &p, &l, &c),
            Err(OracleError::TooLarge { mvnos: 9, channels: 8 })
        );
        let wide = BandPlan::new(Hertz::from_mhz(5), 9, vec![]).unwrap();
        assert!(allocate_oracle(&reqs[..1], &wide, &p, &l, &c).is_err());
    }

    #[test]
    fn reference_case_serves_five() {
        let (p, l, c) = defaults();
        let reqs: Vec<_> = (1..=5)
            .map(|i| MvnoRequest::new(format!("m{i}"), Bps::from_mbps(200), Micros(10)))
            .collect();
        let plan = BandPlan::reference().with_active_prefix(1);
        let alloc = allocate_oracle(&reqs, &plan, &p, &l, &c).unwrap();
        assert_eq!(alloc.served_count(), 5);
        alloc.check(&reqs, &plan, &p, &l, &c, super::super::Mode::Dynamic).unwrap();
    }
}
