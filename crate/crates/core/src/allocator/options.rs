use crate::rate::RateModelParams;
use crate::units::Hertz;

use super::{CostModel, MvnoRequest, SystemLimits};

/// One way of meeting a licensee's rate requirement: a channel count and
/// the fewest antennas that reach the rate on that much spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceOption {
    pub channels: usize,
    pub antennas: u32,
    pub cost: crate::units::Micros,
}

/// Drops every option for which a narrower (or equally wide) option costs
/// no more. Input must be sorted by ascending channel count.
fn prune(sorted: Vec<ResourceOption>) -> Vec<ResourceOption> {
    let mut out: Vec<ResourceOption> = Vec::with_capacity(sorted.len());
    for opt in sorted {
        if out.last().is_none_or(|kept| opt.cost < kept.cost) {
            out.push(opt);
        }
    }
    out
}

/// Pareto-efficient (channels, antennas) configurations for the dynamic
/// C-RAN, where the antenna count is free within the per-licensee bounds.
pub fn per_mvno_options(
    req: &MvnoRequest,
    params: &RateModelParams,
    limits: &SystemLimits,
    cost: &CostModel,
    channel_width: Hertz,
    max_channels: usize,
) -> Vec<ResourceOption> {
    let all = (1..=max_channels)
        .filter_map(|channels| {
            let bandwidth = channel_width * channels as u64;
            let antennas = params.min_antennas(
                bandwidth,
                req.min_rate,
                limits.antennas_min_per_mvno,
                limits.antennas_total,
            )?;
            Some(ResourceOption {
                channels,
                antennas,
                cost: cost.of(antennas, bandwidth),
            })
        })
        .collect();
    prune(all)
}

/// Options for the static baseline: the antenna count is fixed, only the
/// channel count varies.
pub fn static_options(
    req: &MvnoRequest,
    params: &RateModelParams,
    limits: &SystemLimits,
    cost: &CostModel,
    channel_width: Hertz,
    max_channels: usize,
) -> Vec<ResourceOption> {
    let antennas = limits.static_antennas_per_mvno;
    let all = (1..=max_channels)
        .filter_map(|channels| {
            let bandwidth = channel_width * channels as u64;
            (params.rate(antennas, bandwidth) >= req.min_rate).then(|| ResourceOption {
                channels,
                antennas,
                cost: cost.of(antennas, bandwidth),
            })
        })
        .collect();
    prune(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::CHANNEL_WIDTH;
    use crate::units::{Bps, Micros};

    fn req(mbps: u64) -> MvnoRequest {
        MvnoRequest::new("m1", Bps::from_mbps(mbps), Micros(10))
    }

    fn shape(opts: &[ResourceOption]) -> Vec<(usize, u32)> {
        opts.iter().map(|o| (o.channels, o.antennas)).collect()
    }

    #[test]
    fn options_for_200_mbps() {
        // 5 units per channel, 1 unit per antenna
        let cost = CostModel {
            per_antenna: Micros(1_000_000),
            per_hz: Micros(1),
        };
        let opts = per_mvno_options(
            &req(200),
            &RateModelParams::default(),
            &SystemLimits::default(),
            &cost,
            CHANNEL_WIDTH,
            8,
        );
        let s = shape(&opts);
        assert!(s.contains(&(1, 40)));
        assert!(s.contains(&(2, 20)));
        // Wider than two channels cannot save antennas below the floor of 20.
        assert_eq!(s, vec![(1, 40), (2, 20)]);
        assert_eq!(opts[0].cost, Micros(45_000_000));
        assert_eq!(opts[1].cost, Micros(30_000_000));
    }

    #[test]
    fn expensive_spectrum_prunes_wider_options() {
        // A channel costs 50 units, more than the 20 antennas it would save.
        let opts = per_mvno_options(
            &req(200),
            &RateModelParams::default(),
            &SystemLimits::default(),
            &CostModel::reference(),
            CHANNEL_WIDTH,
            8,
        );
        assert_eq!(shape(&opts), vec![(1, 40)]);
    }

    #[test]
    fn options_for_430_mbps_with_cheap_spectrum() {
        let cost = CostModel {
            per_antenna: Micros(1_000_000),
            per_hz: Micros(0),
        };
        let opts = per_mvno_options(
            &req(430),
            &RateModelParams::default(),
            &SystemLimits::default(),
            &cost,
            CHANNEL_WIDTH,
            8,
        );
        let s = shape(&opts);
        // 5 ch: R(20, 25 MHz) = 500 Mbps; 4 ch: 20 MHz needs 3 streams.
        assert!(s.contains(&(5, 20)));
        assert_eq!(s, vec![(1, 90), (2, 50), (3, 30), (5, 20)]);

        let unpruned: Vec<_> = (1..=8)
            .filter_map(|c| {
                RateModelParams::default()
                    .min_antennas(CHANNEL_WIDTH * c, Bps::from_mbps(430), 20, 100)
                    .map(|m| (c as usize, m))
            })
            .collect();
        assert!(unpruned.contains(&(4, 30)));
    }

    #[test]
    fn infeasible_rate_yields_no_options() {
        let opts = per_mvno_options(
            &req(100_000),
            &RateModelParams::default(),
            &SystemLimits::default(),
            &CostModel::reference(),
            CHANNEL_WIDTH,
            8,
        );
        assert!(opts.is_empty());
    }

    #[test]
    fn static_options_keep_narrowest_feasible() {
        let limits = SystemLimits::default();
        let p = RateModelParams::default();
        let cost = CostModel::reference();
        assert_eq!(shape(&static_options(&req(200), &p, &limits, &cost, CHANNEL_WIDTH, 8)), vec![(2, 20)]);
        assert_eq!(shape(&static_options(&req(430), &p, &limits, &cost, CHANNEL_WIDTH, 8)), vec![(5, 20)]);
        assert!(static_options(&req(430), &p, &limits, &cost, CHANNEL_WIDTH, 4).is_empty());
    }

    #[test]
    fn pruning_drops_wider_and_not_cheaper() {
        let o = |channels, cost| ResourceOption {
            channels,
            antennas: 0,
            cost: Micros(cost),
        };
        let kept = prune(vec![o(1, 10), o(2, 10), o(3, 7), o(4, 9), o(5, 1)]);
        assert_eq!(kept, vec![o(1, 10), o(3, 7), o(5, 1)]);
    }
}
