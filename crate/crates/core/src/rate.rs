//! Achievable rate of a licensee on the shared distributed-MIMO C-RAN.
//!
//! The model is spatial multiplexing with a fixed spectral efficiency per
//! stream: every `antennas_per_stream` antennas add one stream, and each
//! stream carries `sigma` bps per Hz of assigned spectrum:
//!
//! ```text
//! rate(m, b) = b * floor(m / antennas_per_stream) * sigma
//! ```
//!
//! With the defaults (10 antennas per stream, 10 bps/Hz) 20 antennas on
//! 10 MHz give 200 Mbps, and 40 antennas reach the same rate on 5 MHz.

use crate::units::{Bps, Hertz};

/// `sigma` is stored in milli-bps/Hz so that it stays an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RateModelParams {
    pub antennas_per_stream: u32,
    pub sigma_milli_bps_hz: u64,
}

impl Default for RateModelParams {
    fn default() -> Self {
        RateModelParams {
            antennas_per_stream: 10,
            sigma_milli_bps_hz: 10_000,
        }
    }
}

impl RateModelParams {
    pub fn new(antennas_per_stream: u32, sigma_milli_bps_hz: u64) -> Option<Self> {
        (antennas_per_stream >= 1 && sigma_milli_bps_hz > 0).then_some(RateModelParams {
            antennas_per_stream,
            sigma_milli_bps_hz,
        })
    }

    pub fn streams(&self, antennas: u32) -> u32 {
        antennas / self.antennas_per_stream
    }

    pub fn rate(&self, antennas: u32, bandwidth: Hertz) -> Bps {
        let milli = bandwidth.0 as u128 * self.streams(antennas) as u128 * self.sigma_milli_bps_hz as u128;
        Bps((milli / 1000) as u64)
    }

    /// Smallest antenna count in `[m_min, m_max]` reaching `required` on
    /// `bandwidth`, or `None` when no count in the range does.
    pub fn min_antennas(&self, bandwidth: Hertz, required: Bps, m_min: u32, m_max: u32) -> Option<u32> {
        if m_min > m_max {
            return None;
        }
        if self.rate(m_min, bandwidth) >= required {
            return Some(m_min);
        }
        // floor(b * s * sigma / 1000) >= r  <=>  b * s * sigma >= 1000 r
        let per_stream = bandwidth.0 as u128 * self.sigma_milli_bps_hz as u128;
        if per_stream == 0 {
            return None;
        }
        let streams = (required.0 as u128 * 1000).div_ceil(per_stream);
        let antennas = streams * self.antennas_per_stream as u128;
        (antennas <= m_max as u128).then(|| (antennas as u32).max(m_min))
    }
}
