//! Licensed Shared Access over a shared, dynamically dimensioned C-RAN.
//!
//! The crate models the LSA spectrum pool ([`band`]), the rate a licensee
//! reaches with a given number of antennas and amount of spectrum
//! ([`rate`]), the revenue-maximizing allocator for the dynamic and static
//! C-RAN systems ([`allocator`]), the evacuation/release message flow
//! between incumbents, repository, controller and C-RAN operator
//! ([`protocol`]), and a deterministic discrete-event driver ([`sim`]).
//! Scenario files, parameter sweeps and CSV output live in [`scenario`],
//! [`sweep`] and [`report`].

pub mod allocator;
pub mod band;
pub mod protocol;
pub mod rate;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod units;
