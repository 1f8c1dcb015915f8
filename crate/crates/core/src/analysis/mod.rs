//! Verification probes over recorded trajectories.

mod ghidaglia;
mod probes;
mod report;
mod weak;

pub use ghidaglia::{ghidaglia_bound, verify_ghidaglia, GhidagliaParams, GHIDAGLIA_RTOL};
pub use probes::{
    absorbing_probe, boundedness_probe, contraction_probe, contraction_rate_stable,
    threshold_probe, ProbeSetup, ABSORBING_RADIUS_TOLERANCE, CONTRACTION_RATE_TOLERANCE,
    DEFAULT_TAU_FRACTION, HORIZON_GROWTH_TOLERANCE,
};
pub use report::{Evidence, ProbeKind, ProbeReport, Witness};
pub use weak::{default_test_functions, weak_residual, TestFunction};
