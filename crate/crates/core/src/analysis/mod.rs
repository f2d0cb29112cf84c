//! Post-processing of trajectories and parameter-plane studies.

mod envelope;
mod raster;
mod rate;

pub use envelope::{check_envelope, EnvelopeFit};
pub use raster::{
    classify_cell, counterexample_cell, single_delay_counterexample, stability_raster, CellClass,
    Raster, RasterAxes, RasterCell, RasterMode, BOUNDARY_BAND, EMPIRICAL_PERIODS,
    EMPIRICAL_STEPS_PER_TAU, EMPIRICAL_X0,
};
pub use rate::{estimate_rate, RateFit, MIN_RATE_SAMPLES, SAMPLE_FLOOR};
