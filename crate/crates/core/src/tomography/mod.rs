//! Line tomography: synthetic OTDR reflectograms, step fitting that turns a
//! trace into a list of local leaks, and modulated transmittometry that
//! measures the total leak end to end.

mod accuracy;
mod fit;
mod reflectogram;
mod transmittometry;

pub use accuracy::{detection_accuracy, detection_accuracy_with, AccuracyConfig, AccuracyReport};
pub use fit::{fit_tomogram, fit_tomogram_with, FitConfig, Tomogram};
pub use reflectogram::{step_db, synth_reflectogram, Reflectogram, REFLECTOGRAM_CSV_HEADER};
pub use transmittometry::{
    naive_rms_estimate, transmittometry_estimate, TestPulse, TransmittometryConfig,
};

/// `median` of a non-empty slice, reordering it in place.
pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    debug_assert!(n > 0);
    let (_, &mut hi, _) = v.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        return hi;
    }
    let lo = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.5 * (lo + hi)
}
