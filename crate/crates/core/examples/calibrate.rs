//! Recompute the frozen calibration constant from the deterministic
//! calibration corpus. The printed value is what `constants::LARGE_TUBE_C`
//! must equal; the acceptance suite re-derives it the same way.

use furstenberg::corpus::{
    calibrate_large_tube, calibration_specs, random_nice_config, validation_specs,
    worst_large_tube,
};
use furstenberg::incidence::{check_large_tube, check_union_bound};

fn main() {
    let c = calibrate_large_tube(&calibration_specs()).expect("calibration corpus builds");
    println!("LARGE_TUBE_C = {c:?}");
    println!("bits = {:x}", c.to_bits());

    let mut min_val = f64::INFINITY;
    let mut min_union = f64::INFINITY;
    for spec in validation_specs() {
        let config = random_nice_config(&spec).expect("validation corpus builds");
        let tube = worst_large_tube(&config);
        let r = check_large_tube(&config, &tube);
        if r.ratio.is_finite() {
            min_val = min_val.min(r.ratio);
        }
        min_union = min_union.min(check_union_bound(&config).ratio);
    }
    println!("validation corpus min large-tube ratio = {min_val:?} (must be >= {c:?})");
    println!("validation corpus min union ratio     = {min_union:?}");
}
