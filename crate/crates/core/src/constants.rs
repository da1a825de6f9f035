//! Calibrated constants, frozen by the deterministic calibration
//! procedures in [`crate::corpus`] and re-derived by the acceptance suite.

/// Implicit constant of the heavy-tube bound `|T| >= c * C^{-1/s} * |T∩P| * M`
/// and of the union bound. Frozen as half the minimum ratio observed on the
/// deterministic calibration corpus ([`crate::corpus::calibration_specs`],
/// 100 configurations at scale 2^-6); recompute with the `calibrate`
/// example. Bit pattern 0x3ff7afff37b17f43.
pub const LARGE_TUBE_C: f64 = 1.480468003799573;

/// Discretization loss factor for sum-product grid line counts: every line
/// of the grid construction must carry at least `|A|_delta / 4` points.
pub const SUMPRODUCT_LINE_FACTOR: f64 = 4.0;
