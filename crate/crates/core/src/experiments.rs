//! Batch experiments and report emission: the incidence-count measurement
//! over random configurations, the ball sharpness example, projection
//! counting over direction sets, and the sum-product grid. All counts are
//! exact integers; the log-log fit layer is the only floating-point code
//! and is isolated here.

use crate::corpus::{family_size_for, random_slope_plan};
use crate::dyadic::{PointSet, Scale};
use crate::error::Error;
use crate::generators::{
    dyadic_from_f64, gen_ball, gen_random_frostman, gen_random_frostman_1d, GeneratorConfig,
};
use crate::incidence::{build_nice_config, build_product_config};
use crate::interval::IntervalSet;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const REPORT_SCHEMA: &str = "report/v1";

/// Ordinary least squares on `(x, y)` pairs, with the RMS residual.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub n: usize,
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<FitResult> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = nf * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    let residual_rms = (points
        .iter()
        .map(|&(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(FitResult { slope, intercept, residual_rms, n })
}

/// Environment stamp for reproducibility.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnvStamp {
    pub version: String,
    pub seeds: Vec<u64>,
}

impl EnvStamp {
    fn new(seeds: Vec<u64>) -> EnvStamp {
        EnvStamp { version: env!("CARGO_PKG_VERSION").into(), seeds }
    }
}

/// Self-contained experiment report: a numeric table plus the fit. Counts
/// are exact integers stored as floats (all below 2^53).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub schema: String,
    pub kind: String,
    pub params: serde_json::Value,
    pub env: EnvStamp,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fit: Option<FitResult>,
    /// Comparison exponent (e.g. `t/2`).
    pub target: Option<f64>,
    /// Measured slope minus target: the observed stand-in for the
    /// non-effective gain, reported, never asserted.
    pub gap_to_target: Option<f64>,
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Write `report.json` and `report.csv` under `dir`. Bit-stable for
/// identical inputs.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = std::fs::File::create(dir.join("report.json"))?;
    writeln!(json, "{}", serde_json::to_string_pretty(report)?)?;
    std::fs::write(dir.join("report.csv"), report.to_csv())?;
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?)
}

/// 1-D set construction for direction and sum-product sets, relative to a
/// `[lo, hi)` range at a given scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Set1dSpec {
    Full,
    /// `count` cells starting at the left end, spaced `step` cells apart.
    Progression { step: u64, count: u64 },
    /// Iterated 1-D pattern: keep `cells ⊂ [0, 2^depth)` per block.
    Cantor { depth: u32, cells: Vec<u32> },
    Random { s: f64, seed: u64 },
}

impl Set1dSpec {
    pub fn build(&self, scale: Scale, lo: i64, hi: i64) -> Result<IntervalSet> {
        match self {
            Set1dSpec::Full => Ok(IntervalSet::full(scale, lo, hi)),
            Set1dSpec::Progression { step, count } => {
                let n = scale.cells_per_unit();
                let start = lo * n;
                let cells = (0..*count as i64).map(|i| start + i * (*step).max(1) as i64);
                IntervalSet::from_indices(scale, lo, hi, cells)
            }
            Set1dSpec::Cantor { depth, cells } => {
                if cells.is_empty() || cells.iter().any(|&c| c >= 1 << depth) {
                    return Err(Error::Precondition("bad 1-D Cantor pattern".into()));
                }
                if scale.exp() % depth != 0 || hi - lo != 1 {
                    return Err(Error::Precondition(
                        "1-D Cantor needs a unit range and depth dividing the scale".into(),
                    ));
                }
                let mut acc: Vec<i64> = vec![lo];
                for _ in 0..scale.exp() / depth {
                    let mut next = Vec::with_capacity(acc.len() * cells.len());
                    for &c in &acc {
                        for &d in cells {
                            next.push((c << depth) + d as i64);
                        }
                    }
                    next.sort_unstable();
                    acc = next;
                }
                IntervalSet::from_indices(scale, lo, hi, acc)
            }
            Set1dSpec::Random { s, seed } => {
                Ok(gen_random_frostman_1d(*s, scale, lo, hi, *seed)?.0)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Projection counting
// ---------------------------------------------------------------------------

/// Exact `δ`-covering count of `Π_s(P) = {x - s·y}` for a dyadic direction
/// `s = s_num·δ ≥ 0`: per square, the image is an interval with exactly
/// computable covering cells; ranges are merged by a sweep.
pub fn project_count(p: &PointSet, s_num: i64) -> u64 {
    let ranges = project_ranges(p, s_num);
    let mut total = 0u64;
    let mut last_end: Option<i64> = None;
    for (lo, hi) in ranges {
        let lo = match last_end {
            Some(e) if e >= lo => e + 1,
            _ => lo,
        };
        if lo > hi {
            continue;
        }
        total += (hi - lo + 1) as u64;
        last_end = Some(hi);
    }
    total
}

/// Per-square covering cell ranges `[k_min, k_max]`, sorted.
fn project_ranges(p: &PointSet, s_num: i64) -> Vec<(i64, i64)> {
    let m = p.scale().exp();
    let unit = 1i128 << m;
    let mut ranges: Vec<(i64, i64)> = p
        .indices()
        .map(|(i, j)| {
            let (i, j, s) = (i as i128, j as i128, s_num as i128);
            let lo = i * unit - s * (j + 1);
            let hi = (i + 1) * unit - s * j;
            let k_min = if lo.rem_euclid(unit) == 0 { lo / unit } else { lo.div_euclid(unit) };
            let k_max = if hi.rem_euclid(unit) == 0 { hi / unit - 1 } else { hi.div_euclid(unit) };
            (k_min as i64, k_max as i64)
        })
        .collect();
    ranges.sort_unstable();
    ranges
}

/// Brute-force oracle: the same per-square ranges, deduplicated through a
/// set instead of the sweep.
pub fn project_count_oracle(p: &PointSet, s_num: i64) -> u64 {
    let mut cells = std::collections::BTreeSet::new();
    for (lo, hi) in project_ranges(p, s_num) {
        for k in lo..=hi {
            cells.insert(k);
        }
    }
    cells.len() as u64
}

// ---------------------------------------------------------------------------
// Experiment specifications
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    /// Tube-count growth over random configurations: fit the exponent of
    /// `|𝒯|/M` against `1/δ` and compare with `t/2`.
    Furstenberg { delta_exps: Vec<u32>, seeds: Vec<u64>, s: f64, t: f64 },
    /// The ball example: `P = B(center, r)` with one shared slope set; the
    /// ratio `|𝒯|/(|𝒯(p)|·|P|^{1/2})` should be scale-free.
    Sharpness {
        delta_exps: Vec<u32>,
        r_exp: u32,
        s: f64,
        seed: u64,
        #[serde(default = "default_center")]
        center: (f64, f64),
    },
    /// Projection counts over a direction set in `[1,2]`.
    Projection {
        delta_exps: Vec<u32>,
        set: GeneratorConfig,
        directions: Set1dSpec,
        /// Optional heuristic subset search: keep this fraction of `P` in
        /// the most loaded image cells (results are labeled heuristic).
        heuristic_fraction: Option<f64>,
    },
    /// The Elekes grid `(A+B₁) × (A·B₂)` with its line family.
    SumProduct { delta_exps: Vec<u32>, a: Set1dSpec, b1: Set1dSpec, b2: Set1dSpec },
}

fn default_center() -> (f64, f64) {
    (0.5, 0.5)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec {
        ExperimentSpec::Furstenberg { delta_exps, seeds, s, t } => {
            run_furstenberg(delta_exps, seeds, *s, *t)
        }
        ExperimentSpec::Sharpness { delta_exps, r_exp, s, seed, center } => {
            run_sharpness(delta_exps, *r_exp, *s, *seed, *center)
        }
        ExperimentSpec::Projection { delta_exps, set, directions, heuristic_fraction } => {
            run_projection(delta_exps, set, directions, *heuristic_fraction)
        }
        ExperimentSpec::SumProduct { delta_exps, a, b1, b2 } => {
            run_sumproduct(delta_exps, a, b1, b2)
        }
    }
    .map(|mut r| {
        r.params = serde_json::to_value(spec).expect("spec serializes");
        r
    })
}

/// Degeneracy detector: the set drops to dimension ≤ `s` at some
/// intermediate scale (`|P|_Δ ≤ Δ^{-s}`), so the slope fan cannot add
/// dimension there.
fn collapsed_profile(p: &PointSet, s: f64) -> Result<bool> {
    let m = p.scale().exp();
    for e in 1..m {
        let cov = p.covering_number(Scale::new(e))? as f64;
        if cov <= (e as f64 * s).exp2() + 1e-9 {
            return Ok(true);
        }
    }
    Ok(false)
}

fn run_furstenberg(
    delta_exps: &[u32],
    seeds: &[u64],
    s: f64,
    t: f64,
) -> Result<ExperimentReport> {
    if !(0.0 < s && s < 1.0) {
        return Err(Error::Precondition(format!("s = {s} outside (0,1)")));
    }
    if !(s < t && t <= 2.0) {
        return Err(Error::Precondition(format!("t = {t} outside (s, 2]")));
    }
    if seeds.is_empty() {
        return Err(Error::Precondition("randomized experiment needs seeds".into()));
    }
    let mut rows = Vec::new();
    let mut fit_points = Vec::new();
    let mut degenerate = false;
    let mut notes = Vec::new();
    for &exp in delta_exps {
        let delta = Scale::new(exp);
        let m = family_size_for(s, exp);
        let mut log_sum = 0.0;
        for &seed in seeds {
            let (points, _) = gen_random_frostman(t, delta, seed)?;
            let is_degenerate = collapsed_profile(&points, s)?;
            if is_degenerate {
                degenerate = true;
                notes.push(format!(
                    "degenerate: |P|_Δ collapses to ≤ Δ^-s at δ = 2^-{exp}, seed {seed}"
                ));
            }
            let plan = random_slope_plan(&points, s, m, seed.wrapping_mul(0x9E37_79B9))?;
            let config = build_nice_config(&points, &plan, s, m, None)?;
            let union = config.union_family().len();
            rows.push(vec![
                exp as f64,
                seed as f64,
                points.len() as f64,
                m as f64,
                union as f64,
                union as f64 / m as f64,
                if is_degenerate { 1.0 } else { 0.0 },
            ]);
            log_sum += (union as f64 / m as f64).ln();
        }
        let mean_log = log_sum / seeds.len() as f64;
        fit_points.push((exp as f64 * std::f64::consts::LN_2, mean_log));
    }
    let fit = fit_line(&fit_points);
    let target = t / 2.0;
    let gap = fit.as_ref().map(|f| f.slope - target);
    notes.push(format!(
        "measured exponent of |T|/M vs 1/δ: {:?}; the gap over t/2 is the observed \
         stand-in for the non-effective improvement and is not asserted",
        fit.as_ref().map(|f| f.slope)
    ));
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        kind: "furstenberg".into(),
        params: serde_json::Value::Null,
        env: EnvStamp::new(seeds.to_vec()),
        columns: vec![
            "delta_exp".into(),
            "seed".into(),
            "n_points".into(),
            "m".into(),
            "union_tubes".into(),
            "union_over_m".into(),
            "degenerate".into(),
        ],
        rows,
        fit,
        target: Some(target),
        gap_to_target: gap,
        degenerate,
        notes,
    })
}

fn run_sharpness(
    delta_exps: &[u32],
    r_exp: u32,
    s: f64,
    seed: u64,
    center: (f64, f64),
) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut fit_points = Vec::new();
    let center = (dyadic_from_f64(center.0)?, dyadic_from_f64(center.1)?);
    let radius = Scale::new(r_exp).dyadic();
    for &exp in delta_exps {
        if exp < r_exp {
            return Err(Error::Precondition(format!(
                "δ = 2^-{exp} is coarser than r = 2^-{r_exp}"
            )));
        }
        let delta = Scale::new(exp);
        let points = gen_ball(center, radius, delta);
        let (slopes, _) = gen_random_frostman_1d(s, delta, -1, 1, seed)?;
        let slope_vec: Vec<i64> = slopes.indices().collect();
        let m = slope_vec.len() as u64;
        let config = build_product_config(&points, &slope_vec, s, m, None)?;
        let union = config.union_family().len();
        let ratio = union as f64 / (m as f64 * (points.len() as f64).sqrt());
        rows.push(vec![
            exp as f64,
            points.len() as f64,
            m as f64,
            union as f64,
            ratio,
        ]);
        fit_points.push((exp as f64 * std::f64::consts::LN_2, ratio.ln()));
    }
    let fit = fit_line(&fit_points);
    let gap = fit.as_ref().map(|f| f.slope);
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        kind: "sharpness".into(),
        params: serde_json::Value::Null,
        env: EnvStamp::new(vec![seed]),
        columns: vec![
            "delta_exp".into(),
            "n_points".into(),
            "tubes_per_point".into(),
            "union_tubes".into(),
            "ratio".into(),
        ],
        rows,
        fit,
        target: Some(0.0),
        gap_to_target: gap,
        degenerate: false,
        notes: vec![
            "ratio = |T| / (|T(p)|·|P|^(1/2)); a flat log-log slope is the \
             scale-free sharpness of the ball example"
                .into(),
        ],
    })
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

fn run_projection(
    delta_exps: &[u32],
    set: &GeneratorConfig,
    directions: &Set1dSpec,
    heuristic_fraction: Option<f64>,
) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut notes = vec![
        "directions are the left endpoints of a δ-discretized subset of [1,2]".into(),
    ];
    for &exp in delta_exps {
        let delta = Scale::new(exp);
        let points = rescale_generator(set, exp)?.build()?;
        if points.scale() != delta {
            return Err(Error::Precondition("generator scale mismatch".into()));
        }
        let dirs = directions.build(delta, 1, 2)?;
        if dirs.is_empty() {
            return Err(Error::Precondition("empty direction set".into()));
        }
        let mut counts: Vec<u64> = dirs.indices().map(|k| project_count(&points, k)).collect();
        counts.sort_unstable();
        let n = points.len();
        let ge_sqrt = counts
            .iter()
            .filter(|&&c| (c as u128) * (c as u128) >= n as u128)
            .count() as f64
            / counts.len() as f64;
        rows.push(vec![
            exp as f64,
            n as f64,
            counts.len() as f64,
            counts[0] as f64,
            median(&counts),
            *counts.last().unwrap() as f64,
            ge_sqrt,
        ]);
        if let Some(fraction) = heuristic_fraction {
            let (dir, kept, proj) = heuristic_small_projection(&points, &dirs, fraction);
            notes.push(format!(
                "heuristic (not part of any acceptance check): at δ = 2^-{exp}, direction \
                 index {dir} admits a subset of {kept} squares with projection count {proj}"
            ));
        }
    }
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        kind: "projection".into(),
        params: serde_json::Value::Null,
        env: EnvStamp::new(vec![]),
        columns: vec![
            "delta_exp".into(),
            "n_points".into(),
            "n_directions".into(),
            "min_proj".into(),
            "median_proj".into(),
            "max_proj".into(),
            "frac_ge_sqrt".into(),
        ],
        rows,
        fit: None,
        target: None,
        gap_to_target: None,
        degenerate: false,
        notes,
    })
}

/// Rebuild a generator config at a different scale (used to sweep δ).
fn rescale_generator(g: &GeneratorConfig, exp: u32) -> Result<GeneratorConfig> {
    Ok(match g.clone() {
        GeneratorConfig::Grid { .. } => GeneratorConfig::Grid { delta_exp: exp },
        GeneratorConfig::Random { s, seed, .. } => {
            GeneratorConfig::Random { s, delta_exp: exp, seed }
        }
        GeneratorConfig::Ball { center, radius, .. } => {
            GeneratorConfig::Ball { center, radius, delta_exp: exp }
        }
        GeneratorConfig::Cantor { pattern_depth, pattern, .. } => {
            if exp % pattern_depth != 0 {
                return Err(Error::Precondition(format!(
                    "pattern depth {pattern_depth} does not divide δ exponent {exp}"
                )));
            }
            GeneratorConfig::Cantor { pattern_depth, pattern, levels: exp / pattern_depth }
        }
    })
}

/// Greedy heuristic subset with a small projection: keep the squares
/// landing in the most loaded image cells of the best direction.
fn heuristic_small_projection(
    points: &PointSet,
    dirs: &IntervalSet,
    fraction: f64,
) -> (i64, u64, u64) {
    let target = ((points.len() as f64) * fraction).ceil() as u64;
    let mut best = (0i64, 0u64, u64::MAX);
    for k in dirs.indices() {
        // Load per image cell (by left covering cell of each square).
        let mut load: std::collections::BTreeMap<i64, Vec<(i64, i64)>> = Default::default();
        for (lo_hi, sq) in project_ranges_with_squares(points, k) {
            load.entry(lo_hi.0).or_default().push(sq);
        }
        let mut cells: Vec<(&i64, &Vec<(i64, i64)>)> = load.iter().collect();
        cells.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        let mut subset = Vec::new();
        for (_, squares) in cells {
            if (subset.len() as u64) >= target {
                break;
            }
            subset.extend_from_slice(squares);
        }
        let sub = PointSet::from_indices_in(points.scale(), points.domain(), subset)
            .expect("subset of a valid set");
        let proj = project_count(&sub, k);
        if proj < best.2 {
            best = (k, sub.len(), proj);
        }
    }
    best
}

fn project_ranges_with_squares(
    p: &PointSet,
    s_num: i64,
) -> Vec<((i64, i64), (i64, i64))> {
    let m = p.scale().exp();
    let unit = 1i128 << m;
    p.indices()
        .map(|(i, j)| {
            let (ii, jj, s) = (i as i128, j as i128, s_num as i128);
            let lo = ii * unit - s * (jj + 1);
            let hi = (ii + 1) * unit - s * jj;
            let k_min = if lo.rem_euclid(unit) == 0 { lo / unit } else { lo.div_euclid(unit) };
            let k_max = if hi.rem_euclid(unit) == 0 { hi / unit - 1 } else { hi.div_euclid(unit) };
            (((k_min as i64), (k_max as i64)), (i, j))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sum-product grid
// ---------------------------------------------------------------------------

/// The Elekes grid data at one scale: the sum and product sets, the grid
/// size, and the per-line point counts of the line family.
pub struct SumProductData {
    pub a: IntervalSet,
    pub b1: IntervalSet,
    pub b2: IntervalSet,
    pub sum: IntervalSet,
    pub prod: IntervalSet,
    pub min_line_count: u64,
    pub lines_checked: u64,
}

/// Count the grid squares met by the line `v = b2·(u - b1)` (the image of
/// `x ↦ (x + b1, b2·x)`), exactly: per sum-cell `u`, the line's `v`-range
/// overlaps a computable cell range intersected with the product set.
fn line_count(sum: &IntervalSet, prod: &IntervalSet, b1: i64, b2: i64, m: u32) -> u64 {
    let unit = 1i128 << m;
    let prod_cells: Vec<i64> = prod.indices().collect();
    let mut count = 0u64;
    for u in sum.indices() {
        // v-range of the line over u ∈ [u0, u0+δ): v = b2(u - b1) with all
        // values in units of δ²: [b2·(u - b1), b2·(u + 1 - b1)).
        let lo = b2 as i128 * (u - b1) as i128;
        let hi = b2 as i128 * (u + 1 - b1) as i128;
        let k_min = if lo.rem_euclid(unit) == 0 { lo / unit } else { lo.div_euclid(unit) };
        let k_max = if hi.rem_euclid(unit) == 0 { hi / unit - 1 } else { hi.div_euclid(unit) };
        let lo_idx = prod_cells.partition_point(|&v| v < k_min as i64);
        let hi_idx = prod_cells.partition_point(|&v| v <= k_max as i64);
        count += (hi_idx - lo_idx) as u64;
    }
    count
}

pub fn sumproduct_data(
    delta: Scale,
    a_spec: &Set1dSpec,
    b1_spec: &Set1dSpec,
    b2_spec: &Set1dSpec,
) -> Result<SumProductData> {
    let a = a_spec.build(delta, 1, 2)?;
    let b1 = b1_spec.build(delta, 1, 2)?;
    let b2 = b2_spec.build(delta, 1, 2)?;
    if a.is_empty() || b1.is_empty() || b2.is_empty() {
        return Err(Error::EmptySet("sum-product sets must be nonempty".into()));
    }
    let sum = a.sumset(&b1)?;
    let prod = a.productset(&b2)?;
    let m = delta.exp();
    let mut min_line = u64::MAX;
    let mut lines = 0u64;
    for b1c in b1.indices() {
        for b2c in b2.indices() {
            let c = line_count(&sum, &prod, b1c, b2c, m);
            min_line = min_line.min(c);
            lines += 1;
        }
    }
    Ok(SumProductData { a, b1, b2, sum, prod, min_line_count: min_line, lines_checked: lines })
}

fn run_sumproduct(
    delta_exps: &[u32],
    a_spec: &Set1dSpec,
    b1_spec: &Set1dSpec,
    b2_spec: &Set1dSpec,
) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut fit_points = Vec::new();
    let mut notes = Vec::new();
    for &exp in delta_exps {
        let delta = Scale::new(exp);
        let data = sumproduct_data(delta, a_spec, b1_spec, b2_spec)?;
        let factor = crate::constants::SUMPRODUCT_LINE_FACTOR;
        if (data.min_line_count as f64) * factor < data.a.len() as f64 {
            return Err(Error::Precondition(format!(
                "line-count floor violated at δ = 2^-{exp}: {} < |A|/{factor}",
                data.min_line_count
            )));
        }
        let lhs = data.sum.len() as f64 * data.prod.len() as f64;
        let rhs = data.a.len() as f64
            * (data.b1.len() as f64).sqrt()
            * (data.b2.len() as f64).sqrt();
        rows.push(vec![
            exp as f64,
            data.a.len() as f64,
            data.b1.len() as f64,
            data.b2.len() as f64,
            data.sum.len() as f64,
            data.prod.len() as f64,
            data.min_line_count as f64,
            lhs / rhs,
        ]);
        fit_points.push((exp as f64 * std::f64::consts::LN_2, (lhs / rhs).ln()));
    }
    let fit = fit_line(&fit_points);
    let gap = fit.as_ref().map(|f| f.slope);
    notes.push(
        "ratio = |A+B1|·|A·B2| / (|A|·|B1|^(1/2)·|B2|^(1/2)); its growth exponent \
         is the measured stand-in for the non-effective sum-product gain"
            .into(),
    );
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        kind: "sumproduct".into(),
        params: serde_json::Value::Null,
        env: EnvStamp::new(vec![]),
        columns: vec![
            "delta_exp".into(),
            "a".into(),
            "b1".into(),
            "b2".into(),
            "sum".into(),
            "prod".into(),
            "min_line_count".into(),
            "ratio".into(),
        ],
        rows,
        fit,
        target: None,
        gap_to_target: gap,
        degenerate: false,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projection_full_grid_direction_one() {
        // Π_1 of the full grid covers (-1, 1): exactly 2/δ cells.
        let m = 5u32;
        let p = PointSet::full_grid(Scale::new(m));
        let k = 1i64 << m; // s = 1
        assert_eq!(project_count(&p, k), 2u64 << m);
    }

    #[test]
    fn projection_direction_zero_is_shadow() {
        let p = PointSet::from_indices(Scale::new(4), [(3, 7), (3, 2), (9, 9)]).unwrap();
        assert_eq!(project_count(&p, 0), 2);
    }

    #[test]
    fn projection_diagonal_cantor_collapses() {
        let p = crate::generators::gen_cantor(
            &crate::generators::CantorPattern::diagonal(),
            6,
        )
        .unwrap();
        let m = 6u32;
        // Direction 1 collapses the diagonal to (-δ, δ): 2 cells.
        assert_eq!(project_count(&p, 1 << m), 2);
        // A direction away from 1 spreads it out.
        let far = project_count(&p, (1 << m) + (1 << (m - 1))); // s = 1.5
        assert!(far > 16, "far direction count {far}");
    }

    #[test]
    fn projection_matches_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
        let m = 6u32;
        let n = 1i64 << m;
        for _ in 0..100 {
            let p = PointSet::from_indices(
                Scale::new(m),
                (0..rng.gen_range(1..200))
                    .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                    .collect::<std::collections::BTreeSet<_>>(),
            )
            .unwrap();
            let dir = rng.gen_range(n..=2 * n);
            assert_eq!(project_count(&p, dir), project_count_oracle(&p, dir));
        }
    }

    #[test]
    fn sumproduct_progression() {
        // A = B1 = B2 = an arithmetic progression: |A+A| ≈ 2|A| exactly for
        // step-1 progressions (covering adds one cell per endpoint).
        let spec = Set1dSpec::Progression { step: 1, count: 16 };
        let data = sumproduct_data(Scale::new(6), &spec, &spec, &spec).unwrap();
        assert_eq!(data.sum.len(), 32);
        assert!(data.min_line_count >= data.a.len());
    }

    #[test]
    fn sumproduct_singletons() {
        let spec = Set1dSpec::Progression { step: 1, count: 1 };
        let data = sumproduct_data(Scale::new(5), &spec, &spec, &spec).unwrap();
        assert_eq!(data.sum.len(), 2);
        assert!(data.prod.len() <= 3);
        assert!(data.min_line_count >= 1);
    }

    #[test]
    fn sumproduct_lines_carry_a_copy_of_a() {
        // Every line carries at least |A| grid squares: the witness points
        // (a + b1, a·b2) are grid points of the covering grid.
        let a = Set1dSpec::Cantor { depth: 2, cells: vec![0, 3] };
        let b = Set1dSpec::Random { s: 0.5, seed: 5 };
        let data = sumproduct_data(Scale::new(8), &a, &b, &b).unwrap();
        assert!(
            data.min_line_count >= data.a.len(),
            "min line count {} < |A| = {}",
            data.min_line_count,
            data.a.len()
        );
    }

    #[test]
    fn furstenberg_experiment_runs_and_fits() {
        let report = run_experiment(&ExperimentSpec::Furstenberg {
            delta_exps: vec![5, 6, 7],
            seeds: vec![1, 2],
            s: 0.5,
            t: 1.0,
        })
        .unwrap();
        let fit = report.fit.expect("three scales fit a line");
        assert!(fit.slope > 0.0, "tube counts must grow: {fit:?}");
        assert_eq!(report.rows.len(), 6);
        assert!(!report.degenerate);
    }

    #[test]
    fn furstenberg_precondition_errors() {
        let bad = ExperimentSpec::Furstenberg {
            delta_exps: vec![5],
            seeds: vec![1],
            s: 0.5,
            t: 0.5,
        };
        assert!(matches!(run_experiment(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn collapsed_profile_flags_collinear_sets() {
        let m = 6u32;
        let row = PointSet::from_indices(Scale::new(m), (0..1 << m).map(|i| (i, 0))).unwrap();
        assert!(collapsed_profile(&row, 1.0).unwrap());
        let (random, _) = gen_random_frostman(1.0, Scale::new(m), 4).unwrap();
        assert!(!collapsed_profile(&random, 0.5).unwrap());
    }

    #[test]
    fn report_round_trip_and_csv() {
        let report = run_experiment(&ExperimentSpec::Projection {
            delta_exps: vec![5],
            set: GeneratorConfig::Random { s: 1.0, delta_exp: 5, seed: 2 },
            directions: Set1dSpec::Full,
            heuristic_fraction: Some(0.5),
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let loaded = load_report(dir.path()).unwrap();
        assert_eq!(loaded, report);
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv.starts_with("delta_exp,"));
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        // Emission is bit-stable.
        let dir2 = tempfile::tempdir().unwrap();
        emit_report(&report, dir2.path()).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("report.json")).unwrap(),
            std::fs::read(dir2.path().join("report.json")).unwrap()
        );
    }

    #[test]
    fn empty_report_has_header_only_csv() {
        let report = ExperimentReport {
            schema: REPORT_SCHEMA.into(),
            kind: "projection".into(),
            params: serde_json::Value::Null,
            env: EnvStamp::new(vec![]),
            columns: vec!["delta_exp".into(), "count".into()],
            rows: vec![],
            fit: None,
            target: None,
            gap_to_target: None,
            degenerate: false,
            notes: vec![],
        };
        assert_eq!(report.to_csv(), "delta_exp,count\n");
    }
}
