//! Nice configurations and the elementary incidence bounds as executable
//! checkers, plus greedy Frostman-subset extraction for tube families and
//! point–line duality.
//!
//! A `(δ,s,C,M)`-nice configuration assigns to every point square `p` a
//! tube family `𝒯(p)` through `p` whose parameter set is a `(δ,s,C)`-set,
//! with `|𝒯(p)| ∈ [M, 2M)` (the builder trims oversized slope sets by an
//! even stride, so generators need not hit `M` exactly). Every checker
//! reports its raw ratio next to the pass flag so regressions stay visible.

use crate::constants;
use crate::dyadic::{Domain, DyadicSquare, PointSet, Scale};
use crate::error::Error;
use crate::frostman::{frostman_constant, FrostmanCertificate};
use crate::tubes::{tube_meets_square, PointIndex, TubeFamily, TubeParam};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A point set together with a tube family through each of its squares.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NiceConfiguration {
    scale: Scale,
    points: PointSet,
    families: BTreeMap<(i64, i64), TubeFamily>,
    /// Frostman exponent the per-point parameter sets are certified at.
    pub s: f64,
    /// Worst per-point parameter constant (measured, exact certification).
    pub c: f64,
    /// Lower bound for family sizes: `|𝒯(p)| ∈ [m, 2m)`.
    pub m: u64,
}

impl NiceConfiguration {
    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn family(&self, p: (i64, i64)) -> Option<&TubeFamily> {
        self.families.get(&p)
    }

    pub fn families(&self) -> impl Iterator<Item = ((i64, i64), &TubeFamily)> {
        self.families.iter().map(|(&p, f)| (p, f))
    }

    /// `𝒯 = ∪_p 𝒯(p)`, deduplicated.
    pub fn union_family(&self) -> TubeFamily {
        let mut union = TubeFamily::new(self.scale);
        for f in self.families.values() {
            for t in f.iter() {
                union.insert(t).expect("family scales are validated");
            }
        }
        union
    }

    /// Assemble a configuration from parts, computing `c` as the worst
    /// per-point certificate and validating the structural invariants.
    pub fn assemble(
        points: PointSet,
        families: BTreeMap<(i64, i64), TubeFamily>,
        s: f64,
        m: u64,
    ) -> Result<NiceConfiguration> {
        let scale = points.scale();
        let mut worst_c: f64 = 0.0;
        for (&(i, j), family) in &families {
            if !points.contains(i, j) {
                return Err(Error::InvalidConfig(format!(
                    "family assigned to ({i},{j}) which is not in P"
                )));
            }
            let cert = frostman_constant(&family.param_point_set(), s)?;
            worst_c = worst_c.max(cert.c);
        }
        let config = NiceConfiguration { scale, points, families, s, c: worst_c, m };
        let defects = config.defects();
        if !defects.is_empty() {
            return Err(Error::InvalidConfig(defects.join("; ")));
        }
        Ok(config)
    }

    /// Structural defects, empty when the configuration is valid.
    pub fn defects(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            out.push("empty point set".into());
        }
        if self.m == 0 {
            out.push("m = 0".into());
        }
        for (i, j) in self.points.indices() {
            match self.families.get(&(i, j)) {
                None => out.push(format!("point ({i},{j}) has no tube family")),
                Some(f) => {
                    if f.scale() != self.scale {
                        out.push(format!("family at ({i},{j}) has scale {}", f.scale()));
                    }
                    let n = f.len();
                    if n < self.m || n >= 2 * self.m {
                        out.push(format!(
                            "family at ({i},{j}) has size {n} outside [{}, {})",
                            self.m,
                            2 * self.m
                        ));
                    }
                    let sq = DyadicSquare::new(self.scale, i, j);
                    for t in f.iter() {
                        if !tube_meets_square(&t, &sq) {
                            out.push(format!("tube {:?} misses its point ({i},{j})", (t.a, t.b)));
                        }
                    }
                }
            }
        }
        for p in self.families.keys() {
            if !self.points.contains(p.0, p.1) {
                out.push(format!("family assigned to {:?} not in P", p));
            }
        }
        out
    }

    /// Restrict to the points inside `q`, keeping their families.
    pub fn restrict(&self, q: &DyadicSquare) -> Result<NiceConfiguration> {
        let points = self.points.restrict(q);
        if points.is_empty() {
            return Err(Error::EmptySet(format!("no points of P inside {q:?}")));
        }
        let families = self
            .families
            .iter()
            .filter(|(&(i, j), _)| q.contains(&DyadicSquare::new(self.scale, i, j)))
            .map(|(&p, f)| (p, f.clone()))
            .collect();
        let mut config = self.clone();
        config.points = points;
        config.families = families;
        Ok(config)
    }
}

/// Even-stride selection of `k` items from a sorted slice.
pub(crate) fn even_stride<T: Copy>(items: &[T], k: usize) -> Vec<T> {
    if k >= items.len() {
        return items.to_vec();
    }
    (0..k).map(|t| items[t * items.len() / k]).collect()
}

/// Build a nice configuration from a per-point slope plan: each point gets
/// the canonical tubes through it with the planned slopes, trimmed by an
/// even stride to `[m, 2m)` when oversized. `s` and the worst constant are
/// certified from the per-point parameter sets.
pub fn build_nice_config(
    points: &PointSet,
    plan: &BTreeMap<(i64, i64), Vec<i64>>,
    s: f64,
    m: u64,
    c_cap: Option<f64>,
) -> Result<NiceConfiguration> {
    if points.is_empty() {
        return Err(Error::EmptySet("build_nice_config needs a nonempty set".into()));
    }
    let scale = points.scale();
    let mut families = BTreeMap::new();
    for (i, j) in points.indices() {
        let slopes = plan
            .get(&(i, j))
            .ok_or_else(|| Error::InvalidConfig(format!("no slope set for point ({i},{j})")))?;
        if (slopes.len() as u64) < m {
            return Err(Error::Precondition(format!(
                "slope set at ({i},{j}) has {} < M = {m} slopes",
                slopes.len()
            )));
        }
        let mut sorted = slopes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if (sorted.len() as u64) < m {
            return Err(Error::Precondition(format!(
                "slope set at ({i},{j}) has {} < M = {m} distinct slopes",
                sorted.len()
            )));
        }
        let chosen = if sorted.len() as u64 >= 2 * m {
            even_stride(&sorted, m as usize)
        } else {
            sorted
        };
        let sq = DyadicSquare::new(scale, i, j);
        families.insert((i, j), crate::tubes::tubes_through(&sq, &chosen, scale)?);
    }
    let config = NiceConfiguration::assemble(points.clone(), families, s, m)?;
    if let Some(cap) = c_cap {
        if config.c > cap {
            return Err(Error::InvalidConfig(format!(
                "certified C = {} exceeds cap {cap}",
                config.c
            )));
        }
    }
    Ok(config)
}

/// The product case: one shared slope set for every point.
pub fn build_product_config(
    points: &PointSet,
    slopes: &[i64],
    s: f64,
    m: u64,
    c_cap: Option<f64>,
) -> Result<NiceConfiguration> {
    let plan = points.indices().map(|p| (p, slopes.to_vec())).collect();
    build_nice_config(points, &plan, s, m, c_cap)
}

/// Exact incidence bookkeeping for a configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncidenceSummary {
    /// `I = Σ_p |𝒯(p)|`.
    pub total_incidences: u64,
    /// `|𝒯|`.
    pub union_size: u64,
    /// `m(T) = |{p : T ∈ 𝒯(p)}|` per tube.
    pub membership: BTreeMap<(i64, i64), u64>,
    /// `|T ∩ P|_δ` per tube.
    pub geometric: BTreeMap<(i64, i64), u64>,
    pub k_max_membership: u64,
    pub k_max_geometric: u64,
}

/// Exact counts; the double-counting identity `Σ_p |𝒯(p)| = Σ_T m(T)`
/// holds bit-exactly because both sides are integer sums over the same
/// incidences, transposed.
pub fn summarize(config: &NiceConfiguration) -> IncidenceSummary {
    let mut membership: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    let mut total = 0u64;
    for (_, family) in config.families() {
        total += family.len();
        for t in family.iter() {
            *membership.entry((t.a, t.b)).or_insert(0) += 1;
        }
    }
    let index = PointIndex::new(config.points());
    let union = config.union_family();
    let mut geometric = BTreeMap::new();
    for t in union.iter() {
        geometric.insert((t.a, t.b), index.count(&t));
    }
    IncidenceSummary {
        total_incidences: total,
        union_size: union.len(),
        k_max_membership: membership.values().copied().max().unwrap_or(0),
        k_max_geometric: geometric.values().copied().max().unwrap_or(0),
        membership,
        geometric,
    }
}

/// Report of the light-tube averaging bound `|𝒯| ≥ K⁻¹·|P|·M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmallTubeReport {
    pub union_size: u64,
    pub n_points: u64,
    pub m: u64,
    pub k_max_membership: u64,
    pub k_max_geometric: u64,
    /// `|P|·M / K` with membership counts; the bound is an exact averaging
    /// identity, so `pass_membership` failing is a bug, not a counterexample.
    pub rhs_membership: f64,
    pub rhs_geometric: f64,
    pub pass_membership: bool,
    pub pass_geometric: bool,
    pub margin_membership: f64,
}

pub fn check_small_tube(config: &NiceConfiguration) -> SmallTubeReport {
    let summary = summarize(config);
    let n = config.points().len();
    let m = config.m;
    let (km, kg) = (summary.k_max_membership, summary.k_max_geometric);
    // Exact comparison |𝒯|·K ≥ |P|·M in integers.
    let pass_m = km > 0 && (summary.union_size as u128) * (km as u128) >= (n as u128) * (m as u128);
    let pass_g = kg > 0 && (summary.union_size as u128) * (kg as u128) >= (n as u128) * (m as u128);
    SmallTubeReport {
        union_size: summary.union_size,
        n_points: n,
        m,
        k_max_membership: km,
        k_max_geometric: kg,
        rhs_membership: n as f64 * m as f64 / km.max(1) as f64,
        rhs_geometric: n as f64 * m as f64 / kg.max(1) as f64,
        pass_membership: pass_m,
        pass_geometric: pass_g,
        margin_membership: summary.union_size as f64 * km as f64 / (n as f64 * m as f64),
    }
}

/// Report of the heavy-tube transversality bound
/// `|𝒯| ≥ c·C^{-1/s}·|T∩P|_δ·M`, with the proof internals exposed: the
/// transversal sub-families `𝒯'(p)` at the chosen angle and their measured
/// overlap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LargeTubeReport {
    pub tube: (i64, i64),
    pub union_size: u64,
    pub tube_point_count: u64,
    pub m: u64,
    pub c_config: f64,
    /// `C^{-1/s}`.
    pub c_pow: f64,
    pub c_frozen: f64,
    pub rhs: f64,
    /// `|𝒯| / (C^{-1/s}·|T∩P|·M)`: the constant that would make the bound
    /// tight. Infinite when the tube misses `P`.
    pub ratio: f64,
    pub pass: bool,
    /// Chosen transversality angle (largest dyadic value keeping at least
    /// half of every on-tube family transversal).
    pub theta: f64,
    /// The theoretical angle scale `C^{-1/s}`.
    pub theta_target: f64,
    /// `min_p |𝒯'(p)|` over points on the tube.
    pub min_transversal: u64,
    /// Max over tubes of `|{p on T : T' ∈ 𝒯'(p)}|`.
    pub overlap: u64,
    /// `Σ_p |𝒯'(p)| / overlap ≤ |𝒯|`: the union bound the proof takes.
    pub proof_lower_bound: f64,
}

pub fn check_large_tube(config: &NiceConfiguration, tube: &TubeParam) -> LargeTubeReport {
    let n_on_tube: Vec<(i64, i64)> = config
        .points()
        .squares()
        .filter(|q| tube_meets_square(tube, q))
        .map(|q| (q.i, q.j))
        .collect();
    let t_cap_p = n_on_tube.len() as u64;
    let union_size = config.union_family().len();
    let c_pow = config.c.powf(-1.0 / config.s);
    let m = config.m;

    // Transversal sub-families: largest dyadic θ = 2^-k such that every
    // point on the tube keeps at least half its family at slope distance
    // ≥ θ from the tube's slope.
    let scale_exp = config.scale.exp();
    let mut theta_exp = None;
    'outer: for k in 0..=scale_exp {
        let min_diff = 1i64 << (scale_exp - k); // θ = 2^-k in slope-index units
        for &(i, j) in &n_on_tube {
            let family = config.family((i, j)).expect("validated config");
            let total = family.len();
            let kept = family.iter().filter(|t| (t.a - tube.a).abs() >= min_diff).count() as u64;
            if 2 * kept < total {
                continue 'outer;
            }
        }
        theta_exp = Some(k);
        break;
    }
    let theta_exp = theta_exp.unwrap_or(scale_exp);
    let min_diff = 1i64 << (scale_exp - theta_exp);

    let mut transversal_total = 0u64;
    let mut min_transversal = u64::MAX;
    let mut overlap_counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for &(i, j) in &n_on_tube {
        let family = config.family((i, j)).expect("validated config");
        let mut kept = 0u64;
        for t in family.iter() {
            if (t.a - tube.a).abs() >= min_diff {
                kept += 1;
                *overlap_counts.entry((t.a, t.b)).or_insert(0) += 1;
            }
        }
        transversal_total += kept;
        min_transversal = min_transversal.min(kept);
    }
    if n_on_tube.is_empty() {
        min_transversal = 0;
    }
    let overlap = overlap_counts.values().copied().max().unwrap_or(0);

    let denom = c_pow * t_cap_p as f64 * m as f64;
    let ratio = if t_cap_p == 0 { f64::INFINITY } else { union_size as f64 / denom };
    let rhs = constants::LARGE_TUBE_C * denom;
    LargeTubeReport {
        tube: (tube.a, tube.b),
        union_size,
        tube_point_count: t_cap_p,
        m,
        c_config: config.c,
        c_pow,
        c_frozen: constants::LARGE_TUBE_C,
        rhs,
        ratio,
        pass: union_size as f64 >= rhs,
        theta: (-(theta_exp as f64)).exp2(),
        theta_target: c_pow,
        min_transversal,
        overlap,
        proof_lower_bound: if overlap > 0 {
            transversal_total as f64 / overlap as f64
        } else {
            0.0
        },
    }
}

/// Which case of the union bound fired.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionBranch {
    /// Some tube carries `≥ |P|^{1/2}` points; the heavy-tube bound applies
    /// to the recorded witness.
    LargeTube { witness: (i64, i64), count: u64 },
    /// Every tube is light; the averaging bound applies.
    SmallTube { k_max: u64 },
}

/// Report of `|𝒯| ≥ c·C^{-1/s}·|P|^{1/2}·M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnionBoundReport {
    pub union_size: u64,
    pub n_points: u64,
    pub m: u64,
    pub c_config: f64,
    pub c_pow: f64,
    pub c_frozen: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    pub branch: UnionBranch,
}

pub fn check_union_bound(config: &NiceConfiguration) -> UnionBoundReport {
    let summary = summarize(config);
    let n = config.points().len();
    let c_pow = config.c.powf(-1.0 / config.s);
    // Branch on whether some tube carries ≥ |P|^{1/2} points (exact:
    // count² ≥ n).
    let heavy = summary
        .geometric
        .iter()
        .filter(|&(_, &c)| (c as u128) * (c as u128) >= n as u128)
        .max_by_key(|&(_, &c)| c);
    let branch = match heavy {
        Some((&tube, &count)) => UnionBranch::LargeTube { witness: tube, count },
        None => UnionBranch::SmallTube { k_max: summary.k_max_geometric },
    };
    let denom = c_pow * (n as f64).sqrt() * config.m as f64;
    let rhs = constants::LARGE_TUBE_C * denom;
    UnionBoundReport {
        union_size: summary.union_size,
        n_points: n,
        m: config.m,
        c_config: config.c,
        c_pow,
        c_frozen: constants::LARGE_TUBE_C,
        rhs,
        ratio: summary.union_size as f64 / denom,
        pass: summary.union_size as f64 >= rhs,
        branch,
    }
}

/// Extraction statistics, reported rather than asserted: the greedy
/// selection certifies its own output but carries no size guarantee.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractStats {
    pub input_size: u64,
    pub target_s: f64,
    /// The self-consistent target the binary search settled on.
    pub chosen_target: u64,
    pub output_size: u64,
    pub c_star: f64,
}

fn trim_to_caps(
    params: &BTreeSet<(i64, i64)>,
    scale_exp: u32,
    s: f64,
    n_target: u64,
) -> BTreeSet<(i64, i64)> {
    let mut kept: Vec<(i64, i64)> = params.iter().copied().collect();
    for e in 1..=scale_exp {
        let k = scale_exp - e;
        let cap = ((n_target as f64) * (-(e as f64) * s).exp2()).ceil().max(1.0) as usize;
        let mut groups: BTreeMap<(i64, i64), Vec<(i64, i64)>> = BTreeMap::new();
        for &(i, j) in &kept {
            groups.entry((i >> k, j >> k)).or_default().push((i, j));
        }
        let mut next = Vec::with_capacity(kept.len());
        for (_, members) in groups {
            if members.len() > cap {
                next.extend(even_stride(&members, cap));
            } else {
                next.extend(members);
            }
        }
        next.sort_unstable();
        kept = next;
    }
    kept.into_iter().collect()
}

/// Greedy discrete-Frostman extraction on the parameter set: top-down
/// per-cube quotas `⌈N·r^s⌉` with an even-stride trim, self-consistent `N`
/// found by binary search, output certified post hoc.
pub fn extract_frostman_tubes(
    family: &TubeFamily,
    target_s: f64,
) -> Result<(TubeFamily, FrostmanCertificate, ExtractStats)> {
    if family.is_empty() {
        return Err(Error::EmptySet("extract_frostman_tubes needs a nonempty family".into()));
    }
    if target_s > 2.0 {
        return Err(Error::Precondition(format!("target_s = {target_s} > 2")));
    }
    let params: BTreeSet<(i64, i64)> = family.iter().map(|t| (t.a, t.b)).collect();
    let scale_exp = family.scale().exp();
    let pred = |n: u64| trim_to_caps(&params, scale_exp, target_s, n).len() as u64 >= n;
    let (mut lo, mut hi) = (1u64, family.len());
    if pred(hi) {
        lo = hi;
    } else {
        // Largest self-consistent target in [lo, hi).
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let chosen = trim_to_caps(&params, scale_exp, target_s, lo);
    let out = TubeFamily::from_params(
        family.scale(),
        chosen
            .iter()
            .map(|&(a, b)| TubeParam::with_chart(family.scale(), a, b, family.chart()))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let cert = frostman_constant(&out.param_point_set(), target_s)?;
    let stats = ExtractStats {
        input_size: family.len(),
        target_s,
        chosen_target: lo,
        output_size: out.len(),
        c_star: cert.c,
    };
    Ok((out, cert, stats))
}

/// Point–line duality. A point square dualizes to the tube with the same
/// indices (the lines `y = ax + b` with `(a,b)` ranging over the square);
/// a tube dualizes to its parameter square. Incidence on the dual side is
/// evaluated by [`dual_incident`], which reflects the slope axis — under
/// that convention the dual incidence matrix equals the primal one
/// entrywise, exactly.
pub fn dualize(points: &PointSet) -> Result<TubeFamily> {
    let d = points.domain();
    if d.x0 < -1 || d.x1 > 1 || d.y0 < -2 || d.y1 > 2 {
        return Err(Error::OutsideDomain(format!(
            "point domain {d:?} outside the slope chart [-1,1)×[-2,2)"
        )));
    }
    TubeFamily::from_params(
        points.scale(),
        points
            .indices()
            .map(|(i, j)| TubeParam::new(points.scale(), i, j))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Inverse of [`dualize`] on indices: each tube's parameter square becomes
/// a point square in `[-1,1) × [-2,2)`.
pub fn dualize_tubes(family: &TubeFamily) -> Result<PointSet> {
    PointSet::from_indices_in(
        family.scale(),
        Domain::TUBE_PARAMS,
        family.iter().map(|t| (t.a, t.b)),
    )
}

/// Dual-side incidence: the dual tube of a point square against the
/// parameter square of a tube, with the slope axis reflected
/// (`[a, a+δ) ↦ [-a-δ, -a)`). Exactly equal to
/// `tube_meets_square(tube, point_square)` for every pair.
pub fn dual_incident(dual_tube: &TubeParam, tube: &TubeParam) -> bool {
    let p = tube.param_square();
    let reflected = DyadicSquare::new(p.scale, -p.i - 1, p.j);
    tube_meets_square(dual_tube, &reflected)
}
