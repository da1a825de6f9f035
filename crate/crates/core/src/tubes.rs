//! Dyadic tubes and exact point–tube incidence.
//!
//! A tube `𝐃(p)` is the union of the graphs `y = ax + b` over `(a,b)` in a
//! parameter square `p = [a·δ, (a+1)δ) × [b·δ, (b+1)δ)` with slope in
//! `[-1, 1)` and intercept clamped to `[-2, 2)`. Steep lines use a second
//! chart with `x` and `y` exchanged.
//!
//! The incidence predicate is exact: over a square's horizontal extent the
//! tube sweeps the interval between the min and max of the four corner
//! products `a'·x`, shifted by the intercept range, and interval overlap
//! against the square's vertical extent reduces to two strict integer
//! inequalities. No floating point, no epsilons.

use crate::dyadic::{Domain, Dyadic, DyadicSquare, PointSet, Scale};
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};

/// Coordinate chart for a tube family.
#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// Graphs `y = ax + b`, slope in `[-1, 1)`.
    #[default]
    Slope,
    /// Graphs `x = ay + b`: the coordinate-swap chart for steep lines.
    Steep,
}

/// Parameter square of a dyadic tube.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct TubeParam {
    pub scale: Scale,
    pub a: i64,
    pub b: i64,
    pub chart: Chart,
}

impl TubeParam {
    pub fn new(scale: Scale, a: i64, b: i64) -> Result<TubeParam> {
        TubeParam::with_chart(scale, a, b, Chart::Slope)
    }

    pub fn with_chart(scale: Scale, a: i64, b: i64, chart: Chart) -> Result<TubeParam> {
        let n = scale.cells_per_unit();
        if a < -n || a >= n {
            return Err(Error::OutsideDomain(format!(
                "slope index {a} outside [-1,1) at scale {scale}"
            )));
        }
        if b < -2 * n || b >= 2 * n {
            return Err(Error::OutsideDomain(format!(
                "intercept index {b} outside [-2,2) at scale {scale}"
            )));
        }
        Ok(TubeParam { scale, a, b, chart })
    }

    /// The slope interval `σ(T) = [a·δ, (a+1)δ)`.
    pub fn slope_interval(&self) -> (Dyadic, Dyadic) {
        (Dyadic::grid(self.a, self.scale), Dyadic::grid(self.a + 1, self.scale))
    }

    /// The parameter square viewed as a dyadic square in the `(a,b)`-plane.
    pub fn param_square(&self) -> DyadicSquare {
        DyadicSquare::new(self.scale, self.a, self.b)
    }

    /// The unique coarse tube at scale `r` whose parameter square contains
    /// this one. Containment of tubes is equivalent to containment of
    /// parameter squares.
    pub fn ancestor(&self, r: Scale) -> Result<TubeParam> {
        let k = self.scale.ratio_exp_to(r)?;
        Ok(TubeParam { scale: r, a: self.a >> k, b: self.b >> k, chart: self.chart })
    }

    pub fn contains(&self, finer: &TubeParam) -> bool {
        self.chart == finer.chart
            && matches!(finer.ancestor(self.scale), Ok(a) if a == *self)
    }
}

/// Exact incidence: does `𝐃(p)` intersect the half-open square `q`?
pub fn tube_meets_square(t: &TubeParam, q: &DyadicSquare) -> bool {
    let (qi, qj) = match t.chart {
        Chart::Slope => (q.i, q.j),
        Chart::Steep => (q.j, q.i),
    };
    let mt = t.scale.exp();
    let mq = q.scale.exp();
    // Products a'·x for a' ∈ {a, a+1} (units 2^-mt), x ∈ {qi, qi+1}
    // (units 2^-mq), all at scale 2^-(mt+mq).
    let (a0, a1) = (t.a as i128, t.a as i128 + 1);
    let (x0, x1) = (qi as i128, qi as i128 + 1);
    let products = [a0 * x0, a0 * x1, a1 * x0, a1 * x1];
    let pmin = *products.iter().min().unwrap();
    let pmax = *products.iter().max().unwrap();
    // Intercept range [b, b+1)·2^-mt and the square's vertical extent
    // [qj, qj+1)·2^-mq, raised to the common scale.
    let lo = pmin + ((t.b as i128) << mq);
    let hi = pmax + ((t.b as i128 + 1) << mq);
    let y0 = (qj as i128) << mt;
    let y1 = (qj as i128 + 1) << mt;
    lo < y1 && hi > y0
}

/// `|T ∩ P|_δ`: the number of squares of `P` meeting the tube.
pub fn tube_point_count(t: &TubeParam, p: &PointSet) -> u64 {
    p.squares().filter(|q| tube_meets_square(t, q)).count() as u64
}

/// The squares of `P` meeting the tube, as a point set (a "slice").
pub fn tube_restrict(t: &TubeParam, p: &PointSet) -> PointSet {
    let indices: Vec<(i64, i64)> = p
        .squares()
        .filter(|q| tube_meets_square(t, q))
        .map(|q| (q.i, q.j))
        .collect();
    PointSet::from_indices_in(p.scale(), p.domain(), indices).expect("subset of valid set")
}

/// Column index over a point set for fast exact tube counting: per column
/// `i`, the sorted row indices. `count` agrees bit-exactly with
/// [`tube_point_count`]; it evaluates the same corner-product inequalities,
/// resolved into a per-column row interval.
pub struct PointIndex {
    scale: Scale,
    cols: std::collections::BTreeMap<i64, Vec<i64>>,
}

impl PointIndex {
    pub fn new(set: &PointSet) -> PointIndex {
        let mut cols: std::collections::BTreeMap<i64, Vec<i64>> = Default::default();
        for (i, j) in set.indices() {
            cols.entry(i).or_default().push(j);
        }
        // BTreeSet iteration is sorted, so each column is already sorted.
        PointIndex { scale: set.scale(), cols }
    }

    pub fn count(&self, t: &TubeParam) -> u64 {
        if t.chart == Chart::Steep {
            // Rare path: steep tubes fall back to a scan.
            let mut n = 0;
            for (&i, rows) in &self.cols {
                for &j in rows {
                    if tube_meets_square(t, &DyadicSquare::new(self.scale, i, j)) {
                        n += 1;
                    }
                }
            }
            return n;
        }
        let mt = t.scale.exp();
        let mq = self.scale.exp();
        let (a0, a1) = (t.a as i128, t.a as i128 + 1);
        let step = 1i128 << mt;
        let mut n = 0u64;
        for (&i, rows) in &self.cols {
            let (x0, x1) = (i as i128, i as i128 + 1);
            let products = [a0 * x0, a0 * x1, a1 * x0, a1 * x1];
            let lo = *products.iter().min().unwrap() + ((t.b as i128) << mq);
            let hi = *products.iter().max().unwrap() + ((t.b as i128 + 1) << mq);
            // Rows j with lo < (j+1)·2^mt and hi > j·2^mt.
            let j_lo = if lo.rem_euclid(step) == 0 { lo / step } else { lo.div_euclid(step) };
            let j_hi = if hi.rem_euclid(step) == 0 { hi / step - 1 } else { hi.div_euclid(step) };
            if j_hi < j_lo {
                continue;
            }
            let (j_lo, j_hi) = (j_lo as i64, j_hi as i64);
            let lo_idx = rows.partition_point(|&j| j < j_lo);
            let hi_idx = rows.partition_point(|&j| j <= j_hi);
            n += (hi_idx - lo_idx) as u64;
        }
        n
    }
}

/// A finite family of dyadic tubes at a common scale and chart.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TubeFamily {
    scale: Scale,
    chart: Chart,
    params: BTreeSet<(i64, i64)>,
}

impl TubeFamily {
    pub fn new(scale: Scale) -> TubeFamily {
        TubeFamily { scale, chart: Chart::Slope, params: BTreeSet::new() }
    }

    pub fn with_chart(scale: Scale, chart: Chart) -> TubeFamily {
        TubeFamily { scale, chart, params: BTreeSet::new() }
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn len(&self) -> u64 {
        self.params.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn insert(&mut self, t: TubeParam) -> Result<()> {
        if t.scale != self.scale {
            return Err(Error::InvalidScale(format!(
                "tube at {} inserted into family at {}",
                t.scale, self.scale
            )));
        }
        if t.chart != self.chart {
            return Err(Error::Precondition("chart mismatch in tube family".into()));
        }
        self.params.insert((t.a, t.b));
        Ok(())
    }

    pub fn contains(&self, t: &TubeParam) -> bool {
        t.scale == self.scale && t.chart == self.chart && self.params.contains(&(t.a, t.b))
    }

    pub fn iter(&self) -> impl Iterator<Item = TubeParam> + '_ {
        let (scale, chart) = (self.scale, self.chart);
        self.params
            .iter()
            .map(move |&(a, b)| TubeParam { scale, a, b, chart })
    }

    pub fn from_params<I: IntoIterator<Item = TubeParam>>(
        scale: Scale,
        params: I,
    ) -> Result<TubeFamily> {
        let mut f = TubeFamily::new(scale);
        let mut iter = params.into_iter().peekable();
        if let Some(first) = iter.peek() {
            f.chart = first.chart;
        }
        for t in iter {
            f.insert(t)?;
        }
        Ok(f)
    }

    /// The parameter set as a point set in `[-1,1) × [-2,2)`.
    pub fn param_point_set(&self) -> PointSet {
        PointSet::from_indices_in(self.scale, Domain::TUBE_PARAMS, self.params.iter().copied())
            .expect("params validated on insert")
    }

    /// `𝒯^Δ(𝒯)`: the scale-`Δ` tubes whose parameter squares are ancestors
    /// of this family's parameter squares.
    pub fn cover(&self, delta: Scale) -> Result<TubeFamily> {
        let k = self.scale.ratio_exp_to(delta)?;
        let params = self.params.iter().map(|&(a, b)| (a >> k, b >> k)).collect();
        Ok(TubeFamily { scale: delta, chart: self.chart, params })
    }

    /// Tubes of this family contained in the coarse tube `big`.
    pub fn restrict_to(&self, big: &TubeParam) -> TubeFamily {
        let params = self
            .iter()
            .filter(|t| big.contains(t))
            .map(|t| (t.a, t.b))
            .collect();
        TubeFamily { scale: self.scale, chart: self.chart, params }
    }

    /// Tube family file format: `scale <m>` header, then `<a> <b> [chart]`
    /// lines; the chart token is written only for the steep chart.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scale {}", self.scale.exp())?;
        for &(a, b) in &self.params {
            match self.chart {
                Chart::Slope => writeln!(w, "{} {}", a, b)?,
                Chart::Steep => writeln!(w, "{} {} steep", a, b)?,
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<TubeFamily> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tube file".into()))??;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("scale") {
            return Err(Error::Parse("expected `scale <m>` header".into()));
        }
        let m: u32 = parts
            .next()
            .ok_or_else(|| Error::Parse("missing scale exponent".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad scale exponent: {e}")))?;
        let scale = Scale::new(m);
        let mut family: Option<TubeFamily> = None;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < 2 {
                return Err(Error::Parse(format!("bad tube line: {line}")));
            }
            let a: i64 = tokens[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad slope index: {e}")))?;
            let b: i64 = tokens[1]
                .parse()
                .map_err(|e| Error::Parse(format!("bad intercept index: {e}")))?;
            let chart = match tokens.get(2) {
                None => Chart::Slope,
                Some(&"steep") => Chart::Steep,
                Some(other) => {
                    return Err(Error::Parse(format!("unknown chart token: {other}")))
                }
            };
            let t = TubeParam::with_chart(scale, a, b, chart)?;
            let f = family.get_or_insert_with(|| TubeFamily::with_chart(scale, chart));
            f.insert(t)?;
        }
        Ok(family.unwrap_or_else(|| TubeFamily::new(scale)))
    }

    pub fn to_string_format(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn from_str_format(s: &str) -> Result<TubeFamily> {
        TubeFamily::read_from(s.as_bytes())
    }
}

/// For each slope interval, the canonical tube through `q`: the line with
/// the interval's center slope is passed through the center of `q` and the
/// intercept is snapped down to the `δ`-grid. Every returned tube meets `q`
/// (the canonical line lies in the tube and hits the center of `q`), and
/// distinct slopes give distinct tubes.
pub fn tubes_through(q: &DyadicSquare, slopes: &[i64], scale: Scale) -> Result<TubeFamily> {
    let mq = q.scale.exp();
    let m = scale.exp();
    let n = scale.cells_per_unit();
    let mut family = TubeFamily::new(scale);
    for &a in slopes {
        if a < -n || a >= n {
            return Err(Error::OutsideDomain(format!(
                "slope index {a} outside [-1,1) at scale {scale}"
            )));
        }
        // b = yc - (a + 1/2)δ · xc with center (xc, yc) of q; snap down.
        // In units of 2^-(mq+2): N = (2qj+1)·2^(m+1) - (2a+1)(2qi+1), and
        // b_idx = floor(N / 2^(mq+2)).
        let num = ((2 * q.j as i128 + 1) << (m + 1)) - (2 * a as i128 + 1) * (2 * q.i as i128 + 1);
        let b = num.div_euclid(1i128 << (mq + 2)) as i64;
        family.insert(TubeParam::new(scale, a, b)?)?;
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frostman::frostman_constant;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sq(m: u32, i: i64, j: i64) -> DyadicSquare {
        DyadicSquare::new(Scale::new(m), i, j)
    }

    #[test]
    fn tube_through_origin_meets_origin_square() {
        let t = TubeParam::new(Scale::new(4), 0, 0).unwrap();
        assert!(tube_meets_square(&t, &sq(4, 0, 0)));
    }

    #[test]
    fn flat_tube_misses_high_square() {
        // Slope-0 tube with b ∈ [0,δ) stays inside y ∈ [0, 2δ) over [0,1).
        let t = TubeParam::new(Scale::new(4), 0, 0).unwrap();
        assert!(!tube_meets_square(&t, &sq(4, 0, 8)));
        assert!(tube_meets_square(&t, &sq(4, 0, 1)));
        assert!(!tube_meets_square(&t, &sq(4, 0, 2)));
    }

    #[test]
    fn half_slope_tube_hits_midpoint_square() {
        // δ = 2^-4, a ∈ [1/2, 1/2+δ), b ∈ [0,δ): the vertical section at
        // x = 1/2 is [1/4, 1/4 + 3δ/2), which meets the square at (1/2, 1/4).
        let t = TubeParam::new(Scale::new(4), 8, 0).unwrap();
        assert!(tube_meets_square(&t, &sq(4, 8, 4)));
    }

    #[test]
    fn steep_chart_swaps_axes() {
        let flat = TubeParam::new(Scale::new(4), 0, 0).unwrap();
        let steep = TubeParam::with_chart(Scale::new(4), 0, 0, Chart::Steep).unwrap();
        // The steep tube x = ay + b with a,b ∈ [0,δ) hugs the y-axis.
        assert!(tube_meets_square(&steep, &sq(4, 0, 8)));
        assert!(!tube_meets_square(&steep, &sq(4, 8, 0)));
        assert!(tube_meets_square(&flat, &sq(4, 8, 0)));
    }

    #[test]
    fn flat_tube_count_on_full_grid_is_two_rows() {
        let grid = PointSet::full_grid(Scale::new(4));
        let t = TubeParam::new(Scale::new(4), 0, 0).unwrap();
        assert_eq!(tube_point_count(&t, &grid), 32);
    }

    #[test]
    fn count_trivial_cases() {
        let single = PointSet::from_indices(Scale::new(4), [(3, 0)]).unwrap();
        let t = TubeParam::new(Scale::new(4), 0, 0).unwrap();
        assert_eq!(tube_point_count(&t, &single), 1);
        let far = PointSet::from_indices(Scale::new(4), [(3, 12)]).unwrap();
        assert_eq!(tube_point_count(&t, &far), 0);
    }

    /// Rasterization oracle: sample slopes across the parameter square at
    /// resolution δ/64 and test the swept interval exactly per slope.
    fn raster_oracle(t: &TubeParam, q: &DyadicSquare) -> bool {
        let mt = t.scale.exp();
        let mq = q.scale.exp();
        // Slope samples a·δ + k·δ/64 at scale 2^-(mt+6); products with x at
        // common scale 2^-(mt+6+mq).
        for k in 0..64i128 {
            let alpha = ((t.a as i128) << 6) + k;
            let p0 = alpha * q.i as i128;
            let p1 = alpha * (q.i as i128 + 1);
            let lo = p0.min(p1) + ((t.b as i128) << (mq + 6));
            let hi = p0.max(p1) + ((t.b as i128 + 1) << (mq + 6));
            let y0 = (q.j as i128) << (mt + 6);
            let y1 = (q.j as i128 + 1) << (mt + 6);
            if lo < y1 && hi > y0 {
                return true;
            }
        }
        false
    }

    #[test]
    fn meets_agrees_with_rasterization_oracle() {
        let m = 6u32;
        let n = 1i64 << m;
        let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
        let mut hits = 0;
        for _ in 0..10_000 {
            let t = TubeParam::new(
                Scale::new(m),
                rng.gen_range(-n..n),
                rng.gen_range(-2 * n..2 * n),
            )
            .unwrap();
            let q = sq(m, rng.gen_range(0..n), rng.gen_range(0..n));
            let fast = tube_meets_square(&t, &q);
            let slow = raster_oracle(&t, &q);
            if slow {
                assert!(fast, "oracle found a witness the predicate missed: {t:?} {q:?}");
            }
            assert_eq!(fast, slow, "disagreement at {t:?} {q:?}");
            if fast {
                hits += 1;
            }
        }
        assert!(hits > 100, "corpus too sparse to be meaningful");
    }

    #[test]
    fn tubes_through_basics() {
        let q = sq(4, 0, 0);
        let f = tubes_through(&q, &[0], Scale::new(4)).unwrap();
        assert_eq!(f.len(), 1);
        for t in f.iter() {
            assert!(tube_meets_square(&t, &q));
        }
    }

    #[test]
    fn tubes_through_full_slope_range() {
        let m = 4u32;
        let n = 1i64 << m;
        let q = sq(m, n / 2, n / 2); // center square near (1/2, 1/2)
        let slopes: Vec<i64> = (-n..n).collect();
        let f = tubes_through(&q, &slopes, Scale::new(m)).unwrap();
        assert_eq!(f.len(), 32); // injective on slopes
        for t in f.iter() {
            assert!(tube_meets_square(&t, &q), "{t:?} misses {q:?}");
        }
        let cert = frostman_constant(&f.param_point_set(), 1.0).unwrap();
        assert!(cert.c <= 4.0, "param set C = {}", cert.c);
    }

    #[test]
    fn slope_param_consistency_within_factor_8() {
        // Desk-scale form of the bilipschitz slope parametrization: the
        // Frostman constants of the slope set and of the parameter set agree
        // within a factor of 8, for tubes through a fixed square.
        let m = 6u32;
        let q = sq(m, 13, 40);
        let (slope_set, slope_cert) = crate::generators::gen_random_frostman_1d(
            0.7,
            Scale::new(m),
            -1,
            1,
            21,
        )
        .unwrap();
        let slopes: Vec<i64> = slope_set.indices().collect();
        let f = tubes_through(&q, &slopes, Scale::new(m)).unwrap();
        assert_eq!(f.len() as usize, slopes.len());
        let param_cert = frostman_constant(&f.param_point_set(), 0.7).unwrap();
        assert!(param_cert.c <= 8.0 * slope_cert.c);
        assert!(slope_cert.c <= 8.0 * param_cert.c);
    }

    #[test]
    fn cover_idempotent_and_examples() {
        let m = 6u32;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1i64 << m;
        let f = TubeFamily::from_params(
            Scale::new(m),
            (0..64).map(|_| {
                TubeParam::new(
                    Scale::new(m),
                    rng.gen_range(-n..n),
                    rng.gen_range(-2 * n..2 * n),
                )
                .unwrap()
            }),
        )
        .unwrap();
        // Δ = δ: unchanged.
        assert_eq!(f.cover(Scale::new(m)).unwrap(), f);
        // Cover size equals the number of distinct parameter ancestors.
        let c3 = f.cover(Scale::new(3)).unwrap();
        let distinct: std::collections::BTreeSet<(i64, i64)> =
            f.iter().map(|t| (t.a >> 3, t.b >> 3)).collect();
        assert_eq!(c3.len() as usize, distinct.len());
        // Idempotence: covering at 2^-2 directly or through 2^-3 agree.
        assert_eq!(
            f.cover(Scale::new(2)).unwrap(),
            c3.cover(Scale::new(2)).unwrap()
        );
        // All fine params sharing one ancestor collapse to a singleton.
        let g = TubeFamily::from_params(
            Scale::new(m),
            (0..4).map(|k| TubeParam::new(Scale::new(m), k, k).unwrap()),
        )
        .unwrap();
        assert_eq!(g.cover(Scale::new(2)).unwrap().len(), 1);
    }

    #[test]
    fn point_index_count_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xABCD);
        let m = 6u32;
        let n = 1i64 << m;
        let p = PointSet::from_indices(
            Scale::new(m),
            (0..300).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))),
        )
        .unwrap();
        let idx = PointIndex::new(&p);
        for _ in 0..500 {
            let t = TubeParam::new(
                Scale::new(m),
                rng.gen_range(-n..n),
                rng.gen_range(-2 * n..2 * n),
            )
            .unwrap();
            assert_eq!(idx.count(&t), tube_point_count(&t, &p), "{t:?}");
        }
        // Coarser tube over a finer set.
        let coarse = TubeParam::new(Scale::new(3), 2, -1).unwrap();
        assert_eq!(idx.count(&coarse), tube_point_count(&coarse, &p));
    }

    #[test]
    fn containment_matches_parameter_containment() {
        let fine = TubeParam::new(Scale::new(5), 9, -3).unwrap();
        let coarse = fine.ancestor(Scale::new(2)).unwrap();
        assert!(coarse.contains(&fine));
        let other = TubeParam::new(Scale::new(2), 0, 1).unwrap();
        assert!(!other.contains(&fine));
    }

    #[test]
    fn family_file_round_trip() {
        let f = TubeFamily::from_params(
            Scale::new(4),
            [
                TubeParam::new(Scale::new(4), -16, 5).unwrap(),
                TubeParam::new(Scale::new(4), 3, -32).unwrap(),
                TubeParam::new(Scale::new(4), 15, 31).unwrap(),
            ],
        )
        .unwrap();
        let s = f.to_string_format();
        assert!(s.starts_with("scale 4\n"));
        assert_eq!(TubeFamily::from_str_format(&s).unwrap(), f);

        let steep = TubeFamily::from_params(
            Scale::new(3),
            [TubeParam::with_chart(Scale::new(3), 1, 2, Chart::Steep).unwrap()],
        )
        .unwrap();
        let s = steep.to_string_format();
        assert!(s.contains("steep"));
        assert_eq!(TubeFamily::from_str_format(&s).unwrap(), steep);
    }
}
