//! Dyadic scales, exact dyadic rationals, half-open dyadic squares and
//! point sets, with exact covering numbers over the dyadic grid.
//!
//! Conventions: a scale is `r = 2^-m` with `m ≥ 0`; a square at scale `r`
//! with grid coordinates `(i, j)` denotes `[i·r, (i+1)·r) × [j·r, (j+1)·r)`.
//! Point sets carry a declared bounding box (integer corners in unit-square
//! coordinates), which is `[0,1)²` unless stated otherwise. All counting is
//! integer arithmetic; coordinates never leave the grid.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

/// A dyadic scale `r = 2^-m`. Ordered by the exponent, so `a < b` means `a`
/// is coarser than `b`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scale {
    m: u32,
}

impl Scale {
    /// The unit scale `r = 1`.
    pub const ONE: Scale = Scale { m: 0 };

    pub fn new(m: u32) -> Scale {
        Scale { m }
    }

    /// The exponent `m` with `r = 2^-m`.
    pub fn exp(self) -> u32 {
        self.m
    }

    /// `r` as a float. Only for reporting; never used in counting.
    pub fn value(self) -> f64 {
        (-(self.m as f64)).exp2()
    }

    /// Number of grid cells per unit length, `2^m`.
    pub fn cells_per_unit(self) -> i64 {
        1i64 << self.m
    }

    /// True if `self` is coarser than or equal to `other` (`r ≥ r'`).
    pub fn is_coarser_or_eq(self, other: Scale) -> bool {
        self.m <= other.m
    }

    pub fn is_finer_or_eq(self, other: Scale) -> bool {
        self.m >= other.m
    }

    /// Exponent difference to a coarser scale: `self = coarser / 2^k`.
    pub fn ratio_exp_to(self, coarser: Scale) -> Result<u32> {
        if !coarser.is_coarser_or_eq(self) {
            return Err(Error::InvalidScale(format!(
                "scale 2^-{} is finer than 2^-{}",
                coarser.m, self.m
            )));
        }
        Ok(self.m - coarser.m)
    }

    pub fn dyadic(self) -> Dyadic {
        Dyadic::new(1, self.m)
    }
}

impl fmt::Debug for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^-{}", self.m)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^-{}", self.m)
    }
}

/// An exact dyadic rational `num / 2^exp`, normalized so that `num` is odd
/// or zero. Supports the handful of exact operations the incidence
/// predicates need.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: u32) -> Dyadic {
        Dyadic { num, exp }.normalize()
    }

    pub fn from_int(n: i64) -> Dyadic {
        Dyadic { num: n as i128, exp: 0 }
    }

    /// The grid point `index · 2^-m`.
    pub fn grid(index: i64, scale: Scale) -> Dyadic {
        Dyadic::new(index as i128, scale.exp())
    }

    fn normalize(mut self) -> Dyadic {
        if self.num == 0 {
            self.exp = 0;
        } else {
            while self.exp > 0 && self.num % 2 == 0 {
                self.num /= 2;
                self.exp -= 1;
            }
        }
        self
    }

    /// Numerator and exponent after raising to a common exponent `e ≥ exp`.
    fn raised(self, e: u32) -> i128 {
        self.num << (e - self.exp)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (-(self.exp as f64)).exp2()
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn abs(self) -> Dyadic {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    /// Floor of `self / 2^-m`, i.e. the grid index of the cell containing
    /// this coordinate at scale `2^-m`.
    pub fn grid_floor(self, scale: Scale) -> i64 {
        let m = scale.exp();
        // self * 2^m = num * 2^(m - exp) or num >> (exp - m)
        if m >= self.exp {
            (self.num << (m - self.exp)) as i64
        } else {
            (self.num >> (self.exp - m)) as i64 // arithmetic shift = floor
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        let e = self.exp.max(other.exp);
        self.raised(e) == other.raised(e)
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let e = self.exp.max(other.exp);
        self.raised(e).cmp(&other.raised(e))
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(self.raised(e) + rhs.raised(e), e)
    }
}

impl std::ops::Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(self.raised(e) - rhs.raised(e), e)
    }
}

impl std::ops::Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(self.num * rhs.num, self.exp + rhs.exp)
    }
}

impl std::ops::Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

/// Half-open dyadic square `[i·r, (i+1)·r) × [j·r, (j+1)·r)` at scale `r`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub scale: Scale,
    pub i: i64,
    pub j: i64,
}

impl DyadicSquare {
    pub fn new(scale: Scale, i: i64, j: i64) -> DyadicSquare {
        DyadicSquare { scale, i, j }
    }

    /// The unit square `[0,1)²`.
    pub fn unit() -> DyadicSquare {
        DyadicSquare { scale: Scale::ONE, i: 0, j: 0 }
    }

    /// The unique ancestor at a coarser (or equal) scale.
    pub fn ancestor(&self, r: Scale) -> Result<DyadicSquare> {
        let k = self.scale.ratio_exp_to(r)?;
        Ok(DyadicSquare { scale: r, i: self.i >> k, j: self.j >> k })
    }

    /// The four children one scale down.
    pub fn children(&self) -> [DyadicSquare; 4] {
        let s = Scale::new(self.scale.exp() + 1);
        let (i, j) = (self.i << 1, self.j << 1);
        [
            DyadicSquare::new(s, i, j),
            DyadicSquare::new(s, i + 1, j),
            DyadicSquare::new(s, i, j + 1),
            DyadicSquare::new(s, i + 1, j + 1),
        ]
    }

    /// True if `finer` (a square at a finer or equal scale) lies inside `self`.
    pub fn contains(&self, finer: &DyadicSquare) -> bool {
        match finer.ancestor(self.scale) {
            Ok(a) => a == *self,
            Err(_) => false,
        }
    }

    pub fn x0(&self) -> Dyadic {
        Dyadic::grid(self.i, self.scale)
    }
    pub fn x1(&self) -> Dyadic {
        Dyadic::grid(self.i + 1, self.scale)
    }
    pub fn y0(&self) -> Dyadic {
        Dyadic::grid(self.j, self.scale)
    }
    pub fn y1(&self) -> Dyadic {
        Dyadic::grid(self.j + 1, self.scale)
    }

    pub fn center(&self) -> (Dyadic, Dyadic) {
        let half = Scale::new(self.scale.exp() + 1);
        (Dyadic::grid(2 * self.i + 1, half), Dyadic::grid(2 * self.j + 1, half))
    }
}

/// Bounding box with integer corners in unit coordinates:
/// `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Domain {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl Domain {
    /// `[0,1)²`, the default domain for point sets.
    pub const UNIT: Domain = Domain { x0: 0, x1: 1, y0: 0, y1: 1 };

    /// `[-1,1) × [-2,2)`, the domain of tube parameter squares.
    pub const TUBE_PARAMS: Domain = Domain { x0: -1, x1: 1, y0: -2, y1: 2 };

    pub fn new(x0: i64, x1: i64, y0: i64, y1: i64) -> Domain {
        Domain { x0, x1, y0, y1 }
    }

    pub fn contains_cell(&self, scale: Scale, i: i64, j: i64) -> bool {
        let n = scale.cells_per_unit();
        i >= self.x0 * n && i < self.x1 * n && j >= self.y0 * n && j < self.y1 * n
    }

    /// Squared diameter as an exact dyadic rational.
    pub fn diameter_sq(&self) -> Dyadic {
        let w = (self.x1 - self.x0) as i128;
        let h = (self.y1 - self.y0) as i128;
        Dyadic::new(w * w + h * h, 0)
    }
}

/// A finite family of dyadic squares at a common base scale, identified
/// with the union of its squares. `|P|_r` for `r` coarser than the base
/// scale is the number of distinct scale-`r` ancestors.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PointSet {
    scale: Scale,
    domain: Domain,
    squares: BTreeSet<(i64, i64)>,
}

impl PointSet {
    pub fn new(scale: Scale) -> PointSet {
        PointSet { scale, domain: Domain::UNIT, squares: BTreeSet::new() }
    }

    pub fn with_domain(scale: Scale, domain: Domain) -> PointSet {
        PointSet { scale, domain, squares: BTreeSet::new() }
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn insert(&mut self, i: i64, j: i64) -> Result<()> {
        if !self.domain.contains_cell(self.scale, i, j) {
            return Err(Error::OutsideDomain(format!(
                "square ({i}, {j}) at scale {} outside {:?}",
                self.scale, self.domain
            )));
        }
        self.squares.insert((i, j));
        Ok(())
    }

    pub fn from_indices<I: IntoIterator<Item = (i64, i64)>>(
        scale: Scale,
        indices: I,
    ) -> Result<PointSet> {
        let mut p = PointSet::new(scale);
        for (i, j) in indices {
            p.insert(i, j)?;
        }
        Ok(p)
    }

    pub fn from_indices_in<I: IntoIterator<Item = (i64, i64)>>(
        scale: Scale,
        domain: Domain,
        indices: I,
    ) -> Result<PointSet> {
        let mut p = PointSet::with_domain(scale, domain);
        for (i, j) in indices {
            p.insert(i, j)?;
        }
        Ok(p)
    }

    /// The full grid of the domain at the given scale.
    pub fn full_grid(scale: Scale) -> PointSet {
        let n = scale.cells_per_unit();
        let mut squares = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                squares.insert((i, j));
            }
        }
        PointSet { scale, domain: Domain::UNIT, squares }
    }

    /// `|P|_δ`: the cardinality at the base scale.
    pub fn len(&self) -> u64 {
        self.squares.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        self.squares.contains(&(i, j))
    }

    pub fn indices(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.squares.iter().copied()
    }

    pub fn squares(&self) -> impl Iterator<Item = DyadicSquare> + '_ {
        let s = self.scale;
        self.squares.iter().map(move |&(i, j)| DyadicSquare::new(s, i, j))
    }

    /// `|P|_r`: the number of distinct scale-`r` ancestors of the squares.
    pub fn covering_number(&self, r: Scale) -> Result<u64> {
        let k = self.scale.ratio_exp_to(r)?;
        if k == 0 {
            return Ok(self.len());
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &self.squares {
            seen.insert((i >> k, j >> k));
        }
        Ok(seen.len() as u64)
    }

    /// `𝒟_r(P)`: the scale-`r` ancestors, deduplicated and sorted.
    pub fn cubes_at(&self, r: Scale) -> Result<Vec<DyadicSquare>> {
        let k = self.scale.ratio_exp_to(r)?;
        let mut seen = BTreeSet::new();
        for &(i, j) in &self.squares {
            seen.insert((i >> k, j >> k));
        }
        Ok(seen.into_iter().map(|(i, j)| DyadicSquare::new(r, i, j)).collect())
    }

    /// `P ∩ Q = {p ∈ P : p ⊂ Q}` for a coarser square `Q`.
    pub fn restrict(&self, q: &DyadicSquare) -> PointSet {
        let squares = self
            .squares
            .iter()
            .copied()
            .filter(|&(i, j)| q.contains(&DyadicSquare::new(self.scale, i, j)))
            .collect();
        PointSet { scale: self.scale, domain: self.domain, squares }
    }

    /// `S_Q(P)`: image under the homothety mapping `Q` to the unit square.
    /// All squares of `P` must lie inside `Q`; the result lives at scale
    /// `δ/Δ` where `Δ` is the scale of `Q`.
    pub fn rescale(&self, q: &DyadicSquare) -> Result<PointSet> {
        let k = self.scale.ratio_exp_to(q.scale)?;
        let (oi, oj) = (q.i << k, q.j << k);
        let mut squares = BTreeSet::new();
        for &(i, j) in &self.squares {
            if !q.contains(&DyadicSquare::new(self.scale, i, j)) {
                return Err(Error::Precondition(format!(
                    "square ({i}, {j}) not inside {q:?}"
                )));
            }
            squares.insert((i - oi, j - oj));
        }
        Ok(PointSet { scale: Scale::new(k), domain: Domain::UNIT, squares })
    }

    /// Group the squares by their scale-`r` ancestor.
    pub fn group_by_ancestor(&self, r: Scale) -> Result<Vec<((i64, i64), Vec<(i64, i64)>)>> {
        let k = self.scale.ratio_exp_to(r)?;
        let mut groups: std::collections::BTreeMap<(i64, i64), Vec<(i64, i64)>> =
            std::collections::BTreeMap::new();
        for &(i, j) in &self.squares {
            groups.entry((i >> k, j >> k)).or_default().push((i, j));
        }
        Ok(groups.into_iter().collect())
    }

    /// Serialize in the set file format: `scale <m>` header, then one
    /// `<i> <j>` line per square in lexicographic order. A non-unit domain
    /// adds a `domain <x0> <x1> <y0> <y1>` line after the header.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scale {}", self.scale.exp())?;
        if self.domain != Domain::UNIT {
            let d = self.domain;
            writeln!(w, "domain {} {} {} {}", d.x0, d.x1, d.y0, d.y1)?;
        }
        for &(i, j) in &self.squares {
            writeln!(w, "{} {}", i, j)?;
        }
        Ok(())
    }

    /// Parse the set file format. Duplicate square lines are rejected.
    pub fn read_from<R: BufRead>(r: R) -> Result<PointSet> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty set file".into()))??;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("scale") {
            return Err(Error::Parse("expected `scale <m>` header".into()));
        }
        let m: u32 = parts
            .next()
            .ok_or_else(|| Error::Parse("missing scale exponent".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad scale exponent: {e}")))?;
        let mut set = PointSet::new(Scale::new(m));
        let mut first = true;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if first && line.starts_with("domain ") {
                let v: Vec<i64> = line
                    .split_whitespace()
                    .skip(1)
                    .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad domain: {e}"))))
                    .collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(Error::Parse("domain needs 4 integers".into()));
                }
                set.domain = Domain::new(v[0], v[1], v[2], v[3]);
                first = false;
                continue;
            }
            first = false;
            let mut it = line.split_whitespace();
            let i: i64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing i".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad index: {e}")))?;
            let j: i64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing j".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad index: {e}")))?;
            if set.squares.contains(&(i, j)) {
                return Err(Error::Parse(format!("duplicate square ({i}, {j})")));
            }
            set.insert(i, j)?;
        }
        Ok(set)
    }

    pub fn to_string_format(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn from_str_format(s: &str) -> Result<PointSet> {
        PointSet::read_from(s.as_bytes())
    }
}
