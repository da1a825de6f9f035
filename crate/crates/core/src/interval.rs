//! One-dimensional dyadic interval sets: slope sets, projection images and
//! the sum/product sets of the Elekes grid all live here.
//!
//! An `IntervalSet` is a finite family of half-open dyadic intervals
//! `[k·r, (k+1)·r)` at a base scale, inside a declared integer range.
//! Sums and products are computed with covering semantics: the image of a
//! pair of cells is covered exactly by the dyadic cells meeting it, so the
//! counts never undercount the continuum image.

use crate::dyadic::Scale;
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A finite family of dyadic `δ`-intervals inside `[lo, hi)` (integer ends).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct IntervalSet {
    scale: Scale,
    lo: i64,
    hi: i64,
    cells: BTreeSet<i64>,
}

impl IntervalSet {
    pub fn new(scale: Scale, lo: i64, hi: i64) -> IntervalSet {
        IntervalSet { scale, lo, hi, cells: BTreeSet::new() }
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn insert(&mut self, k: i64) -> Result<()> {
        let n = self.scale.cells_per_unit();
        if k < self.lo * n || k >= self.hi * n {
            return Err(Error::OutsideDomain(format!(
                "interval {k} at scale {} outside [{}, {})",
                self.scale, self.lo, self.hi
            )));
        }
        self.cells.insert(k);
        Ok(())
    }

    pub fn from_indices<I: IntoIterator<Item = i64>>(
        scale: Scale,
        lo: i64,
        hi: i64,
        indices: I,
    ) -> Result<IntervalSet> {
        let mut s = IntervalSet::new(scale, lo, hi);
        for k in indices {
            s.insert(k)?;
        }
        Ok(s)
    }

    /// Every cell of `[lo, hi)` at the given scale.
    pub fn full(scale: Scale, lo: i64, hi: i64) -> IntervalSet {
        let n = scale.cells_per_unit();
        let cells = (lo * n..hi * n).collect();
        IntervalSet { scale, lo, hi, cells }
    }

    pub fn len(&self) -> u64 {
        self.cells.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.cells.iter().copied()
    }

    pub fn contains(&self, k: i64) -> bool {
        self.cells.contains(&k)
    }

    /// `|S|_r`: distinct scale-`r` ancestor count.
    pub fn covering_number(&self, r: Scale) -> Result<u64> {
        let k = self.scale.ratio_exp_to(r)?;
        let mut seen = BTreeSet::new();
        for &c in &self.cells {
            seen.insert(c >> k);
        }
        Ok(seen.len() as u64)
    }

    /// Max over dyadic `r`-intervals `I` of `|S ∩ I|_δ`, for each coarser
    /// scale exponent. Index 0 of the result corresponds to `r = 1`.
    pub fn ancestor_multiplicities(&self) -> Vec<u64> {
        let m = self.scale.exp();
        let mut out = Vec::with_capacity(m as usize + 1);
        for e in 0..=m {
            let k = m - e;
            let mut counts: std::collections::BTreeMap<i64, u64> = Default::default();
            for &c in &self.cells {
                *counts.entry(c >> k).or_insert(0) += 1;
            }
            out.push(counts.values().copied().max().unwrap_or(0));
        }
        out
    }

    /// Covering-semantics sumset `A + B` at the common base scale. The image
    /// of `[a, a+δ) + [b, b+δ)` is `[a+b, a+b+2δ)`, i.e. cells `a+b` and
    /// `a+b+1`.
    pub fn sumset(&self, other: &IntervalSet) -> Result<IntervalSet> {
        if self.scale != other.scale {
            return Err(Error::InvalidScale("sumset needs a common scale".into()));
        }
        let mut out = IntervalSet::new(
            self.scale,
            self.lo + other.lo,
            self.hi + other.hi,
        );
        for &a in &self.cells {
            for &b in &other.cells {
                out.cells.insert(a + b);
                out.cells.insert(a + b + 1);
            }
        }
        Ok(out)
    }

    /// Covering-semantics productset `A · B` for sets in `[0, ∞)`. The image
    /// of `[a, a+δ) · [b, b+δ)` is `[ab, (a+δ)(b+δ))`; the covering cells
    /// are computed exactly in integers.
    pub fn productset(&self, other: &IntervalSet) -> Result<IntervalSet> {
        if self.scale != other.scale {
            return Err(Error::InvalidScale("productset needs a common scale".into()));
        }
        if self.lo < 0 || other.lo < 0 {
            return Err(Error::Precondition("productset needs nonnegative sets".into()));
        }
        let m = self.scale.exp();
        let n = 1i128 << m;
        let mut out = IntervalSet::new(self.scale, self.lo * other.lo, self.hi * other.hi);
        for &a in &self.cells {
            for &b in &other.cells {
                let (a, b) = (a as i128, b as i128);
                // Image is [ab·δ², (a+1)(b+1)·δ²) in units of δ²; covering
                // δ-cells k satisfy k·n < (a+1)(b+1) and (k+1)·n > ab.
                let lo_num = a * b;
                let hi_num = (a + 1) * (b + 1);
                let k_min = lo_num.div_euclid(n);
                let k_max = if hi_num % n == 0 { hi_num / n - 1 } else { hi_num.div_euclid(n) };
                for k in k_min..=k_max {
                    out.cells.insert(k as i64);
                }
            }
        }
        Ok(out)
    }
}
