//! Scale chains, branching profiles, and uniformization by dyadic
//! pigeonholing.
//!
//! A set is `(Δ_j)`-uniform when every occupied square at one chain scale
//! has exactly the same number of occupied children at the next. The
//! uniformizer works bottom-up: at each level it buckets the occupied
//! parent squares by the dyadic class of their child count, keeps the class
//! that retains the most `δ`-mass after trimming, and trims every surviving
//! parent to exactly the class minimum (heaviest children first). The
//! output is exactly uniform and its size is checked against the
//! `(4·N⁻¹·ln(1/δ))^{-N}` floor.

use crate::dyadic::{PointSet, Scale};
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Strictly decreasing dyadic scales `Δ_0 = 1 > Δ_1 > … > Δ_N`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ScaleChain {
    exps: Vec<u32>,
}

impl ScaleChain {
    pub fn new(exps: Vec<u32>) -> Result<ScaleChain> {
        if exps.len() < 2 {
            return Err(Error::InvalidScale("chain needs at least two scales".into()));
        }
        if exps[0] != 0 {
            return Err(Error::InvalidScale("chain must start at Δ_0 = 1".into()));
        }
        if !exps.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidScale("chain must be strictly decreasing".into()));
        }
        Ok(ScaleChain { exps })
    }

    /// `Δ_j = ρ^j` for `ρ = 2^-ratio_exp`, `j = 0..=levels`.
    pub fn from_ratio(ratio_exp: u32, levels: usize) -> Result<ScaleChain> {
        if ratio_exp == 0 || levels == 0 {
            return Err(Error::InvalidScale("ratio and level count must be positive".into()));
        }
        ScaleChain::new((0..=levels).map(|j| ratio_exp * j as u32).collect())
    }

    /// Number of levels `N`.
    pub fn levels(&self) -> usize {
        self.exps.len() - 1
    }

    /// `Δ_j`.
    pub fn scale(&self, j: usize) -> Scale {
        Scale::new(self.exps[j])
    }

    /// The base scale `Δ_N = δ`.
    pub fn base(&self) -> Scale {
        Scale::new(*self.exps.last().unwrap())
    }

    /// Exponent of `Δ_j / Δ_{j-1}` for level `j ∈ 1..=N`.
    pub fn level_ratio_exp(&self, j: usize) -> u32 {
        self.exps[j] - self.exps[j - 1]
    }

    /// When every level has the same ratio, its exponent.
    pub fn uniform_ratio_exp(&self) -> Option<u32> {
        let k = self.level_ratio_exp(1);
        (1..=self.levels()).all(|j| self.level_ratio_exp(j) == k).then_some(k)
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }
}

/// Per-level, per-square branching counts: entry `j-1` maps each
/// `Q ∈ 𝒟_{Δ_{j-1}}(P)` to `|P ∩ Q|_{Δ_j}`.
pub fn branching_profile(
    p: &PointSet,
    chain: &ScaleChain,
) -> Result<Vec<BTreeMap<(i64, i64), u64>>> {
    let m = p.scale().exp();
    if *chain.exps().last().unwrap() != m {
        return Err(Error::InvalidScale(format!(
            "chain ends at 2^-{} but the set is at scale 2^-{m}",
            chain.exps().last().unwrap()
        )));
    }
    let mut out = Vec::with_capacity(chain.levels());
    for j in 1..=chain.levels() {
        let kp = m - chain.exps()[j - 1];
        let kc = m - chain.exps()[j];
        let mut children: BTreeMap<(i64, i64), std::collections::BTreeSet<(i64, i64)>> =
            BTreeMap::new();
        for (i, jj) in p.indices() {
            children
                .entry((i >> kp, jj >> kp))
                .or_default()
                .insert((i >> kc, jj >> kc));
        }
        out.push(children.into_iter().map(|(q, c)| (q, c.len() as u64)).collect());
    }
    Ok(out)
}

/// Exact uniformity check; returns the branching numbers when uniform.
pub fn is_uniform(p: &PointSet, chain: &ScaleChain) -> Result<Option<Vec<u64>>> {
    let profile = branching_profile(p, chain)?;
    let mut branching = Vec::with_capacity(profile.len());
    for level in &profile {
        let mut values = level.values();
        let first = *values.next().expect("occupied squares exist");
        if values.any(|&v| v != first) {
            return Ok(None);
        }
        branching.push(first);
    }
    Ok(Some(branching))
}

/// A point set with an exactly uniform branching structure along a chain.
#[derive(Clone, Debug)]
pub struct UniformSet {
    pub set: PointSet,
    pub chain: ScaleChain,
    /// `K_j` for `j = 1..=N`; `|P|_δ = Π K_j`.
    pub branching: Vec<u64>,
}

/// The uniformization size floor `(4·N⁻¹·ln(1/δ))^{-N}·|P|_δ` (natural
/// logs).
pub fn uniformization_floor(n_input: u64, delta: Scale, levels: usize) -> f64 {
    let log_term = 4.0 * (levels as f64).recip() * (delta.exp() as f64 * std::f64::consts::LN_2);
    log_term.powi(-(levels as i32)) * n_input as f64
}

/// Bottom-up dyadic pigeonholing: returns an exactly uniform subset.
pub fn uniformize(p: &PointSet, chain: &ScaleChain) -> Result<UniformSet> {
    if p.is_empty() {
        return Err(Error::EmptySet("uniformize needs a nonempty set".into()));
    }
    let m = p.scale().exp();
    if *chain.exps().last().unwrap() != m {
        return Err(Error::InvalidScale(format!(
            "chain ends at 2^-{} but the set is at scale 2^-{m}",
            chain.exps().last().unwrap()
        )));
    }
    let mut current: Vec<(i64, i64)> = p.indices().collect();
    let n_levels = chain.levels();
    let mut branching = vec![0u64; n_levels];

    for j in (1..=n_levels).rev() {
        let kp = m - chain.exps()[j - 1];
        let kc = m - chain.exps()[j];
        // parent -> child -> δ-squares
        let mut tree: BTreeMap<(i64, i64), BTreeMap<(i64, i64), Vec<(i64, i64)>>> =
            BTreeMap::new();
        for &(i, jj) in &current {
            tree.entry((i >> kp, jj >> kp))
                .or_default()
                .entry((i >> kc, jj >> kc))
                .or_default()
                .push((i, jj));
        }
        // Bucket parents by the dyadic class of their child count.
        let mut classes: BTreeMap<u32, Vec<&BTreeMap<(i64, i64), Vec<(i64, i64)>>>> =
            BTreeMap::new();
        for children in tree.values() {
            let class = (children.len() as u64).ilog2();
            classes.entry(class).or_default().push(children);
        }
        // Retained mass per class after trimming to the class minimum,
        // keeping the heaviest children of each parent.
        let mut best: Option<(u64, u32, u64)> = None; // (retained, class, K)
        for (&class, parents) in &classes {
            let k_min = parents.iter().map(|c| c.len() as u64).min().unwrap();
            let mut retained = 0u64;
            for children in parents {
                let mut masses: Vec<u64> =
                    children.values().map(|v| v.len() as u64).collect();
                masses.sort_unstable_by(|a, b| b.cmp(a));
                retained += masses.iter().take(k_min as usize).sum::<u64>();
            }
            let better = match best {
                None => true,
                // Tie toward the smaller class.
                Some((r, c, _)) => retained > r || (retained == r && class < c),
            };
            if better {
                best = Some((retained, class, k_min));
            }
        }
        let (_, class, k) = best.expect("nonempty set has at least one class");
        branching[j - 1] = k;
        // Apply: keep winning-class parents, trim each to its K heaviest
        // children (ties toward the smaller child index).
        let mut next = Vec::new();
        for children in tree.values() {
            if (children.len() as u64).ilog2() != class {
                continue;
            }
            let mut ranked: Vec<(&(i64, i64), &Vec<(i64, i64)>)> = children.iter().collect();
            ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
            for (_, squares) in ranked.into_iter().take(k as usize) {
                next.extend_from_slice(squares);
            }
        }
        next.sort_unstable();
        current = next;
    }

    let set = PointSet::from_indices_in(p.scale(), p.domain(), current)?;
    debug_assert_eq!(set.len(), branching.iter().product::<u64>());
    Ok(UniformSet { set, chain: chain.clone(), branching })
}

impl UniformSet {
    /// Replay the exact uniformity check.
    pub fn verify(&self) -> Result<bool> {
        Ok(is_uniform(&self.set, &self.chain)? == Some(self.branching.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_cantor, gen_random_frostman, CantorPattern};

    #[test]
    fn chain_construction() {
        let c = ScaleChain::from_ratio(2, 4).unwrap();
        assert_eq!(c.exps(), &[0, 2, 4, 6, 8]);
        assert_eq!(c.levels(), 4);
        assert_eq!(c.uniform_ratio_exp(), Some(2));
        assert!(ScaleChain::new(vec![0, 3, 3]).is_err());
        assert!(ScaleChain::new(vec![1, 2]).is_err());
    }

    #[test]
    fn branching_profile_examples() {
        // Full grid with halving chain: every entry is 4.
        let p = PointSet::full_grid(Scale::new(3));
        let chain = ScaleChain::from_ratio(1, 3).unwrap();
        for level in branching_profile(&p, &chain).unwrap() {
            assert!(level.values().all(|&v| v == 4));
        }
        assert_eq!(is_uniform(&p, &chain).unwrap(), Some(vec![4, 4, 4]));

        // Single square: every entry 1.
        let p = PointSet::from_indices(Scale::new(4), [(9, 2)]).unwrap();
        let chain = ScaleChain::from_ratio(2, 2).unwrap();
        for level in branching_profile(&p, &chain).unwrap() {
            assert_eq!(level.len(), 1);
            assert!(level.values().all(|&v| v == 1));
        }

        // Diagonal-pair Cantor set: every entry 2 on the halving chain.
        let p = gen_cantor(&CantorPattern::diagonal(), 5).unwrap();
        let chain = ScaleChain::from_ratio(1, 5).unwrap();
        assert_eq!(is_uniform(&p, &chain).unwrap(), Some(vec![2; 5]));
    }

    #[test]
    fn grid_minus_square_not_uniform() {
        let full = PointSet::full_grid(Scale::new(3));
        let p = PointSet::from_indices(
            Scale::new(3),
            full.indices().filter(|&(i, j)| (i, j) != (5, 5)),
        )
        .unwrap();
        let chain = ScaleChain::from_ratio(1, 3).unwrap();
        assert_eq!(is_uniform(&p, &chain).unwrap(), None);
    }

    #[test]
    fn uniformize_identity_on_uniform_sets() {
        let p = gen_cantor(&CantorPattern::middle_half(), 3).unwrap();
        let chain = ScaleChain::from_ratio(2, 3).unwrap();
        let u = uniformize(&p, &chain).unwrap();
        assert_eq!(u.set, p);
        assert_eq!(u.branching, vec![4, 4, 4]);
        assert!(u.verify().unwrap());
    }

    #[test]
    fn uniformize_grid_minus_square() {
        let m = 3u32;
        let full = PointSet::full_grid(Scale::new(m));
        let p = PointSet::from_indices(
            Scale::new(m),
            full.indices().filter(|&(i, j)| (i, j) != (5, 5)),
        )
        .unwrap();
        let chain = ScaleChain::from_ratio(1, m as usize).unwrap();
        let u = uniformize(&p, &chain).unwrap();
        assert!(u.verify().unwrap());
        // The majority class keeps the 4-children parents at every level.
        assert_eq!(u.branching, vec![3, 4, 4]);
        assert_eq!(u.set.len(), 48);
        let floor = uniformization_floor(p.len(), p.scale(), chain.levels());
        assert!((u.set.len() as f64) >= floor);
    }

    #[test]
    fn uniformize_random_sets_meet_floor() {
        for seed in 0..10u64 {
            let (p, _) = gen_random_frostman(1.5, Scale::new(8), seed).unwrap();
            for ratio in [2u32, 4] {
                let chain = ScaleChain::from_ratio(ratio, (8 / ratio) as usize).unwrap();
                let u = uniformize(&p, &chain).unwrap();
                assert!(u.verify().unwrap(), "seed {seed} ratio {ratio}");
                assert_eq!(u.set.len(), u.branching.iter().product::<u64>());
                let floor = uniformization_floor(p.len(), p.scale(), chain.levels());
                assert!(
                    u.set.len() as f64 >= floor,
                    "seed {seed} ratio {ratio}: {} < {floor}",
                    u.set.len()
                );
            }
        }
    }

    #[test]
    fn uniformize_restricts_to_subset() {
        let (p, _) = gen_random_frostman(1.2, Scale::new(6), 3).unwrap();
        let chain = ScaleChain::from_ratio(3, 2).unwrap();
        let u = uniformize(&p, &chain).unwrap();
        for (i, j) in u.set.indices() {
            assert!(p.contains(i, j));
        }
    }
}
