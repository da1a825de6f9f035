//! Point-set and interval-set generators for test corpora and experiments:
//! self-similar Cantor iterates, random Frostman sets by level-wise
//! subsampling, and discretized balls. All generators are deterministic per
//! seed.

use crate::dyadic::{Domain, Dyadic, PointSet, Scale};
use crate::error::Error;
use crate::frostman::{
    frostman_constant, frostman_constant_1d, square_meets_open_ball, Frostman1d,
    FrostmanCertificate,
};
use crate::interval::IntervalSet;
use crate::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Retry budget for certificate-capped random generation.
pub const GENERATOR_RETRY_BUDGET: u32 = 32;
/// Constant cap for generated corpora: keeps configurations in the
/// `C ≲ 1` regime.
pub const GENERATOR_C_CAP: f64 = 16.0;

/// A self-similarity pattern: a subset of the `2^depth × 2^depth`
/// subdivision kept at each iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorPattern {
    pub depth: u32,
    pub cells: Vec<(u32, u32)>,
}

impl CantorPattern {
    pub fn new(depth: u32, cells: Vec<(u32, u32)>) -> Result<CantorPattern> {
        if cells.is_empty() {
            return Err(Error::Precondition("empty Cantor pattern".into()));
        }
        let side = 1u32 << depth;
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &cells {
            if a >= side || b >= side {
                return Err(Error::Precondition(format!(
                    "pattern cell ({a},{b}) outside 2^{depth} subdivision"
                )));
            }
            if !seen.insert((a, b)) {
                return Err(Error::Precondition(format!("duplicate pattern cell ({a},{b})")));
            }
        }
        Ok(CantorPattern { depth, cells })
    }

    /// The four corner cells of the 4×4 subdivision: the 2-D middle-half
    /// Cantor set pattern.
    pub fn middle_half() -> CantorPattern {
        CantorPattern::new(2, vec![(0, 0), (0, 3), (3, 0), (3, 3)]).unwrap()
    }

    /// The two diagonal cells of the 2×2 subdivision.
    pub fn diagonal() -> CantorPattern {
        CantorPattern::new(1, vec![(0, 0), (1, 1)]).unwrap()
    }
}

/// Iterate a pattern `levels` times: the result lives at
/// `δ = 2^-(depth · levels)` and has `|cells|^levels` squares.
pub fn gen_cantor(pattern: &CantorPattern, levels: u32) -> Result<PointSet> {
    let mut cells: Vec<(i64, i64)> = vec![(0, 0)];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(cells.len() * pattern.cells.len());
        for &(i, j) in &cells {
            for &(a, b) in &pattern.cells {
                next.push(((i << pattern.depth) + a as i64, (j << pattern.depth) + b as i64));
            }
        }
        next.sort_unstable();
        cells = next;
    }
    PointSet::from_indices(Scale::new(pattern.depth * levels), cells)
}

fn derive_rng(seed: u64, attempt: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Keep `≈ 2^s` of `n_children` children: `floor(2^s)` plus a Bernoulli
/// carry for the fractional part, clamped to `[1, n_children]`.
fn branch_count(rng: &mut ChaCha8Rng, s: f64, n_children: u32) -> u32 {
    let target = s.exp2();
    let base = target.floor() as u32;
    let frac = target - target.floor();
    let k = base + if frac > 0.0 && rng.gen::<f64>() < frac { 1 } else { 0 };
    k.clamp(1, n_children)
}

fn choose_distinct(rng: &mut ChaCha8Rng, n: u32, k: u32) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..n).collect();
    for idx in 0..k as usize {
        let pick = rng.gen_range(idx..pool.len());
        pool.swap(idx, pick);
    }
    let mut chosen = pool[..k as usize].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Random `(δ,s)`-set by level-wise subsampling: at each halving every kept
/// square keeps `≈ 2^s` of its 4 children. Resamples until the certified
/// constant is below [`GENERATOR_C_CAP`]; deterministic per seed.
pub fn gen_random_frostman(
    s: f64,
    delta: Scale,
    seed: u64,
) -> Result<(PointSet, FrostmanCertificate)> {
    if !(0.0..=2.0).contains(&s) || s == 0.0 {
        return Err(Error::Precondition(format!("s = {s} outside (0, 2]")));
    }
    for attempt in 0..GENERATOR_RETRY_BUDGET {
        let mut rng = derive_rng(seed, attempt);
        let mut cells: Vec<(i64, i64)> = vec![(0, 0)];
        for _ in 0..delta.exp() {
            let mut next = Vec::with_capacity(cells.len() * 4);
            for &(i, j) in &cells {
                let k = branch_count(&mut rng, s, 4);
                let children = [(0i64, 0i64), (1, 0), (0, 1), (1, 1)];
                for c in choose_distinct(&mut rng, 4, k) {
                    let (di, dj) = children[c as usize];
                    next.push(((i << 1) + di, (j << 1) + dj));
                }
            }
            next.sort_unstable();
            cells = next;
        }
        let set = PointSet::from_indices(delta, cells)?;
        let cert = frostman_constant(&set, s)?;
        if cert.c <= GENERATOR_C_CAP {
            return Ok((set, cert));
        }
    }
    Err(Error::GeneratorExhausted(format!(
        "no (2^-{}, {s})-set with C ≤ {GENERATOR_C_CAP} in {GENERATOR_RETRY_BUDGET} attempts",
        delta.exp()
    )))
}

/// 1-D version on `[lo, hi)`: each kept interval keeps `≈ 2^s` of its 2
/// children per halving. Used for slope sets and the sum-product sets.
pub fn gen_random_frostman_1d(
    s: f64,
    scale: Scale,
    lo: i64,
    hi: i64,
    seed: u64,
) -> Result<(IntervalSet, Frostman1d)> {
    if !(0.0..=1.0).contains(&s) || s == 0.0 {
        return Err(Error::Precondition(format!("s = {s} outside (0, 1]")));
    }
    for attempt in 0..GENERATOR_RETRY_BUDGET {
        let mut rng = derive_rng(seed, attempt);
        let mut cells: Vec<i64> = (lo..hi).collect();
        for _ in 0..scale.exp() {
            let mut next = Vec::with_capacity(cells.len() * 2);
            for &c in &cells {
                let k = branch_count(&mut rng, s, 2);
                for d in choose_distinct(&mut rng, 2, k) {
                    next.push((c << 1) + d as i64);
                }
            }
            next.sort_unstable();
            cells = next;
        }
        let set = IntervalSet::from_indices(scale, lo, hi, cells)?;
        let cert = frostman_constant_1d(&set, s)?;
        if cert.c <= GENERATOR_C_CAP {
            return Ok((set, cert));
        }
    }
    Err(Error::GeneratorExhausted(format!(
        "no 1-D (2^-{}, {s})-set with C ≤ {GENERATOR_C_CAP} in {GENERATOR_RETRY_BUDGET} attempts",
        scale.exp()
    )))
}

/// All `δ`-squares of the unit domain meeting the open ball (the half-open
/// square must contain an interior point of the ball, so the test is a
/// strict distance inequality; a radius-`δ` ball centered at a grid point
/// meets exactly the 4 squares sharing that corner).
pub fn gen_ball(center: (Dyadic, Dyadic), radius: Dyadic, delta: Scale) -> PointSet {
    gen_ball_in(center, radius, delta, Domain::UNIT)
}

pub fn gen_ball_in(
    center: (Dyadic, Dyadic),
    radius: Dyadic,
    delta: Scale,
    domain: Domain,
) -> PointSet {
    let rsq = radius * radius;
    let mut set = PointSet::with_domain(delta, domain);
    let cells = delta.cells_per_unit();
    let i_lo = ((center.0 - radius).grid_floor(delta) - 1).max(domain.x0 * cells);
    let i_hi = ((center.0 + radius).grid_floor(delta) + 1).min(domain.x1 * cells - 1);
    let j_lo = ((center.1 - radius).grid_floor(delta) - 1).max(domain.y0 * cells);
    let j_hi = ((center.1 + radius).grid_floor(delta) + 1).min(domain.y1 * cells - 1);
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            if square_meets_open_ball(delta, i, j, center, rsq) {
                set.insert(i, j).expect("inside domain by clipping");
            }
        }
    }
    set
}

/// Exact conversion from `f64` (every finite float is a dyadic rational).
pub fn dyadic_from_f64(x: f64) -> Result<Dyadic> {
    if !x.is_finite() {
        return Err(Error::Precondition(format!("{x} is not a dyadic rational")));
    }
    let mut num = x;
    let mut exp = 0u32;
    while num.fract() != 0.0 {
        num *= 2.0;
        exp += 1;
        if exp > 1100 {
            return Err(Error::Precondition(format!("{x} cannot be normalized")));
        }
    }
    Ok(Dyadic::new(num as i128, exp))
}

/// JSON-friendly generator description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Grid { delta_exp: u32 },
    Cantor { pattern_depth: u32, pattern: Vec<(u32, u32)>, levels: u32 },
    Random { s: f64, delta_exp: u32, seed: u64 },
    Ball { center: (f64, f64), radius: f64, delta_exp: u32 },
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<PointSet> {
        match self {
            GeneratorConfig::Grid { delta_exp } => Ok(PointSet::full_grid(Scale::new(*delta_exp))),
            GeneratorConfig::Cantor { pattern_depth, pattern, levels } => {
                let p = CantorPattern::new(*pattern_depth, pattern.clone())?;
                gen_cantor(&p, *levels)
            }
            GeneratorConfig::Random { s, delta_exp, seed } => {
                Ok(gen_random_frostman(*s, Scale::new(*delta_exp), *seed)?.0)
            }
            GeneratorConfig::Ball { center, radius, delta_exp } => {
                let c = (dyadic_from_f64(center.0)?, dyadic_from_f64(center.1)?);
                Ok(gen_ball(c, dyadic_from_f64(*radius)?, Scale::new(*delta_exp)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_full_pattern_is_full_grid() {
        let pattern =
            CantorPattern::new(1, vec![(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        let p = gen_cantor(&pattern, 3).unwrap();
        assert_eq!(p, PointSet::full_grid(Scale::new(3)));
    }

    #[test]
    fn cantor_single_child_is_single_square() {
        let pattern = CantorPattern::new(1, vec![(1, 0)]).unwrap();
        let p = gen_cantor(&pattern, 4).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn cantor_diagonal_pair_is_one_dimensional() {
        let p = gen_cantor(&CantorPattern::diagonal(), 6).unwrap();
        assert_eq!(p.len(), 64);
        let cert = frostman_constant(&p, 1.0).unwrap();
        assert!(cert.c <= 2.0, "C = {}", cert.c);
    }

    #[test]
    fn random_frostman_s2_is_full_grid() {
        for seed in [0, 7] {
            let (p, cert) = gen_random_frostman(2.0, Scale::new(4), seed).unwrap();
            assert_eq!(p, PointSet::full_grid(Scale::new(4)));
            assert_eq!(cert.c, 1.0);
        }
    }

    #[test]
    fn random_frostman_deterministic_per_seed() {
        let (a, _) = gen_random_frostman(1.3, Scale::new(7), 42).unwrap();
        let (b, _) = gen_random_frostman(1.3, Scale::new(7), 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = gen_random_frostman(1.3, Scale::new(7), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_frostman_s1_size_and_cap() {
        let (p, cert) = gen_random_frostman(1.0, Scale::new(8), 1).unwrap();
        assert!(cert.c <= GENERATOR_C_CAP);
        assert!(p.len() >= 256 / 4 && p.len() <= 4 * 256, "|P| = {}", p.len());
    }

    #[test]
    fn random_frostman_1d_basics() {
        let (s, cert) = gen_random_frostman_1d(0.5, Scale::new(8), 0, 1, 9).unwrap();
        assert!(cert.c <= GENERATOR_C_CAP);
        assert!(s.len() >= 4 && s.len() <= 64, "|S| = {}", s.len());
        let (t, _) = gen_random_frostman_1d(0.5, Scale::new(8), 0, 1, 9).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn ball_tiny_radius_touches_corner_squares() {
        // Radius δ centered at a grid point meets exactly the 4 squares
        // sharing that corner.
        let d = Scale::new(6);
        let p = gen_ball((Dyadic::new(1, 1), Dyadic::new(1, 1)), d.dyadic(), d);
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn ball_radius_sqrt2_is_full_grid() {
        let d = Scale::new(4);
        let p = gen_ball((Dyadic::ZERO, Dyadic::ZERO), Dyadic::from_int(2), d);
        assert_eq!(p, PointSet::full_grid(d));
    }

    #[test]
    fn ball_area_envelope() {
        // center (1/2, 1/2), radius 2^-2, δ = 2^-6: count within the area
        // envelope π(r/δ)²(1 ± 3δ/r).
        let d = Scale::new(6);
        let p = gen_ball(
            (Dyadic::new(1, 1), Dyadic::new(1, 1)),
            Dyadic::new(1, 2),
            d,
        );
        let rd = 16.0; // r/δ
        let lo = std::f64::consts::PI * rd * rd * (1.0 - 3.0 / rd);
        let hi = std::f64::consts::PI * rd * rd * (1.0 + 3.0 / rd);
        let n = p.len() as f64;
        assert!(n >= lo && n <= hi, "count {n} outside [{lo}, {hi}]");
    }

    #[test]
    fn generator_config_json_round_trip() {
        let cfg = GeneratorConfig::Random { s: 1.25, delta_exp: 6, seed: 11 };
        let s = serde_json::to_string(&cfg).unwrap();
        let back: GeneratorConfig = serde_json::from_str(&s).unwrap();
        let a = cfg.build().unwrap();
        let b = back.build().unwrap();
        assert_eq!(a, b);

        let ball = serde_json::from_str::<GeneratorConfig>(
            r#"{"kind":"ball","center":[0.5,0.5],"radius":0.25,"delta_exp":5}"#,
        )
        .unwrap();
        assert!(ball.build().unwrap().len() > 0);
    }
}
