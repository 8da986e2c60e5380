//! Independent chords and the divide-and-conquer count built on them.
//!
//! Two chords are independent when the ways to insert one never constrain
//! the ways to insert the other. Independence is detected by three
//! sufficient conditions, all combinatorial in the matching: a separating
//! chord keeps the pair in disjoint sub-disks; a non-crossing pair whose
//! common crossers are mutually non-crossing cannot trade sides; and a
//! pair no third chord crosses interacts with nothing at all.
//!
//! [`count_with_independence`] partitions the chords into sets `R`, `G`,
//! `B` with every `R`-`B` pair independent, enumerates the insertions of
//! `G`, and under each of them multiplies the counts for `R` and `B`,
//! recursing into both. The partition is chosen by a randomized greedy
//! search maximizing the lighter side's weight. Every split is verified
//! against the independence relation before use, and the whole procedure
//! is checked against plain counting in the test suite.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::counter::{
    build_pool, dfs_count, estimate_weights, expand_frontier, sort_by_weight, Ctl,
};
use crate::error::{Error, Result};
use crate::matching::{ChordId, Matching};
use crate::subdivision::{boundary_embedding, Embedding};
use crate::BigCount;

/// Knobs for [`count_with_independence`].
#[derive(Clone, Debug)]
pub struct IndependenceOptions {
    /// Maximum nesting of splits before falling back to plain counting.
    pub depth_limit: u32,
    /// Randomized partition candidates tried per split.
    pub trials: u32,
    /// Seed for weight sampling and partition search.
    pub seed: u64,
    /// Worker threads; 0 uses one per available CPU.
    pub threads: usize,
    /// Cap on processed partial embeddings, as in
    /// [`crate::counter::CountOptions`].
    pub budget: Option<u64>,
}

impl Default for IndependenceOptions {
    fn default() -> Self {
        IndependenceOptions {
            depth_limit: 4,
            trials: 200,
            seed: 0,
            threads: 0,
            budget: None,
        }
    }
}

/// Whether chords `c1` and `c2` of `m` are independent.
pub fn independent(m: &Matching, c1: ChordId, c2: ChordId) -> Result<bool> {
    let k = m.k();
    if c1 >= k || c2 >= k {
        return Err(Error::validation(format!(
            "chord ids {c1}, {c2} out of range 0..{k}"
        )));
    }
    if c1 == c2 {
        return Err(Error::validation(format!(
            "independence needs two distinct chords, got {c1} twice"
        )));
    }

    // A chord separating the pair into disjoint sub-disks.
    for g in 0..k {
        if g != c1 && g != c2 && separates(m, g, c1, c2) {
            return Ok(true);
        }
    }

    let both: Vec<ChordId> = (0..k)
        .filter(|&g| g != c1 && g != c2 && m.crosses(g, c1) && m.crosses(g, c2))
        .collect();

    // No third chord reaches across both.
    if both.is_empty() {
        return Ok(true);
    }

    // A non-crossing pair whose common crossers never cross each other.
    if !m.crosses(c1, c2) {
        let tangled = both
            .iter()
            .enumerate()
            .any(|(i, &g)| both[i + 1..].iter().any(|&h| m.crosses(g, h)));
        if !tangled {
            return Ok(true);
        }
    }

    Ok(false)
}

/// Whether both endpoints of `c1` lie strictly inside the boundary arc cut
/// off by `g` and both endpoints of `c2` strictly outside, or vice versa.
fn separates(m: &Matching, g: ChordId, c1: ChordId, c2: ChordId) -> bool {
    let (x, y) = m.pair(g);
    let inside = |c: ChordId| {
        let (a, b) = m.pair(c);
        x < a && a < y && x < b && b < y
    };
    let outside = |c: ChordId| {
        let (a, b) = m.pair(c);
        (a < x || a > y) && (b < x || b > y)
    };
    (inside(c1) && outside(c2)) || (outside(c1) && inside(c2))
}

/// Flattened symmetric matrix of [`independent`] over all chord pairs.
pub fn independence_pairs(m: &Matching) -> Vec<bool> {
    let k = m.k();
    let mut pairs = vec![false; k * k];
    for c1 in 0..k {
        for c2 in c1 + 1..k {
            let ind = independent(m, c1, c2).expect("ids are in range and distinct");
            pairs[c1 * k + c2] = ind;
            pairs[c2 * k + c1] = ind;
        }
    }
    pairs
}

/// A split of the chords with every `R`-`B` pair independent. `weight_r`
/// and `weight_b` are the products of the member chords' weights.
#[derive(Clone, Debug)]
pub struct RgbPartition {
    pub r: Vec<ChordId>,
    pub g: Vec<ChordId>,
    pub b: Vec<ChordId>,
    pub weight_r: f64,
    pub weight_b: f64,
}

/// Best partition of all chords of `m` found across `trials` randomized
/// greedy passes, scored by the smaller of the two side weights. When no
/// chord pair is independent the degenerate partition with everything in
/// `G` is returned.
pub fn partition_rgb(
    m: &Matching,
    weights: &[f64],
    trials: u32,
    seed: u64,
) -> Result<RgbPartition> {
    if trials == 0 {
        return Err(Error::validation("partition search needs trials >= 1"));
    }
    if weights.len() != m.k() {
        return Err(Error::validation(format!(
            "got {} weights for {} chords",
            weights.len(),
            m.k()
        )));
    }
    let pairs = independence_pairs(m);
    let chords: Vec<ChordId> = (0..m.k()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = best_partition(&chords, m.k(), &pairs, weights, trials, &mut rng);
    verify_partition(&part, m.k(), &pairs)?;
    Ok(part)
}

fn log2_weight(w: f64) -> f64 {
    // Weights are mean route counts, never below 1; guard anyway.
    w.max(1.0).log2()
}

fn best_partition(
    chords: &[ChordId],
    k: usize,
    pairs: &[bool],
    weights: &[f64],
    trials: u32,
    rng: &mut ChaCha8Rng,
) -> RgbPartition {
    let mut best: Option<(f64, RgbPartition)> = None;
    let mut order = chords.to_vec();
    for _ in 0..trials {
        order.shuffle(rng);
        let mut r: Vec<ChordId> = Vec::new();
        let mut b: Vec<ChordId> = Vec::new();
        let mut g: Vec<ChordId> = Vec::new();
        let (mut lw_r, mut lw_b) = (0.0f64, 0.0f64);
        for &c in &order {
            let fits_r = b.iter().all(|&x| pairs[c * k + x]);
            let fits_b = r.iter().all(|&x| pairs[c * k + x]);
            let side = match (fits_r, fits_b) {
                (true, true) => (lw_r, r.len()) <= (lw_b, b.len()),
                (true, false) => true,
                (false, true) => false,
                (false, false) => {
                    g.push(c);
                    continue;
                }
            };
            if side {
                r.push(c);
                lw_r += log2_weight(weights[c]);
            } else {
                b.push(c);
                lw_b += log2_weight(weights[c]);
            }
        }
        let score = if r.is_empty() || b.is_empty() {
            f64::NEG_INFINITY
        } else {
            lw_r.min(lw_b)
        };
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((
                score,
                RgbPartition {
                    r,
                    g,
                    b,
                    weight_r: lw_r.exp2(),
                    weight_b: lw_b.exp2(),
                },
            ));
        }
    }
    let (score, mut part) = best.expect("trials >= 1");
    if score == f64::NEG_INFINITY {
        // No usable split: normalize to the degenerate all-G partition.
        let mut g = chords.to_vec();
        g.sort_unstable();
        part = RgbPartition { r: Vec::new(), g, b: Vec::new(), weight_r: 1.0, weight_b: 1.0 };
    }
    part
}

fn verify_partition(part: &RgbPartition, k: usize, pairs: &[bool]) -> Result<()> {
    for &r in &part.r {
        for &b in &part.b {
            if !pairs[r * k + b] {
                return Err(Error::invariant(format!(
                    "partition places dependent chords {r} and {b} on opposite sides"
                )));
            }
        }
    }
    Ok(())
}

/// Recursive counting plan, fixed before any embedding work: the chord
/// subsets only depend on the matching, so the plan is shared by every
/// branch of the search.
enum Plan {
    /// Plain search over these chords, lightest first.
    Plain(Vec<ChordId>),
    /// Enumerate `g` insertions, then multiply the two side counts.
    Split { g: Vec<ChordId>, r: Box<Plan>, b: Box<Plan> },
}

fn build_plan(
    mut chords: Vec<ChordId>,
    depth: u32,
    k: usize,
    pairs: &[bool],
    weights: &[f64],
    opts: &IndependenceOptions,
    rng: &mut ChaCha8Rng,
) -> Plan {
    sort_by_weight(&mut chords, weights);
    if chords.len() <= 3 || depth >= opts.depth_limit {
        return Plan::Plain(chords);
    }
    let part = best_partition(&chords, k, pairs, weights, opts.trials, rng);
    if part.r.is_empty() || part.b.is_empty() {
        return Plan::Plain(chords);
    }
    let mut g = part.g;
    sort_by_weight(&mut g, weights);
    Plan::Split {
        g,
        r: Box::new(build_plan(part.r, depth + 1, k, pairs, weights, opts, rng)),
        b: Box::new(build_plan(part.b, depth + 1, k, pairs, weights, opts, rng)),
    }
}

/// Counts arrangements through the plan; leaves the embedding unchanged.
fn exec_plan(e: &mut Embedding, plan: &Plan, ctl: &Ctl) -> Result<BigCount> {
    match plan {
        Plan::Plain(order) => {
            if order.is_empty() {
                return Ok(BigCount::from(1u32));
            }
            let mut acc = BigCount::from(0u32);
            dfs_count(e, order, 0, ctl, &mut acc)?;
            Ok(acc)
        }
        Plan::Split { g, r, b } => {
            let mut total = BigCount::from(0u32);
            exec_split(e, g, 0, r, b, ctl, &mut total)?;
            Ok(total)
        }
    }
}

fn exec_split(
    e: &mut Embedding,
    g: &[ChordId],
    i: usize,
    r: &Plan,
    b: &Plan,
    ctl: &Ctl,
    total: &mut BigCount,
) -> Result<()> {
    if i == g.len() {
        let count_r = exec_plan(e, r, ctl)?;
        let count_b = exec_plan(e, b, ctl)?;
        *total += count_r * count_b;
        return Ok(());
    }
    for route in e.insertion_routes(g[i])? {
        ctl.spend()?;
        e.insert_route(g[i], &route);
        exec_split(e, g, i + 1, r, b, ctl, total)?;
        e.undo_last();
    }
    Ok(())
}

/// Exact arrangement count of `m` through independence splits; always
/// equals [`crate::counter::count_arrangements`], usually much faster when
/// the matching has many independent pairs.
pub fn count_with_independence(m: &Matching, opts: &IndependenceOptions) -> Result<BigCount> {
    let k = m.k();
    let pairs = independence_pairs(m);
    let weights = estimate_weights(m, 64, opts.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let plan = build_plan((0..k).collect(), 0, k, &pairs, &weights, opts, &mut rng);
    let ctl = Ctl::new(opts.budget);
    let pool = build_pool(opts.threads)?;
    pool.install(|| {
        ctl.spend()?;
        let root = boundary_embedding(m);
        match &plan {
            Plan::Plain(order) => {
                let (frontier, depth) =
                    expand_frontier(root, order, order.len() - 1, &ctl)?;
                frontier
                    .into_par_iter()
                    .map(|mut e| {
                        let mut acc = BigCount::from(0u32);
                        dfs_count(&mut e, order, depth, &ctl, &mut acc)?;
                        Ok(acc)
                    })
                    .try_reduce(|| BigCount::from(0u32), |a, b| Ok(a + b))
            }
            Plan::Split { g, r, b } => {
                let (frontier, depth) = expand_frontier(root, g, g.len(), &ctl)?;
                frontier
                    .into_par_iter()
                    .map(|mut e| {
                        let mut total = BigCount::from(0u32);
                        exec_split(&mut e, g, depth, r, b, &ctl, &mut total)?;
                        Ok(total)
                    })
                    .try_reduce(|| BigCount::from(0u32), |a, b| Ok(a + b))
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::{count_arrangements, CountOptions};

    /// A separator (0,7) with one chord on each side, plus two chords that
    /// cross both sides and each other, plus two fillers.
    fn separated_fixture() -> Matching {
        Matching::from_pairs(&[
            (0, 7),
            (1, 4),
            (9, 12),
            (2, 10),
            (3, 11),
            (5, 6),
            (8, 13),
        ])
        .unwrap()
    }

    #[test]
    fn separator_condition_detects() {
        let m = separated_fixture();
        // (1,4) vs (9,12): only the separator applies; the common crossers
        // (2,10) and (3,11) cross each other and defeat the other two.
        assert!(independent(&m, 1, 2).unwrap());
        assert!(independent(&m, 2, 1).unwrap());
    }

    #[test]
    fn tangled_crossers_are_dependent() {
        let m = separated_fixture();
        // (2,10) vs (3,11) cross each other and (1,4) crosses both.
        assert!(!independent(&m, 3, 4).unwrap());
        // (1,4) vs (2,10) cross and (3,11) crosses both.
        assert!(!independent(&m, 1, 3).unwrap());
    }

    #[test]
    fn all_crossing_triple_has_no_independence() {
        let m = Matching::family(&[1, 1, 1]).unwrap();
        for c1 in 0..3 {
            for c2 in 0..3 {
                if c1 != c2 {
                    assert!(!independent(&m, c1, c2).unwrap());
                }
            }
        }
    }

    #[test]
    fn untouched_pairs_are_independent() {
        // Nested chords: nothing crosses anything.
        let m = Matching::family(&[4]).unwrap();
        for c1 in 0..4 {
            for c2 in c1 + 1..4 {
                assert!(independent(&m, c1, c2).unwrap());
            }
        }
    }

    #[test]
    fn rejects_degenerate_queries() {
        let m = Matching::family(&[1, 1, 1]).unwrap();
        assert!(independent(&m, 1, 1).is_err());
        assert!(independent(&m, 0, 9).is_err());
    }

    #[test]
    fn partition_of_all_crossing_is_degenerate() {
        let m = Matching::family(&[1, 1, 1, 1]).unwrap();
        let w = vec![1.0; 4];
        let p = partition_rgb(&m, &w, 50, 0).unwrap();
        assert!(p.r.is_empty() && p.b.is_empty());
        assert_eq!(p.g, vec![0, 1, 2, 3]);
    }

    #[test]
    fn partition_of_nested_family_uses_both_sides() {
        let m = Matching::family(&[4]).unwrap();
        let w = vec![1.0; 4];
        let p = partition_rgb(&m, &w, 50, 0).unwrap();
        assert!(!p.r.is_empty() && !p.b.is_empty());
        assert!(p.g.is_empty());
    }

    #[test]
    fn disjoint_triples_multiply() {
        let m = Matching::from_pairs(&[(0, 3), (1, 4), (2, 5), (6, 9), (7, 10), (8, 11)])
            .unwrap();
        let got = count_with_independence(&m, &IndependenceOptions::default()).unwrap();
        assert_eq!(got, BigCount::from(4u32));
        // Cross-group pairs are independent, so a real split must exist.
        assert!(independent(&m, 0, 3).unwrap());
        let w = vec![2.0; 6];
        let p = partition_rgb(&m, &w, 50, 1).unwrap();
        assert!(!p.r.is_empty() && !p.b.is_empty());
    }

    #[test]
    fn matches_plain_counting() {
        let fixtures = [
            Matching::family(&[1, 1, 1, 1, 1]).unwrap(),
            Matching::family(&[2, 1, 2]).unwrap(),
            Matching::family(&[3, 3]).unwrap(),
            separated_fixture(),
        ];
        for m in fixtures {
            let plain = count_arrangements(&m, &CountOptions::default()).unwrap();
            for depth_limit in [0, 1, 4] {
                let opts = IndependenceOptions { depth_limit, ..Default::default() };
                assert_eq!(
                    count_with_independence(&m, &opts).unwrap(),
                    plain,
                    "depth {depth_limit}"
                );
            }
        }
    }

    #[test]
    fn budget_propagates() {
        let m = Matching::family(&[1, 1, 1, 1, 1]).unwrap();
        let opts = IndependenceOptions { budget: Some(2), ..Default::default() };
        assert!(matches!(
            count_with_independence(&m, &opts),
            Err(Error::Budget { budget: 2 })
        ));
    }
}
