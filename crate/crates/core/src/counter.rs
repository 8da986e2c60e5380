//! Counting and enumerating the simple arrangements of a matching.
//!
//! The count is a depth-first search over partial embeddings: chords are
//! inserted one at a time in a fixed order, branching over the insertion
//! routes of each chord and undoing on backtrack. The final chord is never
//! enumerated; its routes are counted by the face-graph path count, which
//! is where a good insertion order pays off. The search parallelizes by
//! expanding the first few levels breadth-first and handing the resulting
//! partial embeddings to a thread pool; the total is a sum, so the result
//! does not depend on the number of threads.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matching::{ChordId, Matching};
use crate::subdivision::{boundary_embedding, Embedding};
use crate::BigCount;

/// Knobs for [`count_arrangements`].
#[derive(Clone, Debug, Default)]
pub struct CountOptions {
    /// Worker threads; 0 uses one per available CPU.
    pub threads: usize,
    /// Cap on the number of partial embeddings the search may process;
    /// exceeding it aborts with [`Error::Budget`]. Parallel runs may
    /// overcount slightly, never undercount.
    pub budget: Option<u64>,
    /// Insertion order; defaults to [`default_order`].
    pub order: Option<Vec<ChordId>>,
    /// Seed for the weight sampling behind the default order.
    pub seed: u64,
}

pub(crate) struct Ctl {
    budget: Option<u64>,
    used: AtomicU64,
}

impl Ctl {
    pub(crate) fn new(budget: Option<u64>) -> Ctl {
        Ctl { budget, used: AtomicU64::new(0) }
    }

    pub(crate) fn spend(&self) -> Result<()> {
        let used = self.used.fetch_add(1, Ordering::Relaxed);
        match self.budget {
            Some(b) if used >= b => Err(Error::Budget { budget: b }),
            _ => Ok(()),
        }
    }
}

fn validate_order(m: &Matching, order: &[ChordId]) -> Result<()> {
    let k = m.k();
    if order.len() != k {
        return Err(Error::validation(format!(
            "insertion order has {} entries for {} chords",
            order.len(),
            k
        )));
    }
    let mut seen = vec![false; k];
    for &c in order {
        if c >= k || seen[c] {
            return Err(Error::validation(format!(
                "insertion order is not a permutation of 0..{k}"
            )));
        }
        seen[c] = true;
    }
    Ok(())
}

fn effective_order(m: &Matching, opts: &CountOptions) -> Result<Vec<ChordId>> {
    match &opts.order {
        Some(o) => {
            validate_order(m, o)?;
            Ok(o.clone())
        }
        None => default_order(m, opts.seed),
    }
}

/// Number of non-isomorphic simple arrangements of `m`.
pub fn count_arrangements(m: &Matching, opts: &CountOptions) -> Result<BigCount> {
    let order = effective_order(m, opts)?;
    let ctl = Ctl::new(opts.budget);
    let pool = build_pool(opts.threads)?;
    pool.install(|| {
        ctl.spend()?;
        let (frontier, depth) =
            expand_frontier(boundary_embedding(m), &order, order.len() - 1, &ctl)?;
        frontier
            .into_par_iter()
            .map(|mut e| {
                let mut acc = BigCount::from(0u32);
                dfs_count(&mut e, &order, depth, &ctl, &mut acc)?;
                Ok(acc)
            })
            .try_reduce(|| BigCount::from(0u32), |a, b| Ok(a + b))
    })
}

pub(crate) fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invariant(format!("thread pool: {e}")))
}

/// Breadth-first expansion of the first levels of the search, used to seed
/// the thread pool. Inserts chords `order[..depth]` in all possible ways,
/// stopping once the frontier holds enough work per thread or `max_depth`
/// is reached. Returns the partial embeddings and the depth they are at.
pub(crate) fn expand_frontier(
    root: Embedding,
    order: &[ChordId],
    max_depth: usize,
    ctl: &Ctl,
) -> Result<(Vec<Embedding>, usize)> {
    let fan_out = 64 * rayon::current_num_threads();
    let mut frontier = vec![root];
    let mut depth = 0;
    while depth < max_depth && frontier.len() < fan_out {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for e in &frontier {
            for r in e.insertion_routes(order[depth])? {
                ctl.spend()?;
                let mut child = e.clone();
                child.insert_route(order[depth], &r);
                next.push(child);
            }
        }
        frontier = next;
        depth += 1;
    }
    Ok((frontier, depth))
}

pub(crate) fn dfs_count(
    e: &mut Embedding,
    order: &[ChordId],
    depth: usize,
    ctl: &Ctl,
    acc: &mut BigCount,
) -> Result<()> {
    if depth + 1 == order.len() {
        match e.count_insertions_u128(order[depth])? {
            Some(v) => *acc += BigCount::from(v),
            None => *acc += e.count_insertions(order[depth])?,
        }
        return Ok(());
    }
    for r in e.insertion_routes(order[depth])? {
        ctl.spend()?;
        e.insert_route(order[depth], &r);
        dfs_count(e, order, depth + 1, ctl, acc)?;
        e.undo_last();
    }
    Ok(())
}

/// Mean number of insertion routes each chord would have in a random
/// arrangement of the remaining chords, estimated from `samples` draws.
pub fn estimate_weights(m: &Matching, samples: u32, seed: u64) -> Result<Vec<f64>> {
    let k = m.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![0.0f64; k];
    for (i, w) in weights.iter_mut().enumerate() {
        let mut total = 0.0f64;
        for _ in 0..samples {
            let e = sample_embedding_skipping(m, Some(i), &mut rng)?;
            let routes = match e.count_insertions_u128(i)? {
                Some(v) => v as f64,
                None => f64::MAX,
            };
            total += routes;
        }
        *w = total / samples as f64;
    }
    Ok(weights)
}

/// Insertion order used when none is given: chords sorted by estimated
/// weight, lightest first, so the heaviest chord is the one left to the
/// closing path count. Ties break toward the lower chord id.
pub fn default_order(m: &Matching, seed: u64) -> Result<Vec<ChordId>> {
    let weights = estimate_weights(m, 64, seed)?;
    let mut order: Vec<ChordId> = (0..m.k()).collect();
    sort_by_weight(&mut order, &weights);
    Ok(order)
}

/// Sorts chord ids by weight ascending, ties toward the lower id.
pub(crate) fn sort_by_weight(chords: &mut [ChordId], weights: &[f64]) {
    chords.sort_by(|&a, &b| {
        weights[a]
            .partial_cmp(&weights[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
}

/// One random arrangement of `m`: chords inserted in id order, each along
/// a route drawn uniformly among its insertion routes.
pub fn sample_arrangement<R: Rng>(m: &Matching, rng: &mut R) -> Result<Embedding> {
    sample_embedding_skipping(m, None, rng)
}

fn sample_embedding_skipping<R: Rng>(
    m: &Matching,
    skip: Option<ChordId>,
    rng: &mut R,
) -> Result<Embedding> {
    let mut e = boundary_embedding(m);
    for c in 0..m.k() {
        if skip == Some(c) {
            continue;
        }
        match e.sample_route(c, rng)? {
            Some(r) => e.insert_route(c, &r),
            None => {
                return Err(Error::invariant(format!(
                    "chord {c} has no insertion route into a partial embedding"
                )))
            }
        }
    }
    Ok(e)
}

/// Streams every complete embedding of `m`, inserting in `order` (default
/// chord id order). Backed by a worker thread; dropping the iterator stops
/// the enumeration.
pub fn enumerate_arrangements(
    m: &Matching,
    order: Option<&[ChordId]>,
) -> Result<impl Iterator<Item = Embedding>> {
    let order = match order {
        Some(o) => {
            validate_order(m, o)?;
            o.to_vec()
        }
        None => (0..m.k()).collect(),
    };
    let root = boundary_embedding(m);
    let (tx, rx) = mpsc::sync_channel::<Embedding>(256);
    std::thread::spawn(move || {
        fn walk(
            e: &mut Embedding,
            order: &[ChordId],
            depth: usize,
            tx: &mpsc::SyncSender<Embedding>,
        ) -> bool {
            if depth == order.len() {
                return tx.send(e.clone()).is_ok();
            }
            let routes = e
                .insertion_routes(order[depth])
                .expect("enumeration order was validated");
            for r in routes {
                e.insert_route(order[depth], &r);
                let alive = walk(e, order, depth + 1, tx);
                e.undo_last();
                if !alive {
                    return false;
                }
            }
            true
        }
        let mut root = root;
        walk(&mut root, &order, 0, &tx);
    });
    Ok(rx.into_iter())
}

/// Outcome of [`verify_arrangements`].
#[derive(Clone, Debug)]
pub struct VerifyReport {
    /// Arrangements seen by full enumeration.
    pub enumerated: u64,
    /// Distinct chirotopes among them (equals `enumerated` on success).
    pub distinct_chirotopes: u64,
    /// The independent count from [`count_arrangements`].
    pub counted: BigCount,
}

/// Enumerates every arrangement of `m`, checking structural validity,
/// crossing multiplicities, and chirotope distinctness, then compares the
/// total against [`count_arrangements`]. Any discrepancy is an
/// [`Error::Invariant`].
pub fn verify_arrangements(m: &Matching, opts: &CountOptions) -> Result<VerifyReport> {
    let order = effective_order(m, opts)?;
    let mut digests: HashSet<(u64, u64)> = HashSet::new();
    let mut enumerated = 0u64;
    for e in enumerate_arrangements(m, Some(&order))? {
        e.validate()?;
        check_crossing_multiplicities(m, &e)?;
        enumerated += 1;
        if !digests.insert(chirotope_digest(&e)) {
            return Err(Error::invariant(format!(
                "duplicate chirotope after {enumerated} arrangements"
            )));
        }
    }
    let counted = count_arrangements(m, opts)?;
    if BigCount::from(enumerated) != counted {
        return Err(Error::invariant(format!(
            "enumeration found {enumerated} arrangements but the count is {counted}"
        )));
    }
    Ok(VerifyReport {
        enumerated,
        distinct_chirotopes: digests.len() as u64,
        counted,
    })
}

fn check_crossing_multiplicities(m: &Matching, e: &Embedding) -> Result<()> {
    let k = m.k();
    let mut seen = vec![0u32; k * k];
    for v in e.crossing_vertices() {
        let (c1, c2) = v;
        seen[c1 * k + c2] += 1;
    }
    for c1 in 0..k {
        for c2 in c1 + 1..k {
            let expected = u32::from(m.crosses(c1, c2));
            if seen[c1 * k + c2] != expected {
                return Err(Error::invariant(format!(
                    "chords {c1} and {c2} cross {} times, expected {expected}",
                    seen[c1 * k + c2]
                )));
            }
        }
    }
    Ok(())
}

/// 128-bit FNV-1a over the chirotope signs, split into two words.
fn chirotope_digest(e: &Embedding) -> (u64, u64) {
    const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
    const PRIME: u128 = 0x0000000001000000000000000000013b;
    let mut h = OFFSET;
    for &s in e.chirotope().as_bytes() {
        h ^= s as u8 as u128;
        h = h.wrapping_mul(PRIME);
    }
    ((h >> 64) as u64, h as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_family(sizes: &[usize], opts: &CountOptions) -> BigCount {
        count_arrangements(&Matching::family(sizes).unwrap(), opts).unwrap()
    }

    fn all_crossing(k: usize) -> Vec<usize> {
        vec![1; k]
    }

    #[test]
    fn small_all_crossing_counts() {
        let expected: [(usize, u64); 6] =
            [(1, 1), (2, 1), (3, 2), (4, 8), (5, 62), (6, 908)];
        for (k, want) in expected {
            let got = count_family(&all_crossing(k), &CountOptions::default());
            assert_eq!(got, BigCount::from(want), "k = {k}");
        }
    }

    #[test]
    fn count_is_order_invariant() {
        let m = Matching::family(&[2, 1, 2]).unwrap();
        let base = count_arrangements(&m, &CountOptions::default()).unwrap();
        let k = m.k();
        let orders = [
            (0..k).collect::<Vec<_>>(),
            (0..k).rev().collect::<Vec<_>>(),
            vec![2, 0, 4, 1, 3],
        ];
        for order in orders {
            let opts = CountOptions { order: Some(order.clone()), ..Default::default() };
            assert_eq!(count_arrangements(&m, &opts).unwrap(), base, "order {order:?}");
        }
    }

    #[test]
    fn count_is_thread_invariant() {
        let m = Matching::family(&all_crossing(5)).unwrap();
        let one = CountOptions { threads: 1, ..Default::default() };
        let four = CountOptions { threads: 4, ..Default::default() };
        assert_eq!(
            count_arrangements(&m, &one).unwrap(),
            count_arrangements(&m, &four).unwrap()
        );
    }

    #[test]
    fn enumeration_matches_count() {
        for sizes in [vec![1, 1, 1], vec![2, 2], vec![1, 2, 1], vec![1, 1, 1, 1, 1]] {
            let m = Matching::family(&sizes).unwrap();
            let listed = enumerate_arrangements(&m, None).unwrap().count();
            let counted = count_arrangements(&m, &CountOptions::default()).unwrap();
            assert_eq!(BigCount::from(listed as u64), counted, "family {sizes:?}");
        }
    }

    #[test]
    fn every_partial_embedding_extends() {
        // The route sampler relies on partial embeddings never getting
        // stuck; check exhaustively on a small corpus.
        fn rec(e: &Embedding, k: usize) {
            for c in 0..k {
                if e.is_inserted(c) {
                    continue;
                }
                let routes = e.insertion_routes(c).unwrap();
                assert!(!routes.is_empty(), "no route for chord {c}");
                for r in &routes {
                    rec(&e.apply_route(c, r).unwrap(), k);
                }
            }
        }
        for sizes in [vec![1, 1, 1], vec![2, 2], vec![1, 2, 1]] {
            let m = Matching::family(&sizes).unwrap();
            rec(&boundary_embedding(&m), m.k());
        }
    }

    #[test]
    fn budget_aborts_search() {
        let m = Matching::family(&all_crossing(5)).unwrap();
        let opts = CountOptions { budget: Some(3), ..Default::default() };
        match count_arrangements(&m, &opts) {
            Err(Error::Budget { budget: 3 }) => {}
            other => panic!("expected budget abort, got {other:?}"),
        }
    }

    #[test]
    fn triple_weights_are_two() {
        // Removing one chord of the all-crossing triple leaves a unique
        // arrangement, into which the third always has two routes.
        let m = Matching::family(&all_crossing(3)).unwrap();
        let w = estimate_weights(&m, 16, 0).unwrap();
        assert_eq!(w, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn default_order_is_deterministic() {
        let m = Matching::family(&[2, 1, 2]).unwrap();
        assert_eq!(default_order(&m, 7).unwrap(), default_order(&m, 7).unwrap());
    }

    #[test]
    fn sampled_arrangements_are_valid() {
        let m = Matching::family(&[2, 1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let e = sample_arrangement(&m, &mut rng).unwrap();
            assert!(e.is_complete());
            e.validate().unwrap();
        }
    }

    #[test]
    fn verify_small_family() {
        let m = Matching::family(&all_crossing(4)).unwrap();
        let report = verify_arrangements(&m, &CountOptions::default()).unwrap();
        assert_eq!(report.enumerated, 8);
        assert_eq!(report.distinct_chirotopes, 8);
        assert_eq!(report.counted, BigCount::from(8u32));
    }

    #[test]
    fn rejects_bad_orders() {
        let m = Matching::family(&[1, 1, 1]).unwrap();
        for order in [vec![0, 1], vec![0, 1, 1], vec![0, 1, 3]] {
            let opts = CountOptions { order: Some(order), ..Default::default() };
            assert!(matches!(
                count_arrangements(&m, &opts),
                Err(Error::Validation(_))
            ));
        }
    }
}
