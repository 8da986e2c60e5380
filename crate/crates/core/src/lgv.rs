//! Arrangement counts for sheared-grid windows via the
//! Lindström-Gessel-Viennot determinant.
//!
//! A size-`s` window cuts a square patch out of the infinite pattern of
//! vertical, horizontal, and slope -1 lines. Inside the window the grid
//! chords admit a unique arrangement, and every way of inserting the 2s-1
//! diagonal chords corresponds to a tuple of vertex-disjoint monotone
//! lattice paths; the number of such tuples is the determinant of a
//! path-count matrix. [`lgv_count`] evaluates that determinant exactly,
//! and [`grid_window_matching`] builds the same window as a [`Matching`]
//! so the correspondence can be checked against the direct counter.

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::BigCount;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Path-count matrix for a size-`s` window: dimension 2s-1, entry
/// `m[i][j] = binomial(n, (n + 3|i-j|) / 2)` with `n = 2s - |s-i| - |s-j|`
/// (rows and columns indexed from 1 in the formula).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LgvMatrix {
    s: u32,
    entries: Vec<Vec<BigCount>>,
}

impl LgvMatrix {
    /// Window size the matrix was built for.
    pub fn size(&self) -> u32 {
        self.s
    }

    /// Matrix dimension, `2s - 1`.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Row-major entries.
    pub fn rows(&self) -> &[Vec<BigCount>] {
        &self.entries
    }
}

/// Half exponent of the entry formula: `n = 2s - |s-i| - |s-j|` for
/// 1-indexed `i`, `j`. Every entry of row `i` is strictly below `2^n`.
fn entry_base(s: i64, i: i64, j: i64) -> i64 {
    2 * s - (s - i).abs() - (s - j).abs()
}

/// Builds the path-count matrix for window size `s >= 1`.
pub fn lgv_matrix(s: u32) -> LgvMatrix {
    assert!(s >= 1, "window size must be at least 1");
    let dim = 2 * s as usize - 1;
    let si = s as i64;
    let entries = (1..=dim as i64)
        .map(|i| {
            (1..=dim as i64)
                .map(|j| {
                    let n = entry_base(si, i, j);
                    let shift = 3 * (i - j).abs();
                    debug_assert_eq!((n + shift) & 1, 0);
                    let t = (n + shift) / 2;
                    if t > n {
                        BigCount::zero()
                    } else {
                        num_integer::binomial(BigCount::from(n as u64), BigCount::from(t as u64))
                    }
                })
                .collect()
        })
        .collect();
    LgvMatrix { s, entries }
}

/// Exact determinant of the size-`s` path-count matrix: the number of
/// arrangements of the corresponding window matching.
pub fn lgv_count(s: u32) -> Result<BigCount> {
    assert!(s >= 1, "window size must be at least 1");
    let dim = 2 * s as usize - 1;
    let det = if dim <= 64 {
        det_bareiss(&lgv_matrix(s))
    } else {
        det_multimodular(s)
    };
    det.to_biguint()
        .ok_or_else(|| Error::Invariant(format!("window determinant for s={s} is not positive")))
}

/// Largest integer `e` with `2^e <= n`, a safe lower bound on log2(n).
pub fn log2_lower(n: &BigCount) -> Result<u64> {
    if n.is_zero() {
        return Err(Error::Validation("log2 lower bound requires n >= 1".into()));
    }
    Ok(n.bits() - 1)
}

/// Window matching for size `s`: a `[0,s]` x `[0,s]` window over vertical
/// chords `x = i - 1/2` and horizontal chords `y = j - 1/2` (`i, j = 1..s`)
/// plus diagonal chords `x + y = t` (`t = 1..2s-1`), with the window nudged
/// slightly down-left so no chord meets a corner. Chord ids group the
/// verticals (`0..s`), horizontals (`s..2s`), then diagonals (`2s..4s-1`).
///
/// Diagonal `t` crosses exactly the `s - |s-t|` verticals and `s - |s-t|`
/// horizontals nearest the anti-diagonal through `(t, 0)`; diagonals are
/// pairwise non-crossing. Arrangements of this matching are in bijection
/// with the path tuples counted by [`lgv_count`].
pub fn grid_window_matching(s: u32) -> Matching {
    assert!(s >= 1, "window size must be at least 1");
    let s = s as usize;
    let v = |i: usize| i - 1;
    let h = |j: usize| s + j - 1;
    let d = |t: usize| 2 * s + t - 1;
    let k = 4 * s - 1;
    let mut walk: Vec<usize> = Vec::with_capacity(2 * k);
    // Bottom edge, x ascending: v_i at i - 1/2, d_t exits at t + eps.
    for i in 1..=s {
        walk.push(v(i));
        if i < s {
            walk.push(d(i));
        }
    }
    // Right edge, y ascending: d_s at eps, then h_j at j - 1/2 and
    // d_{s+j} at j + eps alternating.
    walk.push(d(s));
    for j in 1..=s {
        walk.push(h(j));
        if j < s {
            walk.push(d(s + j));
        }
    }
    // Top edge, x descending: v_i at i - 1/2, d_{s+i-1} at i - 1 + eps.
    for i in (1..=s).rev() {
        walk.push(v(i));
        if i > 1 {
            walk.push(d(s + i - 1));
        }
    }
    walk.push(d(s));
    // Left edge, y descending: h_j at j - 1/2, d_{j-1} at j - 1 + eps.
    for j in (1..=s).rev() {
        walk.push(h(j));
        if j > 1 {
            walk.push(d(j - 1));
        }
    }
    debug_assert_eq!(walk.len(), 2 * k);
    let mut first: Vec<Option<usize>> = vec![None; k];
    let mut pairs: Vec<(usize, usize)> = vec![(0, 0); k];
    for (pos, &c) in walk.iter().enumerate() {
        match first[c] {
            None => first[c] = Some(pos),
            Some(p) => pairs[c] = (p, pos),
        }
    }
    Matching::from_pairs(&pairs).expect("window walk visits each chord twice")
}

/// Fraction-free elimination; exact over BigInt. Suited to small dims.
pub(crate) fn det_bareiss(m: &LgvMatrix) -> BigInt {
    let dim = m.dim();
    let mut a: Vec<Vec<BigInt>> = m
        .entries
        .iter()
        .map(|row| row.iter().map(|e| BigInt::from(e.clone())).collect())
        .collect();
    let mut sign = 1i8;
    let mut prev = BigInt::one();
    for r in 0..dim {
        if a[r][r].is_zero() {
            let Some(swap) = (r + 1..dim).find(|&i| !a[i][r].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(r, swap);
            sign = -sign;
        }
        if r + 1 == dim {
            break;
        }
        for i in r + 1..dim {
            for j in r + 1..dim {
                let num = &a[r][r] * &a[i][j] - &a[i][r] * &a[r][j];
                a[i][j] = num / &prev;
            }
            a[i][r] = BigInt::zero();
        }
        prev = a[r][r].clone();
    }
    let det = std::mem::take(&mut a[dim - 1][dim - 1]);
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Determinant by elimination modulo many 62-bit primes plus CRT
/// reconstruction. Entries are generated mod p from factorial tables and
/// eliminated only within their banded support, so the cost per prime is
/// `O(dim * band^2)` and no big-integer matrix is ever built.
pub(crate) fn det_multimodular(s: u32) -> BigInt {
    let dim = 2 * s as usize - 1;
    let si = s as i64;
    // Row norm bound: every entry of row i is < 2^(2s - |s-i|), so
    // |det| < prod_i sqrt(dim) * 2^(2s - |s-i|).
    let bound_bits: u64 = (1..=dim as i64)
        .map(|i| (entry_base(si, i, i) + 7) as u64)
        .sum::<u64>()
        + 1;
    let spans: Vec<(usize, usize)> = (1..=dim as i64).map(|i| row_span(si, i, dim)).collect();
    let mut residues: Vec<(u64, u64)> = Vec::new();
    let mut have_bits = 0u64;
    let mut supply = Primes::below_2_62();
    while have_bits <= bound_bits {
        let want = ((bound_bits - have_bits) / 61 + 1) as usize;
        let batch: Vec<u64> = supply.by_ref().take(want).collect();
        let found: Vec<(u64, u64)> = batch
            .par_iter()
            .filter_map(|&p| det_mod(s, dim, &spans, p).map(|d| (p, d)))
            .collect();
        for &(p, _) in &found {
            have_bits += 63 - p.leading_zeros() as u64;
        }
        residues.extend(found);
    }
    let (value, modulus) = crt(&residues);
    // Map the canonical residue into the symmetric range.
    let value = BigInt::from(value);
    let modulus = BigInt::from(modulus);
    if &value * 2 > modulus {
        value - modulus
    } else {
        value
    }
}

/// Column span `[lo, hi]` of the nonzero entries of row `i` (1-indexed
/// `i`, 0-indexed result). Entries vanish iff `3|i-j| > n`, and the
/// support is contiguous around the diagonal.
fn row_span(s: i64, i: i64, dim: usize) -> (usize, usize) {
    let alive = |j: i64| j >= 1 && j <= dim as i64 && 3 * (i - j).abs() <= entry_base(s, i, j);
    let mut lo = i;
    while alive(lo - 1) {
        lo -= 1;
    }
    let mut hi = i;
    while alive(hi + 1) {
        hi += 1;
    }
    (lo as usize - 1, hi as usize - 1)
}

/// Determinant of the size-`s` matrix modulo `p`, or None if elimination
/// hits a zero pivot (the caller simply uses a different prime).
fn det_mod(s: u32, dim: usize, spans: &[(usize, usize)], p: u64) -> Option<u64> {
    let two_s = 2 * s as usize;
    let mut fact = vec![1u64; two_s + 1];
    for n in 1..=two_s {
        fact[n] = mulmod(fact[n - 1], n as u64, p);
    }
    let mut inv_fact = vec![1u64; two_s + 1];
    inv_fact[two_s] = powmod(fact[two_s], p - 2, p);
    for n in (0..two_s).rev() {
        inv_fact[n] = mulmod(inv_fact[n + 1], (n + 1) as u64, p);
    }
    let binom = |n: usize, t: usize| mulmod(fact[n], mulmod(inv_fact[t], inv_fact[n - t], p), p);

    let si = s as i64;
    let mut rows: Vec<Vec<u64>> = (1..=dim as i64)
        .map(|i| {
            let (lo, hi) = spans[i as usize - 1];
            (lo..=hi)
                .map(|j0| {
                    let j = j0 as i64 + 1;
                    let n = entry_base(si, i, j) as usize;
                    binom(n, (n + 3 * (i - j).unsigned_abs() as usize) / 2)
                })
                .collect()
        })
        .collect();
    // Eliminate column r from the rows below; row storage is offset by
    // each row's span start. Subtracting a multiple of row r only touches
    // columns r..=hi_r, and spans are nested enough that hi_i >= hi_r
    // whenever row i still has a nonzero in column r.
    let mut det = 1u64;
    for r in 0..dim {
        let pr = rows[r][r - spans[r].0];
        if pr == 0 {
            return None;
        }
        det = mulmod(det, pr, p);
        let inv = powmod(pr, p - 2, p);
        let (row_r, below) = {
            let (head, tail) = rows.split_at_mut(r + 1);
            (&head[r], tail)
        };
        let hi_r = spans[r].1;
        for (off, row_i) in below.iter_mut().enumerate() {
            let i = r + 1 + off;
            let (lo_i, hi_i) = spans[i];
            if lo_i > r {
                break;
            }
            let lead = row_i[r - lo_i];
            if lead == 0 {
                continue;
            }
            debug_assert!(hi_i >= hi_r);
            let f = mulmod(lead, inv, p);
            for j in r..=hi_r {
                let sub = mulmod(f, row_r[j - spans[r].0], p);
                let cell = &mut row_i[j - lo_i];
                *cell = submod(*cell, sub, p);
            }
        }
    }
    Some(det)
}

/// Garner-style incremental CRT over pairwise-coprime moduli; returns the
/// canonical residue and the product of the moduli.
fn crt(residues: &[(u64, u64)]) -> (BigUint, BigUint) {
    let mut value = BigUint::zero();
    let mut modulus = BigUint::one();
    for &(p, r) in residues {
        let m = (&modulus % p).to_u64_digits().first().copied().unwrap_or(0);
        let cur = (&value % p).to_u64_digits().first().copied().unwrap_or(0);
        let t = mulmod(submod(r, cur, p), powmod(m, p - 2, p), p);
        value += &modulus * t;
        modulus *= p;
    }
    (value, modulus)
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn submod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all u64.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let r = (n - 1).trailing_zeros();
    let d = (n - 1) >> r;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Descending stream of primes just below 2^62, so products of two
/// residues stay comfortably within u128.
struct Primes {
    next: u64,
}

impl Primes {
    fn below_2_62() -> Self {
        Primes { next: (1 << 62) - 1 }
    }
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            let c = self.next;
            self.next -= 2;
            if is_prime(c) {
                return Some(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::{count_arrangements, CountOptions};

    fn counts(m: &Matching) -> BigCount {
        count_arrangements(m, &CountOptions::default()).unwrap()
    }

    #[test]
    fn matrix_small_sizes() {
        let m1 = lgv_matrix(1);
        assert_eq!(m1.dim(), 1);
        assert_eq!(m1.rows(), &[vec![BigCount::from(2u32)]]);

        let m2 = lgv_matrix(2);
        let want: Vec<Vec<BigCount>> = [[2u32, 1, 0], [1, 6, 1], [0, 1, 2]]
            .iter()
            .map(|row| row.iter().map(|&x| BigCount::from(x)).collect())
            .collect();
        assert_eq!(m2.rows(), &want[..]);
    }

    #[test]
    fn matrix_symmetric_with_banded_support() {
        for s in 1..=30u32 {
            let m = lgv_matrix(s);
            let dim = m.dim();
            assert_eq!(dim, 2 * s as usize - 1);
            for i in 0..dim {
                for j in 0..dim {
                    assert_eq!(m.rows()[i][j], m.rows()[j][i]);
                    let zero = 3 * (i as i64 - j as i64).abs()
                        > entry_base(s as i64, i as i64 + 1, j as i64 + 1);
                    assert_eq!(m.rows()[i][j].is_zero(), zero, "s={s} i={i} j={j}");
                }
            }
            for (i, &(lo, hi)) in (1..=dim as i64)
                .map(|i| row_span(s as i64, i, dim))
                .collect::<Vec<_>>()
                .iter()
                .enumerate()
            {
                for j in 0..dim {
                    assert_eq!(m.rows()[i][j].is_zero(), !(lo..=hi).contains(&j));
                }
            }
        }
    }

    #[test]
    fn counts_for_small_windows() {
        assert_eq!(lgv_count(1).unwrap(), BigCount::from(2u32));
        assert_eq!(lgv_count(2).unwrap(), BigCount::from(20u32));
        assert_eq!(lgv_count(3).unwrap(), BigCount::from(1320u32));
    }

    #[test]
    fn bareiss_matches_multimodular() {
        for s in [2u32, 5, 10, 33] {
            assert_eq!(det_bareiss(&lgv_matrix(s)), det_multimodular(s), "s={s}");
        }
    }

    #[test]
    fn window_matching_shape() {
        for s in 1..=6u32 {
            let m = grid_window_matching(s);
            let su = s as usize;
            assert_eq!(m.k(), 4 * su - 1);
            let vs = 0..su;
            let hs = su..2 * su;
            let ds = 2 * su..4 * su - 1;
            for v in vs.clone() {
                for h in hs.clone() {
                    assert!(m.crosses(v, h));
                }
            }
            for d1 in ds.clone() {
                for d2 in ds.clone() {
                    assert!(d1 == d2 || !m.crosses(d1, d2));
                }
            }
            for (t, d) in ds.enumerate() {
                let reach = su - (su as i64 - (t as i64 + 1)).unsigned_abs() as usize;
                let nv = vs.clone().filter(|&v| m.crosses(d, v)).count();
                let nh = hs.clone().filter(|&h| m.crosses(d, h)).count();
                assert_eq!((nv, nh), (reach, reach), "s={s} diagonal {t}");
            }
        }
    }

    #[test]
    fn window_count_matches_determinant() {
        for s in 1..=3u32 {
            assert_eq!(counts(&grid_window_matching(s)), lgv_count(s).unwrap(), "s={s}");
        }
    }

    #[test]
    fn log2_lower_bounds() {
        assert_eq!(log2_lower(&BigCount::from(20u32)).unwrap(), 4);
        assert_eq!(log2_lower(&BigCount::from(1u32)).unwrap(), 0);
        assert_eq!(log2_lower(&(BigCount::one() << 50)).unwrap(), 50);
        assert!(log2_lower(&BigCount::zero()).is_err());
    }

    #[test]
    fn counts_strictly_increase() {
        let mut prev = BigCount::zero();
        for s in 1..=12u32 {
            let c = lgv_count(s).unwrap();
            assert!(c > prev, "s={s}");
            prev = c;
        }
    }

    #[test]
    #[ignore = "slow tier: dims up to 199"]
    fn counts_strictly_increase_to_100() {
        let mut prev = BigCount::zero();
        for s in 1..=100u32 {
            let c = lgv_count(s).unwrap();
            assert!(c > prev, "s={s}");
            prev = c;
        }
    }
}
