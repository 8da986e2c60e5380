//! Matchings of `2k` cyclically ordered boundary labels.
//!
//! Labels run counterclockwise around the disk boundary. Chord `i` joins the
//! two labels of pair `i`; two chords cross exactly when their endpoint
//! pairs interleave around the circle, and a simple arrangement realizes
//! every interleaving pair with exactly one crossing and no other crossings.

use crate::error::{Error, Result};
use std::fmt;

/// Index of a chord within its matching.
pub type ChordId = usize;

/// A perfect matching on the labels `0..2k`, the combinatorial type of a
/// chord system.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    /// `pairs[c] = (a, b)` with `a < b`.
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    /// Builds a matching from endpoint pairs. Every label in `0..2k` must
    /// occur exactly once, where `k = pairs.len()`.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Matching> {
        let k = pairs.len();
        if k == 0 {
            return Err(Error::validation("matching must contain at least one chord"));
        }
        let mut seen = vec![false; 2 * k];
        let mut norm = Vec::with_capacity(k);
        for &(x, y) in pairs {
            if x == y {
                return Err(Error::validation(format!(
                    "chord endpoints must differ, got ({x}, {y})"
                )));
            }
            for l in [x, y] {
                if l >= 2 * k {
                    return Err(Error::validation(format!(
                        "label {l} out of range 0..{}",
                        2 * k
                    )));
                }
                if seen[l] {
                    return Err(Error::validation(format!("label {l} used twice")));
                }
                seen[l] = true;
            }
            norm.push((x.min(y), x.max(y)));
        }
        Ok(Matching { pairs: norm })
    }

    /// The canonical `(k_1, ..., k_r)` family: `r` groups of parallel chords
    /// where two chords cross exactly when they belong to different groups.
    ///
    /// Layout: label blocks `A_1 ... A_r A'_1 ... A'_r` counterclockwise,
    /// with the `t`-th label of `A_i` paired to the `(k_i + 1 - t)`-th label
    /// of `A'_i` (so same-group chords nest).
    pub fn family(group_sizes: &[usize]) -> Result<Matching> {
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return Err(Error::validation(
                "family needs at least one group, all sizes positive",
            ));
        }
        let total: usize = group_sizes.iter().sum();
        let mut pairs = Vec::with_capacity(total);
        let mut offset = 0;
        for &size in group_sizes {
            for t in 0..size {
                pairs.push((offset + t, total + offset + (size - 1 - t)));
            }
            offset += size;
        }
        Matching::from_pairs(&pairs)
    }

    /// Parses either a `(k1,k2,...)` family or the `"(n)xr"` repetition
    /// shorthand, e.g. `"(3,2,4)"` or `"(1)x12"`.
    pub fn parse_shorthand(text: &str) -> Result<Matching> {
        let text = text.trim();
        let bad = || Error::validation(format!("cannot parse family shorthand {text:?}"));
        let close = text.find(')').ok_or_else(bad)?;
        if !text.starts_with('(') {
            return Err(bad());
        }
        let inner = &text[1..close];
        let sizes: Vec<usize> = inner
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let rest = &text[close + 1..];
        if rest.is_empty() {
            return Matching::family(&sizes);
        }
        let reps: usize = rest
            .strip_prefix('x')
            .and_then(|r| r.parse().ok())
            .ok_or_else(bad)?;
        if sizes.len() != 1 || reps == 0 {
            return Err(bad());
        }
        Matching::family(&vec![sizes[0]; reps])
    }

    /// Number of chords.
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Number of boundary labels, `2k`.
    pub fn points(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Endpoints of chord `c` as `(low, high)`.
    pub fn pair(&self, c: ChordId) -> (usize, usize) {
        self.pairs[c]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Whether chords `c1` and `c2` must cross: true exactly when their
    /// endpoints interleave around the boundary.
    pub fn crosses(&self, c1: ChordId, c2: ChordId) -> bool {
        let (a1, b1) = self.pairs[c1];
        let (a2, b2) = self.pairs[c2];
        (a1 < a2 && a2 < b1 && b1 < b2) || (a2 < a1 && a1 < b2 && b2 < b1)
    }

    /// All chords crossing `c`, in id order.
    pub fn crossing_set(&self, c: ChordId) -> Vec<ChordId> {
        (0..self.k())
            .filter(|&o| o != c && self.crosses(c, o))
            .collect()
    }

    /// Total number of crossing pairs.
    pub fn crossing_pairs(&self) -> usize {
        let k = self.k();
        (0..k)
            .map(|i| (i + 1..k).filter(|&j| self.crosses(i, j)).count())
            .sum()
    }

    /// Relabels every endpoint by `l -> (l + shift) mod 2k`. Chord ids are
    /// preserved; the crossing relation is invariant.
    pub fn cyclic_shift(&self, shift: usize) -> Matching {
        let n = self.points();
        let pairs: Vec<(usize, usize)> = self
            .pairs
            .iter()
            .map(|&(a, b)| {
                let x = (a + shift) % n;
                let y = (b + shift) % n;
                (x.min(y), x.max(y))
            })
            .collect();
        Matching { pairs }
    }

    /// Relabels every endpoint by `l -> 2k - 1 - l` (mirror image). The
    /// crossing relation is invariant; counts are too.
    pub fn reflect(&self) -> Matching {
        let n = self.points();
        let pairs: Vec<(usize, usize)> = self
            .pairs
            .iter()
            .map(|&(a, b)| (n - 1 - b, n - 1 - a))
            .collect();
        Matching { pairs }
    }

    /// Lexicographically least sorted pair list over all cyclic shifts.
    /// Two matchings with equal keys count the same arrangements.
    pub fn shift_canonical_key(&self) -> Vec<(usize, usize)> {
        (0..self.points())
            .map(|s| {
                let mut p = self.cyclic_shift(s).pairs;
                p.sort_unstable();
                p
            })
            .min()
            .unwrap()
    }

    /// Parses the on-disk format: line 1 holds `k`, then `k` lines `a b`.
    pub fn parse(text: &str) -> Result<Matching> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })?;
        let k: usize = first.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("expected chord count, got {first:?}"),
        })?;
        let mut pairs = Vec::with_capacity(k);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse_label = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or(())
                    .and_then(|t| t.parse().map_err(|_| ()))
                    .map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("expected two labels, got {line:?}"),
                    })
            };
            let a = parse_label(it.next())?;
            let b = parse_label(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected two labels, got {line:?}"),
                });
            }
            pairs.push((a, b));
        }
        if pairs.len() != k {
            return Err(Error::Parse {
                line: pairs.len() + 1,
                msg: format!("expected {k} chord lines, found {}", pairs.len()),
            });
        }
        Matching::from_pairs(&pairs)
    }

    /// Serializes to the on-disk format (inverse of [`Matching::parse`]).
    pub fn serialize(&self) -> String {
        let mut out = format!("{}\n", self.k());
        for &(a, b) in &self.pairs {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matching{:?}", self.pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaving_pairs_cross() {
        let m = Matching::from_pairs(&[(0, 2), (1, 3)]).unwrap();
        assert!(m.crosses(0, 1));
        let m = Matching::from_pairs(&[(0, 1), (2, 3)]).unwrap();
        assert!(!m.crosses(0, 1));
        let m = Matching::from_pairs(&[(0, 3), (1, 2)]).unwrap();
        assert!(!m.crosses(0, 1));
    }

    #[test]
    fn validation_rejects_bad_labels() {
        assert!(Matching::from_pairs(&[(0, 0), (1, 2)]).is_err());
        assert!(Matching::from_pairs(&[(0, 1), (1, 2)]).is_err());
        assert!(Matching::from_pairs(&[(0, 1), (2, 5)]).is_err());
        assert!(Matching::from_pairs(&[]).is_err());
    }

    #[test]
    fn family_group_crossings() {
        // Chords cross exactly across groups: 3*2 + 3*4 + 2*4 = 26 pairs.
        let m = Matching::family(&[3, 2, 4]).unwrap();
        assert_eq!(m.k(), 9);
        assert_eq!(m.crossing_pairs(), 26);

        // One group: nothing crosses.
        let m = Matching::family(&[5]).unwrap();
        assert_eq!(m.crossing_pairs(), 0);

        // All-crossing family.
        let m = Matching::family(&[1, 1, 1]).unwrap();
        assert_eq!(m.crossing_pairs(), 3);
    }

    #[test]
    fn shorthand() {
        assert_eq!(
            Matching::parse_shorthand("(1)x12").unwrap(),
            Matching::family(&[1; 12]).unwrap()
        );
        assert_eq!(
            Matching::parse_shorthand("(3,2,4)").unwrap(),
            Matching::family(&[3, 2, 4]).unwrap()
        );
        assert!(Matching::parse_shorthand("(0)x3").is_err());
        assert!(Matching::parse_shorthand("3,2").is_err());
    }

    #[test]
    fn shift_preserves_crossings() {
        let m = Matching::family(&[2, 1, 3]).unwrap();
        for s in 0..m.points() {
            let shifted = m.cyclic_shift(s);
            for i in 0..m.k() {
                for j in 0..m.k() {
                    assert_eq!(m.crosses(i, j), shifted.crosses(i, j));
                }
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        let m = Matching::family(&[2, 3]).unwrap();
        let text = m.serialize();
        assert_eq!(Matching::parse(&text).unwrap(), m);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = Matching::parse("2\n0 1\nx y\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let err = Matching::parse("nope\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
