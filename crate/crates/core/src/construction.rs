//! Exact geometry for the twelve-slope line construction.
//!
//! The construction places twelve bundles of parallel lines with slopes
//! 0, infinity, +-1/3, +-1/2, +-1, +-2, +-3. The strip between the two
//! extremal lines of one bundle is that slope's slab; points are
//! classified by the set of slabs containing them, signatures are
//! grouped under the symmetry of the slope set, and each bounded group
//! gets an exact area. Windows cut matchings out of arbitrary line
//! patterns so the per-region subembeddings can be counted directly.
//!
//! Everything here runs on exact rationals; no floating point touches
//! classification, areas, or extraction.

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::{rat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

/// Display names of the twelve bundle slopes, in signature bit order.
pub const SLOPE_NAMES: [&str; 12] = [
    "0", "1/3", "1/2", "1", "2", "3", "inf", "-3", "-2", "-1", "-1/2", "-1/3",
];

/// Bit index of the vertical bundle in [`SLOPE_NAMES`].
const VERTICAL: usize = 6;

/// Slope values as (numerator, denominator); the vertical entry is unused.
const SLOPE_VALUES: [(i64, i64); 12] = [
    (0, 1),
    (1, 3),
    (1, 2),
    (1, 1),
    (2, 1),
    (3, 1),
    (0, 0),
    (-3, 1),
    (-2, 1),
    (-1, 1),
    (-1, 2),
    (-1, 3),
];

/// Index permutation of the map s -> -s.
const NEG: [usize; 12] = [0, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1];

/// Index permutation of the map s -> 1/s (exchanging 0 and infinity).
const INV: [usize; 12] = [6, 5, 4, 3, 2, 1, 0, 11, 10, 9, 8, 7];

/// Half-width of each slab: 1/2 for the vertical bundle and slopes with
/// |s| in {0, 1, 2, 3}, |s|/2 for slopes with |s| in {1/2, 1/3}.
fn slab_half_width(idx: usize) -> Rat {
    match idx {
        2 | 10 => rat(1, 4),
        1 | 11 => rat(1, 6),
        _ => rat(1, 2),
    }
}

/// Set of slope slabs containing a point, stored as a 12-bit mask over
/// [`SLOPE_NAMES`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlabSignature(u16);

impl SlabSignature {
    pub fn empty() -> Self {
        SlabSignature(0)
    }

    /// Builds a signature from slope names as listed in [`SLOPE_NAMES`].
    pub fn from_slopes(names: &[&str]) -> Result<Self> {
        let mut mask = 0u16;
        for name in names {
            let idx = SLOPE_NAMES
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::validation(format!("unknown slope {name:?}")))?;
            mask |= 1 << idx;
        }
        Ok(SlabSignature(mask))
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0 >> idx & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Slope names present, in [`SLOPE_NAMES`] order.
    pub fn slopes(&self) -> Vec<&'static str> {
        (0..12).filter(|&i| self.contains(i)).map(|i| SLOPE_NAMES[i]).collect()
    }

    fn permute(self, map: &[usize; 12]) -> Self {
        let mut mask = 0u16;
        for (i, &to) in map.iter().enumerate() {
            if self.contains(i) {
                mask |= 1 << to;
            }
        }
        SlabSignature(mask)
    }

    /// Canonical representative of the signature's orbit under the
    /// symmetries of the slope set. Rotations and reflections of the
    /// construction act on slopes through the four maps s, -s, 1/s,
    /// -1/s; the canonical form is the smallest resulting bit mask.
    pub fn canonical(self) -> Self {
        let mut best = self;
        for mapped in [self.permute(&NEG), self.permute(&INV), self.permute(&NEG).permute(&INV)] {
            if mapped < best {
                best = mapped;
            }
        }
        best
    }
}

impl fmt::Debug for SlabSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.slopes().join(","))
    }
}

impl fmt::Display for SlabSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A line in the plane with exact rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub enum Line {
    /// `x = x0`.
    Vertical { x: Rat },
    /// `y = slope * x + offset`.
    Sloped { slope: Rat, offset: Rat },
}

impl Line {
    pub fn vertical(x: Rat) -> Line {
        Line::Vertical { x }
    }

    pub fn sloped(slope: Rat, offset: Rat) -> Line {
        Line::Sloped { slope, offset }
    }

    /// Coefficients `(a, b, c)` with the line as `a*x + b*y = c`.
    fn coeffs(&self) -> (Rat, Rat, Rat) {
        match self {
            Line::Vertical { x } => (Rat::one(), Rat::zero(), x.clone()),
            Line::Sloped { slope, offset } => (-slope.clone(), Rat::one(), offset.clone()),
        }
    }

    /// Signed evaluation `a*x + b*y - c`; zero exactly on the line.
    fn eval(&self, p: &Pt) -> Rat {
        let (a, b, c) = self.coeffs();
        a * &p.0 + b * &p.1 - c
    }
}

impl fmt::Debug for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Line::Vertical { x } => write!(f, "x = {x}"),
            Line::Sloped { slope, offset } => write!(f, "y = {slope}*x + {offset}"),
        }
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

type Pt = (Rat, Rat);

/// The 24 extremal lines of the unit-normalized construction, two per
/// slope: `x = +-1/2`, `y = s*x +- 1/2` for integer slopes, and
/// `y = s*x +- |s|/2` for slopes `+-1/2`, `+-1/3`. Areas of regions cut
/// out by these lines are exactly the quadratic coefficients of the
/// corresponding full-size regions.
pub fn normalized_extremal_lines() -> Vec<Line> {
    let mut lines = Vec::with_capacity(24);
    for (idx, &(n, d)) in SLOPE_VALUES.iter().enumerate() {
        let w = slab_half_width(idx);
        for off in [-w.clone(), w] {
            if idx == VERTICAL {
                lines.push(Line::vertical(off));
            } else {
                lines.push(Line::sloped(rat(n, d), off));
            }
        }
    }
    lines
}

/// All `12m` lines of the size-`m` construction: per slope, `m` parallel
/// lines at offsets `j` (vertical and integer slopes) or `s*j` (slopes
/// `+-1/2`, `+-1/3`) for `j` in `-(m-1)/2 ..= (m-1)/2`.
pub fn bundle_lines(m: u64) -> Result<Vec<Line>> {
    if m == 0 || m.is_multiple_of(2) {
        return Err(Error::validation(format!("bundle count must be odd, got {m}")));
    }
    let half = (m as i64 - 1) / 2;
    let mut lines = Vec::with_capacity(12 * m as usize);
    for (idx, &(n, d)) in SLOPE_VALUES.iter().enumerate() {
        for j in -half..=half {
            if idx == VERTICAL {
                lines.push(Line::vertical(rat(j, 1)));
            } else {
                let slope = rat(n, d);
                let offset = if matches!(idx, 1 | 2 | 10 | 11) {
                    &slope * rat(j, 1)
                } else {
                    rat(j, 1)
                };
                lines.push(Line::sloped(slope, offset));
            }
        }
    }
    Ok(lines)
}

/// Set of slabs strictly containing `p`. Points on an extremal line are
/// rejected so every signature is an open-region property.
pub fn slab_membership(p: &(Rat, Rat)) -> Result<SlabSignature> {
    let mut mask = 0u16;
    for idx in 0..12 {
        let w = slab_half_width(idx);
        let d = if idx == VERTICAL {
            p.0.clone()
        } else {
            let (n, den) = SLOPE_VALUES[idx];
            &p.1 - rat(n, den) * &p.0
        };
        let d = d.abs();
        if d == w {
            return Err(Error::Degenerate(format!(
                "point ({}, {}) lies on an extremal line of slope {}",
                p.0, p.1, SLOPE_NAMES[idx]
            )));
        }
        if d < w {
            mask |= 1 << idx;
        }
    }
    Ok(SlabSignature(mask))
}

/// Twice the signed area of a polygon (positive when counterclockwise).
fn polygon_area2(poly: &[Pt]) -> Rat {
    let mut acc = Rat::zero();
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        acc += &p.0 * &q.1 - &q.0 * &p.1;
    }
    acc
}

/// Splits a convex polygon by a line into its (negative-side,
/// positive-side) parts, either of which may be absent. Vertices on the
/// line belong to both parts; degenerate slivers are dropped.
fn split_polygon(poly: &[Pt], line: &Line) -> (Option<Vec<Pt>>, Option<Vec<Pt>>) {
    let vals: Vec<Rat> = poly.iter().map(|p| line.eval(p)).collect();
    let mut neg: Vec<Pt> = Vec::new();
    let mut pos: Vec<Pt> = Vec::new();
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        let vi = &vals[i];
        if vi <= &Rat::zero() {
            neg.push(poly[i].clone());
        }
        if vi >= &Rat::zero() {
            pos.push(poly[i].clone());
        }
        let vj = &vals[j];
        if (vi < &Rat::zero() && vj > &Rat::zero()) || (vi > &Rat::zero() && vj < &Rat::zero()) {
            let t = vi / (vi - vj);
            let cut = (
                &poly[i].0 + (&poly[j].0 - &poly[i].0) * &t,
                &poly[i].1 + (&poly[j].1 - &poly[i].1) * &t,
            );
            neg.push(cut.clone());
            pos.push(cut);
        }
    }
    let keep =
        |part: Vec<Pt>| (part.len() >= 3 && !polygon_area2(&part).is_zero()).then_some(part);
    (keep(neg), keep(pos))
}

/// Average of the vertices; interior for a convex polygon.
fn centroid(poly: &[Pt]) -> Pt {
    let n = Rat::from_integer(BigInt::from(poly.len() as i64));
    let (mut sx, mut sy) = (Rat::zero(), Rat::zero());
    for (x, y) in poly {
        sx += x;
        sy += y;
    }
    (sx / &n, sy / n)
}

/// Exact area of each canonical slab signature whose region is bounded
/// and covered by at least three slabs.
///
/// The 24 extremal lines are intersected against a clipping box that
/// strictly contains every vertex of their arrangement, so a cell
/// touching the box boundary is exactly an unbounded cell of the full
/// arrangement; those are excluded, and the remaining cell areas
/// accumulate per canonical signature. Symmetric copies of a region all
/// contribute to one entry, matching the grouped-region convention.
///
/// Signatures of fewer than three slopes are dropped: a window inside
/// at most two slabs sees one or two mutually crossing parallel
/// bundles, which admit exactly one arrangement and so contribute a
/// factor of one to any product over regions.
pub fn region_areas() -> BTreeMap<SlabSignature, Rat> {
    let lines = normalized_extremal_lines();
    let b = rat(4, 1);
    let corners = vec![
        (-b.clone(), -b.clone()),
        (b.clone(), -b.clone()),
        (b.clone(), b.clone()),
        (-b.clone(), b.clone()),
    ];
    let mut cells = vec![corners];
    for line in &lines {
        cells = cells
            .iter()
            .flat_map(|cell| {
                let (n, p) = split_polygon(cell, line);
                n.into_iter().chain(p)
            })
            .collect();
    }
    let touches_box = |cell: &[Pt]| cell.iter().any(|(x, y)| x.abs() == b || y.abs() == b);
    let classified: Vec<(SlabSignature, Rat)> = cells
        .par_iter()
        .filter(|cell| !touches_box(cell))
        .filter_map(|cell| {
            let sig = slab_membership(&centroid(cell))
                .expect("cell interiors avoid all extremal lines");
            if sig.len() < 3 {
                return None;
            }
            Some((sig.canonical(), polygon_area2(cell) / rat(2, 1)))
        })
        .collect();
    let mut areas: BTreeMap<SlabSignature, Rat> = BTreeMap::new();
    for (sig, area) in classified {
        *areas.entry(sig).or_insert_with(Rat::zero) += area;
    }
    areas
}

/// One named region of the construction.
#[derive(Clone, Debug)]
pub struct RegionInfo {
    pub letter: char,
    pub signature: SlabSignature,
    pub area: Rat,
}

/// Region letters with their expected exact areas.
const LETTER_AREAS: [(char, (i64, i64)); 19] = [
    ('A', (1, 12)),
    ('B', (1, 30)),
    ('C', (1, 30)),
    ('D', (1, 60)),
    ('E', (1, 35)),
    ('F', (1, 105)),
    ('G', (1, 14)),
    ('H', (1, 35)),
    ('I', (1, 42)),
    ('J', (1, 35)),
    ('K', (8, 105)),
    ('L', (1, 15)),
    ('M', (1, 15)),
    ('N', (4, 15)),
    ('O', (1, 10)),
    ('P', (2, 3)),
    ('Q', (1, 15)),
    ('R', (1, 1)),
    ('S', (1, 3)),
];

/// Computed regions labeled `A` through `S` by matching each canonical
/// signature's exact area against the known region areas.
///
/// Letters sharing an area (`B`/`C`, `E`/`H`/`J`, `L`/`M`/`Q`) are
/// assigned within their group by decreasing signature cardinality,
/// breaking remaining ties by signature encoding; the report records
/// the resulting signature of every letter. Errors if the computed
/// area multiset differs from the expected one.
pub fn region_report() -> Result<Vec<RegionInfo>> {
    let areas = region_areas();
    if areas.len() != LETTER_AREAS.len() {
        return Err(Error::invariant(format!(
            "expected {} bounded region signatures, found {}",
            LETTER_AREAS.len(),
            areas.len()
        )));
    }
    let mut by_area: BTreeMap<Rat, Vec<SlabSignature>> = BTreeMap::new();
    for (sig, area) in &areas {
        by_area.entry(area.clone()).or_default().push(*sig);
    }
    let mut letters_by_area: BTreeMap<Rat, Vec<char>> = BTreeMap::new();
    for (letter, (n, d)) in LETTER_AREAS {
        letters_by_area.entry(rat(n, d)).or_default().push(letter);
    }
    let mut report = Vec::with_capacity(LETTER_AREAS.len());
    for (area, letters) in &letters_by_area {
        let sigs = by_area
            .get_mut(area)
            .ok_or_else(|| Error::invariant(format!("no computed region has area {area}")))?;
        if sigs.len() != letters.len() {
            return Err(Error::invariant(format!(
                "area {area}: expected {} regions, found {}",
                letters.len(),
                sigs.len()
            )));
        }
        sigs.sort_by_key(|s| (usize::MAX - s.len(), *s));
        for (&letter, &sig) in letters.iter().zip(sigs.iter()) {
            report.push(RegionInfo { letter, signature: sig, area: area.clone() });
        }
    }
    report.sort_by_key(|r| r.letter);
    Ok(report)
}

/// Axis-aligned square window, optionally preceded by a unimodular
/// shear of the pattern.
#[derive(Clone, Debug)]
pub struct Window {
    pub center: (Rat, Rat),
    pub side: Rat,
    /// Row-major 2x2 integer matrix `[a, b, c, d]` applied to pattern
    /// points before the window cuts; must have determinant +-1.
    pub shear: Option<[i64; 4]>,
}

impl Window {
    pub fn square(cx: Rat, cy: Rat, side: Rat) -> Window {
        Window { center: (cx, cy), side, shear: None }
    }
}

/// Image of a line under the point map `q = S p` for unimodular `S`.
fn shear_line(line: &Line, s: &[i64; 4]) -> Line {
    let det = s[0] * s[3] - s[1] * s[2];
    debug_assert!(det == 1 || det == -1);
    let (a, b, c) = line.coeffs();
    // Row covectors transform by S^{-1} = adj(S) / det.
    let a2 = (&a * rat(s[3], 1) - &b * rat(s[2], 1)) / rat(det, 1);
    let b2 = (&b * rat(s[0], 1) - &a * rat(s[1], 1)) / rat(det, 1);
    if b2.is_zero() {
        Line::vertical(c / a2)
    } else {
        Line::sloped(-a2 / &b2, c / b2)
    }
}

/// Matching cut out of a line pattern by a square window.
///
/// Chords are the lines meeting the open window; their endpoints are
/// the boundary crossing points, ordered counterclockwise from the
/// window's bottom-left corner, and chord ids follow the input order
/// of the crossing lines. Returns `None` when no line crosses the
/// window (the empty matching, which has exactly one arrangement).
///
/// Degenerate placements are errors naming the offending input lines:
/// a line through a window corner (which includes lines running along
/// a window edge) and two lines meeting on the window boundary.
pub fn extract_window_matching(lines: &[Line], w: &Window) -> Result<Option<Matching>> {
    if w.side <= Rat::zero() {
        return Err(Error::validation("window side must be positive"));
    }
    if let Some(s) = &w.shear {
        let det = s[0] * s[3] - s[1] * s[2];
        if det != 1 && det != -1 {
            return Err(Error::validation(format!(
                "shear matrix {s:?} must have determinant +-1"
            )));
        }
    }
    let half = &w.side / rat(2, 1);
    let (cx, cy) = &w.center;
    let corners = [
        (cx - &half, cy - &half),
        (cx + &half, cy - &half),
        (cx + &half, cy + &half),
        (cx - &half, cy + &half),
    ];
    let mut hits: Vec<((usize, Rat), usize, Pt)> = Vec::new();
    for (idx, input) in lines.iter().enumerate() {
        let line = match &w.shear {
            Some(s) => shear_line(input, s),
            None => input.clone(),
        };
        let vals: Vec<Rat> = corners.iter().map(|p| line.eval(p)).collect();
        if vals.iter().any(|v| v.is_zero()) {
            return Err(Error::Degenerate(format!(
                "line {input} passes through a window corner"
            )));
        }
        if vals.iter().all(|v| v > &Rat::zero()) || vals.iter().all(|v| v < &Rat::zero()) {
            continue;
        }
        for e in 0..4 {
            let f = (e + 1) % 4;
            let (vi, vj) = (&vals[e], &vals[f]);
            if (vi < &Rat::zero()) == (vj < &Rat::zero()) {
                continue;
            }
            let t = vi / (vi - vj);
            let cut = (
                &corners[e].0 + (&corners[f].0 - &corners[e].0) * &t,
                &corners[e].1 + (&corners[f].1 - &corners[e].1) * &t,
            );
            hits.push(((e, t), idx, cut));
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in hits.windows(2) {
        if pair[0].2 == pair[1].2 {
            return Err(Error::Degenerate(format!(
                "lines {} and {} meet on the window boundary",
                lines[pair[0].1], lines[pair[1].1]
            )));
        }
    }
    if hits.is_empty() {
        return Ok(None);
    }
    let mut ends: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, (_, idx, _)) in hits.iter().enumerate() {
        ends.entry(*idx).or_default().push(pos);
    }
    let pairs: Vec<(usize, usize)> = ends
        .values()
        .map(|v| {
            debug_assert_eq!(v.len(), 2, "a line crosses the boundary exactly twice");
            (v[0], v[1])
        })
        .collect();
    Ok(Some(Matching::from_pairs(&pairs)?))
}

/// The unit grid with anti-diagonals: `x = j`, `y = j`, and `y = -x + j`
/// for `j` in `lo..=hi`.
pub fn matousek_pattern(lo: i64, hi: i64) -> Vec<Line> {
    let mut lines = Vec::new();
    for j in lo..=hi {
        lines.push(Line::vertical(rat(j, 1)));
    }
    for j in lo..=hi {
        lines.push(Line::sloped(rat(0, 1), rat(j, 1)));
    }
    for j in lo..=hi {
        lines.push(Line::sloped(rat(-1, 1), rat(j, 1)));
    }
    lines
}

/// Parses a pattern file: one line record per row, either `V offset` or
/// `S slope_num slope_den offset_num offset_den`, with `offset` for `V`
/// a rational like `-3/2` or `2`. Blank rows and rows starting with `#`
/// are skipped.
pub fn parse_pattern(text: &str) -> Result<Vec<Line>> {
    let mut lines = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let lineno = i + 1;
        let row = row.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = row.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let int = |tok: &str| -> Result<i64> {
            tok.parse::<i64>().map_err(|_| err(format!("expected integer, got {tok:?}")))
        };
        match toks.as_slice() {
            ["V", off] => {
                let (n, d) = match off.split_once('/') {
                    Some((n, d)) => (int(n)?, int(d)?),
                    None => (int(off)?, 1),
                };
                if d == 0 {
                    return Err(err("zero denominator".into()));
                }
                lines.push(Line::vertical(rat(n, d)));
            }
            ["S", sn, sd, on, od] => {
                let (sn, sd, on, od) = (int(sn)?, int(sd)?, int(on)?, int(od)?);
                if sd == 0 || od == 0 {
                    return Err(err("zero denominator".into()));
                }
                lines.push(Line::sloped(rat(sn, sd), rat(on, od)));
            }
            _ => {
                return Err(err(format!(
                    "expected \"V offset\" or \"S sn sd on od\", got {row:?}"
                )));
            }
        }
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::{count_arrangements, CountOptions};
    use crate::BigCount;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts(m: &Matching) -> BigCount {
        count_arrangements(m, &CountOptions::default()).unwrap()
    }

    #[test]
    fn extremal_lines_cover_all_slopes() {
        let lines = normalized_extremal_lines();
        assert_eq!(lines.len(), 24);
        assert!(lines.contains(&Line::vertical(rat(1, 2))));
        assert!(lines.contains(&Line::vertical(rat(-1, 2))));
        assert!(lines.contains(&Line::sloped(rat(1, 2), rat(1, 4))));
        assert!(lines.contains(&Line::sloped(rat(1, 2), rat(-1, 4))));
        assert!(lines.contains(&Line::sloped(rat(3, 1), rat(1, 2))));
        for idx in 0..12 {
            let per_slope = lines
                .iter()
                .filter(|l| match l {
                    Line::Vertical { .. } => idx == VERTICAL,
                    Line::Sloped { slope, .. } => {
                        idx != VERTICAL && *slope == rat(SLOPE_VALUES[idx].0, SLOPE_VALUES[idx].1)
                    }
                })
                .count();
            assert_eq!(per_slope, 2, "slope {}", SLOPE_NAMES[idx]);
        }
    }

    #[test]
    fn bundles_match_extremal_normalization() {
        assert!(bundle_lines(2).is_err());
        assert!(bundle_lines(0).is_err());
        let one = bundle_lines(1).unwrap();
        assert_eq!(one.len(), 12);
        for line in &one {
            match line {
                Line::Vertical { x } => assert!(x.is_zero()),
                Line::Sloped { offset, .. } => assert!(offset.is_zero()),
            }
        }
        let three = bundle_lines(3).unwrap();
        assert_eq!(three.len(), 36);
        for x in [-1i64, 0, 1] {
            assert!(three.contains(&Line::vertical(rat(x, 1))));
        }
        for (on, od) in [(-1i64, 2i64), (0, 1), (1, 2)] {
            assert!(three.contains(&Line::sloped(rat(1, 2), rat(on, od))));
        }
    }

    #[test]
    fn membership_examples() {
        let all = slab_membership(&(rat(0, 1), rat(0, 1))).unwrap();
        assert_eq!(all.len(), 12);
        let right = slab_membership(&(rat(10, 1), rat(0, 1))).unwrap();
        assert_eq!(right.slopes(), vec!["0"]);
        let faraway = slab_membership(&(rat(1000, 1), rat(400, 1))).unwrap();
        assert!(faraway.is_empty());
        assert!(slab_membership(&(rat(1, 2), rat(0, 1))).is_err());
    }

    #[test]
    fn canonical_signatures_respect_symmetry() {
        let a = SlabSignature::from_slopes(&["1", "2", "inf"]).unwrap();
        let b = SlabSignature::from_slopes(&["-1", "-2", "inf"]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let full = SlabSignature::from_slopes(&SLOPE_NAMES).unwrap();
        assert_eq!(full.canonical(), full);
        assert_eq!(SlabSignature::empty().canonical(), SlabSignature::empty());
    }

    #[test]
    fn region_areas_match_known_fingerprint() {
        let report = region_report().unwrap();
        assert_eq!(report.len(), 19);
        for (info, (letter, (n, d))) in report.iter().zip(LETTER_AREAS) {
            assert_eq!(info.letter, letter);
            assert_eq!(info.area, rat(n, d), "region {letter}");
        }
    }

    #[test]
    fn region_cardinalities_follow_center_distance() {
        let report = region_report().unwrap();
        let card =
            |letter: char| report.iter().find(|r| r.letter == letter).unwrap().signature.len();
        assert_eq!(card('A'), 12);
        assert_eq!(card('B'), 11);
        assert_eq!(card('C'), 10);
    }

    #[test]
    fn sampled_region_frequencies_match_exact_areas() {
        // Points x = a/G, y = b/G with integer a, b. Every slab test
        // reduces to |b*q - p*a| versus G/2: the slab of slope p/q has
        // half-width 1/(2|q|), so the comparison scale w*|q|*G is G/2
        // for all twelve slopes, vertical included.
        const G: i64 = 1 << 20;
        let in_slab = |idx: usize, a: i64, b: i64| -> Option<bool> {
            let lhs = if idx == VERTICAL {
                a.abs()
            } else {
                let (p, q) = SLOPE_VALUES[idx];
                (b * q - p * a).abs()
            };
            match lhs.cmp(&(G / 2)) {
                std::cmp::Ordering::Equal => None,
                ord => Some(ord == std::cmp::Ordering::Less),
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let mut hits: BTreeMap<SlabSignature, u64> = BTreeMap::new();
        let total = 1_000_000u64;
        let mut n = 0;
        while n < total {
            let a = rng.gen_range(-4 * G..4 * G);
            let b = rng.gen_range(-4 * G..4 * G);
            let mut mask = 0u16;
            let mut boundary = false;
            for idx in 0..12 {
                match in_slab(idx, a, b) {
                    None => {
                        boundary = true;
                        break;
                    }
                    Some(true) => mask |= 1 << idx,
                    Some(false) => {}
                }
            }
            if boundary {
                continue;
            }
            n += 1;
            *hits.entry(SlabSignature(mask).canonical()).or_insert(0) += 1;
        }
        for (sig, area) in region_areas() {
            let p = area.to_f64().unwrap() / 64.0;
            let got = *hits.get(&sig).unwrap_or(&0) as f64 / total as f64;
            let sigma = (p * (1.0 - p) / total as f64).sqrt();
            assert!((got - p).abs() <= 3.0 * sigma, "{sig:?}: expected {p}, sampled {got}");
        }
    }

    // A square window over the full grid-with-anti-diagonals pattern
    // always clips a corner sliver off one or two extra anti-diagonals
    // beyond those it properly surrounds; the slivers cross nothing and
    // leave the arrangement count unchanged.

    #[test]
    fn unit_window_counts_two() {
        let pattern = matousek_pattern(-3, 6);
        let w = Window::square(rat(17, 32), rat(31, 64), rat(1, 1));
        let m = extract_window_matching(&pattern, &w).unwrap().unwrap();
        assert_eq!(m.k(), 4);
        assert_eq!(m.crossing_pairs(), 3);
        assert_eq!(counts(&m), BigCount::from(2u32));
    }

    #[test]
    fn side_two_window_matches_determinant_count() {
        let pattern = matousek_pattern(-3, 6);
        let w = Window::square(rat(15, 16), rat(33, 32), rat(2, 1));
        let m = extract_window_matching(&pattern, &w).unwrap().unwrap();
        let grid = crate::lgv::grid_window_matching(2);
        assert_eq!(m.k(), 8);
        assert_eq!(m.crossing_pairs(), grid.crossing_pairs());
        assert_eq!(counts(&m), BigCount::from(20u32));
        assert_eq!(counts(&m), counts(&grid));
    }

    #[test]
    fn sheared_window_preserves_the_count() {
        let pattern = matousek_pattern(-3, 6);
        let mut w = Window::square(rat(15, 16), rat(33, 32), rat(2, 1));
        w.shear = Some([1, 0, 1, 1]);
        let sheared = extract_window_matching(&pattern, &w).unwrap().unwrap();
        assert_eq!(sheared.k(), 8);
        assert_eq!(counts(&sheared), BigCount::from(20u32));

        // The same pattern mapped through (x, y) -> (x, x + y) by hand,
        // cut by the same window without a shear.
        let mut manual = Vec::new();
        for j in -3..=6 {
            manual.push(Line::vertical(rat(j, 1)));
            manual.push(Line::sloped(rat(1, 1), rat(j, 1)));
            manual.push(Line::sloped(rat(0, 1), rat(j, 1)));
        }
        let plain = Window::square(rat(15, 16), rat(33, 32), rat(2, 1));
        let direct = extract_window_matching(&manual, &plain).unwrap().unwrap();
        assert_eq!(direct.k(), sheared.k());
        assert_eq!(direct.crossing_pairs(), sheared.crossing_pairs());
        assert_eq!(counts(&direct), counts(&sheared));
    }

    #[test]
    fn empty_window_yields_no_matching() {
        let pattern = matousek_pattern(-3, 6);
        let w = Window::square(rat(301, 3), rat(301, 3), rat(1, 1));
        assert!(extract_window_matching(&pattern, &w).unwrap().is_none());
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        let pattern = matousek_pattern(-3, 6);
        let corner = Window::square(rat(1, 2), rat(1, 2), rat(1, 1));
        let err = extract_window_matching(&pattern, &corner).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
        assert!(err.to_string().contains("corner"), "{err}");

        let crossing =
            vec![Line::sloped(rat(1, 1), rat(0, 1)), Line::sloped(rat(-1, 1), rat(0, 1))];
        let edge = Window::square(rat(0, 1), rat(1, 1), rat(2, 1));
        let err = extract_window_matching(&crossing, &edge).unwrap_err();
        assert!(err.to_string().contains("boundary"), "{err}");
    }

    #[test]
    fn pattern_files_round_trip() {
        let text = "# grid\nV 1/2\nV -2\nS 1 2 1 4\n\nS -1 1 0 1\n";
        let lines = parse_pattern(text).unwrap();
        assert_eq!(
            lines,
            vec![
                Line::vertical(rat(1, 2)),
                Line::vertical(rat(-2, 1)),
                Line::sloped(rat(1, 2), rat(1, 4)),
                Line::sloped(rat(-1, 1), rat(0, 1)),
            ]
        );
        let err = parse_pattern("V 1/2\nX 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_pattern("S 1 0 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
