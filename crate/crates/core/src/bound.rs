//! Lower-bound assembly from per-region arrangement counts.
//!
//! A region table lists, for each region of the construction, the exact
//! arrangement count of its chosen subembedding and the density of
//! independent placements of that subembedding per unit area. Since
//! independent subembeddings multiply, the arrangements of the whole
//! size-`m` construction number at least `2^(c*m^2 - O(m))` with
//! `c = sum density * log2(count)`, and the recursion over `r` slope
//! bundles turns `c` into a quadratic constant `c / (r*(r-1))` for
//! unrestricted pseudoline arrangements.
//!
//! Every logarithm here is rounded down, so all reported constants are
//! true lower bounds: coarsely as `bit_length - 1`, and precisely with
//! [`LOG2_FRAC_BITS`] fractional bits of directed truncation.

use crate::error::{Error, Result};
use crate::{BigCount, Rat};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Write as _;
use std::path::Path;

/// Fractional bits carried by the precise directed logarithm.
pub const LOG2_FRAC_BITS: u32 = 60;

/// Working mantissa width of the precise logarithm, in bits. Truncation
/// error accumulates by at most one ulp per squaring, so the result is
/// accurate to well under one ulp of the 60 reported fractional bits.
const MANTISSA_BITS: u64 = 192;

/// Arrangement count of one region's subembedding: exact, or a shipped
/// lower bound on its base-2 logarithm when the count is far too large
/// to store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionValue {
    Exact(BigCount),
    Log2AtLeast(Rat),
}

/// Whether a table row is part of the shipped defaults or was computed
/// or supplied by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Shipped,
    Computed,
}

/// One region row: subembedding count and placement density.
#[derive(Clone, Debug)]
pub struct RegionEntry {
    pub name: String,
    pub value: RegionValue,
    /// Independent placements of the subembedding per unit area.
    pub density: Rat,
    pub source: Source,
}

/// Floor of log2, as bit length minus one. Errors on zero.
pub fn log2_floor(n: &BigCount) -> Result<u64> {
    crate::lgv::log2_lower(n)
}

/// Directed-down base-2 logarithm with [`LOG2_FRAC_BITS`] fractional
/// bits: the result never exceeds the true logarithm and is exact on
/// powers of two.
///
/// The integer part is `bit_length - 1`; fractional bits come from the
/// classic shift-and-square loop on a `MANTISSA_BITS`-wide fixed
/// point mantissa in `[1, 2)`, truncating (never rounding up) after
/// every squaring.
pub fn log2_lower_precise(n: &BigCount) -> Result<Rat> {
    if n.is_zero() {
        return Err(Error::validation("log2 of zero"));
    }
    let e0 = n.bits() - 1;
    const K: u64 = MANTISSA_BITS;
    let mut x: BigCount = if e0 >= K - 1 { n >> (e0 - (K - 1)) } else { n << (K - 1 - e0) };
    let mut frac = BigCount::zero();
    for _ in 0..LOG2_FRAC_BITS {
        x = &x * &x;
        frac <<= 1;
        if x.bits() >= 2 * K {
            frac += 1u32;
            x >>= K;
        } else {
            x >>= K - 1;
        }
    }
    let scale = BigInt::one() << LOG2_FRAC_BITS;
    Ok(Rat::new(BigInt::from(e0) * &scale + BigInt::from(frac), scale))
}

fn entry_log2(value: &RegionValue, precise: bool) -> Result<Rat> {
    match value {
        RegionValue::Exact(n) => {
            if precise {
                log2_lower_precise(n)
            } else {
                Ok(Rat::from_integer(BigInt::from(log2_floor(n)?)))
            }
        }
        RegionValue::Log2AtLeast(bound) => Ok(bound.clone()),
    }
}

fn checked_entries(entries: &[RegionEntry]) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::validation("region table is empty"));
    }
    for e in entries {
        if e.density <= Rat::zero() {
            return Err(Error::validation(format!("{}: density must be positive", e.name)));
        }
        if matches!(&e.value, RegionValue::Exact(n) if n.is_zero()) {
            return Err(Error::validation(format!("{}: count must be at least 1", e.name)));
        }
    }
    Ok(())
}

/// Lower bound on the quadratic coefficient of the exponent, with the
/// coarse per-entry logarithm `bit_length - 1`.
pub fn matching_bound(entries: &[RegionEntry]) -> Result<Rat> {
    checked_entries(entries)?;
    let mut total = Rat::zero();
    for e in entries {
        total += &e.density * entry_log2(&e.value, false)?;
    }
    Ok(total)
}

/// Lower bound on the quadratic coefficient of the exponent, with the
/// precise directed-down logarithm. Still a guaranteed lower bound,
/// but tight to within `2^-60` per entry.
pub fn matching_bound_precise(entries: &[RegionEntry]) -> Result<Rat> {
    checked_entries(entries)?;
    let mut total = Rat::zero();
    for e in entries {
        total += &e.density * entry_log2(&e.value, true)?;
    }
    Ok(total)
}

/// Quadratic constant for unrestricted pseudoline arrangements obtained
/// from a construction of `r` slope bundles with per-area coefficient
/// `c`: `c / (r*(r-1))`.
pub fn pseudoline_bound(c: &Rat, r: u64) -> Result<Rat> {
    if r < 2 {
        return Err(Error::validation(format!("need at least two slope bundles, got {r}")));
    }
    Ok(c / Rat::from_integer(BigInt::from(r) * BigInt::from(r - 1)))
}

/// One row of a [`BoundReport`].
#[derive(Clone, Debug)]
pub struct BoundRow {
    pub name: String,
    pub source: Source,
    pub density: Rat,
    /// True when the logarithms were computed from an exact count; false
    /// when the table shipped only a log2 bound, used verbatim in both
    /// rounding modes.
    pub exact_count: bool,
    pub log2_coarse: Rat,
    pub log2_precise: Rat,
    pub contribution_coarse: Rat,
    pub contribution_precise: Rat,
}

/// Full bound computation over a region table: per-row logarithms and
/// contributions in both rounding modes, their totals, and the final
/// pseudoline constants.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub slopes: u64,
    pub total_coarse: Rat,
    pub total_precise: Rat,
    pub constant_coarse: Rat,
    pub constant_precise: Rat,
}

/// Builds the [`BoundReport`] for a table and a slope-bundle count.
pub fn bound_report(entries: &[RegionEntry], slopes: u64) -> Result<BoundReport> {
    checked_entries(entries)?;
    let mut rows = Vec::with_capacity(entries.len());
    let (mut total_coarse, mut total_precise) = (Rat::zero(), Rat::zero());
    for e in entries {
        let log2_coarse = entry_log2(&e.value, false)?;
        let log2_precise = entry_log2(&e.value, true)?;
        let contribution_coarse = &e.density * &log2_coarse;
        let contribution_precise = &e.density * &log2_precise;
        total_coarse += &contribution_coarse;
        total_precise += &contribution_precise;
        rows.push(BoundRow {
            name: e.name.clone(),
            source: e.source,
            density: e.density.clone(),
            exact_count: matches!(e.value, RegionValue::Exact(_)),
            log2_coarse,
            log2_precise,
            contribution_coarse,
            contribution_precise,
        });
    }
    let constant_coarse = pseudoline_bound(&total_coarse, slopes)?;
    let constant_precise = pseudoline_bound(&total_precise, slopes)?;
    Ok(BoundReport {
        rows,
        slopes,
        total_coarse,
        total_precise,
        constant_coarse,
        constant_precise,
    })
}

fn dec(r: &Rat) -> String {
    match r.to_f64() {
        Some(v) => format!("{v:.9}"),
        None => "?".into(),
    }
}

impl BoundReport {
    /// True when the precise per-area total clears `threshold`. Since
    /// the total is itself a lower bound, `true` is a proof.
    pub fn total_at_least(&self, threshold: &Rat) -> bool {
        self.total_precise >= *threshold
    }

    /// Aligned human-readable report. Decimal columns are displayed
    /// approximations of the exact rationals; the rationals themselves
    /// are what the totals are computed from.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let name_w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(6);
        let _ = writeln!(
            out,
            "{:name_w$}  {:>10}  {:>14}  {:>18}  {:>16}",
            "region", "density", "log2 (coarse)", "log2 (precise)", "contribution"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:name_w$}  {:>10}  {:>14}  {:>18}  {:>16}",
                row.name,
                row.density.to_string(),
                dec(&row.log2_coarse),
                dec(&row.log2_precise),
                dec(&row.contribution_precise),
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "per-area total (coarse):  {} (~{})",
            self.total_coarse,
            dec(&self.total_coarse)
        );
        let _ = writeln!(
            out,
            "per-area total (precise): {} (~{})",
            self.total_precise,
            dec(&self.total_precise)
        );
        let _ = writeln!(
            out,
            "pseudoline constant, r = {}: coarse {} (~{}), precise {} (~{})",
            self.slopes,
            self.constant_coarse,
            dec(&self.constant_coarse),
            self.constant_precise,
            dec(&self.constant_precise)
        );
        let _ = writeln!(
            out,
            "rounding: all logarithms truncated down (coarse = bit length - 1, \
             precise = {LOG2_FRAC_BITS} fractional bits); shipped log2 bounds used verbatim; \
             every printed constant is a guaranteed lower bound"
        );
        out
    }

    /// Machine-readable TSV with exact rationals.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "name\tsource\tdensity\tlog2_coarse\tlog2_precise\tcontribution_coarse\tcontribution_precise"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.name,
                match row.source {
                    Source::Shipped => "shipped",
                    Source::Computed => "computed",
                },
                row.density,
                row.log2_coarse,
                row.log2_precise,
                row.contribution_coarse,
                row.contribution_precise
            );
        }
        let _ = writeln!(out, "total\t\t\t{}\t{}\t\t", self.total_coarse, self.total_precise);
        let _ = writeln!(
            out,
            "constant\tr={}\t\t{}\t{}\t\t",
            self.slopes, self.constant_coarse, self.constant_precise
        );
        out
    }
}

fn parse_rational(tok: &str, lineno: usize) -> Result<Rat> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>().map_err(|_| err(format!("expected integer, got {t:?}")))
    };
    let (n, d) = match tok.split_once('/') {
        Some((n, d)) => (int(n)?, int(d)?),
        None => (int(tok)?, BigInt::one()),
    };
    if d.is_zero() {
        return Err(err("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

/// Parses a region table: one row per region with whitespace-separated
/// columns `name`, `count` (a decimal integer, or `log2>=<bound>` with
/// a rational bound), and `density` (a rational `p/q`). Blank rows and
/// rows starting with `#` are skipped. Entries are marked
/// [`Source::Computed`]; the shipped defaults override this.
pub fn parse_region_table(text: &str) -> Result<Vec<RegionEntry>> {
    let mut entries = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let lineno = i + 1;
        let row = row.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = row.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let [name, value_tok, density_tok] = toks.as_slice() else {
            return Err(err(format!("expected 3 columns, got {}", toks.len())));
        };
        let value = if let Some(bound) = value_tok.strip_prefix("log2>=") {
            RegionValue::Log2AtLeast(parse_rational(bound, lineno)?)
        } else {
            let count = value_tok
                .parse::<BigCount>()
                .map_err(|_| err(format!("expected count or log2>=bound, got {value_tok:?}")))?;
            if count.is_zero() {
                return Err(err("count must be at least 1".into()));
            }
            RegionValue::Exact(count)
        };
        let density = parse_rational(density_tok, lineno)?;
        if density <= Rat::zero() {
            return Err(err("density must be positive".into()));
        }
        entries.push(RegionEntry {
            name: name.to_string(),
            value,
            density,
            source: Source::Computed,
        });
    }
    Ok(entries)
}

/// Reads and parses a region table file.
pub fn load_region_table(path: &Path) -> Result<Vec<RegionEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    parse_region_table(&text)
}

/// The shipped 19-region table of the twelve-slope construction.
pub fn default_region_table() -> Vec<RegionEntry> {
    let mut entries = parse_region_table(include_str!("../data/region_table.tsv"))
        .expect("shipped region table parses");
    for e in &mut entries {
        e.source = Source::Shipped;
    }
    entries
}

/// Named built-in tables: the shipped `regions` table, the three-slope
/// `matousek` grid (one subembedding of count 2 at density 3/4), and
/// the three-slope `warmup` refinement (count 20 at density 3/16).
pub fn builtin_table(name: &str) -> Result<Vec<RegionEntry>> {
    match name {
        "regions" => Ok(default_region_table()),
        "matousek" => Ok(vec![RegionEntry {
            name: "tile".into(),
            value: RegionValue::Exact(BigCount::from(2u32)),
            density: crate::rat(3, 4),
            source: Source::Shipped,
        }]),
        "warmup" => Ok(vec![RegionEntry {
            name: "window".into(),
            value: RegionValue::Exact(BigCount::from(20u32)),
            density: crate::rat(3, 16),
            source: Source::Shipped,
        }]),
        other => Err(Error::validation(format!(
            "unknown builtin table {other:?}; available: regions, matousek, warmup"
        ))),
    }
}

/// Known area of each shipped region's subembedding window, as
/// (numerator, denominator).
const SUBEMBEDDING_AREAS: [(&str, (i64, i64)); 19] = [
    ("R_A", (1, 1)),
    ("R_B", (1, 1)),
    ("R_C", (1, 1)),
    ("R_D", (1, 1)),
    ("R_E", (1, 1)),
    ("R_F", (1, 1)),
    ("R_G", (2, 1)),
    ("R_H", (1, 1)),
    ("R_I", (2, 1)),
    ("R_J", (3, 1)),
    ("R_K", (16, 1)),
    ("R_L", (4, 1)),
    ("R_M", (4, 1)),
    ("R_N", (6, 1)),
    ("R_O", (3, 2)),
    ("R_P", (21, 1)),
    ("R_Q", (21, 1)),
    ("R_R", (250000, 1)),
    ("R_S", (250000, 1)),
];

/// Cross-checks a table against the construction geometry: for every
/// row named `R_X` with a known subembedding area, the region area
/// computed by [`crate::construction::region_report`] must equal
/// `density * subembedding_area`. Rows with other names are skipped.
pub fn check_region_table(entries: &[RegionEntry]) -> Result<()> {
    let report = crate::construction::region_report()?;
    let area_of = |letter: char| {
        report.iter().find(|r| r.letter == letter).map(|r| r.area.clone())
    };
    for e in entries {
        let Some((_, (n, d))) = SUBEMBEDDING_AREAS.iter().find(|(name, _)| *name == e.name)
        else {
            continue;
        };
        let letter = e.name.chars().last().unwrap();
        let Some(region_area) = area_of(letter) else {
            return Err(Error::invariant(format!("no computed region for {}", e.name)));
        };
        let expected = &e.density * crate::rat(*n, *d);
        if region_area != expected {
            return Err(Error::invariant(format!(
                "{}: region area {} != density {} x subembedding area {}/{}",
                e.name, region_area, e.density, n, d
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use num_traits::Signed;

    fn exact(name: &str, n: u64, num: i64, den: i64) -> RegionEntry {
        RegionEntry {
            name: name.into(),
            value: RegionValue::Exact(BigCount::from(n)),
            density: rat(num, den),
            source: Source::Computed,
        }
    }

    #[test]
    fn precise_log_is_a_tight_lower_bound() {
        let two_fifty = BigCount::from(1u64) << 50;
        assert_eq!(log2_lower_precise(&two_fifty).unwrap(), rat(50, 1));
        assert_eq!(log2_lower_precise(&BigCount::from(1u32)).unwrap(), rat(0, 1));
        let r = log2_lower_precise(&BigCount::from(20u32)).unwrap();
        assert!(r > rat(4_321_928_094, 1_000_000_000), "{r}");
        assert!(r < rat(4_321_928_095, 1_000_000_000), "{r}");
        assert!(log2_lower_precise(&BigCount::zero()).is_err());
        assert!(log2_floor(&BigCount::zero()).is_err());
    }

    #[test]
    fn precise_log_is_nearly_additive() {
        let f = |n: u64| log2_lower_precise(&BigCount::from(n)).unwrap();
        let diff = f(3 * 7) - f(3) - f(7);
        assert!(diff.abs() <= Rat::new(1.into(), BigInt::one() << 49), "{diff}");
    }

    #[test]
    fn matousek_constants_are_exact() {
        let table = builtin_table("matousek").unwrap();
        let report = bound_report(&table, 3).unwrap();
        assert_eq!(report.total_coarse, rat(3, 4));
        assert_eq!(report.total_precise, rat(3, 4));
        assert_eq!(report.constant_coarse, rat(1, 8));
        assert_eq!(report.constant_precise, rat(1, 8));
    }

    #[test]
    fn warmup_needs_the_precise_log() {
        let table = builtin_table("warmup").unwrap();
        let report = bound_report(&table, 3).unwrap();
        assert_eq!(report.constant_coarse, rat(1, 8));
        assert!(report.constant_coarse < rat(135, 1000));
        assert!(report.constant_precise > rat(135, 1000), "{}", report.constant_precise);
    }

    #[test]
    fn shipped_table_clears_the_published_constants() {
        let table = default_region_table();
        assert_eq!(table.len(), 19);
        assert!(table.iter().all(|e| e.source == Source::Shipped));
        assert_eq!(table[0].name, "R_A");
        assert_eq!(table[18].name, "R_S");
        let report = bound_report(&table, 12).unwrap();
        assert!(report.total_coarse >= rat(34_374, 1_000), "{}", report.total_coarse);
        assert!(report.total_precise >= report.total_coarse);
        assert!(report.total_at_least(&rat(34_374, 1_000)));
        assert!(report.constant_precise >= rat(2_604, 10_000), "{}", report.constant_precise);
        for row in &report.rows {
            assert!(row.log2_precise >= row.log2_coarse, "{}", row.name);
        }
    }

    #[test]
    fn bounds_are_additive_and_linear() {
        let a = vec![exact("a", 20, 1, 3)];
        let b = vec![exact("b", 908, 2, 7)];
        let mut both = a.clone();
        both.extend(b.clone());
        assert_eq!(
            matching_bound(&both).unwrap(),
            matching_bound(&a).unwrap() + matching_bound(&b).unwrap()
        );
        assert_eq!(
            matching_bound_precise(&both).unwrap(),
            matching_bound_precise(&a).unwrap() + matching_bound_precise(&b).unwrap()
        );
        let c = matching_bound(&a).unwrap();
        let t = rat(5, 3);
        assert_eq!(
            pseudoline_bound(&(&c * &t), 12).unwrap(),
            t * pseudoline_bound(&c, 12).unwrap()
        );
        assert!(pseudoline_bound(&c, 1).is_err());
        assert!(matching_bound(&[]).is_err());
    }

    #[test]
    fn tables_parse_with_row_errors() {
        let good = "# comment\nR_A 4 1/2\nR_R log2>=349033 1/250000\n";
        let table = parse_region_table(good).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table[0].value, RegionValue::Exact(BigCount::from(4u32)));
        assert_eq!(table[1].value, RegionValue::Log2AtLeast(rat(349_033, 1)));
        assert_eq!(table[1].density, rat(1, 250_000));
        assert!(table.iter().all(|e| e.source == Source::Computed));

        let cases = [
            ("R_A x 1/2\n", 1),
            ("R_A 4 1/2\nR_B 0 1/2\n", 2),
            ("R_A 4 0/5\n", 1),
            ("R_A 4\n", 1),
            ("R_A 4 1/0\n", 1),
            ("R_A log2>=x 1/2\n", 1),
        ];
        for (text, line) in cases {
            match parse_region_table(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn shipped_table_is_consistent_with_the_geometry() {
        check_region_table(&default_region_table()).unwrap();
        let mut bad = default_region_table();
        bad[6].density = rat(1, 29);
        assert!(matches!(check_region_table(&bad), Err(Error::Invariant(_))));
    }

    #[test]
    fn reports_render_both_formats() {
        let report = bound_report(&default_region_table(), 12).unwrap();
        let text = report.render_text();
        assert!(text.contains("R_K"));
        assert!(text.contains("guaranteed lower bound"));
        let tsv = report.render_tsv();
        assert_eq!(tsv.lines().count(), 1 + 19 + 2);
        let first = tsv.lines().nth(1).unwrap();
        assert!(first.starts_with("R_A\tshipped\t1/12\t"));
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(builtin_table("nope").is_err());
        assert_eq!(builtin_table("regions").unwrap().len(), 19);
    }
}
