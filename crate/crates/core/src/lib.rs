//! Counting non-isomorphic simple pseudochord arrangements.
//!
//! A matching pairs up `2k` labeled points on a circle; each pair spans a
//! chord. Two chords must cross (exactly once) when their endpoints
//! interleave around the circle and must not cross otherwise. This crate
//! counts the arrangements of such chord systems up to homeomorphism of the
//! disk, builds the 12-slope line construction whose windows realize large
//! such matchings, and assembles the resulting lower bound on the number of
//! simple pseudoline arrangements.
//!
//! The pipeline, bottom to top:
//!
//! * [`matching`] — matchings, crossing predicates, file format.
//! * [`subdivision`] — the disk subdivision (DCEL) of a partial embedding,
//!   insertion routes for the next chord, and chirotopes.
//! * [`counter`] — exact arrangement counts by incremental insertion, with
//!   seeded sampling, weight heuristics, and thread-safe parallel sums.
//! * [`independence`] — independence of chord pairs and the R/G/B divide and
//!   conquer that makes wide matchings tractable.
//! * [`lgv`] — determinant counts of non-intersecting lattice path tuples
//!   matching the diagonal-grid windows.
//! * [`construction`] — exact rational geometry of the 12-slope bundle
//!   construction: slabs, region signatures, areas, window extraction.
//! * [`bound`] — assembling per-region counts into the final constants with
//!   directed (always-safe) rounding.

pub mod bound;
pub mod construction;
pub mod counter;
pub mod error;
pub mod independence;
pub mod lgv;
pub mod matching;
pub mod subdivision;

pub use error::Error;

/// Exact nonnegative count. Counts are never floats anywhere in the crate.
pub type BigCount = num_bigint::BigUint;

/// Exact rational scalar used by all geometry and bound arithmetic.
pub type Rat = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}
