//! Streaming enumeration of canonical codes and the exhaustive two-size
//! universe.
//!
//! Petal words up to rotation and reflection are bracelets; enumeration
//! yields exactly one canonical representative per class, ordered by length
//! and then by canonical key, so output files are reproducible and runs can
//! restart at a length boundary.

use itertools::Itertools;
use thiserror::Error;

use crate::codes::{CoronalCode, Symbol, MAX_ALPHABET};
use crate::par::{self, Exec};
use crate::sets::{search_essential_witness_with, CodeSet, EssentialWitness};
use crate::solver::{solve_center0_binary, BinaryRootOutcome};

/// Radii closer than this collapse to one candidate.
pub const RADIUS_DEDUP_TOL: f64 = 1e-9;

/// Length cap for petal words of binary center-0 codes: beyond six petals
/// the angle sum cannot reach down to a full turn, since every angle at the
/// small center is at least sixty degrees.
pub const BINARY_SMALL_CENTER_MAX_LEN: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("invalid alphabet size {0}: must be between 1 and 36")]
    InvalidAlphabet(usize),
    #[error("center symbol {center} out of range for alphabet of size {n}")]
    CenterOutOfRange { center: usize, n: usize },
    #[error("maximum petal length must be at least 1")]
    ZeroLength,
}

/// All canonical codes with the given center and petal length, in canonical
/// key order. Brute force over all `n^len` words, keeping the ones equal to
/// their own canonical form; an independent counting oracle pins the class
/// counts in the tests.
pub fn codes_of_length(
    n: usize,
    center: Symbol,
    len: usize,
) -> Result<Vec<CoronalCode>, EnumerateError> {
    if n == 0 || n > MAX_ALPHABET {
        return Err(EnumerateError::InvalidAlphabet(n));
    }
    if center.index() >= n {
        return Err(EnumerateError::CenterOutOfRange {
            center: center.index(),
            n,
        });
    }
    if len == 0 {
        return Err(EnumerateError::ZeroLength);
    }
    let mut out = Vec::new();
    let mut word = vec![0usize; len];
    loop {
        let petals: Vec<Symbol> = word.iter().map(|&v| Symbol::new(v)).collect();
        let code = CoronalCode::new(center, &petals).expect("non-empty word");
        if code.petals() == petals.as_slice() {
            out.push(code);
        }
        // Odometer increment in base n, most significant digit first so the
        // canonical representatives appear in ascending key order.
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < n {
                break;
            }
            word[pos] = 0;
        }
    }
}

/// Lazily streams every canonical code with the given center and petal
/// length at most `max_len`, ordered by (length, canonical key).
pub fn enum_codes(
    n: usize,
    center: Symbol,
    max_len: usize,
) -> Result<impl Iterator<Item = CoronalCode>, EnumerateError> {
    // Surface argument errors eagerly rather than on first iteration.
    codes_of_length(n, center, 1)?;
    if max_len == 0 {
        return Err(EnumerateError::ZeroLength);
    }
    Ok((1..=max_len).flat_map(move |len| {
        codes_of_length(n, center, len).expect("arguments validated above")
    }))
}

/// A binary center-0 code together with its tight center radius.
#[derive(Debug, Clone)]
pub struct CandidateRadius {
    pub code: CoronalCode,
    /// Tight center radius in (0, 1), petal radius 1.
    pub r: f64,
    /// `|angle_sum - 2 pi|` at the radius, at most 1e-10.
    pub residual: f64,
}

/// Tight center radii of all binary center-0 codes of length at most six:
/// the candidate superset for the radius ratios of compact two-size
/// packings. Radii are deduplicated at [`RADIUS_DEDUP_TOL`] and returned in
/// ascending order.
pub fn pi2_candidates() -> Vec<CandidateRadius> {
    pi2_candidates_with(Exec::default())
}

/// [`pi2_candidates`] with an explicit execution strategy.
pub fn pi2_candidates_with(exec: Exec) -> Vec<CandidateRadius> {
    let universe: Vec<CoronalCode> =
        enum_codes(2, Symbol::new(0), BINARY_SMALL_CENTER_MAX_LEN)
            .expect("fixed small arguments")
            .collect();
    let outcomes = par::map(exec, &universe, |code| {
        match solve_center0_binary(code) {
            Ok(BinaryRootOutcome::Root { r, residual }) if r > 0.0 && r < 1.0 => {
                Some(CandidateRadius {
                    code: code.clone(),
                    r,
                    residual,
                })
            }
            // No root in range, constant angle sums, hexagonal word: none of
            // these determine a radius.
            _ => None,
        }
    });
    let mut candidates: Vec<CandidateRadius> = outcomes.into_iter().flatten().collect();
    candidates.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.code.cmp(&b.code)));
    candidates.dedup_by(|next, kept| (next.r - kept.r).abs() <= RADIUS_DEDUP_TOL);
    candidates
}

/// An essential set together with the witness pair that certifies it.
#[derive(Debug, Clone)]
pub struct WitnessedSet {
    pub codes: CodeSet,
    pub witness: EssentialWitness,
}

/// Searches the two-size universe (center-0 codes of length at most six) for
/// witnessed essential sets, over subsets of up to three codes.
///
/// For two sizes a set is fundamental exactly when some code has a petal
/// `1`, so subsets failing that are skipped outright. Larger subsets are
/// essential iff a common witness pair exists; the size cap keeps the run
/// at desk scale, so the result is a lower bound on the full catalogue, not
/// the catalogue itself.
pub fn enum_essential2() -> Vec<WitnessedSet> {
    enum_essential2_with(Exec::default(), 3)
}

/// [`enum_essential2`] with an explicit execution strategy and subset size
/// cap.
pub fn enum_essential2_with(exec: Exec, max_subset_size: usize) -> Vec<WitnessedSet> {
    let universe: Vec<CoronalCode> =
        enum_codes(2, Symbol::new(0), BINARY_SMALL_CENTER_MAX_LEN)
            .expect("fixed small arguments")
            .collect();
    let mut subsets: Vec<Vec<CoronalCode>> = Vec::new();
    for size in 1..=max_subset_size.min(universe.len()) {
        for combo in universe.iter().cloned().combinations(size) {
            subsets.push(combo);
        }
    }
    let witnessed = par::map_into(exec, subsets, |codes| {
        let set = CodeSet::new(2, codes).expect("universe codes are binary");
        // The seed descents stay sequential here; parallelism is over the
        // subsets themselves.
        let witness = search_essential_witness_with(&set, Exec::Sequential)?;
        Some(WitnessedSet {
            codes: set,
            witness,
        })
    });
    witnessed.into_iter().flatten().collect()
}
