//! Coronal codes over a finite symbol alphabet.
//!
//! A coronal code is a center symbol plus a non-empty cyclic word of petal
//! symbols, considered up to rotation and reflection of the petal word.
//! Codes are stored in canonical form: the petal word kept internally is the
//! lexicographically least word among all rotations of the word and all
//! rotations of its reversal, so structural equality coincides with the
//! rotation/reflection equivalence.
//!
//! The text format is `c:p0p1...` with one base-36 digit per symbol, which
//! caps the alphabet at 36 sizes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::realize::AngleSymbol;

/// Hard cap on the alphabet imposed by the base-36 text format.
pub const MAX_ALPHABET: usize = 36;

/// Label of a disc size; larger index means larger radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u8);

impl Symbol {
    /// Panics if `value` does not fit the base-36 text format. Range checks
    /// against a concrete alphabet size happen where that size is known
    /// (parsing, [`crate::sets::CodeSet`] construction).
    pub fn new(value: usize) -> Self {
        assert!(
            value < MAX_ALPHABET,
            "symbol {value} does not fit the base-36 alphabet"
        );
        Symbol(value as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn to_char(self) -> char {
        char::from_digit(u32::from(self.0), 36).expect("symbol invariant")
    }

    pub fn from_char(ch: char) -> Option<Self> {
        ch.to_digit(36).map(|v| Symbol(v as u8))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Errors from parsing or constructing coronal codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("invalid alphabet size {0}: must be between 1 and 36")]
    InvalidAlphabet(usize),
    #[error("malformed code `{text}`: {reason}")]
    Malformed { text: String, reason: String },
    #[error("symbol `{symbol}` out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: char, alphabet_size: usize },
    #[error("petal word must be non-empty")]
    EmptyPetals,
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CodeError>,
    },
}

/// A coronal code in canonical form.
///
/// Equality, ordering and hashing look only at the center and the canonical
/// petal word; the original text of a parsed code is kept as display
/// metadata and ignored by comparisons.
#[derive(Debug, Clone)]
pub struct CoronalCode {
    center: Symbol,
    petals: Vec<Symbol>,
    source: Option<String>,
}

impl PartialEq for CoronalCode {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.petals == other.petals
    }
}

impl Eq for CoronalCode {}

impl PartialOrd for CoronalCode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CoronalCode {
    /// Orders by center, then length, then canonical key; the order used in
    /// code-list files and enumeration output.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.center, self.petals.len(), &self.petals).cmp(&(
            other.center,
            other.petals.len(),
            &other.petals,
        ))
    }
}

impl std::hash::Hash for CoronalCode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.center.hash(state);
        self.petals.hash(state);
    }
}

impl CoronalCode {
    /// Canonicalizes `petals` and builds the code. Fails on an empty word.
    pub fn new(center: Symbol, petals: &[Symbol]) -> Result<Self, CodeError> {
        if petals.is_empty() {
            return Err(CodeError::EmptyPetals);
        }
        Ok(CoronalCode {
            center,
            petals: canonical_petal_word(petals),
            source: None,
        })
    }

    /// Parses the `c:p0p1...` text form (base-36 digits) and canonicalizes.
    /// The original text is preserved as display metadata.
    pub fn parse(text: &str, alphabet_size: usize) -> Result<Self, CodeError> {
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(CodeError::InvalidAlphabet(alphabet_size));
        }
        let trimmed = text.trim();
        let malformed = |reason: &str| CodeError::Malformed {
            text: trimmed.to_string(),
            reason: reason.to_string(),
        };
        let (center_part, petal_part) = trimmed
            .split_once(':')
            .ok_or_else(|| malformed("expected `<center>:<petals>`"))?;
        let mut center_chars = center_part.chars();
        let center_ch = center_chars
            .next()
            .ok_or_else(|| malformed("missing center symbol"))?;
        if center_chars.next().is_some() {
            return Err(malformed("center must be a single base-36 digit"));
        }
        let parse_symbol = |ch: char| -> Result<Symbol, CodeError> {
            let sym = Symbol::from_char(ch).ok_or_else(|| CodeError::Malformed {
                text: trimmed.to_string(),
                reason: format!("`{ch}` is not a base-36 digit"),
            })?;
            if sym.index() >= alphabet_size {
                return Err(CodeError::SymbolOutOfRange {
                    symbol: ch,
                    alphabet_size,
                });
            }
            Ok(sym)
        };
        let center = parse_symbol(center_ch)?;
        if petal_part.is_empty() {
            return Err(CodeError::EmptyPetals);
        }
        let petals = petal_part
            .chars()
            .map(parse_symbol)
            .collect::<Result<Vec<_>, _>>()?;
        let mut code = CoronalCode::new(center, &petals)?;
        code.source = Some(trimmed.to_string());
        Ok(code)
    }

    pub fn center(&self) -> Symbol {
        self.center
    }

    /// The canonical petal word.
    pub fn petals(&self) -> &[Symbol] {
        &self.petals
    }

    /// Alias for [`petals`](Self::petals) emphasizing its role as the
    /// comparison key.
    pub fn canonical_key(&self) -> &[Symbol] {
        &self.petals
    }

    /// Number of petals.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.petals.len()
    }

    /// The text this code was parsed from, if any.
    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    /// Distinct petal symbols.
    pub fn petal_set(&self) -> BTreeSet<Symbol> {
        self.petals.iter().copied().collect()
    }

    /// Largest symbol occurring in the code (center included).
    pub fn max_symbol(&self) -> Symbol {
        self.petals
            .iter()
            .copied()
            .chain(std::iter::once(self.center))
            .max()
            .expect("petals non-empty")
    }

    /// The multiset of angle symbols read off consecutive petal pairs,
    /// wraparound included. Equivalent codes produce identical sums.
    pub fn angle_sum(&self) -> AngleSum {
        let mut terms: BTreeMap<AngleSymbol, u32> = BTreeMap::new();
        let m = self.petals.len();
        for i in 0..m {
            let a = self.petals[i];
            let b = self.petals[(i + 1) % m];
            *terms.entry(AngleSymbol::new(self.center, a, b)).or_insert(0) += 1;
        }
        AngleSum { terms }
    }

    /// Replaces every symbol strictly larger than `k` (center and petals) by
    /// `k`, then re-canonicalizes.
    pub fn downgrade(&self, k: Symbol) -> CoronalCode {
        let clamp = |s: Symbol| if s > k { k } else { s };
        let petals: Vec<Symbol> = self.petals.iter().map(|&p| clamp(p)).collect();
        CoronalCode::new(clamp(self.center), &petals).expect("petals stay non-empty")
    }
}

impl fmt::Display for CoronalCode {
    /// Canonical text form, regardless of the parsed source.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.center)?;
        for p in &self.petals {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Lexicographically least word among all rotations of `petals` and all
/// rotations of its reversal. O(m^2), deterministic.
fn canonical_petal_word(petals: &[Symbol]) -> Vec<Symbol> {
    let m = petals.len();
    let reversed: Vec<Symbol> = petals.iter().rev().copied().collect();
    let mut best: Option<Vec<Symbol>> = None;
    for word in [petals, reversed.as_slice()] {
        for r in 0..m {
            let candidate: Vec<Symbol> =
                word.iter().cycle().skip(r).take(m).copied().collect();
            if best.as_ref().is_none_or(|b| candidate < *b) {
                best = Some(candidate);
            }
        }
    }
    best.expect("non-empty petal word")
}

/// Parses a code-list file body: one code per line, `#` starts a comment,
/// blank lines ignored.
pub fn parse_code_list(text: &str, alphabet_size: usize) -> Result<Vec<CoronalCode>, CodeError> {
    let mut codes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let code = CoronalCode::parse(line, alphabet_size).map_err(|e| CodeError::AtLine {
            line: idx + 1,
            source: Box::new(e),
        })?;
        codes.push(code);
    }
    Ok(codes)
}

/// A formal sum of angle symbols with multiplicities.
///
/// Total multiplicity equals the length of the source code. The map
/// representation makes the sum independent of which representative of the
/// code's equivalence class produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleSum {
    terms: BTreeMap<AngleSymbol, u32>,
}

impl AngleSum {
    pub fn terms(&self) -> impl Iterator<Item = (AngleSymbol, u32)> + '_ {
        self.terms.iter().map(|(&sym, &mult)| (sym, mult))
    }

    /// Total multiplicity, i.e. the length of the source code.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.terms.values().sum()
    }

    /// Distinct symbols occurring in any term (vertices and petals).
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (sym, _) in self.terms() {
            out.insert(sym.vertex());
            let (a, b) = sym.petal_pair();
            out.insert(a);
            out.insert(b);
        }
        out
    }
}
