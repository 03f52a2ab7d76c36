//! Predicates and constructions on finite sets of coronal codes.
//!
//! A set over the alphabet `{0..n-1}` is *fundamental* when its centers are
//! exactly `{0..n-2}` and, for every non-empty `K` of centers, some code
//! centered in `K` has a petal outside `K`. An *essential* set is a
//! fundamental set bracketed by two monotone realizers: one keeping every
//! angle sum at or below a full turn, one keeping every angle sum at or
//! above it. Those witnesses feed the bootstrap ratio inequality and the
//! code-length bound, which together drive the small-alphabet enumeration.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use thiserror::Error;

use crate::codes::{parse_code_list, AngleSum, CodeError, CoronalCode, Symbol, MAX_ALPHABET};
use crate::par::{self, Exec};
use crate::realize::{eval_angle_sum, Realizer};

/// Default slack tolerance for the inequality checks: two orders above the
/// solver's residual tolerance.
pub const DEFAULT_SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessSide {
    /// The realizer keeping every angle sum at or below a full turn.
    Rho,
    /// The realizer keeping every angle sum at or above a full turn.
    Sigma,
}

impl std::fmt::Display for WitnessSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WitnessSide::Rho => write!(f, "rho"),
            WitnessSide::Sigma => write!(f, "sigma"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetsError {
    #[error("invalid alphabet size {0}: must be between 1 and 36")]
    InvalidAlphabet(usize),
    #[error("code {code} uses symbols outside the alphabet of size {n}")]
    SymbolOutOfRange { code: String, n: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("operation needs an alphabet of at least {needs} sizes, got {n}")]
    AlphabetTooSmall { n: usize, needs: usize },
    #[error("codes do not come from a compact packing: centers up to {0} are not fundamental")]
    NotCompactPackingCodes(usize),
    #[error("realizer covers {found} symbols, expected {expected}")]
    DomainMismatch { expected: usize, found: usize },
    #[error("{side} witness is not monotone")]
    NonMonotoneWitness { side: WitnessSide },
    #[error("code set is not fundamental")]
    NotFundamental,
    #[error("{side} hypothesis violated by {code}: angle sum {angle_sum} vs full turn")]
    HypothesisViolated {
        side: WitnessSide,
        code: String,
        angle_sum: f64,
    },
    #[error("shrink level m = {m} out of range 2..={} for alphabet size {n}", .n - 1)]
    ShrinkRange { m: usize, n: usize },
    #[error("kappa0 = {0} out of range (0, 1]")]
    KappaOutOfRange(f64),
}

/// A finite set of canonical codes over a fixed alphabet.
///
/// Canonical-form set semantics make duplicates impossible; iteration order
/// is the code ordering (center, length, canonical key), so file output is
/// reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    n: usize,
    codes: BTreeSet<CoronalCode>,
}

impl CodeSet {
    pub fn new(
        n: usize,
        codes: impl IntoIterator<Item = CoronalCode>,
    ) -> Result<Self, SetsError> {
        if n == 0 || n > MAX_ALPHABET {
            return Err(SetsError::InvalidAlphabet(n));
        }
        let codes: BTreeSet<CoronalCode> = codes.into_iter().collect();
        for code in &codes {
            if code.max_symbol().index() >= n {
                return Err(SetsError::SymbolOutOfRange {
                    code: code.to_string(),
                    n,
                });
            }
        }
        Ok(CodeSet { n, codes })
    }

    /// Parses a code-list body (one code per line, `#` comments).
    pub fn parse(text: &str, n: usize) -> Result<Self, SetsError> {
        if n == 0 || n > MAX_ALPHABET {
            return Err(SetsError::InvalidAlphabet(n));
        }
        CodeSet::new(n, parse_code_list(text, n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codes(&self) -> impl Iterator<Item = &CoronalCode> + '_ {
        self.codes.iter()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn contains(&self, code: &CoronalCode) -> bool {
        self.codes.contains(code)
    }

    /// Centers present in the set.
    pub fn centers(&self) -> BTreeSet<Symbol> {
        self.codes.iter().map(|c| c.center()).collect()
    }

    /// One canonical code per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for code in &self.codes {
            out.push_str(&code.to_string());
            out.push('\n');
        }
        out
    }
}

/// True iff the centers are exactly `{0..n-2}` and every non-empty subset
/// `K` of them is escaped by some code: a code centered in `K` with a petal
/// outside `K`.
///
/// The single-code escape criterion is equivalent to quantifying over
/// subsets `D` of the set: given full center coverage, a `D` with centers
/// exactly `K` and an escaping petal exists iff a single escaping code does,
/// because enlarging `D` within `K` only adds petals. The literal-quantifier
/// oracle cross-checks this in the test suite. Cost is `2^(n-1)` subset
/// checks; alphabets at that scale are tiny.
///
/// For `n < 2` the center range is empty and no non-empty set qualifies.
pub fn is_fundamental(set: &CodeSet) -> bool {
    let n = set.n();
    if n < 2 || set.is_empty() {
        return false;
    }
    let k = n - 1;
    let centers = set.centers();
    if centers.len() != k || centers.iter().any(|c| c.index() >= k) {
        return false;
    }
    for mask in 1u64..(1u64 << k) {
        let escaped = set.codes().any(|code| {
            let c = code.center().index();
            (mask >> c) & 1 == 1
                && code.petals().iter().any(|p| {
                    let i = p.index();
                    i >= k || (mask >> i) & 1 == 0
                })
        });
        if !escaped {
            return false;
        }
    }
    true
}

/// Keeps the codes with center at most `n-2` and checks the result is
/// fundamental. That is guaranteed when the input is the code set of a
/// canonically labeled compact packing, so a failure flags the input as not
/// coming from one.
pub fn extract_fundamental(packing_codes: &CodeSet) -> Result<CodeSet, SetsError> {
    let n = packing_codes.n();
    if n < 2 {
        return Err(SetsError::AlphabetTooSmall { n, needs: 2 });
    }
    let filtered = CodeSet::new(
        n,
        packing_codes
            .codes()
            .filter(|c| c.center().index() <= n - 2)
            .cloned(),
    )?;
    if !is_fundamental(&filtered) {
        return Err(SetsError::NotCompactPackingCodes(n - 2));
    }
    Ok(filtered)
}

/// A pair of monotone realizers bracketing every angle sum of a witnessed
/// set around a full turn, with the worst-case slack.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialWitness {
    pub rho: Realizer,
    pub sigma: Realizer,
    /// `min` over codes of `min(2pi - angle_sum|rho, angle_sum|sigma - 2pi)`;
    /// non-negative up to tolerance for a valid witness, exactly 0 when both
    /// sides are a tight realizer.
    pub slack: f64,
}

impl EssentialWitness {
    /// Wraps a witness pair for `set`, computing its slack. Rejects
    /// non-monotone maps and domain mismatches; the slack may come out
    /// negative, which [`check_essential_witness`] then rejects.
    pub fn new(set: &CodeSet, rho: Realizer, sigma: Realizer) -> Result<Self, SetsError> {
        for (side, map) in [(WitnessSide::Rho, &rho), (WitnessSide::Sigma, &sigma)] {
            if map.n() != set.n() {
                return Err(SetsError::DomainMismatch {
                    expected: set.n(),
                    found: map.n(),
                });
            }
            if !map.is_monotone() {
                return Err(SetsError::NonMonotoneWitness { side });
            }
        }
        let slack = witness_slack(set, &rho, &sigma);
        Ok(EssentialWitness { rho, sigma, slack })
    }
}

fn witness_slack(set: &CodeSet, rho: &Realizer, sigma: &Realizer) -> f64 {
    let mut slack = f64::INFINITY;
    for code in set.codes() {
        let sum = code.angle_sum();
        let below = TAU - eval_angle_sum(&sum, rho);
        let above = eval_angle_sum(&sum, sigma) - TAU;
        slack = slack.min(below).min(above);
    }
    slack
}

/// True iff `set` is fundamental and the witness inequalities hold with
/// slack at least `-tol`. Errors on a non-monotone witness or a domain
/// mismatch rather than returning false.
pub fn check_essential_witness(
    set: &CodeSet,
    witness: &EssentialWitness,
    tol: f64,
) -> Result<bool, SetsError> {
    let revalidated =
        EssentialWitness::new(set, witness.rho.clone(), witness.sigma.clone())?;
    Ok(is_fundamental(set) && revalidated.slack >= -tol)
}

/// Searches for an essential witness by direct optimization over monotone
/// normalized realizers: minimize the largest angle sum for the lower side,
/// maximize the smallest for the upper side, each by grid seeding plus
/// multiplicative pattern search on the consecutive-ratio coordinates.
///
/// A returned witness is proof of essentiality (up to [`DEFAULT_SLACK_TOL`]);
/// `None` only means the search failed and is *not* a proof of
/// non-essentiality. Returns `None` immediately for non-fundamental sets,
/// which cannot be essential.
pub fn search_essential_witness(set: &CodeSet) -> Option<EssentialWitness> {
    search_essential_witness_with(set, Exec::default())
}

/// [`search_essential_witness`] with an explicit execution strategy for the
/// per-seed descents.
pub fn search_essential_witness_with(set: &CodeSet, exec: Exec) -> Option<EssentialWitness> {
    if !is_fundamental(set) {
        return None;
    }
    let sums: Vec<AngleSum> = set.codes().map(|c| c.angle_sum()).collect();
    let n = set.n();
    let (rho, _) = optimize_side(&sums, n, WitnessSide::Rho, exec)?;
    let (sigma, _) = optimize_side(&sums, n, WitnessSide::Sigma, exec)?;
    Some(EssentialWitness::new(set, rho, sigma).expect("search output is monotone"))
}

/// Lower bound for the ratio coordinates during the witness search. Keeps
/// every realized value positive while letting adjacent sizes differ by four
/// orders of magnitude.
const RATIO_FLOOR: f64 = 1e-4;

fn ratios_to_realizer(ratios: &[f64]) -> Realizer {
    let n = ratios.len() + 1;
    let mut values = vec![1.0; n];
    for i in (0..n - 1).rev() {
        values[i] = values[i + 1] * ratios[i];
    }
    Realizer::new(values).expect("ratios stay positive")
}

fn optimize_side(
    sums: &[AngleSum],
    n: usize,
    side: WitnessSide,
    exec: Exec,
) -> Option<(Realizer, f64)> {
    // Signed objective to *minimize*: worst violation of the side's
    // inequality. At most 0 means a valid witness for the side.
    let objective = |ratios: &[f64]| -> f64 {
        let realizer = ratios_to_realizer(ratios);
        let mut worst = f64::NEG_INFINITY;
        for sum in sums {
            let value = eval_angle_sum(sum, &realizer);
            let violation = match side {
                WitnessSide::Rho => value - TAU,
                WitnessSide::Sigma => TAU - value,
            };
            worst = worst.max(violation);
        }
        worst
    };

    let dims = n - 1;
    let seed_values = [1.0, 0.6, 0.3, 0.1, 0.02];
    // Product grid up to six ratio coordinates; past that the grid explodes,
    // so fall back to the uniform-ratio diagonal.
    let seeds: Vec<Vec<f64>> = if dims <= 6 {
        let mut seeds: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..dims {
            seeds = seeds
                .into_iter()
                .flat_map(|prefix| {
                    seed_values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        seeds
    } else {
        seed_values.iter().map(|&v| vec![v; dims]).collect()
    };
    let mut scored: Vec<(f64, Vec<f64>)> =
        seeds.into_iter().map(|s| (objective(&s), s)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(4);

    let descents = par::map(exec, &scored, |(_, seed)| {
        pattern_search(&objective, seed.clone())
    });
    let (best_ratios, best_value) = descents.into_iter().min_by(|a, b| a.1.total_cmp(&b.1))?;
    if best_value <= DEFAULT_SLACK_TOL {
        Some((ratios_to_realizer(&best_ratios), -best_value))
    } else {
        None
    }
}

/// Multiplicative coordinate pattern search on `(RATIO_FLOOR, 1]^dims`.
fn pattern_search(objective: &(dyn Fn(&[f64]) -> f64 + Sync), start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut point = start;
    let mut value = objective(&point);
    let mut step = 0.5_f64;
    while step > 1e-12 {
        let mut improved = false;
        for i in 0..point.len() {
            for factor in [step.exp(), (-step).exp()] {
                let candidate = (point[i] * factor).clamp(RATIO_FLOOR, 1.0);
                if candidate == point[i] {
                    continue;
                }
                let old = point[i];
                point[i] = candidate;
                let candidate_value = objective(&point);
                if candidate_value < value {
                    value = candidate_value;
                    improved = true;
                } else {
                    point[i] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        // Comfortably inside the witness region; no need to keep polishing.
        if value < -1e-3 {
            break;
        }
    }
    (point, value)
}

/// The shrink operator: keep codes with center at most `m-2`, replace every
/// symbol larger than `m-1` by `m-1`, and re-canonicalize over the alphabet
/// `{0..m-1}`.
pub fn shrink_essential(set: &CodeSet, m: usize) -> Result<CodeSet, SetsError> {
    let n = set.n();
    if n < 3 {
        return Err(SetsError::AlphabetTooSmall { n, needs: 3 });
    }
    if !(2..=n - 1).contains(&m) {
        return Err(SetsError::ShrinkRange { m, n });
    }
    let top = Symbol::new(m - 1);
    CodeSet::new(
        m,
        set.codes()
            .filter(|c| c.center().index() <= m - 2)
            .map(|c| c.downgrade(top)),
    )
}

/// Witness pair for a shrunk set, built from a witness for the original set:
/// the lower map is truncated to the smaller alphabet; the upper map is
/// truncated with its new top symbol taking the original top value.
pub fn shrink_witness(
    witness: &EssentialWitness,
    m: usize,
) -> Result<(Realizer, Realizer), SetsError> {
    let n = witness.rho.n();
    if witness.sigma.n() != n {
        return Err(SetsError::DomainMismatch {
            expected: n,
            found: witness.sigma.n(),
        });
    }
    if n < 3 {
        return Err(SetsError::AlphabetTooSmall { n, needs: 3 });
    }
    if !(2..=n - 1).contains(&m) {
        return Err(SetsError::ShrinkRange { m, n });
    }
    let rho = Realizer::new(witness.rho.values()[..m].to_vec()).expect("positive prefix");
    let mut sigma_values = witness.sigma.values()[..m].to_vec();
    sigma_values[m - 1] = witness.sigma.values()[n - 1];
    let sigma = Realizer::new(sigma_values).expect("positive prefix");
    Ok((rho, sigma))
}

/// The bootstrap ratio inequality: for a fundamental set and maps with every
/// angle sum at most a full turn under `rho` and at least a full turn under
/// `sigma`,
///
/// ```text
/// sigma(n-2)/sigma(n-1) <= rho(n-2)/rho(n-1)
/// ```
///
/// Neither map needs to be monotone or normalized. Hypothesis violations are
/// reported as errors, distinct from the inequality itself failing; on
/// hypothesis-satisfying inputs a `false` is either a bug or a
/// counterexample, and the test suite treats it as failure.
pub fn bootstrap_ratio_check(
    set: &CodeSet,
    rho: &Realizer,
    sigma: &Realizer,
    tol: f64,
) -> Result<bool, SetsError> {
    let n = set.n();
    if n < 2 {
        return Err(SetsError::AlphabetTooSmall { n, needs: 2 });
    }
    for map in [rho, sigma] {
        if map.n() != n {
            return Err(SetsError::DomainMismatch {
                expected: n,
                found: map.n(),
            });
        }
    }
    if !is_fundamental(set) {
        return Err(SetsError::NotFundamental);
    }
    for code in set.codes() {
        let sum = code.angle_sum();
        let below = eval_angle_sum(&sum, rho);
        if below > TAU + tol {
            return Err(SetsError::HypothesisViolated {
                side: WitnessSide::Rho,
                code: code.to_string(),
                angle_sum: below,
            });
        }
        let above = eval_angle_sum(&sum, sigma);
        if above < TAU - tol {
            return Err(SetsError::HypothesisViolated {
                side: WitnessSide::Sigma,
                code: code.to_string(),
                angle_sum: above,
            });
        }
    }
    let lhs = sigma.values()[n - 2] / sigma.values()[n - 1];
    let rhs = rho.values()[n - 2] / rho.values()[n - 1];
    Ok(lhs <= rhs + tol)
}

/// Universal code-length bound from a lower bound `kappa0` on the ratio of
/// the smallest to the second-largest size: the floor of a full turn divided
/// by the angle at a disc of the second-largest size flanked by two discs of
/// radius `kappa0` times it.
///
/// The pre-floor ratio gets a 1e-9 nudge so exact integer boundaries (such
/// as the equal-radii case, whose angle is exactly sixty degrees) don't
/// round down on floating-point noise.
pub fn length_bound(n: usize, kappa0: f64) -> Result<u64, SetsError> {
    if n < 2 {
        return Err(SetsError::AlphabetTooSmall { n, needs: 2 });
    }
    if !(kappa0 > 0.0 && kappa0 <= 1.0) {
        return Err(SetsError::KappaOutOfRange(kappa0));
    }
    let ratio = kappa0 / (1.0 + kappa0);
    let angle = (1.0 - 2.0 * ratio * ratio).acos();
    Ok((TAU / angle + 1e-9).floor() as u64)
}
