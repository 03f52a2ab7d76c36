//! Numeric evaluation of angle symbols, angle sums, and their analytic
//! partial derivatives at a realizer.
//!
//! An angle symbol with vertex `c` and petals `{a, b}` stands for the angle
//! at the center of disc `c` in a mutually tangent triple with discs `a` and
//! `b`:
//!
//! ```text
//! angle = arccos( ((c+a)^2 + (c+b)^2 - (a+b)^2) / (2 (c+a) (c+b)) )
//! ```
//!
//! where the letters denote the realized radii. The partial derivatives have
//! closed forms that depend only on which of the symbols coincide; the
//! dispatcher below pattern-matches on those coincidences. Correctness of
//! the dispatch is property-tested against central finite differences of the
//! angle itself.

use std::fmt;

use thiserror::Error;

use crate::codes::{AngleSum, Symbol};

/// Slack allowed before clamping an arccos argument is treated as a bug.
/// For positive radii the argument is analytically inside [-1, 1]; anything
/// further out than this signals broken inputs rather than roundoff.
const ACOS_GUARD: f64 = 1e-12;

/// Vertex plus unordered petal pair. `AngleSymbol::new(c, a, b)` and
/// `AngleSymbol::new(c, b, a)` are the same value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AngleSymbol {
    vertex: Symbol,
    petals: (Symbol, Symbol),
}

impl AngleSymbol {
    pub fn new(vertex: Symbol, a: Symbol, b: Symbol) -> Self {
        let petals = if a <= b { (a, b) } else { (b, a) };
        AngleSymbol { vertex, petals }
    }

    pub fn vertex(self) -> Symbol {
        self.vertex
    }

    /// The unordered petal pair, in ascending symbol order.
    pub fn petal_pair(self) -> (Symbol, Symbol) {
        self.petals
    }
}

impl fmt::Display for AngleSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}{})", self.vertex, self.petals.0, self.petals.1)
    }
}

/// Errors from constructing or parsing realizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizerError {
    #[error("realizer must assign at least one value")]
    Empty,
    #[error("realizer value for symbol {symbol} is {value}; values must be positive and finite")]
    NonPositive { symbol: usize, value: f64 },
    #[error("malformed realizer line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("realizer file assigns symbol {0} twice")]
    Duplicate(usize),
    #[error("realizer file misses symbol {0}")]
    MissingSymbol(usize),
}

/// Assignment of a positive radius to every symbol `0..n-1`.
///
/// *Normalized* means the top symbol maps to exactly 1; *monotone* means the
/// values are non-decreasing in symbol order.
#[derive(Debug, Clone, PartialEq)]
pub struct Realizer {
    values: Vec<f64>,
}

impl Realizer {
    pub fn new(values: Vec<f64>) -> Result<Self, RealizerError> {
        if values.is_empty() {
            return Err(RealizerError::Empty);
        }
        for (symbol, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(RealizerError::NonPositive { symbol, value });
            }
        }
        Ok(Realizer { values })
    }

    /// All symbols mapped to the same value.
    pub fn constant(n: usize, value: f64) -> Result<Self, RealizerError> {
        Realizer::new(vec![value; n])
    }

    /// Size of the symbol domain.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Radius of `symbol`. Panics if the symbol is outside the domain; the
    /// callers own that precondition.
    pub fn value(&self, symbol: Symbol) -> f64 {
        self.values[symbol.index()]
    }

    pub fn get(&self, symbol: Symbol) -> Option<f64> {
        self.values.get(symbol.index()).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True iff the top symbol maps to exactly 1.
    pub fn is_normalized(&self) -> bool {
        *self.values.last().expect("non-empty") == 1.0
    }

    /// Non-decreasing in symbol order.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Strictly increasing in symbol order.
    pub fn is_strictly_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// Rescales so the top symbol maps to exactly 1.
    pub fn normalized(&self) -> Realizer {
        let top = *self.values.last().expect("non-empty");
        Realizer {
            values: self.values.iter().map(|v| v / top).collect(),
        }
    }

    pub fn scaled(&self, lambda: f64) -> Result<Realizer, RealizerError> {
        Realizer::new(self.values.iter().map(|v| v * lambda).collect())
    }

    /// Parses the `symbol value` line format used by witness files.
    /// `#` comments and blank lines are allowed; the symbols must cover
    /// `0..n-1` exactly once each.
    pub fn parse_text(text: &str) -> Result<Self, RealizerError> {
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| RealizerError::Malformed {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split_whitespace();
            let symbol: usize = parts
                .next()
                .ok_or_else(|| malformed("missing symbol"))?
                .parse()
                .map_err(|_| malformed("symbol must be a non-negative integer"))?;
            if symbol >= crate::codes::MAX_ALPHABET {
                return Err(malformed("symbol exceeds the base-36 alphabet"));
            }
            let value: f64 = parts
                .next()
                .ok_or_else(|| malformed("missing value"))?
                .parse()
                .map_err(|_| malformed("value must be a decimal number"))?;
            if parts.next().is_some() {
                return Err(malformed("expected exactly `symbol value`"));
            }
            pairs.push((symbol, value));
        }
        if pairs.is_empty() {
            return Err(RealizerError::Empty);
        }
        let n = pairs.iter().map(|&(s, _)| s).max().expect("non-empty") + 1;
        let mut values = vec![f64::NAN; n];
        for (symbol, value) in pairs {
            if !values[symbol].is_nan() {
                return Err(RealizerError::Duplicate(symbol));
            }
            values[symbol] = value;
        }
        if let Some(missing) = values.iter().position(|v| v.is_nan()) {
            return Err(RealizerError::MissingSymbol(missing));
        }
        Realizer::new(values)
    }

    /// Inverse of [`parse_text`](Self::parse_text).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (symbol, value) in self.values.iter().enumerate() {
            out.push_str(&format!("{symbol} {value:.17}\n"));
        }
        out
    }
}

/// Realized angle in radians, in (0, pi).
///
/// Panics if the arccos argument leaves [-1, 1] by more than a guard of
/// 1e-12 after evaluation. That is analytically impossible for positive
/// radii, so it signals an internal bug rather than a data error.
pub fn eval_angle(sym: AngleSymbol, rho: &Realizer) -> f64 {
    let c = rho.value(sym.vertex);
    let (a, b) = (rho.value(sym.petals.0), rho.value(sym.petals.1));
    let num = (c + a).powi(2) + (c + b).powi(2) - (a + b).powi(2);
    let den = 2.0 * (c + a) * (c + b);
    let arg = num / den;
    assert!(
        arg.is_finite() && arg.abs() <= 1.0 + ACOS_GUARD,
        "arccos argument {arg} out of range for angle symbol {sym} at radii ({c}, {a}, {b})"
    );
    arg.clamp(-1.0, 1.0).acos()
}

/// Analytic partial derivative of the realized angle with respect to the
/// radius of `wrt`.
///
/// Non-positive when `wrt` is the vertex, non-negative otherwise, zero when
/// `wrt` does not occur in the symbol. Coincidence dispatch is on symbol
/// equality, not on value equality: distinct symbols with equal radii are
/// evaluated with the generic formulas, which remain valid there.
pub fn partial_angle(sym: AngleSymbol, wrt: Symbol, rho: &Realizer) -> f64 {
    let (p_sym, q_sym) = sym.petals;
    if wrt != sym.vertex && wrt != p_sym && wrt != q_sym {
        return 0.0;
    }
    let v = rho.value(sym.vertex);
    let p = rho.value(p_sym);
    let q = rho.value(q_sym);

    if wrt == sym.vertex {
        if p_sym == sym.vertex && q_sym == sym.vertex {
            // The symbol whose three entries coincide realizes to pi/3 for
            // every radius.
            return 0.0;
        }
        if p_sym == sym.vertex || q_sym == sym.vertex {
            // Exactly one petal coincides with the vertex; the derivative
            // accounts for both occurrences of the symbol.
            let o = if p_sym == sym.vertex { q } else { p };
            return -o / ((v + o) * (o * o + 2.0 * o * v).sqrt());
        }
        // Vertex distinct from both petals (the petals may coincide).
        return -((p + q + 2.0 * v) * (p * q).sqrt())
            / ((v + p) * (v + q) * v.sqrt() * (p + q + v).sqrt());
    }

    // wrt is a petal distinct from the vertex.
    if p_sym == q_sym {
        // Both petals carry the symbol; two occurrences contribute.
        let w = p;
        return 2.0 * v.sqrt() / ((v + w) * (2.0 * w + v).sqrt());
    }
    let (w, o_sym, o) = if wrt == p_sym {
        (p, q_sym, q)
    } else {
        (q, p_sym, p)
    };
    if o_sym == sym.vertex {
        // The other petal is the vertex symbol.
        return v / ((v + w) * (w * w + 2.0 * w * v).sqrt());
    }
    (o * v).sqrt() / ((v + w) * w.sqrt() * (w + o + v).sqrt())
}

/// Realized angle sum in radians: multiplicity-weighted sum of the terms.
pub fn eval_angle_sum(sum: &AngleSum, rho: &Realizer) -> f64 {
    sum.terms()
        .map(|(sym, mult)| f64::from(mult) * eval_angle(sym, rho))
        .sum()
}

/// Gradient of the realized angle sum, indexed by symbol over the whole
/// realizer domain. Components for symbols absent from the sum are zero, and
/// the gradient is orthogonal to `rho` itself (realized angles are invariant
/// under positive scaling).
pub fn grad_angle_sum(sum: &AngleSum, rho: &Realizer) -> Vec<f64> {
    let mut grad = vec![0.0; rho.n()];
    for (sym, mult) in sum.terms() {
        let weight = f64::from(mult);
        let mut symbols = [sym.vertex(), sym.petal_pair().0, sym.petal_pair().1];
        symbols.sort_unstable();
        let mut last = None;
        for &s in &symbols {
            if last == Some(s) {
                continue;
            }
            last = Some(s);
            grad[s.index()] += weight * partial_angle(sym, s, rho);
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CoronalCode;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sym(v: usize) -> Symbol {
        Symbol::new(v)
    }

    fn rho(values: &[f64]) -> Realizer {
        Realizer::new(values.to_vec()).unwrap()
    }

    /// Central finite difference of the realized angle; the ground truth for
    /// the derivative dispatcher.
    fn fd_partial(sym_: AngleSymbol, wrt: Symbol, base: &Realizer, step: f64) -> f64 {
        let mut up = base.values().to_vec();
        let mut down = base.values().to_vec();
        up[wrt.index()] += step;
        down[wrt.index()] -= step;
        let f_up = eval_angle(sym_, &Realizer::new(up).unwrap());
        let f_down = eval_angle(sym_, &Realizer::new(down).unwrap());
        (f_up - f_down) / (2.0 * step)
    }

    #[test]
    fn equal_radii_give_sixty_degrees() {
        let r = rho(&[0.7]);
        let angle = eval_angle(AngleSymbol::new(sym(0), sym(0), sym(0)), &r);
        assert_abs_diff_eq!(angle, PI / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn right_angle_at_sqrt2_minus_1() {
        let r = rho(&[2f64.sqrt() - 1.0, 1.0]);
        let angle = eval_angle(AngleSymbol::new(sym(0), sym(1), sym(1)), &r);
        assert_abs_diff_eq!(angle, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_thirds_pi_at_small_triangle_radius() {
        let r = rho(&[2.0 / 3f64.sqrt() - 1.0, 1.0]);
        let angle = eval_angle(AngleSymbol::new(sym(0), sym(1), sym(1)), &r);
        assert_abs_diff_eq!(angle, 2.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_examples() {
        // d/d0 of the angle at vertex 1 with petals {0,0}, all radii 1.
        let r = rho(&[1.0, 1.0]);
        let sym_100 = AngleSymbol::new(sym(1), sym(0), sym(0));
        assert_abs_diff_eq!(
            partial_angle(sym_100, sym(0), &r),
            1.0 / 3f64.sqrt(),
            epsilon = 1e-15
        );
        // Differentiating by a symbol absent from the angle symbol.
        let r4 = rho(&[0.3, 0.6, 0.9, 1.0]);
        let sym_102 = AngleSymbol::new(sym(1), sym(0), sym(2));
        assert_eq!(partial_angle(sym_102, sym(3), &r4), 0.0);
        // Vertex derivative matches finite differences.
        let got = partial_angle(sym_100, sym(1), &r);
        let fd = fd_partial(sym_100, sym(1), &r, 1e-6);
        assert!(got < 0.0);
        assert!((got - fd).abs() <= 1e-6 * fd.abs().max(got.abs()));
    }

    #[test]
    fn vertex_self_symbol_has_zero_derivative() {
        let r = rho(&[0.4]);
        let all0 = AngleSymbol::new(sym(0), sym(0), sym(0));
        assert_eq!(partial_angle(all0, sym(0), &r), 0.0);
        assert_eq!(fd_partial(all0, sym(0), &r, 1e-6), 0.0);
    }

    /// Every coincidence pattern of (vertex, petal, petal, wrt) symbols,
    /// checked against central finite differences over random radii.
    #[test]
    fn derivative_table_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let n = 4;
        let mut cases = 0usize;
        while cases < 1500 {
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
            let base = Realizer::new(values).unwrap();
            let vertex = sym(rng.random_range(0..n));
            let a = sym(rng.random_range(0..n));
            let b = sym(rng.random_range(0..n));
            let wrt = sym(rng.random_range(0..n));
            let symbol = AngleSymbol::new(vertex, a, b);
            let analytic = partial_angle(symbol, wrt, &base);
            let fd = fd_partial(symbol, wrt, &base, 1e-6);
            let tol = 1e-6 * analytic.abs().max(fd.abs()) + 1e-9;
            assert!(
                (analytic - fd).abs() <= tol,
                "dispatch mismatch for {symbol} d/d{wrt}: analytic {analytic}, fd {fd}"
            );
            // Sign cases: non-positive toward the vertex, non-negative
            // toward anything else.
            if wrt == vertex {
                assert!(analytic <= 0.0);
            } else {
                assert!(analytic >= 0.0);
            }
            cases += 1;
        }
    }

    #[test]
    fn angle_sum_examples() {
        let tight = rho(&[2f64.sqrt() - 1.0, 1.0]);
        let square = CoronalCode::parse("0:1111", 2).unwrap().angle_sum();
        assert_abs_diff_eq!(eval_angle_sum(&square, &tight), 2.0 * PI, epsilon = 1e-12);

        let hex = CoronalCode::parse("0:000000", 1).unwrap().angle_sum();
        assert_abs_diff_eq!(
            eval_angle_sum(&hex, &rho(&[0.37])),
            2.0 * PI,
            epsilon = 1e-12
        );

        let triangle = CoronalCode::parse("0:111", 2).unwrap().angle_sum();
        assert_abs_diff_eq!(
            eval_angle_sum(&triangle, &rho(&[1.0, 1.0])),
            PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gradient_signs_for_square_corona() {
        let tight = rho(&[2f64.sqrt() - 1.0, 1.0]);
        let square = CoronalCode::parse("0:1111", 2).unwrap().angle_sum();
        let grad = grad_angle_sum(&square, &tight);
        assert!(grad[0] < 0.0);
        assert!(grad[1] > 0.0);
    }

    #[test]
    fn gradient_zero_for_absent_symbol() {
        let square = CoronalCode::parse("0:1111", 3).unwrap().angle_sum();
        let grad = grad_angle_sum(&square, &rho(&[0.4, 0.8, 1.0]));
        assert_eq!(grad[2], 0.0);
    }

    #[test]
    fn gradient_is_orthogonal_to_the_realizer() {
        // Degree-0 homogeneity: <grad, rho> = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..200 {
            let n = rng.random_range(2..=4);
            let len = rng.random_range(1..=8);
            let center = sym(rng.random_range(0..n));
            let petals: Vec<Symbol> =
                (0..len).map(|_| sym(rng.random_range(0..n))).collect();
            let code = CoronalCode::new(center, &petals).unwrap();
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
            let r = Realizer::new(values).unwrap();
            let grad = grad_angle_sum(&code.angle_sum(), &r);
            let dot: f64 = grad
                .iter()
                .zip(r.values())
                .map(|(g, v)| g * v)
                .sum();
            assert!(dot.abs() <= 1e-9, "homogeneity violated: <grad, rho> = {dot}");
        }
    }

    #[test]
    fn angle_sums_are_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let len = rng.random_range(1..=7);
            let center = sym(rng.random_range(0..n));
            let petals: Vec<Symbol> =
                (0..len).map(|_| sym(rng.random_range(0..n))).collect();
            let sum = CoronalCode::new(center, &petals).unwrap().angle_sum();
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
            let r = Realizer::new(values).unwrap();
            let lambda = rng.random_range(0.01..=100.0);
            let scaled = r.scaled(lambda).unwrap();
            assert!(
                (eval_angle_sum(&sum, &r) - eval_angle_sum(&sum, &scaled)).abs() <= 1e-12
            );
        }
    }

    #[test]
    fn angle_sum_strictly_increases_in_petal_directions() {
        // With v(center) = 0, v >= 0 and v positive on some petal, the map
        // t -> realized angle sum along rho + t v is strictly increasing.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
        let mut trials = 0usize;
        while trials < 300 {
            let n = rng.random_range(2..=4);
            let len = rng.random_range(1..=7);
            let center = sym(rng.random_range(0..n));
            let petals: Vec<Symbol> =
                (0..len).map(|_| sym(rng.random_range(0..n))).collect();
            let Some(&push_petal) = petals.iter().find(|&&p| p != center) else {
                continue;
            };
            let code = CoronalCode::new(center, &petals).unwrap();
            let sum = code.angle_sum();
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
            let mut v = vec![0.0; n];
            for (s, slot) in v.iter_mut().enumerate() {
                if s != center.index() && rng.random_bool(0.5) {
                    *slot = rng.random_range(0.1..=1.0);
                }
            }
            v[push_petal.index()] = rng.random_range(0.1..=1.0);
            let mut previous = f64::NEG_INFINITY;
            for step in 0..=20 {
                let t = 0.1 * f64::from(step);
                let shifted: Vec<f64> = values
                    .iter()
                    .zip(&v)
                    .map(|(base, dir)| base + t * dir)
                    .collect();
                let value = eval_angle_sum(&sum, &Realizer::new(shifted).unwrap());
                assert!(
                    value > previous,
                    "angle sum not strictly increasing at t = {t}"
                );
                previous = value;
            }
            trials += 1;
        }
    }

    #[test]
    fn realizer_predicates() {
        let r = rho(&[0.2, 0.5, 1.0]);
        assert!(r.is_normalized());
        assert!(r.is_monotone());
        assert!(r.is_strictly_monotone());
        let flat = rho(&[0.5, 0.5, 1.0]);
        assert!(flat.is_monotone());
        assert!(!flat.is_strictly_monotone());
        let scaled = r.scaled(3.0).unwrap();
        assert!(!scaled.is_normalized());
        assert!(scaled.normalized().is_normalized());
        assert!(Realizer::new(vec![0.1, -1.0]).is_err());
        assert!(Realizer::new(vec![]).is_err());
    }

    #[test]
    fn realizer_text_round_trip() {
        let r = rho(&[0.25, 0.6, 1.0]);
        let parsed = Realizer::parse_text(&r.to_text()).unwrap();
        assert_eq!(parsed, r);
        let manual = Realizer::parse_text("# witness\n1 1.0\n0 0.5\n").unwrap();
        assert_eq!(manual.values(), &[0.5, 1.0]);
        assert!(matches!(
            Realizer::parse_text("0 0.5\n2 1.0\n"),
            Err(RealizerError::MissingSymbol(1))
        ));
        assert!(matches!(
            Realizer::parse_text("0 0.5\n0 1.0\n"),
            Err(RealizerError::Duplicate(0))
        ));
        assert!(matches!(
            Realizer::parse_text("0 abc\n"),
            Err(RealizerError::Malformed { line: 1, .. })
        ));
    }
}
