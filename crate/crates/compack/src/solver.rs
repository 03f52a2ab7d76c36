//! Tight-realizer solving.
//!
//! A system pins every code's realized angle sum to a full turn, with the
//! top symbol's radius fixed at 1 and the remaining radii unknown. Binary
//! center-0 codes get a dedicated 1-D bisection exploiting the strict
//! decrease of the angle sum in the center radius; general systems go
//! through damped Newton with the analytic Jacobian from a multistart grid,
//! in log coordinates so positivity never needs explicit constraints.
//! Non-square systems take the minimum-norm / least-squares step, so a
//! single underdetermined code still yields converged points spread over its
//! solution curve, and the clustering in the report shows the
//! non-uniqueness.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codes::{AngleSum, CoronalCode, Symbol};
use crate::par::{self, Exec};
use crate::realize::{eval_angle_sum, grad_angle_sum, Realizer};
use crate::sets::CodeSet;

/// Converged normalized solutions closer than this (max coordinate
/// difference) count as the same solution.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Left end of the bisection interval for the center radius.
const BISECT_LEFT: f64 = 1e-9;
/// Residual target for the bisection.
const BISECT_TOL: f64 = 1e-12;

/// Log-radius box for the Newton iterates; steps are clamped into it.
const LOG_RADIUS_MIN: f64 = -18.5; // about 9e-9
const LOG_RADIUS_MAX: f64 = 9.3; // about 1.1e4

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("system has no codes")]
    EmptySystem,
    #[error("code {code} uses symbols outside the alphabet of size {n}")]
    SymbolOutOfRange { code: String, n: usize },
    #[error("code {0} is not a binary code over {{0, 1}}")]
    NotBinary(String),
    #[error("code {0} does not have center 0")]
    NotSmallCenter(String),
    #[error(
        "code has constant angle sum {len} * pi/3 and cannot be tightly realized (length {len})"
    )]
    DegenerateConstant { len: usize },
    #[error("multistart grid of {0} starts exceeds the budget of {MAX_STARTS}")]
    TooManyStarts(u128),
}

/// Upper bound on multistart grid size; `grid^(n-1)` beyond this is refused.
pub const MAX_STARTS: u128 = 200_000;

/// Knobs for [`solve_tight`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Max-norm residual below which a point counts as converged.
    pub tol: f64,
    /// Newton iteration budget per start.
    pub max_iter: usize,
    /// Grid resolution per unknown, log-spaced over `[0.02, 1]`.
    pub grid: usize,
    /// When set, jitters the grid multiplicatively; reproducible per seed.
    pub seed: Option<u64>,
    /// Execution strategy for the independent starts.
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 100,
            grid: 9,
            seed: None,
            exec: Exec::default(),
        }
    }
}

/// The equations `angle_sum(x) = 2 pi`, one per code, over the unknown radii
/// of symbols `0..n-2` with symbol `n-1` fixed at radius 1.
#[derive(Debug, Clone)]
pub struct TightSystem {
    n: usize,
    codes: Vec<CoronalCode>,
    sums: Vec<AngleSum>,
}

impl TightSystem {
    pub fn new(set: &CodeSet) -> Result<Self, SolverError> {
        TightSystem::from_codes(set.n(), set.codes().cloned())
    }

    pub fn from_codes(
        n: usize,
        codes: impl IntoIterator<Item = CoronalCode>,
    ) -> Result<Self, SolverError> {
        let codes: Vec<CoronalCode> = codes.into_iter().collect();
        if codes.is_empty() || n == 0 {
            return Err(SolverError::EmptySystem);
        }
        for code in &codes {
            if code.max_symbol().index() >= n {
                return Err(SolverError::SymbolOutOfRange {
                    code: code.to_string(),
                    n,
                });
            }
        }
        let sums = codes.iter().map(|c| c.angle_sum()).collect();
        Ok(TightSystem { n, codes, sums })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codes(&self) -> &[CoronalCode] {
        &self.codes
    }

    pub fn unknowns(&self) -> usize {
        self.n - 1
    }
}

/// Component `x` is `angle_sum(x)|rho - 2 pi`. Realized angle sums are scale
/// invariant, so the convention that `rho` is normalized costs nothing here.
pub fn residual(system: &TightSystem, rho: &Realizer) -> Vec<f64> {
    system
        .sums
        .iter()
        .map(|sum| eval_angle_sum(sum, rho) - TAU)
        .collect()
}

fn residual_inf(system: &TightSystem, rho: &Realizer) -> f64 {
    residual(system, rho)
        .into_iter()
        .fold(0.0f64, |acc, r| acc.max(r.abs()))
}

/// Outcome of the 1-D bisection for a binary center-0 code.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryRootOutcome {
    /// The center radius in (0, 1) at which the angle sum is a full turn.
    Root { r: f64, residual: f64 },
    /// The angle sum crosses a full turn only at `r >= 1` or not at all; two
    /// distinct sizes require `r < 1` strictly.
    NoRootInRange,
    /// The all-`0` word of length six: the angle sum is a full turn for
    /// every radius, so no single root is determined.
    DegenerateHexagonal,
}

/// Bisection for the tight center radius of a code over `{0, 1}` with
/// center `0`, holding the petal-1 radius at 1.
///
/// Works because the angle sum is strictly decreasing in the center radius
/// whenever some petal is `1`. All-`0` petal words have the constant sum
/// `len * pi/3`: length six is flagged [`BinaryRootOutcome::DegenerateHexagonal`],
/// anything else is rejected as [`SolverError::DegenerateConstant`].
pub fn solve_center0_binary(code: &CoronalCode) -> Result<BinaryRootOutcome, SolverError> {
    if code.center() != Symbol::new(0) {
        return Err(SolverError::NotSmallCenter(code.to_string()));
    }
    if code.max_symbol().index() > 1 {
        return Err(SolverError::NotBinary(code.to_string()));
    }
    if code.petals().iter().all(|&p| p == Symbol::new(0)) {
        return if code.len() == 6 {
            Ok(BinaryRootOutcome::DegenerateHexagonal)
        } else {
            Err(SolverError::DegenerateConstant { len: code.len() })
        };
    }
    let sum = code.angle_sum();
    let f = |r: f64| eval_angle_sum(&sum, &Realizer::new(vec![r, 1.0]).unwrap()) - TAU;

    let mut lo = BISECT_LEFT;
    let mut hi = 1.0;
    let f_lo = f(lo);
    let f_hi = f(hi);
    // f is strictly decreasing: a root in (0, 1) needs f > 0 on the left and
    // f < 0 at 1. A root exactly at r = 1 is excluded.
    if f_hi >= -BISECT_TOL || f_lo <= 0.0 {
        return Ok(BinaryRootOutcome::NoRootInRange);
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= BISECT_TOL {
            break;
        }
        if f_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            break;
        }
    }
    Ok(BinaryRootOutcome::Root {
        r: mid,
        residual: f(mid).abs(),
    })
}

/// What the multistart Newton run found.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The unique strictly monotone normalized solution, when exactly one
    /// cluster of them exists: the canonical-realizer candidate.
    pub solution: Option<Realizer>,
    /// Max-norm residual of `solution`, re-evaluated through [`residual`];
    /// otherwise the best residual over all clusters, infinite when nothing
    /// converged.
    pub residual_inf: f64,
    pub starts_tried: usize,
    /// Number of distinct normalized solutions after clustering at
    /// [`CLUSTER_TOL`] (monotone or not).
    pub distinct_solutions_found: usize,
    /// One representative per cluster, in first-found order.
    pub clusters: Vec<Realizer>,
    /// The strictly monotone clusters. Strictness is judged with a
    /// [`CLUSTER_TOL`] separation margin: adjacent radii closer than the
    /// clustering resolution cannot honestly be called distinct sizes.
    pub monotone_clusters: Vec<Realizer>,
    /// More than one monotone cluster survived: for a fundamental system
    /// this contradicts uniqueness of the normalized tight realizer, so it
    /// flags either non-fundamentality or a tolerance failure.
    pub ambiguous_monotone: bool,
}

/// Damped Newton in log-radius coordinates from a multistart grid over
/// `(0, 1]^(n-1)`.
///
/// Every converged point is normalized (the top radius is pinned at 1
/// throughout), clustered at [`CLUSTER_TOL`], and re-verified through
/// [`residual`]. Non-square systems use the SVD least-squares /
/// minimum-norm step; overdetermined systems are accepted only if they
/// actually reach the residual tolerance.
pub fn solve_tight(system: &TightSystem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    let unknowns = system.unknowns();
    if unknowns == 0 {
        // Nothing to solve: the single-size realizer either is tight or not.
        let rho = Realizer::new(vec![1.0]).unwrap();
        let res = residual_inf(system, &rho);
        let converged = res <= config.tol;
        return Ok(SolveReport {
            solution: converged.then(|| rho.clone()),
            residual_inf: res,
            starts_tried: 1,
            distinct_solutions_found: usize::from(converged),
            clusters: if converged { vec![rho.clone()] } else { vec![] },
            monotone_clusters: if converged { vec![rho] } else { vec![] },
            ambiguous_monotone: false,
        });
    }

    let starts = multistart_grid(unknowns, config)?;
    let starts_tried = starts.len();
    let solutions = par::map_into(config.exec, starts, |start| {
        newton_from_start(system, start, config)
    });

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for candidate in solutions.into_iter().flatten() {
        let is_new = clusters
            .iter()
            .all(|rep| max_abs_diff(rep, &candidate) > CLUSTER_TOL);
        if is_new {
            clusters.push(candidate);
        }
    }
    let clusters: Vec<Realizer> = clusters
        .into_iter()
        .map(|values| Realizer::new(values).expect("positive radii"))
        .collect();
    let monotone_clusters: Vec<Realizer> = clusters
        .iter()
        .filter(|r| strictly_monotone_separated(r.values()))
        .cloned()
        .collect();
    let ambiguous_monotone = monotone_clusters.len() > 1;
    let solution = if monotone_clusters.len() == 1 {
        Some(monotone_clusters[0].clone())
    } else {
        None
    };
    let residual_inf_value = match &solution {
        Some(rho) => residual_inf(system, rho),
        None => clusters
            .iter()
            .map(|rho| residual_inf(system, rho))
            .fold(f64::INFINITY, f64::min),
    };
    Ok(SolveReport {
        solution,
        residual_inf: residual_inf_value,
        starts_tried,
        distinct_solutions_found: clusters.len(),
        clusters,
        monotone_clusters,
        ambiguous_monotone,
    })
}

/// Strictly increasing with at least [`CLUSTER_TOL`] between consecutive
/// radii; a solution at the boundary of two sizes coinciding (for example a
/// root at exactly 1) is not a two-size solution.
fn strictly_monotone_separated(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] - w[0] > CLUSTER_TOL)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Log-radius start points: `grid` values per unknown, log-spaced over
/// `[0.02, 1]`, optionally jittered by up to half a grid cell.
fn multistart_grid(unknowns: usize, config: &SolverConfig) -> Result<Vec<Vec<f64>>, SolverError> {
    let grid = config.grid.max(1);
    let total = (grid as u128).checked_pow(unknowns as u32);
    match total {
        Some(t) if t <= MAX_STARTS => {}
        Some(t) => return Err(SolverError::TooManyStarts(t)),
        None => return Err(SolverError::TooManyStarts(u128::MAX)),
    }

    let lo = 0.02f64.ln();
    let spacing = if grid > 1 { -lo / (grid - 1) as f64 } else { 0.0 };
    let axis: Vec<f64> = (0..grid).map(|i| lo + spacing * i as f64).collect();

    let mut rng = config.seed.map(ChaCha8Rng::seed_from_u64);
    let mut starts: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..unknowns {
        starts = starts
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    if let Some(rng) = rng.as_mut() {
        let half = 0.5 * if spacing > 0.0 { spacing } else { 0.5 };
        for start in &mut starts {
            for u in start.iter_mut() {
                *u += rng.random_range(-half..=half);
            }
        }
    }
    Ok(starts)
}

/// One damped Newton run; returns the full normalized radius vector on
/// convergence, `None` when the start diverges or stalls.
fn newton_from_start(
    system: &TightSystem,
    mut u: Vec<f64>,
    config: &SolverConfig,
) -> Option<Vec<f64>> {
    let unknowns = u.len();
    let realizer_of = |u: &[f64]| -> Realizer {
        let mut values: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        values.push(1.0);
        Realizer::new(values).expect("exp keeps radii positive")
    };

    for _ in 0..config.max_iter {
        let rho = realizer_of(&u);
        let f = DVector::from_vec(residual(system, &rho));
        if f.amax() <= config.tol {
            return Some(rho.values().to_vec());
        }

        // d angle_sum / d u_j = (d angle_sum / d rho_j) * rho_j.
        let mut jac = DMatrix::zeros(system.sums.len(), unknowns);
        for (row, sum) in system.sums.iter().enumerate() {
            let grad = grad_angle_sum(sum, &rho);
            for col in 0..unknowns {
                jac[(row, col)] = grad[col] * rho.values()[col];
            }
        }
        let svd = jac.svd(true, true);
        let step = svd.solve(&(-&f), 1e-13).ok()?;
        if step.iter().any(|x| !x.is_finite()) {
            return None;
        }

        let base_norm = f.norm_squared();
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1e-12 {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(&ui, &si)| (ui + lambda * si).clamp(LOG_RADIUS_MIN, LOG_RADIUS_MAX))
                .collect();
            let trial_f = DVector::from_vec(residual(system, &realizer_of(&trial)));
            if trial_f.norm_squared() < base_norm {
                u = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}
