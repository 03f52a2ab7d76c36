//! Geometric packing patches: ingestion, tangency detection, corona
//! extraction, canonical labeling, and verification.
//!
//! A patch is a finite collection of closed discs with pairwise disjoint
//! interiors. Discs the caller marks `interior` are asserted to have their
//! full corona inside the patch; everything else is boundary material and
//! only participates as petals. Finite patches need that explicit flag;
//! inferring a boundary from the hull would be guesswork.
//!
//! The file format is JSON: `{"discs": [{"x": .., "y": .., "r": ..,
//! "interior": true|false}, ..]}`.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CoronalCode, Symbol, MAX_ALPHABET};
use crate::par::{self, Exec};
use crate::realize::Realizer;
use crate::sets::{extract_fundamental, CodeSet, SetsError};
use crate::solver::{solve_tight, SolverConfig, SolverError, TightSystem};

/// Default length tolerance for overlap and tangency tests.
pub const DEFAULT_GEOM_TOL: f64 = 1e-7;

/// Relative tolerance for clustering radii into size classes.
pub const RADIUS_CLASS_TOL: f64 = 1e-7;

/// Tolerance in radians for the corona angle-closure check. Sized with
/// headroom over the angular error a tangency-tolerance perturbation can
/// cause on a twelve-petal ring of radii down to 0.05.
pub const ANGLE_SUM_TOL: f64 = 1e-4;

/// Max componentwise difference allowed between measured radii and the
/// radii reconstructed from the patch's codes.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

/// A closed disc in the plane. `interior` marks discs whose full corona the
/// caller asserts lies inside the patch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Disc {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    #[serde(default)]
    pub interior: bool,
}

impl Disc {
    pub fn new(x: f64, y: f64, r: f64, interior: bool) -> Self {
        Disc { x, y, r, interior }
    }

    pub fn center_distance(&self, other: &Disc) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_tangent_to(&self, other: &Disc, tol: f64) -> bool {
        (self.center_distance(other) - (self.r + other.r)).abs() <= tol
    }
}

/// On-disk shape of a packing file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingFile {
    pub discs: Vec<Disc>,
}

/// Why a disc fails to have a valid corona.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CoronaDefect {
    /// Fewer than three tangent neighbours.
    TooFewNeighbors { found: usize },
    /// Consecutive (by polar angle) neighbours are not tangent to each
    /// other: the ring has a gap there.
    RingGap {
        petal: usize,
        next_petal: usize,
        separation: f64,
        required: f64,
    },
    /// The ring is tangent all around but the radii-derived angles do not
    /// close up to a full turn.
    AngleMismatch { total: f64 },
}

impl std::fmt::Display for CoronaDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoronaDefect::TooFewNeighbors { found } => {
                write!(f, "only {found} tangent neighbours (need at least 3)")
            }
            CoronaDefect::RingGap {
                petal,
                next_petal,
                separation,
                required,
            } => write!(
                f,
                "gap between petals {petal} and {next_petal}: center distance {separation} vs tangent distance {required}"
            ),
            CoronaDefect::AngleMismatch { total } => {
                write!(f, "petal angles sum to {total} instead of a full turn")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot read packing file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid packing file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("disc {index} has non-positive radius {r}")]
    NonPositiveRadius { index: usize, r: f64 },
    #[error("disc {index} has non-finite coordinates or radius")]
    NonFinite { index: usize },
    #[error("discs {first} and {second} overlap by {penetration}")]
    Overlap {
        first: usize,
        second: usize,
        penetration: f64,
    },
    #[error("packing has no discs")]
    Empty,
    #[error("packing has {0} size classes; codes support at most 36")]
    TooManySizes(usize),
    #[error("label class {label} has no interior disc: patch cannot exhibit its corona")]
    InsufficientPatch { label: usize },
    #[error("interior disc {disc} has no valid corona: {defect}")]
    CoronaInvalid { disc: usize, defect: CoronaDefect },
    #[error(transparent)]
    Sets(#[from] SetsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("no unique monotone solution reconstructs the radii ({distinct} clusters found)")]
    ReconstructionAmbiguous { distinct: usize },
}

/// A validated patch: discs, canonical labels (by increasing radius, equal
/// radii sharing a label), and the measured radius per label class.
#[derive(Debug, Clone)]
pub struct Packing {
    discs: Vec<Disc>,
    labels: Vec<usize>,
    class_radii: Vec<f64>,
}

impl Packing {
    /// Validates radii and coordinates, rejects overlaps beyond `tol`,
    /// clusters radii into size classes at [`RADIUS_CLASS_TOL`] relative,
    /// and assigns canonical labels.
    pub fn from_discs(discs: Vec<Disc>, tol: f64) -> Result<Self, GeometryError> {
        for (index, disc) in discs.iter().enumerate() {
            if !(disc.x.is_finite() && disc.y.is_finite() && disc.r.is_finite()) {
                return Err(GeometryError::NonFinite { index });
            }
            if disc.r <= 0.0 {
                return Err(GeometryError::NonPositiveRadius {
                    index,
                    r: disc.r,
                });
            }
        }
        for i in 0..discs.len() {
            for j in (i + 1)..discs.len() {
                let gap = discs[i].center_distance(&discs[j]) - (discs[i].r + discs[j].r);
                if gap < -tol {
                    return Err(GeometryError::Overlap {
                        first: i,
                        second: j,
                        penetration: -gap,
                    });
                }
            }
        }

        let mut order: Vec<usize> = (0..discs.len()).collect();
        order.sort_by(|&a, &b| discs[a].r.total_cmp(&discs[b].r));
        let mut labels = vec![0usize; discs.len()];
        let mut class_members: Vec<Vec<usize>> = Vec::new();
        let mut class_floor = f64::NEG_INFINITY;
        for &idx in &order {
            let r = discs[idx].r;
            if class_members.is_empty() || r > class_floor * (1.0 + RADIUS_CLASS_TOL) {
                class_floor = r;
                class_members.push(Vec::new());
            }
            labels[idx] = class_members.len() - 1;
            class_members.last_mut().expect("just pushed").push(idx);
        }
        let class_radii: Vec<f64> = class_members
            .iter()
            .map(|members| {
                members.iter().map(|&i| discs[i].r).sum::<f64>() / members.len() as f64
            })
            .collect();
        Ok(Packing {
            discs,
            labels,
            class_radii,
        })
    }

    pub fn discs(&self) -> &[Disc] {
        &self.discs
    }

    /// Canonical label of each disc, parallel to [`discs`](Self::discs).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of distinct sizes.
    pub fn n(&self) -> usize {
        self.class_radii.len()
    }

    /// Mean measured radius per label class, ascending.
    pub fn class_radii(&self) -> &[f64] {
        &self.class_radii
    }

    /// The measured canonical realizer, scaled so the largest class maps
    /// to exactly 1.
    pub fn measured_realizer(&self) -> Option<Realizer> {
        let top = *self.class_radii.last()?;
        Realizer::new(self.class_radii.iter().map(|r| r / top).collect()).ok()
    }

    pub fn to_file(&self) -> PackingFile {
        PackingFile {
            discs: self.discs.clone(),
        }
    }
}

/// Reads and validates a packing file with the default tolerance.
pub fn load_packing(path: impl AsRef<Path>) -> Result<Packing, GeometryError> {
    let text = std::fs::read_to_string(path)?;
    let file: PackingFile = serde_json::from_str(&text)?;
    Packing::from_discs(file.discs, DEFAULT_GEOM_TOL)
}

/// Adjacency lists under the tangency relation: an edge iff the center
/// distance matches the radius sum within `tol`.
pub fn tangency_graph(packing: &Packing, tol: f64) -> Vec<Vec<usize>> {
    let discs = packing.discs();
    let mut adjacency = vec![Vec::new(); discs.len()];
    for i in 0..discs.len() {
        for j in (i + 1)..discs.len() {
            if discs[i].is_tangent_to(&discs[j], tol) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    adjacency
}

/// A disc's corona inside a patch: petal indices in cyclic order by polar
/// angle around the center disc.
#[derive(Debug, Clone)]
pub struct GeoCorona {
    pub center: usize,
    pub petals: Vec<usize>,
}

impl GeoCorona {
    /// The coronal code read off the labels, canonicalized.
    pub fn code(&self, packing: &Packing) -> CoronalCode {
        let labels = packing.labels();
        let petals: Vec<Symbol> = self
            .petals
            .iter()
            .map(|&i| Symbol::new(labels[i]))
            .collect();
        CoronalCode::new(Symbol::new(labels[self.center]), &petals)
            .expect("corona has at least three petals")
    }
}

/// Extracts the corona of disc `index`: its tangent neighbours sorted by
/// polar angle, valid when every consecutive pair (wraparound included) is
/// mutually tangent and the radii-derived angles at the center close up to
/// a full turn.
///
/// Boundary discs typically fail with a [`CoronaDefect::RingGap`]
/// describing where the ring opens.
pub fn extract_corona(
    packing: &Packing,
    index: usize,
    tol: f64,
) -> Result<GeoCorona, CoronaDefect> {
    let discs = packing.discs();
    let center = &discs[index];
    let mut petals: Vec<usize> = (0..discs.len())
        .filter(|&j| j != index && center.is_tangent_to(&discs[j], tol))
        .collect();
    if petals.len() < 3 {
        return Err(CoronaDefect::TooFewNeighbors {
            found: petals.len(),
        });
    }
    petals.sort_by(|&a, &b| {
        let angle_of = |d: &Disc| (d.y - center.y).atan2(d.x - center.x);
        angle_of(&discs[a]).total_cmp(&angle_of(&discs[b]))
    });

    for k in 0..petals.len() {
        let a = petals[k];
        let b = petals[(k + 1) % petals.len()];
        let separation = discs[a].center_distance(&discs[b]);
        let required = discs[a].r + discs[b].r;
        if (separation - required).abs() > tol {
            return Err(CoronaDefect::RingGap {
                petal: a,
                next_petal: b,
                separation,
                required,
            });
        }
    }

    let total: f64 = (0..petals.len())
        .map(|k| {
            let a = &discs[petals[k]];
            let b = &discs[petals[(k + 1) % petals.len()]];
            triple_angle(center.r, a.r, b.r)
        })
        .sum();
    if (total - TAU).abs() > ANGLE_SUM_TOL {
        return Err(CoronaDefect::AngleMismatch { total });
    }

    Ok(GeoCorona {
        center: index,
        petals,
    })
}

/// Angle at the center of a disc of radius `c` in a tangent triple with
/// discs of radii `a` and `b`.
fn triple_angle(c: f64, a: f64, b: f64) -> f64 {
    let num = (c + a).powi(2) + (c + b).powi(2) - (a + b).powi(2);
    let den = 2.0 * (c + a) * (c + b);
    (num / den).clamp(-1.0, 1.0).acos()
}

/// The canonical codes of all interior coronas.
///
/// Errors when a size class has no interior representative (the patch is
/// too small to show that corona) or an interior disc's corona is invalid.
pub fn codes_of_packing(packing: &Packing, tol: f64) -> Result<CodeSet, GeometryError> {
    codes_of_packing_with(packing, tol, Exec::default())
}

/// [`codes_of_packing`] with an explicit execution strategy for the
/// per-disc extraction.
pub fn codes_of_packing_with(
    packing: &Packing,
    tol: f64,
    exec: Exec,
) -> Result<CodeSet, GeometryError> {
    let n = packing.n();
    if n == 0 {
        return Err(GeometryError::Empty);
    }
    if n > MAX_ALPHABET {
        return Err(GeometryError::TooManySizes(n));
    }
    let interior: Vec<usize> = (0..packing.discs().len())
        .filter(|&i| packing.discs()[i].interior)
        .collect();
    let covered: BTreeSet<usize> = interior.iter().map(|&i| packing.labels()[i]).collect();
    for label in 0..n {
        if !covered.contains(&label) {
            return Err(GeometryError::InsufficientPatch { label });
        }
    }
    let extracted = par::map(exec, &interior, |&i| {
        extract_corona(packing, i, tol).map(|corona| corona.code(packing))
    });
    let mut codes = Vec::new();
    for (&disc, outcome) in interior.iter().zip(extracted) {
        match outcome {
            Ok(code) => codes.push(code),
            Err(defect) => return Err(GeometryError::CoronaInvalid { disc, defect }),
        }
    }
    Ok(CodeSet::new(n, codes)?)
}

/// Per-disc outcome in a [`VerifyReport`].
#[derive(Debug, Clone, Serialize)]
pub struct DiscReport {
    pub index: usize,
    pub label: usize,
    pub interior: bool,
    /// Corona status for interior discs; `None` for boundary discs.
    pub corona_ok: Option<bool>,
    pub code: Option<String>,
    pub defect: Option<String>,
}

/// Measured radii against the radii reconstructed from the patch's codes.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub measured: Vec<f64>,
    pub solved: Vec<f64>,
    pub max_abs_diff: f64,
    pub within_tol: bool,
    pub solver_residual: f64,
    pub distinct_solutions: usize,
}

/// Full verification outcome with per-disc diagnostics; serialized as JSON
/// by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub n: usize,
    pub disc_count: usize,
    pub interior_count: usize,
    pub discs: Vec<DiscReport>,
    /// Canonical codes of the valid interior coronas.
    pub codes: Vec<String>,
    pub label_coverage_ok: bool,
    pub missing_interior_labels: Vec<usize>,
    /// Worst `|angle_sum - 2 pi|` over the codes at the measured realizer.
    pub max_angle_residual: Option<f64>,
    /// Radius reconstruction; skipped for single-size patches.
    pub reconstruction: Option<ReconstructionReport>,
    pub failures: Vec<String>,
}

/// Verifies a patch end to end: every interior disc must carry a valid
/// corona, every size class must have an interior representative, every
/// extracted code must be tight at the measured realizer within `tol`, and
/// for two or more sizes the radii reconstructed from the codes must match
/// the measured radii within [`RECONSTRUCTION_TOL`].
pub fn verify_compact_patch(packing: &Packing, tol: f64) -> VerifyReport {
    verify_compact_patch_with(packing, tol, Exec::default())
}

/// [`verify_compact_patch`] with an explicit execution strategy.
pub fn verify_compact_patch_with(packing: &Packing, tol: f64, exec: Exec) -> VerifyReport {
    let n = packing.n();
    let discs = packing.discs();
    let mut failures: Vec<String> = Vec::new();

    let indices: Vec<usize> = (0..discs.len()).collect();
    let outcomes = par::map(exec, &indices, |&i| {
        discs[i]
            .interior
            .then(|| extract_corona(packing, i, tol).map(|corona| corona.code(packing)))
    });

    let mut disc_reports = Vec::with_capacity(discs.len());
    let mut codes: Vec<CoronalCode> = Vec::new();
    let mut coronas_ok = true;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let mut report = DiscReport {
            index: i,
            label: packing.labels()[i],
            interior: discs[i].interior,
            corona_ok: None,
            code: None,
            defect: None,
        };
        match outcome {
            None => {}
            Some(Ok(code)) => {
                report.corona_ok = Some(true);
                report.code = Some(code.to_string());
                codes.push(code);
            }
            Some(Err(defect)) => {
                coronas_ok = false;
                report.corona_ok = Some(false);
                report.defect = Some(defect.to_string());
                failures.push(format!("disc {i}: {defect}"));
            }
        }
        disc_reports.push(report);
    }
    let mut code_names: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
    code_names.sort();
    code_names.dedup();

    let interior_count = discs.iter().filter(|d| d.interior).count();
    let covered: BTreeSet<usize> = disc_reports
        .iter()
        .filter(|d| d.interior)
        .map(|d| d.label)
        .collect();
    let missing_interior_labels: Vec<usize> =
        (0..n).filter(|label| !covered.contains(label)).collect();
    let label_coverage_ok = missing_interior_labels.is_empty() && n > 0;
    if n == 0 {
        failures.push("packing has no discs".to_string());
    }
    for label in &missing_interior_labels {
        failures.push(format!("label class {label} has no interior disc"));
    }

    let code_set = ((1..=MAX_ALPHABET).contains(&n) && !codes.is_empty())
        .then(|| CodeSet::new(n, codes.clone()).ok())
        .flatten();

    // Tightness of every code at the measured radii.
    let mut max_angle_residual = None;
    if let (Some(set), Some(measured)) = (&code_set, packing.measured_realizer()) {
        let worst = set
            .codes()
            .map(|code| {
                (crate::realize::eval_angle_sum(&code.angle_sum(), &measured) - TAU).abs()
            })
            .fold(0.0f64, f64::max);
        max_angle_residual = Some(worst);
        if worst > tol {
            failures.push(format!(
                "angle residual {worst} at the measured radii exceeds {tol}"
            ));
        }
    }

    // Radius reconstruction through the code set; single-size patches skip
    // it (nothing to solve).
    let mut reconstruction = None;
    if n >= 2 && label_coverage_ok && coronas_ok {
        if let (Some(set), Some(measured)) = (code_set, packing.measured_realizer()) {
            match reconstruct_radii(&set) {
                Ok((solved, residual, distinct)) => {
                    let max_abs_diff = solved
                        .values()
                        .iter()
                        .zip(measured.values())
                        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                    let within_tol = max_abs_diff <= RECONSTRUCTION_TOL;
                    if !within_tol {
                        failures.push(format!(
                            "reconstructed radii deviate from measured by {max_abs_diff}"
                        ));
                    }
                    reconstruction = Some(ReconstructionReport {
                        measured: measured.values().to_vec(),
                        solved: solved.values().to_vec(),
                        max_abs_diff,
                        within_tol,
                        solver_residual: residual,
                        distinct_solutions: distinct,
                    });
                }
                Err(err) => failures.push(format!("radius reconstruction failed: {err}")),
            }
        }
    }

    let reconstruction_ok = n < 2
        || reconstruction
            .as_ref()
            .is_some_and(|rec| rec.within_tol);
    let pass = coronas_ok
        && label_coverage_ok
        && max_angle_residual.is_none_or(|worst| worst <= tol)
        && reconstruction_ok
        && failures.is_empty();

    VerifyReport {
        pass,
        n,
        disc_count: discs.len(),
        interior_count,
        discs: disc_reports,
        codes: code_names,
        label_coverage_ok,
        missing_interior_labels,
        max_angle_residual,
        reconstruction,
        failures,
    }
}

fn reconstruct_radii(set: &CodeSet) -> Result<(Realizer, f64, usize), GeometryError> {
    let fundamental = extract_fundamental(set)?;
    let system = TightSystem::new(&fundamental)?;
    let report = solve_tight(&system, &SolverConfig::default())?;
    match report.solution {
        Some(solution) => Ok((
            solution,
            report.residual_inf,
            report.distinct_solutions_found,
        )),
        None => Err(GeometryError::ReconstructionAmbiguous {
            distinct: report.distinct_solutions_found,
        }),
    }
}

/// A corona laid out in the plane from a code and a realizer: center at the
/// origin, petal `k` on the ray at the cumulative angle of the preceding
/// tangent-triple angles.
#[derive(Debug, Clone)]
pub struct PlacedCorona {
    pub center: Disc,
    pub petals: Vec<Disc>,
    /// Total swept angle minus a full turn; zero (to tolerance) iff the
    /// realizer tightly realizes the code, in which case consecutive petals
    /// all the way around are mutually tangent.
    pub closure_gap: f64,
}

/// Places a corona geometrically. Consecutive petals are tangent by
/// construction; whether the ring closes is reported, not assumed.
pub fn place_corona(code: &CoronalCode, rho: &Realizer) -> PlacedCorona {
    let sum_angles = |a: Symbol, b: Symbol| {
        triple_angle(
            rho.value(code.center()),
            rho.value(a),
            rho.value(b),
        )
    };
    let r_center = rho.value(code.center());
    let m = code.len();
    let mut petals = Vec::with_capacity(m);
    let mut phi = 0.0f64;
    for k in 0..m {
        let p = code.petals()[k];
        let r_p = rho.value(p);
        let d = r_center + r_p;
        petals.push(Disc::new(d * phi.cos(), d * phi.sin(), r_p, false));
        phi += sum_angles(p, code.petals()[(k + 1) % m]);
    }
    PlacedCorona {
        center: Disc::new(0.0, 0.0, r_center, true),
        petals,
        closure_gap: phi - TAU,
    }
}

/// A hexagonal patch of unit discs on the triangular lattice: `rings` rings
/// around a central disc, discs with all six neighbours present marked
/// interior. `rings = 1` is the minimal seven-disc fixture.
pub fn hex_patch(rings: usize) -> Packing {
    let k = rings as i64;
    let mut discs = Vec::new();
    for a in -k..=k {
        for b in (-k).max(-a - k)..=k.min(-a + k) {
            let hex_dist = (a.abs() + b.abs() + (a + b).abs()) / 2;
            let x = 2.0 * a as f64 + b as f64;
            let y = 3f64.sqrt() * b as f64;
            discs.push(Disc::new(x, y, 1.0, hex_dist < k));
        }
    }
    Packing::from_discs(discs, DEFAULT_GEOM_TOL).expect("lattice discs cannot overlap")
}
