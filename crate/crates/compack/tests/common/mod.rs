//! Fixtures shared by the integration suites.

use std::f64::consts::TAU;

use compack::codes::{CoronalCode, Symbol};
use compack::enumerate::codes_of_length;
use compack::geometry::{Disc, Packing, DEFAULT_GEOM_TOL};
use compack::realize::{eval_angle_sum, Realizer};
use compack::render::corona_discs;
use compack::sets::CodeSet;
use compack::solver::{solve_tight, SolverConfig, TightSystem};

/// The three-size pair of codes used throughout: a small-disc corona and a
/// medium-disc corona that together form a fundamental set.
pub fn three_size_set() -> CodeSet {
    CodeSet::parse("0:22121\n1:212020\n", 3).unwrap()
}

/// The unique normalized tight realizer of [`three_size_set`].
pub fn three_size_realizer() -> Realizer {
    let system = TightSystem::new(&three_size_set()).unwrap();
    solve_tight(&system, &SolverConfig::default())
        .unwrap()
        .solution
        .expect("the pair has a unique monotone tight realizer")
}

/// A placed corona with its center marked interior, offset into position.
pub fn flower(code: &CoronalCode, rho: &Realizer, dx: f64, dy: f64) -> Vec<Disc> {
    let mut discs = corona_discs(code, rho);
    for d in &mut discs {
        d.x += dx;
        d.y += dy;
    }
    discs
}

/// A big-disc corona tightly realized by `rho`, discovered by scanning
/// canonical center-2 codes in enumeration order; mixed petal sizes
/// preferred.
pub fn tight_big_corona(rho: &Realizer) -> CoronalCode {
    let tight: Vec<CoronalCode> = (3..=10)
        .flat_map(|len| codes_of_length(3, Symbol::new(2), len).unwrap())
        .filter(|code| (eval_angle_sum(&code.angle_sum(), rho) - TAU).abs() < 1e-9)
        .collect();
    tight
        .iter()
        .find(|code| code.petal_set().len() >= 2)
        .or_else(|| tight.first())
        .expect("a tight big-disc corona exists at the solved realizer")
        .clone()
}

/// Three-size patch built from the solved radii: one flower per size class,
/// spaced apart, every flower center interior.
pub fn three_size_patch() -> Packing {
    let rho = three_size_realizer();
    let small = CoronalCode::parse("0:22121", 3).unwrap();
    let medium = CoronalCode::parse("1:212020", 3).unwrap();
    let big = tight_big_corona(&rho);
    let mut discs = flower(&small, &rho, 0.0, 0.0);
    discs.extend(flower(&medium, &rho, 40.0, 0.0));
    discs.extend(flower(&big, &rho, 80.0, 0.0));
    Packing::from_discs(discs, DEFAULT_GEOM_TOL).expect("flowers are spaced apart")
}
