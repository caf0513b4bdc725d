//! Built-in configurations used by the bundled scenarios and the test suites.

use crate::graph::{build_graph, FormationGraph};
use crate::laplacian::{ComplexScalar, NominalConfig};

/// Default six-agent topology: leaders 1..=3, followers 4:(3,5), 5:(2,4),
/// 6:(4,5).
pub const DEFAULT_PAIRS: [(usize, usize, usize); 3] = [(4, 3, 5), (5, 2, 4), (6, 4, 5)];
/// Reverse edges that make the follower subgraph undirected.
pub const DEFAULT_EXTRA_COMM: [(usize, usize); 2] = [(5, 6), (4, 6)];

const R: [(f64, f64); 6] = [
    (1.0, 1.0),
    (-2.0, 3.0),
    (-2.0, -1.0),
    (-5.0, -1.0),
    (-5.0, 3.0),
    (-8.0, 1.0),
];
const EPSILON: [f64; 6] = [3.5, 1.1, 1.2, 1.3, 2.4, 3.5];

pub fn nominal_r() -> Vec<ComplexScalar> {
    R.iter().map(|&(x, y)| ComplexScalar::new(x, y)).collect()
}

pub fn nominal_epsilon() -> Vec<f64> {
    EPSILON.to_vec()
}

pub fn default_graph() -> FormationGraph {
    build_graph(6, 3, &DEFAULT_PAIRS, &DEFAULT_EXTRA_COMM).expect("default topology is valid")
}

pub fn default_2d() -> (FormationGraph, NominalConfig) {
    (default_graph(), NominalConfig::planar(nominal_r()))
}

pub fn default_3d() -> (FormationGraph, NominalConfig) {
    (
        default_graph(),
        NominalConfig::spatial(nominal_r(), nominal_epsilon()),
    )
}

/// Shape reached at the end of the morph. Leader 2 sits at `13/2 + 37i/2`.
pub fn shape_target_corrected() -> Vec<ComplexScalar> {
    [
        (5.0, 35.0 / 2.0),
        (13.0 / 2.0, 37.0 / 2.0),
        (8.0, 17.0),
        (55.0 / 8.0, 127.0 / 8.0),
        (92.0 / 13.0, 517.0 / 26.0),
        (127.0 / 32.0, 577.0 / 32.0),
    ]
    .iter()
    .map(|&(x, y)| ComplexScalar::new(x, y))
    .collect()
}
