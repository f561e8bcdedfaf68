//! Potential theory and p-capacities on the boundary of rooted trees.
//!
//! Trees are arenas of edges hanging from a root edge `ω`. Finite trees end
//! in true leaves; truncations of infinite trees end in tails whose tents are
//! unexplored, and quantities computed on them come as certified intervals.

pub mod capacity;
pub mod characterization;
pub mod constructions;
pub mod error;
pub mod io;
pub mod oracle;
pub mod potential;
pub mod tiling;
pub mod tree;

pub use capacity::{
    capacity_by_levels, capacity_of_set, capacity_recursive, certified_capacity, homogeneous_capacity,
    rescaling_constant, symmetric_capacity, total_resistance, CapacityInterval, EquilibriumResult, RescaledTent,
    ResistanceReport, TailPolicy,
};
pub use characterization::{
    capacity_equation_check, check_potential_bound, recover_equilibrium_set, verify_equilibrium,
    CapacityEquationReport, CharacterizationReport,
};
pub use constructions::{
    compact_set_of_capacity, greedy_digits, lambda_digits, subdyadic_tree_of_capacity, CompactSet, DigitExpansion,
    SubdyadicConstruction,
};
pub use error::{Error, Result};
pub use oracle::{capacity_oracle, OracleOptions, OracleResult};
pub use potential::{PExponent, VertexFunction};
pub use tiling::{build_tiling, measure_from_tiling, render_svg, validate_tiling, SvgOptions, Tiling, TilingReport};
pub use tree::{BoundaryMeasure, BoundarySet, EdgeFunction, EdgeId, LevelDegrees, Tail, Tree, TreeSpec, Vertex};
