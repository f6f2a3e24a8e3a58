//! Summaries of metric changes over products of hierarchies.
//!
//! A [`ProductSpace`] is the cartesian product of [`DimensionTree`]s. Leaf
//! tuples carry a metric for two periods; every product node gets a weight from
//! the aggregated change, and [`solve`] picks at most `k` pairwise
//! non-overlapping nodes of high total weight.
//!
//! ```
//! use hiersum::{generators, solve, SolverConfig};
//!
//! let inst = generators::gen_two_tree_example(1.0).unwrap();
//! let sol = solve(&inst.space, &inst.weights, &SolverConfig::new(2).unwrap()).unwrap();
//! assert_eq!(sol.total_weight, 4.0);
//! ```

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod generators;
pub mod io;
pub mod oracle;
pub mod solver;
pub mod space;
pub mod weights;

pub use decomposition::{approximation_bound, decompose_by_height, decompose_paths, PathDecomposition, TreePath};
pub use error::{Error, Result};
pub use oracle::{brute_force_conflict_free, brute_force_optimal, is_conflict, is_conflict_free, is_overlap_free};
pub use solver::{solve, solve_with_mode, DpTable, Mode, Solution, SolverConfig};
pub use space::{DimensionTree, NodeId, NodeRecord, ProductNode, ProductSpace};
pub use weights::{
    aggregate, build_weight_map, weight_absdiff, weight_boxcox, weight_composition, AggregateTable, CellTable,
    Metrics, WeightFunction, WeightMap,
};
