//! Stochastic weighted matching toolkit.
//!
//! The library models edge-weighted graphs whose edges exist only with some
//! probability, solves exact maximum-weight matchings, decomposes matching
//! pairs into weighted alternating components, and runs the adaptive and
//! non-adaptive query algorithms with machine-checked per-round certificates.

pub mod algorithms;
pub mod components;
pub mod graph;
pub mod ratio;
pub mod solver;
pub mod stochastic;
pub mod trace;

pub use algorithms::{
    adaptive_run, adaptive_run_bare, check_next_is_half, check_superadditivity, default_rounds,
    evaluate_subgraph, nonadaptive_select, AdaptiveOutcome, AlgorithmError, CertificateReport,
    EvalBudget, NonAdaptiveState, RoundRecord,
};

pub use components::{
    augment, compute_alpha, decompose, decompose_bounded, deletion_partition, label_edges,
    split_component, AlternatingComponent, ComponentError, DeletionPartition, LabeledComponent,
    SubComponentSplit,
};
pub use graph::{
    symmetric_difference, Edge, EdgeId, EdgeSet, GraphError, Matching, RawComponent, Shape,
    WeightedGraph,
};
pub use ratio::Ratio;
pub use solver::{brute_force_matching, max_weight_matching, SolverError};
pub use stochastic::{
    derive_seed, expected_matching_exact, expected_matching_mc, omniscient_opt_exact,
    omniscient_opt_mc, realize, QueryLedger, Realization, StochasticError,
};
