//! Exact leakage auditing for finite randomized mechanisms.
//!
//! A mechanism is a stochastic kernel over databases `D^n`, where `D` contains
//! a default value `⊥`. This crate computes, in exact rational arithmetic,
//! the leakage of such a mechanism under differential privacy (DP), Bayesian
//! differential privacy (BDP), semantic privacy (SP / BSP) and membership
//! privacy (MP), and checks the relations between them.
//!
//! Privacy parameters are carried as ratios `R = e^ε` ([`Ratio`]).

pub mod generators;
pub mod leakage;
pub mod membership;
pub mod model;
pub mod rational;
pub mod relations;
pub mod semantic;

pub use leakage::{bdp_ratio, bdp_ratio_set_oracle, dp_ratio, dp_ratio_over};
pub use membership::{g_function, mp_check_analytic, mp_check_direct, mp_ratio_family};
pub use model::{
    conditional_output_distribution, statistical_distance, Belief, Database, DatabaseSpace, Fixing,
    JointPrior, Mechanism, ModelError, ProbTable, ValueDomain,
};
pub use rational::{format_q, parse_q, Ratio, Q};
pub use relations::{audit, fuzz, AuditConfig, AuditReport, FuzzOptions, FuzzSummary};
pub use semantic::{bsp_leakage, sp_leakage, BeliefFamily};
