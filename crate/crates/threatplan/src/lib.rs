//! Threat-tree risk analysis and countermeasure planning.
//!
//! The library takes a threat model — leaf threats with expected damage
//! and attacker effort in minor currency units, an OR-refinement tree
//! organizing them, and countermeasures with costs and mitigation
//! factors — and answers three questions about it:
//!
//! 1. **Is the model well-formed?** [`parse_model`] enforces a strict
//!    JSON format and [`validate_model`] cross-checks references,
//!    producing [`Finding`]s with stable codes and JSON-pointer-like
//!    paths instead of panics or silent repair.
//! 2. **Where does the risk sit?** [`analyze`] scores every threat
//!    (damage over effort, as an exact rational), sorts threats into
//!    the four damage/effort quadrants, and rolls worst-case figures up
//!    the tree.
//! 3. **What should be done about it?** [`select_budget`] maximizes
//!    mitigated risk under a spending limit, [`select_assurance`]
//!    minimizes cost under a residual-risk ceiling, and [`whatif`]
//!    re-plans with some measures assumed already in place. Solutions
//!    are exact (branch and bound) up to [`EXACT_LIMIT`] measures, with
//!    a safeguarded greedy heuristic beyond; [`oracle_select`] is the
//!    brute-force referee the solvers are tested against.
//!
//! All risk arithmetic uses arbitrary-precision rationals: results are
//! exact, comparisons are total, and every run of every solver is
//! deterministic down to tie-breaking. [`render_report`] turns reports,
//! plans, and findings into byte-stable text, JSON, or CSV.

pub mod ingest;
pub mod model;
pub mod money;
pub mod ratio;
pub mod report;
pub mod risk;
pub mod select;

pub use ingest::{
    parse_model, serialize_model, validate_model, Finding, FindingCode, ParsedModel, Severity,
};
pub use model::{
    combined_mitigation, risk_score, AnalysisConfig, Countermeasure, Mitigation, Model, Threat,
    TreeNode,
};
pub use money::{Factor, FactorError, Money, MoneyError, FACTOR_SCALE};
pub use ratio::{decimal4, format_ratio, parse_ratio};
pub use report::{render_report, RenderFormat, Renderable};
pub use risk::{
    analyze, residual_risk, EngineError, NodeRollup, Quadrant, QuadrantCounts, ResidualBreakdown,
    ResidualRow, RiskReport, ThreatAssessment,
};
pub use select::{
    oracle_select, oracle_select_with, select_assurance, select_budget, select_greedy,
    select_with, whatif, ChosenMeasure, SelectError, SelectionMode, SelectionPlan, SolveMethod,
    EXACT_LIMIT, ORACLE_LIMIT,
};
