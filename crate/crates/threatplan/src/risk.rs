//! Risk scoring, quadrant classification, and tree rollups.
//!
//! Analysis never guesses: it refuses models with validation errors, and
//! every figure it produces is exact rational arithmetic over the integer
//! inputs. The quadrant view answers "what do we fix first" (high damage,
//! cheap attack); the rollups answer "which branch of the tree carries
//! the exposure".

use num_rational::BigRational;
use num_traits::Zero;

use crate::ingest::{validate_model, Finding, Severity};
use crate::model::{combined_mitigation, risk_score, AnalysisConfig, Model, Threat, TreeNode};
use crate::money::{Money, MoneyError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    /// The model failed validation; analysis refuses to run on it.
    #[error("the model has validation errors; run validation for details")]
    Invalid { findings: Vec<Finding> },
    /// A caller named a countermeasure the model does not define.
    #[error("unknown countermeasure id \"{0}\"")]
    UnknownCountermeasure(String),
    #[error(transparent)]
    Money(#[from] MoneyError),
}

/// Where a threat lands relative to the two classification thresholds.
///
/// Damage at or above the damage threshold counts as high; attacker
/// effort *below* the effort threshold counts as cheap. The urgent work
/// is the high-damage/cheap-attack corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrant {
    /// High damage, cheap attack: fix first.
    Critical,
    /// High damage, expensive attack: plan for, monitor.
    Strategic,
    /// Low damage, cheap attack: expect frequent noise.
    Nuisance,
    /// Low damage, expensive attack: rarely worth spending on.
    Negligible,
}

impl Quadrant {
    pub fn classify(config: &AnalysisConfig, threat: &Threat) -> Quadrant {
        let high_damage = threat.damage >= config.damage_threshold;
        let cheap_attack = threat.attacker_effort < config.effort_threshold;
        match (high_damage, cheap_attack) {
            (true, true) => Quadrant::Critical,
            (true, false) => Quadrant::Strategic,
            (false, true) => Quadrant::Nuisance,
            (false, false) => Quadrant::Negligible,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::Critical => "critical",
            Quadrant::Strategic => "strategic",
            Quadrant::Nuisance => "nuisance",
            Quadrant::Negligible => "negligible",
        }
    }
}

/// One threat's standing in the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreatAssessment {
    pub threat_id: String,
    pub title: String,
    pub damage: Money,
    pub attacker_effort: Money,
    /// Exact damage-per-effort ratio.
    pub risk: BigRational,
    pub quadrant: Quadrant,
}

/// How many threats fall in each quadrant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadrantCounts {
    pub critical: usize,
    pub strategic: usize,
    pub nuisance: usize,
    pub negligible: usize,
}

/// Aggregates over one tree node's subtree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRollup {
    pub node_id: String,
    pub label: String,
    /// Largest single-threat damage below this node.
    pub worst_damage: Money,
    /// Cheapest attack below this node.
    pub least_effort: Money,
    /// Highest single-threat risk score below this node.
    pub max_risk: BigRational,
    /// Sum of all threat damages below this node. Each threat is grouped
    /// under exactly one leaf, so branches never double-count.
    pub total_exposure: Money,
}

/// The full analysis: per-threat rows, quadrant tallies, and per-node
/// rollups in preorder (a rollup's children follow it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskReport {
    pub currency: String,
    pub config: AnalysisConfig,
    /// Sorted by risk, highest first; ties by id.
    pub rows: Vec<ThreatAssessment>,
    pub counts: QuadrantCounts,
    /// Sum of every threat's risk score.
    pub total_risk: BigRational,
    pub rollups: Vec<NodeRollup>,
}

pub(crate) fn require_valid(model: &Model) -> Result<(), EngineError> {
    let findings = validate_model(model);
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(EngineError::Invalid { findings });
    }
    Ok(())
}

/// Runs the full analysis. Fails with [`EngineError::Invalid`] rather
/// than scoring a model whose numbers cannot be trusted.
pub fn analyze(model: &Model) -> Result<RiskReport, EngineError> {
    require_valid(model)?;

    let mut rows: Vec<ThreatAssessment> = model
        .threats
        .iter()
        .map(|t| ThreatAssessment {
            threat_id: t.id.clone(),
            title: t.title.clone(),
            damage: t.damage,
            attacker_effort: t.attacker_effort,
            risk: risk_score(t),
            quadrant: Quadrant::classify(&model.config, t),
        })
        .collect();
    rows.sort_by(|a, b| b.risk.cmp(&a.risk).then_with(|| a.threat_id.cmp(&b.threat_id)));

    let mut counts = QuadrantCounts::default();
    for row in &rows {
        match row.quadrant {
            Quadrant::Critical => counts.critical += 1,
            Quadrant::Strategic => counts.strategic += 1,
            Quadrant::Nuisance => counts.nuisance += 1,
            Quadrant::Negligible => counts.negligible += 1,
        }
    }

    let total_risk = rows.iter().fold(BigRational::zero(), |acc, r| acc + &r.risk);

    let mut rollups = Vec::new();
    collect_rollups(model, &model.tree, &mut rollups)?;

    Ok(RiskReport {
        currency: model.currency.clone(),
        config: model.config,
        rows,
        counts,
        total_risk,
        rollups,
    })
}

/// Subtree aggregates, carried up during the rollup walk.
struct SubtreeStats {
    worst_damage: Money,
    least_effort: Money,
    max_risk: BigRational,
    total_exposure: Money,
}

impl SubtreeStats {
    fn absorb(&mut self, other: &SubtreeStats) -> Result<(), MoneyError> {
        self.worst_damage = self.worst_damage.max(other.worst_damage);
        self.least_effort = self.least_effort.min(other.least_effort);
        if other.max_risk > self.max_risk {
            self.max_risk = other.max_risk.clone();
        }
        self.total_exposure = self.total_exposure.checked_add(other.total_exposure)?;
        Ok(())
    }
}

fn collect_rollups(
    model: &Model,
    node: &TreeNode,
    out: &mut Vec<NodeRollup>,
) -> Result<SubtreeStats, EngineError> {
    // Reserve this node's preorder slot; fill it once the subtree is known.
    let slot = out.len();
    out.push(NodeRollup {
        node_id: node.id().to_string(),
        label: node.label().to_string(),
        worst_damage: Money::ZERO,
        least_effort: Money::ZERO,
        max_risk: BigRational::zero(),
        total_exposure: Money::ZERO,
    });

    let mut stats: Option<SubtreeStats> = None;
    let merge = |stats: &mut Option<SubtreeStats>, add: SubtreeStats| -> Result<(), MoneyError> {
        match stats {
            Some(s) => s.absorb(&add)?,
            None => *stats = Some(add),
        }
        Ok(())
    };

    match node {
        TreeNode::Internal { children, .. } => {
            for child in children {
                let child_stats = collect_rollups(model, child, out)?;
                merge(&mut stats, child_stats)?;
            }
        }
        TreeNode::Leaf { threats, .. } => {
            for id in threats {
                let t = model
                    .threat(id)
                    .expect("validated models resolve every leaf reference");
                merge(
                    &mut stats,
                    SubtreeStats {
                        worst_damage: t.damage,
                        least_effort: t.attacker_effort,
                        max_risk: risk_score(t),
                        total_exposure: t.damage,
                    },
                )?;
            }
        }
    }

    let stats = stats.expect("validated trees have no empty nodes");
    out[slot].worst_damage = stats.worst_damage;
    out[slot].least_effort = stats.least_effort;
    out[slot].max_risk = stats.max_risk.clone();
    out[slot].total_exposure = stats.total_exposure;
    Ok(stats)
}

/// One threat's share of a residual-risk figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualRow {
    pub threat_id: String,
    /// Risk score before the measures under consideration.
    pub base_risk: BigRational,
    /// Combined fraction of that risk the measures remove, in [0, 1].
    pub mitigation: BigRational,
    /// `base_risk · (1 − mitigation)`.
    pub residual: BigRational,
}

/// Residual risk with its per-threat decomposition. The rows are in
/// model order and sum exactly to the total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualBreakdown {
    pub total: BigRational,
    pub rows: Vec<ResidualRow>,
}

/// Total risk left standing when the named countermeasures are in place.
///
/// Each threat keeps `1 - combined` of its score, where `combined` folds
/// together the factors of every implemented measure that mitigates it.
/// Duplicate names are tolerated; unknown names are an error.
pub fn residual_risk(
    model: &Model,
    implemented: &[&str],
) -> Result<ResidualBreakdown, EngineError> {
    require_valid(model)?;
    for id in implemented {
        if model.countermeasure(id).is_none() {
            return Err(EngineError::UnknownCountermeasure(id.to_string()));
        }
    }
    Ok(residual_risk_unchecked(model, implemented))
}

/// The arithmetic behind [`residual_risk`], for callers that have already
/// settled validity. Evaluates from scratch: no incremental state.
pub(crate) fn residual_risk_unchecked(model: &Model, implemented: &[&str]) -> ResidualBreakdown {
    let mut total = BigRational::zero();
    let mut rows = Vec::with_capacity(model.threats.len());
    for t in &model.threats {
        let factors: Vec<_> = model
            .countermeasures
            .iter()
            .filter(|m| implemented.contains(&m.id.as_str()))
            .flat_map(|m| m.mitigates.iter())
            .filter(|mit| mit.threat == t.id)
            .map(|mit| mit.factor)
            .collect();
        let base = risk_score(t);
        let mitigation = combined_mitigation(&factors);
        let residual = &base - &base * &mitigation;
        total += &residual;
        rows.push(ResidualRow {
            threat_id: t.id.clone(),
            base_risk: base,
            mitigation,
            residual,
        });
    }
    ResidualBreakdown { total, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Countermeasure, Mitigation};
    use crate::money::Factor;
    use num_bigint::BigInt;

    fn money(n: u64) -> Money {
        Money::new(n)
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn threat(id: &str, damage: u64, effort: u64) -> Threat {
        Threat {
            id: id.into(),
            title: id.to_uppercase(),
            damage: money(damage),
            attacker_effort: money(effort),
            notes: None,
        }
    }

    fn leaf(id: &str, threats: &[&str]) -> TreeNode {
        TreeNode::Leaf {
            id: id.into(),
            label: id.to_uppercase(),
            threats: threats.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn measure(id: &str, cost: u64, mitigates: &[(&str, u32)]) -> Countermeasure {
        Countermeasure {
            id: id.into(),
            title: id.to_uppercase(),
            cost: money(cost),
            mitigates: mitigates
                .iter()
                .map(|(t, f)| Mitigation {
                    threat: t.to_string(),
                    factor: Factor::from_ten_thousandths(*f).unwrap(),
                })
                .collect(),
            notes: None,
        }
    }

    /// Two-leaf model: t-hot risk 6, t-cold risk 1/2.
    fn sample() -> Model {
        Model {
            currency: "EUR".into(),
            config: AnalysisConfig {
                damage_threshold: money(100),
                effort_threshold: money(50),
            },
            threats: vec![threat("t-hot", 120, 20), threat("t-cold", 30, 60)],
            tree: TreeNode::Internal {
                id: "n-root".into(),
                label: "Root".into(),
                children: vec![leaf("n-a", &["t-hot"]), leaf("n-b", &["t-cold"])],
            },
            countermeasures: vec![
                measure("m-half", 10, &[("t-hot", 5_000)]),
                measure("m-cold", 5, &[("t-cold", 10_000)]),
            ],
        }
    }

    #[test]
    fn quadrants_split_on_inclusive_damage_and_exclusive_effort() {
        let config = AnalysisConfig {
            damage_threshold: money(100),
            effort_threshold: money(50),
        };
        let q = |d, e| Quadrant::classify(&config, &threat("t", d, e));
        assert_eq!(q(100, 49), Quadrant::Critical);
        assert_eq!(q(100, 50), Quadrant::Strategic);
        assert_eq!(q(99, 49), Quadrant::Nuisance);
        assert_eq!(q(99, 50), Quadrant::Negligible);
    }

    #[test]
    fn analyze_sorts_rows_by_risk() {
        let report = analyze(&sample()).unwrap();
        let ids: Vec<&str> = report.rows.iter().map(|r| r.threat_id.as_str()).collect();
        assert_eq!(ids, vec!["t-hot", "t-cold"]);
        assert_eq!(report.rows[0].risk, ratio(6, 1));
        assert_eq!(report.rows[1].risk, ratio(1, 2));
        assert_eq!(report.total_risk, ratio(13, 2));
        assert_eq!(report.counts.critical, 1);
        assert_eq!(report.counts.negligible, 1);
    }

    #[test]
    fn rollups_track_extremes_and_exposure() {
        let report = analyze(&sample()).unwrap();
        let ids: Vec<&str> = report.rollups.iter().map(|r| r.node_id.as_str()).collect();
        assert_eq!(ids, vec!["n-root", "n-a", "n-b"]);
        let root = &report.rollups[0];
        assert_eq!(root.worst_damage, money(120));
        assert_eq!(root.least_effort, money(20));
        assert_eq!(root.max_risk, ratio(6, 1));
        assert_eq!(root.total_exposure, money(150));
        assert_eq!(report.rollups[1].total_exposure, money(120));
    }

    #[test]
    fn analyze_refuses_invalid_models() {
        let mut model = sample();
        model.threats[0].attacker_effort = Money::ZERO;
        match analyze(&model) {
            Err(EngineError::Invalid { findings }) => {
                assert!(findings.iter().any(|f| f.path == "/threats/0/attacker_effort"));
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn residual_follows_the_complement_product() {
        let model = sample();
        let total = |ids: &[&str]| residual_risk(&model, ids).unwrap().total;
        assert_eq!(total(&[]), ratio(13, 2));
        // m-half removes half of t-hot's 6.
        assert_eq!(total(&["m-half"]), ratio(7, 2));
        // m-cold removes all of t-cold.
        assert_eq!(total(&["m-half", "m-cold"]), ratio(3, 1));
        // Duplicates in the list do not double-apply.
        assert_eq!(total(&["m-half", "m-half"]), ratio(7, 2));
    }

    #[test]
    fn residual_rows_decompose_the_total() {
        let model = sample();
        let breakdown = residual_risk(&model, &["m-half"]).unwrap();
        assert_eq!(breakdown.rows.len(), 2);
        assert_eq!(breakdown.rows[0].threat_id, "t-hot");
        assert_eq!(breakdown.rows[0].base_risk, ratio(6, 1));
        assert_eq!(breakdown.rows[0].mitigation, ratio(1, 2));
        assert_eq!(breakdown.rows[0].residual, ratio(3, 1));
        let sum = breakdown
            .rows
            .iter()
            .fold(BigRational::zero(), |acc, r| acc + &r.residual);
        assert_eq!(sum, breakdown.total);
    }

    #[test]
    fn residual_rejects_unknown_measures() {
        match residual_risk(&sample(), &["m-ghost"]) {
            Err(EngineError::UnknownCountermeasure(id)) => assert_eq!(id, "m-ghost"),
            other => panic!("expected UnknownCountermeasure, got {other:?}"),
        }
    }
}
