//! Domain model: threats, the refinement tree, countermeasures, and the
//! two quantitative primitives everything else builds on.
//!
//! The model follows a deliberately small method: enumerate what an
//! attacker could do as leaves of a refinement tree, price each leaf in
//! money (damage if it happens, effort to make it happen), then price
//! defenses in the same currency so "is this worth buying" becomes an
//! arithmetic question instead of a judgement call.

use num_rational::BigRational;
use num_traits::One;

use crate::money::{Factor, Money};

/// A leaf-level attack: something concrete an attacker can attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threat {
    /// Stable identifier, unique among threats (`[a-z0-9-]+`).
    pub id: String,
    /// Human-readable one-liner.
    pub title: String,
    /// Expected loss if the attack succeeds, in minor currency units.
    pub damage: Money,
    /// Estimated cost for the attacker to pull it off, in the same units.
    /// Must be positive: a free attack has no finite risk score.
    pub attacker_effort: Money,
    /// Free-form remarks. Optional in the file format.
    pub notes: Option<String>,
}

/// A node in the attack refinement tree.
///
/// Internal nodes decompose a goal into alternative sub-goals (any child
/// suffices — refinement is disjunctive). Leaves ground the decomposition
/// in concrete threats by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Internal {
        id: String,
        label: String,
        children: Vec<TreeNode>,
    },
    Leaf {
        id: String,
        label: String,
        /// Ids of the threats this leaf grounds out in.
        threats: Vec<String>,
    },
}

impl TreeNode {
    pub fn id(&self) -> &str {
        match self {
            TreeNode::Internal { id, .. } | TreeNode::Leaf { id, .. } => id,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            TreeNode::Internal { label, .. } | TreeNode::Leaf { label, .. } => label,
        }
    }
}

/// One threat a countermeasure helps against, and by how much.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mitigation {
    /// Id of the mitigated threat.
    pub threat: String,
    /// Fraction of that threat's risk removed when the measure is in place.
    pub factor: Factor,
}

/// A defense that can be bought: a cost plus the threats it reduces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Countermeasure {
    /// Stable identifier, unique among countermeasures (`[a-z0-9-]+`).
    pub id: String,
    pub title: String,
    /// Implementation cost in minor currency units.
    pub cost: Money,
    /// At most one entry per threat.
    pub mitigates: Vec<Mitigation>,
    pub notes: Option<String>,
}

/// Classification thresholds. A threat is worth urgent attention when its
/// damage is high and the attack is cheap; these two cut points turn that
/// intuition into a quadrant assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisConfig {
    /// Damage at or above this counts as "high damage".
    pub damage_threshold: Money,
    /// Effort at or above this counts as "expensive for the attacker".
    pub effort_threshold: Money,
}

/// A complete analysis input: threat catalog, refinement tree over it,
/// countermeasure catalog, and classification thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    /// ISO 4217-style currency label for every monetary figure.
    pub currency: String,
    pub config: AnalysisConfig,
    /// Threat catalog in file order.
    pub threats: Vec<Threat>,
    pub tree: TreeNode,
    /// Countermeasure catalog in file order.
    pub countermeasures: Vec<Countermeasure>,
}

impl Model {
    pub fn threat(&self, id: &str) -> Option<&Threat> {
        self.threats.iter().find(|t| t.id == id)
    }

    pub fn countermeasure(&self, id: &str) -> Option<&Countermeasure> {
        self.countermeasures.iter().find(|c| c.id == id)
    }
}

/// Risk of a threat: expected damage per unit of attacker effort.
///
/// A ratio above 1 means the attack destroys more value than it costs to
/// mount — the attacker's side of the ledger is profitable. Exact
/// rational, so 1/3 stays 1/3.
pub fn risk_score(threat: &Threat) -> BigRational {
    debug_assert!(
        !threat.attacker_effort.is_zero(),
        "validated models never carry zero-effort threats"
    );
    threat.damage.to_ratio() / threat.attacker_effort.to_ratio()
}

/// Combined effect of several independent mitigations on one threat:
/// `1 - (1-f1)(1-f2)...`. Each factor removes its share of whatever risk
/// the previous ones left standing, so the result never exceeds 1 and
/// order does not matter. An empty list mitigates nothing.
pub fn combined_mitigation(factors: &[Factor]) -> BigRational {
    let remaining = factors
        .iter()
        .fold(BigRational::one(), |acc, f| acc * f.complement_ratio());
    BigRational::one() - remaining
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn threat(damage: u64, effort: u64) -> Threat {
        Threat {
            id: "t".into(),
            title: "t".into(),
            damage: Money::new(damage),
            attacker_effort: Money::new(effort),
            notes: None,
        }
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn risk_is_damage_over_effort() {
        assert_eq!(risk_score(&threat(10_000, 2_000)), ratio(5, 1));
        assert_eq!(risk_score(&threat(0, 500)), BigRational::zero());
        assert_eq!(risk_score(&threat(1, 3)), ratio(1, 3));
    }

    #[test]
    fn combined_mitigation_examples() {
        let f = |t: u32| Factor::from_ten_thousandths(t).unwrap();
        assert_eq!(combined_mitigation(&[]), BigRational::zero());
        assert_eq!(combined_mitigation(&[f(10_000), f(5_000)]), ratio(1, 1));
        assert_eq!(combined_mitigation(&[f(6_000), f(5_000)]), ratio(4, 5));
        assert_eq!(combined_mitigation(&[f(5_000)]), ratio(1, 2));
        assert_eq!(combined_mitigation(&[f(0), f(0)]), BigRational::zero());
    }

    #[test]
    fn combined_mitigation_is_order_free() {
        let f = |t: u32| Factor::from_ten_thousandths(t).unwrap();
        let a = [f(2_500), f(7_500), f(100)];
        let b = [f(100), f(2_500), f(7_500)];
        assert_eq!(combined_mitigation(&a), combined_mitigation(&b));
    }
}
