//! Countermeasure selection under a budget or a residual-risk ceiling.
//!
//! Two dual questions, one objective. Budget mode: given at most N to
//! spend, which measures remove the most risk? Assurance mode: given a
//! residual-risk level that must be reached, what is the cheapest way to
//! get there? Both run over the multiplicative stacking rule, which makes
//! mitigated risk monotone and submodular in the chosen set — that is
//! what licenses both the greedy heuristic and the optimistic bound in
//! the exact search.
//!
//! Every solver uses one total order over candidate sets, so optima are
//! unique and the exhaustive oracle, the branch-and-bound search, and any
//! future solver can be compared set-for-set, not just value-for-value:
//! budget mode prefers (more mitigated, then cheaper, then
//! lexicographically smaller id list); assurance mode prefers (cheaper,
//! then more mitigated, then lexicographically smaller id list).

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{risk_score, Model};
use crate::money::{Money, MoneyError};
use crate::risk::{require_valid, EngineError, ResidualRow};

/// Above this many candidate measures the exact search hands over to the
/// greedy heuristic. A bound-pruned 2²⁰ search still finishes quickly;
/// beyond that, exactness stops being worth the wait.
pub const EXACT_LIMIT: usize = 20;

/// The exhaustive oracle enumerates every subset and refuses instances
/// where that stops being an audit aid and becomes a heat source.
pub const ORACLE_LIMIT: usize = 16;

/// Which question a plan answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectionMode {
    /// Maximize mitigated risk, spending at most this much.
    Budget(Money),
    /// Minimize cost, leaving at most this much residual risk.
    Assurance(BigRational),
}

/// How a plan was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Branch-and-bound; the returned set is the tie-broken optimum.
    Exact,
    /// Ratio-greedy with the best-singleton safeguard; a good answer,
    /// not a proof.
    Greedy,
}

impl SolveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMethod::Exact => "exact",
            SolveMethod::Greedy => "greedy",
        }
    }
}

/// A selected countermeasure and what it costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChosenMeasure {
    pub id: String,
    pub cost: Money,
}

/// The answer: which measures to implement and what that buys.
///
/// `total_risk` is the baseline the decision was made against — the full
/// model total normally, or the post-assumption total for a what-if run.
/// `mitigated_risk + residual_risk = total_risk` holds exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionPlan {
    pub mode: SelectionMode,
    pub method: SolveMethod,
    /// Measures treated as already in place (what-if runs), sorted by id.
    pub assumed: Vec<String>,
    /// Chosen measures, sorted by id.
    pub chosen: Vec<ChosenMeasure>,
    pub total_cost: Money,
    pub total_risk: BigRational,
    pub mitigated_risk: BigRational,
    pub residual_risk: BigRational,
    /// Per-threat decomposition in model order; residuals sum exactly to
    /// `residual_risk`.
    pub per_threat: Vec<ResidualRow>,
    pub currency: String,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    /// Assurance mode only: even implementing everything leaves more
    /// residual risk than the ceiling allows.
    #[error("no countermeasure set reaches the residual bound; best achievable is {best_residual}")]
    Infeasible { best_residual: BigRational },
    /// The exhaustive oracle refuses instances past [`ORACLE_LIMIT`].
    #[error("exhaustive enumeration over {0} countermeasures is unreasonable; the oracle accepts at most {ORACLE_LIMIT}")]
    TooLarge(usize),
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Budget mode: maximize mitigated risk with total cost ≤ `budget`.
/// Exact up to [`EXACT_LIMIT`] measures, greedy beyond.
pub fn select_budget(model: &Model, budget: Money) -> Result<SelectionPlan, SelectError> {
    select_with(model, &SelectionMode::Budget(budget), &[], false)
}

/// Assurance mode: minimize cost with residual risk ≤ `max_residual`.
/// Exact up to [`EXACT_LIMIT`] measures, greedy beyond.
pub fn select_assurance(
    model: &Model,
    max_residual: &BigRational,
) -> Result<SelectionPlan, SelectError> {
    select_with(
        model,
        &SelectionMode::Assurance(max_residual.clone()),
        &[],
        false,
    )
}

/// The budget-mode greedy heuristic, regardless of instance size:
/// repeatedly add the affordable measure with the best marginal
/// mitigation per cost, then return the better of that set and the best
/// single affordable measure.
pub fn select_greedy(model: &Model, budget: Money) -> Result<SelectionPlan, SelectError> {
    select_with(model, &SelectionMode::Budget(budget), &[], true)
}

/// Re-plans with some measures assumed already implemented: they apply
/// at no cost and leave the candidate pool. The budget or residual
/// ceiling constrains only the new measures.
pub fn whatif(
    model: &Model,
    assumed: &[&str],
    mode: &SelectionMode,
) -> Result<SelectionPlan, SelectError> {
    select_with(model, mode, assumed, false)
}

/// General entry point behind the named operations: any mode, optional
/// assumed set, optional forced greedy. Without `force_greedy` the exact
/// solver runs up to [`EXACT_LIMIT`] candidates and the greedy heuristic
/// takes over beyond that; the plan's `method` records which one ran.
pub fn select_with(
    model: &Model,
    mode: &SelectionMode,
    assumed: &[&str],
    force_greedy: bool,
) -> Result<SelectionPlan, SelectError> {
    require_valid(model)?;
    let inst = Instance::build(model, assumed)?;
    let greedy = force_greedy || inst.cands.len() > EXACT_LIMIT;
    let (best, method) = match (mode, greedy) {
        (SelectionMode::Budget(limit), false) => {
            (solve_budget(&inst, limit.amount()), SolveMethod::Exact)
        }
        (SelectionMode::Budget(limit), true) => {
            (solve_greedy_budget(&inst, limit.amount()), SolveMethod::Greedy)
        }
        (SelectionMode::Assurance(bound), false) => {
            (solve_assurance(&inst, bound)?, SolveMethod::Exact)
        }
        (SelectionMode::Assurance(bound), true) => {
            (solve_greedy_assurance(&inst, bound)?, SolveMethod::Greedy)
        }
    };
    build_plan(model, &inst, mode, method, &best)
}

/// Ground truth by brute force: evaluates all 2ⁿ candidate subsets from
/// scratch — no incremental state shared with the real solvers — under
/// the same objective and tie-breaking. Exists so tests can catch the
/// solvers drifting; refuses n > [`ORACLE_LIMIT`].
pub fn oracle_select(model: &Model, mode: &SelectionMode) -> Result<SelectionPlan, SelectError> {
    oracle_select_with(model, mode, &[])
}

/// [`oracle_select`] with an assumed set, mirroring [`whatif`].
pub fn oracle_select_with(
    model: &Model,
    mode: &SelectionMode,
    assumed: &[&str],
) -> Result<SelectionPlan, SelectError> {
    require_valid(model)?;
    let inst = Instance::build(model, assumed)?;
    let n = inst.cands.len();
    if n > ORACLE_LIMIT {
        return Err(SelectError::TooLarge(n));
    }

    let mut best: Option<Best> = None;
    let mut least_residual: Option<BigRational> = None;
    for mask in 0u32..(1u32 << n) {
        let cand = eval_mask(&inst, mask);
        match mode {
            SelectionMode::Budget(limit) => {
                if cand.cost > u128::from(limit.amount()) {
                    continue;
                }
                if best.as_ref().map_or(true, |b| better_budget(&cand, b)) {
                    best = Some(cand);
                }
            }
            SelectionMode::Assurance(bound) => {
                if least_residual
                    .as_ref()
                    .map_or(true, |r| cand.residual < *r)
                {
                    least_residual = Some(cand.residual.clone());
                }
                if cand.residual > *bound {
                    continue;
                }
                if best.as_ref().map_or(true, |b| better_assurance(&cand, b)) {
                    best = Some(cand);
                }
            }
        }
    }

    match best {
        Some(best) => build_plan(model, &inst, mode, SolveMethod::Exact, &best),
        None => Err(SelectError::Infeasible {
            best_residual: least_residual.expect("the empty subset is always evaluated"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Instance: the solver's view of a model
// ---------------------------------------------------------------------------

/// One mitigation edge of a candidate, with the two rational views of
/// its factor the solvers need.
struct CoverEntry {
    threat: usize,
    /// `1 - factor`: the share of risk the measure leaves in place.
    keep: BigRational,
    /// `factor`: the share it removes.
    removed: BigRational,
}

struct Cand<'m> {
    id: &'m str,
    cost: u64,
    coverage: Vec<CoverEntry>,
    /// Mitigation if this were the only measure applied to the baseline.
    /// Marginal gains only shrink as the set grows (submodularity), so
    /// this is an admissible per-item bound.
    standalone_gain: BigRational,
}

/// A validated model reduced to what selection needs: per-threat baseline
/// risks (with any assumed measures already folded in) and the candidate
/// pool sorted by id.
struct Instance<'m> {
    base: Vec<BigRational>,
    total: BigRational,
    cands: Vec<Cand<'m>>,
    assumed: Vec<String>,
}

impl<'m> Instance<'m> {
    fn build(model: &'m Model, assumed: &[&str]) -> Result<Instance<'m>, EngineError> {
        let assumed_set: BTreeSet<&str> = assumed.iter().copied().collect();
        for id in &assumed_set {
            if model.countermeasure(id).is_none() {
                return Err(EngineError::UnknownCountermeasure(id.to_string()));
            }
        }

        let index: BTreeMap<&str, usize> = model
            .threats
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();

        // Baseline: risk scores with assumed measures applied.
        let mut base: Vec<BigRational> = model.threats.iter().map(risk_score).collect();
        for m in &model.countermeasures {
            if !assumed_set.contains(m.id.as_str()) {
                continue;
            }
            for mit in &m.mitigates {
                let t = index[mit.threat.as_str()];
                base[t] *= mit.factor.complement_ratio();
            }
        }
        let total = base.iter().fold(BigRational::zero(), |acc, r| acc + r);

        let mut cands: Vec<Cand<'m>> = model
            .countermeasures
            .iter()
            .filter(|m| !assumed_set.contains(m.id.as_str()))
            .map(|m| {
                let coverage: Vec<CoverEntry> = m
                    .mitigates
                    .iter()
                    .filter(|mit| mit.factor.ten_thousandths() > 0)
                    .map(|mit| CoverEntry {
                        threat: index[mit.threat.as_str()],
                        keep: mit.factor.complement_ratio(),
                        removed: mit.factor.to_ratio(),
                    })
                    .collect();
                let standalone_gain = coverage
                    .iter()
                    .fold(BigRational::zero(), |acc, c| acc + &base[c.threat] * &c.removed);
                Cand {
                    id: m.id.as_str(),
                    cost: m.cost.amount(),
                    coverage,
                    standalone_gain,
                }
            })
            .collect();
        cands.sort_by(|a, b| a.id.cmp(b.id));

        Ok(Instance {
            base,
            total,
            cands,
            assumed: assumed_set.iter().map(|s| s.to_string()).collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Search state and candidate sets
// ---------------------------------------------------------------------------

/// A finished candidate set, in comparator-ready form. `chosen` holds
/// ascending candidate indices; candidates are id-sorted, so index order
/// is id order and lexicographic comparison of index vectors equals
/// lexicographic comparison of sorted id lists.
#[derive(Debug, Clone)]
struct Best {
    residual: BigRational,
    cost: u128,
    chosen: Vec<usize>,
}

/// Budget order: less residual (= more mitigated), then cheaper, then
/// lexicographically smaller ids. Strict — equal keys are not "better".
fn better_budget(a: &Best, b: &Best) -> bool {
    (a.residual < b.residual)
        || (a.residual == b.residual
            && (a.cost < b.cost || (a.cost == b.cost && a.chosen < b.chosen)))
}

/// Assurance order: cheaper, then less residual, then smaller ids.
fn better_assurance(a: &Best, b: &Best) -> bool {
    (a.cost < b.cost)
        || (a.cost == b.cost
            && (a.residual < b.residual
                || (a.residual == b.residual && a.chosen < b.chosen)))
}

/// Mutable search position: per-threat keep-multipliers, the residual
/// they imply, and the cost so far. Applied measures are undone exactly,
/// and all arithmetic is rational, so a state reached incrementally
/// equals the same set evaluated from scratch.
struct SearchState {
    mult: Vec<BigRational>,
    residual: BigRational,
    cost: u128,
    chosen: Vec<usize>,
}

struct Undo {
    prev_residual: BigRational,
    saved_mults: Vec<(usize, BigRational)>,
    cost: u64,
}

impl SearchState {
    fn start(inst: &Instance) -> SearchState {
        SearchState {
            mult: vec![BigRational::one(); inst.base.len()],
            residual: inst.total.clone(),
            cost: 0,
            chosen: Vec::new(),
        }
    }

    fn apply(&mut self, inst: &Instance, j: usize) -> Undo {
        let cand = &inst.cands[j];
        let mut undo = Undo {
            prev_residual: self.residual.clone(),
            saved_mults: Vec::with_capacity(cand.coverage.len()),
            cost: cand.cost,
        };
        for c in &cand.coverage {
            let old = self.mult[c.threat].clone();
            // The measure removes `removed` of whatever share still stood.
            self.residual -= &inst.base[c.threat] * &old * &c.removed;
            self.mult[c.threat] = &old * &c.keep;
            undo.saved_mults.push((c.threat, old));
        }
        self.cost += u128::from(cand.cost);
        self.chosen.push(j);
        undo
    }

    fn unapply(&mut self, undo: Undo) {
        for (t, old) in undo.saved_mults {
            self.mult[t] = old;
        }
        self.residual = undo.prev_residual;
        self.cost -= u128::from(undo.cost);
        self.chosen.pop();
    }

    fn snapshot(&self) -> Best {
        Best {
            residual: self.residual.clone(),
            cost: self.cost,
            chosen: self.chosen.clone(),
        }
    }

    /// Mitigation this candidate would add right now.
    fn marginal_gain(&self, inst: &Instance, j: usize) -> BigRational {
        inst.cands[j]
            .coverage
            .iter()
            .fold(BigRational::zero(), |acc, c| {
                acc + &inst.base[c.threat] * &self.mult[c.threat] * &c.removed
            })
    }
}

// ---------------------------------------------------------------------------
// Exact solvers
// ---------------------------------------------------------------------------

fn solve_budget(inst: &Instance, budget: u64) -> Best {
    let mut state = SearchState::start(inst);
    // The empty set is feasible at any budget, so it seeds the incumbent.
    let mut best = state.snapshot();
    dfs_budget(inst, u128::from(budget), 0, &mut state, &mut best);
    best
}

fn dfs_budget(inst: &Instance, budget: u128, i: usize, state: &mut SearchState, best: &mut Best) {
    if i == inst.cands.len() {
        if better_budget(&state.snapshot(), best) {
            *best = state.snapshot();
        }
        return;
    }

    // Optimistic residual: every remaining individually-affordable item
    // delivers its full standalone gain. Admissible (marginal ≤
    // standalone, and jointly-affordable ⊆ individually-affordable), so
    // pruning strictly keeps the tie-broken optimum reachable.
    let slack = budget - state.cost;
    let mut optimistic = state.residual.clone();
    for cand in &inst.cands[i..] {
        if u128::from(cand.cost) <= slack {
            optimistic -= &cand.standalone_gain;
        }
    }
    if optimistic > best.residual {
        return;
    }

    if u128::from(inst.cands[i].cost) <= slack {
        let undo = state.apply(inst, i);
        dfs_budget(inst, budget, i + 1, state, best);
        state.unapply(undo);
    }
    dfs_budget(inst, budget, i + 1, state, best);
}

fn solve_assurance(inst: &Instance, bound: &BigRational) -> Result<Best, SelectError> {
    // suffix_keep[i][t]: the keep-share threat t retains if every
    // candidate from i onward is applied. suffix_keep[0] therefore gives
    // the floor — the least residual any set can reach.
    let n = inst.cands.len();
    let t_count = inst.base.len();
    let mut suffix_keep: Vec<Vec<BigRational>> = vec![vec![BigRational::one(); t_count]; n + 1];
    for i in (0..n).rev() {
        suffix_keep[i] = suffix_keep[i + 1].clone();
        for c in &inst.cands[i].coverage {
            let updated = &suffix_keep[i][c.threat] * &c.keep;
            suffix_keep[i][c.threat] = updated;
        }
    }

    let mut state = SearchState::start(inst);
    let mut best: Option<Best> = None;
    dfs_assurance(inst, bound, &suffix_keep, 0, &mut state, &mut best);
    best.ok_or_else(|| {
        let floor = inst
            .base
            .iter()
            .zip(&suffix_keep[0])
            .fold(BigRational::zero(), |acc, (b, k)| acc + b * k);
        SelectError::Infeasible {
            best_residual: floor,
        }
    })
}

fn dfs_assurance(
    inst: &Instance,
    bound: &BigRational,
    suffix_keep: &[Vec<BigRational>],
    i: usize,
    state: &mut SearchState,
    best: &mut Option<Best>,
) {
    // Cost only grows deeper in the tree, so a strictly costlier prefix
    // can never beat the incumbent (ties still can, and pass through).
    if let Some(b) = best.as_ref() {
        if state.cost > b.cost {
            return;
        }
    }
    // Feasibility: even applying everything left, can this branch get
    // under the bound at all?
    let optimistic = inst
        .base
        .iter()
        .zip(&state.mult)
        .zip(&suffix_keep[i])
        .fold(BigRational::zero(), |acc, ((b, m), k)| acc + b * m * k);
    if optimistic > *bound {
        return;
    }

    if i == inst.cands.len() {
        // suffix_keep[n] is all ones, so optimistic == residual here and
        // the bound check above has already established feasibility.
        let cand = state.snapshot();
        if best.as_ref().map_or(true, |b| better_assurance(&cand, b)) {
            *best = Some(cand);
        }
        return;
    }

    // Exclude first: cheap sets surface early, which tightens the cost
    // prune. The comparator, not the visit order, decides ties.
    dfs_assurance(inst, bound, suffix_keep, i + 1, state, best);
    let undo = state.apply(inst, i);
    dfs_assurance(inst, bound, suffix_keep, i + 1, state, best);
    state.unapply(undo);
}

// ---------------------------------------------------------------------------
// Greedy heuristics
// ---------------------------------------------------------------------------

/// Best next pick by marginal-gain/cost ratio, ties to the smaller id.
/// Compares cross-multiplied so zero-cost measures act as infinite
/// ratios instead of panics.
fn pick_best_ratio(
    inst: &Instance,
    state: &SearchState,
    taken: &[bool],
    max_cost: Option<u128>,
) -> Option<usize> {
    let mut pick: Option<(usize, BigRational)> = None;
    for (j, cand) in inst.cands.iter().enumerate() {
        if taken[j] {
            continue;
        }
        if let Some(limit) = max_cost {
            if u128::from(cand.cost) > limit {
                continue;
            }
        }
        let gain = state.marginal_gain(inst, j);
        if gain.is_zero() {
            continue;
        }
        let better = match &pick {
            None => true,
            Some((k, best_gain)) => {
                // gain_j / cost_j > gain_k / cost_k, without dividing.
                let lhs = &gain * BigRational::from_integer(inst.cands[*k].cost.into());
                let rhs = best_gain * BigRational::from_integer(cand.cost.into());
                lhs > rhs
            }
        };
        if better {
            pick = Some((j, gain));
        }
    }
    pick.map(|(j, _)| j)
}

fn solve_greedy_budget(inst: &Instance, budget: u64) -> Best {
    let n = inst.cands.len();
    let mut state = SearchState::start(inst);
    let mut taken = vec![false; n];
    while let Some(j) = pick_best_ratio(
        inst,
        &state,
        &taken,
        Some(u128::from(budget) - state.cost),
    ) {
        state.apply(inst, j);
        taken[j] = true;
    }
    // Greedy's one blind spot: a single large measure can beat any pile
    // of efficient small ones. Checking every affordable singleton
    // restores the classical approximation guarantee.
    let mut best = Best {
        residual: state.residual.clone(),
        cost: state.cost,
        chosen: (0..n).filter(|&j| taken[j]).collect(),
    };
    for (j, cand) in inst.cands.iter().enumerate() {
        if u128::from(cand.cost) > u128::from(budget) {
            continue;
        }
        let single = Best {
            residual: &inst.total - &cand.standalone_gain,
            cost: u128::from(cand.cost),
            chosen: vec![j],
        };
        if better_budget(&single, &best) {
            best = single;
        }
    }
    best
}

fn solve_greedy_assurance(inst: &Instance, bound: &BigRational) -> Result<Best, SelectError> {
    let n = inst.cands.len();
    let mut state = SearchState::start(inst);
    let mut taken = vec![false; n];
    while state.residual > *bound {
        match pick_best_ratio(inst, &state, &taken, None) {
            Some(j) => {
                state.apply(inst, j);
                taken[j] = true;
            }
            None => {
                // Only zero-gain measures remain, so the residual cannot
                // move again: this is the true floor, and the instance
                // really is infeasible.
                return Err(SelectError::Infeasible {
                    best_residual: state.residual.clone(),
                });
            }
        }
    }
    Ok(Best {
        residual: state.residual.clone(),
        cost: state.cost,
        chosen: (0..n).filter(|&j| taken[j]).collect(),
    })
}

// ---------------------------------------------------------------------------
// Oracle evaluation and plan assembly
// ---------------------------------------------------------------------------

/// From-scratch evaluation of one subset: fold every included measure's
/// keep-shares per threat, then subtract each touched threat's drop from
/// the baseline total. Deliberately shares no incremental machinery with
/// the searches above.
fn eval_mask(inst: &Instance, mask: u32) -> Best {
    let mut mult: BTreeMap<usize, BigRational> = BTreeMap::new();
    let mut cost: u128 = 0;
    let mut chosen = Vec::new();
    for (j, cand) in inst.cands.iter().enumerate() {
        if mask & (1 << j) == 0 {
            continue;
        }
        for c in &cand.coverage {
            let slot = mult.entry(c.threat).or_insert_with(BigRational::one);
            let updated = &*slot * &c.keep;
            *slot = updated;
        }
        cost += u128::from(cand.cost);
        chosen.push(j);
    }
    let mut residual = inst.total.clone();
    for (t, m) in &mult {
        residual -= &inst.base[*t] * (BigRational::one() - m);
    }
    Best {
        residual,
        cost,
        chosen,
    }
}

fn build_plan(
    model: &Model,
    inst: &Instance,
    mode: &SelectionMode,
    method: SolveMethod,
    best: &Best,
) -> Result<SelectionPlan, SelectError> {
    let total_cost = u64::try_from(best.cost)
        .map_err(|_| EngineError::Money(MoneyError::Overflow))
        .map(Money::new)?;

    // Per-threat rows recomputed from the chosen set, so the published
    // figures never depend on solver-internal state.
    let mut residual_total = BigRational::zero();
    let mut per_threat = Vec::with_capacity(inst.base.len());
    let mut mult = vec![BigRational::one(); inst.base.len()];
    for &j in &best.chosen {
        for c in &inst.cands[j].coverage {
            let updated = &mult[c.threat] * &c.keep;
            mult[c.threat] = updated;
        }
    }
    for (t, threat) in model.threats.iter().enumerate() {
        let residual = &inst.base[t] * &mult[t];
        residual_total += &residual;
        per_threat.push(ResidualRow {
            threat_id: threat.id.clone(),
            base_risk: inst.base[t].clone(),
            mitigation: BigRational::one() - &mult[t],
            residual,
        });
    }
    debug_assert_eq!(residual_total, best.residual);

    let chosen = best
        .chosen
        .iter()
        .map(|&j| ChosenMeasure {
            id: inst.cands[j].id.to_string(),
            cost: Money::new(inst.cands[j].cost),
        })
        .collect();

    Ok(SelectionPlan {
        mode: mode.clone(),
        method,
        assumed: inst.assumed.clone(),
        chosen,
        total_cost,
        total_risk: inst.total.clone(),
        mitigated_risk: &inst.total - &residual_total,
        residual_risk: residual_total,
        per_threat,
        currency: model.currency.clone(),
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnalysisConfig, Countermeasure, Mitigation, Threat, TreeNode};
    use crate::money::Factor;
    use num_bigint::BigInt;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn threat(id: &str, damage: u64, effort: u64) -> Threat {
        Threat {
            id: id.into(),
            title: id.to_uppercase(),
            damage: Money::new(damage),
            attacker_effort: Money::new(effort),
            notes: None,
        }
    }

    fn measure(id: &str, cost: u64, mitigates: &[(&str, u32)]) -> Countermeasure {
        Countermeasure {
            id: id.into(),
            title: id.to_uppercase(),
            cost: Money::new(cost),
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

    fn model_of(threats: Vec<Threat>, countermeasures: Vec<Countermeasure>) -> Model {
        let refs = threats.iter().map(|t| t.id.clone()).collect();
        Model {
            currency: "EUR".into(),
            config: AnalysisConfig {
                damage_threshold: Money::new(100),
                effort_threshold: Money::new(100),
            },
            threats,
            tree: TreeNode::Internal {
                id: "n-root".into(),
                label: "Root".into(),
                children: vec![TreeNode::Leaf {
                    id: "n-all".into(),
                    label: "All".into(),
                    threats: refs,
                }],
            },
            countermeasures,
        }
    }

    /// Risks {5, 6, 7} disjointly covered at full strength by m1(3),
    /// m2(4), m3(5).
    fn three_measures() -> Model {
        model_of(
            vec![
                threat("t-alpha", 50, 10),
                threat("t-beta", 60, 10),
                threat("t-gamma", 70, 10),
            ],
            vec![
                measure("m1", 3, &[("t-alpha", 10_000)]),
                measure("m2", 4, &[("t-beta", 10_000)]),
                measure("m3", 5, &[("t-gamma", 10_000)]),
            ],
        )
    }

    fn chosen_ids(plan: &SelectionPlan) -> Vec<&str> {
        plan.chosen.iter().map(|c| c.id.as_str()).collect()
    }

    #[test]
    fn budget_seven_buys_the_first_two() {
        let plan = select_budget(&three_measures(), Money::new(7)).unwrap();
        assert_eq!(chosen_ids(&plan), vec!["m1", "m2"]);
        assert_eq!(plan.mitigated_risk, ratio(11, 1));
        assert_eq!(plan.total_cost, Money::new(7));
        assert_eq!(plan.method, SolveMethod::Exact);
        assert_eq!(plan.total_risk, ratio(18, 1));
        assert_eq!(plan.residual_risk, ratio(7, 1));
    }

    #[test]
    fn budget_zero_is_the_empty_plan() {
        let plan = select_budget(&three_measures(), Money::ZERO).unwrap();
        assert!(plan.chosen.is_empty());
        assert_eq!(plan.mitigated_risk, ratio(0, 1));
        assert_eq!(plan.residual_risk, plan.total_risk);
    }

    #[test]
    fn ample_budget_never_buys_a_costlier_tie() {
        // m4 duplicates m3's coverage; adding it buys nothing.
        let mut model = three_measures();
        model
            .countermeasures
            .push(measure("m4", 9, &[("t-gamma", 10_000)]));
        let plan = select_budget(&model, Money::new(1_000)).unwrap();
        assert_eq!(chosen_ids(&plan), vec!["m1", "m2", "m3"]);
        assert_eq!(plan.total_cost, Money::new(12));
        assert_eq!(plan.residual_risk, ratio(0, 1));
    }

    #[test]
    fn assurance_picks_the_cheapest_sufficient_set() {
        let model = three_measures();
        let plan = select_assurance(&model, &ratio(7, 1)).unwrap();
        assert_eq!(chosen_ids(&plan), vec!["m1", "m2"]);
        assert_eq!(plan.total_cost, Money::new(7));
        assert_eq!(plan.residual_risk, ratio(7, 1));
    }

    #[test]
    fn assurance_at_the_baseline_needs_nothing() {
        let model = three_measures();
        let plan = select_assurance(&model, &ratio(18, 1)).unwrap();
        assert!(plan.chosen.is_empty());
        assert_eq!(plan.total_cost, Money::ZERO);
    }

    #[test]
    fn assurance_reports_the_floor_when_infeasible() {
        // t-bare has risk 2 and no coverage at all.
        let mut model = three_measures();
        model.threats.push(threat("t-bare", 20, 10));
        if let TreeNode::Internal { children, .. } = &mut model.tree {
            if let TreeNode::Leaf { threats, .. } = &mut children[0] {
                threats.push("t-bare".into());
            }
        }
        match select_assurance(&model, &ratio(0, 1)) {
            Err(SelectError::Infeasible { best_residual }) => {
                assert_eq!(best_residual, ratio(2, 1));
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn whatif_reduces_the_problem() {
        let model = three_measures();
        let mode = SelectionMode::Budget(Money::new(7));

        let plain = whatif(&model, &[], &mode).unwrap();
        assert_eq!(plain, select_budget(&model, Money::new(7)).unwrap());

        let plan = whatif(&model, &["m3"], &mode).unwrap();
        assert_eq!(chosen_ids(&plan), vec!["m1", "m2"]);
        assert_eq!(plan.assumed, vec!["m3"]);
        assert_eq!(plan.total_risk, ratio(11, 1));
        assert_eq!(plan.residual_risk, ratio(0, 1));

        let all = whatif(&model, &["m1", "m2", "m3"], &mode).unwrap();
        assert!(all.chosen.is_empty());
        assert_eq!(all.residual_risk, ratio(0, 1));
    }

    #[test]
    fn whatif_rejects_unknown_ids() {
        let model = three_measures();
        match whatif(&model, &["m-ghost"], &SelectionMode::Budget(Money::new(7))) {
            Err(SelectError::Engine(EngineError::UnknownCountermeasure(id))) => {
                assert_eq!(id, "m-ghost");
            }
            other => panic!("expected UnknownCountermeasure, got {other:?}"),
        }
    }

    #[test]
    fn oracle_agrees_with_exact_on_the_fixture() {
        let model = three_measures();
        for budget in 0..=13 {
            let mode = SelectionMode::Budget(Money::new(budget));
            let exact = select_with(&model, &mode, &[], false).unwrap();
            let oracle = oracle_select(&model, &mode).unwrap();
            assert_eq!(exact, oracle, "budget {budget}");
        }
    }

    #[test]
    fn oracle_handles_degenerate_instances() {
        let no_measures = model_of(vec![threat("t-a", 50, 10)], vec![]);
        let plan =
            oracle_select(&no_measures, &SelectionMode::Budget(Money::new(100))).unwrap();
        assert!(plan.chosen.is_empty());

        let one_pricey = model_of(
            vec![threat("t-a", 50, 10)],
            vec![measure("m-big", 1_000, &[("t-a", 10_000)])],
        );
        let plan = oracle_select(&one_pricey, &SelectionMode::Budget(Money::new(10))).unwrap();
        assert!(plan.chosen.is_empty());
        assert_eq!(plan.residual_risk, ratio(5, 1));
    }

    #[test]
    fn oracle_refuses_big_instances() {
        let threats: Vec<Threat> = (0..17).map(|i| threat(&format!("t-{i}"), 10, 10)).collect();
        let measures: Vec<Countermeasure> = (0..17)
            .map(|i| measure(&format!("m-{i:02}"), 1, &[(&format!("t-{i}"), 10_000)]))
            .collect();
        let model = model_of(threats, measures);
        match oracle_select(&model, &SelectionMode::Budget(Money::new(5))) {
            Err(SelectError::TooLarge(n)) => assert_eq!(n, 17),
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn greedy_falls_back_to_the_big_singleton() {
        // Ratio-greedy grabs the efficient small measures, which starves
        // the budget for the big one; the singleton check recovers it.
        let model = model_of(
            vec![
                threat("t-big", 250, 10),
                threat("t-s1", 30, 10),
                threat("t-s2", 30, 10),
            ],
            vec![
                measure("m-big", 10, &[("t-big", 10_000)]),
                measure("m-s1", 1, &[("t-s1", 10_000)]),
                measure("m-s2", 1, &[("t-s2", 10_000)]),
            ],
        );
        let greedy = select_greedy(&model, Money::new(10)).unwrap();
        assert_eq!(chosen_ids(&greedy), vec!["m-big"]);
        assert_eq!(greedy.method, SolveMethod::Greedy);
        let exact = select_budget(&model, Money::new(10)).unwrap();
        assert_eq!(greedy.mitigated_risk, exact.mitigated_risk);
    }

    #[test]
    fn greedy_never_beats_exact_and_identity_holds() {
        let model = three_measures();
        for budget in 0..=13 {
            let exact = select_budget(&model, Money::new(budget)).unwrap();
            let greedy = select_greedy(&model, Money::new(budget)).unwrap();
            assert!(greedy.mitigated_risk <= exact.mitigated_risk);
            let sum = &exact.mitigated_risk + &exact.residual_risk;
            assert_eq!(sum, exact.total_risk);
        }
    }

    #[test]
    fn duality_spot_check() {
        let model = three_measures();
        for budget in [0u64, 3, 5, 7, 9, 12] {
            let plan = select_budget(&model, Money::new(budget)).unwrap();
            let back = select_assurance(&model, &plan.residual_risk).unwrap();
            assert!(
                back.total_cost <= Money::new(budget),
                "budget {budget}: {:?} then {:?}",
                plan.total_cost,
                back.total_cost
            );
        }
    }
}
