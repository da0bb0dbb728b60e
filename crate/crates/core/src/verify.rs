//! Independent checking of synthesized solutions.
//!
//! The verifier builds its own BDDs from the combined circuit in a fresh
//! manager. It never sees the solver's game or winning region.

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::aiger::{AigerCircuit, InputPartition, Literal, ValidationError};
use crate::bdd::{BddManager, BddRef, Var};
use crate::limits::{Clock, Deadline, LimitExceeded, Limits};
use crate::synth::INVARIANT_SYMBOL;

/// Default budget for one verification run.
pub const DEFAULT_VERIFY_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("solution inputs must be exactly the uncontrollable inputs of the specification")]
    InputMismatch,
    #[error("solution output 0 is not the specification's monitor output")]
    MissingOutput,
    #[error("solution does not contain {0}")]
    NotContained(String),
    #[error("controllable input {0} is not driven by an AND gate")]
    Undriven(Literal),
    #[error("output {0} does not exist")]
    NoSuchOutput(usize),
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Limit(#[from] LimitExceeded),
}

/// Checks that `solution` implements `spec` and returns the closed circuit
/// to verify: the solution itself, whose output 0 is the monitor and whose
/// remaining free inputs are the uncontrollable ones.
pub fn combine(spec: &AigerCircuit, partition: &InputPartition, solution: &AigerCircuit) -> Result<AigerCircuit, VerifyError> {
    spec.validate()?;
    solution.validate()?;
    let want: FxHashSet<Literal> = partition.uncontrollable.iter().map(|&i| spec.inputs[i]).collect();
    let have: FxHashSet<Literal> = solution.inputs.iter().copied().collect();
    if want != have || have.len() != solution.inputs.len() {
        return Err(VerifyError::InputMismatch);
    }
    if spec.outputs.is_empty() || solution.outputs.first() != spec.outputs.first() {
        return Err(VerifyError::MissingOutput);
    }
    let latches: FxHashMap<Literal, Literal> = solution.latches.iter().map(|l| (l.state, l.next)).collect();
    for l in &spec.latches {
        if latches.get(&l.state) != Some(&l.next) {
            return Err(VerifyError::NotContained(format!("latch {} {}", l.state, l.next)));
        }
    }
    let gates: FxHashMap<Literal, (Literal, Literal)> =
        solution.ands.iter().map(|a| (a.lhs, (a.rhs0.max(a.rhs1), a.rhs0.min(a.rhs1)))).collect();
    for a in &spec.ands {
        if gates.get(&a.lhs) != Some(&(a.rhs0.max(a.rhs1), a.rhs0.min(a.rhs1))) {
            return Err(VerifyError::NotContained(format!("gate {} {} {}", a.lhs, a.rhs0, a.rhs1)));
        }
    }
    for &i in &partition.controllable {
        if !gates.contains_key(&spec.inputs[i]) {
            return Err(VerifyError::Undriven(spec.inputs[i]));
        }
    }
    Ok(solution.clone())
}

/// BDDs of a closed circuit: inputs first, then each latch with its primed
/// copy.
struct Encoding {
    mgr: BddManager,
    inputs: Vec<Var>,
    state: Vec<Var>,
    primed: Vec<Var>,
    next: Vec<BddRef>,
    outputs: Vec<BddRef>,
}

impl Encoding {
    fn new(c: &AigerCircuit, limits: Limits) -> Result<Self, VerifyError> {
        c.validate()?;
        let mut mgr = BddManager::with_limits(limits);
        let mut val: FxHashMap<u32, BddRef> = FxHashMap::default();
        val.insert(0, BddRef::FALSE);
        let inputs: Vec<Var> = c
            .inputs
            .iter()
            .map(|l| {
                let v = mgr.new_var();
                val.insert(l.var(), mgr.var(v));
                v
            })
            .collect();
        let (mut state, mut primed) = (Vec::new(), Vec::new());
        for l in &c.latches {
            let v = mgr.new_var();
            val.insert(l.state.var(), mgr.var(v));
            state.push(v);
            primed.push(mgr.new_var());
        }

        let gate_of: FxHashMap<u32, usize> = c.ands.iter().enumerate().map(|(k, a)| (a.lhs.var(), k)).collect();
        let mut indegree = vec![0u8; c.ands.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); c.ands.len()];
        for (k, a) in c.ands.iter().enumerate() {
            for op in [a.rhs0, a.rhs1] {
                if let Some(&d) = gate_of.get(&op.var()) {
                    indegree[k] += 1;
                    users[d].push(k);
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..c.ands.len()).filter(|&k| indegree[k] == 0).collect();
        let mut done = 0;
        while let Some(k) = queue.pop_front() {
            let a = &c.ands[k];
            let x = lit(&mut mgr, &val, a.rhs0);
            let y = lit(&mut mgr, &val, a.rhs1);
            let f = mgr.and(x, y);
            val.insert(a.lhs.var(), f);
            done += 1;
            for &u in &users[k] {
                indegree[u] -= 1;
                if indegree[u] == 0 {
                    queue.push_back(u);
                }
            }
        }
        if done != c.ands.len() {
            let k = (0..c.ands.len()).find(|&k| indegree[k] > 0).unwrap();
            return Err(VerifyError::Cycle(c.ands[k].lhs.var()));
        }
        mgr.status()?;
        let next = c.latches.iter().map(|l| lit(&mut mgr, &val, l.next)).collect();
        let outputs = c.outputs.iter().map(|&o| lit(&mut mgr, &val, o)).collect();
        Ok(Encoding { mgr, inputs, state, primed, next, outputs })
    }

    fn init(&mut self) -> BddRef {
        let lits: Vec<BddRef> = self.state.iter().map(|&s| self.mgr.nvar(s)).collect();
        self.mgr.and_all(lits)
    }

    fn next_of(&mut self, f: BddRef) -> BddRef {
        let subst: BTreeMap<Var, BddRef> = self.state.iter().copied().zip(self.next.iter().copied()).collect();
        self.mgr.compose(f, &subst)
    }

    /// Latch and input values of a satisfying assignment, unassigned
    /// variables set low.
    fn witness(&self, f: BddRef) -> Option<(Vec<bool>, Vec<bool>)> {
        let cube = self.mgr.pick_cube(f)?;
        let get = |v: &Var| cube.get(v).copied().unwrap_or(false);
        Some((self.state.iter().map(get).collect(), self.inputs.iter().map(get).collect()))
    }
}

fn lit(mgr: &mut BddManager, val: &FxHashMap<u32, BddRef>, l: Literal) -> BddRef {
    let f = val[&l.var()];
    if l.is_negated() {
        mgr.not(f)
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantCondition {
    /// The reset state is outside the invariant.
    Init,
    /// Some invariant state and input raise the monitor.
    ErrorOverlap,
    /// Some invariant state and input lead outside the invariant.
    Inductive,
    /// The invariant output depends on inputs.
    NotStateSet,
}

/// A single step witness: latch values and input values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub latches: Vec<bool>,
    pub inputs: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantCheck {
    Accept,
    Reject { condition: InvariantCondition, counterexample: Counterexample },
}

/// Checks that output `inv_output` of the combined circuit holds at reset,
/// excludes the monitor and is closed under the transition relation.
pub fn check_invariant(combined: &AigerCircuit, inv_output: usize, limits: Limits) -> Result<InvariantCheck, VerifyError> {
    if inv_output >= combined.outputs.len() || combined.outputs.is_empty() {
        return Err(VerifyError::NoSuchOutput(inv_output));
    }
    let mut e = Encoding::new(combined, limits)?;
    let inv = e.outputs[inv_output];
    let error = e.outputs[0];
    let reject = |e: &Encoding, condition, f| {
        let (latches, inputs) = e.witness(f).expect("satisfiable");
        Ok(InvariantCheck::Reject { condition, counterexample: Counterexample { latches, inputs } })
    };

    let support = e.mgr.support(inv);
    if support.iter().any(|v| e.inputs.contains(v)) {
        let n = e.mgr.nvar(support.into_iter().find(|v| e.inputs.contains(v)).unwrap());
        let w = e.mgr.or(inv, n);
        return reject(&e, InvariantCondition::NotStateSet, w);
    }
    let init = e.init();
    let bad_init = {
        let n = e.mgr.not(inv);
        e.mgr.and(init, n)
    };
    if !bad_init.is_false() {
        return reject(&e, InvariantCondition::Init, bad_init);
    }
    let overlap = e.mgr.and(inv, error);
    if !overlap.is_false() {
        return reject(&e, InvariantCondition::ErrorOverlap, overlap);
    }
    let inv_next = e.next_of(inv);
    let leave = {
        let n = e.mgr.not(inv_next);
        e.mgr.and(inv, n)
    };
    e.mgr.status()?;
    if !leave.is_false() {
        return reject(&e, InvariantCondition::Inductive, leave);
    }
    Ok(InvariantCheck::Accept)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum McResult {
    /// No reachable state raises the monitor; `iterations` reachability
    /// layers were explored.
    Safe { iterations: usize },
    /// Input values per step from reset; the monitor is raised in the last step.
    Unsafe { trace: Vec<Vec<bool>> },
    Timeout,
}

/// Forward BDD reachability from the all-zero reset on output 0 of a closed
/// circuit. Traces are shortest in the number of steps.
pub fn model_check(combined: &AigerCircuit, limits: Limits) -> Result<McResult, VerifyError> {
    match model_check_inner(combined, limits) {
        Err(VerifyError::Limit(LimitExceeded::Time)) => Ok(McResult::Timeout),
        r => r,
    }
}

fn model_check_inner(combined: &AigerCircuit, limits: Limits) -> Result<McResult, VerifyError> {
    if combined.outputs.is_empty() {
        return Err(VerifyError::NoSuchOutput(0));
    }
    let mut e = Encoding::new(combined, limits)?;
    let error = e.outputs[0];
    let mut trans = BddRef::TRUE;
    for j in (0..e.state.len()).rev() {
        let p = e.mgr.var(e.primed[j]);
        let eq = e.mgr.iff(p, e.next[j]);
        trans = e.mgr.and(trans, eq);
    }
    let current: Vec<Var> = e.inputs.iter().chain(&e.state).copied().collect();
    let unprime: BTreeMap<Var, BddRef> = e.primed.iter().zip(&e.state).map(|(&p, &s)| (p, e.mgr.var(s))).collect();
    let mut reached = e.init();
    let mut frontiers = vec![reached];
    loop {
        e.mgr.status()?;
        if limits.deadline.expired() {
            return Ok(McResult::Timeout);
        }
        let f = *frontiers.last().unwrap();
        let hit = e.mgr.and(f, error);
        if !hit.is_false() {
            return Ok(McResult::Unsafe { trace: trace_back(&mut e, &frontiers, trans, hit) });
        }
        let img = e.mgr.and_exists(f, trans, &current);
        let img = e.mgr.compose(img, &unprime);
        let not_reached = e.mgr.not(reached);
        let new = e.mgr.and(img, not_reached);
        e.mgr.status()?;
        if new.is_false() {
            return Ok(McResult::Safe { iterations: frontiers.len() });
        }
        reached = e.mgr.or(reached, new);
        frontiers.push(new);
    }
}

fn trace_back(e: &mut Encoding, frontiers: &[BddRef], trans: BddRef, hit: BddRef) -> Vec<Vec<bool>> {
    let (mut target, last) = e.witness(hit).unwrap();
    let mut trace = vec![last];
    for &f in frontiers[..frontiers.len() - 1].iter().rev() {
        let mut t = e.mgr.and(f, trans);
        for (j, &b) in target.iter().enumerate() {
            let p = e.mgr.literal(e.primed[j], b);
            t = e.mgr.and(t, p);
        }
        let (s, i) = e.witness(t).expect("frontier state has a predecessor");
        trace.push(i);
        target = s;
    }
    trace.reverse();
    trace
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Refuted(String),
    McTimeout,
}

/// Combines and checks a solution. An attached invariant output is tried
/// first; if it is missing or rejected the combined circuit is model checked.
pub fn verify_solution(
    spec: &AigerCircuit,
    partition: &InputPartition,
    solution: &AigerCircuit,
    deadline: Deadline,
    node_budget: usize,
) -> Verdict {
    let combined = match combine(spec, partition, solution) {
        Ok(c) => c,
        Err(e) => return Verdict::Refuted(e.to_string()),
    };
    let limits = Limits { node_budget, deadline };
    if let Some(k) = combined.output_named(INVARIANT_SYMBOL).filter(|&k| k > 0) {
        match check_invariant(&combined, k, limits) {
            Ok(InvariantCheck::Accept) => return Verdict::Confirmed,
            Ok(InvariantCheck::Reject { condition, .. }) => log::info!("invariant rejected ({condition:?})"),
            Err(VerifyError::Limit(LimitExceeded::Time)) => return Verdict::McTimeout,
            Err(e) => log::info!("invariant check failed: {e}"),
        }
    }
    match model_check(&combined, limits) {
        Ok(McResult::Safe { .. }) => Verdict::Confirmed,
        Ok(McResult::Unsafe { trace }) => Verdict::Refuted(format!("monitor raised after {} steps", trace.len())),
        Ok(McResult::Timeout) => Verdict::McTimeout,
        Err(e) => Verdict::Refuted(e.to_string()),
    }
}

/// Wall-clock deadline of the default verification budget.
pub fn default_deadline() -> Deadline {
    Deadline::after(Clock::Wall, DEFAULT_VERIFY_TIMEOUT)
}
