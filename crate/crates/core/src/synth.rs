//! Strategy extraction and solution circuits.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::aiger::{AigerCircuit, AndGate, Literal, SymbolKind};
use crate::bdd::{BddManager, BddRef, Var};
use crate::game::SafetyGame;

/// Symbol attached to the output carrying the inductive invariant.
pub const INVARIANT_SYMBOL: &str = "invariant";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("the initial state is not winning")]
    Unrealizable,
    #[error("BDD variable {0:?} has no circuit literal")]
    UnmappedVar(Var),
    #[error("strategy has {got} decisions but the specification has {expected} controllable inputs")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Limit(#[from] crate::limits::LimitExceeded),
}

/// A deterministic controller: one decision function per controllable input
/// (in partition order) over latches and uncontrollable inputs, plus the
/// winning region it stays in.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub decisions: Vec<BddRef>,
    pub invariant: BddRef,
}

/// Determinizes the safe-move relation `¬error ∧ next ∈ w` one controllable
/// input at a time, in declaration order. An input is set only where leaving
/// it low would make the remaining choices infeasible.
pub fn extract_strategy(g: &mut SafetyGame, w: BddRef) -> Result<Strategy, SynthError> {
    let init = g.init;
    if !g.manager_mut().leq(init, w) {
        return Err(SynthError::Unrealizable);
    }
    let w_next = g.substitute_next(w);
    let c_vars = g.c_vars.clone();
    let error = g.error;
    let m = g.manager_mut();
    let ok = m.not(error);
    let mut moves = m.and(ok, w_next);
    let mut decisions = Vec::with_capacity(c_vars.len());
    for (i, &c) in c_vars.iter().enumerate() {
        let feasible = m.exists(moves, &c_vars[i + 1..]);
        let low = m.restrict(feasible, c, false);
        let high = m.restrict(feasible, c, true);
        let not_low = m.not(low);
        let d = m.and(high, not_low);
        let mut subst = BTreeMap::new();
        subst.insert(c, d);
        moves = m.compose(moves, &subst);
        decisions.push(d);
    }
    m.status()?;
    Ok(Strategy { decisions, invariant: w })
}

/// BDD check of the closure property: from every invariant state, under every
/// uncontrollable input, the decisions avoid error and stay in the invariant.
pub fn check_closure(g: &mut SafetyGame, s: &Strategy) -> bool {
    let w_next = g.substitute_next(s.invariant);
    let subst: BTreeMap<Var, BddRef> = g.c_vars.iter().copied().zip(s.decisions.iter().copied()).collect();
    let (error, u_vars) = (g.error, g.u_vars.clone());
    let m = g.manager_mut();
    let ok = m.not(error);
    let safe = m.and(ok, w_next);
    let controlled = m.compose(safe, &subst);
    let always = m.forall(controlled, &u_vars);
    m.leq(s.invariant, always)
}

/// Incremental AND-graph construction with constant propagation and
/// structural hashing.
#[derive(Debug, Clone)]
pub struct AigBuilder {
    next_var: u32,
    pub ands: Vec<AndGate>,
    strash: FxHashMap<(Literal, Literal), Literal>,
    memo: FxHashMap<BddRef, Literal>,
}

impl AigBuilder {
    /// A builder allocating fresh variables above `max_var`.
    pub fn new(max_var: u32) -> Self {
        AigBuilder { next_var: max_var + 1, ands: Vec::new(), strash: FxHashMap::default(), memo: FxHashMap::default() }
    }

    /// Makes existing gates available for hashing.
    pub fn seed(&mut self, gates: &[AndGate]) {
        for a in gates {
            self.strash.insert(key(a.rhs0, a.rhs1), a.lhs);
        }
    }

    pub fn max_var(&self) -> u32 {
        self.next_var - 1
    }

    pub fn fresh_var(&mut self) -> u32 {
        let v = self.next_var;
        self.next_var += 1;
        v
    }

    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        if a == Literal::FALSE || b == Literal::FALSE || a == !b {
            return Literal::FALSE;
        }
        if a == Literal::TRUE || a == b {
            return b;
        }
        if b == Literal::TRUE {
            return a;
        }
        let k = key(a, b);
        if let Some(&l) = self.strash.get(&k) {
            return l;
        }
        let lhs = Literal::from_var(self.fresh_var(), false);
        self.ands.push(AndGate { lhs, rhs0: k.0, rhs1: k.1 });
        self.strash.insert(k, lhs);
        lhs
    }

    pub fn or(&mut self, a: Literal, b: Literal) -> Literal {
        !self.and(!a, !b)
    }

    /// `sel ? then : els`, three gates in the general case.
    pub fn mux(&mut self, sel: Literal, then: Literal, els: Literal) -> Literal {
        if then == els {
            return then;
        }
        match (then, els) {
            (Literal::TRUE, Literal::FALSE) => sel,
            (Literal::FALSE, Literal::TRUE) => !sel,
            (Literal::TRUE, e) => self.or(sel, e),
            (Literal::FALSE, e) => self.and(!sel, e),
            (t, Literal::TRUE) => self.or(!sel, t),
            (t, Literal::FALSE) => self.and(sel, t),
            (t, e) => {
                let a = self.and(sel, t);
                let b = self.and(!sel, e);
                self.or(a, b)
            }
        }
    }
}

fn key(a: Literal, b: Literal) -> (Literal, Literal) {
    (a.max(b), a.min(b))
}

/// Expands `b` into multiplexers over the literals in `var_map`. BDD nodes
/// already converted by this builder are reused.
pub fn bdd_to_aig(
    mgr: &BddManager,
    b: BddRef,
    builder: &mut AigBuilder,
    var_map: &FxHashMap<Var, Literal>,
) -> Result<Literal, SynthError> {
    if b.is_true() {
        return Ok(Literal::TRUE);
    }
    if b.is_false() {
        return Ok(Literal::FALSE);
    }
    if let Some(&l) = builder.memo.get(&b) {
        return Ok(l);
    }
    let (v, lo, hi) = mgr.node(b).expect("non-constant");
    let sel = *var_map.get(&v).ok_or(SynthError::UnmappedVar(v))?;
    let l = bdd_to_aig(mgr, lo, builder, var_map)?;
    let h = bdd_to_aig(mgr, hi, builder, var_map)?;
    let out = builder.mux(sel, h, l);
    builder.memo.insert(b, out);
    Ok(out)
}

/// Map from game variables to the spec literals they stand for.
pub fn literal_map(spec: &AigerCircuit, g: &SafetyGame) -> FxHashMap<Var, Literal> {
    let mut map = FxHashMap::default();
    for (k, &v) in g.u_vars.iter().enumerate() {
        map.insert(v, spec.inputs[g.partition.uncontrollable[k]]);
    }
    for (j, &v) in g.state_vars.iter().enumerate() {
        map.insert(v, spec.latches[j].state);
    }
    map
}

/// Builds the solution circuit: the complete specification in which every
/// controllable input is turned into an AND gate `c = decision ∧ 1` driven by
/// the strategy logic. The solution's inputs are the uncontrollable ones.
pub fn encode_solution(spec: &AigerCircuit, g: &SafetyGame, s: &Strategy) -> Result<AigerCircuit, SynthError> {
    let p = &g.partition;
    if s.decisions.len() != p.controllable.len() {
        return Err(SynthError::Shape { expected: p.controllable.len(), got: s.decisions.len() });
    }
    let var_map = literal_map(spec, g);
    let mut builder = AigBuilder::new(spec.max_var);
    let mut buffers = Vec::with_capacity(s.decisions.len());
    for (k, &d) in s.decisions.iter().enumerate() {
        let lit = bdd_to_aig(g.manager(), d, &mut builder, &var_map)?;
        buffers.push(AndGate { lhs: spec.inputs[p.controllable[k]], rhs0: lit, rhs1: Literal::TRUE });
    }

    let mut ands = spec.ands.clone();
    ands.extend(builder.ands.iter().copied());
    ands.extend(buffers);

    let mut symbols = BTreeMap::new();
    for ((kind, idx), name) in &spec.symbols {
        match kind {
            SymbolKind::Input => {
                if let Some(new_idx) = p.uncontrollable.iter().position(|i| i == idx) {
                    symbols.insert((SymbolKind::Input, new_idx), name.clone());
                }
            }
            _ => {
                symbols.insert((*kind, *idx), name.clone());
            }
        }
    }
    Ok(AigerCircuit {
        max_var: builder.max_var(),
        inputs: p.uncontrollable.iter().map(|&i| spec.inputs[i]).collect(),
        latches: spec.latches.clone(),
        outputs: spec.outputs.clone(),
        ands,
        symbols,
        comments: spec.comments.clone(),
    })
}

/// Number of AND gates, the size the quality ranking counts.
pub fn solution_size(c: &AigerCircuit) -> usize {
    c.ands.len()
}

/// Appends an output named [`INVARIANT_SYMBOL`] computing the strategy's
/// invariant over the latches.
pub fn emit_invariant(g: &SafetyGame, s: &Strategy, solution: &AigerCircuit) -> Result<AigerCircuit, SynthError> {
    let var_map: FxHashMap<Var, Literal> =
        g.state_vars.iter().enumerate().map(|(j, &v)| (v, solution.latches[j].state)).collect();
    let mut builder = AigBuilder::new(solution.max_var);
    builder.seed(&solution.ands);
    let lit = bdd_to_aig(g.manager(), s.invariant, &mut builder, &var_map)?;
    let mut out = solution.clone();
    out.max_var = builder.max_var();
    out.ands.extend(builder.ands.iter().copied());
    out.symbols.insert((SymbolKind::Output, out.outputs.len()), INVARIANT_SYMBOL.to_string());
    out.outputs.push(lit);
    Ok(out)
}
