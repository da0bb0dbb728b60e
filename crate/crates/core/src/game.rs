//! Symbolic safety games built from AIGER monitor circuits.
//!
//! The controller owns the controllable inputs and wins by keeping the
//! monitor output low forever. In each step the environment fixes the
//! uncontrollable inputs first and the controller may react to them.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;

use crate::aiger::{AigerCircuit, InputPartition, Literal, SymbolKind, ValidationError};
use crate::bdd::{BddManager, BddRef, Var};
use crate::limits::{LimitExceeded, Limits};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("safety specification must have exactly one output, found {0}")]
    OutputCount(usize),
    #[error("input partition does not match the circuit's {0} inputs")]
    PartitionMismatch(usize),
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Limit(#[from] LimitExceeded),
}

/// The symbolic game. It owns its BDD manager.
#[derive(Debug)]
pub struct SafetyGame {
    mgr: BddManager,
    pub state_vars: Vec<Var>,
    pub next_vars: Vec<Var>,
    pub u_vars: Vec<Var>,
    pub c_vars: Vec<Var>,
    /// Next-state function per latch over state, u and c variables.
    pub next_fn: Vec<BddRef>,
    pub error: BddRef,
    /// All latches zero.
    pub init: BddRef,
    pub partition: InputPartition,
    u_cube: BddRef,
    c_cube: BddRef,
    names: FxHashMap<Var, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Stop as soon as the initial state is known to be losing. The winning
    /// region of an unrealizable game is then only an over-approximation.
    pub early_exit: bool,
    /// Collect garbage between iterations once this many nodes are live.
    pub gc_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { early_exit: false, gc_threshold: 1 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveStats {
    pub peak_nodes: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy)]
pub struct GameResult {
    pub realizable: bool,
    /// Complement of the environment's attractor to error, over state vars.
    pub winning_region: BddRef,
    /// Number of predecessor computations performed.
    pub iterations: usize,
    /// False if the fixpoint was cut short by `early_exit`.
    pub complete: bool,
    pub stats: SolveStats,
}

/// Translates the circuit into a safety game. Variables are ordered
/// uncontrollable inputs, controllable inputs, then each latch followed by
/// its primed copy.
pub fn build_game(c: &AigerCircuit, p: &InputPartition, limits: Limits) -> Result<SafetyGame, GameError> {
    c.validate()?;
    if c.outputs.len() != 1 {
        return Err(GameError::OutputCount(c.outputs.len()));
    }
    let mut all: Vec<usize> = p.uncontrollable.iter().chain(&p.controllable).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != c.inputs.len()
        || p.uncontrollable.len() + p.controllable.len() != c.inputs.len()
        || all.last().is_some_and(|&i| i >= c.inputs.len())
    {
        return Err(GameError::PartitionMismatch(c.inputs.len()));
    }

    let mut mgr = BddManager::with_limits(limits);
    let mut names = FxHashMap::default();
    let mut leaves: FxHashMap<u32, BddRef> = FxHashMap::default();
    let mut input_vars = |mgr: &mut BddManager, idxs: &[usize], names: &mut FxHashMap<Var, String>| {
        idxs.iter()
            .map(|&i| {
                let v = mgr.new_var();
                let name = c.symbol(SymbolKind::Input, i).map(str::to_string).unwrap_or_else(|| format!("i{i}"));
                names.insert(v, name);
                leaves.insert(c.inputs[i].var(), mgr.var(v));
                v
            })
            .collect::<Vec<_>>()
    };
    let u_vars = input_vars(&mut mgr, &p.uncontrollable, &mut names);
    let c_vars = input_vars(&mut mgr, &p.controllable, &mut names);
    let mut state_vars = Vec::with_capacity(c.latches.len());
    let mut next_vars = Vec::with_capacity(c.latches.len());
    for (j, l) in c.latches.iter().enumerate() {
        let s = mgr.new_var();
        let sn = mgr.new_var();
        let name = c.symbol(SymbolKind::Latch, j).map(str::to_string).unwrap_or_else(|| format!("l{j}"));
        names.insert(sn, format!("{name}'"));
        names.insert(s, name);
        leaves.insert(l.state.var(), mgr.var(s));
        state_vars.push(s);
        next_vars.push(sn);
    }

    let mut roots: Vec<Literal> = c.latches.iter().map(|l| l.next).collect();
    roots.push(c.outputs[0]);
    let funcs = translate_cones(&mut mgr, c, &leaves, &roots)?;
    let (next_fn, error) = (funcs[..c.latches.len()].to_vec(), funcs[c.latches.len()]);

    let mut init = BddRef::TRUE;
    for &s in state_vars.iter().rev() {
        let ns = mgr.nvar(s);
        init = mgr.and(init, ns);
    }
    let u_cube = mgr.cube(&u_vars);
    let c_cube = mgr.cube(&c_vars);
    mgr.status()?;
    Ok(SafetyGame {
        mgr,
        state_vars,
        next_vars,
        u_vars,
        c_vars,
        next_fn,
        error,
        init,
        partition: p.clone(),
        u_cube,
        c_cube,
        names,
    })
}

/// BDDs for the given literals, translating each AND gate once.
fn translate_cones(
    mgr: &mut BddManager,
    c: &AigerCircuit,
    leaves: &FxHashMap<u32, BddRef>,
    roots: &[Literal],
) -> Result<Vec<BddRef>, GameError> {
    let gates: FxHashMap<u32, (Literal, Literal)> =
        c.ands.iter().map(|a| (a.lhs.var(), (a.rhs0, a.rhs1))).collect();
    let mut memo: FxHashMap<u32, BddRef> = leaves.clone();
    memo.insert(0, BddRef::FALSE);
    let mut on_stack = rustc_hash::FxHashSet::default();

    for root in roots {
        let mut stack = vec![(root.var(), false)];
        while let Some((v, ready)) = stack.pop() {
            if memo.contains_key(&v) {
                continue;
            }
            let (r0, r1) = gates[&v];
            if ready {
                let lit = |mgr: &mut BddManager, l: Literal, memo: &FxHashMap<u32, BddRef>| {
                    let f = memo[&l.var()];
                    if l.is_negated() {
                        mgr.not(f)
                    } else {
                        f
                    }
                };
                let a = lit(mgr, r0, &memo);
                let b = lit(mgr, r1, &memo);
                let f = mgr.and(a, b);
                memo.insert(v, f);
                on_stack.remove(&v);
                continue;
            }
            if !on_stack.insert(v) {
                return Err(GameError::Cycle(v));
            }
            stack.push((v, true));
            for op in [r0, r1] {
                if !memo.contains_key(&op.var()) {
                    if on_stack.contains(&op.var()) {
                        return Err(GameError::Cycle(op.var()));
                    }
                    stack.push((op.var(), false));
                }
            }
        }
        mgr.status()?;
    }
    Ok(roots
        .iter()
        .map(|l| {
            let f = memo[&l.var()];
            if l.is_negated() {
                mgr.not(f)
            } else {
                f
            }
        })
        .collect())
}

impl SafetyGame {
    pub fn manager(&self) -> &BddManager {
        &self.mgr
    }

    pub fn manager_mut(&mut self) -> &mut BddManager {
        &mut self.mgr
    }

    pub fn var_name(&self, v: Var) -> String {
        self.names.get(&v).cloned().unwrap_or_else(|| format!("v{}", v.0))
    }

    /// Graphviz rendering of `f` with circuit symbol names.
    pub fn to_dot(&self, f: BddRef) -> String {
        self.mgr.to_dot(f, |v| self.var_name(v))
    }

    /// `s` evaluated at the next state, as a function of state and inputs.
    pub fn substitute_next(&mut self, s: BddRef) -> BddRef {
        let subst: BTreeMap<Var, BddRef> = self.state_vars.iter().copied().zip(self.next_fn.iter().copied()).collect();
        self.mgr.compose(s, &subst)
    }

    /// States from which the environment can force error or a move into `s`
    /// in one step: `∃u ∀c. error ∨ next ∈ s`.
    pub fn upre(&mut self, s: BddRef) -> BddRef {
        let s_next = self.substitute_next(s);
        let bad = self.mgr.or(self.error, s_next);
        let forced = self.mgr.forall_cube(bad, self.c_cube);
        self.mgr.exists_cube(forced, self.u_cube)
    }

    /// States from which the controller can avoid error and move into `s`:
    /// `∀u ∃c. ¬error ∧ next ∈ s`.
    pub fn cpre(&mut self, s: BddRef) -> BddRef {
        let s_next = self.substitute_next(s);
        let ok = self.mgr.not(self.error);
        let safe = self.mgr.and(ok, s_next);
        let chosen = self.mgr.exists_cube(safe, self.c_cube);
        self.mgr.forall_cube(chosen, self.u_cube)
    }

    /// Runs the backward fixpoint on the losing side, seeded with the states
    /// where error can be forced immediately.
    pub fn solve(&mut self, opts: SolveOptions) -> Result<GameResult, LimitExceeded> {
        let start = Instant::now();
        let mut losing = self.upre(BddRef::FALSE);
        let mut iterations = 1;
        let mut complete = true;
        loop {
            self.mgr.status()?;
            if opts.early_exit && !self.mgr.and(self.init, losing).is_false() {
                complete = false;
                break;
            }
            let pre = self.upre(losing);
            iterations += 1;
            let grown = self.mgr.or(losing, pre);
            self.mgr.status()?;
            if grown == losing {
                break;
            }
            losing = grown;
            if self.mgr.live_nodes() > opts.gc_threshold {
                self.collect_garbage(&[losing]);
            }
        }
        let winning_region = self.mgr.not(losing);
        let realizable = self.mgr.and(self.init, losing).is_false();
        self.mgr.status()?;
        log::debug!("fixpoint after {iterations} iterations, realizable = {realizable}");
        Ok(GameResult {
            realizable,
            winning_region,
            iterations,
            complete,
            stats: SolveStats { peak_nodes: self.mgr.peak_nodes(), elapsed: start.elapsed() },
        })
    }

    /// Garbage-collects everything except the game's own functions and `keep`.
    pub fn collect_garbage(&mut self, keep: &[BddRef]) {
        let mut roots = keep.to_vec();
        roots.extend_from_slice(&self.next_fn);
        roots.extend([self.error, self.init, self.u_cube, self.c_cube]);
        self.mgr.gc(&roots);
    }

    /// Evaluates a function over state variables at the state whose latch `j`
    /// has value `bits[j]`.
    pub fn eval_state(&self, f: BddRef, bits: &[bool]) -> bool {
        let pos: FxHashMap<Var, usize> = self.state_vars.iter().enumerate().map(|(j, &v)| (v, j)).collect();
        self.mgr
            .eval(f, |v| pos.get(&v).map(|&j| bits[j]))
            .expect("function must range over state variables only")
    }
}
