//! Reduced ordered binary decision diagrams.
//!
//! A [`BddManager`] owns a node store with a unique table, so every Boolean
//! function has exactly one [`BddRef`] per manager and semantic equality is
//! reference equality. Variables are ordered by creation: the variable
//! returned by the first call to [`BddManager::new_var`] is the root-most.
//!
//! Operations that blow the node budget or the deadline set an abort flag and
//! return junk from then on; callers check [`BddManager::status`] at
//! convenient points. Results computed after an abort are never cached.

mod dot;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU32, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::limits::{LimitExceeded, Limits};

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

const FALSE: u32 = 0;
const TRUE: u32 = 1;
const TERMINAL_VAR: u32 = u32::MAX;
const FREED_VAR: u32 = u32::MAX - 1;

/// A BDD variable. Smaller ids sit closer to the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// Handle to a node in one manager. The two constants are shared by all
/// managers; every other ref is tagged with the manager that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BddRef {
    mgr: u32,
    node: u32,
}

impl BddRef {
    pub const FALSE: BddRef = BddRef { mgr: 0, node: FALSE };
    pub const TRUE: BddRef = BddRef { mgr: 0, node: TRUE };

    pub fn is_const(self) -> bool {
        self.node < 2
    }

    pub fn is_true(self) -> bool {
        self == BddRef::TRUE
    }

    pub fn is_false(self) -> bool {
        self == BddRef::FALSE
    }

    /// Raw node index, stable until the next garbage collection.
    pub fn index(self) -> u32 {
        self.node
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BddError {
    #[error("assignment does not cover variable {0:?}")]
    Unassigned(Var),
}

#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Ite,
    Not,
    And,
    Or,
    Xor,
    Exists,
    Forall,
    AndExists,
}

pub struct BddManager {
    id: u32,
    nodes: Vec<Node>,
    free: Vec<u32>,
    unique: FxHashMap<(u32, u32, u32), u32>,
    cache: FxHashMap<(Op, u32, u32, u32), u32>,
    num_vars: u32,
    peak_live: usize,
    limits: Limits,
    aborted: Option<LimitExceeded>,
    steps: u64,
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for BddManager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BddManager")
            .field("id", &self.id)
            .field("vars", &self.num_vars)
            .field("live", &self.live_nodes())
            .finish()
    }
}

impl BddManager {
    pub fn new() -> Self {
        Self::with_limits(Limits::default())
    }

    pub fn with_limits(limits: Limits) -> Self {
        let terminal = Node { var: TERMINAL_VAR, lo: 0, hi: 0 };
        BddManager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal, Node { lo: 1, hi: 1, ..terminal }],
            free: Vec::new(),
            unique: FxHashMap::default(),
            cache: FxHashMap::default(),
            num_vars: 0,
            peak_live: 0,
            limits,
            aborted: None,
            steps: 0,
        }
    }

    pub fn set_limits(&mut self, limits: Limits) {
        self.limits = limits;
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    /// `Err` once any operation has hit a limit. All refs produced after that
    /// point are meaningless.
    pub fn status(&self) -> Result<(), LimitExceeded> {
        match self.aborted {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Clears the abort flag, e.g. after raising the limits.
    pub fn clear_abort(&mut self) {
        self.aborted = None;
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Internal nodes currently stored (excluding the two terminals).
    pub fn live_nodes(&self) -> usize {
        self.nodes.len() - 2 - self.free.len()
    }

    pub fn peak_nodes(&self) -> usize {
        self.peak_live
    }

    fn wrap(&self, node: u32) -> BddRef {
        if node < 2 {
            BddRef { mgr: 0, node }
        } else {
            BddRef { mgr: self.id, node }
        }
    }

    fn raw(&self, r: BddRef) -> u32 {
        assert!(
            r.mgr == self.id || (r.mgr == 0 && r.node < 2),
            "BDD ref from manager {} used with manager {}",
            r.mgr,
            self.id
        );
        r.node
    }

    fn check_var(&self, v: Var) {
        assert!(v.0 < self.num_vars, "variable {v:?} not allocated in this manager");
    }

    fn abort(&mut self, why: LimitExceeded) {
        if self.aborted.is_none() {
            log::debug!("BDD manager {} aborted: {why}", self.id);
            self.aborted = Some(why);
        }
    }

    #[inline]
    fn step(&mut self) -> bool {
        if self.aborted.is_some() {
            return false;
        }
        self.steps += 1;
        if self.steps & 0x3ff == 0 && self.limits.deadline.expired() {
            self.abort(LimitExceeded::Time);
            return false;
        }
        true
    }

    #[inline]
    fn level(&self, n: u32) -> u32 {
        self.nodes[n as usize].var
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        if let Some(&n) = self.unique.get(&(var, lo, hi)) {
            return n;
        }
        if self.aborted.is_some() {
            return FALSE;
        }
        if self.live_nodes() >= self.limits.node_budget {
            self.abort(LimitExceeded::Nodes);
            return FALSE;
        }
        let node = Node { var, lo, hi };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        self.unique.insert((var, lo, hi), idx);
        self.peak_live = self.peak_live.max(self.live_nodes());
        idx
    }

    fn cofactors(&self, n: u32, var: u32) -> (u32, u32) {
        let node = self.nodes[n as usize];
        if node.var == var {
            (node.lo, node.hi)
        } else {
            (n, n)
        }
    }

    fn cached(&self, key: (Op, u32, u32, u32)) -> Option<u32> {
        self.cache.get(&key).copied()
    }

    fn remember(&mut self, key: (Op, u32, u32, u32), r: u32) -> u32 {
        if self.aborted.is_none() {
            self.cache.insert(key, r);
        }
        r
    }

    // ---- public constructors -------------------------------------------

    pub fn constant(&self, value: bool) -> BddRef {
        if value {
            BddRef::TRUE
        } else {
            BddRef::FALSE
        }
    }

    pub fn var(&mut self, v: Var) -> BddRef {
        self.check_var(v);
        let n = self.mk(v.0, FALSE, TRUE);
        self.wrap(n)
    }

    pub fn nvar(&mut self, v: Var) -> BddRef {
        self.check_var(v);
        let n = self.mk(v.0, TRUE, FALSE);
        self.wrap(n)
    }

    pub fn literal(&mut self, v: Var, positive: bool) -> BddRef {
        if positive {
            self.var(v)
        } else {
            self.nvar(v)
        }
    }

    /// Conjunction of the given variables, all positive.
    pub fn cube(&mut self, vars: &[Var]) -> BddRef {
        let mut sorted: Vec<u32> = vars.iter().map(|v| v.0).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut r = TRUE;
        for &v in sorted.iter().rev() {
            self.check_var(Var(v));
            r = self.mk(v, FALSE, r);
        }
        self.wrap(r)
    }

    // ---- Boolean connectives -------------------------------------------

    pub fn not(&mut self, f: BddRef) -> BddRef {
        let f = self.raw(f);
        let r = self.not_rec(f);
        self.wrap(r)
    }

    pub fn and(&mut self, f: BddRef, g: BddRef) -> BddRef {
        let (f, g) = (self.raw(f), self.raw(g));
        let r = self.apply(Op::And, f, g);
        self.wrap(r)
    }

    pub fn or(&mut self, f: BddRef, g: BddRef) -> BddRef {
        let (f, g) = (self.raw(f), self.raw(g));
        let r = self.apply(Op::Or, f, g);
        self.wrap(r)
    }

    pub fn xor(&mut self, f: BddRef, g: BddRef) -> BddRef {
        let (f, g) = (self.raw(f), self.raw(g));
        let r = self.apply(Op::Xor, f, g);
        self.wrap(r)
    }

    pub fn iff(&mut self, f: BddRef, g: BddRef) -> BddRef {
        let x = self.xor(f, g);
        self.not(x)
    }

    pub fn implies(&mut self, f: BddRef, g: BddRef) -> BddRef {
        let nf = self.not(f);
        self.or(nf, g)
    }

    pub fn ite(&mut self, f: BddRef, g: BddRef, h: BddRef) -> BddRef {
        let (f, g, h) = (self.raw(f), self.raw(g), self.raw(h));
        let r = self.ite_rec(f, g, h);
        self.wrap(r)
    }

    /// `f ⇒ g` holds for every assignment.
    pub fn leq(&mut self, f: BddRef, g: BddRef) -> bool {
        let ng = self.not(g);
        self.and(f, ng).is_false()
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = BddRef>) -> BddRef {
        fs.into_iter().fold(BddRef::TRUE, |acc, f| self.and(acc, f))
    }

    pub fn or_all(&mut self, fs: impl IntoIterator<Item = BddRef>) -> BddRef {
        fs.into_iter().fold(BddRef::FALSE, |acc, f| self.or(acc, f))
    }

    fn not_rec(&mut self, f: u32) -> u32 {
        if f < 2 {
            return f ^ 1;
        }
        if !self.step() {
            return FALSE;
        }
        let key = (Op::Not, f, 0, 0);
        if let Some(r) = self.cached(key) {
            return r;
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let l = self.not_rec(lo);
        let h = self.not_rec(hi);
        let r = self.mk(var, l, h);
        self.remember(key, r)
    }

    fn apply(&mut self, op: Op, f: u32, g: u32) -> u32 {
        match op {
            Op::And => {
                if f == FALSE || g == FALSE {
                    return FALSE;
                }
                if f == TRUE || f == g {
                    return g;
                }
                if g == TRUE {
                    return f;
                }
            }
            Op::Or => {
                if f == TRUE || g == TRUE {
                    return TRUE;
                }
                if f == FALSE || f == g {
                    return g;
                }
                if g == FALSE {
                    return f;
                }
            }
            Op::Xor => {
                if f == g {
                    return FALSE;
                }
                if f == FALSE {
                    return g;
                }
                if g == FALSE {
                    return f;
                }
                if f == TRUE {
                    return self.not_rec(g);
                }
                if g == TRUE {
                    return self.not_rec(f);
                }
            }
            _ => unreachable!(),
        }
        if !self.step() {
            return FALSE;
        }
        let (a, b) = if f < g { (f, g) } else { (g, f) };
        let key = (op, a, b, 0);
        if let Some(r) = self.cached(key) {
            return r;
        }
        let top = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, top);
        let (b0, b1) = self.cofactors(b, top);
        let lo = self.apply(op, a0, b0);
        let hi = self.apply(op, a1, b1);
        let r = self.mk(top, lo, hi);
        self.remember(key, r)
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> u32 {
        if f == TRUE {
            return g;
        }
        if f == FALSE {
            return h;
        }
        if g == h {
            return g;
        }
        if g == TRUE && h == FALSE {
            return f;
        }
        if g == FALSE && h == TRUE {
            return self.not_rec(f);
        }
        if g == TRUE || f == g {
            return self.apply(Op::Or, f, h);
        }
        if h == FALSE || f == h {
            return self.apply(Op::And, f, g);
        }
        if !self.step() {
            return FALSE;
        }
        let key = (Op::Ite, f, g, h);
        if let Some(r) = self.cached(key) {
            return r;
        }
        let top = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let (h0, h1) = self.cofactors(h, top);
        let lo = self.ite_rec(f0, g0, h0);
        let hi = self.ite_rec(f1, g1, h1);
        let r = self.mk(top, lo, hi);
        self.remember(key, r)
    }

    // ---- quantification --------------------------------------------------

    /// Existential projection of `vars` out of `f`.
    pub fn exists(&mut self, f: BddRef, vars: &[Var]) -> BddRef {
        let cube = self.cube(vars);
        self.exists_cube(f, cube)
    }

    /// Universal projection of `vars` out of `f`.
    pub fn forall(&mut self, f: BddRef, vars: &[Var]) -> BddRef {
        let cube = self.cube(vars);
        self.forall_cube(f, cube)
    }

    /// Like [`exists`](Self::exists) with the variables given as a positive cube.
    pub fn exists_cube(&mut self, f: BddRef, cube: BddRef) -> BddRef {
        let (f, c) = (self.raw(f), self.raw(cube));
        let r = self.quant(Op::Exists, f, c);
        self.wrap(r)
    }

    pub fn forall_cube(&mut self, f: BddRef, cube: BddRef) -> BddRef {
        let (f, c) = (self.raw(f), self.raw(cube));
        let r = self.quant(Op::Forall, f, c);
        self.wrap(r)
    }

    /// `∃ vars. f ∧ g` without building the conjunction first.
    pub fn and_exists(&mut self, f: BddRef, g: BddRef, vars: &[Var]) -> BddRef {
        let cube = self.cube(vars);
        let (f, g, c) = (self.raw(f), self.raw(g), self.raw(cube));
        let r = self.and_exists_rec(f, g, c);
        self.wrap(r)
    }

    fn quant(&mut self, op: Op, f: u32, mut cube: u32) -> u32 {
        if f < 2 {
            return f;
        }
        let top = self.level(f);
        while cube >= 2 && self.level(cube) < top {
            cube = self.nodes[cube as usize].hi;
        }
        if cube < 2 {
            return f;
        }
        if !self.step() {
            return FALSE;
        }
        let key = (op, f, cube, 0);
        if let Some(r) = self.cached(key) {
            return r;
        }
        let Node { lo, hi, .. } = self.nodes[f as usize];
        let r = if self.level(cube) == top {
            let rest = self.nodes[cube as usize].hi;
            let l = self.quant(op, lo, rest);
            let short = if op == Op::Exists { TRUE } else { FALSE };
            if l == short {
                short
            } else {
                let h = self.quant(op, hi, rest);
                let join = if op == Op::Exists { Op::Or } else { Op::And };
                self.apply(join, l, h)
            }
        } else {
            let l = self.quant(op, lo, cube);
            let h = self.quant(op, hi, cube);
            self.mk(top, l, h)
        };
        self.remember(key, r)
    }

    fn and_exists_rec(&mut self, f: u32, g: u32, mut cube: u32) -> u32 {
        if f == FALSE || g == FALSE {
            return FALSE;
        }
        if f == TRUE && g == TRUE {
            return TRUE;
        }
        if cube == TRUE {
            return self.apply(Op::And, f, g);
        }
        if f == TRUE || f == g {
            return self.quant(Op::Exists, g, cube);
        }
        if g == TRUE {
            return self.quant(Op::Exists, f, cube);
        }
        let top = self.level(f).min(self.level(g));
        while cube >= 2 && self.level(cube) < top {
            cube = self.nodes[cube as usize].hi;
        }
        if cube < 2 {
            return self.apply(Op::And, f, g);
        }
        if !self.step() {
            return FALSE;
        }
        let (a, b) = if f < g { (f, g) } else { (g, f) };
        let key = (Op::AndExists, a, b, cube);
        if let Some(r) = self.cached(key) {
            return r;
        }
        let (a0, a1) = self.cofactors(a, top);
        let (b0, b1) = self.cofactors(b, top);
        let r = if self.level(cube) == top {
            let rest = self.nodes[cube as usize].hi;
            let l = self.and_exists_rec(a0, b0, rest);
            if l == TRUE {
                TRUE
            } else {
                let h = self.and_exists_rec(a1, b1, rest);
                self.apply(Op::Or, l, h)
            }
        } else {
            let l = self.and_exists_rec(a0, b0, cube);
            let h = self.and_exists_rec(a1, b1, cube);
            self.mk(top, l, h)
        };
        self.remember(key, r)
    }

    // ---- substitution ----------------------------------------------------

    /// Simultaneous substitution of variables by functions.
    pub fn compose(&mut self, f: BddRef, subst: &BTreeMap<Var, BddRef>) -> BddRef {
        let f = self.raw(f);
        if subst.is_empty() || f < 2 {
            return self.wrap(f);
        }
        let mut table: Vec<Option<u32>> = vec![None; self.num_vars as usize];
        for (v, g) in subst {
            self.check_var(*v);
            table[v.0 as usize] = Some(self.raw(*g));
        }
        // variables at or below this level are never substituted
        let last = subst.keys().next_back().map(|v| v.0).unwrap_or(0);
        let mut memo = FxHashMap::default();
        let r = self.compose_rec(f, &table, last, &mut memo);
        self.wrap(r)
    }

    /// Like [`compose`](Self::compose) with the substitution given as a dense
    /// table indexed by variable id.
    pub fn compose_vec(&mut self, f: BddRef, table: &[Option<BddRef>]) -> BddRef {
        let map: BTreeMap<Var, BddRef> =
            table.iter().enumerate().filter_map(|(i, g)| g.map(|g| (Var(i as u32), g))).collect();
        self.compose(f, &map)
    }

    fn compose_rec(&mut self, f: u32, table: &[Option<u32>], last: u32, memo: &mut FxHashMap<u32, u32>) -> u32 {
        if f < 2 || self.level(f) > last {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        if !self.step() {
            return FALSE;
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let l = self.compose_rec(lo, table, last, memo);
        let h = self.compose_rec(hi, table, last, memo);
        let g = match table[var as usize] {
            Some(g) => g,
            None => self.mk(var, FALSE, TRUE),
        };
        let r = self.ite_rec(g, h, l);
        if self.aborted.is_none() {
            memo.insert(f, r);
        }
        r
    }

    /// Shannon cofactor of `f` with `v` fixed to `value`.
    pub fn restrict(&mut self, f: BddRef, v: Var, value: bool) -> BddRef {
        let c = self.constant(value);
        let mut m = BTreeMap::new();
        m.insert(v, c);
        self.compose(f, &m)
    }

    // ---- inspection --------------------------------------------------------

    /// Evaluates `f` under `assignment`. Only variables on the evaluated path
    /// need to be assigned.
    pub fn eval(&self, f: BddRef, assignment: impl Fn(Var) -> Option<bool>) -> Result<bool, BddError> {
        let mut n = self.raw(f);
        while n >= 2 {
            let node = self.nodes[n as usize];
            let v = Var(node.var);
            n = match assignment(v) {
                Some(true) => node.hi,
                Some(false) => node.lo,
                None => return Err(BddError::Unassigned(v)),
            };
        }
        Ok(n == TRUE)
    }

    /// Convenience wrapper over [`eval`](Self::eval) for map-shaped assignments.
    pub fn eval_map(&self, f: BddRef, assignment: &BTreeMap<Var, bool>) -> Result<bool, BddError> {
        self.eval(f, |v| assignment.get(&v).copied())
    }

    /// A satisfying cube of `f`: the variables fixed along one path to TRUE.
    /// Variables not in the cube are don't-cares. `None` iff `f` is FALSE.
    pub fn pick_cube(&self, f: BddRef) -> Option<BTreeMap<Var, bool>> {
        let mut n = self.raw(f);
        if n == FALSE {
            return None;
        }
        let mut cube = BTreeMap::new();
        while n >= 2 {
            let node = self.nodes[n as usize];
            if node.lo != FALSE {
                cube.insert(Var(node.var), false);
                n = node.lo;
            } else {
                cube.insert(Var(node.var), true);
                n = node.hi;
            }
        }
        Some(cube)
    }

    /// Number of internal nodes reachable from `f`.
    pub fn node_count(&self, f: BddRef) -> usize {
        self.node_count_many(&[f])
    }

    /// Number of distinct internal nodes reachable from any of `fs`.
    pub fn node_count_many(&self, fs: &[BddRef]) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack: Vec<u32> = fs.iter().map(|&f| self.raw(f)).collect();
        while let Some(n) = stack.pop() {
            if n < 2 || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        seen.len()
    }

    /// Variables `f` depends on, in order.
    pub fn support(&self, f: BddRef) -> Vec<Var> {
        let mut seen = FxHashSet::default();
        let mut vars = std::collections::BTreeSet::new();
        let mut stack = vec![self.raw(f)];
        while let Some(n) = stack.pop() {
            if n < 2 || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            vars.insert(Var(node.var));
            stack.push(node.lo);
            stack.push(node.hi);
        }
        vars.into_iter().collect()
    }

    /// Decomposes an internal node into `(var, low, high)`.
    pub fn node(&self, f: BddRef) -> Option<(Var, BddRef, BddRef)> {
        let n = self.raw(f);
        if n < 2 {
            return None;
        }
        let node = self.nodes[n as usize];
        Some((Var(node.var), self.wrap(node.lo), self.wrap(node.hi)))
    }

    // ---- memory ----------------------------------------------------------------

    /// Frees every node not reachable from `roots` and clears the operation
    /// cache. Refs not covered by `roots` must not be used afterwards.
    pub fn gc(&mut self, roots: &[BddRef]) {
        let mut mark = vec![false; self.nodes.len()];
        mark[0] = true;
        mark[1] = true;
        let mut stack: Vec<u32> = roots.iter().map(|&r| self.raw(r)).collect();
        while let Some(n) = stack.pop() {
            if mark[n as usize] {
                continue;
            }
            mark[n as usize] = true;
            let node = self.nodes[n as usize];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        let before = self.live_nodes();
        for (i, alive) in mark.iter().enumerate().skip(2) {
            let node = self.nodes[i];
            if !alive && node.var != FREED_VAR {
                self.unique.remove(&(node.var, node.lo, node.hi));
                self.nodes[i].var = FREED_VAR;
                self.free.push(i as u32);
            }
        }
        self.cache.clear();
        log::trace!("gc: {} -> {} live nodes", before, self.live_nodes());
    }

    /// Graphviz rendering of `f`, labelling variables with `name`.
    pub fn to_dot(&self, f: BddRef, name: impl Fn(Var) -> String) -> String {
        dot::render(self, self.raw(f), name)
    }
}
