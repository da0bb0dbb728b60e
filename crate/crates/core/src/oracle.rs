//! Explicit-state reference implementations used by tests.
//!
//! Nothing here touches the BDD engine or the game solver. Circuits are
//! evaluated gate by gate, 64 input assignments at a time.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::aiger::{AigerCircuit, InputPartition, Literal, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("step {step}: expected {expected} input values, got {found}")]
    PartialAssignment { step: usize, expected: usize, found: usize },
    #[error("{bits} bits exceed the explicit limit of {max}")]
    TooLarge { bits: usize, max: usize },
    #[error("expected exactly one output, found {0}")]
    OutputCount(usize),
    #[error("input partition does not cover the circuit's inputs")]
    PartitionMismatch,
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Upper bound on states times input assignments held in memory.
const MAX_TABLE_BITS: usize = 24;

const PATTERNS: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

/// Word of assignment `bit` for the 64 assignments starting at `64 * chunk`.
fn pattern(bit: usize, chunk: usize) -> u64 {
    if bit < 6 {
        PATTERNS[bit]
    } else if (chunk >> (bit - 6)) & 1 == 1 {
        !0
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy)]
struct Op {
    dst: usize,
    a: usize,
    a_neg: bool,
    b: usize,
    b_neg: bool,
}

/// A compiled circuit. Slot 0 holds constant false, then inputs, latches and
/// gates in evaluation order.
#[derive(Debug, Clone)]
pub struct Simulator {
    n_inputs: usize,
    n_latches: usize,
    ops: Vec<Op>,
    outputs: Vec<(usize, bool)>,
    next: Vec<(usize, bool)>,
    slots: usize,
}

impl Simulator {
    pub fn new(c: &AigerCircuit) -> Result<Self, OracleError> {
        c.validate()?;
        let mut slot: FxHashMap<u32, usize> = FxHashMap::default();
        slot.insert(0, 0);
        for (i, l) in c.inputs.iter().chain(c.latches.iter().map(|l| &l.state)).enumerate() {
            slot.insert(l.var(), i + 1);
        }

        // Kahn's algorithm over gate-to-gate edges
        let gate_of: FxHashMap<u32, usize> = c.ands.iter().enumerate().map(|(k, a)| (a.lhs.var(), k)).collect();
        let mut pending = vec![0usize; c.ands.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); c.ands.len()];
        for (k, a) in c.ands.iter().enumerate() {
            for op in [a.rhs0, a.rhs1] {
                if let Some(&d) = gate_of.get(&op.var()) {
                    pending[k] += 1;
                    users[d].push(k);
                }
            }
        }
        let mut ready: VecDeque<usize> = (0..c.ands.len()).filter(|&k| pending[k] == 0).collect();
        let mut ops = Vec::with_capacity(c.ands.len());
        let mut next_slot = 1 + c.inputs.len() + c.latches.len();
        while let Some(k) = ready.pop_front() {
            let a = &c.ands[k];
            slot.insert(a.lhs.var(), next_slot);
            ops.push(Op {
                dst: next_slot,
                a: slot[&a.rhs0.var()],
                a_neg: a.rhs0.is_negated(),
                b: slot[&a.rhs1.var()],
                b_neg: a.rhs1.is_negated(),
            });
            next_slot += 1;
            for &u in &users[k] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.push_back(u);
                }
            }
        }
        if ops.len() != c.ands.len() {
            let stuck = (0..c.ands.len()).find(|&k| pending[k] > 0).unwrap();
            return Err(OracleError::Cycle(c.ands[stuck].lhs.var()));
        }
        let lit = |l: Literal| (slot[&l.var()], l.is_negated());
        Ok(Simulator {
            n_inputs: c.inputs.len(),
            n_latches: c.latches.len(),
            ops,
            outputs: c.outputs.iter().map(|&l| lit(l)).collect(),
            next: c.latches.iter().map(|l| lit(l.next)).collect(),
            slots: next_slot,
        })
    }

    /// Evaluates all gates. `values` must have the input and latch slots set.
    fn run(&self, values: &mut [u64]) {
        values[0] = 0;
        for op in &self.ops {
            let a = values[op.a] ^ if op.a_neg { !0 } else { 0 };
            let b = values[op.b] ^ if op.b_neg { !0 } else { 0 };
            values[op.dst] = a & b;
        }
    }

    fn read(values: &[u64], (s, neg): (usize, bool)) -> u64 {
        values[s] ^ if neg { !0 } else { 0 }
    }

    /// One clock cycle: output values and the next latch values.
    pub fn step(&self, latches: &[bool], inputs: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let mut values = vec![0u64; self.slots];
        for (i, &b) in inputs.iter().enumerate() {
            values[1 + i] = b as u64;
        }
        for (j, &b) in latches.iter().enumerate() {
            values[1 + self.n_inputs + j] = b as u64;
        }
        self.run(&mut values);
        let outs = self.outputs.iter().map(|&o| Self::read(&values, o) & 1 == 1).collect();
        let next = self.next.iter().map(|&n| Self::read(&values, n) & 1 == 1).collect();
        (outs, next)
    }

    /// Per state, the error word and successor index for every input
    /// assignment. Assignment bit `p` drives input `order[p]`.
    fn tabulate(&self, order: &[usize], max_state_bits: usize) -> Result<Table, OracleError> {
        let (ni, nl) = (self.n_inputs, self.n_latches);
        if nl > max_state_bits {
            return Err(OracleError::TooLarge { bits: nl, max: max_state_bits });
        }
        if ni + nl > MAX_TABLE_BITS {
            return Err(OracleError::TooLarge { bits: ni + nl, max: MAX_TABLE_BITS });
        }
        let combos = 1usize << ni;
        let chunks = combos.div_ceil(64);
        let states = 1usize << nl;
        let mut err = vec![0u64; states * chunks];
        let mut next = vec![0u32; states * combos];
        let mut values = vec![0u64; self.slots];
        let (out_slot, next_slots) = (self.outputs[0], &self.next);
        let mut nw = vec![0u64; nl];
        for s in 0..states {
            for w in 0..chunks {
                for (p, &i) in order.iter().enumerate() {
                    values[1 + i] = pattern(p, w);
                }
                for j in 0..nl {
                    values[1 + ni + j] = if (s >> j) & 1 == 1 { !0 } else { 0 };
                }
                self.run(&mut values);
                let width = (combos - w * 64).min(64);
                let valid = if width == 64 { !0 } else { (1u64 << width) - 1 };
                err[s * chunks + w] = Self::read(&values, out_slot) & valid;
                for (j, &n) in next_slots.iter().enumerate() {
                    nw[j] = Self::read(&values, n);
                }
                for b in 0..width {
                    let mut t = 0u32;
                    for (j, word) in nw.iter().enumerate() {
                        t |= (((word >> b) & 1) as u32) << j;
                    }
                    next[s * combos + w * 64 + b] = t;
                }
            }
        }
        Ok(Table { chunks, combos, err, next })
    }
}

struct Table {
    chunks: usize,
    combos: usize,
    err: Vec<u64>,
    next: Vec<u32>,
}

impl Table {
    fn error_at(&self, s: usize, k: usize) -> bool {
        (self.err[s * self.chunks + k / 64] >> (k % 64)) & 1 == 1
    }
}

/// Cycle-accurate simulation from the all-zero reset. Returns the output
/// values of every step.
pub fn simulate(c: &AigerCircuit, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, OracleError> {
    let sim = Simulator::new(c)?;
    let mut latches = vec![false; c.latches.len()];
    let mut out = Vec::with_capacity(inputs.len());
    for (step, a) in inputs.iter().enumerate() {
        if a.len() != c.inputs.len() {
            return Err(OracleError::PartialAssignment { step, expected: c.inputs.len(), found: a.len() });
        }
        let (o, n) = sim.step(&latches, a);
        out.push(o);
        latches = n;
    }
    Ok(out)
}

/// Outcome of explicit game solving. State `s` assigns latch `j` the value
/// of bit `j` of `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitSolution {
    pub realizable: bool,
    pub winning: Vec<bool>,
}

/// Solves the safety game on output 0 by iterating the environment's
/// attractor over all states and input assignments.
pub fn enumerate_solve(
    c: &AigerCircuit,
    p: &InputPartition,
    max_state_bits: usize,
) -> Result<ExplicitSolution, OracleError> {
    if c.outputs.len() != 1 {
        return Err(OracleError::OutputCount(c.outputs.len()));
    }
    let mut covered: Vec<usize> = p.uncontrollable.iter().chain(&p.controllable).copied().collect();
    covered.sort_unstable();
    if covered != (0..c.inputs.len()).collect::<Vec<_>>() {
        return Err(OracleError::PartitionMismatch);
    }
    let sim = Simulator::new(c)?;
    // uncontrollable inputs occupy the low assignment bits
    let order: Vec<usize> = p.uncontrollable.iter().chain(&p.controllable).copied().collect();
    let t = sim.tabulate(&order, max_state_bits)?;
    let nu = 1usize << p.uncontrollable.len();
    let nc = 1usize << p.controllable.len();
    let states = 1usize << c.latches.len();

    let mut losing = vec![false; states];
    loop {
        let mut changed = false;
        for s in 0..states {
            if losing[s] {
                continue;
            }
            let forced = (0..nu).any(|u| {
                (0..nc).all(|cc| {
                    let k = u | (cc * nu);
                    t.error_at(s, k) || losing[t.next[s * t.combos + k] as usize]
                })
            });
            if forced {
                losing[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(ExplicitSolution { realizable: !losing[0], winning: losing.iter().map(|&l| !l).collect() })
}

/// Outcome of explicit reachability on a closed circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reach {
    /// No reachable state and input raise output 0. `depth` is the number of
    /// BFS layers explored.
    Safe { depth: usize },
    /// Output 0 can be raised after `steps` cycles, the last one included.
    Unsafe { steps: usize, trace: Vec<Vec<bool>> },
}

/// Breadth-first reachability from the all-zero reset, treating every input
/// as free.
pub fn explicit_reach(c: &AigerCircuit, max_bits: usize) -> Result<Reach, OracleError> {
    if c.outputs.is_empty() {
        return Err(OracleError::OutputCount(0));
    }
    let bits = c.inputs.len() + c.latches.len();
    if bits > max_bits {
        return Err(OracleError::TooLarge { bits, max: max_bits });
    }
    let sim = Simulator::new(c)?;
    let order: Vec<usize> = (0..c.inputs.len()).collect();
    let t = sim.tabulate(&order, max_bits)?;
    let states = 1usize << c.latches.len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; states];
    let mut seen = vec![false; states];
    seen[0] = true;
    let mut layer = vec![0usize];
    let mut depth = 0;
    let assignment = |k: usize| (0..c.inputs.len()).map(|i| (k >> i) & 1 == 1).collect::<Vec<bool>>();
    while !layer.is_empty() {
        depth += 1;
        for &s in &layer {
            if let Some(k) = (0..t.combos).find(|&k| t.error_at(s, k)) {
                let mut trace = vec![assignment(k)];
                let mut cur = s;
                while let Some((prev, kk)) = parent[cur] {
                    trace.push(assignment(kk));
                    cur = prev;
                }
                trace.reverse();
                return Ok(Reach::Unsafe { steps: trace.len(), trace });
            }
        }
        let mut next_layer = Vec::new();
        for &s in &layer {
            for k in 0..t.combos {
                let n = t.next[s * t.combos + k] as usize;
                if !seen[n] {
                    seen[n] = true;
                    parent[n] = Some((s, k));
                    next_layer.push(n);
                }
            }
        }
        layer = next_layer;
    }
    Ok(Reach::Safe { depth })
}
