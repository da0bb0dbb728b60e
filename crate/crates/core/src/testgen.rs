//! Random circuit generators for property tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::aiger::{AigerCircuit, AndGate, Latch, Literal, SymbolKind, CONTROLLABLE_PREFIX};

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_inputs: usize,
    pub max_latches: usize,
    pub max_ands: usize,
    pub max_outputs: usize,
}

impl Shape {
    pub const GAME: Shape = Shape { max_inputs: 6, max_latches: 16, max_ands: 48, max_outputs: 1 };
}

fn pick(rng: &mut impl Rng, pool: &[Literal]) -> Literal {
    let l = pool[rng.gen_range(0..pool.len())];
    if rng.gen_bool(0.5) {
        !l
    } else {
        l
    }
}

fn operand(rng: &mut impl Rng, pool: &[Literal]) -> Literal {
    if pool.is_empty() || rng.gen_bool(0.03) {
        Literal::FALSE
    } else {
        pick(rng, pool)
    }
}

/// A normalized circuit with random structure. Gates only reference earlier
/// variables; latch next functions and outputs reference anything. With a
/// small probability an operand is a constant.
pub fn random_circuit(rng: &mut impl Rng, shape: Shape) -> AigerCircuit {
    let ni = rng.gen_range(0..=shape.max_inputs);
    let nl = rng.gen_range(0..=shape.max_latches);
    let na = rng.gen_range(0..=shape.max_ands);
    let no = rng.gen_range(1..=shape.max_outputs.max(1));
    let mut c = AigerCircuit { max_var: (ni + nl + na) as u32, ..Default::default() };
    let mut pool = Vec::with_capacity(ni + nl + na + 1);
    for v in 1..=(ni + nl) as u32 {
        pool.push(Literal::from_var(v, false));
    }
    c.inputs = pool[..ni].to_vec();
    for k in 0..na {
        let lhs = Literal::from_var((ni + nl + k + 1) as u32, false);
        let (a, b) = (operand(rng, &pool), operand(rng, &pool));
        c.ands.push(AndGate { lhs, rhs0: a.max(b), rhs1: a.min(b) });
        pool.push(lhs);
    }
    pool.push(Literal::FALSE);
    // bias the output towards recent gates so it depends on more logic
    let tail = (pool.len() / 3).max(1);
    for j in 0..nl {
        let next = pick(rng, &pool);
        c.latches.push(Latch { state: Literal::from_var((ni + j + 1) as u32, false), next });
    }
    for _ in 0..no {
        let o = pick(rng, &pool[pool.len() - tail..]);
        c.outputs.push(o);
    }
    c
}

/// A random safety specification: one output and a random subset of
/// inputs marked controllable. Some other inputs carry plain names.
pub fn random_game(rng: &mut impl Rng, shape: Shape) -> AigerCircuit {
    let mut c = random_circuit(rng, Shape { max_outputs: 1, ..shape });
    for i in 0..c.inputs.len() {
        if rng.gen_bool(0.5) {
            c.symbols.insert((SymbolKind::Input, i), format!("{CONTROLLABLE_PREFIX}c{i}"));
        } else if rng.gen_bool(0.5) {
            c.symbols.insert((SymbolKind::Input, i), format!("u{i}"));
        }
    }
    if rng.gen_bool(0.5) {
        c.symbols.insert((SymbolKind::Output, 0), "err".into());
    }
    c
}

/// Renumbers variables with gaps and shuffles the AND gate order, keeping
/// inputs, latches, outputs and symbols positionally unchanged.
pub fn scramble(rng: &mut impl Rng, c: &AigerCircuit) -> AigerCircuit {
    let n = c.inputs.len() + c.latches.len() + c.ands.len();
    let mut fresh: Vec<u32> = (1..=(3 * n as u32 + 1)).collect();
    fresh.shuffle(rng);
    fresh.truncate(n);
    let mut map: FxHashMap<u32, u32> = FxHashMap::default();
    map.insert(0, 0);
    let olds = c.inputs.iter().chain(c.latches.iter().map(|l| &l.state)).chain(c.ands.iter().map(|a| &a.lhs));
    for (old, &new) in olds.zip(&fresh) {
        map.insert(old.var(), new);
    }
    let tr = |l: Literal| Literal::from_var(map[&l.var()], l.is_negated());
    let mut ands: Vec<AndGate> = c
        .ands
        .iter()
        .map(|a| {
            let (x, y) = (tr(a.rhs0), tr(a.rhs1));
            if rng.gen_bool(0.5) {
                AndGate { lhs: tr(a.lhs), rhs0: x, rhs1: y }
            } else {
                AndGate { lhs: tr(a.lhs), rhs0: y, rhs1: x }
            }
        })
        .collect();
    ands.shuffle(rng);
    AigerCircuit {
        max_var: fresh.iter().copied().max().unwrap_or(0),
        inputs: c.inputs.iter().map(|&l| tr(l)).collect(),
        latches: c.latches.iter().map(|l| Latch { state: tr(l.state), next: tr(l.next) }).collect(),
        outputs: c.outputs.iter().map(|&l| tr(l)).collect(),
        ands,
        symbols: c.symbols.clone(),
        comments: c.comments.clone(),
    }
}
