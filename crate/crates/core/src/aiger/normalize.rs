use rustc_hash::FxHashMap;

use super::{AigerCircuit, AndGate, Latch, Literal, NormalizeError};

/// True if inputs, latches and AND gates occupy consecutive variables in that
/// order, every gate is defined after its operands, and `rhs0 >= rhs1`.
pub fn is_normalized(c: &AigerCircuit) -> bool {
    let ni = c.inputs.len() as u64;
    let nl = c.latches.len() as u64;
    if c.max_var as u64 != ni + nl + c.ands.len() as u64 {
        return false;
    }
    let inputs_ok = c.inputs.iter().enumerate().all(|(i, l)| l.0 as u64 == 2 * (i as u64 + 1));
    let latches_ok = c.latches.iter().enumerate().all(|(j, l)| l.state.0 as u64 == 2 * (ni + j as u64 + 1));
    let ands_ok = c.ands.iter().enumerate().all(|(k, a)| {
        a.lhs.0 as u64 == 2 * (ni + nl + k as u64 + 1) && a.lhs > a.rhs0 && a.rhs0 >= a.rhs1
    });
    inputs_ok && latches_ok && ands_ok
}

/// Renumbers variables into the canonical binary-profile order. AND gates are
/// topologically sorted, keeping the original order wherever it is already
/// valid, so normalizing a normalized circuit is the identity.
pub fn normalize(c: &AigerCircuit) -> Result<AigerCircuit, NormalizeError> {
    c.validate()?;
    let mut map: FxHashMap<u32, u32> = FxHashMap::default();
    map.insert(0, 0);
    let mut next = 0u32;
    for i in &c.inputs {
        next += 1;
        map.insert(i.var(), next);
    }
    for l in &c.latches {
        next += 1;
        map.insert(l.state.var(), next);
    }

    let gate_of: FxHashMap<u32, usize> = c.ands.iter().enumerate().map(|(k, a)| (a.lhs.var(), k)).collect();
    // 0 = unvisited, 1 = on stack, 2 = numbered
    let mut state = vec![0u8; c.ands.len()];
    let mut order = Vec::with_capacity(c.ands.len());
    for root in 0..c.ands.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((k, expanded)) = stack.pop() {
            if expanded {
                state[k] = 2;
                order.push(k);
                continue;
            }
            match state[k] {
                2 => continue,
                1 => return Err(NormalizeError::Cycle(c.ands[k].lhs.var())),
                _ => {}
            }
            state[k] = 1;
            stack.push((k, true));
            let a = &c.ands[k];
            for op in [a.rhs1, a.rhs0] {
                if let Some(&dep) = gate_of.get(&op.var()) {
                    match state[dep] {
                        0 => stack.push((dep, false)),
                        1 => return Err(NormalizeError::Cycle(op.var())),
                        _ => {}
                    }
                }
            }
        }
    }
    for &k in &order {
        next += 1;
        map.insert(c.ands[k].lhs.var(), next);
    }

    let tr = |l: Literal| Literal::from_var(map[&l.var()], l.is_negated());
    let ands = order
        .iter()
        .map(|&k| {
            let a = &c.ands[k];
            let (x, y) = (tr(a.rhs0), tr(a.rhs1));
            AndGate { lhs: tr(a.lhs), rhs0: x.max(y), rhs1: x.min(y) }
        })
        .collect();
    Ok(AigerCircuit {
        max_var: next,
        inputs: c.inputs.iter().map(|&l| tr(l)).collect(),
        latches: c.latches.iter().map(|l| Latch { state: tr(l.state), next: tr(l.next) }).collect(),
        outputs: c.outputs.iter().map(|&l| tr(l)).collect(),
        ands,
        symbols: c.symbols.clone(),
        comments: c.comments.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::parse_ascii;

    #[test]
    fn identity_on_normalized() {
        let c = parse_ascii("aag 4 2 1 1 1\n2\n4\n6 8\n8\n8 6 3\ni0 a\n").unwrap();
        assert!(is_normalized(&c));
        assert_eq!(normalize(&c).unwrap(), c);
    }

    #[test]
    fn removes_gaps_and_reorders() {
        // gate 20 uses gate 30 which is listed after it
        let c = parse_ascii("aag 15 1 0 1 2\n10\n20\n20 30 10\n30 11 1\n").unwrap();
        let n = normalize(&c).unwrap();
        assert!(is_normalized(&n));
        assert_eq!(n.max_var, 3);
        assert_eq!(n.ands[0], AndGate { lhs: Literal(4), rhs0: Literal(3), rhs1: Literal(1) });
        assert_eq!(n.ands[1], AndGate { lhs: Literal(6), rhs0: Literal(4), rhs1: Literal(2) });
        assert_eq!(n.outputs, vec![Literal(6)]);
    }

    #[test]
    fn cycle_is_an_error() {
        let c = parse_ascii("aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n").unwrap();
        assert!(matches!(normalize(&c), Err(NormalizeError::Cycle(_))));
        let selfloop = parse_ascii("aag 2 1 0 1 1\n2\n4\n4 4 2\n").unwrap();
        assert!(matches!(normalize(&selfloop), Err(NormalizeError::Cycle(2))));
    }
}
