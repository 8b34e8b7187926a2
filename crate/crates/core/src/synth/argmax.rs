//! Argmax comparator trees.
//!
//! A tournament over the input words: each round compares pairs and a mux
//! forwards the winning (value, index) pair; on equality the left operand —
//! the lower original index — wins. Every gate emitted here joins the
//! netlist's decision subcircuit, which exempts it from pruning.

use crate::error::Result;
use crate::netlist::{optimize, Builder, CellLibrary, NetId, Netlist};
use crate::synth::arith::{const_bus, inv, less_than};
use crate::util::ceil_log2;

/// `sel ? a : b`, bitwise over equal-width buses.
fn mux_bus(b: &mut Builder, sel: NetId, a: &[NetId], x: &[NetId]) -> Vec<NetId> {
    debug_assert_eq!(a.len(), x.len());
    a.iter()
        .zip(x)
        .map(|(&ai, &xi)| b.add_gate("MUX2", &[xi, ai, sel]))
        .collect()
}

/// Emit an argmax tree over equal-width `values`; returns the index bus
/// (ceil(log2 k) bits, unsigned). Ties resolve to the lowest index.
pub(crate) fn argmax_into(b: &mut Builder, values: &[Vec<NetId>], signed: bool) -> Vec<NetId> {
    let k = values.len();
    assert!(k >= 2, "argmax needs at least two inputs");
    let idx_width = ceil_log2(k) as usize;
    b.record_decision(|b| {
        let mut items: Vec<(Vec<NetId>, Vec<NetId>)> = values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), const_bus(i as i64, idx_width)))
            .collect();
        while items.len() > 1 {
            let mut next = Vec::with_capacity(items.len().div_ceil(2));
            let mut pairs = items.chunks_exact(2);
            for pair in pairs.by_ref() {
                let (lv, li) = &pair[0];
                let (rv, ri) = &pair[1];
                // keep the left item when left >= right
                let lt = less_than(b, lv, rv, signed);
                let keep_left = inv(b, lt);
                let value = mux_bus(b, keep_left, lv, rv);
                let index = mux_bus(b, keep_left, li, ri);
                next.push((value, index));
            }
            next.extend(pairs.remainder().iter().cloned());
            items = next;
        }
        items.pop().expect("non-empty tournament").1
    })
}

/// Standalone argmax netlist: `k` input buses `i0..i{k-1}` of `width` bits,
/// output bus `idx`. Everything it contains is a decision gate.
pub fn gen_argmax(k: usize, width: u32, signed: bool, lib: &CellLibrary) -> Result<Netlist> {
    let mut b = Builder::new();
    let values: Vec<Vec<NetId>> = (0..k)
        .map(|i| b.add_input_bus(&format!("i{i}"), width as usize))
        .collect();
    let idx = argmax_into(&mut b, &values, signed);
    b.set_output("idx", idx, false);
    optimize(&b.finish(), lib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::golden::argmax_i64;
    use crate::sim::simulate;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    #[test]
    fn equal_inputs_pick_index_zero() {
        let n = gen_argmax(2, 4, false, &lib()).unwrap();
        let out = simulate(&n, &lib(), &[vec![7, 7]]).unwrap();
        assert_eq!(out[0][0], 0);
    }

    #[test]
    fn picks_the_maximum() {
        let n = gen_argmax(3, 4, false, &lib()).unwrap();
        let out = simulate(&n, &lib(), &[vec![1, 9, 3]]).unwrap();
        assert_eq!(out[0][0], 1);
    }

    #[test]
    fn signed_compare_orders_negatives_correctly() {
        let n = gen_argmax(2, 4, true, &lib()).unwrap();
        let out = simulate(&n, &lib(), &[vec![0xf, 0]]).unwrap(); // 0xf = -1 in 4 bits
        assert_eq!(out[0][0], 1);
    }

    #[test]
    fn exhaustive_against_reference_argmax() {
        for signed in [false, true] {
            let n = gen_argmax(3, 3, signed, &lib()).unwrap();
            let range: Vec<i64> = if signed {
                (-4..=3).collect()
            } else {
                (0..=7).collect()
            };
            let mut vectors = Vec::new();
            let mut want = Vec::new();
            for &a in &range {
                for &c in &range {
                    for &d in &range {
                        vectors.push(vec![(a & 7) as u64, (c & 7) as u64, (d & 7) as u64]);
                        want.push(argmax_i64(&[a, c, d]) as i64);
                    }
                }
            }
            for (row, w) in simulate(&n, &lib(), &vectors).unwrap().iter().zip(&want) {
                assert_eq!(row[0], *w, "signed={signed}");
            }
        }
    }

    #[test]
    fn every_gate_is_a_decision_gate() {
        let n = gen_argmax(5, 4, true, &lib()).unwrap();
        assert!(!n.gates.is_empty());
        for g in &n.gates {
            assert!(
                n.decision_gates.contains(&g.id),
                "gate {:?} not recorded",
                g.id
            );
        }
    }
}
