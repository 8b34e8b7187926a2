//! Gate-level integer arithmetic primitives shared by the generators.
//!
//! All buses are LSB-first net vectors. Adders are ripple-carry; the final
//! carry out is dropped, so a width-W add is arithmetic mod 2^W — callers
//! size buses so true values always fit, which makes every result exact in
//! two's complement.

use crate::netlist::{Builder, NetId, CONST0, CONST1};

/// Inverted net, folding constants instead of emitting a gate.
pub(crate) fn inv(b: &mut Builder, x: NetId) -> NetId {
    match x {
        CONST0 => CONST1,
        CONST1 => CONST0,
        _ => b.add_gate("INV", &[x]),
    }
}

/// One full adder (5 gates): returns (sum, carry).
pub(crate) fn full_adder(b: &mut Builder, a: NetId, x: NetId, cin: NetId) -> (NetId, NetId) {
    let axb = b.add_gate("XOR2", &[a, x]);
    let s = b.add_gate("XOR2", &[axb, cin]);
    let g = b.add_gate("AND2", &[a, x]);
    let p = b.add_gate("AND2", &[axb, cin]);
    let cout = b.add_gate("OR2", &[g, p]);
    (s, cout)
}

/// `a + x + cin` over equal-width buses, result at the same width (carry
/// dropped: arithmetic mod 2^W).
pub(crate) fn ripple_add(b: &mut Builder, a: &[NetId], x: &[NetId], cin: NetId) -> Vec<NetId> {
    assert_eq!(a.len(), x.len());
    let mut carry = cin;
    let mut sum = Vec::with_capacity(a.len());
    for (&ai, &xi) in a.iter().zip(x) {
        let (s, c) = full_adder(b, ai, xi, carry);
        sum.push(s);
        carry = c;
    }
    sum
}

/// Widen a bus to `width` nets, replicating the sign bit or padding zeros.
pub(crate) fn extend(nets: &[NetId], width: usize, signed: bool) -> Vec<NetId> {
    assert!(width >= nets.len());
    let pad = if signed {
        *nets.last().expect("non-empty bus")
    } else {
        CONST0
    };
    let mut out = nets.to_vec();
    out.resize(width, pad);
    out
}

/// Exact signed addition: result width max(|a|,|x|) + 1.
pub(crate) fn add_signed(b: &mut Builder, a: &[NetId], x: &[NetId]) -> Vec<NetId> {
    let w = a.len().max(x.len()) + 1;
    let ae = extend(a, w, true);
    let xe = extend(x, w, true);
    ripple_add(b, &ae, &xe, CONST0)
}

/// Two's-complement constant as a bus of CONST0/CONST1, LSB first.
/// The value must fit: for signed interpretation, -2^(W-1) <= v < 2^(W-1).
pub(crate) fn const_bus(v: i64, width: usize) -> Vec<NetId> {
    assert!(width == 64 || (v >> width == 0) || (v >> width == -1), "constant {v} does not fit {width} bits");
    (0..width)
        .map(|i| if (v >> i) & 1 != 0 { CONST1 } else { CONST0 })
        .collect()
}

/// Sign bit of `a - x` (1 when a < x), comparing two equal-width buses as
/// signed or unsigned values. Implemented as subtraction one bit wider than
/// the operands so the difference cannot overflow.
pub(crate) fn less_than(b: &mut Builder, a: &[NetId], x: &[NetId], signed: bool) -> NetId {
    assert_eq!(a.len(), x.len());
    let w = a.len() + 1;
    let ae = extend(a, w, signed);
    let xe = extend(x, w, signed);
    let nx: Vec<NetId> = xe.iter().map(|&n| inv(b, n)).collect();
    let diff = ripple_add(b, &ae, &nx, CONST1);
    diff[w - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::CellLibrary;
    use crate::sim::simulate;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    #[test]
    fn ripple_add_is_exact_exhaustively() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 4);
        let y = b.add_input_bus("y", 4);
        let s = ripple_add(&mut b, &extend(&x, 5, false), &extend(&y, 5, false), CONST0);
        b.set_output("s", s, false);
        let n = b.finish();
        let vectors: Vec<Vec<u64>> = (0..16)
            .flat_map(|a| (0..16).map(move |c| vec![a, c]))
            .collect();
        for (row, v) in simulate(&n, &lib(), &vectors).unwrap().iter().zip(&vectors) {
            assert_eq!(row[0], (v[0] + v[1]) as i64);
        }
    }

    #[test]
    fn add_signed_handles_mixed_widths() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 3); // signed 3-bit: -4..=3
        let y = b.add_input_bus("y", 5); // signed 5-bit
        let s = add_signed(&mut b, &x, &y);
        assert_eq!(s.len(), 6);
        b.set_output("s", s, true);
        let n = b.finish();
        let mut vectors = Vec::new();
        let mut want = Vec::new();
        for a in -4i64..=3 {
            for c in -16i64..=15 {
                vectors.push(vec![(a & 7) as u64, (c & 31) as u64]);
                want.push(a + c);
            }
        }
        for (row, w) in simulate(&n, &lib(), &vectors).unwrap().iter().zip(&want) {
            assert_eq!(row[0], *w);
        }
    }

    #[test]
    fn less_than_signed_and_unsigned() {
        for signed in [false, true] {
            let mut b = Builder::new();
            let x = b.add_input_bus("x", 3);
            let y = b.add_input_bus("y", 3);
            let lt = less_than(&mut b, &x, &y, signed);
            b.set_output("lt", vec![lt], false);
            let n = b.finish();
            let range: Vec<i64> = if signed { (-4..=3).collect() } else { (0..=7).collect() };
            let mut vectors = Vec::new();
            let mut want = Vec::new();
            for &a in &range {
                for &c in &range {
                    vectors.push(vec![(a & 7) as u64, (c & 7) as u64]);
                    want.push((a < c) as i64);
                }
            }
            for (row, w) in simulate(&n, &lib(), &vectors).unwrap().iter().zip(&want) {
                assert_eq!(row[0], *w, "signed={signed}");
            }
        }
    }

    #[test]
    fn const_bus_round_trips() {
        assert_eq!(const_bus(5, 4), vec![CONST1, CONST0, CONST1, CONST0]);
        assert_eq!(const_bus(-1, 3), vec![CONST1, CONST1, CONST1]);
        assert_eq!(const_bus(-4, 3), vec![CONST0, CONST0, CONST1]);
    }
}
