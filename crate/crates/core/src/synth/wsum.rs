//! Weighted-sum blocks: N bespoke multipliers into a balanced adder tree,
//! with the intercept folded in as a constant operand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{optimize, Builder, CellLibrary, NetId, Netlist, CONST0};
use crate::synth::arith::{add_signed, const_bus, extend, ripple_add};
use crate::synth::mult::mult_const_into;
use crate::util::ceil_log2;

/// One hardwired weighted sum `sum(x_i * w_i) + intercept` over unsigned
/// `in_bits`-wide inputs and signed `coeff_bits`-wide constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedSumSpec {
    pub weights: Vec<i64>,
    pub intercept: i64,
    pub in_bits: u32,
    pub coeff_bits: u32,
}

impl WeightedSumSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.weights.is_empty() {
            return fail("weighted sum needs at least one term".into());
        }
        if self.in_bits == 0 || self.coeff_bits < 2 {
            return fail(format!(
                "bad widths: in_bits={}, coeff_bits={}",
                self.in_bits, self.coeff_bits
            ));
        }
        let lo = -(1i64 << (self.coeff_bits - 1));
        let hi = (1i64 << (self.coeff_bits - 1)) - 1;
        if let Some(w) = self.weights.iter().find(|&&w| w < lo || w > hi) {
            return fail(format!("weight {w} outside signed {}-bit range", self.coeff_bits));
        }
        let in_max = (1i64 << self.in_bits) - 1;
        let reach: i64 = self.weights.iter().map(|w| w.abs() * in_max).sum::<i64>()
            + self.intercept.abs();
        let cap = (1i64 << (self.sum_width() - 1)) - 1;
        if reach > cap {
            return fail(format!(
                "intercept {} pushes the accumulator past its {}-bit budget",
                self.intercept,
                self.sum_width()
            ));
        }
        Ok(())
    }

    /// Output width: in_bits + coeff_bits + ceil(log2 N) + 1.
    pub fn sum_width(&self) -> u32 {
        self.in_bits + self.coeff_bits + ceil_log2(self.weights.len()) + 1
    }
}

/// Emit the weighted sum into an existing builder; `xs` are the input buses
/// (each `in_bits` wide). Returns the accumulator bus, `sum_width()` wide.
pub(crate) fn weighted_sum_into(
    b: &mut Builder,
    xs: &[&[NetId]],
    spec: &WeightedSumSpec,
) -> Vec<NetId> {
    debug_assert_eq!(xs.len(), spec.weights.len());
    let prod_width = (spec.in_bits + spec.coeff_bits) as usize;
    let mut terms: Vec<Vec<NetId>> = xs
        .iter()
        .zip(&spec.weights)
        .map(|(x, &w)| mult_const_into(b, x, w, prod_width))
        .collect();
    // balanced tree: pair adjacent operands level by level; widths grow one
    // bit per add so nothing can overflow
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.chunks_exact(2);
        for pair in it.by_ref() {
            next.push(add_signed(b, &pair[0], &pair[1]));
        }
        next.extend(it.remainder().iter().cloned());
        terms = next;
    }
    let sum = terms.pop().expect("at least one term");
    let width = spec.sum_width() as usize;
    let sum = extend(&sum, width, true);
    ripple_add(b, &sum, &const_bus(spec.intercept, width), CONST0)
}

/// Standalone weighted-sum netlist: inputs `x0..x{N-1}`, output `s` (signed),
/// optimized.
pub fn gen_weighted_sum(spec: &WeightedSumSpec, lib: &CellLibrary) -> Result<Netlist> {
    spec.validate()?;
    let mut b = Builder::new();
    let xs: Vec<Vec<NetId>> = (0..spec.weights.len())
        .map(|i| b.add_input_bus(&format!("x{i}"), spec.in_bits as usize))
        .collect();
    let refs: Vec<&[NetId]> = xs.iter().map(|v| v.as_slice()).collect();
    let s = weighted_sum_into(&mut b, &refs, spec);
    b.set_output("s", s, true);
    optimize(&b.finish(), lib)
}
