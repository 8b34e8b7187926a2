//! Toolkit for turning small trained ML models (MLPs and linear SVMs) into
//! coefficient-hardwired gate-level circuits, and for trading accuracy against
//! area and power on those circuits.
//!
//! The pipeline, end to end:
//!
//! 1. [`model`] — load a delimiter-separated dataset, split/normalize it, and
//!    quantize a pre-trained real-valued model to pure integer arithmetic
//!    (unsigned inputs, signed coefficients, requantized hidden activations).
//!    A golden integer evaluator defines the reference behaviour.
//! 2. [`synth`] — generate a netlist for the quantized model: shift-add
//!    constant multipliers (one per coefficient), ripple adder trees, and an
//!    argmax / voting decision stage for classifiers.
//! 3. [`netlist`] — the gate-level IR itself plus a semantics-preserving
//!    cleanup optimizer, JSON persistence, and a structural HDL subset.
//! 4. [`sim`] — levelized simulation, switching-activity profiling, power
//!    estimation, and equivalence checking against an oracle.
//! 5. [`coeff`] — hardware-driven coefficient replacement: per-coefficient
//!    candidate pairs within an error budget, and a signed-error-balancing
//!    selection over each weighted sum.
//! 6. [`prune`] — activity-driven netlist pruning constrained by output
//!    significance, with the decision subcircuit protected.
//! 7. [`dse`] — design-space exploration over pruning thresholds and the
//!    combined coefficient+pruning space, Pareto extraction, and reports.

pub mod coeff;
pub mod dse;
pub mod error;
pub mod model;
pub mod netlist;
pub mod prune;
pub mod sim;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
