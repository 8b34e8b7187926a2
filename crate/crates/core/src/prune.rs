//! Circuit-level pruning: tie near-constant gates to their dominant value
//! when they only influence low-significance output bits, then re-optimize.
//!
//! Two per-gate statistics drive the decision:
//!
//! * τ — the fraction of profiling vectors in which the gate's output sits at
//!   its majority value (so τ ∈ [0.5, 1]); an exact 50/50 split counts as
//!   majority 0.
//! * φ — the most significant tracked output bit (counting from 0) the gate
//!   can influence through any path, or −1 when no such path exists. For
//!   classifiers the tracked buses are the argmax input words, and the gates
//!   of the recorded decision subcircuit are exempt from pruning altogether
//!   ([`Phi::Never`]): removing a comparator would corrupt decisions without
//!   any magnitude bound.
//!
//! The pruning rule is **τ ≥ τc and φ ≤ φc**: a gate must be *at least* as
//! static as the threshold demands and *at most* as significant. Tying every
//! such gate to its majority constant can change an output word only in bits
//! 0..=φc, so the raw error magnitude stays below 2^(φc+1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{optimize, CellLibrary, GateId, Netlist, PruneInfo};
use crate::sim::ActivityProfile;

/// Significance of a gate: the highest tracked output bit it reaches.
///
/// `Reach(-1)` marks dead logic (no path to any tracked word); `Never` marks
/// decision-subcircuit gates that must not be pruned at any threshold.
/// The derived order puts `Never` above every `Reach`, so the pruning test
/// is simply `phi <= Phi::Reach(phi_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phi {
    Reach(i32),
    Never,
}

/// Everything needed to decide a single gate's fate, dumpable as JSON for
/// audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneCandidate {
    pub gate: GateId,
    /// max(p_one, 1 − p_one) of the gate's output net, in [0.5, 1].
    pub tau: f64,
    /// The majority value; exact ties resolve to 0.
    pub const_value: bool,
    pub phi: Phi,
}

/// Per-gate (τ, majority constant) from an activity profile of the same
/// netlist related, aligned with `n.gates`.
pub fn compute_tau(a: &ActivityProfile, n: &Netlist) -> Result<Vec<(f64, bool)>> {
    if a.net_count() != n.net_count as usize {
        return Err(Error::InvalidArgument(format!(
            "profile covers {} nets but the netlist has {}",
            a.net_count(),
            n.net_count
        )));
    }
    Ok(n.gates
        .iter()
        .map(|g| {
            let ones = a.ones[g.output.0 as usize];
            let zeros = a.vectors - ones;
            // integer comparison keeps the exact-tie rule exact
            if ones > zeros {
                (ones as f64 / a.vectors as f64, true)
            } else {
                (zeros as f64 / a.vectors as f64, false)
            }
        })
        .collect())
}

/// Per-gate φ, aligned with `n.gates`.
///
/// Reachability roots are the tracked buses when present (classifier argmax
/// inputs, or a regressor's tracked output word), otherwise the primary
/// output buses. One reverse sweep over the levelized netlist propagates the
/// maximum reachable bit index from every gate output to its inputs.
pub fn compute_phi(n: &Netlist) -> Result<Vec<Phi>> {
    if !n.decision_gates.is_empty() && n.tracked.is_empty() {
        return Err(Error::InvalidNetlist(
            "classifier netlist has decision gates but no tracked argmax-input buses".into(),
        ));
    }
    let mut phi_net = vec![-1i32; n.net_count as usize];
    if !n.tracked.is_empty() {
        for bus in &n.tracked {
            for (j, net) in bus.nets.iter().enumerate() {
                let p = &mut phi_net[net.0 as usize];
                *p = (*p).max(j as i32);
            }
        }
    } else {
        for bus in &n.outputs {
            for (j, net) in bus.nets.iter().enumerate() {
                let p = &mut phi_net[net.0 as usize];
                *p = (*p).max(j as i32);
            }
        }
    }
    let order = n.levelize()?;
    let by_id: std::collections::BTreeMap<GateId, &crate::netlist::Gate> =
        n.gates.iter().map(|g| (g.id, g)).collect();
    for id in order.iter().rev() {
        let g = by_id[id];
        let out_phi = phi_net[g.output.0 as usize];
        if out_phi < 0 {
            continue;
        }
        for i in &g.inputs {
            let p = &mut phi_net[i.0 as usize];
            *p = (*p).max(out_phi);
        }
    }
    Ok(n.gates
        .iter()
        .map(|g| {
            if n.decision_gates.contains(&g.id) {
                Phi::Never
            } else {
                Phi::Reach(phi_net[g.output.0 as usize])
            }
        })
        .collect())
}

/// Combine [`compute_tau`] and [`compute_phi`] into the audit-ready list.
pub fn candidates(n: &Netlist, a: &ActivityProfile) -> Result<Vec<PruneCandidate>> {
    let taus = compute_tau(a, n)?;
    let phis = compute_phi(n)?;
    Ok(n.gates
        .iter()
        .zip(taus)
        .zip(phis)
        .map(|((g, (tau, const_value)), phi)| PruneCandidate {
            gate: g.id,
            tau,
            const_value,
            phi,
        })
        .collect())
}

/// Tie every candidate with τ ≥ τc and φ ≤ φc to its majority constant,
/// re-optimize, and record the provenance in the result.
pub fn prune(
    n: &Netlist,
    cands: &[PruneCandidate],
    tau_c: f64,
    phi_c: i32,
    lib: &CellLibrary,
) -> Result<Netlist> {
    if !(0.5..=1.0).contains(&tau_c) {
        return Err(Error::InvalidArgument(format!(
            "tau_c must lie in [0.5, 1], got {tau_c}"
        )));
    }
    if phi_c < -1 {
        return Err(Error::InvalidArgument(format!(
            "phi_c must be >= -1, got {phi_c}"
        )));
    }
    let ties: Vec<(GateId, bool)> = cands
        .iter()
        .filter(|c| c.tau >= tau_c && c.phi <= Phi::Reach(phi_c))
        .map(|c| (c.gate, c.const_value))
        .collect();
    let tied = n.tie_many_to_const(&ties)?;
    let mut out = optimize(&tied, lib)?;
    out.prune_info = Some(PruneInfo {
        tau_c,
        phi_c,
        pruned_gates: ties.iter().map(|(g, _)| g.0).collect(),
    });
    Ok(out)
}
