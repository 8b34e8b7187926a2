//! Gate-level netlist IR.
//!
//! A netlist is a combinational DAG of library cells. Nets are dense integer
//! ids; net 0 is the constant-0 net and net 1 the constant-1 net. Every net
//! has exactly one driver: a constant, a primary-input bit, or a gate output.
//! Buses are named, LSB-first groups of nets; output buses carry a signedness
//! tag so simulation can decode words.
//!
//! Classifier netlists additionally record the argmax-input buses (the words
//! the decision stage compares) and the set of gate ids that make up the
//! decision subcircuit itself; pruning must never touch those gates.
//!
//! Netlists are immutable values: every transform returns a new netlist.

mod cell;
pub mod hdl;
pub mod json;
pub mod optimize;

pub use cell::{Cell, CellLibrary, REQUIRED_CELLS};
pub use optimize::optimize;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BUS_WIDTH: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateId(pub u32);

pub const CONST0: NetId = NetId(0);
pub const CONST1: NetId = NetId(1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub cell: String,
    /// Input nets in pin order (pin order matters: cells need not be symmetric).
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// Named LSB-first group of nets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub name: String,
    pub nets: Vec<NetId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBus {
    pub name: String,
    pub nets: Vec<NetId>,
    /// Two's-complement word if true, unsigned otherwise.
    pub signed: bool,
}

/// Provenance of a pruning step, embedded in the pruned netlist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneInfo {
    pub tau_c: f64,
    pub phi_c: i32,
    /// Gate ids (in the pre-prune netlist) that were tied to constants.
    pub pruned_gates: Vec<u32>,
}

/// What drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    None,
    Const(bool),
    Input,
    Gate(GateId),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Netlist {
    pub net_count: u32,
    /// Sorted by id, ids unique. Kept sorted by all constructors.
    pub gates: Vec<Gate>,
    pub inputs: Vec<Bus>,
    pub outputs: Vec<OutputBus>,
    /// Argmax-input buses of a classifier (empty otherwise). These are kept
    /// alive by cleanup and are the significance reference for pruning.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracked: Vec<Bus>,
    /// Gates forming the decision (argmax) subcircuit of a classifier.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub decision_gates: BTreeSet<GateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_info: Option<PruneInfo>,
}

impl Netlist {
    /// Netlist with only the two constant nets.
    pub fn empty() -> Self {
        Netlist {
            net_count: 2,
            ..Default::default()
        }
    }

    pub fn gate(&self, id: GateId) -> Result<&Gate> {
        self.gates
            .binary_search_by_key(&id, |g| g.id)
            .map(|i| &self.gates[i])
            .map_err(|_| Error::UnknownGate(id.0))
    }

    /// Driver of every net. Nets nobody drives report [`Driver::None`].
    pub fn drivers(&self) -> Vec<Driver> {
        let mut d = vec![Driver::None; self.net_count as usize];
        if self.net_count >= 1 {
            d[0] = Driver::Const(false);
        }
        if self.net_count >= 2 {
            d[1] = Driver::Const(true);
        }
        for bus in &self.inputs {
            for &n in &bus.nets {
                d[n.0 as usize] = Driver::Input;
            }
        }
        for g in &self.gates {
            d[g.output.0 as usize] = Driver::Gate(g.id);
        }
        d
    }

    /// Structural well-formedness diagnostics; empty means valid. Stops after
    /// ten findings. Pass a library to also check cell names and arities.
    pub fn validate(&self, lib: Option<&CellLibrary>) -> Vec<String> {
        let mut diags = Vec::new();
        let push = |diags: &mut Vec<String>, msg: String| {
            if diags.len() < 10 {
                diags.push(msg);
            }
        };

        if self.net_count < 2 {
            push(&mut diags, "net_count < 2: constant nets missing".into());
            return diags;
        }
        let in_range = |n: NetId| n.0 < self.net_count;

        // unique, sorted gate ids; nets in range
        for w in self.gates.windows(2) {
            if w[0].id >= w[1].id {
                push(
                    &mut diags,
                    format!("gate ids not strictly ascending at gate {}", w[1].id.0),
                );
            }
        }
        let mut driven: BTreeMap<u32, String> = BTreeMap::new();
        driven.insert(0, "const0".into());
        driven.insert(1, "const1".into());
        for bus in &self.inputs {
            if bus.nets.is_empty() || bus.nets.len() > MAX_BUS_WIDTH {
                push(
                    &mut diags,
                    format!("input bus `{}` has invalid width {}", bus.name, bus.nets.len()),
                );
            }
            for &n in &bus.nets {
                if !in_range(n) {
                    push(&mut diags, format!("input bus `{}` references net {} out of range", bus.name, n.0));
                    continue;
                }
                if let Some(prev) = driven.insert(n.0, format!("input `{}`", bus.name)) {
                    push(
                        &mut diags,
                        format!("net {} driven by both {} and input `{}`", n.0, prev, bus.name),
                    );
                }
            }
        }
        for g in &self.gates {
            if !in_range(g.output) {
                push(&mut diags, format!("gate {} output net {} out of range", g.id.0, g.output.0));
                continue;
            }
            if let Some(prev) = driven.insert(g.output.0, format!("gate {}", g.id.0)) {
                push(
                    &mut diags,
                    format!("net {} driven by both {} and gate {}", g.output.0, prev, g.id.0),
                );
            }
            for &n in &g.inputs {
                if !in_range(n) {
                    push(&mut diags, format!("gate {} input net {} out of range", g.id.0, n.0));
                }
            }
            if let Some(lib) = lib {
                match lib.get(&g.cell) {
                    Ok(c) => {
                        if c.arity as usize != g.inputs.len() {
                            push(
                                &mut diags,
                                format!(
                                    "gate {} is {} (arity {}) but has {} inputs",
                                    g.id.0,
                                    g.cell,
                                    c.arity,
                                    g.inputs.len()
                                ),
                            );
                        }
                    }
                    Err(_) => push(&mut diags, format!("gate {} uses unknown cell `{}`", g.id.0, g.cell)),
                }
            }
        }
        for bus in self.outputs.iter().map(|b| (&b.name, &b.nets)).chain(
            self.tracked.iter().map(|b| (&b.name, &b.nets)),
        ) {
            let (name, nets) = bus;
            if nets.is_empty() || nets.len() > MAX_BUS_WIDTH {
                push(&mut diags, format!("bus `{}` has invalid width {}", name, nets.len()));
            }
            for &n in nets {
                if !in_range(n) {
                    push(&mut diags, format!("bus `{}` references net {} out of range", name, n.0));
                } else if !driven.contains_key(&n.0) {
                    push(&mut diags, format!("bus `{}` net {} has no driver", name, n.0));
                }
            }
        }
        for &d in &self.decision_gates {
            if self.gate(d).is_err() {
                push(&mut diags, format!("decision gate {} does not exist", d.0));
            }
        }
        if let Err(Error::Cycle(ids)) = self.levelize() {
            push(&mut diags, format!("combinational cycle through gates {ids:?}"));
        }
        diags
    }

    /// Topological gate order (Kahn). Ties resolve by ascending gate id, so
    /// the order is unique. Errors with up to ten gate ids on a cycle.
    pub fn levelize(&self) -> Result<Vec<GateId>> {
        // map net -> driving gate index
        let mut driver_of = vec![usize::MAX; self.net_count as usize];
        for (i, g) in self.gates.iter().enumerate() {
            driver_of[g.output.0 as usize] = i;
        }
        let mut indegree = vec![0u32; self.gates.len()];
        let mut fanout: Vec<Vec<u32>> = vec![Vec::new(); self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            for &n in &g.inputs {
                let d = driver_of[n.0 as usize];
                if d != usize::MAX {
                    indegree[i] += 1;
                    fanout[d].push(i as u32);
                }
            }
        }
        let mut ready: BTreeSet<u32> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i as u32)
            .collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(self.gates[i as usize].id);
            for &f in &fanout[i as usize] {
                indegree[f as usize] -= 1;
                if indegree[f as usize] == 0 {
                    ready.insert(f);
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck: Vec<u32> = indegree
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .take(10)
                .map(|(i, _)| self.gates[i].id.0)
                .collect();
            return Err(Error::Cycle(stuck));
        }
        Ok(order)
    }

    /// Total area and per-cell gate counts.
    pub fn area(&self, lib: &CellLibrary) -> Result<AreaReport> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0.0;
        for g in &self.gates {
            let cell = lib.get(&g.cell)?;
            total += cell.area;
            *counts.entry(g.cell.clone()).or_insert(0) += 1;
        }
        Ok(AreaReport {
            total_area: total,
            gate_count: self.gates.len(),
            cell_counts: counts,
        })
    }

    /// Replace a gate by a constant: the gate is removed and every reference
    /// to its output net is redirected to the constant net. Ids of the other
    /// gates and nets are untouched; the netlist is NOT re-optimized.
    pub fn tie_to_const(&self, gate: GateId, value: bool) -> Result<Netlist> {
        self.tie_many_to_const(&[(gate, value)])
    }

    /// Batch form of [`tie_to_const`]; all gates are removed in one pass.
    pub fn tie_many_to_const(&self, ties: &[(GateId, bool)]) -> Result<Netlist> {
        let mut redirect: BTreeMap<NetId, NetId> = BTreeMap::new();
        let mut remove: BTreeSet<GateId> = BTreeSet::new();
        for &(id, value) in ties {
            let g = self.gate(id)?;
            redirect.insert(g.output, if value { CONST1 } else { CONST0 });
            remove.insert(id);
        }
        let map = |n: NetId| redirect.get(&n).copied().unwrap_or(n);
        let mut out = self.clone();
        out.gates = self
            .gates
            .iter()
            .filter(|g| !remove.contains(&g.id))
            .map(|g| Gate {
                id: g.id,
                cell: g.cell.clone(),
                inputs: g.inputs.iter().map(|&n| map(n)).collect(),
                output: g.output,
            })
            .collect();
        for bus in out.outputs.iter_mut() {
            for n in bus.nets.iter_mut() {
                *n = map(*n);
            }
        }
        for bus in out.tracked.iter_mut() {
            for n in bus.nets.iter_mut() {
                *n = map(*n);
            }
        }
        out.decision_gates = out
            .decision_gates
            .iter()
            .filter(|d| !remove.contains(d))
            .copied()
            .collect();
        Ok(out)
    }

    pub fn input_bus(&self, name: &str) -> Option<&Bus> {
        self.inputs.iter().find(|b| b.name == name)
    }

    pub fn output_bus(&self, name: &str) -> Option<&OutputBus> {
        self.outputs.iter().find(|b| b.name == name)
    }

    pub fn tracked_bus(&self, name: &str) -> Option<&Bus> {
        self.tracked.iter().find(|b| b.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaReport {
    pub total_area: f64,
    pub gate_count: usize,
    pub cell_counts: BTreeMap<String, usize>,
}

/// Incremental netlist constructor used by synthesis and tests.
#[derive(Debug, Clone)]
pub struct Builder {
    net_count: u32,
    gates: Vec<Gate>,
    inputs: Vec<Bus>,
    outputs: Vec<OutputBus>,
    tracked: Vec<Bus>,
    decision_gates: BTreeSet<GateId>,
    /// When set, newly added gates are also recorded as decision gates.
    recording_decision: bool,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Self {
        Builder {
            net_count: 2,
            gates: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            tracked: Vec::new(),
            decision_gates: BTreeSet::new(),
            recording_decision: false,
        }
    }

    pub fn fresh_net(&mut self) -> NetId {
        let id = NetId(self.net_count);
        self.net_count += 1;
        id
    }

    /// Declare a primary input bus and return its nets, LSB first.
    pub fn add_input_bus(&mut self, name: &str, width: usize) -> Vec<NetId> {
        assert!((1..=MAX_BUS_WIDTH).contains(&width), "bus width {width}");
        let nets: Vec<NetId> = (0..width).map(|_| self.fresh_net()).collect();
        self.inputs.push(Bus {
            name: name.to_string(),
            nets: nets.clone(),
        });
        nets
    }

    /// Add a gate and return its output net.
    pub fn add_gate(&mut self, cell: &str, inputs: &[NetId]) -> NetId {
        let output = self.fresh_net();
        let id = GateId(self.gates.len() as u32);
        self.gates.push(Gate {
            id,
            cell: cell.to_string(),
            inputs: inputs.to_vec(),
            output,
        });
        if self.recording_decision {
            self.decision_gates.insert(id);
        }
        output
    }

    pub fn set_output(&mut self, name: &str, nets: Vec<NetId>, signed: bool) {
        self.outputs.push(OutputBus {
            name: name.to_string(),
            nets,
            signed,
        });
    }

    pub fn track_bus(&mut self, name: &str, nets: Vec<NetId>) {
        self.tracked.push(Bus {
            name: name.to_string(),
            nets,
        });
    }

    /// Every gate added while the closure runs joins the decision subcircuit.
    pub fn record_decision<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        let prev = self.recording_decision;
        self.recording_decision = true;
        let r = f(self);
        self.recording_decision = prev;
        r
    }

    pub fn finish(self) -> Netlist {
        Netlist {
            net_count: self.net_count,
            gates: self.gates,
            inputs: self.inputs,
            outputs: self.outputs,
            tracked: self.tracked,
            decision_gates: self.decision_gates,
            prune_info: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    #[test]
    fn empty_netlist_is_valid_with_zero_area() {
        let n = Netlist::empty();
        assert!(n.validate(Some(&lib())).is_empty());
        let a = n.area(&lib()).unwrap();
        assert_eq!(a.total_area, 0.0);
        assert_eq!(a.gate_count, 0);
    }

    #[test]
    fn single_wire_input_to_output_is_valid() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        b.set_output("y", vec![x[0]], false);
        let n = b.finish();
        assert!(n.validate(Some(&lib())).is_empty());
    }

    #[test]
    fn three_inverters_area() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("INV", &[x[0]]);
        let c = b.add_gate("INV", &[a]);
        let d = b.add_gate("INV", &[c]);
        b.set_output("y", vec![d], false);
        let n = b.finish();
        let report = n.area(&lib()).unwrap();
        assert_eq!(report.total_area, 3.0);
        assert_eq!(report.cell_counts["INV"], 3);
    }

    #[test]
    fn detects_doubly_driven_net() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("INV", &[x[0]]);
        b.set_output("y", vec![a], false);
        let mut n = b.finish();
        // second gate stomps the first gate's output net
        n.gates.push(Gate {
            id: GateId(99),
            cell: "INV".to_string(),
            inputs: vec![x[0]],
            output: a,
        });
        let diags = n.validate(Some(&lib()));
        assert!(
            diags.iter().any(|d| d.contains("driven by both")),
            "{diags:?}"
        );
    }

    #[test]
    fn detects_two_gate_cycle() {
        let mut b = Builder::new();
        let _x = b.add_input_bus("x", 1);
        let n1 = b.fresh_net();
        let n2 = b.fresh_net();
        let mut n = b.finish();
        n.gates.push(Gate {
            id: GateId(0),
            cell: "INV".into(),
            inputs: vec![n2],
            output: n1,
        });
        n.gates.push(Gate {
            id: GateId(1),
            cell: "INV".into(),
            inputs: vec![n1],
            output: n2,
        });
        n.outputs.push(OutputBus {
            name: "y".into(),
            nets: vec![n1],
            signed: false,
        });
        match n.levelize() {
            Err(Error::Cycle(ids)) => assert_eq!(ids, vec![0, 1]),
            other => panic!("expected cycle, got {other:?}"),
        }
        assert!(n.validate(Some(&lib())).iter().any(|d| d.contains("cycle")));
    }

    #[test]
    fn levelize_chain_and_diamond() {
        // chain
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("INV", &[x[0]]);
        let c = b.add_gate("INV", &[a]);
        b.set_output("y", vec![c], false);
        let n = b.finish();
        assert_eq!(n.levelize().unwrap(), vec![GateId(0), GateId(1)]);

        // diamond: two parallel INVs joined by AND2; parallel gates come out
        // in id order
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let p = b.add_gate("INV", &[x[0]]);
        let q = b.add_gate("INV", &[x[0]]);
        let r = b.add_gate("AND2", &[p, q]);
        b.set_output("y", vec![r], false);
        let n = b.finish();
        assert_eq!(n.levelize().unwrap(), vec![GateId(0), GateId(1), GateId(2)]);
    }

    #[test]
    fn tie_to_const_redirects_readers() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("INV", &[x[0]]);
        let c = b.add_gate("AND2", &[a, x[0]]);
        b.set_output("y", vec![c], false);
        let n = b.finish();
        let tied = n.tie_to_const(GateId(0), true).unwrap();
        assert_eq!(tied.gates.len(), 1);
        assert_eq!(tied.gates[0].inputs[0], CONST1);
        assert!(tied.validate(Some(&lib())).is_empty());
        // tying the output gate rewires the primary output itself
        let tied2 = n.tie_to_const(GateId(1), false).unwrap();
        assert_eq!(tied2.outputs[0].nets[0], CONST0);
    }

    #[test]
    fn unknown_gate_and_cell_errors() {
        let n = Netlist::empty();
        assert!(matches!(n.tie_to_const(GateId(7), false), Err(Error::UnknownGate(7))));
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        b.add_gate("NAND9", &[x[0]]);
        let n = b.finish();
        assert!(matches!(n.area(&lib()), Err(Error::UnknownCell(_))));
        assert!(n.validate(Some(&lib())).iter().any(|d| d.contains("NAND9")));
    }
}
