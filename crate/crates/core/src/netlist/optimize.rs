//! Netlist cleanup optimizer.
//!
//! Stands in for a synthesis tool's logic cleanup: it is the arbiter of the
//! final gate count and area of every generated or pruned netlist. The
//! optimizer iterates deterministic passes to a fixpoint:
//!
//! 1. constant propagation — a gate whose constant inputs fully determine its
//!    output is replaced by that constant;
//! 2. identity rewrites — the gate function restricted to its live inputs may
//!    collapse to a wire (AND with constant-1 forwards the other input, a MUX
//!    whose data pins carry the same net forwards it) or to an inversion
//!    (rewritten to INV when that does not increase area); XOR of a net with
//!    itself is constant-0 via the same analysis;
//! 3. double-inverter collapse;
//! 4. structural hashing — gates with the same cell and identical ordered
//!    inputs are merged (decision-gate membership is unioned);
//! 5. dead-gate elimination — gates with no path to a primary output (or to a
//!    tracked argmax-input bus, which must stay observable) are removed.
//!
//! Every pass preserves simulation semantics, never increases area, and the
//! whole transform is idempotent: optimizing an optimized netlist returns a
//! structurally identical netlist.

use std::collections::{BTreeSet, HashMap};

use super::{Bus, CellLibrary, Gate, GateId, NetId, Netlist, OutputBus};
use crate::error::Result;

/// Union-find over net ids; aliasing a net means redirecting every reader.
struct NetAlias {
    parent: Vec<u32>,
}

impl NetAlias {
    fn new(n: u32) -> Self {
        NetAlias {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, n: u32) -> u32 {
        let mut root = n;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // path compression
        let mut cur = n;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Redirect `from` (a gate output being removed) to `to`.
    fn alias(&mut self, from: u32, to: u32) {
        let to_root = self.find(to);
        self.parent[from as usize] = to_root;
    }
}

pub fn optimize(n: &Netlist, lib: &CellLibrary) -> Result<Netlist> {
    // Per-gate cell info resolved once. (arity, truth table, area)
    let mut info = Vec::with_capacity(n.gates.len());
    for g in &n.gates {
        info.push(lib.lookup(&g.cell)?);
    }
    let (inv_arity, _, inv_area) = lib.lookup("INV")?;
    debug_assert_eq!(inv_arity, 1);

    let mut alive = vec![true; n.gates.len()];
    let mut cells: Vec<String> = n.gates.iter().map(|g| g.cell.clone()).collect();
    let mut gin: Vec<Vec<u32>> = n
        .gates
        .iter()
        .map(|g| g.inputs.iter().map(|x| x.0).collect())
        .collect();
    let gout: Vec<u32> = n.gates.iter().map(|g| g.output.0).collect();
    let mut decision: Vec<bool> = n
        .gates
        .iter()
        .map(|g| n.decision_gates.contains(&g.id))
        .collect();

    // net -> index of the gate driving it (gate outputs never change)
    let mut driver_of = vec![usize::MAX; n.net_count as usize];
    for (i, g) in n.gates.iter().enumerate() {
        driver_of[g.output.0 as usize] = i;
    }

    let mut alias = NetAlias::new(n.net_count);

    loop {
        let mut changed = false;

        // -- local rewrites: constants, wires, inversions, double-INV -------
        for i in 0..gin.len() {
            if !alive[i] {
                continue;
            }
            for pin in gin[i].iter_mut() {
                *pin = alias.find(*pin);
            }
            let (arity, tt, area) = info[i];
            debug_assert_eq!(arity as usize, gin[i].len());

            // distinct non-constant input nets, in pin order
            let mut vars: Vec<u32> = Vec::with_capacity(3);
            for &pin in &gin[i] {
                if pin > 1 && !vars.contains(&pin) {
                    vars.push(pin);
                }
            }
            // gate function restricted to the distinct variables
            let nvars = vars.len();
            let mut restricted = [0u8; 8];
            for va in 0..(1u32 << nvars) {
                let mut idx = 0u32;
                for (pos, &pin) in gin[i].iter().enumerate() {
                    let bit = if pin <= 1 {
                        pin
                    } else {
                        let v = vars.iter().position(|&x| x == pin).unwrap();
                        (va >> v) & 1
                    };
                    idx |= bit << pos;
                }
                restricted[va as usize] = (tt >> idx) & 1;
            }

            let n_assign = 1usize << nvars;
            if restricted[..n_assign].iter().all(|&b| b == restricted[0]) {
                // output is constant
                alias.alias(gout[i], restricted[0] as u32);
                alive[i] = false;
                changed = true;
                continue;
            }
            let mut rewritten = false;
            for (v, &net) in vars.iter().enumerate() {
                let is_proj = (0..n_assign).all(|va| restricted[va] == ((va >> v) as u8 & 1));
                if is_proj {
                    alias.alias(gout[i], net);
                    alive[i] = false;
                    changed = true;
                    rewritten = true;
                    break;
                }
                let is_neg = (0..n_assign).all(|va| restricted[va] == (1 - ((va >> v) as u8 & 1)));
                if is_neg && inv_area <= area {
                    if cells[i] != "INV" || gin[i] != vec![net] {
                        cells[i] = "INV".to_string();
                        gin[i] = vec![net];
                        info[i] = (1, 0b01, inv_area);
                        changed = true;
                    }
                    // leave `rewritten` unset: an INV may still collapse with
                    // its driver below
                    break;
                }
            }
            if rewritten {
                continue;
            }
            // INV(INV(x)) -> x
            if cells[i] == "INV" {
                let src = gin[i][0];
                let d = driver_of[src as usize];
                if d != usize::MAX && alive[d] && cells[d] == "INV" {
                    let grand = alias.find(gin[d][0]);
                    alias.alias(gout[i], grand);
                    alive[i] = false;
                    changed = true;
                }
            }
        }

        // -- structural hashing ---------------------------------------------
        let mut seen: HashMap<(&str, &[u32]), usize> = HashMap::new();
        for i in 0..gin.len() {
            if !alive[i] {
                continue;
            }
            match seen.get(&(cells[i].as_str(), gin[i].as_slice())) {
                Some(&j) => {
                    alias.alias(gout[i], gout[j]);
                    alive[i] = false;
                    if decision[i] {
                        decision[j] = true;
                    }
                    changed = true;
                }
                None => {
                    seen.insert((cells[i].as_str(), gin[i].as_slice()), i);
                }
            }
        }
        drop(seen);

        // -- dead-gate elimination -------------------------------------------
        let mut live = vec![false; gin.len()];
        let mut stack: Vec<usize> = Vec::new();
        let seed = |net: u32, alias: &mut NetAlias, stack: &mut Vec<usize>| {
            let r = alias.find(net);
            let d = driver_of[r as usize];
            if d != usize::MAX {
                stack.push(d);
            }
        };
        for bus in n.outputs.iter().map(|b| &b.nets).chain(n.tracked.iter().map(|b| &b.nets)) {
            for &net in bus {
                seed(net.0, &mut alias, &mut stack);
            }
        }
        while let Some(i) = stack.pop() {
            if live[i] || !alive[i] {
                continue;
            }
            live[i] = true;
            for &net in &gin[i] {
                let r = alias.find(net);
                let d = driver_of[r as usize];
                if d != usize::MAX && !live[d] {
                    stack.push(d);
                }
            }
        }
        for i in 0..gin.len() {
            if alive[i] && !live[i] {
                alive[i] = false;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    // -- rebuild with compact, deterministic numbering ------------------------
    let mut net_map: Vec<u32> = vec![u32::MAX; n.net_count as usize];
    net_map[0] = 0;
    net_map[1] = 1;
    let mut next_net = 2u32;
    let assign = |net: u32, net_map: &mut Vec<u32>, next_net: &mut u32| -> NetId {
        if net_map[net as usize] == u32::MAX {
            net_map[net as usize] = *next_net;
            *next_net += 1;
        }
        NetId(net_map[net as usize])
    };

    // input nets keep their declared shape, referenced or not
    let mut inputs = Vec::with_capacity(n.inputs.len());
    for bus in &n.inputs {
        let nets = bus
            .nets
            .iter()
            .map(|&x| assign(x.0, &mut net_map, &mut next_net))
            .collect();
        inputs.push(Bus {
            name: bus.name.clone(),
            nets,
        });
    }
    let mut gates = Vec::new();
    let mut decision_gates = BTreeSet::new();
    for i in 0..gin.len() {
        if !alive[i] {
            continue;
        }
        let id = GateId(gates.len() as u32);
        let ins = gin[i]
            .iter()
            .map(|&x| assign(alias.find(x), &mut net_map, &mut next_net))
            .collect();
        let out = assign(gout[i], &mut net_map, &mut next_net);
        gates.push(Gate {
            id,
            cell: cells[i].clone(),
            inputs: ins,
            output: out,
        });
        if decision[i] {
            decision_gates.insert(id);
        }
    }
    let map_bus = |nets: &[NetId], alias: &mut NetAlias, net_map: &mut Vec<u32>, next_net: &mut u32| {
        nets.iter()
            .map(|&x| {
                let r = alias.find(x.0);
                if net_map[r as usize] == u32::MAX {
                    net_map[r as usize] = *next_net;
                    *next_net += 1;
                }
                NetId(net_map[r as usize])
            })
            .collect::<Vec<_>>()
    };
    let outputs = n
        .outputs
        .iter()
        .map(|b| OutputBus {
            name: b.name.clone(),
            nets: map_bus(&b.nets, &mut alias, &mut net_map, &mut next_net),
            signed: b.signed,
        })
        .collect();
    let tracked = n
        .tracked
        .iter()
        .map(|b| Bus {
            name: b.name.clone(),
            nets: map_bus(&b.nets, &mut alias, &mut net_map, &mut next_net),
        })
        .collect();

    Ok(Netlist {
        net_count: next_net,
        gates,
        inputs,
        outputs,
        tracked,
        decision_gates,
        prune_info: n.prune_info.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{Builder, CONST0, CONST1};
    use crate::sim;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    #[test]
    fn and_with_const1_becomes_a_wire() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("AND2", &[x[0], CONST1]);
        b.set_output("y", vec![a], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert!(opt.gates.is_empty());
        assert_eq!(opt.outputs[0].nets[0], opt.inputs[0].nets[0]);
    }

    #[test]
    fn xor_with_itself_is_const0() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("XOR2", &[x[0], x[0]]);
        b.set_output("y", vec![a], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert!(opt.gates.is_empty());
        assert_eq!(opt.outputs[0].nets[0], CONST0);
    }

    #[test]
    fn and_with_const0_is_const0() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("AND2", &[CONST0, x[0]]);
        b.set_output("y", vec![a], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert_eq!(opt.outputs[0].nets[0], CONST0);
    }

    #[test]
    fn nand_with_const1_rewrites_to_inv() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("NAND2", &[x[0], CONST1]);
        b.set_output("y", vec![a], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert_eq!(opt.gates.len(), 1);
        assert_eq!(opt.gates[0].cell, "INV");
    }

    #[test]
    fn double_inverter_collapses() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 1);
        let a = b.add_gate("INV", &[x[0]]);
        let c = b.add_gate("INV", &[a]);
        b.set_output("y", vec![c], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert!(opt.gates.is_empty());
        assert_eq!(opt.outputs[0].nets[0], opt.inputs[0].nets[0]);
    }

    #[test]
    fn structural_duplicates_merge() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 2);
        let a = b.add_gate("AND2", &[x[0], x[1]]);
        let c = b.add_gate("AND2", &[x[0], x[1]]);
        let d = b.add_gate("OR2", &[a, c]);
        b.set_output("y", vec![d], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        // OR2(a,a) then collapses to a wire onto the single AND2
        assert_eq!(opt.gates.len(), 1);
        assert_eq!(opt.gates[0].cell, "AND2");
    }

    #[test]
    fn dead_gates_are_removed() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 2);
        let a = b.add_gate("AND2", &[x[0], x[1]]);
        let _dead = b.add_gate("XOR2", &[x[0], x[1]]);
        b.set_output("y", vec![a], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert_eq!(opt.gates.len(), 1);
        assert_eq!(opt.gates[0].cell, "AND2");
    }

    #[test]
    fn mux_with_equal_data_pins_is_a_wire() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 2);
        let m = b.add_gate("MUX2", &[x[0], x[0], x[1]]);
        b.set_output("y", vec![m], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert!(opt.gates.is_empty());
        assert_eq!(opt.outputs[0].nets[0], opt.inputs[0].nets[0]);
    }

    #[test]
    fn optimize_is_idempotent_and_preserves_semantics() {
        // a little mixed netlist exercising several rules at once
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 3);
        let i1 = b.add_gate("INV", &[x[0]]);
        let i2 = b.add_gate("INV", &[i1]);
        let a = b.add_gate("AND2", &[i2, CONST1]);
        let o = b.add_gate("OR2", &[a, x[1]]);
        let m = b.add_gate("MUX2", &[o, o, x[2]]);
        let dup = b.add_gate("OR2", &[a, x[1]]);
        let z = b.add_gate("XNOR2", &[m, dup]);
        b.set_output("y", vec![z], false);
        let n = b.finish();

        let once = optimize(&n, &lib()).unwrap();
        let twice = optimize(&once, &lib()).unwrap();
        assert_eq!(once, twice);

        let a0 = n.area(&lib()).unwrap().total_area;
        let a1 = once.area(&lib()).unwrap().total_area;
        assert!(a1 <= a0);
        assert!(once.validate(Some(&lib())).is_empty());
        sim::assert_exhaustive_equiv(&n, &once);
    }

    #[test]
    fn decision_membership_survives_merges() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 2);
        // plain gate first, identical decision gate second: the survivor must
        // stay marked as a decision gate
        let a = b.add_gate("AND2", &[x[0], x[1]]);
        let d = b.record_decision(|b| b.add_gate("AND2", &[x[0], x[1]]));
        let o = b.add_gate("OR2", &[a, d]);
        b.set_output("y", vec![o], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        assert_eq!(opt.gates.len(), 1);
        assert_eq!(opt.decision_gates.len(), 1);
    }

    #[test]
    fn tracked_bus_cone_survives_dce() {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 2);
        let t = b.add_gate("XOR2", &[x[0], x[1]]);
        let o = b.add_gate("AND2", &[x[0], x[1]]);
        b.track_bus("o0", vec![t]);
        b.set_output("y", vec![o], false);
        let opt = optimize(&b.finish(), &lib()).unwrap();
        // the XOR2 feeds no primary output but is tracked, so it must remain
        assert_eq!(opt.gates.len(), 2);
        assert_eq!(opt.tracked.len(), 1);
    }
}
