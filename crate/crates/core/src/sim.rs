//! Levelized netlist simulation, switching-activity profiling, power
//! estimation, and oracle equivalence checking.
//!
//! Simulation is event-free: gates are evaluated once per vector in
//! topological order via their truth tables. Activity is accumulated as exact
//! integer counts (ones per net, toggles between adjacent vectors), so a
//! profile is a pure reduction: any partitioning of the vector set that sums
//! the counts yields bit-identical results.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{CellLibrary, Netlist};

/// Cached levelized evaluation plan for one netlist.
pub struct Simulator<'a> {
    n: &'a Netlist,
    /// gates in topological order: (truth table, input nets, output net)
    plan: Vec<(u8, Vec<u32>, u32)>,
}

impl<'a> Simulator<'a> {
    pub fn new(n: &'a Netlist, lib: &CellLibrary) -> Result<Self> {
        let order = n.levelize()?;
        let mut plan = Vec::with_capacity(order.len());
        for id in order {
            let g = n.gate(id)?;
            let (arity, tt, _) = lib.lookup(&g.cell)?;
            if arity as usize != g.inputs.len() {
                return Err(Error::Dimension(format!(
                    "gate {} is {} (arity {}) but has {} inputs",
                    g.id.0,
                    g.cell,
                    arity,
                    g.inputs.len()
                )));
            }
            plan.push((tt, g.inputs.iter().map(|x| x.0).collect(), g.output.0));
        }
        Ok(Simulator { n, plan })
    }

    pub fn netlist(&self) -> &Netlist {
        self.n
    }

    /// Evaluate one vector. `inputs` are bus values in `netlist.inputs` order;
    /// `values` receives one bit per net and is resized as needed.
    pub fn run(&self, inputs: &[u64], values: &mut Vec<u8>) -> Result<()> {
        if inputs.len() != self.n.inputs.len() {
            return Err(Error::Dimension(format!(
                "netlist has {} input buses, vector binds {}",
                self.n.inputs.len(),
                inputs.len()
            )));
        }
        values.clear();
        values.resize(self.n.net_count as usize, 0);
        values[1] = 1;
        for (bus, &word) in self.n.inputs.iter().zip(inputs) {
            if bus.nets.len() < 64 && (word >> bus.nets.len()) != 0 {
                return Err(Error::Dimension(format!(
                    "value {} does not fit input bus `{}` ({} bits)",
                    word,
                    bus.name,
                    bus.nets.len()
                )));
            }
            for (bit, &net) in bus.nets.iter().enumerate() {
                values[net.0 as usize] = ((word >> bit) & 1) as u8;
            }
        }
        for (tt, ins, out) in &self.plan {
            let mut idx = 0u8;
            for (pos, &pin) in ins.iter().enumerate() {
                idx |= values[pin as usize] << pos;
            }
            values[*out as usize] = (tt >> idx) & 1;
        }
        Ok(())
    }

    /// Decode an output bus from a value array (two's complement if signed).
    pub fn decode(&self, values: &[u8], bus_index: usize) -> i64 {
        let bus = &self.n.outputs[bus_index];
        decode_word(values, bus.nets.iter().map(|n| n.0), bus.signed)
    }

    /// Decode a tracked (argmax-input) bus. Tracked words are unsigned for
    /// vote counts and signed for neuron accumulators; the caller knows which.
    pub fn decode_tracked(&self, values: &[u8], bus_index: usize, signed: bool) -> i64 {
        let bus = &self.n.tracked[bus_index];
        decode_word(values, bus.nets.iter().map(|n| n.0), signed)
    }
}

pub fn decode_word(values: &[u8], nets: impl ExactSizeIterator<Item = u32>, signed: bool) -> i64 {
    let width = nets.len();
    let mut word = 0u64;
    for (bit, net) in nets.enumerate() {
        word |= (values[net as usize] as u64) << bit;
    }
    if signed && width > 0 && (word >> (width - 1)) & 1 == 1 {
        (word as i64) - (1i64 << width)
    } else {
        word as i64
    }
}

/// Simulate every vector and decode all output buses.
pub fn simulate(n: &Netlist, lib: &CellLibrary, vectors: &[Vec<u64>]) -> Result<Vec<Vec<i64>>> {
    let sim = Simulator::new(n, lib)?;
    let mut values = Vec::new();
    let mut out = Vec::with_capacity(vectors.len());
    for v in vectors {
        sim.run(v, &mut values)?;
        out.push((0..n.outputs.len()).map(|i| sim.decode(&values, i)).collect());
    }
    Ok(out)
}

/// Per-net switching activity over a stimulus, stored as exact counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityProfile {
    pub vectors: u64,
    /// per net: number of vectors where the net evaluated to 1
    pub ones: Vec<u64>,
    /// per net: number of adjacent vector pairs where the net changed value
    pub toggles: Vec<u64>,
}

impl ActivityProfile {
    pub fn p_one(&self, net: u32) -> f64 {
        self.ones[net as usize] as f64 / self.vectors as f64
    }

    pub fn toggle_rate(&self, net: u32) -> f64 {
        if self.vectors < 2 {
            0.0
        } else {
            self.toggles[net as usize] as f64 / (self.vectors - 1) as f64
        }
    }

    pub fn net_count(&self) -> usize {
        self.ones.len()
    }
}

/// Profile switching activity of every net under the given stimulus.
/// At least one vector is required.
pub fn profile(n: &Netlist, lib: &CellLibrary, vectors: &[Vec<u64>]) -> Result<ActivityProfile> {
    if vectors.is_empty() {
        return Err(Error::InvalidArgument(
            "activity profile needs at least one stimulus vector".into(),
        ));
    }
    let sim = Simulator::new(n, lib)?;
    let nets = n.net_count as usize;
    let mut ones = vec![0u64; nets];
    let mut toggles = vec![0u64; nets];
    let mut cur = Vec::new();
    let mut prev: Vec<u8> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        sim.run(v, &mut cur)?;
        for (net, &bit) in cur.iter().enumerate() {
            ones[net] += bit as u64;
        }
        if i > 0 {
            for net in 0..nets {
                toggles[net] += (cur[net] ^ prev[net]) as u64;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(ActivityProfile {
        vectors: vectors.len() as u64,
        ones,
        toggles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    /// Σ over nets of toggle_rate x total capacitance of the pins it drives.
    pub dynamic: f64,
    /// Σ over gates of cell leakage.
    #[serde(rename = "static")]
    pub static_power: f64,
    pub total: f64,
}

/// Power estimate for a netlist under a previously computed activity profile.
pub fn power(n: &Netlist, lib: &CellLibrary, profile: &ActivityProfile) -> Result<PowerReport> {
    if profile.net_count() != n.net_count as usize {
        return Err(Error::Dimension(format!(
            "profile covers {} nets, netlist has {}",
            profile.net_count(),
            n.net_count
        )));
    }
    let mut load = vec![0.0f64; n.net_count as usize];
    let mut static_power = 0.0;
    for g in &n.gates {
        let cell = lib.get(&g.cell)?;
        static_power += cell.leakage;
        for &pin in &g.inputs {
            load[pin.0 as usize] += cell.input_cap;
        }
    }
    let mut dynamic = 0.0;
    for net in 0..n.net_count {
        dynamic += profile.toggle_rate(net) * load[net as usize];
    }
    Ok(PowerReport {
        dynamic,
        static_power,
        total: dynamic + static_power,
    })
}

/// One disagreement between a netlist and an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub vector: Vec<u64>,
    pub bus: String,
    pub got: i64,
    pub want: i64,
}

pub enum Stimulus<'a> {
    /// All 2^k assignments over the primary input bits (k <= 20 enforced).
    Exhaustive,
    Vectors(&'a [Vec<u64>]),
}

/// Compare a netlist against an oracle function over a stimulus. The oracle
/// receives bus values in `netlist.inputs` order and returns the expected
/// decoded value of every output bus. Returns the first 20 mismatches.
pub fn check_equiv(
    n: &Netlist,
    lib: &CellLibrary,
    oracle: &dyn Fn(&[u64]) -> Vec<i64>,
    stimulus: Stimulus,
) -> Result<Vec<Mismatch>> {
    let sim = Simulator::new(n, lib)?;
    let mut values = Vec::new();
    let mut mismatches = Vec::new();
    let mut check = |sim: &Simulator, values: &mut Vec<u8>, vector: &[u64]| -> Result<bool> {
        sim.run(vector, values)?;
        let want = oracle(vector);
        if want.len() != n.outputs.len() {
            return Err(Error::Dimension(format!(
                "oracle returned {} outputs, netlist has {}",
                want.len(),
                n.outputs.len()
            )));
        }
        for (i, bus) in n.outputs.iter().enumerate() {
            let got = sim.decode(values, i);
            if got != want[i] {
                mismatches.push(Mismatch {
                    vector: vector.to_vec(),
                    bus: bus.name.clone(),
                    got,
                    want: want[i],
                });
                if mismatches.len() >= 20 {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    };
    match stimulus {
        Stimulus::Vectors(vectors) => {
            for v in vectors {
                if check(&sim, &mut values, v)? {
                    break;
                }
            }
        }
        Stimulus::Exhaustive => {
            let widths: Vec<usize> = n.inputs.iter().map(|b| b.nets.len()).collect();
            let total_bits: usize = widths.iter().sum();
            if total_bits > 20 {
                return Err(Error::InvalidArgument(format!(
                    "exhaustive stimulus over {total_bits} input bits refused (max 20)"
                )));
            }
            for assignment in 0..(1u64 << total_bits) {
                let mut vector = Vec::with_capacity(widths.len());
                let mut off = 0;
                for &w in &widths {
                    vector.push((assignment >> off) & ((1u64 << w) - 1));
                    off += w;
                }
                if check(&sim, &mut values, &vector)? {
                    break;
                }
            }
        }
    }
    Ok(mismatches)
}

/// Test helper: assert two netlists with identical I/O shapes agree on every
/// input assignment.
pub fn assert_exhaustive_equiv(a: &Netlist, b: &Netlist) {
    let lib = CellLibrary::default_library();
    let sim_b = Simulator::new(b, &lib).expect("levelize b");
    let oracle = |vector: &[u64]| -> Vec<i64> {
        let mut vals = Vec::new();
        sim_b.run(vector, &mut vals).expect("sim b");
        (0..b.outputs.len()).map(|i| sim_b.decode(&vals, i)).collect()
    };
    let mismatches = check_equiv(a, &lib, &oracle, Stimulus::Exhaustive).expect("check_equiv");
    assert!(mismatches.is_empty(), "netlists differ: {:?}", mismatches.first());
}
