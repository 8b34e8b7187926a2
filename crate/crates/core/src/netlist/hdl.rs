//! Flat structural HDL subset for external consumption.
//!
//! One module, wire declarations, cell instances with named pins (inputs A, B,
//! C in pin order; output Y), and `assign` statements that tie output-bus bits
//! to wires, input bits, or constants. Import accepts exactly this subset.
//! Classifier metadata (tracked buses, decision gates) is not representable in
//! HDL; the JSON format is the lossless one.

use std::fmt::Write as _;

use super::{Bus, CellLibrary, Gate, GateId, NetId, Netlist, OutputBus, CONST0, CONST1};
use crate::error::{Error, Result};

const PIN_NAMES: [&str; 3] = ["A", "B", "C"];

/// Render the netlist as structural HDL text.
pub fn export_hdl(n: &Netlist) -> Result<String> {
    for bus in n.inputs.iter().map(|b| &b.name).chain(n.outputs.iter().map(|b| &b.name)) {
        if is_generated_name(bus) {
            return Err(Error::InvalidArgument(format!(
                "bus name `{bus}` collides with generated wire/instance names"
            )));
        }
    }
    let drivers = n.drivers();
    let net_name = |net: NetId| -> String {
        match drivers[net.0 as usize] {
            super::Driver::Const(false) => "1'b0".to_string(),
            super::Driver::Const(true) => "1'b1".to_string(),
            super::Driver::Input => {
                for bus in &n.inputs {
                    if let Some(bit) = bus.nets.iter().position(|&x| x == net) {
                        return if bus.nets.len() == 1 {
                            bus.name.clone()
                        } else {
                            format!("{}[{}]", bus.name, bit)
                        };
                    }
                }
                unreachable!("input net belongs to an input bus")
            }
            _ => format!("n{}", net.0),
        }
    };

    let mut ports: Vec<String> = n.inputs.iter().map(|b| b.name.clone()).collect();
    ports.extend(n.outputs.iter().map(|b| b.name.clone()));

    let mut s = String::new();
    let _ = writeln!(s, "module top ({});", ports.join(", "));
    for bus in &n.inputs {
        if bus.nets.len() == 1 {
            let _ = writeln!(s, "  input {};", bus.name);
        } else {
            let _ = writeln!(s, "  input [{}:0] {};", bus.nets.len() - 1, bus.name);
        }
    }
    for bus in &n.outputs {
        let signed = if bus.signed { "signed " } else { "" };
        if bus.nets.len() == 1 {
            let _ = writeln!(s, "  output {}{};", signed, bus.name);
        } else {
            let _ = writeln!(s, "  output {}[{}:0] {};", signed, bus.nets.len() - 1, bus.name);
        }
    }
    for g in &n.gates {
        let _ = writeln!(s, "  wire n{};", g.output.0);
    }
    for g in &n.gates {
        let mut pins: Vec<String> = g
            .inputs
            .iter()
            .enumerate()
            .map(|(i, &net)| format!(".{}({})", PIN_NAMES[i], net_name(net)))
            .collect();
        pins.push(format!(".Y(n{})", g.output.0));
        let _ = writeln!(s, "  {} g{} ({});", g.cell, g.id.0, pins.join(", "));
    }
    for bus in &n.outputs {
        for (bit, &net) in bus.nets.iter().enumerate() {
            let lhs = if bus.nets.len() == 1 {
                bus.name.clone()
            } else {
                format!("{}[{}]", bus.name, bit)
            };
            let _ = writeln!(s, "  assign {} = {};", lhs, net_name(net));
        }
    }
    let _ = writeln!(s, "endmodule");
    Ok(s)
}

fn is_generated_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('n') | Some('g')) && chars.clone().count() > 0 && chars.all(|c| c.is_ascii_digit())
}

// ── import ──────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Sym(char),
    ConstBit(bool),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    path: String,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, path: &str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            path: path.to_string(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_tok(&mut self) -> Result<Option<(Tok, usize)>> {
        loop {
            while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
                if self.src[self.pos] == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            }
            if self.pos + 1 < self.src.len() && &self.src[self.pos..self.pos + 2] == b"//" {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let line = self.line;
        let c = self.src[self.pos] as char;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = self.pos;
            while self.pos < self.src.len() {
                let ch = self.src[self.pos] as char;
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok(Some((Tok::Ident(ident), line)));
        }
        if c.is_ascii_digit() {
            // either a plain number or a 1'b0 / 1'b1 literal
            let start = self.pos;
            while self.pos < self.src.len() && (self.src[self.pos] as char).is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos + 2 < self.src.len() && self.src[self.pos] == b'\'' && self.src[self.pos + 1] == b'b' {
                let bit = self.src[self.pos + 2];
                self.pos += 3;
                return match bit {
                    b'0' => Ok(Some((Tok::ConstBit(false), line))),
                    b'1' => Ok(Some((Tok::ConstBit(true), line))),
                    _ => Err(self.err("constant literal must be 1'b0 or 1'b1")),
                };
            }
            let num = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok(Some((Tok::Ident(num), line)));
        }
        if "()[]:;,.=".contains(c) {
            self.pos += 1;
            return Ok(Some((Tok::Sym(c), line)));
        }
        Err(self.err(format!("unexpected character `{c}`")))
    }
}

/// A net reference in source: bare name, indexed name, or constant.
#[derive(Debug, Clone, PartialEq)]
enum NetRef {
    Const(bool),
    Bit(String, Option<usize>),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    path: String,
}

impl Parser {
    fn err_at(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let line = self
            .toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|t| t.1)
            .unwrap_or(1);
        self.err_at(line, msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t.0)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.bump()? {
            Tok::Sym(s) if s == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.bump()? {
            Tok::Ident(s) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn parse_number(&mut self) -> Result<usize> {
        let s = self.expect_ident()?;
        s.parse().map_err(|_| self.err(format!("expected number, found `{s}`")))
    }

    /// `[msb:0]` or nothing; returns the width.
    fn parse_range(&mut self) -> Result<usize> {
        if self.peek() == Some(&Tok::Sym('[')) {
            self.bump()?;
            let msb = self.parse_number()?;
            self.expect_sym(':')?;
            let lsb = self.parse_number()?;
            if lsb != 0 {
                return Err(self.err("bus ranges must end at 0"));
            }
            self.expect_sym(']')?;
            Ok(msb + 1)
        } else {
            Ok(1)
        }
    }

    fn parse_net_ref(&mut self) -> Result<NetRef> {
        match self.bump()? {
            Tok::ConstBit(b) => Ok(NetRef::Const(b)),
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::Sym('[')) {
                    self.bump()?;
                    let idx = self.parse_number()?;
                    self.expect_sym(']')?;
                    Ok(NetRef::Bit(name, Some(idx)))
                } else {
                    Ok(NetRef::Bit(name, None))
                }
            }
            other => Err(self.err(format!("expected net reference, found {other:?}"))),
        }
    }
}

struct RawInstance {
    cell: String,
    pins: Vec<(String, NetRef)>,
    line: usize,
}

/// Parse HDL produced by [`export_hdl`] (or compatible hand-written text)
/// back into a netlist. The cell library supplies pin counts.
pub fn import_hdl(src: &str, path: &str, lib: &CellLibrary) -> Result<Netlist> {
    let mut lx = Lexer::new(src, path);
    let mut toks = Vec::new();
    while let Some(t) = lx.next_tok()? {
        toks.push(t);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        path: path.to_string(),
    };

    // header
    match p.bump()? {
        Tok::Ident(kw) if kw == "module" => {}
        _ => return Err(p.err("expected `module`")),
    }
    let _name = p.expect_ident()?;
    p.expect_sym('(')?;
    while p.peek() != Some(&Tok::Sym(')')) {
        p.bump()?;
    }
    p.expect_sym(')')?;
    p.expect_sym(';')?;

    struct OutDecl {
        name: String,
        width: usize,
        signed: bool,
        line: usize,
    }
    let mut inputs: Vec<(String, usize)> = Vec::new();
    let mut out_decls: Vec<OutDecl> = Vec::new();
    let mut wires: Vec<String> = Vec::new();
    let mut instances: Vec<RawInstance> = Vec::new();
    let mut assigns: Vec<(NetRef, NetRef, usize)> = Vec::new();

    loop {
        let line = p.toks.get(p.pos).map(|t| t.1).unwrap_or(1);
        match p.bump()? {
            Tok::Ident(kw) if kw == "endmodule" => break,
            Tok::Ident(kw) if kw == "input" => {
                let width = p.parse_range()?;
                let name = p.expect_ident()?;
                inputs.push((name, width));
                p.expect_sym(';')?;
            }
            Tok::Ident(kw) if kw == "output" => {
                let mut signed = false;
                if p.peek() == Some(&Tok::Ident("signed".to_string())) {
                    p.bump()?;
                    signed = true;
                }
                let width = p.parse_range()?;
                let name = p.expect_ident()?;
                out_decls.push(OutDecl {
                    name,
                    width,
                    signed,
                    line,
                });
                p.expect_sym(';')?;
            }
            Tok::Ident(kw) if kw == "wire" => loop {
                wires.push(p.expect_ident()?);
                match p.bump()? {
                    Tok::Sym(',') => continue,
                    Tok::Sym(';') => break,
                    other => return Err(p.err(format!("expected `,` or `;`, found {other:?}"))),
                }
            },
            Tok::Ident(kw) if kw == "assign" => {
                let lhs = p.parse_net_ref()?;
                p.expect_sym('=')?;
                let rhs = p.parse_net_ref()?;
                p.expect_sym(';')?;
                assigns.push((lhs, rhs, line));
            }
            Tok::Ident(cell) => {
                // cell instance
                let _inst = p.expect_ident()?;
                p.expect_sym('(')?;
                let mut pins = Vec::new();
                loop {
                    p.expect_sym('.')?;
                    let pin = p.expect_ident()?;
                    p.expect_sym('(')?;
                    let net = p.parse_net_ref()?;
                    p.expect_sym(')')?;
                    pins.push((pin, net));
                    match p.bump()? {
                        Tok::Sym(',') => continue,
                        Tok::Sym(')') => break,
                        other => return Err(p.err(format!("expected `,` or `)`, found {other:?}"))),
                    }
                }
                p.expect_sym(';')?;
                instances.push(RawInstance { cell, pins, line });
            }
            other => return Err(p.err_at(line, format!("unexpected token {other:?}"))),
        }
    }

    // allocate nets: inputs first, then declared wires
    let mut net_count = 2u32;
    let fresh = |n: &mut u32| {
        let id = NetId(*n);
        *n += 1;
        id
    };
    let mut input_buses = Vec::new();
    let mut bit_nets: std::collections::BTreeMap<(String, usize), NetId> = std::collections::BTreeMap::new();
    for (name, width) in &inputs {
        let nets: Vec<NetId> = (0..*width).map(|_| fresh(&mut net_count)).collect();
        for (i, &nid) in nets.iter().enumerate() {
            bit_nets.insert((name.clone(), i), nid);
        }
        input_buses.push(Bus {
            name: name.clone(),
            nets,
        });
    }
    for w in &wires {
        let nid = fresh(&mut net_count);
        bit_nets.insert((w.clone(), 0), nid);
    }

    let resolve = |r: &NetRef, line: usize, p: &Parser| -> Result<NetId> {
        match r {
            NetRef::Const(false) => Ok(CONST0),
            NetRef::Const(true) => Ok(CONST1),
            NetRef::Bit(name, idx) => bit_nets
                .get(&(name.clone(), idx.unwrap_or(0)))
                .copied()
                .ok_or_else(|| p.err_at(line, format!("reference to undeclared net `{}{}`", name,
                    idx.map(|i| format!("[{i}]")).unwrap_or_default()))),
        }
    };

    let mut gates = Vec::new();
    for inst in &instances {
        let cell = lib.get(&inst.cell).map_err(|_| {
            p.err_at(inst.line, format!("unknown cell `{}`", inst.cell))
        })?;
        let mut ins: Vec<Option<NetId>> = vec![None; cell.arity as usize];
        let mut out: Option<NetId> = None;
        for (pin, net) in &inst.pins {
            if pin == "Y" {
                match net {
                    NetRef::Bit(..) => out = Some(resolve(net, inst.line, &p)?),
                    NetRef::Const(_) => {
                        return Err(p.err_at(inst.line, "instance output cannot be a constant"))
                    }
                }
            } else {
                let pos = PIN_NAMES.iter().position(|&x| x == pin).ok_or_else(|| {
                    p.err_at(inst.line, format!("unknown pin `{pin}` on cell `{}`", inst.cell))
                })?;
                if pos >= ins.len() {
                    return Err(p.err_at(
                        inst.line,
                        format!("pin `{pin}` beyond arity {} of `{}`", cell.arity, inst.cell),
                    ));
                }
                ins[pos] = Some(resolve(net, inst.line, &p)?);
            }
        }
        let inputs: Vec<NetId> = ins
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| p.err_at(inst.line, format!("instance of `{}` leaves input pins open", inst.cell)))?;
        let output = out.ok_or_else(|| p.err_at(inst.line, "instance has no .Y() pin"))?;
        gates.push(Gate {
            id: GateId(gates.len() as u32),
            cell: inst.cell.clone(),
            inputs,
            output,
        });
    }

    // assigns define output-bus bits
    let mut out_bits: std::collections::BTreeMap<(String, usize), NetId> = std::collections::BTreeMap::new();
    for (lhs, rhs, line) in &assigns {
        let rhs_net = resolve(rhs, *line, &p)?;
        match lhs {
            NetRef::Bit(name, idx) if out_decls.iter().any(|o| &o.name == name) => {
                out_bits.insert((name.clone(), idx.unwrap_or(0)), rhs_net);
            }
            NetRef::Bit(name, _) => {
                return Err(p.err_at(*line, format!("assign target `{name}` is not a declared output")))
            }
            NetRef::Const(_) => return Err(p.err_at(*line, "assign target cannot be a constant")),
        }
    }
    let mut outputs = Vec::new();
    for o in &out_decls {
        let mut nets = Vec::with_capacity(o.width);
        for bit in 0..o.width {
            let net = out_bits.get(&(o.name.clone(), bit)).copied().ok_or_else(|| {
                p.err_at(o.line, format!("output `{}` bit {} is never assigned", o.name, bit))
            })?;
            nets.push(net);
        }
        outputs.push(OutputBus {
            name: o.name.clone(),
            nets,
            signed: o.signed,
        });
    }

    let n = Netlist {
        net_count,
        gates,
        inputs: input_buses,
        outputs,
        tracked: Vec::new(),
        decision_gates: Default::default(),
        prune_info: None,
    };
    let diags = n.validate(Some(lib));
    if !diags.is_empty() {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 1,
            msg: format!("imported netlist fails validation: {}", diags.join("; ")),
        });
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Builder;
    use crate::sim;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    fn ten_gate_sample() -> Netlist {
        let mut b = Builder::new();
        let x = b.add_input_bus("x", 3);
        let w = b.add_input_bus("en", 1);
        let mut nets = Vec::new();
        let a = b.add_gate("AND2", &[x[0], x[1]]);
        let o = b.add_gate("OR2", &[x[1], x[2]]);
        let xo = b.add_gate("XOR2", &[a, o]);
        let na = b.add_gate("NAND2", &[xo, w[0]]);
        let no = b.add_gate("NOR2", &[na, x[0]]);
        let iv = b.add_gate("INV", &[no]);
        let xn = b.add_gate("XNOR2", &[iv, a]);
        let m = b.add_gate("MUX2", &[xn, o, w[0]]);
        let f = b.add_gate("AND2", &[m, CONST1]);
        let g = b.add_gate("OR2", &[f, CONST0]);
        nets.push(g);
        nets.push(xo);
        b.set_output("y", nets, true);
        b.finish()
    }

    #[test]
    fn export_import_round_trip_is_simulation_equivalent() {
        let n = ten_gate_sample();
        assert_eq!(n.gates.len(), 10);
        let text = export_hdl(&n).unwrap();
        let back = import_hdl(&text, "mem.v", &lib()).unwrap();
        assert!(back.validate(Some(&lib())).is_empty());
        sim::assert_exhaustive_equiv(&n, &back);
    }

    #[test]
    fn export_mentions_signedness_and_constants() {
        let mut b = Builder::new();
        let _x = b.add_input_bus("x", 2);
        b.set_output("y", vec![CONST1, CONST0], true);
        let text = export_hdl(&b.finish()).unwrap();
        assert!(text.contains("output signed [1:0] y;"));
        assert!(text.contains("assign y[0] = 1'b1;"));
        assert!(text.contains("assign y[1] = 1'b0;"));
    }

    #[test]
    fn undeclared_net_is_an_import_error_naming_the_net() {
        let src = "module top (y);\n  output y;\n  assign y = ghost;\nendmodule\n";
        let err = import_hdl(src, "bad.v", &lib()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ghost"), "{msg}");
        assert!(msg.contains("bad.v:3"), "{msg}");
    }

    #[test]
    fn unknown_cell_is_an_import_error() {
        let src = "module top (x, y);\n  input x;\n  output y;\n  wire n2;\n  \
                   FROB g0 (.A(x), .Y(n2));\n  assign y = n2;\nendmodule\n";
        let err = import_hdl(src, "bad.v", &lib()).unwrap_err();
        assert!(err.to_string().contains("FROB"));
    }

    #[test]
    fn double_driven_wire_fails_validation_on_import() {
        let src = "module top (x, y);\n  input x;\n  output y;\n  wire n2;\n  \
                   INV g0 (.A(x), .Y(n2));\n  INV g1 (.A(x), .Y(n2));\n  assign y = n2;\nendmodule\n";
        let err = import_hdl(src, "bad.v", &lib()).unwrap_err();
        assert!(err.to_string().contains("driven by both"), "{err}");
    }
}
