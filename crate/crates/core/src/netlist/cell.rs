//! Combinational cell library: named cells with truth tables, area, pin
//! capacitance, and leakage. Loaded from JSON or built from the defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Names every library must provide; synthesis emits only these.
pub const REQUIRED_CELLS: [&str; 8] = [
    "INV", "NAND2", "NOR2", "AND2", "OR2", "XOR2", "XNOR2", "MUX2",
];

/// One cell. `truth_table` is a string of '0'/'1' of length 2^arity; character
/// `i` is the output when the input bits, packed LSB-first (input 0 is bit 0),
/// form the index `i`. MUX2 input order is (a, b, sel) with sel=0 -> a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub arity: u32,
    pub truth_table: String,
    pub area: f64,
    pub input_cap: f64,
    pub leakage: f64,
}

/// Validated library. Lookup is by cell name; iteration order is the file
/// order (kept stable so the library hash is reproducible).
#[derive(Debug, Clone)]
pub struct CellLibrary {
    cells: Vec<Cell>,
    index: BTreeMap<String, usize>,
    /// truth table packed into a u8 (arity <= 3), parallel to `cells`
    tt_bits: Vec<u8>,
}

impl CellLibrary {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut tt_bits = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if c.arity == 0 || c.arity > 3 {
                return Err(Error::InvalidLibrary(format!(
                    "cell `{}`: arity {} not in 1..=3",
                    c.name, c.arity
                )));
            }
            let want = 1usize << c.arity;
            if c.truth_table.len() != want {
                return Err(Error::InvalidLibrary(format!(
                    "cell `{}`: truth table has {} entries, arity {} needs {}",
                    c.name,
                    c.truth_table.len(),
                    c.arity,
                    want
                )));
            }
            let mut bits = 0u8;
            for (pos, ch) in c.truth_table.chars().enumerate() {
                match ch {
                    '1' => bits |= 1 << pos,
                    '0' => {}
                    other => {
                        return Err(Error::InvalidLibrary(format!(
                            "cell `{}`: truth table char `{}`",
                            c.name, other
                        )))
                    }
                }
            }
            if !(c.area.is_finite() && c.area >= 0.0)
                || !(c.input_cap.is_finite() && c.input_cap >= 0.0)
                || !(c.leakage.is_finite() && c.leakage >= 0.0)
            {
                return Err(Error::InvalidLibrary(format!(
                    "cell `{}`: area/cap/leakage must be finite and non-negative",
                    c.name
                )));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::InvalidLibrary(format!("duplicate cell `{}`", c.name)));
            }
            tt_bits.push(bits);
        }
        for name in REQUIRED_CELLS {
            if !index.contains_key(name) {
                return Err(Error::InvalidLibrary(format!("missing required cell `{name}`")));
            }
        }
        Ok(CellLibrary { cells, index, tt_bits })
    }

    /// Built-in default library. Areas follow the usual relative costs of
    /// static CMOS cells; pin capacitance and leakage scale with area.
    pub fn default_library() -> Self {
        fn cell(name: &str, arity: u32, tt: &str, area: f64) -> Cell {
            Cell {
                name: name.to_string(),
                arity,
                truth_table: tt.to_string(),
                area,
                input_cap: 0.5 * area,
                leakage: 0.1 * area,
            }
        }
        // index order is LSB-first: e.g. AND2 entry 3 means a=1,b=1
        let cells = vec![
            cell("INV", 1, "10", 1.0),
            cell("NAND2", 2, "1110", 1.5),
            cell("NOR2", 2, "1000", 1.5),
            cell("AND2", 2, "0001", 2.0),
            cell("OR2", 2, "0111", 2.0),
            cell("XOR2", 2, "0110", 3.0),
            cell("XNOR2", 2, "1001", 3.0),
            // inputs (a, b, sel): sel=0 -> a, sel=1 -> b
            cell("MUX2", 3, "01010011", 3.5),
        ];
        CellLibrary::new(cells).expect("default library is valid")
    }

    pub fn from_json_str(s: &str, path: &str) -> Result<Self> {
        let cells: Vec<Cell> = serde_json::from_str(s).map_err(|e| Error::Schema {
            path: path.to_string(),
            msg: e.to_string(),
        })?;
        CellLibrary::new(cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = serde_json::to_string_pretty(&self.cells).expect("serializable");
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, name: &str) -> Result<&Cell> {
        self.index
            .get(name)
            .map(|&i| &self.cells[i])
            .ok_or_else(|| Error::UnknownCell(name.to_string()))
    }

    /// (arity, packed truth table, area) for the hot paths.
    pub fn lookup(&self, name: &str) -> Result<(u32, u8, f64)> {
        let &i = self
            .index
            .get(name)
            .ok_or_else(|| Error::UnknownCell(name.to_string()))?;
        let c = &self.cells[i];
        Ok((c.arity, self.tt_bits[i], c.area))
    }

    /// Stable content hash of the library (hex SHA-256 over the canonical
    /// JSON serialization). Keys the on-disk multiplier area cache.
    pub fn content_hash(&self) -> String {
        let canon = serde_json::to_string(&self.cells).expect("serializable");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}
