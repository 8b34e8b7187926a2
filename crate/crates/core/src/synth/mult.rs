//! Constant-coefficient ("bespoke") multipliers and their area query.
//!
//! A bespoke multiplier hardwires one coefficient `w`: the circuit computes
//! `x * w` for an unsigned input `x` with a shift-add network over the
//! canonical signed-digit form of `w` (subtraction as add-inverted-plus-one).
//! After constant-driven optimization, `w = 0` and positive powers of two
//! cost no gates at all, which is exactly what makes per-model hardwired
//! datapaths small. `area_bm` is the area of that optimized circuit and the
//! cost model used when searching for cheaper neighbor coefficients; an
//! on-disk memo ([`AreaCache`]) makes full coefficient-range sweeps cheap.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{optimize, Builder, CellLibrary, NetId, Netlist, CONST0, CONST1};
use crate::synth::arith::{inv, ripple_add};
use crate::synth::csd_digits;

/// Check that `w` fits a signed `c`-bit coefficient.
fn check_range(w: i64, c: u32) -> Result<()> {
    let lo = -(1i64 << (c - 1));
    let hi = (1i64 << (c - 1)) - 1;
    if w < lo || w > hi {
        return Err(Error::InvalidArgument(format!(
            "coefficient {w} outside signed {c}-bit range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Emit `x * w` into `b` at `out_width` bits (two's complement, exact as
/// long as the true product fits, which `out_width = u + c` guarantees).
pub(crate) fn mult_const_into(
    b: &mut Builder,
    x: &[NetId],
    w: i64,
    out_width: usize,
) -> Vec<NetId> {
    let mut acc: Vec<NetId> = vec![CONST0; out_width];
    for (k, &d) in csd_digits(w).iter().enumerate() {
        if d == 0 {
            continue;
        }
        // operand: x << k, zero-extended (x is unsigned)
        let mut op = vec![CONST0; out_width];
        for (i, &xb) in x.iter().enumerate() {
            if k + i < out_width {
                op[k + i] = xb;
            }
        }
        acc = if d > 0 {
            ripple_add(b, &acc, &op, CONST0)
        } else {
            let nop: Vec<NetId> = op.iter().map(|&n| inv(b, n)).collect();
            ripple_add(b, &acc, &nop, CONST1)
        };
    }
    acc
}

/// Standalone bespoke multiplier: input bus `x` (u bits, unsigned), output
/// bus `p` (u + c bits, signed two's complement), optimized.
pub fn gen_mult_const(w: i64, u: u32, c: u32, lib: &CellLibrary) -> Result<Netlist> {
    check_range(w, c)?;
    let mut b = Builder::new();
    let x = b.add_input_bus("x", u as usize);
    let p = mult_const_into(&mut b, &x, w, (u + c) as usize);
    b.set_output("p", p, true);
    optimize(&b.finish(), lib)
}

/// Conventional (coefficient-as-input) multiplier: unsigned u-bit `x` times
/// signed c-bit `w`, product `p` at u + c bits. This is the baseline a
/// hardwired multiplier is compared against.
pub fn gen_mult_conventional(u: u32, c: u32, lib: &CellLibrary) -> Result<Netlist> {
    let width = (u + c) as usize;
    let mut b = Builder::new();
    let x = b.add_input_bus("x", u as usize);
    let w = b.add_input_bus("w", c as usize);
    let mut acc: Vec<NetId> = vec![CONST0; width];
    for (k, &wb) in w.iter().enumerate() {
        // partial product: (x << k) AND-gated by weight bit k
        let mut op = vec![CONST0; width];
        for (i, &xb) in x.iter().enumerate() {
            if k + i < width {
                op[k + i] = b.add_gate("AND2", &[xb, wb]);
            }
        }
        let msb = k + 1 == w.len();
        acc = if msb {
            // the top weight bit carries weight -2^k in two's complement
            let nop: Vec<NetId> = op.iter().map(|&n| inv(&mut b, n)).collect();
            ripple_add(&mut b, &acc, &nop, CONST1)
        } else {
            ripple_add(&mut b, &acc, &op, CONST0)
        };
    }
    b.set_output("p", acc, true);
    optimize(&b.finish(), lib)
}

/// Area of the optimized bespoke multiplier for coefficient `w`.
pub fn area_bm(w: i64, u: u32, c: u32, lib: &CellLibrary) -> Result<f64> {
    Ok(gen_mult_const(w, u, c, lib)?.area(lib)?.total_area)
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    library_hash: String,
    /// "u:c" -> "w" -> area
    entries: HashMap<String, HashMap<String, f64>>,
}

const CACHE_FORMAT_VERSION: u32 = 1;

/// On-disk memo of `area_bm` keyed by (w, u, c) under one library hash.
///
/// Safe to share across threads. Writers batch updates in memory;
/// [`AreaCache::flush`] publishes atomically (write to a temporary file in
/// the same directory, then rename), so concurrent readers of the file never
/// observe a torn state. A cache built with a different cell library is
/// silently discarded rather than reused.
pub struct AreaCache {
    path: PathBuf,
    library_hash: String,
    entries: Mutex<HashMap<(i64, u32, u32), f64>>,
}

impl AreaCache {
    pub fn open(path: impl AsRef<Path>, lib: &CellLibrary) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let library_hash = lib.content_hash();
        let mut entries = HashMap::new();
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                if let Ok(file) = serde_json::from_str::<CacheFile>(&text) {
                    if file.format_version == CACHE_FORMAT_VERSION
                        && file.library_hash == library_hash
                    {
                        for (uc, m) in file.entries {
                            let Some((u, c)) = uc.split_once(':') else {
                                continue;
                            };
                            let (Ok(u), Ok(c)) = (u.parse::<u32>(), c.parse::<u32>()) else {
                                continue;
                            };
                            for (w, area) in m {
                                if let Ok(w) = w.parse::<i64>() {
                                    entries.insert((w, u, c), area);
                                }
                            }
                        }
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(&path, e)),
        }
        Ok(AreaCache {
            path,
            library_hash,
            entries: Mutex::new(entries),
        })
    }

    /// Memoized `area_bm`.
    pub fn area(&self, w: i64, u: u32, c: u32, lib: &CellLibrary) -> Result<f64> {
        if let Some(&a) = self.entries.lock().unwrap().get(&(w, u, c)) {
            return Ok(a);
        }
        let a = area_bm(w, u, c, lib)?;
        self.entries.lock().unwrap().insert((w, u, c), a);
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Atomically publish the current contents to disk.
    pub fn flush(&self) -> Result<()> {
        let mut grouped: HashMap<String, HashMap<String, f64>> = HashMap::new();
        for (&(w, u, c), &a) in self.entries.lock().unwrap().iter() {
            grouped
                .entry(format!("{u}:{c}"))
                .or_default()
                .insert(w.to_string(), a);
        }
        let file = CacheFile {
            format_version: CACHE_FORMAT_VERSION,
            library_hash: self.library_hash.clone(),
            entries: grouped,
        };
        let text = serde_json::to_string(&file).expect("cache serialization cannot fail");
        let tmp = self.path.with_extension("tmp");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| Error::io(&self.path, e))
    }
}
