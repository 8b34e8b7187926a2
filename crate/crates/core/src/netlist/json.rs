//! Versioned JSON persistence for netlists. Serialization is deterministic
//! (sorted gates, struct field order) so identical netlists produce identical
//! bytes, and save/load round-trips structurally bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Netlist;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedNetlist {
    format_version: u32,
    #[serde(flatten)]
    netlist: Netlist,
}

pub fn to_json_string(n: &Netlist) -> String {
    let doc = VersionedNetlist {
        format_version: FORMAT_VERSION,
        netlist: n.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("netlist serializes")
}

pub fn from_json_str(s: &str, path: &str) -> Result<Netlist> {
    let doc: VersionedNetlist = serde_json::from_str(s).map_err(|e| Error::Schema {
        path: path.to_string(),
        msg: e.to_string(),
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Schema {
            path: path.to_string(),
            msg: format!(
                "unsupported netlist format_version {} (expected {})",
                doc.format_version, FORMAT_VERSION
            ),
        });
    }
    let diags = doc.netlist.validate(None);
    if !diags.is_empty() {
        return Err(Error::Schema {
            path: path.to_string(),
            msg: format!("netlist fails validation: {}", diags.join("; ")),
        });
    }
    Ok(doc.netlist)
}

pub fn save(n: &Netlist, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(n)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Netlist> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json_str(&s, &path.display().to_string())
}
