//! `orsim-lambda v1`: power-law exponents per channel group with the fit
//! diagnostics (R² and the per-scale group means).

use std::fmt::Write as _;
use std::path::Path;

use orsim_core::features::ChannelGroup;
use orsim_core::pyramid::{CalibrationData, LambdaEntry, LambdaTable};

use super::{write_provenance, Cursor};
use crate::config::Provenance;
use crate::error::Result;

pub fn write_lambda(table: &LambdaTable, data: &CalibrationData, provenance: &Provenance) -> String {
    let mut s = String::from("orsim-lambda v1\n");
    write_provenance(&mut s, provenance);
    let scales: Vec<String> = data.scales.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "scales {}", scales.join(" "));
    let _ = writeln!(s, "groups {}", table.entries.len());
    for e in &table.entries {
        let means: Vec<String> =
            data.means.iter().map(|m| m[e.group.index()].map_or("nan".to_string(), |v| v.to_string())).collect();
        let _ = writeln!(s, "group {} {} {} {}", e.group, e.lambda, e.r2, means.join(" "));
    }
    s
}

pub fn read_lambda(text: &str, path: &Path) -> Result<(LambdaTable, Provenance)> {
    let mut cur = Cursor::new(text, path);
    let header = cur.expect("orsim-lambda")?;
    if header != ["v1"] {
        return Err(cur.error(format!("unsupported lambda table version {header:?}")));
    }
    let provenance = cur.provenance()?;
    let n_scales = cur.expect("scales")?.len();
    let n: usize = cur.value("groups")?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let t = cur.expect("group")?;
        if t.len() != 3 + n_scales {
            return Err(cur.error("`group` takes name, exponent, R² and one mean per scale"));
        }
        let group: ChannelGroup = t[0].parse().map_err(|e| cur.error(format!("{e}")))?;
        entries.push(LambdaEntry { group, lambda: cur.parse(t[1])?, r2: cur.parse(t[2])? });
    }
    cur.finish()?;
    Ok((LambdaTable { entries }, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_file_round_trips() {
        let mut table = LambdaTable::zero();
        table.entries[1].lambda = 0.0917;
        table.entries[1].r2 = 0.98;
        let data = CalibrationData { scales: vec![1.0, 0.5, 0.25], means: vec![[Some(0.5), Some(0.1), None, None, None]; 3] };
        let prov = Provenance { config_sha256: "0".repeat(64), seed: 3 };
        let text = write_lambda(&table, &data, &prov);
        let (back, p) = read_lambda(&text, Path::new("l")).unwrap();
        assert_eq!(back, table);
        assert_eq!(p, prov);
        assert!(text.contains("group gradient_magnitude 0.0917 0.98 0.1 0.1 0.1"));
    }
}
