//! Solution export: long-format CSV and a versioned binary dump.
//!
//! Dump layout (all integers and floats little-endian):
//!
//! ```text
//! magic        12 bytes  "AUTOLAB-HJB\0"
//! version      u32
//! header_len   u64
//! header       header_len bytes of UTF-8 `key = value` lines (grid, parameters,
//!              preset, terminal convention, solver diagnostics)
//! slices       u64, n_a u64, n_i u64
//! times        slices x f64
//! values       slices * n_a * n_i x f64
//! controls     slices * n_a * n_i x u8
//! ```

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use super::{GridSpec, HjbSolution, SolveDiagnostics};
use crate::artifact::{fmt_f64, ArtifactHeader, ARTIFACT_VERSION, PSI_CONVENTION};
use crate::error::{Error, Result};
use crate::params::{parse_kv, ModelParams, PARAM_KEYS};

pub const DUMP_MAGIC: &[u8; 12] = b"AUTOLAB-HJB\0";
pub const DUMP_VERSION: u32 = 1;

/// Writes `t,a,i,V,u` rows for the stored slices nearest each of `times`.
pub fn write_value_csv<W: Write + ?Sized>(w: &mut W, header: &ArtifactHeader, sol: &HjbSolution, times: &[f64]) -> io::Result<()> {
    header.write_comment(w)?;
    writeln!(w, "t,a,i,V,u")?;
    let g = &sol.grid;
    for &t in times {
        let s = sol.nearest_slice(t);
        for j in 0..g.n_a {
            for k in 0..g.n_i {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_f64(sol.times[s]),
                    fmt_f64(g.a_at(j)),
                    fmt_f64(g.i_at(k)),
                    fmt_f64(sol.value_node(s, j, k)),
                    fmt_f64(sol.control_node(s, j, k))
                )?;
            }
        }
    }
    Ok(())
}

fn header_text(sol: &HjbSolution, preset: &str) -> String {
    let g = &sol.grid;
    let d = &sol.diagnostics;
    let mut lines = vec![
        format!("artifact_version = {ARTIFACT_VERSION}"),
        format!("preset = {preset}"),
        format!("psi_convention = {PSI_CONVENTION}"),
        format!("grid.a_min = {:?}", g.a_min),
        format!("grid.a_max = {:?}", g.a_max),
        format!("grid.n_a = {}", g.n_a),
        format!("grid.i_max = {:?}", g.i_max),
        format!("grid.n_i = {}", g.n_i),
        format!("grid.n_t = {}", g.n_t),
        format!("grid.time_step = {}", g.time_step.map_or("auto".to_string(), |x| format!("{x:?}"))),
        format!("diag.stability_bound = {:?}", d.stability_bound),
        format!("diag.substep = {:?}", d.substep),
        format!("diag.substeps_per_interval = {}", d.substeps_per_interval),
        format!("diag.total_steps = {}", d.total_steps),
    ];
    for key in PARAM_KEYS {
        lines.push(format!("param.{key} = {:?}", sol.params.get(key).unwrap_or(f64::NAN)));
    }
    lines.join("\n") + "\n"
}

pub fn write_solution<W: Write + ?Sized>(w: &mut W, sol: &HjbSolution, preset: &str) -> io::Result<()> {
    let header = header_text(sol, preset);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    for n in [sol.times.len(), sol.grid.n_a, sol.grid.n_i] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for &t in &sol.times {
        w.write_all(&t.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(sol.values.len() * 8);
    for &v in &sol.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.write_all(&sol.controls)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn field<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key).map(String::as_str).ok_or_else(|| Error::Format(format!("dump header lacks `{key}`")))
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    field(map, key)?.parse().map_err(|_| Error::Format(format!("bad value for `{key}`")))
}

/// Reads a dump written by [`write_solution`]. Returns the solution and its preset name.
pub fn read_solution<R: Read>(r: &mut R) -> Result<(HjbSolution, String)> {
    let mut magic = [0u8; 12];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Format("not a solution dump (bad magic)".into()));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let hlen = read_u64(r)? as usize;
    if hlen > 1 << 20 {
        return Err(Error::Format("implausible header length".into()));
    }
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let text = String::from_utf8(hbuf).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let map: BTreeMap<String, String> = parse_kv(&text)?.into_iter().map(|e| (e.key, e.value)).collect();

    let mut params = ModelParams::baseline();
    for key in PARAM_KEYS {
        params.set(key, num(&map, &format!("param.{key}"))?);
    }
    let time_step = match field(&map, "grid.time_step")? {
        "auto" => None,
        s => Some(s.parse().map_err(|_| Error::Format("bad grid.time_step".into()))?),
    };
    let grid = GridSpec {
        a_min: num(&map, "grid.a_min")?,
        a_max: num(&map, "grid.a_max")?,
        n_a: num(&map, "grid.n_a")?,
        i_max: num(&map, "grid.i_max")?,
        n_i: num(&map, "grid.n_i")?,
        n_t: num(&map, "grid.n_t")?,
        time_step,
    };
    let diagnostics = SolveDiagnostics {
        stability_bound: num(&map, "diag.stability_bound")?,
        substep: num(&map, "diag.substep")?,
        substeps_per_interval: num(&map, "diag.substeps_per_interval")?,
        total_steps: num(&map, "diag.total_steps")?,
    };
    grid.validate(&params)?;

    let slices = read_u64(r)? as usize;
    let n_a = read_u64(r)? as usize;
    let n_i = read_u64(r)? as usize;
    if slices != grid.n_t + 1 || n_a != grid.n_a || n_i != grid.n_i {
        return Err(Error::Format("array dimensions disagree with header".into()));
    }
    let mut times = Vec::with_capacity(slices);
    for _ in 0..slices {
        times.push(f64::from_bits(read_u64(r)?));
    }
    let cells = slices * n_a * n_i;
    let mut raw = vec![0u8; cells * 8];
    r.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let mut controls = vec![0u8; cells];
    r.read_exact(&mut controls)?;
    if controls.iter().any(|&u| u > 1) {
        return Err(Error::Format("control grid holds values other than 0/1".into()));
    }
    let preset = field(&map, "preset")?.to_string();
    Ok((HjbSolution { params, grid, times, values, controls, diagnostics }, preset))
}
