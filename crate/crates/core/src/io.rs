//! Dataset and trace files.
//!
//! Datasets are CSV with header `t, p_1..p_m, x_1_1..x_1_m, ..., x_n_1..x_n_m`
//! and one row per observation. Numbers are written with the shortest
//! representation that parses back to the same `f64`, so a write/read cycle
//! is lossless.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::learning::SimulationTrace;
use crate::Dataset;

fn parse_err(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Probe dimension and agent count encoded by a header, checked column by
/// column against the schema.
fn parse_header(header: &csv::StringRecord, agents: Option<usize>) -> Result<(usize, usize)> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.first().copied() != Some("t") {
        return Err(parse_err(1, "first column must be `t`"));
    }
    let m = cols[1..].iter().take_while(|c| c.starts_with("p_")).count();
    if m == 0 {
        return Err(parse_err(1, "no probe columns `p_1..p_m`"));
    }
    let rest = cols.len() - 1 - m;
    if rest == 0 || rest % m != 0 {
        return Err(parse_err(
            1,
            format!("{} action columns is not a positive multiple of the probe dimension {}", rest, m),
        ));
    }
    let n = rest / m;
    if let Some(a) = agents {
        if a != n {
            return Err(parse_err(1, format!("header describes {} agents, expected {}", n, a)));
        }
    }
    for (j, c) in cols[1..=m].iter().enumerate() {
        if *c != format!("p_{}", j + 1) {
            return Err(parse_err(1, format!("expected column p_{}, found {:?}", j + 1, c)));
        }
    }
    for (k, c) in cols[1 + m..].iter().enumerate() {
        let want = format!("x_{}_{}", k / m + 1, k % m + 1);
        if *c != want {
            return Err(parse_err(1, format!("expected column {}, found {:?}", want, c)));
        }
    }
    Ok((m, n))
}

/// Reads a dataset. `agents`, when given, must match the header.
pub fn read_dataset<R: Read>(reader: R, agents: Option<usize>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let (m, n) = parse_header(&header, agents)?;
    let width = 1 + m + n * m;

    let mut probes = Vec::new();
    let mut actions = Vec::new();
    let mut num_obs = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(num_obs + 2, |p| p.line() as usize);
        if rec.len() != width {
            return Err(parse_err(row, format!("expected {} fields, found {}", width, rec.len())));
        }
        rec[0]
            .parse::<u64>()
            .map_err(|_| parse_err(row, format!("observation index {:?} is not an integer", &rec[0])))?;
        for (k, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, format!("column {}: {:?} is not a number", k + 1, field)))?;
            if !v.is_finite() {
                return Err(parse_err(row, format!("column {}: value must be finite", k + 1)));
            }
            if k <= m {
                if v <= 0.0 {
                    return Err(parse_err(row, format!("probe p_{} = {} must be strictly positive", k, v)));
                }
                probes.push(v);
            } else {
                actions.push(v);
            }
        }
        num_obs += 1;
    }
    if num_obs == 0 {
        return Err(parse_err(2, "T >= 1 required"));
    }
    Dataset::from_flat(num_obs, m, n, probes, actions)
}

pub fn load_dataset(path: impl AsRef<Path>, agents: Option<usize>) -> Result<Dataset> {
    read_dataset(File::open(path)?, agents)
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let (m, n) = (data.probe_dim(), data.num_agents());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|j| format!("p_{}", j)));
    for i in 1..=n {
        header.extend((1..=m).map(|j| format!("x_{}_{}", i, j)));
    }
    w.write_record(&header)?;
    for t in 0..data.num_obs() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(data.probe(t).iter().map(f64::to_string));
        for i in 0..n {
            row.extend(data.action(t, i).iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_dataset(File::create(path)?, data)
}

/// Writes probes only (`t, p_1..p_m`), e.g. an optimized probe sequence.
pub fn write_probes<W: Write>(writer: W, probes: &[f64], probe_dim: usize) -> Result<()> {
    if probe_dim == 0 || probes.len() % probe_dim != 0 {
        return Err(Error::input("probe vector length is not a multiple of the probe dimension"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=probe_dim).map(|j| format!("p_{}", j)));
    w.write_record(&header)?;
    for (t, p) in probes.chunks(probe_dim).enumerate() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(p.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a probe file written by [`write_probes`]; returns the flat probes
/// and the probe dimension.
pub fn read_probes<R: Read>(reader: R) -> Result<(Vec<f64>, usize)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("t") || header.len() < 2 {
        return Err(parse_err(1, "expected header `t, p_1..p_m`"));
    }
    let m = header.len() - 1;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, format!("{:?} is not a number", field)))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(parse_err(row, format!("probe {} must be strictly positive", v)));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(parse_err(2, "T >= 1 required"));
    }
    Ok((out, m))
}

/// `n, mean_d_n, std_d_n` with `n` counted from 1.
pub fn write_trace<W: Write>(writer: W, trace: &SimulationTrace<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "mean_d_n", "std_d_n"])?;
    for (n, (m, s)) in trace.mean_distance.iter().zip(&trace.std_distance).enumerate() {
        w.write_record([(n + 1).to_string(), m.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
