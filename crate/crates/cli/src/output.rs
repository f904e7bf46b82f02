//! CSV and JSON emitters. Every CSV starts with `#` comment lines naming the
//! units of each column, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qce_core::{QceSet, RealWaveform};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Shortest round-trip decimal form, `.` separator, no locale.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv<I>(path: &Path, units: &[&str], header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in units {
        writeln!(out, "# {line}").map_err(|e| CliError::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_waveform(path: &Path, x: &RealWaveform) -> Result<()> {
    let rows = (0..x.block_len()).flat_map(|t| {
        (0..x.n_antennas()).map(move |n| {
            let [re, im] = x.element(t, n);
            vec![t.to_string(), n.to_string(), num(re), num(im)]
        })
    });
    write_csv(
        path,
        &["t: slot index; n: antenna index; re, im: transmit sample (linear amplitude)"],
        &["t", "n", "re", "im"],
        rows,
    )
}

/// Reads a waveform written by [`write_waveform`] and checks every sample is
/// an exact alphabet vertex.
pub fn read_waveform(path: &Path, n_antennas: usize, block_len: usize, qce: &QceSet) -> Result<RealWaveform> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let mut x = RealWaveform::zeros(n_antennas, block_len);
    let mut seen = vec![false; n_antennas * block_len];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 columns, got {}", rec.len())));
        }
        let t: usize = rec[0].trim().parse().map_err(|_| bad(format!("bad slot {:?}", &rec[0])))?;
        let n: usize = rec[1].trim().parse().map_err(|_| bad(format!("bad antenna {:?}", &rec[1])))?;
        let re: f64 = rec[2].trim().parse().map_err(|_| bad(format!("bad value {:?}", &rec[2])))?;
        let im: f64 = rec[3].trim().parse().map_err(|_| bad(format!("bad value {:?}", &rec[3])))?;
        if t >= block_len || n >= n_antennas {
            return Err(bad(format!("index ({t}, {n}) outside {block_len} x {n_antennas}")));
        }
        if seen[t * n_antennas + n] {
            return Err(bad(format!("duplicate sample ({t}, {n})")));
        }
        seen[t * n_antennas + n] = true;
        x.set_element(t, n, [re, im]);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(bad(format!("missing sample ({}, {})", i / n_antennas, i % n_antennas)));
    }
    if !x.is_quantized(qce) {
        return Err(bad("samples are not exact alphabet vertices".into()));
    }
    Ok(x)
}
