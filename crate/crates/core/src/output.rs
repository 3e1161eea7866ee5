//! CSV and JSON encodings of run results.
//!
//! CSV tables are flat with a header row. Lines starting with `#` carry the
//! JSON config echo and scalar summaries; readers skip them.
//!
//! | table      | columns                                |
//! |------------|----------------------------------------|
//! | spectra    | `trial,index,eigenvalue`               |
//! | histogram  | `bin_left,bin_right,count`             |
//! | grid       | `tau,x,density,cdf,atom_weight`        |
//! | classical  | `k,empirical,poisson`                  |
//!
//! The histogram's first row `0,0,<count>` is the atom of exact zeros.

use std::io::{self, Write};

use serde::Deserialize;

use crate::error::{GramError, Result};
use crate::experiment::{Histogram, Mode, RunResult};
use crate::linalg::SpectralMeasure;

fn json_line<W: Write, T: serde::Serialize>(w: &mut W, key: &str, value: &T) -> io::Result<()> {
    writeln!(w, "# {key}: {}", serde_json::to_string(value)?)
}

/// Writes the mode's main table preceded by `#` summary lines.
pub fn write_primary_csv<W: Write>(result: &RunResult, mut w: W) -> io::Result<()> {
    json_line(&mut w, "config", &result.config)?;
    if let Some(k) = result.sequence_length {
        json_line(&mut w, "sequence_length", &k)?;
    }
    if let Some(fit) = &result.fit {
        json_line(&mut w, "fit", fit)?;
    }
    if let Some(e) = result.entropy {
        json_line(&mut w, "entropy", &e)?;
    }
    if let Some(p) = &result.permutation {
        json_line(&mut w, "cycle_type", &p.cycle_type)?;
        json_line(&mut w, "period", &p.period)?;
    }
    if let Some(c) = &result.classical {
        json_line(&mut w, "total_variation", &c.total_variation)?;
    }
    let mut csv = csv::Writer::from_writer(w);
    match result.config.mode {
        Mode::Random | Mode::Floquet | Mode::Permutation => {
            csv.write_record(["trial", "index", "eigenvalue"])?;
            for (t, spectrum) in result.spectra.iter().enumerate() {
                for (i, v) in spectrum.iter().enumerate() {
                    csv.write_record([t.to_string(), i.to_string(), v.to_string()])?;
                }
            }
        }
        Mode::Classical => {
            let summary = result
                .classical
                .as_ref()
                .ok_or_else(|| io::Error::other("classical summary missing"))?;
            csv.write_record(["k", "empirical", "poisson"])?;
            for row in &summary.pmf {
                csv.write_record([
                    row.k.to_string(),
                    row.empirical.to_string(),
                    row.poisson.to_string(),
                ])?;
            }
        }
        Mode::MpGrid => {
            csv.write_record(["tau", "x", "density", "cdf", "atom_weight"])?;
            for r in &result.grid {
                csv.write_record([
                    r.tau.to_string(),
                    r.x.to_string(),
                    r.density.to_string(),
                    r.cdf.to_string(),
                    r.atom_weight.to_string(),
                ])?;
            }
        }
    }
    csv.flush()
}

pub fn write_histogram_csv<W: Write>(hist: &Histogram, w: W) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["bin_left", "bin_right", "count"])?;
    csv.write_record(["0", "0", &hist.atom_count.to_string()])?;
    for b in &hist.bins {
        csv.write_record([b.left.to_string(), b.right.to_string(), b.count.to_string()])?;
    }
    csv.flush()
}

pub fn write_json<W: Write, T: serde::Serialize>(value: &T, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonSpectrum {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
    Run { spectra: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
struct SpectrumRecord {
    #[allow(dead_code)]
    trial: usize,
    #[allow(dead_code)]
    index: usize,
    eigenvalue: f64,
}

/// Parses a stored spectrum: a `trial,index,eigenvalue` CSV, a JSON array of
/// eigenvalues (flat or one array per trial), or a JSON run result.
pub fn parse_spectrum(text: &str) -> Result<SpectralMeasure> {
    let trimmed = text.trim_start();
    let values: Vec<f64> = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        let parsed: JsonSpectrum = serde_json::from_str(trimmed)
            .map_err(|e| GramError::Malformed(format!("spectrum JSON: {e}")))?;
        match parsed {
            JsonSpectrum::Flat(v) => v,
            JsonSpectrum::Nested(v) | JsonSpectrum::Run { spectra: v } => {
                v.into_iter().flatten().collect()
            }
        }
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        reader
            .deserialize::<SpectrumRecord>()
            .map(|r| {
                r.map(|rec| rec.eigenvalue)
                    .map_err(|e| GramError::Malformed(format!("spectrum CSV: {e}")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    SpectralMeasure::from_eigenvalues(values)
}
