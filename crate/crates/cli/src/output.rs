//! Fixed-schema CSV and JSON writers. Floats are printed with 12
//! significant digits and a `.` decimal separator; schemas never reorder
//! columns.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::OutputFormat;

/// Render a float with 12 significant digits.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.11e}")
}

/// One row of `cupset` output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CupsetRecord {
    pub family: String,
    pub variant: String,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub u: f64,
    pub ubar: f64,
    pub band_lower: f64,
    pub band_upper: f64,
    pub in_band: bool,
}

pub const CUPSET_HEADER: [&str; 10] = [
    "family",
    "variant",
    "p0",
    "p1",
    "p2",
    "u",
    "ubar",
    "band_lower",
    "band_upper",
    "in_band",
];

/// One row of `protocol` output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolRecord {
    pub family: String,
    pub pipeline: String,
    pub variant: String,
    pub alpha: f64,
    pub u_est: Option<f64>,
    pub ubar_est: Option<f64>,
    pub u_stderr: Option<f64>,
    pub ubar_stderr: Option<f64>,
    pub u_ideal: f64,
    pub ubar_ideal: f64,
    pub status: String,
}

pub const PROTOCOL_HEADER: [&str; 11] = [
    "family",
    "pipeline",
    "variant",
    "alpha",
    "u_est",
    "ubar_est",
    "u_stderr",
    "ubar_stderr",
    "u_ideal",
    "ubar_ideal",
    "status",
];

/// One row of `fit` output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub family: String,
    pub variant: String,
    pub points: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub residual: f64,
}

pub const FIT_HEADER: [&str; 6] = ["family", "variant", "points", "p_a", "p_b", "residual"];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g12).unwrap_or_default()
}

pub fn write_cupset(
    w: &mut dyn Write,
    format: OutputFormat,
    rows: &[CupsetRecord],
) -> anyhow::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(CUPSET_HEADER)?;
            for r in rows {
                csv.write_record([
                    r.family.clone(),
                    r.variant.clone(),
                    opt(r.p0),
                    opt(r.p1),
                    opt(r.p2),
                    fmt_g12(r.u),
                    fmt_g12(r.ubar),
                    fmt_g12(r.band_lower),
                    fmt_g12(r.band_upper),
                    r.in_band.to_string(),
                ])?;
            }
            csv.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_protocol(
    w: &mut dyn Write,
    format: OutputFormat,
    rows: &[ProtocolRecord],
) -> anyhow::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(PROTOCOL_HEADER)?;
            for r in rows {
                csv.write_record([
                    r.family.clone(),
                    r.pipeline.clone(),
                    r.variant.clone(),
                    fmt_g12(r.alpha),
                    opt(r.u_est),
                    opt(r.ubar_est),
                    opt(r.u_stderr),
                    opt(r.ubar_stderr),
                    fmt_g12(r.u_ideal),
                    fmt_g12(r.ubar_ideal),
                    r.status.clone(),
                ])?;
            }
            csv.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_fit(
    w: &mut dyn Write,
    format: OutputFormat,
    rows: &[FitRecord],
) -> anyhow::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(FIT_HEADER)?;
            for r in rows {
                csv.write_record([
                    r.family.clone(),
                    r.variant.clone(),
                    r.points.to_string(),
                    fmt_g12(r.p_a),
                    fmt_g12(r.p_b),
                    fmt_g12(r.residual),
                ])?;
            }
            csv.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Minimal reader for the (u, ubar) columns of a `cupset` or `protocol`
/// CSV, keyed for alignment checks: (family, variant, params-or-alpha).
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRow {
    pub family: String,
    pub variant: String,
    pub key: String,
    pub u: f64,
    pub ubar: f64,
}

pub fn read_surface_csv(path: &std::path::Path) -> anyhow::Result<Vec<SurfaceRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (u_col, ubar_col) = match (col("u"), col("ubar")) {
        (Some(u), Some(ub)) => (u, ub),
        _ => match (col("u_est"), col("ubar_est")) {
            (Some(u), Some(ub)) => (u, ub),
            _ => anyhow::bail!("CSV has neither u/ubar nor u_est/ubar_est columns"),
        },
    };
    let family_col = col("family");
    let variant_col = col("variant");
    let key_cols: Vec<usize> = ["p0", "p1", "p2", "alpha"]
        .iter()
        .filter_map(|n| col(n))
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        let parse = |i: usize| -> anyhow::Result<f64> {
            let s = record.get(i).unwrap_or("");
            if s.is_empty() {
                anyhow::bail!("empty numeric field");
            }
            Ok(s.parse::<f64>()?)
        };
        rows.push(SurfaceRow {
            family: family_col.map(get).unwrap_or_default(),
            variant: variant_col.map(get).unwrap_or_default(),
            key: key_cols
                .iter()
                .map(|&i| get(i))
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(";"),
            u: parse(u_col)?,
            ubar: parse(ubar_col)?,
        });
    }
    Ok(rows)
}
