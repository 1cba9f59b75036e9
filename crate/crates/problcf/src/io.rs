//! File formats: strict CSV schemas for campaigns and meshes, CSV/JSON
//! writers for results.
//!
//! Readers are deliberately unforgiving. Every column must be declared in
//! the header, unknown columns are rejected, and every malformed cell is
//! reported with its 1-based line number (the header is line 1). Silently
//! skipping a bad specimen row would bias a fit; refusing the file is
//! always cheaper than debugging a wrong curve.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::campaign::{Campaign, TestRecord};
use crate::error::{Error, Result};
use crate::surface::{SurfaceElement, SurfaceMesh};

/// Unit of the strain columns in input files. Internally everything is an
/// absolute fraction; output files are always fractions.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum StrainUnit {
    #[default]
    Fraction,
    Percent,
}

impl StrainUnit {
    fn to_fraction(self, value: f64) -> f64 {
        match self {
            StrainUnit::Fraction => value,
            StrainUnit::Percent => value / 100.0,
        }
    }
}

const CAMPAIGN_REQUIRED: [&str; 4] = [
    "specimen_id",
    "strain_amplitude",
    "cycles_to_initiation",
    "gauge_area_mm2",
];
const CAMPAIGN_OPTIONAL: [&str; 2] = ["temperature_c", "load_ratio"];
const MESH_COLUMNS: [&str; 3] = ["element_id", "area_mm2", "strain_amplitude"];

struct Header {
    /// Column index per required name.
    required: Vec<usize>,
    /// Column index per optional name, where present.
    optional: Vec<Option<usize>>,
}

fn parse_header(
    headers: &csv::StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<Header> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(Error::schema(1, format!("duplicate column {a}")));
        }
        if !required.contains(a) && !optional.contains(a) {
            return Err(Error::schema(1, format!("unknown column {a}")));
        }
    }
    let required = required
        .iter()
        .map(|want| {
            names
                .iter()
                .position(|n| n == want)
                .ok_or_else(|| Error::schema(1, format!("missing required column {want}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let optional = optional
        .iter()
        .map(|want| names.iter().position(|n| n == want))
        .collect();
    Ok(Header { required, optional })
}

fn parse_finite(field: &str, column: &str, line: u64) -> Result<f64> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::schema(line, format!("column {column}: cannot parse {field:?} as a number")))?;
    if !value.is_finite() {
        return Err(Error::schema(
            line,
            format!("column {column}: {field:?} is not finite"),
        ));
    }
    Ok(value)
}

fn parse_optional(field: &str, column: &str, line: u64) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        return Ok(None);
    }
    parse_finite(field, column, line).map(Some)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads a test campaign.
///
/// Columns: `specimen_id,strain_amplitude,cycles_to_initiation,gauge_area_mm2`
/// with optional `temperature_c` and `load_ratio`. Any order, no extras.
pub fn read_campaign(path: &Path, unit: StrainUnit) -> Result<Campaign> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let header = parse_header(
        &reader.headers().map_err(csv_error)?.clone(),
        &CAMPAIGN_REQUIRED,
        &CAMPAIGN_OPTIONAL,
    )?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = record_line(&row);
        let field = |idx: usize| -> &str { row.get(idx).unwrap_or("") };
        let specimen_id = field(header.required[0]).to_string();
        if specimen_id.is_empty() {
            return Err(Error::schema(line, "column specimen_id: empty id"));
        }
        if let Some(previous) = seen.insert(specimen_id.clone(), line) {
            return Err(Error::schema(
                line,
                format!("duplicate specimen_id {specimen_id} (first seen on line {previous})"),
            ));
        }
        let record = TestRecord {
            specimen_id,
            strain_amplitude: unit
                .to_fraction(parse_finite(field(header.required[1]), "strain_amplitude", line)?),
            cycles_to_initiation: parse_finite(
                field(header.required[2]),
                "cycles_to_initiation",
                line,
            )?,
            gauge_area_mm2: parse_finite(field(header.required[3]), "gauge_area_mm2", line)?,
            temperature_c: header.optional[0]
                .map(|i| parse_optional(field(i), "temperature_c", line))
                .transpose()?
                .flatten(),
            load_ratio: header.optional[1]
                .map(|i| parse_optional(field(i), "load_ratio", line))
                .transpose()?
                .flatten(),
        };
        record
            .validate()
            .map_err(|e| Error::schema(line, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::schema(1, "file holds a header but no records"));
    }
    Campaign::new(records)
}

/// Reads a surface mesh. Columns: `element_id,area_mm2,strain_amplitude`.
pub fn read_mesh(path: &Path, unit: StrainUnit) -> Result<SurfaceMesh> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let header = parse_header(
        &reader.headers().map_err(csv_error)?.clone(),
        &MESH_COLUMNS,
        &[],
    )?;
    let mut elements = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = record_line(&row);
        let field = |idx: usize| -> &str { row.get(idx).unwrap_or("") };
        let element_id = field(header.required[0]).to_string();
        if element_id.is_empty() {
            return Err(Error::schema(line, "column element_id: empty id"));
        }
        if let Some(previous) = seen.insert(element_id.clone(), line) {
            return Err(Error::schema(
                line,
                format!("duplicate element_id {element_id} (first seen on line {previous})"),
            ));
        }
        let area_mm2 = parse_finite(field(header.required[1]), "area_mm2", line)?;
        let strain_amplitude =
            unit.to_fraction(parse_finite(field(header.required[2]), "strain_amplitude", line)?);
        if !(area_mm2 > 0.0) {
            return Err(Error::schema(
                line,
                format!("column area_mm2: must be positive, got {area_mm2}"),
            ));
        }
        if !(strain_amplitude > 0.0) {
            return Err(Error::schema(
                line,
                format!("column strain_amplitude: must be positive, got {strain_amplitude}"),
            ));
        }
        elements.push(SurfaceElement {
            element_id,
            area_mm2,
            strain_amplitude,
        });
    }
    if elements.is_empty() {
        return Err(Error::schema(1, "file holds a header but no elements"));
    }
    SurfaceMesh::new(elements)
}

fn csv_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::schema(line, message),
    }
}

/// One row of the quantile-curve CSV: `strain,area_mm2,quantile,cycles`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveRow {
    pub strain: f64,
    pub area_mm2: f64,
    pub quantile: f64,
    pub cycles: f64,
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// One row of the interval CSV:
/// `strain,area_mm2,quantile,lower,point,upper`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntervalRow {
    pub strain: f64,
    pub area_mm2: f64,
    pub quantile: f64,
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

pub fn write_interval_csv(path: &Path, rows: &[IntervalRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the campaign CSV format produced by the simulator.
pub fn write_campaign_csv(path: &Path, campaign: &Campaign) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer
        .write_record(CAMPAIGN_REQUIRED)
        .map_err(csv_error)?;
    for r in &campaign.records {
        writer
            .write_record(&[
                r.specimen_id.clone(),
                format!("{}", r.strain_amplitude),
                format!("{}", r.cycles_to_initiation),
                format!("{}", r.gauge_area_mm2),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::InvalidParameter(format!("cannot serialize JSON: {e}")))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}
