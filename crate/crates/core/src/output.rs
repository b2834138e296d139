//! File outputs: CSV (full-precision, round-trippable) and VTK legacy ASCII
//! snapshots, plus the diagnostics/report tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::diagnostics::{ConsistencyReport, DiagnosticsRecord, EocTable};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scheme::StateField;
use crate::state::{SpatialVec, State};

/// 17 significant digits: enough to reproduce any f64 bit pattern exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    VtkLegacyAscii,
}

impl OutputFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(OutputFormat::Csv),
            "vtk" | "vtk_legacy_ascii" => Ok(OutputFormat::VtkLegacyAscii),
            other => Err(Error::config(format!("unknown output format '{other}'"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::VtkLegacyAscii => "vtk",
        }
    }
}

pub fn write_field_snapshot(
    mesh: &Mesh,
    field: &StateField,
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => write_field_csv(mesh, field, path),
        OutputFormat::VtkLegacyAscii => write_field_vtk(mesh, field, path),
    }
}

pub fn write_field_csv(mesh: &Mesh, field: &StateField, path: &Path) -> Result<()> {
    let err = |e| Error::Io { path: path.display().to_string(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    let m = field.values.first().map_or(0, |s| s.len());
    let mut header: Vec<String> = vec!["x".into()];
    if mesh.dim == 2 {
        header.push("y".into());
    }
    for c in 0..m {
        header.push(format!("u{c}"));
    }
    (|| -> std::io::Result<()> {
        writeln!(w, "# t = {}", fmt_float(field.time))?;
        writeln!(w, "{}", header.join(","))?;
        for (x, u) in mesh.node_coords.iter().zip(&field.values) {
            let mut row: Vec<String> = vec![fmt_float(x[0])];
            if mesh.dim == 2 {
                row.push(fmt_float(x[1]));
            }
            for c in 0..m {
                row.push(fmt_float(u[c]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

/// Read back a field CSV written by [`write_field_csv`].
pub fn read_field_csv(path: &Path) -> Result<(f64, Vec<SpatialVec>, Vec<State>)> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let parse_err = |detail: String| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, detail),
    };

    let time_line = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .map_err(io_err(path))?;
    let time: f64 = time_line
        .strip_prefix("# t = ")
        .ok_or_else(|| parse_err(format!("missing time header, got '{time_line}'")))?
        .parse()
        .map_err(|e| parse_err(format!("bad time value: {e}")))?;

    let header = lines
        .next()
        .ok_or_else(|| parse_err("missing column header".into()))?
        .map_err(io_err(path))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_coord = cols.iter().take_while(|c| **c == "x" || **c == "y").count();
    let m = cols.len() - n_coord;

    let mut coords = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("bad number '{s}': {e}"))))
            .collect::<Result<_>>()?;
        if fields.len() != cols.len() {
            return Err(parse_err(format!("row has {} fields, expected {}", fields.len(), cols.len())));
        }
        let mut x = [0.0; 2];
        x[..n_coord].copy_from_slice(&fields[..n_coord]);
        coords.push(x);
        values.push(State::from_slice(&fields[n_coord..n_coord + m]));
    }
    Ok((time, coords, values))
}

/// Legacy ASCII VTK unstructured grid (cell types 3 = line, 5 = triangle),
/// one point-data scalar array per component.
pub fn write_field_vtk(mesh: &Mesh, field: &StateField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let m = field.values.first().map_or(0, |s| s.len());
    let npe = mesh.nodes_per_element();
    let ne = mesh.n_elements();
    (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "nodal field at t = {}", fmt_float(field.time))?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", mesh.n_nodes())?;
        for x in &mesh.node_coords {
            writeln!(w, "{} {} {}", fmt_float(x[0]), fmt_float(x[1]), fmt_float(0.0))?;
        }
        writeln!(w, "CELLS {} {}", ne, ne * (npe + 1))?;
        for e in 0..ne {
            let nodes = mesh.element_nodes(e);
            let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
            writeln!(w, "{} {}", npe, ids.join(" "))?;
        }
        writeln!(w, "CELL_TYPES {ne}")?;
        let cell_type = if mesh.dim == 1 { 3 } else { 5 };
        for _ in 0..ne {
            writeln!(w, "{cell_type}")?;
        }
        writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
        for c in 0..m {
            writeln!(w, "SCALARS u{c} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for u in &field.values {
                writeln!(w, "{}", fmt_float(u[c]))?;
            }
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

pub fn write_diagnostics_csv(record: &DiagnosticsRecord, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let m = record.components;
    let mut header: Vec<String> = vec!["t".into(), "dt".into()];
    for c in 0..m {
        header.push(format!("total_{c}"));
    }
    header.push("eta_omega".into());
    header.push("bv_integrand".into());
    for c in 0..m {
        header.push(format!("min_{c}"));
    }
    for c in 0..m {
        header.push(format!("max_{c}"));
    }
    header.push("nondegenerate".into());
    header.push("udot_residual".into());
    header.push("max_entropy_residual".into());
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for k in 0..record.n_rows() {
            let mut row: Vec<String> =
                vec![fmt_float(record.times[k]), fmt_float(record.dts[k])];
            for c in 0..m {
                row.push(fmt_float(record.conserved[k][c]));
            }
            row.push(fmt_float(record.total_entropy[k]));
            row.push(fmt_float(record.bv_integrand[k]));
            for c in 0..m {
                row.push(fmt_float(record.min_comp[k][c]));
            }
            for c in 0..m {
                row.push(fmt_float(record.max_comp[k][c]));
            }
            row.push(if record.nondegenerate[k] { "1".into() } else { "0".into() });
            row.push(fmt_float(record.udot_residual[k]));
            row.push(fmt_float(record.max_entropy_residual[k]));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

pub fn write_eoc_csv(table: &EocTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let opt = |o: Option<f64>| o.map(fmt_float).unwrap_or_default();
    (|| -> std::io::Result<()> {
        writeln!(w, "h,l1,l2,linf,eoc_l1,eoc_l2,eoc_linf")?;
        for r in &table.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_float(r.h),
                fmt_float(r.l1),
                fmt_float(r.l2),
                fmt_float(r.linf),
                opt(r.eoc_l1),
                opt(r.eoc_l2),
                opt(r.eoc_linf),
            )?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

pub fn write_consistency_csv(report: &ConsistencyReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    (|| -> std::io::Result<()> {
        writeln!(w, "# test function: {}", report.test_function)?;
        writeln!(w, "h,r1,r2,r3")?;
        for r in &report.rows {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_float(r.h),
                fmt_float(r.r1),
                fmt_float(r.r2),
                fmt_float(r.r3)
            )?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

/// K-convergence series: one row per average count N ≥ 2.
pub fn write_cesaro_csv(diffs: &[f64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    (|| -> std::io::Result<()> {
        writeln!(w, "n_averaged,l1_diff")?;
        for (k, d) in diffs.iter().enumerate() {
            writeln!(w, "{},{}", k + 2, fmt_float(*d))?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}
