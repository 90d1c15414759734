//! CSV tables and ASCII VTK unstructured-grid files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::adapt::AdaptiveHistory;
use crate::error::{Error, Result};
use crate::estimator::IndicatorField;
use crate::fespace::P1Function;
use crate::mesh::Triangulation;
use crate::study::EocTable;

/// VTK cell type of a linear triangle.
const VTK_TRIANGLE: u8 = 5;

/// A table that can be written as CSV.
pub trait CsvTable {
    fn header(&self) -> Vec<&'static str>;
    fn records(&self) -> Vec<Vec<String>>;
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

impl CsvTable for EocTable {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "level",
            "h",
            "dofs",
            "l2_error",
            "l2_eoc",
            "h1_error",
            "h1_eoc",
            "estimator",
            "estimator_eoc",
            "iterations",
            "estimator_l1",
        ]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    real(r.h),
                    r.dofs.to_string(),
                    real(r.l2_error),
                    opt_real(r.l2_eoc),
                    real(r.h1_error),
                    opt_real(r.h1_eoc),
                    real(r.estimator),
                    opt_real(r.estimator_eoc),
                    r.iterations.to_string(),
                    real(r.estimator_l1),
                ]
            })
            .collect()
    }
}

impl CsvTable for AdaptiveHistory {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "cycle",
            "dofs",
            "triangles",
            "estimator",
            "iterations",
            "l2_error",
            "h1_error",
            "estimator_l1",
        ]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.cycles
            .iter()
            .map(|c| {
                vec![
                    c.cycle.to_string(),
                    c.dofs.to_string(),
                    c.triangles.to_string(),
                    real(c.estimator),
                    c.iterations.to_string(),
                    opt_real(c.l2_error),
                    opt_real(c.h1_error),
                    real(c.estimator_l1),
                ]
            })
            .collect()
    }
}

/// Header row plus one record per row, reals at 17 significant digits.
pub fn write_csv(table: &impl CsvTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(table.header()).map_err(csv_err)?;
    for record in table.records() {
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A named field attached to the points or cells of a VTU file.
#[derive(Debug, Clone, Copy)]
pub enum VtuField<'a> {
    Point { name: &'a str, values: &'a [f64] },
    Cell { name: &'a str, components: usize, values: &'a [f64] },
}

impl<'a> VtuField<'a> {
    pub fn p1(name: &'a str, u: &'a P1Function) -> Self {
        VtuField::Point {
            name,
            values: u.coefficients(),
        }
    }

    pub fn cell_scalar(name: &'a str, values: &'a [f64]) -> Self {
        VtuField::Cell {
            name,
            components: 1,
            values,
        }
    }

    /// Row-major 2×2 tensors as four components per cell; `flat` comes from
    /// [`crate::fespace::TensorField::to_flat`].
    pub fn tensor(name: &'a str, flat: &'a [f64]) -> Self {
        VtuField::Cell {
            name,
            components: 4,
            values: flat,
        }
    }

    pub fn indicators(name: &'a str, field: &'a IndicatorField) -> Self {
        Self::cell_scalar(name, &field.eta)
    }
}

fn data_array(out: &mut String, name: &str, components: usize, values: impl Iterator<Item = String>) {
    let _ = writeln!(
        out,
        "        <DataArray type=\"Float64\" Name=\"{name}\" NumberOfComponents=\"{components}\" format=\"ascii\">"
    );
    out.push_str("          ");
    let parts: Vec<String> = values.collect();
    out.push_str(&parts.join(" "));
    out.push_str("\n        </DataArray>\n");
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the mesh and fields as an ASCII `.vtu` document.
pub fn render_vtu(mesh: &Triangulation, fields: &[VtuField<'_>]) -> Result<String> {
    let (nv, nt) = (mesh.n_vertices(), mesh.n_triangles());
    for f in fields {
        let (name, expected, got) = match *f {
            VtuField::Point { name, values } => (name, nv, values.len()),
            VtuField::Cell {
                name,
                components,
                values,
            } => {
                if components == 0 {
                    return Err(Error::invalid(format!("field '{name}' has no components")));
                }
                (name, nt * components, values.len())
            }
        };
        if expected != got {
            return Err(Error::invalid(format!(
                "field '{name}' has {got} values, expected {expected}"
            )));
        }
    }
    let num = |x: &f64| format!("{x:?}");
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n");
    out.push_str("<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    out.push_str("  <UnstructuredGrid>\n");
    let _ = writeln!(out, "    <Piece NumberOfPoints=\"{nv}\" NumberOfCells=\"{nt}\">");

    out.push_str("      <PointData>\n");
    for f in fields {
        if let VtuField::Point { name, values } = f {
            data_array(&mut out, &xml_escape(name), 1, values.iter().map(num));
        }
    }
    out.push_str("      </PointData>\n      <CellData>\n");
    for f in fields {
        if let VtuField::Cell {
            name,
            components,
            values,
        } = f
        {
            data_array(&mut out, &xml_escape(name), *components, values.iter().map(num));
        }
    }
    out.push_str("      </CellData>\n      <Points>\n");
    data_array(
        &mut out,
        "Points",
        3,
        mesh.vertices()
            .iter()
            .map(|v| format!("{:?} {:?} 0.0", v.x, v.y)),
    );
    out.push_str("      </Points>\n      <Cells>\n");
    let ints = |name: &str, kind: &str, values: Vec<String>, out: &mut String| {
        let _ = writeln!(
            out,
            "        <DataArray type=\"{kind}\" Name=\"{name}\" format=\"ascii\">"
        );
        out.push_str("          ");
        out.push_str(&values.join(" "));
        out.push_str("\n        </DataArray>\n");
    };
    ints(
        "connectivity",
        "Int64",
        mesh.triangles()
            .iter()
            .map(|t| format!("{} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]))
            .collect(),
        &mut out,
    );
    ints("offsets", "Int64", (1..=nt).map(|i| (3 * i).to_string()).collect(), &mut out);
    ints("types", "UInt8", vec![VTK_TRIANGLE.to_string(); nt], &mut out);
    out.push_str("      </Cells>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    Ok(out)
}

pub fn write_vtu(mesh: &Triangulation, fields: &[VtuField<'_>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = render_vtu(mesh, fields)?;
    fs::write(path, doc).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
