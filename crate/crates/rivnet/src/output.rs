//! CSV tables.
//!
//! Column contracts (edge ids 1-based):
//!
//! | file | columns |
//! |------|---------|
//! | `network.csv` | edge_id, tail, head, length_m, diffusion, velocity, area, growth, mortality, capacity, discharge |
//! | `lambda.csv` | scenario_id, lambda_star, iterations, residual |
//! | `eigenfunction.csv` | edge_id, x_m, psi |
//! | `r0.csv` | scenario_id, R0, lambda_star, iterations, residual |
//! | `next_generation.csv` | edge_id, x_m, psi, phi |
//! | `steady.csv` | edge_id, x_m, u; extinct: edge_id, x_m, u, status, R0, lambda_star |
//! | `field.csv` | t_s, edge_id, x_m, u |
//! | `r0_sweep.csv` | [preset], axis columns, R0, lambda_star, status, n_unknowns, iterations |

use std::io::Write;
use std::path::{Path, PathBuf};

use rivnet_core::{Grid, RiverNetwork};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &[&str]) -> Self {
        Table { file, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Header plus rows as CSV text.
    pub fn body(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    /// Write into `dir`, optionally after a `# ...` comment line.
    pub fn write(&self, dir: &Path, stamp: Option<&str>) -> std::io::Result<PathBuf> {
        let path = dir.join(self.file);
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        if let Some(s) = stamp {
            writeln!(f, "# {s}")?;
        }
        f.write_all(self.body().as_bytes())?;
        f.flush()?;
        Ok(path)
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// One row per (edge, node) with the node's arc-length position. Vertex nodes
/// appear once for every incident edge.
pub fn per_node_rows(network: &RiverNetwork, grid: &Grid, mut cells: impl FnMut(usize) -> Vec<String>) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(grid.node_count() + network.vertex_count());
    for j in 0..network.edge_count() {
        for k in 0..=grid.cells(j) {
            let mut row = vec![(j + 1).to_string(), num(grid.position(j, k))];
            row.extend(cells(grid.node(j, k)));
            rows.push(row);
        }
    }
    rows
}

pub fn network_table(network: &RiverNetwork, discharges: Option<&[f64]>) -> Table {
    let mut t = Table::new(
        "network.csv",
        &["edge_id", "tail", "head", "length_m", "diffusion", "velocity", "area", "growth", "mortality", "capacity", "discharge"],
    );
    for (j, (e, p)) in network.edges().iter().zip(network.params()).enumerate() {
        let q = discharges.map_or_else(|| p.discharge(), |q| q[j]);
        t.push(vec![
            (j + 1).to_string(),
            (e.tail + 1).to_string(),
            (e.head + 1).to_string(),
            num(e.length),
            num(p.diffusion),
            num(p.velocity),
            num(p.area),
            num(p.growth),
            num(p.mortality),
            num(p.capacity),
            num(q),
        ]);
    }
    t
}
