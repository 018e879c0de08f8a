//! Solution and kernel grids as CSV: header `x,t,<field>`, rows ordered by
//! t then x, values with 17 significant digits (lossless for doubles).

use crate::error::{Error, Result};
use crate::marchenko::SolutionGrid;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write rows (x, t, value) for value[i][j] at (xs[j], ts[i]).
pub fn grid_to_csv(field: &str, xs: &[f64], ts: &[f64], values: &[Vec<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "t", field]).expect("in-memory write");
    for (i, &t) in ts.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            w.write_record([fmt(x), fmt(t), fmt(values[i][j])]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn solution_to_csv(grid: &SolutionGrid) -> String {
    grid_to_csv("q", &grid.x, &grid.t, &grid.q)
}

/// Parse a `x,t,q` file written in row-major (t, then x) order back into a
/// grid; diagnostics fields are left at their neutral values.
pub fn solution_from_csv(text: &str) -> Result<SolutionGrid> {
    let bad = |m: String| Error::InvalidConfig(format!("solution CSV: {m}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "t", "q"] {
        return Err(bad(format!("expected header x,t,q, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push((v[0], v[1], v[2]));
    }
    if rows.is_empty() {
        return Err(bad("no rows".into()));
    }
    let t0 = rows[0].1;
    let nx = rows.iter().take_while(|r| r.1 == t0).count();
    if rows.len() % nx != 0 {
        return Err(bad("rows do not form a rectangular lattice".into()));
    }
    let xs: Vec<f64> = rows[..nx].iter().map(|r| r.0).collect();
    let ts: Vec<f64> = rows.iter().step_by(nx).map(|r| r.1).collect();
    let mut grid = SolutionGrid::zero(xs.clone(), ts.clone());
    for (n, row) in rows.iter().enumerate() {
        let (i, j) = (n / nx, n % nx);
        if row.0 != xs[j] || row.1 != ts[i] {
            return Err(bad(format!("row {} is out of lattice order", n + 2)));
        }
        grid.q[i][j] = row.2;
    }
    Ok(grid)
}
