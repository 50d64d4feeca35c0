//! CSV writers and a reader for coefficient trajectories.
//!
//! Every file opens with `# key: value` comment lines describing the run.
//! Floats use the shortest representation that round-trips, so output is
//! byte-identical for identical inputs.

use std::io::{self, BufRead, Write};

use crate::circuit::CircuitRun;
use crate::error::{Error, Result};
use crate::liouville::Trajectory;
use crate::pauli::StructureTensor;

/// Ordered `# key: value` header lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn write_to(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// `t,c1,…,cn`.
pub fn write_trajectory(w: &mut dyn Write, header: &Header, traj: &Trajectory) -> io::Result<()> {
    header.write_to(w)?;
    write!(w, "t")?;
    for i in 1..=traj.dim() {
        write!(w, ",c{i}")?;
    }
    writeln!(w)?;
    for (t, state) in traj.samples() {
        write!(w, "{t}")?;
        for v in state.values() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `t,<name1>,…` with one row per sample.
pub fn write_observables(
    w: &mut dyn Write,
    header: &Header,
    names: &[String],
    times: &[f64],
    rows: &[Vec<f64>],
) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(
        w,
        "t{}",
        names.iter().map(|n| format!(",{n}")).collect::<String>()
    )?;
    for (t, row) in times.iter().zip(rows) {
        write!(w, "{t}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `t,i,coeff,stderr` in physical units; `stderr` is empty in exact mode.
pub fn write_estimates(w: &mut dyn Write, header: &Header, run: &CircuitRun) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "t,i,coeff,stderr")?;
    for (t, e) in run.times.iter().zip(&run.estimates) {
        let stderr = e.physical_stderr();
        for (i, c) in e.physical().iter().enumerate() {
            match &stderr {
                Some(s) => writeln!(w, "{t},{},{c},{}", i + 1, s[i])?,
                None => writeln!(w, "{t},{},{c},", i + 1)?,
            }
        }
    }
    Ok(())
}

/// `t,control_bit,register_index,count`; register indices are 1-based.
pub fn write_counts(w: &mut dyn Write, header: &Header, run: &CircuitRun) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "t,control_bit,register_index,count")?;
    if let Some(counts) = &run.counts {
        for (t, r) in run.times.iter().zip(counts) {
            for (bit, reg, c) in r.entries() {
                writeln!(w, "{t},{bit},{},{c}", reg + 1)?;
            }
        }
    }
    Ok(())
}

/// Non-zero structure constants as `k,i,j,c` (1-based).
pub fn write_constants(
    w: &mut dyn Write,
    header: &Header,
    structure: &StructureTensor,
) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "k,i,j,c")?;
    for (k, i, j, c) in structure.entries() {
        writeln!(w, "{},{},{},{c}", k + 1, i + 1, j + 1)?;
    }
    Ok(())
}

/// Parsed `t,c1,…` file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads a file produced by [`write_trajectory`], skipping comment lines.
pub fn read_trajectory(r: &mut dyn BufRead) -> Result<TrajectoryTable> {
    let mut table = TrajectoryTable {
        times: Vec::new(),
        rows: Vec::new(),
    };
    let mut seen_columns = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidModel(e.to_string()))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_columns {
            seen_columns = true;
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidModel(format!("line {}: {e}", lineno + 1)))?;
        let (t, rest) = fields
            .split_first()
            .ok_or_else(|| Error::InvalidModel(format!("line {}: empty row", lineno + 1)))?;
        table.times.push(*t);
        table.rows.push(rest.to_vec());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoeffVector;
    use crate::liouville::{Method, TrajectoryMeta};
    use crate::pauli::{build_basis, build_structure_tensor};

    #[test]
    fn trajectory_round_trip() {
        let mut traj = Trajectory::new(Method::LieEuler, TrajectoryMeta::default());
        traj.push(
            0.0,
            CoeffVector::new(vec![0.5, 0.1, -0.2, 1.0 / 3.0]).unwrap(),
        )
        .unwrap();
        traj.push(
            0.25,
            CoeffVector::new(vec![0.5, 1e-300, 2.5e10, -0.0]).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &Header::new().with("method", "lie_euler"), &traj).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# method: lie_euler\nt,c1,c2,c3,c4\n"));
        let table = read_trajectory(&mut buf.as_slice()).unwrap();
        assert_eq!(table.times, traj.times());
        for (row, s) in table.rows.iter().zip(traj.states()) {
            assert_eq!(row.as_slice(), s.values());
        }
    }

    #[test]
    fn constants_listing() {
        let st = build_structure_tensor(&build_basis(1).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_constants(&mut buf, &Header::new(), &st).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains("\n2,3,4,2\n"));
    }
}
