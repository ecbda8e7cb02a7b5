//! Trajectory CSV: header `t,theta,psi,alpha`, one row per sample.
//!
//! Values use the shortest decimal form that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dynamics::State;
use crate::error::HarnessError;
use crate::integrator::Trajectory;

pub const HEADER: [&str; 4] = ["t", "theta", "psi", "alpha"];

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| HarnessError::Csv(e.to_string());
    w.write_record(HEADER).map_err(csv_err)?;
    for s in &traj.samples {
        w.write_record([
            s.t.to_string(),
            s.theta.to_string(),
            s.psi.to_string(),
            s.alpha.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.to_string()))
}

pub fn export_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_trajectory(traj, BufWriter::new(file)).map_err(|e| match e {
        HarnessError::Csv(msg) => HarnessError::io(path, std::io::Error::other(msg)),
        other => other,
    })
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| HarnessError::Csv(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Csv(format!(
            "expected header {:?}, got {:?}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| HarnessError::Csv(e.to_string()))?;
        let mut v = [0.0; 4];
        for (i, field) in record.iter().enumerate() {
            v[i] = field.parse().map_err(|_| {
                HarnessError::Csv(format!("row {}: cannot parse {field:?} as a number", row + 1))
            })?;
        }
        samples.push(State::new(v[0], v[1], v[2], v[3]));
    }
    Ok(Trajectory::new(samples))
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, HarnessError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_trajectory(file)
}
