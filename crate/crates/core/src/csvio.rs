//! CSV series files.
//!
//! | series     | header                              | units |
//! |------------|-------------------------------------|-------|
//! | trajectory | `t,ux,uy,uz,fx,fy,fz`               | s, m, N |
//! | voltage    | `t,phi1,phi2,phi3`                  | s, V |
//! | force      | `t,fx,fy,fz,f1x,f1y,f1z,...,f3z`    | s, N |
//!
//! Numbers are written in shortest round-trip form (exponent notation for
//! very large or small magnitudes), so reading back what was
//! written gives the same bits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::{DynamicsError, ForceSeries, Trajectory, VoltageSignal};

pub const TRAJECTORY_HEADER: &[&str] = &["t", "ux", "uy", "uz", "fx", "fy", "fz"];
pub const VOLTAGE_HEADER: &[&str] = &["t", "phi1", "phi2", "phi3"];
pub const FORCE_HEADER: &[&str] =
    &["t", "fx", "fy", "fz", "f1x", "f1y", "f1z", "f2x", "f2y", "f2z", "f3x", "f3y", "f3z"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Invalid(#[from] DynamicsError),
}

/// Writes a numeric table with the given header.
pub fn write_table<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), CsvError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    wr.flush().map_err(|e| CsvError::Io { path: PathBuf::new(), source: e })?;
    Ok(())
}

/// Reads a numeric table, insisting on exactly `header`.
pub fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>, CsvError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let found = rd.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CsvError::Header { expected: header.join(","), found: found.iter().collect::<Vec<_>>().join(",") });
    }
    let mut out = vec![];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| CsvError::Parse { line, msg: format!("`{f}`: {e}") }))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

fn v3(r: &[f64], i: usize) -> Vector3<f64> {
    Vector3::new(r[i], r[i + 1], r[i + 2])
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<(), CsvError> {
    let rows = (0..traj.len()).map(|i| {
        let (u, f) = (traj.u[i], traj.payload[i]);
        vec![traj.t[i], u.x, u.y, u.z, f.x, f.y, f.z]
    });
    write_table(w, TRAJECTORY_HEADER, rows)
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Trajectory, CsvError> {
    let rows = read_table(r, TRAJECTORY_HEADER)?;
    let t = rows.iter().map(|r| r[0]).collect();
    let u = rows.iter().map(|r| v3(r, 1)).collect();
    let f = rows.iter().map(|r| v3(r, 4)).collect();
    Ok(Trajectory::new(t, u, f)?)
}

pub fn write_voltage<W: Write>(w: W, v: &VoltageSignal) -> Result<(), CsvError> {
    write_table(w, VOLTAGE_HEADER, v.t.iter().zip(&v.phi).map(|(t, p)| vec![*t, p[0], p[1], p[2]]))
}

pub fn read_voltage<R: Read>(r: R) -> Result<VoltageSignal, CsvError> {
    let rows = read_table(r, VOLTAGE_HEADER)?;
    Ok(VoltageSignal::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| [r[1], r[2], r[3]]).collect())?)
}

pub fn write_force<W: Write>(w: W, f: &ForceSeries) -> Result<(), CsvError> {
    let rows = (0..f.len()).map(|i| {
        let mut row = vec![f.t[i]];
        row.extend(f.total[i].iter());
        for c in &f.chains[i] {
            row.extend(c.iter());
        }
        row
    });
    write_table(w, FORCE_HEADER, rows)
}

pub fn read_force<R: Read>(r: R) -> Result<ForceSeries, CsvError> {
    let rows = read_table(r, FORCE_HEADER)?;
    Ok(ForceSeries {
        t: rows.iter().map(|r| r[0]).collect(),
        total: rows.iter().map(|r| v3(r, 1)).collect(),
        chains: rows.iter().map(|r| [v3(r, 4), v3(r, 7), v3(r, 10)]).collect(),
    })
}

pub fn open(path: &Path) -> Result<File, CsvError> {
    File::open(path).map_err(|e| CsvError::Io { path: path.into(), source: e })
}

pub fn create(path: &Path) -> Result<File, CsvError> {
    File::create(path).map_err(|e| CsvError::Io { path: path.into(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn awkward() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.1 + 0.2), Just(-0.0), Just(5e-324)]
    }

    proptest! {
        #[test]
        fn trajectory_round_trips_bit_exactly(vals in proptest::collection::vec(awkward(), 18)) {
            let t = vec![0.0, 0.01, 0.02];
            let u = (0..3).map(|i| Vector3::new(vals[i], vals[i + 3], vals[i + 6])).collect();
            let f = (0..3).map(|i| Vector3::new(vals[i + 9], vals[i + 12], vals[i + 15])).collect();
            let traj = Trajectory::new(t, u, f).unwrap();
            let mut buf = vec![];
            write_trajectory(&mut buf, &traj).unwrap();
            let back = read_trajectory(buf.as_slice()).unwrap();
            for (a, b) in back.u.iter().chain(&back.payload).zip(traj.u.iter().chain(&traj.payload)) {
                for k in 0..3 {
                    prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
                }
            }
        }
    }

    #[test]
    fn voltage_and_force_round_trip() {
        let v = VoltageSignal::new(vec![1.0, 1.5], vec![[2800.123456789, 0.0, 1e-7], [1.0 / 3.0, 2.0, 3.0]]).unwrap();
        let mut buf = vec![];
        write_voltage(&mut buf, &v).unwrap();
        assert_eq!(read_voltage(buf.as_slice()).unwrap(), v);

        let f = ForceSeries {
            t: vec![0.0],
            total: vec![Vector3::new(1e-3, -2e-3, 0.1 + 0.2)],
            chains: vec![[Vector3::x(), Vector3::y() * 1e-300, Vector3::z() * -7.0]],
        };
        let mut buf = vec![];
        write_force(&mut buf, &f).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(&FORCE_HEADER.join(",")));
        assert_eq!(read_force(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn wrong_header_and_bad_number_are_reported() {
        let e = read_voltage("t,v1,v2,v3\n0,1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, CsvError::Header { .. }));
        let e = read_voltage("t,phi1,phi2,phi3\n0,1,x,3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, CsvError::Parse { line: 2, .. }), "{e}");
        let e = read_voltage("t,phi1,phi2,phi3\n0,1,-2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, CsvError::Invalid(_)));
    }
}
