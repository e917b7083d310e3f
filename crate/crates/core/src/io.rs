//! CSV readers and writers for marginals, trajectory batches and metric
//! reports. Floats are written as `{:.16e}`, which reads back bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::marginal::MarginalSamples;
use crate::metrics::{MetricReport};
use crate::trajectory::{Direction, TrajectoryBatch};

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip
/// every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("'{field}' is not a number"),
    })
}

fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

fn check_coordinate_header(names: &[&str], line: usize) -> Result<()> {
    for (i, name) in names.iter().enumerate() {
        if name.trim() != format!("x{}", i + 1) {
            return Err(Error::Parse {
                line,
                message: format!("expected column x{}, found '{name}'", i + 1),
            });
        }
    }
    Ok(())
}

pub fn write_marginal<W: Write>(samples: &MarginalSamples, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(coordinate_header(samples.dim())).map_err(csv_err)?;
    for row in samples.data().rows() {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_marginal<R: Read>(input: R, label: &str) -> Result<MarginalSamples> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().collect();
    check_coordinate_header(&names, 1)?;
    let d = names.len();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != d {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("expected {d} fields, found {}", rec.len()),
            });
        }
        for field in rec.iter() {
            values.push(parse_f64(field, i + 2)?);
        }
    }
    let n = values.len() / d.max(1);
    let data = Array2::from_shape_vec((n, d), values).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    MarginalSamples::new(data, label)
}

/// Rows `path_id,k,t,x1..xd` with `t` the physical time of index `k`.
pub fn write_trajectories<W: Write>(batch: &TrajectoryBatch, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path_id".to_string(), "k".into(), "t".into()];
    header.extend(coordinate_header(batch.dim()));
    w.write_record(&header).map_err(csv_err)?;
    let mut rec = Vec::with_capacity(header.len());
    for n in 0..batch.n_paths() {
        for k in 0..batch.grid().n_points() {
            rec.clear();
            rec.push(n.to_string());
            rec.push(k.to_string());
            rec.push(format_float(batch.physical_time(k)));
            rec.extend(batch.state(n, k).iter().map(|v| format_float(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a batch written by [`write_trajectories`]. The direction is
/// recovered from the time column (forward batches start at `t = 0`).
pub fn read_trajectories<R: Read>(input: R) -> Result<TrajectoryBatch> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 4 || names[0] != "path_id" || names[1] != "k" || names[2] != "t" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header path_id,k,t,x1,...".into(),
        });
    }
    check_coordinate_header(&names[3..], 1)?;
    let d = names.len() - 3;

    let mut rows: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != d + 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", d + 3, rec.len()),
            });
        }
        let index = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("'{s}' is not an index"),
            })
        };
        let state = rec.iter().skip(3).map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
        rows.push((index(&rec[0])?, index(&rec[1])?, parse_f64(&rec[2], line)?, state));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no trajectory rows".into(),
        });
    }
    let n_paths = rows.iter().map(|r| r.0).max().unwrap_or(0) + 1;
    let steps = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let grid = TimeGrid::with_steps(steps)?;
    if rows.len() != n_paths * (steps + 1) {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "expected {} rows for {n_paths} paths of {} points, found {}",
                n_paths * (steps + 1),
                steps + 1,
                rows.len()
            ),
        });
    }
    let direction = match rows.iter().find(|r| r.1 == 0).map(|r| r.2) {
        Some(0.0) => Direction::Forward,
        Some(1.0) => Direction::Backward,
        _ => {
            return Err(Error::Parse {
                line: 0,
                message: "time at k = 0 must be 0 (forward) or 1 (backward)".into(),
            })
        }
    };
    let mut paths = Array3::from_elem((n_paths, steps + 1, d), f64::NAN);
    for (n, k, _, state) in rows {
        for (c, v) in state.into_iter().enumerate() {
            paths[[n, k, c]] = v;
        }
    }
    TrajectoryBatch::new(paths, grid, direction)
}

pub fn write_report<W: Write>(report: &MetricReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "metric", "value"]).map_err(csv_err)?;
    for e in &report.entries {
        w.write_record([e.label.clone(), e.metric.to_string(), format_float(e.value)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(input: R) -> Result<MetricReport> {
    let mut r = csv::Reader::from_reader(input);
    let mut report = MetricReport::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                line: i + 2,
                message: "expected label,metric,value".into(),
            });
        }
        report.push(&rec[0], rec[1].parse()?, parse_f64(&rec[2], i + 2)?)?;
    }
    Ok(report)
}

pub fn load_marginal(path: &Path, label: &str) -> Result<MarginalSamples> {
    read_marginal(std::fs::File::open(path)?, label)
}

pub fn save_marginal(samples: &MarginalSamples, path: &Path) -> Result<()> {
    write_marginal(samples, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_trajectories(batch: &TrajectoryBatch, path: &Path) -> Result<()> {
    write_trajectories(batch, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_trajectories(path: &Path) -> Result<TrajectoryBatch> {
    read_trajectories(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_report(report: &MetricReport, path: &Path) -> Result<()> {
    write_report(report, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Metric;
    use crate::trajectory::reverse_trajectories;
    use proptest::prelude::*;

    fn roundtrip_batch(b: &TrajectoryBatch) -> TrajectoryBatch {
        let mut buf = Vec::new();
        write_trajectories(b, &mut buf).unwrap();
        read_trajectories(&buf[..]).unwrap()
    }

    proptest! {
        #[test]
        fn marginal_csv_is_lossless(
            v in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..60),
            d in 1usize..4,
        ) {
            let n = v.len() / d;
            prop_assume!(n >= 1);
            let data = Array2::from_shape_vec((n, d), v[..n * d].to_vec()).unwrap();
            let m = MarginalSamples::new(data, "m").unwrap();
            let mut buf = Vec::new();
            write_marginal(&m, &mut buf).unwrap();
            let back = read_marginal(&buf[..], "m").unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn trajectory_csv_is_lossless(
            v in proptest::collection::vec(-1e6f64..1e6, 24),
            fwd in any::<bool>(),
        ) {
            // 2 paths x 4 points x 3 dims
            let paths = Array3::from_shape_vec((2, 4, 3), v).unwrap();
            let dir = if fwd { Direction::Forward } else { Direction::Backward };
            let b = TrajectoryBatch::new(paths, TimeGrid::with_steps(3).unwrap(), dir).unwrap();
            prop_assert_eq!(roundtrip_batch(&b), b.clone());
            let r = reverse_trajectories(&b);
            prop_assert_eq!(roundtrip_batch(&r), r);
        }
    }

    #[test]
    fn header_is_checked() {
        assert!(read_marginal("a,b\n1,2\n".as_bytes(), "m").is_err());
        assert!(read_marginal("x1,x2\n1,oops\n".as_bytes(), "m").is_err());
        let m = read_marginal("x1,x2\n1,2\n3,4\n".as_bytes(), "m").unwrap();
        assert_eq!(m.len(), 2);
        assert!(read_trajectories("path_id,k,t,x1\n0,0,0.5,1\n0,1,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn report_roundtrip() {
        let mut r = MetricReport::default();
        r.push("pi0", Metric::Ks, 0.0625).unwrap();
        r.push("pi1", Metric::Emd, 0.1 + 0.2).unwrap();
        let mut buf = Vec::new();
        write_report(&r, &mut buf).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("label,metric,value\npi0,KS,6.2500000000000000e-2\n"));
        assert_eq!(read_report(&buf[..]).unwrap(), r);
    }
}
