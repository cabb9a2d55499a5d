//! Draw export and import as CSV: a header row of parameter names, then
//! one row per draw.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::EstimatorError;
use crate::report::fmt_num;

fn io_err(e: impl std::fmt::Display) -> EstimatorError {
    EstimatorError::Io(e.to_string())
}

pub fn write_draws_csv<W: Write>(w: W, names: &[String], draws: &[Vec<f64>]) -> Result<(), EstimatorError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(names).map_err(io_err)?;
    for (i, d) in draws.iter().enumerate() {
        if d.len() != names.len() {
            return Err(EstimatorError::Io(format!("draw {i} has {} components, expected {}", d.len(), names.len())));
        }
        out.write_record(d.iter().map(|&v| fmt_num(v))).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_draws_csv_path(path: &Path, names: &[String], draws: &[Vec<f64>]) -> Result<(), EstimatorError> {
    let f = File::create(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    write_draws_csv(f, names, draws)
}

/// Returns the column names and the draws.
pub fn read_draws_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), EstimatorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let names: Vec<String> = rdr.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(EstimatorError::Io("draw file has no columns".into()));
    }
    let mut draws = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let row: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = row.map_err(|e| io_err(format!("row {}: {e}", i + 1)))?;
        if row.len() != names.len() {
            return Err(io_err(format!("row {} has {} fields, expected {}", i + 1, row.len(), names.len())));
        }
        draws.push(row);
    }
    Ok((names, draws))
}

pub fn read_draws_csv_path(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), EstimatorError> {
    let f = File::open(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    read_draws_csv(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let names = vec!["beta_1".to_string(), "sigma".to_string()];
        let draws = vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-17, 1.9999999999999998]];
        let mut buf = Vec::new();
        write_draws_csv(&mut buf, &names, &draws).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("beta_1,sigma\n"));
        assert!(!text.contains('\r'));
        let (n2, d2) = read_draws_csv(&buf[..]).unwrap();
        assert_eq!(n2, names);
        assert_eq!(d2, draws);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(read_draws_csv("a,b\n1,x\n".as_bytes()).is_err());
        assert!(write_draws_csv(Vec::new(), &["a".into()], &[vec![1.0, 2.0]]).is_err());
    }
}
