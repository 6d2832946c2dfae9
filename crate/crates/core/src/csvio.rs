//! CSV ingestion and numeric serialization.
//!
//! Input files are UTF-8, comma separated, with a header row. Every column
//! except the optional label column must hold finite decimal numbers. Numbers
//! are written with 17 significant digits so that `f64` values survive a
//! write/read round trip exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::DataMatrix;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ingest_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

/// Like [`ingest_csv`], but the label column is only split off when the file
/// actually has it.
pub fn ingest_csv_with_optional_label(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let has = match label_column {
        Some(l) => rdr.headers()?.iter().any(|h| h.trim() == l),
        None => false,
    };
    drop(rdr);
    ingest_csv(path, if has { label_column } else { None })
}

/// Parses CSV from any reader. Error positions are 1-based file line and
/// column numbers (the header is line 1).
pub fn read_csv<R: Read>(reader: R, label_column: Option<&str>) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
        None => None,
    };
    let numeric: Vec<usize> = (0..headers.len()).filter(|&i| Some(i) != label_idx).collect();
    if numeric.is_empty() {
        return Err(Error::InvalidData("no numeric columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 2;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: line,
                column: record.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for &c in &numeric {
            let cell = record[c].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: line, column: c + 1 });
            }
            values.push(v);
        }
        if let Some(l) = label_idx {
            labels.push(record[l].to_string());
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidData("file has no data rows".into()));
    }
    let p = numeric.len();
    let matrix = DMatrix::from_row_slice(n, p, &values);
    let names = numeric.iter().map(|&c| headers[c].clone()).collect();
    let data = DataMatrix::new(matrix, names)?;
    match label_column {
        Some(name) => data.with_labels(name, labels),
        None => Ok(data),
    }
}

/// Writes `data` (label column first, when present).
pub fn write_csv<W: Write>(data: &DataMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::new();
    if let Some(l) = data.label_name() {
        header.push(l);
    }
    header.extend(data.column_names().iter().map(String::as_str));
    w.write_record(&header)?;
    for i in 0..data.nrows() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(labels) = data.row_labels() {
            rec.push(labels[i].clone());
        }
        rec.extend(data.values().row(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv_file(data: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, file)
}

/// Writes a header plus rows of numbers.
pub fn write_table<W: Write>(header: &[String], rows: &[Vec<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_file() {
        let m = read_csv("a,b\n1,2\n3,4".as_bytes(), None).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 2));
        assert_eq!(m.row(1), vec![3.0, 4.0]);
        assert_eq!(m.column_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn nan_is_rejected() {
        let err = read_csv("a,b\n1,NaN\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 2, column: 2 }));
    }

    #[test]
    fn parse_error_location() {
        let err = read_csv("a,b\n1,2\n3,x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, column: 2, .. }));
    }

    #[test]
    fn label_column_is_split_off() {
        let text = "region,a,b,c,d,e,f,g,h\n\"North, East\",1,2,3,4,5,6,7,8\nSouth,8,7,6,5,4,3,2,1\n";
        let m = read_csv(text.as_bytes(), Some("region")).unwrap();
        assert_eq!(m.ncols(), 8);
        assert_eq!(m.row_labels().unwrap(), &["North, East".to_string(), "South".to_string()]);
        assert!(matches!(
            read_csv(text.as_bytes(), Some("area")),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 123456789.12345679];
        let x = DataMatrix::from_rows(&[vals.to_vec()]).unwrap();
        let mut buf = Vec::new();
        write_csv(&x, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice(), None).unwrap(), x);
    }
}
