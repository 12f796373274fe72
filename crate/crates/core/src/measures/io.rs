//! Measure and cost-matrix files.
//!
//! Measures are either CSV with a `x1,...,xd,weight` header (one row per support
//! point) or JSON `{"points": [[...], ...], "weights": [...]}`. Cost matrices are
//! headerless dense CSV, one row per source point.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::DiscreteMeasure;
use crate::error::{EotError, Result};

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Reads a measure, picking the format from the file extension (`.json` or CSV otherwise).
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let file = std::fs::File::open(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        read_measure_json(file)
    } else {
        read_measure_csv(file)
    }
}

pub fn read_measure_json<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let parsed: MeasureJson =
        serde_json::from_reader(reader).map_err(|e| EotError::Parse(e.to_string()))?;
    DiscreteMeasure::new(parsed.points, &parsed.weights)
}

pub fn read_measure_csv<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| EotError::Parse(e.to_string()))?
        .clone();
    let d = headers.len().saturating_sub(1);
    let header_ok = d >= 1
        && headers.get(d) == Some("weight")
        && (0..d).all(|i| headers.get(i) == Some(format!("x{}", i + 1).as_str()));
    if !header_ok {
        return Err(EotError::Parse(format!(
            "measure header must be `x1,...,xd,weight`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| EotError::Parse(e.to_string()))?;
        let row = parse_row(&record, line + 2)?;
        if row.len() != d + 1 {
            return Err(EotError::Parse(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                row.len(),
                d + 1
            )));
        }
        weights.push(row[d]);
        points.push(row[..d].to_vec());
    }
    DiscreteMeasure::new(points, &weights)
}

pub fn read_cost_matrix_csv<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| EotError::Parse(e.to_string()))?;
        rows.push(parse_row(&record, line + 1)?);
    }
    let m = rows.first().map(Vec::len).unwrap_or(0);
    if m == 0 {
        return Err(EotError::Parse("empty cost matrix".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(EotError::Parse(format!(
            "cost row {} has {} columns, expected {m}",
            bad + 1,
            rows[bad].len()
        )));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect())
        .map_err(|e| EotError::Parse(e.to_string()))
}

fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .map(|field| {
            field
                .parse::<f64>()
                .map_err(|_| EotError::Parse(format!("line {line}: `{field}` is not a number")))
        })
        .collect()
}

pub fn write_measure_csv<W: Write>(measure: &DiscreteMeasure, mut out: W) -> Result<()> {
    let d = measure.dim();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["weight".to_string()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (p, w) in measure.points().iter().zip(measure.weights()) {
        let fields: Vec<String> = p.iter().chain(std::iter::once(w)).map(|v| v.to_string()).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_cost_matrix_csv<W: Write>(matrix: &Array2<f64>, mut out: W) -> Result<()> {
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_measure_parses_and_normalizes() {
        let text = "x1,x2,weight\n0,0,1\n1,0.5,3\n";
        let mu = read_measure_csv(text.as_bytes()).unwrap();
        assert_eq!(mu.points(), &[vec![0.0, 0.0], vec![1.0, 0.5]]);
        assert_eq!(mu.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn csv_measure_rejects_bad_input() {
        assert!(matches!(
            read_measure_csv("a,b\n1,2\n".as_bytes()),
            Err(EotError::Parse(_))
        ));
        assert!(matches!(
            read_measure_csv("x1,weight\n1,oops\n".as_bytes()),
            Err(EotError::Parse(_))
        ));
        assert!(read_measure_csv("x1,weight\n1,2,3\n".as_bytes()).is_err());
        assert!(matches!(
            read_measure_csv("x1,weight\n1,0\n2,1\n".as_bytes()),
            Err(EotError::NotStrictlyPositive { index: 0 })
        ));
    }

    #[test]
    fn json_measure() {
        let text = r#"{"points": [[0.0], [2.0]], "weights": [1, 1]}"#;
        let mu = read_measure_json(text.as_bytes()).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.5]);
        assert!(read_measure_json("{\"points\": []}".as_bytes()).is_err());
    }

    #[test]
    fn measure_csv_round_trip() {
        let mu = DiscreteMeasure::new(vec![vec![0.125, -3.0], vec![1e-7, 2.5]], &[0.3, 0.7]).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&mu, &mut buf).unwrap();
        let back = read_measure_csv(buf.as_slice()).unwrap();
        assert_eq!(back.points(), mu.points());
        for (x, y) in back.weights().iter().zip(mu.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn cost_matrix_csv() {
        let c = read_cost_matrix_csv("1,2,3\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(c.dim(), (2, 3));
        assert_eq!(c[[1, 2]], 6.0);
        assert!(read_cost_matrix_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_cost_matrix_csv("".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_cost_matrix_csv(&c, &mut buf).unwrap();
        assert_eq!(read_cost_matrix_csv(buf.as_slice()).unwrap(), c);
    }
}
