//! File loaders. Each `load_*` reads a whole file and hands the text to the
//! matching `parse_*` function; errors carry the path and, for malformed
//! content, the 1-based line number.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hierarchy::LabelMatrix;
use crate::tensor::text::{parse_tensor, MAX_DENSE_ENTRIES};
use crate::tensor::DenseTensor;

/// Per-sample labels in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub sample_ids: Vec<String>,
    pub matrix: LabelMatrix,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn record_line(r: &csv::StringRecord) -> usize {
    r.position().map_or(0, |p| p.line() as usize)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

/// Numeric CSV without a header; rows map to the first mode.
pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for rec in csv_reader(text).records() {
        let rec = rec.map_err(csv_error)?;
        let line = record_line(&rec);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(Error::parse(line, format!("expected {c} fields, found {}", rec.len())))
            }
            Some(_) => {}
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(line, format!("not a number: {field:?}")))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::parse(line, format!("entry {v} is negative or not finite")));
            }
            values.push(v);
        }
        rows += 1;
        if values.len() > MAX_DENSE_ENTRIES {
            return Err(Error::parse(line, "matrix too large"));
        }
    }
    let cols = cols.ok_or_else(|| Error::parse(1, "empty matrix file"))?;
    Ok(Array2::from_shape_vec((rows, cols), values).expect("row lengths checked"))
}

/// `.csv` files are read as CSV; anything else must be an order-2 DTF or
/// COO tensor.
pub fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let parsed = if is_csv {
        parse_matrix_csv(&text)
    } else {
        parse_tensor(&text).and_then(|t| {
            t.to_matrix()
                .ok_or_else(|| Error::arg(format!("expected a matrix, found order {}", t.order())))
        })
    };
    parsed.map_err(|e| e.in_file(path))
}

/// A tensor file (DTF or COO), or a matrix CSV read as an order-2 tensor.
pub fn load_tensor(path: &Path) -> Result<DenseTensor> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let m = load_matrix(path)?;
        return DenseTensor::from_matrix(&m).map_err(|e| e.in_file(path));
    }
    let text = read(path)?;
    parse_tensor(&text).map_err(|e| e.in_file(path))
}

/// CSV rows `sample_id,class_name`, with an optional header naming exactly
/// those two columns. Classes are numbered in order of first appearance and
/// samples keep file order.
pub fn parse_labels(text: &str) -> Result<Labels> {
    let mut ids = Vec::new();
    let mut seen = HashMap::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut classes = Vec::new();
    let mut class_index = HashMap::new();
    for (n, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = record_line(&rec);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::parse(line, format!("expected 2 fields, found {}", rec.len())));
        }
        if n == 0 && &rec[0] == "sample_id" && &rec[1] == "class_name" {
            continue;
        }
        let (id, class) = (&rec[0], &rec[1]);
        if id.is_empty() || class.is_empty() {
            return Err(Error::parse(line, "empty sample id or class name"));
        }
        if let Some(prev) = seen.insert(id.to_string(), line) {
            return Err(Error::parse(line, format!("sample {id:?} already labelled on line {prev}")));
        }
        let k = *class_index.entry(class.to_string()).or_insert_with(|| {
            class_names.push(class.to_string());
            class_names.len() - 1
        });
        ids.push(id.to_string());
        classes.push(k);
    }
    if ids.is_empty() {
        return Err(Error::parse(1, "no labelled samples"));
    }
    Ok(Labels {
        sample_ids: ids,
        matrix: LabelMatrix::one_hot(&classes, class_names)?,
    })
}

pub fn load_labels(path: &Path) -> Result<Labels> {
    parse_labels(&read(path)?).map_err(|e| e.in_file(path))
}

/// One token per line; line `i` (0-based) is word id `i`. A single trailing
/// newline is allowed, blank lines are not.
pub fn parse_vocab(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            return Err(Error::parse(i + 1, "blank vocabulary entry"));
        }
        out.push(token.to_string());
    }
    if out.is_empty() {
        return Err(Error::parse(1, "empty vocabulary"));
    }
    Ok(out)
}

pub fn load_vocab(path: &Path) -> Result<Vec<String>> {
    parse_vocab(&read(path)?).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_matrix() {
        let m = parse_matrix_csv("# counts\n1, 2,3\n4,5,6\n").unwrap();
        assert_eq!(m, array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
    }

    #[test]
    fn csv_matrix_errors_report_lines() {
        match parse_matrix_csv("1,2\n3,-4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_matrix_csv("1,2\n3,4\n5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_matrix_csv("a,b\n").is_err());
        assert!(parse_matrix_csv("").is_err());
    }

    #[test]
    fn labels_grow_with_new_classes() {
        let text = "sample_id,class_name\nd1,sci\nd2,rec\nd3,sci\nd4,rec\nd5,talk\n";
        let l = parse_labels(text).unwrap();
        assert_eq!(l.matrix.class_names(), ["sci", "rec", "talk"]);
        assert_eq!(l.matrix.num_samples(), 5);
        let y = l.matrix.matrix();
        assert_eq!(y.column(4).to_vec(), vec![0.0, 0.0, 1.0]);
        assert_eq!(y.row(2).sum(), 1.0);
        assert_eq!(l.matrix.classes(), vec![0, 1, 0, 1, 2]);
    }

    #[test]
    fn labels_errors() {
        assert!(parse_labels("a,x\na,y\n").is_err());
        assert!(parse_labels("a,x,z\n").is_err());
        assert!(parse_labels("sample_id,class_name\n").is_err());
        match parse_labels("a,x\n,y\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vocab_lines() {
        assert_eq!(parse_vocab("alpha\nbeta\n").unwrap(), vec!["alpha", "beta"]);
        assert!(parse_vocab("alpha\n\nbeta\n").is_err());
        assert!(parse_vocab("").is_err());
    }

    #[test]
    fn file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dtf");
        std::fs::write(&p, "dtf 3 1 1 1\n1\n").unwrap();
        let err = load_matrix(&p).unwrap_err().to_string();
        assert!(err.contains("m.dtf"), "{err}");
        std::fs::write(&p, "dtf 2 2 2\n1 0 0 1\n").unwrap();
        assert_eq!(load_matrix(&p).unwrap(), Array2::<f64>::eye(2));
        assert!(load_tensor(&dir.path().join("missing.dtf")).is_err());
    }
}
