//! CSV input and output.

use std::fs;
use std::path::{Path, PathBuf};

use orlicz_finsler::toric::{Model, ReferenceModel};
use orlicz_finsler::{Measure, Potential};

use crate::CliError;

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Columns of a headed numeric CSV, by name.
fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rd = open(path)?;
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| bad(format!("missing column `{n}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        for (c, &i) in cols.iter_mut().zip(&idx) {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", line + 2)))?;
            c.push(v);
        }
    }
    Ok(cols)
}

/// Potentials from `y,dual_value` files. All files must share one polytope
/// grid, whose length is read off the first node.
pub fn read_potentials(paths: &[&Path]) -> Result<Vec<Potential>, CliError> {
    let mut cols = Vec::new();
    for p in paths {
        let c = read_columns(p, &["y", "dual_value"])?;
        cols.push((p, c));
    }
    let (first, c0) = &cols[0];
    let n = c0[0].len();
    if n < 4 {
        return Err(CliError::Usage(format!("{}: need at least 4 rows", first.display())));
    }
    let raw = 2.0 * c0[0][0] * n as f64;
    let len = [1.0, 2.0].into_iter().find(|l| (raw - l).abs() <= 1e-9).unwrap_or(raw);
    let model: Model<f64> = ReferenceModel::new(n, len)?;
    cols.iter()
        .map(|(p, c)| {
            let y = &c[0];
            let off = y.len() != n
                || y.iter()
                    .zip(model.nodes())
                    .any(|(a, b)| (a - b).abs() > 1e-9 * len);
            if off {
                return Err(CliError::Usage(format!(
                    "{}: nodes are not the midpoint grid of [0,{len}] with {n} cells",
                    p.display()
                )));
            }
            Potential::new(&model, c[1].clone()).map_err(CliError::from)
        })
        .collect()
}

/// Function samples: the `value` column, or the last column if there is none.
pub fn read_function(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rd = open(path)?;
    let headers = rd
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .clone();
    let name = if headers.iter().any(|h| h == "value") {
        "value".to_string()
    } else {
        headers.iter().last().unwrap_or("").to_string()
    };
    Ok(read_columns(path, &[&name])?.remove(0))
}

/// A probability measure from a `node,weight` file.
pub fn read_measure(path: &Path) -> Result<Measure, CliError> {
    let mut c = read_columns(path, &["node", "weight"])?;
    let w = c.pop().unwrap();
    Measure::new(c.pop().unwrap(), w)
        .and_then(|m| m.into_probability())
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// `prefix` with `ext` appended (`runs/a` → `runs/a.csv`).
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Renders rows as CSV.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = ReferenceModel::<f64>::fano(64).unwrap();
        let u = Potential::from_fn(&m, |y| 0.1 * (3.0 * y).sin()).unwrap();
        let p = dir.path().join("u.csv");
        write(&p, &u.to_csv()).unwrap();
        let back = read_potentials(&[&p]).unwrap().remove(0);
        assert_eq!(back.model().len(), 2.0);
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write(&p, "y,dual\n0.1,0\n").unwrap();
        assert!(matches!(read_potentials(&[&p]), Err(CliError::Usage(_))));
        write(&p, "node,weight\n0.5,abc\n").unwrap();
        assert!(matches!(read_measure(&p), Err(CliError::Usage(_))));
        write(&p, "node,weight\n0.5,0.7\n").unwrap();
        assert!(matches!(read_measure(&p), Err(CliError::Usage(_))));
    }

    #[test]
    fn prefixes() {
        assert_eq!(with_ext(Path::new("out/run.1"), "csv"), PathBuf::from("out/run.1.csv"));
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
    }
}
