use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::output::parse_error;
use crate::error::{Error, Result};

/// Numeric tolerance: values match when `|a - b| <= abs + rel * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-9,
        }
    }
}

impl Tolerance {
    fn matches(&self, a: f64, b: f64) -> bool {
        if a.is_nan() || b.is_nan() {
            return a.is_nan() && b.is_nan();
        }
        if a.is_infinite() || b.is_infinite() {
            return a == b;
        }
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}

/// Differences found in one artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct FileDiff {
    pub file: PathBuf,
    /// Mismatching fields or cells.
    pub mismatches: usize,
    pub max_abs_diff: f64,
    /// Location of the first mismatch.
    pub first: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareReport {
    pub only_in_a: Vec<PathBuf>,
    pub only_in_b: Vec<PathBuf>,
    pub identical: Vec<PathBuf>,
    pub differing: Vec<FileDiff>,
}

impl CompareReport {
    pub fn is_match(&self) -> bool {
        self.only_in_a.is_empty() && self.only_in_b.is_empty() && self.differing.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.only_in_a {
            out.push_str(&format!("only in a: {}\n", f.display()));
        }
        for f in &self.only_in_b {
            out.push_str(&format!("only in b: {}\n", f.display()));
        }
        for d in &self.differing {
            out.push_str(&format!(
                "differs: {} ({} mismatches, max abs diff {:.16e}, first at {})\n",
                d.file.display(),
                d.mismatches,
                d.max_abs_diff,
                d.first
            ));
        }
        out.push_str(&format!(
            "{} identical, {} differing, {} missing\n",
            self.identical.len(),
            self.differing.len(),
            self.only_in_a.len() + self.only_in_b.len()
        ));
        out
    }
}

fn list_files(root: &Path) -> Result<BTreeSet<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::validation(
            root.display().to_string(),
            "not an artifact directory",
        ));
    }
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    Ok(out)
}

struct Acc {
    mismatches: usize,
    max_abs: f64,
    first: Option<String>,
}

impl Acc {
    fn new() -> Self {
        Self {
            mismatches: 0,
            max_abs: 0.0,
            first: None,
        }
    }

    fn miss(&mut self, at: String, diff: f64) {
        self.mismatches += 1;
        if diff.is_finite() {
            self.max_abs = self.max_abs.max(diff);
        } else {
            self.max_abs = f64::INFINITY;
        }
        self.first.get_or_insert(at);
    }
}

fn cmp_json(a: &Value, b: &Value, at: &str, tol: Tolerance, acc: &mut Acc) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if !tol.matches(x, y) {
                acc.miss(at.to_string(), (x - y).abs());
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                acc.miss(
                    format!("{at} (length {} vs {})", x.len(), y.len()),
                    f64::INFINITY,
                );
                return;
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                cmp_json(p, q, &format!("{at}[{i}]"), tol, acc);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                match (x.get(k), y.get(k)) {
                    (Some(p), Some(q)) => cmp_json(p, q, &format!("{at}.{k}"), tol, acc),
                    _ => acc.miss(format!("{at}.{k} (missing)"), f64::INFINITY),
                }
            }
        }
        _ if a == b => {}
        _ => acc.miss(at.to_string(), f64::INFINITY),
    }
}

fn cmp_csv(a: &Path, b: &Path, tol: Tolerance, acc: &mut Acc) -> Result<()> {
    let read = |p: &Path| -> Result<Vec<csv::StringRecord>> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(p)
            .map_err(|e| parse_error(p, e))?;
        r.records()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(p, e))
    };
    let (ra, rb) = (read(a)?, read(b)?);
    if ra.len() != rb.len() {
        acc.miss(
            format!("rows ({} vs {})", ra.len(), rb.len()),
            f64::INFINITY,
        );
    }
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        if x.len() != y.len() {
            acc.miss(
                format!("row {i} (width {} vs {})", x.len(), y.len()),
                f64::INFINITY,
            );
            continue;
        }
        for (j, (p, q)) in x.iter().zip(y.iter()).enumerate() {
            if p == q {
                continue;
            }
            match (p.parse::<f64>(), q.parse::<f64>()) {
                (Ok(u), Ok(v)) if tol.matches(u, v) => {}
                (Ok(u), Ok(v)) => acc.miss(format!("row {i} column {j}"), (u - v).abs()),
                _ => acc.miss(format!("row {i} column {j}"), f64::INFINITY),
            }
        }
    }
    Ok(())
}

/// Field-wise comparison of two artifact directories: JSON numbers and CSV
/// cells within `tol`, everything else byte for byte.
pub fn compare_dirs(a: &Path, b: &Path, tol: Tolerance) -> Result<CompareReport> {
    let (fa, fb) = (list_files(a)?, list_files(b)?);
    let mut report = CompareReport {
        only_in_a: fa.difference(&fb).cloned().collect(),
        only_in_b: fb.difference(&fa).cloned().collect(),
        ..CompareReport::default()
    };
    for f in fa.intersection(&fb) {
        let (pa, pb) = (a.join(f), b.join(f));
        let mut acc = Acc::new();
        match f.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let load = |p: &Path| -> Result<Value> {
                    let s = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    serde_json::from_str(&s).map_err(|e| parse_error(p, e))
                };
                cmp_json(&load(&pa)?, &load(&pb)?, "$", tol, &mut acc);
            }
            Some("csv") => cmp_csv(&pa, &pb, tol, &mut acc)?,
            _ => {
                let ba = std::fs::read(&pa).map_err(|e| Error::io(&pa, e))?;
                let bb = std::fs::read(&pb).map_err(|e| Error::io(&pb, e))?;
                if ba != bb {
                    acc.miss("contents".into(), f64::INFINITY);
                }
            }
        }
        if acc.mismatches == 0 {
            report.identical.push(f.clone());
        } else {
            report.differing.push(FileDiff {
                file: f.clone(),
                mismatches: acc.mismatches,
                max_abs_diff: acc.max_abs,
                first: acc.first.unwrap_or_default(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_mixed() {
        let t = Tolerance::default();
        assert!(t.matches(1.0, 1.0 + 1e-10));
        assert!(!t.matches(1.0, 1.0 + 1e-8));
        assert!(t.matches(f64::NAN, f64::NAN));
        assert!(!t.matches(0.0, f64::NAN));
    }

    #[test]
    fn directories_compare_fieldwise() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        std::fs::write(a.path().join("s.json"), r#"{"x": 1.0, "y": [1, 2]}"#).unwrap();
        std::fs::write(
            b.path().join("s.json"),
            r#"{"x": 1.0000000000001, "y": [1, 3]}"#,
        )
        .unwrap();
        std::fs::write(a.path().join("t.csv"), "k,v\n1,2.0\n").unwrap();
        std::fs::write(b.path().join("t.csv"), "k,v\n1,2.0000000000000000e0\n").unwrap();
        std::fs::write(a.path().join("only.txt"), "x").unwrap();
        let r = compare_dirs(a.path(), b.path(), Tolerance::default()).unwrap();
        assert_eq!(r.only_in_a, vec![PathBuf::from("only.txt")]);
        assert_eq!(r.identical, vec![PathBuf::from("t.csv")]);
        assert_eq!(r.differing.len(), 1);
        assert_eq!(r.differing[0].first, "$.y[1]");
        assert!(!r.is_match());
        let same = compare_dirs(a.path(), a.path(), Tolerance::default()).unwrap();
        assert!(same.is_match());
    }
}
