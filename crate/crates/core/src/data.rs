//! Predictor matrix plus outcome vector, the universal input.

use std::io::Read;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// A dense `n x p` predictor matrix stored row-major, an outcome of length
/// `n`, and one name per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major predictor values.
    pub fn new(x: Vec<f64>, p: usize, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("dataset needs at least one feature".into()));
        }
        if x.len() % p != 0 {
            return Err(Error::Shape(format!(
                "{} predictor values do not divide into {p} columns",
                x.len()
            )));
        }
        let n = x.len() / p;
        if n < 2 {
            return Err(Error::InvalidInput(format!("dataset needs at least 2 rows, got {n}")));
        }
        if y.len() != n {
            return Err(Error::Shape(format!("outcome has length {}, expected {n}", y.len())));
        }
        if feature_names.len() != p {
            return Err(Error::Shape(format!(
                "{} feature names for {p} features",
                feature_names.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite predictor at row {}, column {}",
                i / p,
                i % p
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite outcome at row {i}")));
        }
        Ok(Self { n, p, x, y, feature_names })
    }

    /// Builds a dataset from row vectors with default names `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Shape("ragged predictor rows".into()));
        }
        let x = rows.iter().flatten().copied().collect();
        Self::new(x, p, y, default_names(p))
    }

    /// Builds a dataset from column vectors with default names `x1..xp`.
    pub fn from_columns(columns: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("columns differ in length".into()));
        }
        let mut x = Vec::with_capacity(n * p);
        for i in 0..n {
            x.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(x, p, y, default_names(p))
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    /// Row-major predictor values.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn check_feature(&self, j: usize) -> Result<()> {
        if j >= self.p {
            return Err(Error::InvalidInput(format!(
                "feature index {j} out of range for {} features",
                self.p
            )));
        }
        Ok(())
    }

    /// Copy with column `j` replaced.
    pub fn with_column(&self, j: usize, values: &[f64]) -> Result<Self> {
        self.check_feature(j)?;
        if values.len() != self.n {
            return Err(Error::Shape(format!("column has length {}, expected {}", values.len(), self.n)));
        }
        let mut out = self.clone();
        for (i, v) in values.iter().enumerate() {
            out.x[i * self.p + j] = *v;
        }
        Ok(out)
    }

    /// Copy with the outcome replaced.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), self.p, y, self.feature_names.clone())
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::Shape(format!("{} feature names for {} features", names.len(), self.p)));
        }
        self.feature_names = names;
        Ok(self)
    }

    /// True when every outcome is exactly 0 or 1.
    pub fn has_binary_outcome(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Z-scores every predictor column. Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let mut out = self.clone();
        for j in 0..self.p {
            let col = self.column(j);
            let (mean, sd) = mean_sd(&col);
            let scale = if sd > 0.0 { sd } else { 1.0 };
            for i in 0..self.n {
                out.x[i * self.p + j] = (col[i] - mean) / scale;
            }
        }
        out
    }

    /// Pearson correlation between feature `j` and every other feature.
    pub fn correlations_with(&self, j: usize) -> Vec<(usize, f64)> {
        let target = self.column(j);
        (0..self.p)
            .filter(|&k| k != j)
            .map(|k| (k, pearson(&target, &self.column(k))))
            .collect()
    }

    /// Splits rows into (train, holdout) with a seeded shuffle.
    pub fn holdout_split(&self, holdout_fraction: f64, seed_value: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&holdout_fraction) {
            return Err(Error::InvalidConfig("holdout fraction must lie in [0, 1)".into()));
        }
        let n_hold = ((self.n as f64) * holdout_fraction).round() as usize;
        if n_hold < 2 || self.n - n_hold < 2 {
            return Err(Error::InvalidInput("holdout split leaves fewer than 2 rows on a side".into()));
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(&mut seed::rng(seed::derive(seed_value, seed::domain::HOLDOUT, 0)));
        let take = |idx: &[usize]| {
            let x = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
            let y = idx.iter().map(|&i| self.y[i]).collect();
            Self::new(x, self.p, y, self.feature_names.clone())
        };
        Ok((take(&order[n_hold..])?, take(&order[..n_hold])?))
    }

    /// Reads a comma-separated file with a header row. `outcome` names the
    /// outcome column; every other column becomes a feature.
    pub fn from_csv_reader<R: Read>(reader: R, outcome: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let y_col = headers
            .iter()
            .position(|h| h == outcome)
            .ok_or_else(|| Error::Csv(format!("outcome column '{outcome}' not found")))?;
        let names: Vec<String> =
            headers.iter().enumerate().filter(|(k, _)| *k != y_col).map(|(_, h)| h.clone()).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut missing = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            // header is line 1
            let line = r + 2;
            let record = record.map_err(|e| Error::Csv(format!("line {line}: {e}")))?;
            if record.len() != headers.len() {
                return Err(Error::Csv(format!(
                    "line {line}: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                )));
            }
            let mut row_missing = false;
            for (k, field) in record.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                    row_missing = true;
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| {
                    Error::Csv(format!("line {line}, column '{}': non-numeric value '{field}'", headers[k]))
                })?;
                if k == y_col {
                    y.push(v);
                } else {
                    x.push(v);
                }
            }
            if row_missing {
                missing.push(line);
            }
        }
        if !missing.is_empty() {
            let shown: Vec<String> = missing.iter().take(20).map(ToString::to_string).collect();
            return Err(Error::Csv(format!(
                "{} rows with missing values (lines {}{})",
                missing.len(),
                shown.join(", "),
                if missing.len() > 20 { ", ..." } else { "" }
            )));
        }
        Self::new(x, names.len(), y, names)
    }
}

fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("x{k}")).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    if v.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    (m, (ss / (v.len() - 1) as f64).sqrt())
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::new(vec![1.0, 2.0], 1, vec![1.0], vec!["a".into()]).is_err());
        assert!(Dataset::new(vec![1.0], 1, vec![1.0], vec!["a".into()]).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], 1, vec![1.0, 2.0], vec!["a".into()]).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], 0, vec![1.0, 2.0], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_and_missing_rows() {
        let text = "a,y,b\n1,2,3\n4,5,6\n7,8,9\n";
        let d = Dataset::from_csv_reader(text.as_bytes(), "y").unwrap();
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.column(1), vec![3.0, 6.0, 9.0]);
        assert_eq!(d.y(), &[2.0, 5.0, 8.0]);

        let bad = "a,y\n1,2\n,5\n7,NA\n";
        let err = Dataset::from_csv_reader(bad.as_bytes(), "y").unwrap_err().to_string();
        assert!(err.contains("lines 3, 4"), "{err}");

        let text_err = "a,y\n1,2\nfoo,5\n";
        let err = Dataset::from_csv_reader(text_err.as_bytes(), "y").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("foo"), "{err}");

        assert!(Dataset::from_csv_reader(text.as_bytes(), "zzz").is_err());
    }

    #[test]
    fn standardize_gives_unit_columns() {
        let d = Dataset::from_columns(&[vec![1.0, 2.0, 3.0, 10.0], vec![5.0; 4]], vec![0.0; 4]).unwrap();
        let s = d.standardized();
        let (m, sd) = mean_sd(&s.column(0));
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        assert_eq!(s.column(1), vec![0.0; 4]);
    }

    #[test]
    fn holdout_partitions_rows() {
        let d = Dataset::from_columns(&[(0..10).map(f64::from).collect()], (0..10).map(f64::from).collect())
            .unwrap();
        let (tr, ho) = d.holdout_split(0.3, 1).unwrap();
        assert_eq!(tr.n_rows(), 7);
        assert_eq!(ho.n_rows(), 3);
        let mut all: Vec<f64> = tr.y().iter().chain(ho.y()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, d.y());
    }
}
