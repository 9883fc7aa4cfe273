//! Labelled feature matrices and CSV ingestion.
//!
//! Class labels are 1-based (`1..=n_classes`), matching the CSV format and
//! the usual way classes are numbered in reports. Sample indices are 0-based.

use std::io::Read;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{invalid, Error, Result};

/// A feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// Builds a dataset, checking that every class in `1..=n_classes` occurs,
    /// that there are at least two samples and that all features are finite.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let ds = Self::new_unchecked_classes(features, labels, n_classes)?;
        let counts = ds.class_counts();
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::DegenerateClass { class: empty + 1 });
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but allows classes without samples. Training
    /// subsets and permuted label sets go through here; routines that need
    /// every class present check it themselves.
    pub fn new_unchecked_classes(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(invalid(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() < 2 {
            return Err(invalid("a dataset needs at least two samples"));
        }
        if features.ncols() < 1 {
            return Err(invalid("a dataset needs at least one feature"));
        }
        if n_classes < 1 {
            return Err(invalid("n_classes must be positive"));
        }
        if let Some(bad) = labels.iter().find(|&&l| l == 0 || l > n_classes) {
            return Err(invalid(format!("label {bad} outside 1..={n_classes}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("features contain non-finite values"));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Number of samples per class, indexed by `label - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes)
    }

    /// Rows selected by `indices`, in that order. The result may lack classes.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Same features, different labels (e.g. a permuted copy).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::new_unchecked_classes(self.features.clone(), labels, self.n_classes)
    }

    /// Binary labels as regression targets: class 1 maps to `+1`, class 2 to `-1`.
    pub fn labels_pm1(&self) -> Result<Array1<f64>> {
        if self.n_classes != 2 {
            return Err(invalid(format!(
                "±1 coding needs exactly 2 classes, dataset has {}",
                self.n_classes
            )));
        }
        Ok(labels_to_pm1(&self.labels))
    }

    /// Reads the CSV layout used by the command line tool: first column an
    /// integer class label, remaining columns features, comma separated.
    /// Lines starting with `#` are skipped. The class count is the largest
    /// label seen.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut width = None;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let parse_err = |message: String| Error::Parse { line, message };
            if record.len() < 2 {
                return Err(parse_err("expected a label and at least one feature".into()));
            }
            let n_feat = record.len() - 1;
            match width {
                None => width = Some(n_feat),
                Some(w) if w != n_feat => return Err(parse_err(format!("expected {w} features, found {n_feat}"))),
                _ => {}
            }
            let label: usize = record[0]
                .parse()
                .map_err(|_| parse_err(format!("label `{}` is not a positive integer", &record[0])))?;
            if label == 0 {
                return Err(parse_err("labels start at 1".into()));
            }
            labels.push(label);
            for field in record.iter().skip(1) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(format!("`{field}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("`{field}` is not finite")));
                }
                values.push(v);
            }
        }
        let width = width.ok_or_else(|| Error::Parse {
            line: 0,
            message: "no data rows".into(),
        })?;
        let n_classes = labels.iter().copied().max().unwrap_or(0);
        let features = Array2::from_shape_vec((labels.len(), width), values).map_err(|e| invalid(e.to_string()))?;
        Dataset::new(features, labels, n_classes)
    }
}

pub(crate) fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &l in labels {
        counts[l - 1] += 1;
    }
    counts
}

/// Class 1 → `+1`, anything else → `-1`.
pub fn labels_to_pm1(labels: &[usize]) -> Array1<f64> {
    labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}

/// Checks that a response vector is a ±1 coding.
pub(crate) fn check_pm1(y: &[f64]) -> Result<()> {
    match y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        Some(v) => Err(invalid(format!("classification labels must be ±1, found {v}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_missing_class() {
        let x = array![[0.0], [1.0], [2.0]];
        let err = Dataset::new(x, vec![1, 1, 3], 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateClass { class: 2 }));
    }

    #[test]
    fn rejects_non_finite() {
        let x = array![[0.0], [f64::NAN]];
        assert!(Dataset::new(x, vec![1, 2], 2).is_err());
    }

    #[test]
    fn pm1_coding() {
        let ds = Dataset::new(array![[0.0], [1.0], [2.0]], vec![2, 1, 2], 2).unwrap();
        assert_eq!(ds.labels_pm1().unwrap(), array![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn csv_with_header_comment() {
        let text = "# label,f1,f2\n1,0.5,1.5\n2, -1.0 ,2e-1\n1,3,4\n";
        let ds = Dataset::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[1, 2, 1]);
        assert_eq!(ds.features()[[1, 1]], 0.2);
    }

    #[test]
    fn csv_reports_line_numbers() {
        let text = "1,0.5\n2,abc\n";
        match Dataset::from_csv_reader(text.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "1,0.5,1\n2,1\n";
        match Dataset::from_csv_reader(ragged.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
