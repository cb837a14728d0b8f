//! Labelled tabular data and per-class moments.
//!
//! A [`FeatureMatrix`] holds `m` samples of `n` real-valued features together
//! with a class label per sample. Labels are stored 0-based and contiguous:
//! `0..K`, assigned in order of first appearance in the source data.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// `m x n` table of feature values with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl FeatureMatrix {
    /// Builds a matrix from raw parts. `labels` must be 0-based class ids
    /// covering every class in `0..K`, where `K = max(labels) + 1`.
    ///
    /// Feature names default to `f0, f1, ...` and class names to the
    /// decimal class id.
    pub fn new(
        values: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |&k| k + 1);
        let class_names = (0..n_classes).map(|k| k.to_string()).collect();
        Self::with_names(values, labels, feature_names, class_names)
    }

    fn with_names(
        values: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Option<Vec<String>>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (m, n) = values.dim();
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        if n == 0 {
            return Err(Error::ShapeMismatch("dataset has no feature columns".into()));
        }
        if labels.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                m
            )));
        }
        let feature_names =
            feature_names.unwrap_or_else(|| (0..n).map(|j| format!("f{j}")).collect());
        if feature_names.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n
            )));
        }
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::SingleClass);
        }
        let mut seen = vec![false; n_classes];
        for &label in &labels {
            if label >= n_classes {
                return Err(Error::ShapeMismatch(format!(
                    "label {label} outside 0..{n_classes}"
                )));
            }
            seen[label] = true;
        }
        if let Some(k) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidParameter(format!("class {k} has no samples")));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {v} at sample {i}, feature {j}"
            )));
        }
        Ok(Self {
            values,
            labels,
            n_classes,
            feature_names,
            class_names,
        })
    }

    /// Parses CSV text with a header row. The label column is chosen by name;
    /// every other column must hold finite decimal numbers.
    pub fn from_csv_str(text: &str, label_column: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
            .filter(|(_, line)| !line.trim().is_empty());

        let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
        let header: Vec<&str> = header.split(',').map(str::trim).collect();
        let label_idx = header
            .iter()
            .position(|&h| h == label_column)
            .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
        let feature_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut flat = Vec::new();
        let mut labels = Vec::new();
        let mut class_names: Vec<String> = Vec::new();
        let mut class_ids: HashMap<String, usize> = HashMap::new();

        for (row, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                let column = header.get(cells.len().min(header.len() - 1)).unwrap_or(&"");
                return Err(Error::ParseError {
                    row,
                    column: column.to_string(),
                    reason: format!("expected {} fields, found {}", header.len(), cells.len()),
                });
            }
            for (j, cell) in cells.iter().enumerate() {
                if cell.contains('"') {
                    return Err(Error::ParseError {
                        row,
                        column: header[j].to_string(),
                        reason: "quoted cells are not supported".into(),
                    });
                }
                if j == label_idx {
                    let next = class_names.len();
                    let id = *class_ids.entry(cell.to_string()).or_insert_with(|| {
                        class_names.push(cell.to_string());
                        next
                    });
                    labels.push(id);
                } else {
                    let value: f64 = cell.parse().map_err(|_| Error::ParseError {
                        row,
                        column: header[j].to_string(),
                        reason: format!("'{cell}' is not a number"),
                    })?;
                    if !value.is_finite() {
                        return Err(Error::ParseError {
                            row,
                            column: header[j].to_string(),
                            reason: format!("'{cell}' is not finite"),
                        });
                    }
                    flat.push(value);
                }
            }
        }

        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if class_names.len() < 2 {
            return Err(Error::SingleClass);
        }
        let values = Array2::from_shape_vec((labels.len(), feature_names.len()), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::with_names(values, labels, Some(feature_names), class_names)
    }

    /// Reads a CSV file; see [`FeatureMatrix::from_csv_str`].
    pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text, label_column)
    }

    /// Writes the matrix as CSV with the label column last. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W, label_column: &str) -> Result<()> {
        let mut header = self.feature_names.join(",");
        header.push(',');
        header.push_str(label_column);
        writeln!(out, "{header}")?;
        for (row, &label) in self.values.outer_iter().zip(&self.labels) {
            let mut line = String::new();
            for v in row.iter() {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&self.class_names[label]);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// 0-based class id per sample.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Original label strings, indexed by class id.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Number of samples in each class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes];
        for &label in &self.labels {
            sizes[label] += 1;
        }
        sizes
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::ShapeMismatch(format!(
                "feature index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        let values = self.values.select(Axis(1), columns);
        let names = columns.iter().map(|&j| self.feature_names[j].clone()).collect();
        Self::with_names(values, self.labels.clone(), Some(names), self.class_names.clone())
    }
}

/// Per-class mean and population standard deviation of every feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    /// `K x n` class means.
    pub mu: Array2<f64>,
    /// `K x n` class standard deviations (population form, divides by the class size).
    pub sigma: Array2<f64>,
    /// `sum_k sigma[k, j]^2` for every feature `j`.
    pub sigma_sq_sum: Array1<f64>,
}

impl ClassStats {
    pub fn compute(data: &FeatureMatrix) -> Self {
        let k = data.n_classes();
        let n = data.n_features();
        let sizes = data.class_sizes();
        let mut mu = Array2::zeros((k, n));
        let mut sigma = Array2::zeros((k, n));

        for j in 0..n {
            let column = data.feature(j);
            // Means are accumulated as offsets from the first member of each
            // class, so a constant class reproduces its value exactly.
            let mut anchor = vec![f64::NAN; k];
            let mut offset_sum = vec![0.0; k];
            for (&x, &label) in column.iter().zip(data.labels()) {
                if anchor[label].is_nan() {
                    anchor[label] = x;
                }
                offset_sum[label] += x - anchor[label];
            }
            for c in 0..k {
                mu[[c, j]] = anchor[c] + offset_sum[c] / sizes[c] as f64;
            }
            let mut sq = vec![0.0; k];
            for (&x, &label) in column.iter().zip(data.labels()) {
                let d = x - mu[[label, j]];
                sq[label] += d * d;
            }
            for c in 0..k {
                sigma[[c, j]] = (sq[c] / sizes[c] as f64).sqrt();
            }
        }

        let sigma_sq_sum = sigma.mapv(|s| s * s).sum_axis(Axis(0));
        Self {
            mu,
            sigma,
            sigma_sq_sum,
        }
    }
}

/// Shorthand for [`ClassStats::compute`].
pub fn class_stats(data: &FeatureMatrix) -> ClassStats {
    ClassStats::compute(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn single_feature(column: Vec<f64>, labels: Vec<usize>) -> FeatureMatrix {
        let m = column.len();
        FeatureMatrix::new(Array2::from_shape_vec((m, 1), column).unwrap(), labels, None).unwrap()
    }

    #[test]
    fn labels_encoded_by_first_occurrence() {
        let data = FeatureMatrix::from_csv_str("x,y,label\n1,2,a\n3,4,b\n5,6,a\n", "label").unwrap();
        assert_eq!(data.labels(), &[0, 1, 0]);
        assert_eq!(data.n_classes(), 2);
        assert_eq!(data.feature_names(), &["x", "y"]);
        assert_eq!(data.class_names(), &["a", "b"]);
        assert_eq!(data.values(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    }

    #[test]
    fn label_column_may_sit_anywhere() {
        let data = FeatureMatrix::from_csv_str("cls,x\nb,1\na,2\n", "cls").unwrap();
        assert_eq!(data.labels(), &[0, 1]);
        assert_eq!(data.class_names(), &["b", "a"]);
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let err = FeatureMatrix::from_csv_str("x,y,label\n1,2,a\n3,oops,b\n", "label").unwrap_err();
        match err {
            Error::ParseError { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_cells_are_rejected() {
        let err = FeatureMatrix::from_csv_str("x,label\n\"1,5\",a\n2,b\n", "label").unwrap_err();
        assert_eq!(err.name(), "ParseError");
    }

    #[test]
    fn nan_cells_are_rejected() {
        let err = FeatureMatrix::from_csv_str("x,label\nNaN,a\n2,b\n", "label").unwrap_err();
        assert_eq!(err.name(), "ParseError");
    }

    #[test]
    fn single_class_is_rejected() {
        let err = FeatureMatrix::from_csv_str("x,label\n1,a\n2,a\n", "label").unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    #[test]
    fn missing_label_column() {
        let err = FeatureMatrix::from_csv_str("x,label\n1,a\n2,b\n", "class").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "class"));
    }

    #[test]
    fn header_only_is_empty() {
        let err = FeatureMatrix::from_csv_str("x,label\n", "label").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
        let err = FeatureMatrix::from_csv_str("", "label").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let err = FeatureMatrix::from_csv_str("x,y,label\n1,2,a\n3,b\n", "label").unwrap_err();
        assert!(matches!(err, Error::ParseError { row: 3, .. }));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let values = array![[0.1, -3.25e-7], [1.0 / 3.0, 12345.678901234567], [f64::MIN_POSITIVE, -0.0]];
        let data = FeatureMatrix::new(values, vec![0, 1, 1], None).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf, "label").unwrap();
        let back = FeatureMatrix::from_csv_str(std::str::from_utf8(&buf).unwrap(), "label").unwrap();
        for (a, b) in data.values().iter().zip(back.values().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.labels(), data.labels());
        assert_eq!(back.feature_names(), data.feature_names());
    }

    #[test]
    fn constant_within_class() {
        let stats = class_stats(&single_feature(vec![0.0, 0.0, 1.0, 1.0], vec![0, 0, 1, 1]));
        assert_eq!(stats.mu.column(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(stats.sigma.column(0).to_vec(), vec![0.0, 0.0]);
        assert_eq!(stats.sigma_sq_sum[0], 0.0);
    }

    #[test]
    fn population_moments() {
        // class 0: {0, 2} -> mean 1, var ((1)^2 + (1)^2) / 2 = 1
        // class 1: {1, 3} -> mean 2, var 1
        let stats = class_stats(&single_feature(vec![0.0, 2.0, 1.0, 3.0], vec![0, 0, 1, 1]));
        assert_eq!(stats.mu.column(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(stats.sigma.column(0).to_vec(), vec![1.0, 1.0]);
        assert_eq!(stats.sigma_sq_sum[0], 2.0);
    }

    #[test]
    fn singleton_class_has_zero_sigma() {
        let stats = class_stats(&single_feature(vec![4.0, 1.0, 2.0, 6.0], vec![0, 1, 1, 1]));
        assert_eq!(stats.sigma[[0, 0]], 0.0);
        assert_eq!(stats.mu[[0, 0]], 4.0);
        assert_eq!(stats.mu[[1, 0]], 3.0);
    }

    #[test]
    fn constant_column_mean_is_exact() {
        let stats = class_stats(&single_feature(vec![0.1; 7], vec![0, 1, 0, 1, 1, 0, 1]));
        assert_eq!(stats.mu[[0, 0]], 0.1);
        assert_eq!(stats.mu[[1, 0]], 0.1);
        assert_eq!(stats.sigma_sq_sum[0], 0.0);
    }

    #[test]
    fn select_features_keeps_labels() {
        let data = FeatureMatrix::new(array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], vec![1, 0], None).unwrap();
        let sub = data.select_features(&[2, 0]).unwrap();
        assert_eq!(sub.values(), &array![[3.0, 1.0], [6.0, 4.0]]);
        assert_eq!(sub.feature_names(), &["f2", "f0"]);
        assert_eq!(sub.labels(), data.labels());
        assert!(data.select_features(&[3]).is_err());
    }

    #[test]
    fn constructor_validates_classes() {
        assert!(matches!(
            FeatureMatrix::new(array![[1.0], [2.0]], vec![0, 0], None),
            Err(Error::SingleClass)
        ));
        assert!(FeatureMatrix::new(array![[1.0], [2.0]], vec![0, 2], None).is_err());
        assert!(FeatureMatrix::new(array![[f64::NAN], [2.0]], vec![0, 1], None).is_err());
    }
}
