use crate::error::{Error, Result};

/// Dense row-major features with class-index labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    dim: usize,
    labels: Vec<usize>,
    classes: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("feature matrix needs at least one row".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if classes.is_empty() {
            return Err(Error::Invalid("feature matrix needs at least one class".into()));
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("feature value".into()));
            }
            data.extend_from_slice(row);
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes.len()) {
            return Err(Error::Invalid(format!("label index {bad} out of range for {} classes", classes.len())));
        }
        Ok(FeatureMatrix {
            data,
            n_rows: rows.len(),
            dim,
            labels,
            classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order, keeping the class list.
    pub fn subset(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            indices.iter().map(|&i| self.row(i).to_vec()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.classes.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let classes = vec!["a".to_string(), "b".to_string()];
        assert!(FeatureMatrix::new(vec![], vec![], classes.clone()).is_err());
        assert!(FeatureMatrix::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], classes.clone()).is_err());
        assert!(FeatureMatrix::new(vec![vec![f64::NAN]], vec![0], classes.clone()).is_err());
        assert!(FeatureMatrix::new(vec![vec![1.0]], vec![2], classes.clone()).is_err());
        let m = FeatureMatrix::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![1, 0], classes).unwrap();
        assert_eq!(m.row(1), [3.0, 4.0]);
        assert_eq!(m.subset(&[1]).unwrap().labels(), [0]);
        assert_eq!(m.class_counts(), [1, 1]);
    }
}
