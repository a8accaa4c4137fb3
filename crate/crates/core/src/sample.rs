use crate::error::{Error, Result};

/// `n` observations in `R^d`, stored row-major. The empirical measure `P_n`
/// puts mass `1/n` on each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Sample {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("no observations".into()));
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, d)
    }

    /// Builds a sample from row-major data with `d` columns.
    pub fn from_flat(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidInput("no observations".into()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill rows of width {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at observation {}, coordinate {}",
                pos / d,
                pos % d
            )));
        }
        let n = data.len() / d;
        Ok(Self { data, n, d })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Sample::from_flat(vec![], 1).is_err());
        assert!(Sample::from_flat(vec![1.0, f64::NAN], 1).is_err());
        assert!(Sample::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(Sample::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn rows_and_columns() {
        let s = Sample::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!((s.n(), s.d()), (2, 2));
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert_eq!(s.column(1).collect::<Vec<_>>(), vec![2.0, 4.0]);
    }
}
