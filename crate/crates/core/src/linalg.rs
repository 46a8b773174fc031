//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Smallest normalized singular value accepted as full rank.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest singular value after scaling every row to unit norm.
pub fn min_singular_rows(m: &DMatrix<Complex64>) -> f64 {
    let mut n = m.clone();
    for mut row in n.row_iter_mut() {
        let norm = row.norm();
        if norm == 0.0 {
            return 0.0;
        }
        row /= Complex64::from(norm);
    }
    smallest_singular_value(&n)
}

/// Smallest singular value after scaling every column to unit norm.
pub fn min_singular_cols(m: &DMatrix<Complex64>) -> f64 {
    let mut n = m.clone();
    for mut col in n.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            return 0.0;
        }
        col /= Complex64::from(norm);
    }
    smallest_singular_value(&n)
}

/// Outcome of a checked square solve.
#[derive(Debug, Clone)]
pub enum Solve {
    Ok(DVector<Complex64>),
    /// Row-normalized smallest singular value at or below the threshold.
    Singular(f64),
}

/// Solves `a x = b` after verifying `a` is numerically nonsingular.
pub fn checked_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Solve {
    assert_eq!(a.nrows(), a.ncols(), "square system expected");
    assert_eq!(a.nrows(), b.len());
    let sv = min_singular_rows(a);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sv > RANK_THRESHOLD) {
        return Solve::Singular(sv);
    }
    match a.clone().lu().solve(b) {
        Some(x) => Solve::Ok(x),
        None => Solve::Singular(0.0),
    }
}

/// Row vector `hᴴ W` for a channel `h` (length M) and precoder `W` (M × d).
pub fn effective_row(h: &[Complex64], w: &DMatrix<Complex64>) -> Vec<Complex64> {
    assert_eq!(h.len(), w.nrows());
    (0..w.ncols())
        .map(|c| {
            h.iter()
                .enumerate()
                .map(|(a, ha)| ha.conj() * w[(a, c)])
                .sum()
        })
        .collect()
}

/// Serde adapter writing a complex matrix as rows of `[re, im]` pairs.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m
            .row_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}
