//! Thin wrappers over nalgebra for complex dense matrices.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// Complex dense matrix.
pub type CMat = DMatrix<C64>;
/// Complex dense vector.
pub type CVec = DVector<C64>;

/// Inverse via LU.
pub fn inv(a: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix inverse".into()))
}

/// Solve a·x = b via LU.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("linear solve".into()))
}

/// Solve a·x = b for a vector right-hand side.
pub fn solve_vec(a: &CMat, b: &CVec) -> Result<CVec> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("linear solve".into()))
}

/// Least-squares solution of a full-column-rank system.
pub fn lstsq(a: &CMat, b: &CVec) -> Result<CVec> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-14)
        .map_err(|e| Error::Singular(format!("least squares: {e}")))
}

/// Eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = a
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Singular("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Ascending eigenvalues of the hermitian part (a + a*)/2.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.singular_values().iter().fold(0.0, |m: f64, &s| m.max(s))
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m: f64, z| m.max(z.norm()))
}

/// Largest entry modulus of a vector.
pub fn max_abs_vec(a: &CVec) -> f64 {
    a.iter().fold(0.0, |m: f64, z| m.max(z.norm()))
}

/// Identity of size n.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Bilinear (unconjugated) product xᵀy.
pub fn dot(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Stack two vectors.
pub fn concat(x: &CVec, y: &CVec) -> CVec {
    CVec::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
}

/// Block matrix [[a, b], [c, d]].
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (n1, m1) = a.shape();
    let (n2, m2) = d.shape();
    let mut out = CMat::zeros(n1 + n2, m1 + m2);
    out.view_mut((0, 0), (n1, m1)).copy_from(a);
    out.view_mut((0, m1), (n1, m2)).copy_from(b);
    out.view_mut((n1, 0), (n2, m1)).copy_from(c);
    out.view_mut((n1, m1), (n2, m2)).copy_from(d);
    out
}

/// Real least squares via SVD.
pub fn lstsq_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-14)
        .map_err(|e| Error::Singular(e.to_string()))
}

/// Entrywise complex conjugate.
pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

/// Entrywise complex conjugate of a vector.
pub fn conj_vec(a: &CVec) -> CVec {
    a.map(|z| z.conj())
}

/// Serde adapter writing a matrix as {rows, cols, entries} in row-major order.
pub mod mat_json {
    use super::{CMat, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Raw {
        rows: usize,
        cols: usize,
        entries: Vec<C64>,
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let (rows, cols) = m.shape();
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| m[(i, j)]))
            .collect();
        Raw {
            rows,
            cols,
            entries,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let r = Raw::deserialize(d)?;
        if r.entries.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom("entry count mismatch"));
        }
        Ok(CMat::from_row_slice(r.rows, r.cols, &r.entries))
    }
}

/// Serde adapter writing a vector as a plain array of [re, im] pairs.
pub mod vec_json {
    use super::{CVec, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        Ok(CVec::from_vec(Vec::<C64>::deserialize(d)?))
    }
}

/// Largest entry of a − aᵀ.
pub fn asymmetry(a: &CMat) -> f64 {
    max_abs(&(a - a.transpose()))
}
