//! Gaussian operators and vectors on the boson Fock space.
//!
//! A Gaussian operator B[K L | λ; Lᵗ M | μ] is the operator with kernel
//! exp{½ (z ū) S (z ū)ᵗ + zλ + ūμ}, S = [[K, L], [Lᵗ, M]], times a scalar
//! prefactor. The Fock inner product is ⟨z^a, z^b⟩ = a!·δ_ab, so an operator
//! with polynomial kernel Σ A_ab z^a ū^b sends u^c to Σ_a A_ac c! z^a.

use crate::circle_series::CircleDiffeo;
use crate::grunsky;
use crate::linalg::{self, mat_json, vec_json, CMat, CVec};
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

const SYM_TOL: f64 = 1e-12;

/// B[K L | λ; Lᵗ M | μ] with a scalar prefactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianOperator {
    #[serde(rename = "K", with = "mat_json")]
    pub k: CMat,
    #[serde(rename = "L", with = "mat_json")]
    pub l: CMat,
    #[serde(rename = "M", with = "mat_json")]
    pub m: CMat,
    #[serde(with = "vec_json")]
    pub lam: CVec,
    #[serde(with = "vec_json")]
    pub mu: CVec,
    pub prefactor: C64,
}

/// b[P | π](z) = exp{½ zPzᵗ + zπ}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianVector {
    #[serde(rename = "P", with = "mat_json")]
    pub p: CMat,
    #[serde(with = "vec_json")]
    pub pi: CVec,
}

impl GaussianVector {
    pub fn new(p: CMat, pi: CVec) -> Result<Self> {
        if !p.is_square() || p.nrows() != pi.len() {
            return Err(Error::Domain("Gaussian vector shape mismatch".into()));
        }
        if linalg::asymmetry(&p) > SYM_TOL {
            return Err(Error::Domain("P must be symmetric".into()));
        }
        Ok(Self { p, pi })
    }

    /// The vacuum b[0|0] = 1.
    pub fn vacuum(n: usize) -> Self {
        Self {
            p: CMat::zeros(n, n),
            pi: CVec::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }
}

impl GaussianOperator {
    pub fn new(k: CMat, l: CMat, m: CMat, lam: CVec, mu: CVec) -> Result<Self> {
        let (out, inp) = l.shape();
        if k.shape() != (out, out) || m.shape() != (inp, inp) || lam.len() != out || mu.len() != inp
        {
            return Err(Error::Domain(
                "Gaussian operator block shapes are inconsistent".into(),
            ));
        }
        if linalg::asymmetry(&k) > SYM_TOL || linalg::asymmetry(&m) > SYM_TOL {
            return Err(Error::Domain("K and M must be symmetric".into()));
        }
        Ok(Self {
            k,
            l,
            m,
            lam,
            mu,
            prefactor: C64::new(1.0, 0.0),
        })
    }

    /// Kernel exp(z ūᵗ): the identity operator.
    pub fn identity(n: usize) -> Self {
        Self {
            k: CMat::zeros(n, n),
            l: linalg::eye(n),
            m: CMat::zeros(n, n),
            lam: CVec::zeros(n),
            mu: CVec::zeros(n),
            prefactor: C64::new(1.0, 0.0),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn with_prefactor(mut self, c: C64) -> Self {
        self.prefactor = c;
        self
    }

    /// ‖K‖ < 1 and ‖M‖ < 1.
    pub fn is_bounded(&self) -> bool {
        linalg::spectral_norm(&self.k) < 1.0 && linalg::spectral_norm(&self.m) < 1.0
    }

    /// The full block matrix S.
    pub fn s_matrix(&self) -> CMat {
        linalg::block2(&self.k, &self.l, &self.l.transpose(), &self.m)
    }

    /// Largest blockwise difference, prefactor included.
    pub fn distance(&self, other: &Self) -> f64 {
        [
            linalg::max_abs(&(&self.k - &other.k)),
            linalg::max_abs(&(&self.l - &other.l)),
            linalg::max_abs(&(&self.m - &other.m)),
            linalg::max_abs_vec(&(&self.lam - &other.lam)),
            linalg::max_abs_vec(&(&self.mu - &other.mu)),
            (self.prefactor - other.prefactor).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Leading n×n truncation of every block.
    pub fn truncated(&self, n: usize) -> Self {
        let lead = |a: &CMat| a.view((0, 0), (n, n)).into_owned();
        Self {
            k: lead(&self.k),
            l: lead(&self.l),
            m: lead(&self.m),
            lam: self.lam.rows(0, n).into_owned(),
            mu: self.mu.rows(0, n).into_owned(),
            prefactor: self.prefactor,
        }
    }
}

/// det(1 − a)^{−1/2} = exp(−½ Σ ln(1 − λᵢ)) with the principal log per
/// eigenvalue.
///
/// Along the homotopy t·a, 1 − tλ crosses the cut only if λ is real and ≥ 1,
/// so whenever the result is defined this branch is the one continued from
/// t = 0.
pub fn det_sqrt_inv(a: &CMat) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for ev in linalg::eigenvalues(a)? {
        let d = C64::new(1.0, 0.0) - ev;
        if d.norm() < 1e-14 {
            return Err(Error::Singular("1 − MP has an eigenvalue at 0".into()));
        }
        if d.im == 0.0 && d.re < 0.0 {
            return Err(Error::Branch { winding: 0 });
        }
        acc += d.ln();
    }
    Ok((acc * -0.5).exp())
}

/// σ(M, P; μ, π) = det(1 − MP)^{−1/2} exp{½ (π μ) [[−P, 1], [1, −M]]⁻¹ (π μ)ᵗ}.
pub fn sigma(m: &CMat, p: &CMat, mu: &CVec, pi: &CVec) -> Result<C64> {
    let n = m.nrows();
    if p.nrows() != n || mu.len() != n || pi.len() != n {
        return Err(Error::Domain("σ arguments have inconsistent sizes".into()));
    }
    let det = det_sqrt_inv(&(m * p))?;
    if n == 0 {
        return Ok(det);
    }
    let big = linalg::block2(&(-p), &linalg::eye(n), &linalg::eye(n), &(-m));
    let v = linalg::concat(pi, mu);
    let w = linalg::solve_vec(&big, &v)?;
    Ok(det * (linalg::dot(&v, &w) * 0.5).exp())
}

/// (1 − MP)⁻¹ with a composition error if singular.
fn resolvent(m: &CMat, p: &CMat) -> Result<CMat> {
    let n = m.nrows();
    linalg::inv(&(linalg::eye(n) - m * p))
        .map_err(|_| Error::Singular("1 − MP is not invertible".into()))
}

/// Product A·B of Gaussian operators.
pub fn gauss_product(a: &GaussianOperator, b: &GaussianOperator) -> Result<GaussianOperator> {
    if a.in_dim() != b.out_dim() {
        return Err(Error::Domain(
            "Gaussian product: inner dimensions differ".into(),
        ));
    }
    let (m, p) = (&a.m, &b.k);
    let r_mp = resolvent(m, p)?;
    let r_pm = r_mp.transpose();
    let s = sigma(m, p, &a.mu, &b.lam)?;
    let l = &a.l;
    let q = &b.l;
    let k = &a.k + l * p * &r_mp * l.transpose();
    let new_l = l * &r_pm * q;
    let new_m = &b.m + q.transpose() * &r_mp * m * q;
    let lam = &a.lam + l * &r_pm * (&b.lam + p * &a.mu);
    let mu = &b.mu + q.transpose() * &r_mp * (m * &b.lam + &a.mu);
    Ok(GaussianOperator {
        k,
        l: new_l,
        m: new_m,
        lam,
        mu,
        prefactor: a.prefactor * b.prefactor * s,
    })
}

/// A·b[P|π] = σ·b[K + LP(1−MP)⁻¹Lᵗ | λ + L(1−PM)⁻¹(π + Pμ)]; the returned
/// scalar includes the prefactor of A.
pub fn gauss_apply_vector(
    a: &GaussianOperator,
    v: &GaussianVector,
) -> Result<(GaussianVector, C64)> {
    if a.in_dim() != v.dim() {
        return Err(Error::Domain("Gaussian apply: dimension mismatch".into()));
    }
    let r_mp = resolvent(&a.m, &v.p)?;
    let s = sigma(&a.m, &v.p, &a.mu, &v.pi)?;
    let p = &a.k + &a.l * &v.p * &r_mp * a.l.transpose();
    let pi = &a.lam + &a.l * r_mp.transpose() * (&v.pi + &v.p * &a.mu);
    Ok((GaussianVector { p, pi }, a.prefactor * s))
}

/// ⟨b[K|μ], b[P|π]⟩ = σ(K, P̄; μ, π̄).
pub fn gauss_vector_inner(u: &GaussianVector, v: &GaussianVector) -> Result<C64> {
    if u.dim() != v.dim() {
        return Err(Error::Domain(
            "Gaussian inner product: dimension mismatch".into(),
        ));
    }
    sigma(&u.p, &linalg::conj(&v.p), &u.pi, &linalg::conj_vec(&v.pi))
}

/// Gaussian operator of the symplectic matrix [[Φ, Ψ], [Ψ̄, Φ̄]]:
/// K = −Φ⁻¹Ψ, L = Φ⁻¹, M = Ψ̄Φ⁻¹, truncated to the leading n×n blocks.
///
/// Φ, Ψ should be computed at a size larger than n: the inverse of a
/// truncated Φ is accurate only in its leading corner.
pub fn weil_from_blocks(phi: &CMat, psi: &CMat, n: usize) -> Result<GaussianOperator> {
    let phi_inv = linalg::inv(phi)?;
    let full = GaussianOperator {
        k: -(&phi_inv * psi),
        l: phi_inv.clone(),
        m: linalg::conj(psi) * &phi_inv,
        lam: CVec::zeros(phi.nrows()),
        mu: CVec::zeros(phi.nrows()),
        prefactor: C64::new(1.0, 0.0),
    };
    let op = full.truncated(n);
    let asym = linalg::asymmetry(&op.k).max(linalg::asymmetry(&op.m));
    if asym > 1e-8 {
        return Err(Error::Domain(format!(
            "blocks are not symplectic: K/M asymmetry {asym:.3e}"
        )));
    }
    Ok(op)
}

/// Weil operator of T(γ) with leading size n, computed at internal size m.
pub fn weil_operator(gamma: &CircleDiffeo, n: usize, m: usize) -> Result<GaussianOperator> {
    let (phi, psi) = grunsky::diffeo_blocks(gamma, m.max(n))?;
    weil_from_blocks(&phi.matrix, &psi.matrix, n)
}

/// Shift by (h, h̄): B[0 1 | h; 1 0 | −h].
pub fn shift_operator(h: &CVec) -> GaussianOperator {
    let n = h.len();
    GaussianOperator {
        k: CMat::zeros(n, n),
        l: linalg::eye(n),
        m: CMat::zeros(n, n),
        lam: h.clone(),
        mu: -h,
        prefactor: C64::new(1.0, 0.0),
    }
}

/// N_{α,β}(R) for R given by the pair (r⁺, r₋), truncated to n modes.
///
/// Linear terms: λ = −(β+iα)ℓ₁(r⁺) + βm₁(r⁺), μ = −(β+iα)ℓ₂(r₋) + βm₂(r₋).
pub fn n_operator(
    plus: &DiskMap,
    minus: &CoDiskMap,
    alpha: C64,
    beta: C64,
    n: usize,
) -> Result<GaussianOperator> {
    let k = grunsky::kernel_k(plus, n)?;
    let l = grunsky::kernel_l(plus, minus, n)?;
    let m = grunsky::kernel_m(minus, n)?;
    let coef = -(beta + C64::i() * alpha);
    let lam = CVec::from_vec(plus.ell_vector(n)?.on_plus(n)) * coef
        + CVec::from_vec(plus.m_vector(n)?.on_plus(n)) * beta;
    let mu = CVec::from_vec(minus.ell_vector(n)?.on_minus(n)) * coef
        + CVec::from_vec(minus.m_vector(n)?.on_minus(n)) * beta;
    Ok(GaussianOperator {
        k: symmetrize(k),
        l,
        m: symmetrize(m),
        lam,
        mu,
        prefactor: C64::new(1.0, 0.0),
    })
}

fn symmetrize(a: CMat) -> CMat {
    (&a + a.transpose()) * C64::new(0.5, 0.0)
}

/// Monomial basis z^a of a truncated Fock space.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    n: usize,
    cutoff: usize,
    weighted: bool,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl TruncatedFock {
    /// Monomials of weight Σ k·a_k ≤ d in z₁..z_n.
    pub fn weighted(n: usize, d: usize) -> Self {
        Self::build(n, d, true)
    }

    /// Monomials of total degree Σ a_k ≤ d in z₁..z_n.
    pub fn total_degree(n: usize, d: usize) -> Self {
        Self::build(n, d, false)
    }

    fn build(n: usize, d: usize, weighted: bool) -> Self {
        fn rec(
            i: usize,
            left: usize,
            n: usize,
            weighted: bool,
            cur: &mut Vec<u32>,
            out: &mut Vec<Vec<u32>>,
        ) {
            if i == n {
                out.push(cur.clone());
                return;
            }
            let w = if weighted { i + 1 } else { 1 };
            for e in 0..=left / w {
                cur.push(e as u32);
                rec(i + 1, left - e * w, n, weighted, cur, out);
                cur.pop();
            }
        }
        let mut basis = Vec::new();
        rec(0, d, n, weighted, &mut Vec::new(), &mut basis);
        basis.sort_by_key(|a| {
            (
                Self::grade_of(a, weighted),
                a.iter().rev().copied().collect::<Vec<_>>(),
            )
        });
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self {
            n,
            cutoff: d,
            weighted,
            basis,
            index,
        }
    }

    fn grade_of(a: &[u32], weighted: bool) -> usize {
        a.iter()
            .enumerate()
            .map(|(i, &e)| e as usize * if weighted { i + 1 } else { 1 })
            .sum()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn index_of(&self, a: &[u32]) -> Option<usize> {
        self.index.get(a).copied()
    }

    /// Weight (or degree) of a monomial.
    pub fn grade(&self, a: &[u32]) -> usize {
        Self::grade_of(a, self.weighted)
    }

    /// ⟨z^a, z^a⟩ = a!.
    pub fn norm_sq(a: &[u32]) -> f64 {
        a.iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    /// ⟨f, g⟩ for coefficient vectors in this basis.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        self.basis
            .iter()
            .zip(f.iter().zip(g))
            .map(|(a, (x, y))| x * y.conj() * Self::norm_sq(a))
            .sum()
    }

    /// Taylor coefficients of b[P|π].
    pub fn gaussian_vector(&self, v: &GaussianVector) -> Result<Vec<C64>> {
        if v.dim() != self.n {
            return Err(Error::Domain(
                "vector dimension differs from the Fock space".into(),
            ));
        }
        let keep = |a: &[u32]| self.grade(a) <= self.cutoff;
        let poly = exp_quadratic(&v.p, &v.pi, &keep, self.cutoff);
        Ok(self
            .basis
            .iter()
            .map(|a| poly.get(a).copied().unwrap_or_default())
            .collect())
    }

    /// Kernel coefficients A_ab (rows: z^a, columns: ū^b), prefactor included.
    pub fn gaussian_kernel(&self, op: &GaussianOperator) -> Result<CMat> {
        if op.in_dim() != self.n || op.out_dim() != self.n {
            return Err(Error::Domain(
                "operator dimension differs from the Fock space".into(),
            ));
        }
        let n = self.n;
        let lin = linalg::concat(&op.lam, &op.mu);
        let keep =
            |x: &[u32]| self.grade(&x[..n]) <= self.cutoff && self.grade(&x[n..]) <= self.cutoff;
        let poly = exp_quadratic(&op.s_matrix(), &lin, &keep, 2 * self.cutoff);
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (x, c) in poly {
            if let (Some(i), Some(j)) = (self.index_of(&x[..n]), self.index_of(&x[n..])) {
                out[(i, j)] = c * op.prefactor;
            }
        }
        Ok(out)
    }

    /// Operator matrix in the monomial basis: (Af)_a = Σ_b A_ab b! f_b.
    pub fn action_matrix(&self, kernel: &CMat) -> CMat {
        let mut out = kernel.clone();
        for (j, b) in self.basis.iter().enumerate() {
            let w = Self::norm_sq(b);
            out.column_mut(j).iter_mut().for_each(|c| *c *= w);
        }
        out
    }
}

/// Taylor coefficients of exp{½ xᵗSx + xᵗℓ} on the monomials accepted by
/// `keep` (which must be closed under taking divisors), up to total degree
/// `max_deg`. Uses the Euler-operator recurrence n·f_n = ℓx·f_{n−1} + xᵗSx·f_{n−2}.
pub fn exp_quadratic(
    s: &CMat,
    lin: &CVec,
    keep: &dyn Fn(&[u32]) -> bool,
    max_deg: usize,
) -> HashMap<Vec<u32>, C64> {
    let v = lin.len();
    let mut layers: Vec<HashMap<Vec<u32>, C64>> = Vec::with_capacity(max_deg + 1);
    layers.push(HashMap::from([(vec![0; v], C64::new(1.0, 0.0))]));
    for deg in 1..=max_deg {
        let mut next: HashMap<Vec<u32>, C64> = HashMap::new();
        let scale = 1.0 / deg as f64;
        for (a, c) in &layers[deg - 1] {
            for i in 0..v {
                if lin[i] == C64::default() {
                    continue;
                }
                let mut b = a.clone();
                b[i] += 1;
                if keep(&b) {
                    *next.entry(b).or_default() += lin[i] * c * scale;
                }
            }
        }
        if deg >= 2 {
            for (a, c) in &layers[deg - 2] {
                for i in 0..v {
                    for j in 0..v {
                        if s[(i, j)] == C64::default() {
                            continue;
                        }
                        let mut b = a.clone();
                        b[i] += 1;
                        b[j] += 1;
                        if keep(&b) {
                            *next.entry(b).or_default() += s[(i, j)] * c * scale;
                        }
                    }
                }
            }
        }
        layers.push(next);
    }
    layers.into_iter().flatten().collect()
}
