//! Boson realization of the Virasoro algebra on polynomials in z₁, z₂, ….
//!
//! a_n = √n·z_n and a_{−n} = √n·∂/∂z_n for n > 0,
//! L_n = ½ Σ_{k+l=n} a_k a_l + (α + inβ) a_n for n ≠ 0, and
//! L₀ = Σ_{n>0} a_n a_{−n} + ½(α² + β²).
//!
//! With these conventions [a_k, a_l] = −k·δ_{k+l,0} and the operators satisfy
//! [L_n, L_m] = (m−n) L_{m+n} − (n³−n)/12·δ_{n+m,0}·ζ with ζ = 1 + 12β².

use crate::gauss_fock::TruncatedFock;
use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Highest weight (h, c), optionally with boson parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighestWeight {
    pub h: C64,
    pub c: C64,
    pub alpha: Option<C64>,
    pub beta: Option<C64>,
}

impl HighestWeight {
    pub fn new(h: C64, c: C64) -> Self {
        Self {
            h,
            c,
            alpha: None,
            beta: None,
        }
    }

    /// h = ½(α² + β²), c = 1 + 12β².
    pub fn from_alpha_beta(alpha: C64, beta: C64) -> Self {
        Self {
            h: (alpha * alpha + beta * beta) * 0.5,
            c: beta * beta * 12.0 + 1.0,
            alpha: Some(alpha),
            beta: Some(beta),
        }
    }

    /// Some (α, β) with the given (h, c): β = √((c−1)/12), α = √(2h − β²).
    pub fn with_boson_parameters(h: C64, c: C64) -> Self {
        let beta = ((c - 1.0) / 12.0).sqrt();
        let alpha = (h * 2.0 - beta * beta).sqrt();
        Self {
            h,
            c,
            alpha: Some(alpha),
            beta: Some(beta),
        }
    }

    /// Eigenvalue of the central element.
    pub fn zeta(&self) -> C64 {
        self.c
    }

    /// Largest defect of h = ½(α²+β²), c = 1+12β² when parameters are present.
    pub fn consistency_defect(&self) -> f64 {
        match (self.alpha, self.beta) {
            (Some(a), Some(b)) => {
                let hw = Self::from_alpha_beta(a, b);
                (hw.h - self.h).norm().max((hw.c - self.c).norm())
            }
            _ => 0.0,
        }
    }
}

/// Polynomials in z₁..z_E of weight Σ k·deg_k ≤ E.
#[derive(Clone, Debug)]
pub struct GradedPolySpace {
    fock: TruncatedFock,
}

impl GradedPolySpace {
    pub fn new(cutoff: usize) -> Self {
        Self {
            fock: TruncatedFock::weighted(cutoff, cutoff),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.fock.cutoff()
    }

    pub fn dim(&self) -> usize {
        self.fock.dim()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        self.fock.basis()
    }

    pub fn weight(&self, i: usize) -> usize {
        self.fock.grade(&self.fock.basis()[i])
    }

    pub fn index_of(&self, a: &[u32]) -> Option<usize> {
        self.fock.index_of(a)
    }

    /// Index of the constant monomial 1.
    pub fn vacuum(&self) -> usize {
        0
    }

    /// Build the matrix of an operator from its action on monomials; terms
    /// leaving the space are dropped.
    fn matrix_of(&self, act: impl Fn(&[u32], &mut dyn FnMut(Vec<u32>, C64))) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for (j, a) in self.basis().iter().enumerate() {
            act(a, &mut |b, c| {
                if let Some(i) = self.index_of(&b) {
                    out[(i, j)] += c;
                }
            });
        }
        out
    }
}

/// Σ_{w ≤ e} p(w), the number of monomials of weight at most e.
pub fn partition_dimension(e: usize) -> usize {
    let mut p = vec![0usize; e + 1];
    p[0] = 1;
    for part in 1..=e {
        for w in part..=e {
            p[w] += p[w - part];
        }
    }
    p.iter().sum()
}

/// a_n applied to one monomial; `None` if the result vanishes or leaves
/// the variable range.
fn a_apply(n: i64, a: &[u32]) -> Option<(Vec<u32>, f64)> {
    let j = n.unsigned_abs() as usize;
    if j == 0 || j > a.len() {
        return None;
    }
    let mut b = a.to_vec();
    let s = (j as f64).sqrt();
    if n > 0 {
        b[j - 1] += 1;
        Some((b, s))
    } else {
        let e = b[j - 1];
        if e == 0 {
            return None;
        }
        b[j - 1] -= 1;
        Some((b, s * e as f64))
    }
}

/// Matrix of a_n on the cutoff space.
pub fn a_op(n: i64, space: &GradedPolySpace) -> Result<CMat> {
    if n == 0 {
        return Err(Error::Domain("a_0 is not defined".into()));
    }
    if n.unsigned_abs() as usize > space.cutoff() {
        return Err(Error::Domain(format!(
            "|n| = {} exceeds the cutoff {}",
            n.abs(),
            space.cutoff()
        )));
    }
    Ok(space.matrix_of(|a, emit| {
        if let Some((b, c)) = a_apply(n, a) {
            emit(b, C64::new(c, 0.0));
        }
    }))
}

/// Matrix of L_n on the cutoff space.
pub fn l_op(n: i64, alpha: C64, beta: C64, space: &GradedPolySpace) -> Result<CMat> {
    let e = space.cutoff() as i64;
    if n.abs() > e {
        return Err(Error::Domain(format!(
            "|n| = {} exceeds the cutoff {e}",
            n.abs()
        )));
    }
    let h = (alpha * alpha + beta * beta) * 0.5;
    if n == 0 {
        return Ok(space.matrix_of(|a, emit| {
            let w: usize = a
                .iter()
                .enumerate()
                .map(|(i, &x)| (i + 1) * x as usize)
                .sum();
            emit(a.to_vec(), h + w as f64);
        }));
    }
    let lin = alpha + C64::i() * beta * n as f64;
    Ok(space.matrix_of(|a, emit| {
        // Unordered pairs k ≤ l with k + l = n ≠ 0: the factors commute, so
        // ½(a_k a_l + a_l a_k) = a_k a_l, applied annihilator first.
        for k in -e..=e {
            let l = n - k;
            if k == 0 || l == 0 || l.abs() > e || k > l {
                continue;
            }
            let weight = if k == l { 0.5 } else { 1.0 };
            if let Some((b, c1)) = a_apply(k, a) {
                if let Some((b2, c2)) = a_apply(l, &b) {
                    emit(b2, C64::new(weight * c1 * c2, 0.0));
                }
            }
        }
        if let Some((b, c)) = a_apply(n, a) {
            emit(b, lin * c);
        }
    }))
}

/// Commutator residuals on the safe subspace (weights ≤ E − |n| − |m|).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CommutatorResidual {
    pub n: i64,
    pub m: i64,
    /// ‖[L_n, L_m] − (m−n)L_{m+n} + (n³−n)/12·δ·ζ‖ on the safe subspace.
    pub residual: f64,
    /// Same with the central term added instead of subtracted.
    pub residual_plus_sign: f64,
    /// (n³−n)/12·δ_{n+m,0}·ζ.
    pub central: C64,
    pub safe_dim: usize,
}

/// Check the Virasoro relation for (L_n, L_m).
pub fn commutator_check(
    n: i64,
    m: i64,
    alpha: C64,
    beta: C64,
    space: &GradedPolySpace,
) -> Result<CommutatorResidual> {
    let e = space.cutoff() as i64;
    let safe_w = e - n.abs() - m.abs();
    if n.abs() + m.abs() > e || (n + m).abs() > e {
        return Err(Error::Domain("indices too large for the cutoff".into()));
    }
    let safe: Vec<usize> = (0..space.dim())
        .filter(|&i| space.weight(i) as i64 <= safe_w)
        .collect();
    let ln = l_op(n, alpha, beta, space)?;
    let lm = l_op(m, alpha, beta, space)?;
    let lnm = l_op(n + m, alpha, beta, space)?;
    let zeta = HighestWeight::from_alpha_beta(alpha, beta).zeta();
    let central = if n + m == 0 {
        zeta * ((n * n * n - n) as f64 / 12.0)
    } else {
        C64::new(0.0, 0.0)
    };
    let comm = &ln * &lm - &lm * &ln - &lnm * C64::new((m - n) as f64, 0.0);
    let restrict = |shift: C64| {
        let d = space.dim();
        let mut cols = CMat::zeros(d, safe.len());
        for (c, &j) in safe.iter().enumerate() {
            cols.set_column(c, &comm.column(j));
            cols[(j, c)] += shift;
        }
        linalg::spectral_norm(&cols)
    };
    Ok(CommutatorResidual {
        n,
        m,
        residual: restrict(central),
        residual_plus_sign: restrict(-central),
        central,
        safe_dim: safe.len(),
    })
}

/// All (n, m) with |n|, |m| ≤ bound.
pub fn relation_sweep(
    bound: i64,
    alpha: C64,
    beta: C64,
    space: &GradedPolySpace,
) -> Result<Vec<CommutatorResidual>> {
    let pairs: Vec<(i64, i64)> = (-bound..=bound)
        .flat_map(|n| (-bound..=bound).map(move |m| (n, m)))
        .collect();
    crate::par::map(&pairs, |&(n, m)| commutator_check(n, m, alpha, beta, space))
        .into_iter()
        .collect()
}

/// Value of the reducibility product for the pair (α, β):
/// (h + (α²−1)(c−13)/24 + (αβ−1)/2)(h + (β²−1)(c−13)/24 + (αβ−1)/2) + (α²−β²)²/16.
pub fn kac_value(h: C64, c: C64, alpha: i64, beta: i64) -> C64 {
    let (a, b) = (alpha as f64, beta as f64);
    let shift = (a * b - 1.0) / 2.0;
    let f1 = h + (c - 13.0) * ((a * a - 1.0) / 24.0) + shift;
    let f2 = h + (c - 13.0) * ((b * b - 1.0) / 24.0) + shift;
    f1 * f2 + (a * a - b * b).powi(2) / 16.0
}

/// Integer pairs 1 ≤ α, β ≤ bound at which M(h, c) is reducible.
pub fn kac_reducible(h: C64, c: C64, bound: i64) -> Vec<(i64, i64)> {
    (1..=bound)
        .flat_map(|a| (1..=bound).map(move |b| (a, b)))
        .filter(|&(a, b)| kac_value(h, c, a, b).norm() <= 1e-9)
        .collect()
}

/// Unitarizability of L(h, c).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum UnitarityClass {
    Continuous,
    Discrete { p: i64, alpha: i64, beta: i64 },
    None,
}

/// Exact point of the discrete series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscretePoint {
    pub alpha: i64,
    pub beta: i64,
    pub h: Ratio<i64>,
    pub c: Ratio<i64>,
}

/// c = 1 − 6/(p(p+1)), h = ((αp − β(p+1))² − 1)/(4p(p+1)) for
/// 1 ≤ α ≤ p, 1 ≤ β ≤ p − 1.
pub fn discrete_series(p: i64) -> Result<Vec<DiscretePoint>> {
    if p < 2 {
        return Err(Error::Domain("discrete series needs p ≥ 2".into()));
    }
    let q = p * (p + 1);
    let c = Ratio::from_integer(1) - Ratio::new(6, q);
    Ok((1..=p)
        .flat_map(|alpha| (1..p).map(move |beta| (alpha, beta)))
        .map(|(alpha, beta)| {
            let t = alpha * p - beta * (p + 1);
            DiscretePoint {
                alpha,
                beta,
                h: Ratio::new(t * t - 1, 4 * q),
                c,
            }
        })
        .collect())
}

/// Classify a real highest weight.
pub fn unitarity_class(h: f64, c: f64) -> UnitarityClass {
    const TOL: f64 = 1e-12;
    if h >= -TOL && c >= 1.0 - TOL {
        return UnitarityClass::Continuous;
    }
    if c >= 1.0 {
        return UnitarityClass::None;
    }
    // p(p+1) = 6/(1−c)
    let q = 6.0 / (1.0 - c);
    let p = ((-1.0 + (1.0 + 4.0 * q).sqrt()) / 2.0).round() as i64;
    if p < 2 || ((p * (p + 1)) as f64 - q).abs() > 1e-9 * q {
        return UnitarityClass::None;
    }
    discrete_series(p)
        .unwrap_or_default()
        .into_iter()
        .find(|pt| (*pt.h.numer() as f64 / *pt.h.denom() as f64 - h).abs() <= TOL)
        .map_or(UnitarityClass::None, |pt| UnitarityClass::Discrete {
            p,
            alpha: pt.alpha,
            beta: pt.beta,
        })
}
