//! Reproducing kernels K^{h,c} on the space of normalized disk maps, Gram
//! positivity, the multiplier of the representation, and the transform
//! sending Fock vectors to holomorphic functionals.

use crate::circle_series::CircleDiffeo;
use crate::cocycle::{self, CocycleInstance};
use crate::gauss_fock::{GaussianVector, TruncatedFock};
use crate::grunsky;
use crate::linalg::{self, CMat, CVec};
use crate::par;
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::welding::{self, WeldOptions};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// A point s of Ξ: a validated disk map with s(0) = 0; the marked exterior
/// point is ∞.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelPoint {
    pub map: DiskMap,
}

impl KernelPoint {
    pub fn new(map: DiskMap) -> Result<Self> {
        map.validate()?;
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: DiskMap::identity(n),
        }
    }

    /// The point welded from γ.
    pub fn from_diffeo(gamma: &CircleDiffeo, n: usize, opts: &WeldOptions) -> Result<Self> {
        let pair = welding::weld(gamma, welding::complement_degree(n), opts)?;
        Self::new(pair.plus.resized(n))
    }

    /// s* at the internal truncation used for instances at n.
    pub fn star(&self, n: usize) -> Result<CoDiskMap> {
        self.map.star(welding::complement_degree(n))
    }
}

/// Kernel entry with the cocycle data it came from.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub lambda: C64,
    pub mu: C64,
    pub weld_residual: f64,
}

/// K^{h,c}(r, p) = exp{h·conj λ(r*, p) + c·conj μ(r*, p)}.
pub fn kernel_value(
    r: &KernelPoint,
    p: &KernelPoint,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<KernelValue> {
    let inst = CocycleInstance::new(&r.star(n)?, &p.map, n, opts)?;
    let (lambda, mu) = cocycle::lambda_mu_integral(&inst)?;
    Ok(KernelValue {
        value: (lambda.conj() * h + mu.conj() * c).exp(),
        lambda,
        mu,
        weld_residual: inst.residuals.weld,
    })
}

/// Gram matrix with its spectrum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramReport {
    pub h: f64,
    pub c: f64,
    #[serde(with = "linalg::mat_json")]
    pub matrix: CMat,
    /// Eigenvalues of the hermitized matrix, ascending.
    pub spectrum: Vec<f64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// max |G_ij − conj G_ji| before hermitization.
    pub hermitian_defect: f64,
    pub max_weld_residual: f64,
}

impl GramReport {
    /// min eigenvalue ≥ −tol·trace.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol * self.trace.abs()
    }
}

/// Largest Gram set accepted.
pub const MAX_GRAM_POINTS: usize = 12;

/// Cocycle data (λ, μ)(r_i*, p_j) for all ordered pairs, computed in
/// parallel and assembled in index order. Kernels for any (h, c) follow
/// without further welding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelTable {
    pub entries: Vec<Vec<KernelValue>>,
}

impl KernelTable {
    pub fn new(points: &[KernelPoint], n: usize, opts: &WeldOptions) -> Result<Self> {
        let k = points.len();
        if k == 0 || k > MAX_GRAM_POINTS {
            return Err(Error::Domain(format!(
                "gram sets hold 1..={MAX_GRAM_POINTS} points, got {k}"
            )));
        }
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
        let flat = par::map(&pairs, |&(i, j)| {
            kernel_value(&points[i], &points[j], 0.0, 0.0, n, opts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entries: flat.chunks(k).map(|r| r.to_vec()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gram(&self, h: f64, c: f64) -> GramReport {
        let k = self.len();
        let matrix = CMat::from_fn(k, k, |i, j| {
            let e = &self.entries[i][j];
            (e.lambda.conj() * h + e.mu.conj() * c).exp()
        });
        let max_weld_residual = self
            .entries
            .iter()
            .flatten()
            .fold(0.0, |m: f64, e| m.max(e.weld_residual));
        let hermitian_defect = linalg::max_abs(&(&matrix - matrix.adjoint()));
        let herm = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut spectrum = linalg::hermitian_eigenvalues(&herm);
        spectrum.sort_by(|a, b| a.total_cmp(b));
        let trace = (0..k).map(|i| matrix[(i, i)].re).sum();
        GramReport {
            h,
            c,
            min_eigenvalue: spectrum[0],
            spectrum,
            trace,
            matrix,
            hermitian_defect,
            max_weld_residual,
        }
    }
}

/// Gram matrix of K^{h,c} on `points`.
pub fn gram_psd(
    points: &[KernelPoint],
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<GramReport> {
    Ok(KernelTable::new(points, n, opts)?.gram(h, c))
}

/// exp{hλ(q₋, s) + cμ(q₋, s)}.
pub fn rho_multiplier(
    q_minus: &CoDiskMap,
    s: &KernelPoint,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<C64> {
    let inst = CocycleInstance::new(q_minus, &s.map, n, opts)?;
    let (l, m) = cocycle::lambda_mu_integral(&inst)?;
    Ok(cocycle::kappa_hc(h, c, l, m))
}

/// (s·Q, multiplier) with q₋ the exterior map of the welding of Q.
///
/// Multipliers compose as
/// m(Q₂, s·Q₁)·m(Q₁, s) = κ(Q₂, Q₁)·m(Q₁∘Q₂, s).
pub fn rho_action(
    q: &CircleDiffeo,
    s: &KernelPoint,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<(KernelPoint, C64)> {
    let pair = welding::weld(q, welding::complement_degree(n), opts)?;
    let mult = rho_multiplier(&pair.minus, s, h, c, n, opts)?;
    let (moved, _) = welding::xi_action(&s.map, q, n, opts)?;
    Ok((KernelPoint { map: moved }, mult))
}

/// |m(Q₂, s·Q₁)·m(Q₁, s) − κ(Q₂, Q₁)·m(Q₁∘Q₂, s)| / |κ(Q₂, Q₁)·m(Q₁∘Q₂, s)|.
pub fn rho_composition_residual(
    q1: &CircleDiffeo,
    q2: &CircleDiffeo,
    s: &KernelPoint,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<f64> {
    let (s1, m1) = rho_action(q1, s, h, c, n, opts)?;
    let (_, m2) = rho_action(q2, &s1, h, c, n, opts)?;
    let q12 = cocycle::diffeo_product(q2, q1)?;
    let (_, m12) = rho_action(&q12, s, h, c, n, opts)?;
    let rhs = cocycle::kappa_diffeos(q2, q1, h, c, n, opts)? * m12;
    Ok((m2 * m1 - rhs).norm() / rhs.norm())
}

/// The Gaussian vector b[K(s°) | −(β + iα)ℓ(s°) + βm(s°)] in m variables.
pub fn functional_vector(
    s: &KernelPoint,
    alpha: f64,
    beta: f64,
    m: usize,
) -> Result<GaussianVector> {
    let so = s.map.conj_coeffs();
    let nt = welding::complement_degree(m);
    let k = grunsky::kernel_k(&so, nt)?
        .view((0, 0), (m, m))
        .into_owned();
    let ell = CVec::from_vec(so.ell_vector(nt)?.on_plus(m));
    let mv = CVec::from_vec(so.m_vector(nt)?.on_plus(m));
    let pi = ell * -C64::new(beta, alpha) + mv * C64::new(beta, 0.0);
    GaussianVector::new(k, pi)
}

/// F_f(s) = ⟨f, b[K(s°) | −(β + iα)ℓ(s°) + βm(s°)]⟩ for f in a truncated
/// Fock space (the Gaussian vector is expanded to the same cutoff).
pub fn fock_to_functional(
    f: &[C64],
    space: &TruncatedFock,
    s: &KernelPoint,
    alpha: f64,
    beta: f64,
) -> Result<C64> {
    if f.len() != space.dim() {
        return Err(Error::Domain(format!(
            "vector of length {} in a space of dimension {}",
            f.len(),
            space.dim()
        )));
    }
    let v = functional_vector(s, alpha, beta, space.n())?;
    if linalg::spectral_norm(&v.p) >= 1.0 {
        return Err(Error::Inadmissible("‖K(s°)‖ ≥ 1".into()));
    }
    Ok(space.inner(f, &space.gaussian_vector(&v)?))
}
