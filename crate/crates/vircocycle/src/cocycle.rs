//! The canonical cocycle: λ and μ by contour integrals and by block-matrix
//! formulas, κ through the Gaussian product, and the intermediate identities
//! relating them.
//!
//! An instance is built from a co-disk map r₋ and a disk map p₊. Their
//! complements r⁺ (r⁺ = r₋∘γ_r) and p⁻ (p₊ = p⁻∘γ_p) complete both to welding
//! pairs, and (q₊, q₋) is the welding pair of γ_q = γ_p∘γ_r.

use crate::circle_series::{log_samples, CircleDiffeo, LaurentSeries};
use crate::gauss_fock::{det_sqrt_inv, gauss_product, n_operator, sigma};
use crate::grunsky;
use crate::linalg::{self, CMat, CVec};
use crate::spectral::{self, contour_integral, grid_for};
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::welding::{self, WeldOptions};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Solver residuals of an instance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InstanceResiduals {
    pub complement_r: f64,
    pub complement_p: f64,
    pub weld: f64,
}

/// All maps and diffeomorphisms attached to a pair (r₋, p₊).
#[derive(Clone, Debug)]
pub struct CocycleInstance {
    pub r_minus: CoDiskMap,
    pub p_plus: DiskMap,
    pub r_plus: DiskMap,
    pub p_minus: CoDiskMap,
    pub gamma_r: CircleDiffeo,
    pub gamma_p: CircleDiffeo,
    pub gamma_q: CircleDiffeo,
    pub q_plus: DiskMap,
    pub q_minus: CoDiskMap,
    pub n: usize,
    pub residuals: InstanceResiduals,
}

impl CocycleInstance {
    /// Complete both maps and weld the composite at truncation n.
    pub fn new(
        r_minus: &CoDiskMap,
        p_plus: &DiskMap,
        n: usize,
        opts: &WeldOptions,
    ) -> Result<Self> {
        let cr = welding::complement_map(r_minus, n)?;
        let cp = welding::complement_map_codisk(p_plus, n)?;
        Self::assemble(
            r_minus,
            p_plus,
            cr.map,
            cp.map,
            cr.diffeo,
            cp.diffeo,
            n,
            opts,
            cr.residual,
            cp.residual,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        r_minus: &CoDiskMap,
        p_plus: &DiskMap,
        r_plus: DiskMap,
        p_minus: CoDiskMap,
        gamma_r: CircleDiffeo,
        gamma_p: CircleDiffeo,
        n: usize,
        opts: &WeldOptions,
        res_r: f64,
        res_p: f64,
    ) -> Result<Self> {
        let gamma_q = gamma_p.compose(&gamma_r)?;
        let pair = welding::weld(&gamma_q, welding::complement_degree(n), opts)?;
        Ok(Self {
            r_minus: r_minus.clone(),
            p_plus: p_plus.clone(),
            r_plus,
            p_minus,
            gamma_r,
            gamma_p,
            gamma_q,
            q_plus: pair.plus,
            q_minus: pair.minus,
            n,
            residuals: InstanceResiduals {
                complement_r: res_r,
                complement_p: res_p,
                weld: pair.residual,
            },
        })
    }

    /// Same instance with r⁺ replaced by r⁺(e^{iθ_r}z) and p⁻ by p⁻(e^{iθ_p}z).
    pub fn with_gauge(&self, theta_r: f64, theta_p: f64, opts: &WeldOptions) -> Result<Self> {
        let m = self.gamma_r.n();
        let gamma_r = self.gamma_r.compose(&CircleDiffeo::rotation(m, theta_r))?;
        let gamma_p = CircleDiffeo::rotation(self.gamma_p.n(), -theta_p).compose(&self.gamma_p)?;
        Self::assemble(
            &self.r_minus,
            &self.p_plus,
            self.r_plus.rotate_argument(theta_r),
            self.p_minus.rotate_argument(theta_p),
            gamma_r,
            gamma_p,
            self.n,
            opts,
            self.residuals.complement_r,
            self.residuals.complement_p,
        )
    }

    /// Quadrature grid of the contour integrals.
    pub fn grid(&self) -> usize {
        grid_for(self.n).max(512)
    }
}

fn eval_disk(m: &DiskMap, w: &[C64]) -> Vec<C64> {
    w.iter().map(|z| m.eval(*z)).collect()
}

fn eval_codisk(m: &CoDiskMap, w: &[C64]) -> Vec<C64> {
    w.iter().map(|z| m.eval(*z)).collect()
}

fn ratio(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x / y).collect()
}

fn points(lift: &[f64]) -> Vec<C64> {
    lift.iter().map(|&t| C64::from_polar(1.0, t)).collect()
}

/// λ and μ by the contour integrals
/// λ = −(2πi)⁻¹ [∮ ln(r₋/z) d ln(q₊/r⁺)(w₁) − ∮ ln(p₊(w₂)/w₂) d ln(q₋/p⁻)],
/// μ = −(2πi)⁻¹ (1/24) [−∮ ln r₋′ d ln(q₊′/r⁺′)(w₁) + ∮ ln p₊′(w₂) d ln(q₋′/p⁻′)],
/// with w₁ = e^{iγ_r⁻¹(φ)}, w₂ = e^{iγ_p⁻¹(φ)}.
pub fn lambda_mu_integral(inst: &CocycleInstance) -> Result<(C64, C64)> {
    let g = inst.grid();
    let z = spectral::grid_points(g);
    let w1 = points(&inst.gamma_r.inverse_lift_samples(g)?);
    let w2 = points(&inst.gamma_p.inverse_lift_samples(g)?);

    let f1 = log_samples(&ratio(&eval_codisk(&inst.r_minus, &z), &z))?;
    let g1 = log_samples(&ratio(
        &eval_disk(&inst.q_plus, &w1),
        &eval_disk(&inst.r_plus, &w1),
    ))?;
    let f2 = log_samples(&ratio(&eval_disk(&inst.p_plus, &w2), &w2))?;
    let g2 = log_samples(&ratio(
        &eval_codisk(&inst.q_minus, &z),
        &eval_codisk(&inst.p_minus, &z),
    ))?;

    let dq = |m: &DiskMap, w: &[C64]| w.iter().map(|x| m.deriv(*x)).collect::<Vec<_>>();
    let dc = |m: &CoDiskMap, w: &[C64]| w.iter().map(|x| m.deriv(*x)).collect::<Vec<_>>();
    let ff1 = log_samples(&dc(&inst.r_minus, &z))?;
    let hh1 = log_samples(&ratio(&dq(&inst.q_plus, &w1), &dq(&inst.r_plus, &w1)))?;
    let ff2 = log_samples(&dq(&inst.p_plus, &w2))?;
    let hh2 = log_samples(&ratio(&dc(&inst.q_minus, &z), &dc(&inst.p_minus, &z)))?;

    let norm = -1.0 / C64::new(0.0, 2.0 * PI);
    let lambda = (contour_integral(&f1, &g1) - contour_integral(&f2, &g2)) * norm;
    let mu = (contour_integral(&ff2, &hh2) - contour_integral(&ff1, &hh1)) * norm / 24.0;
    Ok((lambda, mu))
}

pub fn lambda_integral(inst: &CocycleInstance) -> Result<C64> {
    Ok(lambda_mu_integral(inst)?.0)
}

pub fn mu_integral(inst: &CocycleInstance) -> Result<C64> {
    Ok(lambda_mu_integral(inst)?.1)
}

/// Matrix data K = K(p₊), M = M(r₋) (kernel blocks), linear vectors in
/// orthonormal coordinates, and B⁻¹ for B = [[−K, 1], [1, −M]].
#[derive(Clone, Debug)]
pub struct MatrixData {
    pub k: CMat,
    pub m: CMat,
    pub ell1: CVec,
    pub ell2: CVec,
    pub m1: CVec,
    pub m2: CVec,
    pub b_inv: CMat,
}

impl MatrixData {
    pub fn new(r_minus: &CoDiskMap, p_plus: &DiskMap, n: usize) -> Result<Self> {
        let k = grunsky::kernel_k(p_plus, n)?;
        let m = grunsky::kernel_m(r_minus, n)?;
        let ell1 = CVec::from_vec(p_plus.ell_vector(n)?.on_plus(n));
        let m1 = CVec::from_vec(p_plus.m_vector(n)?.on_plus(n));
        let ell2 = CVec::from_vec(r_minus.ell_vector(n)?.on_minus(n));
        let m2 = CVec::from_vec(r_minus.m_vector(n)?.on_minus(n));
        let eye = linalg::eye(n);
        let b = linalg::block2(&(-&k), &eye, &eye, &(-&m));
        let b_inv =
            linalg::inv(&b).map_err(|_| Error::Singular("1 − KM is not invertible".into()))?;
        Ok(Self {
            k,
            m,
            ell1,
            ell2,
            m1,
            m2,
            b_inv,
        })
    }

    pub fn of(inst: &CocycleInstance) -> Result<Self> {
        Self::new(&inst.r_minus, &inst.p_plus, inst.n)
    }

    /// (x₁ x₂) B⁻¹ (y₁ y₂)ᵗ.
    pub fn form(&self, x1: &CVec, x2: &CVec, y1: &CVec, y2: &CVec) -> C64 {
        linalg::dot(
            &linalg::concat(x1, x2),
            &(&self.b_inv * linalg::concat(y1, y2)),
        )
    }

    pub fn lambda(&self) -> C64 {
        -self.form(&self.ell1, &self.ell2, &self.ell1, &self.ell2)
    }

    pub fn mu(&self) -> C64 {
        self.form(&self.m1, &self.m2, &self.m1, &self.m2) / 24.0
    }

    /// det(1 − KM)^{−1/2}.
    pub fn det_factor(&self) -> Result<C64> {
        det_sqrt_inv(&(&self.k * &self.m))
    }
}

pub fn lambda_matrix(inst: &CocycleInstance) -> Result<C64> {
    Ok(MatrixData::of(inst)?.lambda())
}

pub fn mu_matrix(inst: &CocycleInstance) -> Result<C64> {
    Ok(MatrixData::of(inst)?.mu())
}

fn linear_term(alpha: f64, beta: f64, ell: &CVec, m: &CVec) -> CVec {
    ell * -C64::new(beta, alpha) + m * C64::new(beta, 0.0)
}

/// κ_{α,β} = det(1 − MK)^{−1/2} exp{½ (v₁ v₂) B⁻¹ (v₁ v₂)ᵗ},
/// vᵢ = −(β + iα)ℓᵢ + βmᵢ.
pub fn kappa_gauss(inst: &CocycleInstance, alpha: f64, beta: f64) -> Result<C64> {
    let d = MatrixData::of(inst)?;
    kappa_from_data(&d, alpha, beta)
}

fn kappa_from_data(d: &MatrixData, alpha: f64, beta: f64) -> Result<C64> {
    let v1 = linear_term(alpha, beta, &d.ell1, &d.m1);
    let v2 = linear_term(alpha, beta, &d.ell2, &d.m2);
    sigma(&d.m, &d.k, &v2, &v1)
}

/// κ_{α,β} as the prefactor of N(R)·N(P).
pub fn kappa_product(inst: &CocycleInstance, alpha: f64, beta: f64) -> Result<C64> {
    let (a, b) = (C64::new(alpha, 0.0), C64::new(beta, 0.0));
    let nr = n_operator(&inst.r_plus, &inst.r_minus, a, b, inst.n)?;
    let np = n_operator(&inst.p_plus, &inst.p_minus, a, b, inst.n)?;
    Ok(gauss_product(&nr, &np)?.prefactor)
}

/// h = ½(α² + β²), c = 1 + 12β².
pub fn weights(alpha: f64, beta: f64) -> (f64, f64) {
    (
        0.5 * (alpha * alpha + beta * beta),
        1.0 + 12.0 * beta * beta,
    )
}

/// exp{hλ + cμ}.
pub fn kappa_hc(h: f64, c: f64, lambda: C64, mu: C64) -> C64 {
    (lambda * h + mu * c).exp()
}

/// One grid point of the theorem check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TheoremPoint {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: C64,
    pub predicted: C64,
    pub rel_residual: f64,
}

/// Theorem check over an (α, β) grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremReport {
    pub lambda_integral: C64,
    pub mu_integral: C64,
    pub lambda_matrix: C64,
    pub mu_matrix: C64,
    pub lambda_fit: C64,
    pub mu_fit: C64,
    /// Largest |log κ − (hλ_fit + cμ_fit)| over the grid.
    pub fit_residual: f64,
    /// Largest distance of the fitted (λ, μ) from either direct route.
    pub fit_vs_routes: f64,
    /// |κ_gauss − κ_product| / |κ_gauss| at the last grid point.
    pub product_residual: f64,
    pub points: Vec<TheoremPoint>,
    pub max_rel_residual: f64,
    pub passed: bool,
}

/// Compare κ_gauss with exp{hλ + cμ} (integral route) on a grid and fit
/// (λ, μ) from log κ by least squares.
pub fn verify_theorem(
    inst: &CocycleInstance,
    grid: &[(f64, f64)],
    tol: f64,
) -> Result<TheoremReport> {
    let (li, mi) = lambda_mu_integral(inst)?;
    let d = MatrixData::of(inst)?;
    let mut points = Vec::with_capacity(grid.len());
    for &(alpha, beta) in grid {
        let kappa = kappa_from_data(&d, alpha, beta)?;
        let (h, c) = weights(alpha, beta);
        let predicted = kappa_hc(h, c, li, mi);
        let rel_residual = (kappa - predicted).norm() / kappa.norm();
        points.push(TheoremPoint {
            alpha,
            beta,
            kappa,
            predicted,
            rel_residual,
        });
    }
    let (lambda_fit, mu_fit, fit_residual) = fit_exp_affine(&points)?;
    let max_rel_residual = points.iter().fold(0.0, |m: f64, p| m.max(p.rel_residual));
    let (lm, mm) = (d.lambda(), d.mu());
    let fit_vs_routes = [
        (lambda_fit - li).norm(),
        (mu_fit - mi).norm(),
        (lambda_fit - lm).norm(),
        (mu_fit - mm).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let product_residual = match grid.last() {
        Some(&(a, b)) => product_consistency(inst, a, b)?,
        None => 0.0,
    };
    Ok(TheoremReport {
        lambda_integral: li,
        mu_integral: mi,
        lambda_matrix: lm,
        mu_matrix: mm,
        lambda_fit,
        mu_fit,
        fit_residual,
        fit_vs_routes,
        product_residual,
        points,
        max_rel_residual,
        passed: max_rel_residual <= tol,
    })
}

/// Least-squares (λ, μ) with log κ ≈ hλ + cμ; returns the largest residual.
pub fn fit_exp_affine(points: &[TheoremPoint]) -> Result<(C64, C64, f64)> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two grid points to fit".into()));
    }
    let a = nalgebra::DMatrix::<f64>::from_fn(points.len(), 2, |i, j| {
        let (h, c) = weights(points[i].alpha, points[i].beta);
        if j == 0 {
            h
        } else {
            c
        }
    });
    let logs: Vec<C64> = points.iter().map(|p| p.kappa.ln()).collect();
    let re = nalgebra::DVector::from_iterator(logs.len(), logs.iter().map(|z| z.re));
    let im = nalgebra::DVector::from_iterator(logs.len(), logs.iter().map(|z| z.im));
    let xr = linalg::lstsq_real(&a, &re)?;
    let xi = linalg::lstsq_real(&a, &im)?;
    let lambda = C64::new(xr[0], xi[0]);
    let mu = C64::new(xr[1], xi[1]);
    let resid = (0..points.len()).fold(0.0, |m: f64, i| {
        m.max((logs[i] - (lambda * a[(i, 0)] + mu * a[(i, 1)])).norm())
    });
    Ok((lambda, mu, resid))
}

/// λ, μ at truncations N and 2N.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Drift {
    pub n: usize,
    pub lambda_n: C64,
    pub lambda_2n: C64,
    pub mu_n: C64,
    pub mu_2n: C64,
    pub drift: f64,
}

pub fn drift(r_minus: &CoDiskMap, p_plus: &DiskMap, n: usize, opts: &WeldOptions) -> Result<Drift> {
    let (lambda_n, mu_n) = lambda_mu_integral(&CocycleInstance::new(r_minus, p_plus, n, opts)?)?;
    let (lambda_2n, mu_2n) =
        lambda_mu_integral(&CocycleInstance::new(r_minus, p_plus, 2 * n, opts)?)?;
    let drift = (lambda_n - lambda_2n).norm().max((mu_n - mu_2n).norm());
    Ok(Drift {
        n,
        lambda_n,
        lambda_2n,
        mu_n,
        mu_2n,
        drift,
    })
}

/// ℓ B⁻¹ ℓ − ℓ B⁻¹ m: the αβ terms of log κ cancel exactly when this vanishes.
pub fn verify_cross_term(inst: &CocycleInstance) -> Result<f64> {
    let d = MatrixData::of(inst)?;
    let ll = d.form(&d.ell1, &d.ell2, &d.ell1, &d.ell2);
    let lm = d.form(&d.ell1, &d.ell2, &d.m1, &d.m2);
    Ok((ll - lm).norm())
}

/// Residuals of the two column identities
/// ℓ₁(q₊) = ℓ₁(r⁺) + L(1 − KM)⁻¹(ℓ₁(p₊) + Kℓ₂(r₋)) and
/// ℓ₂(q₋) = ℓ₂(p⁻) + Lᵗ(1 − MK)⁻¹(ℓ₂(r₋) + Mℓ₁(p₊)).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ColumnResiduals {
    pub plus: f64,
    pub minus: f64,
}

pub fn verify_columns(inst: &CocycleInstance) -> Result<ColumnResiduals> {
    let n = inst.n;
    let d = MatrixData::of(inst)?;
    let on_p = |m: &DiskMap| -> Result<CVec> { Ok(CVec::from_vec(m.ell_vector(n)?.on_plus(n))) };
    let on_m = |m: &CoDiskMap| -> Result<CVec> { Ok(CVec::from_vec(m.ell_vector(n)?.on_minus(n))) };
    let l = grunsky::kernel_l(&inst.r_plus, &inst.r_minus, n)?;
    let lt = grunsky::kernel_lt(&inst.p_plus, &inst.p_minus, n)?;
    let eye = linalg::eye(n);
    let a = linalg::solve_vec(&(&eye - &d.k * &d.m), &(&d.ell1 + &d.k * &d.ell2))?;
    let b = linalg::solve_vec(&(&eye - &d.m * &d.k), &(&d.ell2 + &d.m * &d.ell1))?;
    let plus = on_p(&inst.q_plus)? - on_p(&inst.r_plus)? - l * a;
    let minus = on_m(&inst.q_minus)? - on_m(&inst.p_minus)? - lt * b;
    Ok(ColumnResiduals {
        plus: linalg::max_abs_vec(&plus),
        minus: linalg::max_abs_vec(&minus),
    })
}

/// exp{μ} against det(1 − K(p₊)M(r₋))^{−1/2}.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetLink {
    pub exp_mu: C64,
    pub det_factor: C64,
    pub rel_residual: f64,
}

pub fn det_link(inst: &CocycleInstance, mu: C64) -> Result<DetLink> {
    let det_factor = MatrixData::of(inst)?.det_factor()?;
    let exp_mu = mu.exp();
    Ok(DetLink {
        exp_mu,
        det_factor,
        rel_residual: (exp_mu - det_factor).norm() / det_factor.norm(),
    })
}

/// Complex logarithmic derivative ln γ′(z) = i·u + ln(1 + u′) on the grid.
fn log_complex_derivative(gamma: &CircleDiffeo, g: usize) -> Vec<C64> {
    let u = gamma.displacement().samples(g);
    let du = gamma.derivative_samples(g);
    u.iter()
        .zip(&du)
        .map(|(u, d)| C64::new(d.ln(), u.re))
        .collect()
}

/// c₁(γ₁, γ₂) = ½ ∮ ln γ₁′(γ₂(z)) d ln γ₂′(z).
pub fn bott_cocycle(g1: &CircleDiffeo, g2: &CircleDiffeo) -> Result<C64> {
    let n = g1.n().max(g2.n());
    let g = grid_for(4 * n).max(256);
    let lift2 = g2.lift_samples(g);
    let u1 = g1.displacement().eval_phi_many(&lift2);
    let du1 = g1.displacement().derivative_phi().eval_phi_many(&lift2);
    let outer: Vec<C64> = u1
        .iter()
        .zip(&du1)
        .map(|(u, d)| C64::new((1.0 + d.re).ln(), u.re))
        .collect();
    let inner = log_complex_derivative(g2, g);
    Ok(contour_integral(&outer, &inner) * 0.5)
}

/// c₂(γ₁, γ₂) = i[Γ₁(Γ₂(0)) − Γ₂(0) − Γ₁(0)] for the stored lifts Γ.
pub fn winding_cocycle(g1: &CircleDiffeo, g2: &CircleDiffeo) -> C64 {
    let a = g2.eval(0.0);
    C64::new(0.0, g1.eval(a) - a - g1.eval(0.0))
}

/// δc(γ₁, γ₂, γ₃) = c(γ₂,γ₃) − c(γ₁γ₂,γ₃) + c(γ₁,γ₂γ₃) − c(γ₁,γ₂) with
/// γ₁γ₂ = γ₁∘γ₂; returns the Bott and winding residuals.
pub fn classical_cocycle_residuals(
    g1: &CircleDiffeo,
    g2: &CircleDiffeo,
    g3: &CircleDiffeo,
) -> Result<(f64, f64)> {
    let d = COMPOSE_DEGREE.max(g1.n()).max(g2.n()).max(g3.n());
    let g12 = g1.compose_to(g2, d)?;
    let g23 = g2.compose_to(g3, d)?;
    let bott = bott_cocycle(g2, g3)? - bott_cocycle(&g12, g3)? + bott_cocycle(g1, &g23)?
        - bott_cocycle(g1, g2)?;
    let wind = winding_cocycle(g2, g3) - winding_cocycle(&g12, g3) + winding_cocycle(g1, &g23)
        - winding_cocycle(g1, g2);
    Ok((bott.norm(), wind.norm()))
}

/// Instance for the ordered pair of diffeomorphisms (γ_A, γ_B): r₋ from the
/// welding of γ_A and p₊ from the welding of γ_B.
pub fn diffeo_instance(
    a: &CircleDiffeo,
    b: &CircleDiffeo,
    n: usize,
    opts: &WeldOptions,
) -> Result<CocycleInstance> {
    let nt = welding::complement_degree(n);
    let wa = welding::weld(a, nt, opts)?;
    let wb = welding::weld(b, nt, opts)?;
    CocycleInstance::new(&wa.minus, &wb.plus, n, opts)
}

/// Truncation of composite diffeomorphisms.
pub const COMPOSE_DEGREE: usize = 64;

/// The diffeomorphism of the product A·B: γ_B∘γ_A.
pub fn diffeo_product(a: &CircleDiffeo, b: &CircleDiffeo) -> Result<CircleDiffeo> {
    b.compose_to(a, COMPOSE_DEGREE.max(a.n()).max(b.n()))
}

/// κ^{h,c}(A, B) through the integral route.
pub fn kappa_diffeos(
    a: &CircleDiffeo,
    b: &CircleDiffeo,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<C64> {
    let (l, m) = lambda_mu_integral(&diffeo_instance(a, b, n, opts)?)?;
    Ok(kappa_hc(h, c, l, m))
}

/// |κ(A,B)κ(AB,C) − κ(A,BC)κ(B,C)| / |κ(A,B)κ(AB,C)|.
pub fn cocycle_identity(
    a: &CircleDiffeo,
    b: &CircleDiffeo,
    c3: &CircleDiffeo,
    h: f64,
    c: f64,
    n: usize,
    opts: &WeldOptions,
) -> Result<f64> {
    let ab = diffeo_product(a, b)?;
    let bc = diffeo_product(b, c3)?;
    let lhs = kappa_diffeos(a, b, h, c, n, opts)? * kappa_diffeos(&ab, c3, h, c, n, opts)?;
    let rhs = kappa_diffeos(a, &bc, h, c, n, opts)? * kappa_diffeos(b, c3, h, c, n, opts)?;
    Ok((lhs - rhs).norm() / lhs.norm())
}

/// Step-5 residuals: the transfer blocks inverted against pullbacks of the
/// linear vectors.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LInverseResiduals {
    pub r_side: f64,
    pub p_side: f64,
}

/// Samples of f∘h on the grid, where h is given by its lift samples.
fn compose_series(f: &LaurentSeries, lift: &[f64]) -> Vec<C64> {
    f.eval_phi_many(lift)
}

/// The blocks are inverted at the internal degree of the complements and
/// compared on the leading n coordinates, away from the finite-section
/// boundary.
pub fn verify_l_inverse(inst: &CocycleInstance) -> Result<LInverseResiduals> {
    let n = inst.n;
    let nt = welding::complement_degree(n);
    let g = grid_for(nt).max(inst.grid());
    let l = grunsky::kernel_l(&inst.r_plus, &inst.r_minus, nt)?;
    let lt = grunsky::kernel_lt(&inst.p_plus, &inst.p_minus, nt)?;
    let ell2 = inst.r_minus.ell_vector(2 * nt)?;
    let ell1 = inst.p_plus.ell_vector(2 * nt)?;
    let x2 = CVec::from_vec(ell2.on_minus(nt));
    let x1 = CVec::from_vec(ell1.on_plus(nt));
    let pulled2 =
        LaurentSeries::from_samples(&compose_series(&ell2, &inst.gamma_r.lift_samples(g)), n);
    let pulled1 = LaurentSeries::from_samples(
        &compose_series(&ell1, &inst.gamma_p.inverse_lift_samples(g)?),
        n,
    );
    let r =
        linalg::solve_vec(&l.transpose(), &x2)?.rows(0, n) - CVec::from_vec(pulled2.on_minus(n));
    let p =
        linalg::solve_vec(&lt.transpose(), &x1)?.rows(0, n) - CVec::from_vec(pulled1.on_plus(n));
    Ok(LInverseResiduals {
        r_side: linalg::max_abs_vec(&r),
        p_side: linalg::max_abs_vec(&p),
    })
}

/// Exercise the Gaussian-operator route to κ on one instance: returns
/// |κ_gauss − κ_product| / |κ_gauss|.
pub fn product_consistency(inst: &CocycleInstance, alpha: f64, beta: f64) -> Result<f64> {
    let a = kappa_gauss(inst, alpha, beta)?;
    let b = kappa_product(inst, alpha, beta)?;
    Ok((a - b).norm() / a.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn opts() -> WeldOptions {
        WeldOptions {
            max_displacement: 1.0,
            ..WeldOptions::default()
        }
    }

    fn sample_instance(seed: u64, n: usize) -> CocycleInstance {
        let pair = corpus::map_pairs(seed, 1).unwrap().remove(0);
        CocycleInstance::new(&pair.r_minus, &pair.p_plus, n, &opts()).unwrap()
    }

    #[test]
    fn identity_instance_is_trivial() {
        let inst =
            CocycleInstance::new(&CoDiskMap::identity(4), &DiskMap::identity(4), 16, &opts())
                .unwrap();
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        assert!(l.norm() < 1e-13 && m.norm() < 1e-13);
        assert!(lambda_matrix(&inst).unwrap().norm() < 1e-13);
        assert!((kappa_gauss(&inst, 0.4, 0.7).unwrap() - c(1.0, 0.0)).norm() < 1e-13);
        assert!(verify_cross_term(&inst).unwrap() < 1e-13);
    }

    #[test]
    fn one_sided_instances_vanish() {
        let pair = corpus::map_pairs(3, 1).unwrap().remove(0);
        let inst =
            CocycleInstance::new(&CoDiskMap::identity(4), &pair.p_plus, 32, &opts()).unwrap();
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        assert!(l.norm() < 1e-8 && m.norm() < 1e-8, "{l} {m}");
        assert!(lambda_matrix(&inst).unwrap().norm() < 1e-14);
        assert!(verify_cross_term(&inst).unwrap() < 1e-12);
        let inst = CocycleInstance::new(&pair.r_minus, &DiskMap::identity(4), 32, &opts()).unwrap();
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        assert!(l.norm() < 1e-8 && m.norm() < 1e-8, "{l} {m}");
    }

    #[test]
    fn scaling_instance_routes_agree() {
        let p = DiskMap::scaling(4, c(1.1, 0.2)).unwrap();
        let r = CoDiskMap::new(c(0.9, -0.1), c(0.0, 0.0), vec![]).unwrap();
        let inst = CocycleInstance::new(&r, &p, 16, &opts()).unwrap();
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        assert!((l - lambda_matrix(&inst).unwrap()).norm() < 1e-8);
        assert!((m - mu_matrix(&inst).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn routes_agree_on_generic_instance() {
        let inst = sample_instance(11, 48);
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        let d = MatrixData::of(&inst).unwrap();
        assert!((l - d.lambda()).norm() < 1e-6, "{l} {}", d.lambda());
        assert!((m - d.mu()).norm() < 1e-6, "{m} {}", d.mu());
        assert!(verify_cross_term(&inst).unwrap() < 1e-7);
        let cols = verify_columns(&inst).unwrap();
        assert!(cols.plus < 1e-6 && cols.minus < 1e-6, "{cols:?}");
        let link = det_link(&inst, m).unwrap();
        assert!(link.rel_residual < 1e-6);
    }

    #[test]
    fn theorem_on_grid() {
        let inst = sample_instance(12, 48);
        let grid: Vec<(f64, f64)> = [0.0, 0.5, 1.0]
            .iter()
            .flat_map(|&a| [0.0, 0.5, 1.0].iter().map(move |&b| (a, b)))
            .collect();
        let rep = verify_theorem(&inst, &grid, 1e-5).unwrap();
        assert!(rep.passed, "{}", rep.max_rel_residual);
        assert!(rep.fit_residual < 1e-6);
        assert!(rep.fit_vs_routes < 1e-6);
        assert!(rep.product_residual < 1e-8);
        let d = drift(&inst.r_minus, &inst.p_plus, 24, &opts()).unwrap();
        assert!(d.drift < 1e-6, "{d:?}");
    }

    #[test]
    fn l_inverse_identities() {
        let inst = sample_instance(13, 48);
        let r = verify_l_inverse(&inst).unwrap();
        assert!(r.r_side < 1e-7 && r.p_side < 1e-7, "{r:?}");
    }

    #[test]
    fn gauge_independence() {
        let inst = sample_instance(14, 48);
        let (l, m) = lambda_mu_integral(&inst).unwrap();
        for (tr, tp) in [(0.3, 0.0), (0.0, -0.4), (0.2, 0.5)] {
            let other = inst.with_gauge(tr, tp, &opts()).unwrap();
            let (l2, m2) = lambda_mu_integral(&other).unwrap();
            assert!((l - l2).norm() < 1e-7 && (m - m2).norm() < 1e-7);
        }
    }

    #[test]
    fn bott_examples() {
        let g = corpus::diffeos(5, 3, 0.05).unwrap();
        let id = CircleDiffeo::identity(4);
        assert!(bott_cocycle(&id, &g[0]).unwrap().norm() < 1e-14);
        let r = CircleDiffeo::rotation(4, 0.3);
        assert!(
            bott_cocycle(&r, &CircleDiffeo::rotation(4, -1.1))
                .unwrap()
                .norm()
                < 1e-14
        );
        let (b, w) = classical_cocycle_residuals(&g[0], &g[1], &g[2]).unwrap();
        assert!(b < 1e-8 && w < 1e-12, "{b} {w}");
    }

    #[test]
    fn projective_cocycle_identity() {
        let g = corpus::diffeos(21, 3, 0.04).unwrap();
        let r = cocycle_identity(&g[0], &g[1], &g[2], 1.0, 2.0, 32, &opts()).unwrap();
        assert!(r < 1e-5, "{r}");
        let id = CircleDiffeo::identity(4);
        assert!(cocycle_identity(&id, &g[1], &g[2], 0.3, 1.7, 32, &opts()).unwrap() < 1e-8);
    }
}
