//! Conformal welding of circle diffeomorphisms.
//!
//! Convention: a welding pair (q₊, q₋) of γ satisfies q₊(z) = q₋(γ(z)) on
//! the circle, with q₊(0) = 0 and leading coefficient b₁(q₋) = 1.

use crate::circle_series::{wrap_pi, CircleDiffeo};
use crate::linalg::{self, CMat, CVec};
use crate::spectral::{self, analyze, grid_for};
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Solver settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeldOptions {
    /// Required sup-norm gluing residual.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
    /// Admissibility bound on sup |u − u₀|.
    pub max_displacement: f64,
    /// Quadrature grid; `None` picks the default oversampled grid.
    pub grid: Option<usize>,
}

impl Default for WeldOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_displacement: 0.3,
            grid: None,
        }
    }
}

/// Convergence record of a welding solve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WeldReport {
    pub iterations: usize,
    pub residual_trace: Vec<f64>,
    pub residual: f64,
    pub grid: usize,
}

/// Welding pair with its gluing residual.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeldingPair {
    pub plus: DiskMap,
    pub minus: CoDiskMap,
    pub residual: f64,
    pub report: WeldReport,
}

/// Sup over the grid of |plus(z) − minus(γ(z))|.
pub fn gluing_residual(plus: &DiskMap, minus: &CoDiskMap, gamma: &CircleDiffeo, g: usize) -> f64 {
    let z = spectral::grid_points(g);
    let lift = gamma.lift_samples(g);
    z.iter()
        .zip(&lift)
        .map(|(z, t)| (plus.eval(*z) - minus.eval(C64::from_polar(1.0, *t))).norm())
        .fold(0.0, f64::max)
}

/// Welding pair of γ at truncation n.
///
/// The gluing equations are affine in the coefficients of q₋ for fixed γ,
/// so the Gauss-Newton iteration from the identity guess terminates after
/// one least-squares step; the loop still records the residual trace.
pub fn weld(gamma: &CircleDiffeo, n: usize, opts: &WeldOptions) -> Result<WeldingPair> {
    let osc = gamma.oscillation();
    if osc > opts.max_displacement {
        return Err(Error::Inadmissible(format!(
            "displacement {osc:.3e} exceeds bound {:.3e}",
            opts.max_displacement
        )));
    }
    let g = opts.grid.unwrap_or_else(|| grid_for(n.max(gamma.n())));
    let lift = gamma.lift_samples(g);
    let f = analyze(
        &lift
            .iter()
            .map(|&t| C64::from_polar(1.0, t))
            .collect::<Vec<_>>(),
    );
    let e: Vec<Vec<C64>> = (1..=n)
        .map(|k| {
            analyze(
                &lift
                    .iter()
                    .map(|&t| C64::from_polar(1.0, -(k as f64) * t))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    // Rows for modes 0..−2n: the square finite section is unstable near the
    // cutoff, the rectangular one is not.
    let rows = 2 * n + 1;
    let mut jac = CMat::zeros(rows, n + 1);
    let mut rhs = CVec::zeros(rows);
    for (row, m) in (0..rows as i64).map(|i| (i as usize, -i)) {
        if m == 0 {
            jac[(row, 0)] = C64::new(1.0, 0.0);
        }
        for k in 1..=n {
            jac[(row, k)] = spectral::mode(&e[k - 1], m);
        }
        rhs[row] = -spectral::mode(&f, m);
    }
    let mut x = CVec::zeros(n + 1);
    let mut report = WeldReport {
        grid: g,
        ..Default::default()
    };
    let mut pair = assemble(&x, &f, &e, n)?;
    let mut res = gluing_residual(&pair.0, &pair.1, gamma, g);
    report.residual_trace.push(res);
    while res > opts.tol && report.iterations < opts.max_iter {
        let defect = &jac * &x - &rhs;
        let step = linalg::lstsq(&jac, &defect)?;
        x -= step;
        report.iterations += 1;
        pair = assemble(&x, &f, &e, n)?;
        let new_res = gluing_residual(&pair.0, &pair.1, gamma, g);
        report.residual_trace.push(new_res);
        let stalled = new_res >= 0.5 * res;
        res = new_res;
        if stalled {
            break;
        }
    }
    report.residual = res;
    if res > opts.tol {
        return Err(Error::Solver {
            iterations: report.iterations,
            residual: res,
        });
    }
    Ok(WeldingPair {
        plus: pair.0,
        minus: pair.1,
        residual: res,
        report,
    })
}

fn assemble(x: &CVec, f: &[C64], e: &[Vec<C64>], n: usize) -> Result<(DiskMap, CoDiskMap)> {
    let tail: Vec<C64> = (1..=n).map(|k| x[k]).collect();
    let minus = CoDiskMap::new(C64::new(1.0, 0.0), x[0], tail)?;
    let plus = (1..=n as i64)
        .map(|k| {
            spectral::mode(f, k)
                + (1..=n)
                    .map(|j| x[j] * spectral::mode(&e[j - 1], k))
                    .sum::<C64>()
        })
        .collect();
    Ok((DiskMap::new(plus)?, minus))
}

/// γ = minus⁻¹∘plus on the circle, at truncation n.
pub fn induced_diffeo(plus: &DiskMap, minus: &CoDiskMap, n: usize) -> Result<CircleDiffeo> {
    let g = grid_for(n.max(plus.n()).max(minus.n()));
    let phis = spectral::angles(g);
    let targets = plus.samples(g);
    let coarse = 256;
    let coarse_pts: Vec<C64> = spectral::grid_points(coarse)
        .iter()
        .map(|z| minus.eval(*z))
        .collect();
    let scale = targets.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    let mut u = Vec::with_capacity(g);
    let mut worst: f64 = 0.0;
    let mut prev: Option<f64> = None;
    for (j, (&phi, &w)) in phis.iter().zip(&targets).enumerate() {
        let start = match prev {
            Some(p) => phi + p,
            None => {
                let i = (0..coarse)
                    .min_by(|&a, &b| {
                        (coarse_pts[a] - w)
                            .norm()
                            .partial_cmp(&(coarse_pts[b] - w).norm())
                            .unwrap()
                    })
                    .unwrap();
                phi + wrap_pi(2.0 * PI * i as f64 / coarse as f64 - phi)
            }
        };
        let psi = project_onto_trace(minus, w, start);
        let defect = (minus.eval(C64::from_polar(1.0, psi)) - w).norm();
        worst = worst.max(defect);
        let mut d = psi - phi;
        if let Some(p) = prev {
            d = p + wrap_pi(d - p);
        }
        let _ = j;
        prev = Some(d);
        u.push(d);
    }
    if worst > 1e-6 * scale.max(1.0) {
        return Err(Error::Geometry { defect: worst });
    }
    CircleDiffeo::from_displacement_samples(&u, n)
}

fn project_onto_trace(minus: &CoDiskMap, w: C64, start: f64) -> f64 {
    let mut psi = start;
    for _ in 0..60 {
        let z = C64::from_polar(1.0, psi);
        let f = minus.eval(z) - w;
        let d = C64::new(0.0, 1.0) * z * minus.deriv(z);
        let step = (d.conj() * f).re / d.norm_sqr();
        psi -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    psi
}

/// Result of a complement-map solve.
#[derive(Clone, Debug)]
pub struct Complement<M> {
    pub map: M,
    /// Diffeomorphism welded by the completed pair.
    pub diffeo: CircleDiffeo,
    /// Largest forbidden Fourier mode left after the solve.
    pub residual: f64,
}

/// Solve for θ = φ + v(φ), v a real trig polynomial of degree nt, such that
/// the listed Fourier modes of h(e^{iθ}) vanish and Im of mode `gauge` is 0.
fn reparametrize<H, D>(
    h: H,
    hd: D,
    nt: usize,
    g: usize,
    forbidden: &[i64],
    gauge: i64,
) -> Result<(Vec<f64>, f64)>
where
    H: Fn(C64) -> C64,
    D: Fn(C64) -> C64,
{
    let phis = spectral::angles(g);
    let nb = 2 * nt + 1;
    let basis: Vec<Vec<f64>> = (0..nb)
        .map(|j| {
            phis.iter()
                .map(|&p| match j {
                    0 => 1.0,
                    j if j <= nt => (j as f64 * p).cos(),
                    j => ((j - nt) as f64 * p).sin(),
                })
                .collect()
        })
        .collect();
    let rows = 2 * forbidden.len() + 1;
    let residual_of = |c: &[C64]| {
        let mut r = DVector::<f64>::zeros(rows);
        for (i, &m) in forbidden.iter().enumerate() {
            let v = spectral::mode(c, m);
            r[i] = v.re;
            r[forbidden.len() + i] = v.im;
        }
        r[rows - 1] = spectral::mode(c, gauge).im;
        r
    };
    let mut v = DVector::<f64>::zeros(nb);
    let mut res = f64::INFINITY;
    for _ in 0..40 {
        let theta: Vec<f64> = (0..g)
            .map(|j| phis[j] + (0..nb).map(|b| v[b] * basis[b][j]).sum::<f64>())
            .collect();
        let w: Vec<C64> = theta.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let hv = analyze(&w.iter().map(|z| h(*z)).collect::<Vec<_>>());
        let gv: Vec<C64> = w.iter().map(|z| C64::new(0.0, 1.0) * z * hd(*z)).collect();
        let r = residual_of(&hv);
        res = r.amax();
        let mut jac = DMatrix::<f64>::zeros(rows, nb);
        for (b, e) in basis.iter().enumerate() {
            let col = analyze(&gv.iter().zip(e).map(|(x, y)| x * *y).collect::<Vec<_>>());
            jac.set_column(b, &residual_of(&col));
        }
        let dv = linalg::lstsq_real(&jac, &(-r))?;
        v += &dv;
        if dv.amax() < 1e-15 {
            break;
        }
    }
    let theta: Vec<f64> = (0..g)
        .map(|j| (0..nb).map(|b| v[b] * basis[b][j]).sum::<f64>())
        .collect();
    let w: Vec<C64> = theta
        .iter()
        .zip(&phis)
        .map(|(d, p)| C64::from_polar(1.0, d + p))
        .collect();
    let hv = analyze(&w.iter().map(|z| h(*z)).collect::<Vec<_>>());
    let fin = residual_of(&hv).amax();
    Ok((theta, fin.min(res)))
}

/// Degree of the trig reparametrization used for complements at truncation n.
pub fn complement_degree(n: usize) -> usize {
    (2 * n).max(16)
}

/// Disk map r⁺ completing r₋ to a welding pair, with r⁺(0) = 0 and r⁺′(0) > 0.
///
/// The returned diffeomorphism γ_r satisfies r⁺(z) = r₋(γ_r(z)).
pub fn complement_map(minus: &CoDiskMap, n: usize) -> Result<Complement<DiskMap>> {
    let nt = complement_degree(n);
    let g = grid_for(2 * nt + 2).max(grid_for(minus.n()));
    let forbidden: Vec<i64> = (0..=2 * nt as i64).map(|k| -k).collect();
    let (v, res) = reparametrize(|z| minus.eval(z), |z| minus.deriv(z), nt, g, &forbidden, 1)?;
    let phis = spectral::angles(g);
    let w: Vec<C64> = v
        .iter()
        .zip(&phis)
        .map(|(d, p)| minus.eval(C64::from_polar(1.0, d + p)))
        .collect();
    let c = analyze(&w);
    let plus = DiskMap::new((1..=n as i64).map(|k| spectral::mode(&c, k)).collect())?;
    let diffeo = CircleDiffeo::from_displacement_samples(&v, n.max(nt))?;
    Ok(Complement {
        map: plus,
        diffeo,
        residual: res,
    })
}

/// Co-disk map p⁻ completing p₊ to a welding pair, with b₁(p⁻) > 0.
///
/// The returned diffeomorphism γ_p satisfies p₊(z) = p⁻(γ_p(z)).
pub fn complement_map_codisk(plus: &DiskMap, n: usize) -> Result<Complement<CoDiskMap>> {
    let nt = complement_degree(n);
    let g = grid_for(2 * nt + 2).max(grid_for(plus.n()));
    let forbidden: Vec<i64> = (2..=2 * nt as i64 + 1).collect();
    let (v, res) = reparametrize(|z| plus.eval(z), |z| plus.deriv(z), nt, g, &forbidden, 1)?;
    let phis = spectral::angles(g);
    let w: Vec<C64> = v
        .iter()
        .zip(&phis)
        .map(|(d, p)| plus.eval(C64::from_polar(1.0, d + p)))
        .collect();
    let c = analyze(&w);
    let minus = CoDiskMap::new(
        spectral::mode(&c, 1),
        spectral::mode(&c, 0),
        (1..=n as i64).map(|k| spectral::mode(&c, -k)).collect(),
    )?;
    let theta = CircleDiffeo::from_displacement_samples(&v, n.max(nt))?;
    Ok(Complement {
        map: minus,
        diffeo: theta.invert()?,
        residual: res,
    })
}

/// Action of γ on a point s of Ξ: returns the reglued disk map and its
/// exterior companion.
///
/// With (s, s⁻) the completed pair of s and γ_s its welding diffeomorphism,
/// the result is b₁(s⁻)·weld(γ_s∘γ), so that the identity acts trivially and
/// actions compose as xi(xi(s, γ₂), γ₁) = xi(s, γ₂∘γ₁).
pub fn xi_action(
    s: &DiskMap,
    gamma: &CircleDiffeo,
    n: usize,
    opts: &WeldOptions,
) -> Result<(DiskMap, CoDiskMap)> {
    let comp = complement_map_codisk(s, n)?;
    let b1 = comp.map.b1();
    let nt = complement_degree(n);
    let total = comp.diffeo.resized(nt.max(gamma.n())).compose(gamma)?;
    let pair = weld(&total, nt, opts)?;
    Ok((
        pair.plus.resized(n).scaled(b1),
        pair.minus.resized(n).scaled(b1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_series::LaurentSeries;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diffeo(n: usize) -> CircleDiffeo {
        let mut u = LaurentSeries::zeros(n);
        u.set(2, c(0.0, -0.025));
        u.set(-2, c(0.0, 0.025));
        u.set(1, c(0.01, 0.005));
        u.set(-1, c(0.01, -0.005));
        CircleDiffeo::from_displacement(u).unwrap()
    }

    #[test]
    fn weld_identity_and_rotation() {
        let p = weld(&CircleDiffeo::identity(8), 16, &WeldOptions::default()).unwrap();
        assert!(p.residual < 1e-14);
        assert!((p.plus.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        let th = 0.7;
        let p = weld(&CircleDiffeo::rotation(8, th), 16, &WeldOptions::default()).unwrap();
        assert!((p.plus.coeff(1) - C64::from_polar(1.0, th)).norm() < 1e-13);
        assert!(p.minus.b0().norm() < 1e-13 && p.minus.tail().iter().all(|t| t.norm() < 1e-13));
    }

    #[test]
    fn weld_sine_displacement_regression() {
        let mut u = LaurentSeries::zeros(4);
        u.set(2, c(0.0, -0.025));
        u.set(-2, c(0.0, 0.025));
        let g = CircleDiffeo::from_displacement(u).unwrap();
        let p = weld(&g, 64, &WeldOptions::default()).unwrap();
        assert!(p.residual <= 1e-9, "{}", p.residual);
        assert_eq!(p.report.iterations, 1);
    }

    #[test]
    fn weld_rejects_large_displacement() {
        let mut u = LaurentSeries::zeros(2);
        u.set(1, c(0.2, 0.0));
        u.set(-1, c(0.2, 0.0));
        let g = CircleDiffeo::from_displacement(u).unwrap();
        assert!(matches!(
            weld(&g, 16, &WeldOptions::default()),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn weld_then_induced_round_trip() {
        let g = diffeo(16);
        let p = weld(&g, 64, &WeldOptions::default()).unwrap();
        let back = induced_diffeo(&p.plus, &p.minus, 64).unwrap();
        assert!(back.distance(&g) < 1e-8, "{}", back.distance(&g));
    }

    #[test]
    fn induced_examples() {
        let id = induced_diffeo(&DiskMap::identity(4), &CoDiskMap::identity(4), 8).unwrap();
        assert!(id.distance(&CircleDiffeo::identity(8)) < 1e-14);
        let th = 0.3;
        let r = induced_diffeo(
            &DiskMap::scaling(4, C64::from_polar(1.0, th)).unwrap(),
            &CoDiskMap::identity(4),
            8,
        )
        .unwrap();
        assert!(r.distance(&CircleDiffeo::rotation(8, th)) < 1e-14);
    }

    #[test]
    fn complement_examples() {
        let r = complement_map(&CoDiskMap::identity(4), 16).unwrap();
        assert!((r.map.coeff(1) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(r.diffeo.distance(&CircleDiffeo::identity(16)) < 1e-13);
        let cd = CoDiskMap::new(
            c(1.0, 0.05),
            c(0.03, -0.02),
            vec![c(0.06, 0.02), c(-0.01, 0.015), c(0.004, 0.0)],
        )
        .unwrap();
        let r = complement_map(&cd, 32).unwrap();
        assert!(r.residual < 1e-12, "{}", r.residual);
        assert!(r.map.coeff(1).im.abs() < 1e-12 && r.map.coeff(1).re > 0.0);
        let back = induced_diffeo(&r.map, &cd, 32).unwrap();
        assert!(back.distance(&r.diffeo) < 1e-7);
        // weld of γ_r reproduces the pair up to the b₁ scaling
        let p = weld(&r.diffeo, 64, &WeldOptions::default()).unwrap();
        let s = cd.b1();
        assert!((p.minus.b0() * s - cd.b0()).norm() < 1e-8);
        assert!((p.plus.coeff(2) * s - r.map.coeff(2)).norm() < 1e-8);
    }

    #[test]
    fn complement_codisk_round_trip() {
        let d = DiskMap::new(vec![
            c(1.0, 0.02),
            c(0.05, -0.03),
            c(0.01, 0.01),
            c(-0.003, 0.0),
        ])
        .unwrap();
        let r = complement_map_codisk(&d, 32).unwrap();
        assert!(r.residual < 1e-12, "{}", r.residual);
        assert!(r.map.b1().im.abs() < 1e-12 && r.map.b1().re > 0.0);
        assert!(gluing_residual(&d, &r.map, &r.diffeo, 256) < 1e-8);
    }

    #[test]
    fn xi_action_examples() {
        let opts = WeldOptions::default();
        let s = DiskMap::new(vec![c(1.0, 0.02), c(0.05, -0.03), c(0.01, 0.01)]).unwrap();
        let (t, _) = xi_action(&s, &CircleDiffeo::identity(8), 32, &opts).unwrap();
        for k in 1..=3 {
            assert!((t.coeff(k) - s.coeff(k)).norm() < 1e-8);
        }
        let th = 0.4;
        let (r, _) = xi_action(
            &DiskMap::identity(4),
            &CircleDiffeo::rotation(8, th),
            16,
            &opts,
        )
        .unwrap();
        assert!((r.coeff(1) - C64::from_polar(1.0, th)).norm() < 1e-10);
        let g = diffeo(16);
        let (t, _) = xi_action(&s, &g, 48, &opts).unwrap();
        let (back, _) = xi_action(&t, &g.invert().unwrap(), 48, &opts).unwrap();
        for k in 1..=3 {
            assert!((back.coeff(k) - s.coeff(k)).norm() < 1e-6);
        }
    }
}
