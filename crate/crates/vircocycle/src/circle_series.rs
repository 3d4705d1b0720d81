//! Truncated Laurent series on the unit circle and circle diffeomorphisms.
//!
//! A [`LaurentSeries`] of truncation N stores c_k for k = −N..N. Nonlinear
//! operations go through an oversampled FFT grid and are re-projected.
//! A [`CircleDiffeo`] stores the displacement u(φ) = γ(φ) − φ as a
//! real-valued series whose constant mode lies in (−π, π].

use crate::spectral::{self, analyze, grid_for, synthesize};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncated two-sided series Σ_{|k|≤N} c_k z^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeries {
    n: usize,
    coeffs: Vec<C64>,
}

impl LaurentSeries {
    /// Build from coefficients ordered k = −N..N.
    pub fn new(n: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * n + 1 {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                2 * n + 1,
                coeffs.len()
            )));
        }
        Ok(Self { n, coeffs })
    }

    /// Zero series.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![C64::new(0.0, 0.0); 2 * n + 1],
        }
    }

    /// c·z^k.
    pub fn monomial(n: usize, k: i64, c: C64) -> Self {
        let mut s = Self::zeros(n.max(k.unsigned_abs() as usize));
        s.set(k, c);
        s
    }

    /// Constant series.
    pub fn constant(n: usize, c: C64) -> Self {
        Self::monomial(n, 0, c)
    }

    /// Project grid samples (φ_j = 2πj/G) onto modes −n..n.
    pub fn from_samples(samples: &[C64], n: usize) -> Self {
        Self::from_coeff_array(&analyze(samples), n)
    }

    /// Take modes −n..n from an FFT coefficient array indexed mod G.
    pub fn from_coeff_array(c: &[C64], n: usize) -> Self {
        let coeffs = (-(n as i64)..=n as i64)
            .map(|k| spectral::mode(c, k))
            .collect();
        Self { n, coeffs }
    }

    /// Sample a function of z on the oversampled grid and project.
    pub fn from_fn(n: usize, f: impl Fn(C64) -> C64) -> Self {
        let z = spectral::grid_points(grid_for(n));
        let s: Vec<C64> = z.into_iter().map(f).collect();
        Self::from_samples(&s, n)
    }

    /// Truncation N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficients ordered k = −N..N.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of z^k (zero outside the support).
    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.n {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.n as i64) as usize]
        }
    }

    /// Set the coefficient of z^k; |k| must not exceed N.
    pub fn set(&mut self, k: i64, c: C64) {
        let n = self.n as i64;
        assert!(k.abs() <= n, "mode {k} outside truncation {n}");
        self.coeffs[(k + n) as usize] = c;
    }

    /// Zero-pad or truncate to a new N.
    pub fn resized(&self, n: usize) -> Self {
        let coeffs = (-(n as i64)..=n as i64).map(|k| self.coeff(k)).collect();
        Self { n, coeffs }
    }

    /// Coefficient array of length g indexed mod g (modes folded if g is small).
    pub fn coeff_array(&self, g: usize) -> Vec<C64> {
        let mut c = vec![C64::new(0.0, 0.0); g];
        for (i, v) in self.coeffs.iter().enumerate() {
            let k = i as i64 - self.n as i64;
            c[k.rem_euclid(g as i64) as usize] += v;
        }
        c
    }

    /// Values on the uniform grid of size g.
    pub fn samples(&self, g: usize) -> Vec<C64> {
        synthesize(&self.coeff_array(g))
    }

    /// Value at a complex point z ≠ 0.
    pub fn eval(&self, z: C64) -> C64 {
        let n = self.n as i64;
        let mut acc = C64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            acc = acc * z + self.coeff(k);
        }
        let w = z.inv();
        let mut neg = C64::new(0.0, 0.0);
        for k in (1..=n).rev() {
            neg = (neg + self.coeff(-k)) * w;
        }
        acc + neg
    }

    /// Value at e^{iφ}.
    pub fn eval_phi(&self, phi: f64) -> C64 {
        self.eval(C64::from_polar(1.0, phi))
    }

    /// Values at e^{iφ} for many φ.
    pub fn eval_phi_many(&self, phis: &[f64]) -> Vec<C64> {
        phis.iter().map(|&p| self.eval_phi(p)).collect()
    }

    /// Sum (truncation = max).
    pub fn add(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let coeffs = (-(n as i64)..=n as i64)
            .map(|k| self.coeff(k) + other.coeff(k))
            .collect();
        Self { n, coeffs }
    }

    /// Difference (truncation = max).
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, a: C64) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Product re-projected to truncation max(N₁, N₂).
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let g = grid_for(2 * n);
        let a = self.samples(g);
        let b = other.samples(g);
        let p: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_samples(&p, n)
    }

    /// d/dφ: c_k ↦ ik·c_k.
    pub fn derivative_phi(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::new(0.0, (i as i64 - self.n as i64) as f64))
            .collect();
        Self { n: self.n, coeffs }
    }

    /// d/dz on the circle; truncation grows by one.
    pub fn derivative_z(&self) -> Self {
        let mut out = Self::zeros(self.n + 1);
        for k in -(self.n as i64)..=self.n as i64 {
            if k != 0 {
                out.set(k - 1, self.coeff(k) * k as f64);
            }
        }
        out
    }

    /// Constant mode c₀.
    pub fn constant_mode(&self) -> C64 {
        self.coeff(0)
    }

    /// Keep modes k > 0.
    pub fn project_plus(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for k in 1..=self.n as i64 {
            out.set(k, self.coeff(k));
        }
        out
    }

    /// Keep modes k < 0.
    pub fn project_minus(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for k in 1..=self.n as i64 {
            out.set(-k, self.coeff(-k));
        }
        out
    }

    /// Whether c_{−k} = conj(c_k) for all k within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        (0..=self.n as i64).all(|k| (self.coeff(-k) - self.coeff(k).conj()).norm() <= tol)
    }

    /// Sup-norm over the oversampled grid.
    pub fn sup_norm(&self) -> f64 {
        self.samples(grid_for(self.n))
            .iter()
            .fold(0.0, |m: f64, z| m.max(z.norm()))
    }

    /// Orthonormal coordinates √k·c_k of the V₊ part, k = 1..m.
    pub fn on_plus(&self, m: usize) -> Vec<C64> {
        (1..=m as i64)
            .map(|k| self.coeff(k) * (k as f64).sqrt())
            .collect()
    }

    /// Orthonormal coordinates √k·c_{−k} of the V₋ part, k = 1..m.
    pub fn on_minus(&self, m: usize) -> Vec<C64> {
        (1..=m as i64)
            .map(|k| self.coeff(-k) * (k as f64).sqrt())
            .collect()
    }

    /// Inverse of [`on_plus`](Self::on_plus).
    pub fn from_on_plus(x: &[C64]) -> Self {
        let mut out = Self::zeros(x.len());
        for (i, v) in x.iter().enumerate() {
            let k = i as i64 + 1;
            out.set(k, v / (k as f64).sqrt());
        }
        out
    }

    /// Inverse of [`on_minus`](Self::on_minus).
    pub fn from_on_minus(x: &[C64]) -> Self {
        let mut out = Self::zeros(x.len());
        for (i, v) in x.iter().enumerate() {
            let k = i as i64 + 1;
            out.set(-k, v / (k as f64).sqrt());
        }
        out
    }
}

/// ∮ f dg = 2πi Σ_{k+l=0} l·f_k·g_l.
pub fn bracket(f: &LaurentSeries, g: &LaurentSeries) -> C64 {
    let n = f.n().max(g.n()) as i64;
    let s: C64 = (1..=n)
        .map(|l| f.coeff(-l) * g.coeff(l) * l as f64 - f.coeff(l) * g.coeff(-l) * l as f64)
        .sum();
    s * C64::new(0.0, 2.0 * PI)
}

/// Σ_k |k|·f_k·conj(g_k), constants ignored.
pub fn v_inner(f: &LaurentSeries, g: &LaurentSeries) -> C64 {
    let n = f.n().max(g.n()) as i64;
    (1..=n)
        .map(|k| (f.coeff(k) * g.coeff(k).conj() + f.coeff(-k) * g.coeff(-k).conj()) * k as f64)
        .sum()
}

/// Continuous logarithm of nonvanishing, winding-free grid samples.
///
/// The branch at sample 0 is principal; the rest is unwrapped.
pub fn log_samples(samples: &[C64]) -> Result<Vec<C64>> {
    let scale = samples.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    if samples
        .iter()
        .any(|z| z.norm() <= 1e-300_f64.max(scale * 1e-14))
    {
        return Err(Error::Singular("zero sample in logarithm".into()));
    }
    let w = spectral::winding(samples);
    if w != 0 {
        return Err(Error::Branch { winding: w });
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = samples[0].ln();
    out.push(prev);
    for j in 1..samples.len() {
        let step = (samples[j] / samples[j - 1]).ln();
        prev = C64::new(samples[j].norm().ln(), prev.im + step.im);
        out.push(prev);
    }
    Ok(out)
}

/// Continuous branch of ln f at the same truncation.
pub fn log_branch(f: &LaurentSeries) -> Result<LaurentSeries> {
    let g = grid_for(f.n());
    let l = log_samples(&f.samples(g))?;
    Ok(LaurentSeries::from_samples(&l, f.n()))
}

/// Wrap an angle into (−π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Orientation-preserving circle diffeomorphism φ ↦ φ + u(φ).
#[derive(Clone, Debug, PartialEq)]
pub struct CircleDiffeo {
    displacement: LaurentSeries,
}

#[derive(Serialize, Deserialize)]
struct DiffeoJson {
    displacement: LaurentSeries,
    gamma_at_zero: f64,
}

impl Serialize for CircleDiffeo {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DiffeoJson {
            displacement: self.displacement.clone(),
            gamma_at_zero: self.eval(0.0).rem_euclid(2.0 * PI),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleDiffeo {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DiffeoJson::deserialize(d)?;
        CircleDiffeo::from_displacement(j.displacement).map_err(serde::de::Error::custom)
    }
}

impl CircleDiffeo {
    /// Identity at truncation n.
    pub fn identity(n: usize) -> Self {
        Self {
            displacement: LaurentSeries::zeros(n),
        }
    }

    /// Rotation φ ↦ φ + θ.
    pub fn rotation(n: usize, theta: f64) -> Self {
        Self {
            displacement: LaurentSeries::constant(n, C64::new(wrap_pi(theta), 0.0)),
        }
    }

    /// Validate and normalize a real displacement series.
    pub fn from_displacement(u: LaurentSeries) -> Result<Self> {
        if !u.is_real(1e-10 * (1.0 + u.sup_norm())) {
            return Err(Error::Domain("displacement must be real-valued".into()));
        }
        let mut u = u;
        for k in 0..=u.n() as i64 {
            let c = (u.coeff(k) + u.coeff(-k).conj()) * 0.5;
            u.set(k, c);
            u.set(-k, c.conj());
        }
        let c0 = u.coeff(0).re;
        u.set(0, C64::new(wrap_pi(c0), 0.0));
        let d = Self { displacement: u };
        d.check_orientation()?;
        Ok(d)
    }

    /// Build from samples of u on a uniform grid.
    pub fn from_displacement_samples(u: &[f64], n: usize) -> Result<Self> {
        let s: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_displacement(LaurentSeries::from_samples(&s, n))
    }

    fn check_orientation(&self) -> Result<()> {
        let d = self
            .displacement
            .derivative_phi()
            .samples(grid_for(self.n()));
        for (j, v) in d.iter().enumerate() {
            if 1.0 + v.re <= 0.0 {
                return Err(Error::Orientation {
                    index: j,
                    value: 1.0 + v.re,
                });
            }
        }
        Ok(())
    }

    /// Truncation N.
    pub fn n(&self) -> usize {
        self.displacement.n()
    }

    /// Displacement series u.
    pub fn displacement(&self) -> &LaurentSeries {
        &self.displacement
    }

    /// Same map at another truncation.
    pub fn resized(&self, n: usize) -> Self {
        Self {
            displacement: self.displacement.resized(n),
        }
    }

    /// Lift γ(φ) = φ + u(φ).
    pub fn eval(&self, phi: f64) -> f64 {
        phi + self.displacement.eval_phi(phi).re
    }

    /// γ′(φ) = 1 + u′(φ).
    pub fn derivative(&self, phi: f64) -> f64 {
        let u = &self.displacement;
        let mut s = 0.0;
        for k in 1..=u.n() as i64 {
            let e = C64::from_polar(1.0, k as f64 * phi);
            s += 2.0 * (u.coeff(k) * e * C64::new(0.0, k as f64)).re;
        }
        1.0 + s
    }

    /// Lift values on the uniform grid of size g.
    pub fn lift_samples(&self, g: usize) -> Vec<f64> {
        let u = self.displacement.samples(g);
        spectral::angles(g)
            .iter()
            .zip(&u)
            .map(|(p, v)| p + v.re)
            .collect()
    }

    /// Derivative values on the uniform grid of size g.
    pub fn derivative_samples(&self, g: usize) -> Vec<f64> {
        self.displacement
            .derivative_phi()
            .samples(g)
            .iter()
            .map(|v| 1.0 + v.re)
            .collect()
    }

    /// Lift evaluated at arbitrary angles.
    pub fn eval_many(&self, phis: &[f64]) -> Vec<f64> {
        phis.iter().map(|&p| self.eval(p)).collect()
    }

    /// Sup of |u − u₀| on the oversampled grid.
    pub fn oscillation(&self) -> f64 {
        let mut u = self.displacement.clone();
        u.set(0, C64::new(0.0, 0.0));
        u.sup_norm()
    }

    /// Sup of |γ₁ − γ₂| modulo 2π on the oversampled grid.
    pub fn distance(&self, other: &Self) -> f64 {
        let g = grid_for(self.n().max(other.n()));
        let a = self.lift_samples(g);
        let b = other.lift_samples(g);
        a.iter()
            .zip(&b)
            .fold(0.0, |m: f64, (x, y)| m.max(wrap_pi(x - y).abs()))
    }

    /// Solve γ(ψ) = target with safeguarded Newton.
    pub fn solve_lift(&self, target: f64, guess: f64) -> f64 {
        let span: f64 = self
            .displacement
            .coeffs()
            .iter()
            .map(|c| c.norm())
            .sum::<f64>()
            + 1e-9;
        let (mut lo, mut hi) = (target - span - 1e-6, target + span + 1e-6);
        let mut x = guess.clamp(lo, hi);
        for _ in 0..100 {
            let f = self.eval(x) - target;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x);
            let mut nx = x - f / d;
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() < 1e-16 {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }

    /// Composition self∘other.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.compose_to(other, self.n().max(other.n()))
    }

    /// self∘other truncated to n modes.
    pub fn compose_to(&self, other: &Self, n: usize) -> Result<Self> {
        let g = grid_for(n.max(self.n()).max(other.n()));
        let phis = spectral::angles(g);
        let inner = other.lift_samples(g);
        let u: Vec<f64> = inner
            .iter()
            .zip(&phis)
            .map(|(&x, &p)| self.eval(x) - p)
            .collect();
        Self::from_displacement_samples(&u, n)
    }

    /// Inverse diffeomorphism.
    pub fn invert(&self) -> Result<Self> {
        self.invert_to(self.n())
    }

    /// γ⁻¹ truncated to n modes.
    pub fn invert_to(&self, n: usize) -> Result<Self> {
        let g = grid_for(n.max(self.n()));
        let phis = spectral::angles(g);
        let u: Vec<f64> = self
            .inverse_lift_samples(g)?
            .iter()
            .zip(&phis)
            .map(|(x, p)| x - p)
            .collect();
        Self::from_displacement_samples(&u, n)
    }

    /// Lift of γ⁻¹ at the g grid angles.
    pub fn inverse_lift_samples(&self, g: usize) -> Result<Vec<f64>> {
        self.check_orientation()?;
        let c0 = self.displacement.coeff(0).re;
        let mut prev = -c0;
        Ok(spectral::angles(g)
            .into_iter()
            .map(|p| {
                let x = self.solve_lift(p, p + prev);
                prev = x - p;
                x
            })
            .collect())
    }

    /// T(γ)f = f∘γ⁻¹, re-projected to the truncation of f.
    pub fn pullback(&self, f: &LaurentSeries) -> Result<LaurentSeries> {
        let inv = self.invert_to(f.n().max(self.n()))?;
        Ok(inv.precompose(f, f.n()))
    }

    /// f∘γ sampled on the grid and projected to truncation n.
    pub fn precompose(&self, f: &LaurentSeries, n: usize) -> LaurentSeries {
        let g = grid_for(n.max(f.n()).max(self.n()));
        let lift = self.lift_samples(g);
        LaurentSeries::from_samples(&f.eval_phi_many(&lift), n)
    }
}
