//! Univalent maps of the unit disk (fixing 0) and of its exterior (fixing ∞).

use crate::circle_series::{log_samples, LaurentSeries};
use crate::spectral::{self, analyze, grid_for, synthesize};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// z ↦ Σ_{k=1}^N a_k z^k.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskMap {
    coeffs: Vec<C64>,
}

/// z ↦ b₁z + b₀ + Σ_{k=1}^N b₋ₖ z^{−k}.
#[derive(Clone, Debug, PartialEq)]
pub struct CoDiskMap {
    b1: C64,
    b0: C64,
    tail: Vec<C64>,
}

/// JSON layout shared by both map kinds.
///
/// Disk maps list a₁..a_N; co-disk maps list b₁, b₀, b₋₁, …, b₋N.
#[derive(Serialize, Deserialize)]
struct MapJson {
    kind: String,
    n: usize,
    coeffs: Vec<C64>,
}

impl Serialize for DiskMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapJson {
            kind: "disk".into(),
            n: self.n(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiskMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapJson::deserialize(d)?;
        if j.kind != "disk" || j.coeffs.len() != j.n {
            return Err(serde::de::Error::custom(
                "expected disk map with n coefficients",
            ));
        }
        DiskMap::new(j.coeffs).map_err(serde::de::Error::custom)
    }
}

impl Serialize for CoDiskMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut coeffs = vec![self.b1, self.b0];
        coeffs.extend_from_slice(&self.tail);
        MapJson {
            kind: "codisk".into(),
            n: self.n(),
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoDiskMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapJson::deserialize(d)?;
        if j.kind != "codisk" || j.coeffs.len() != j.n + 2 {
            return Err(serde::de::Error::custom(
                "expected codisk map with n + 2 coefficients",
            ));
        }
        CoDiskMap::new(j.coeffs[0], j.coeffs[1], j.coeffs[2..].to_vec())
            .map_err(serde::de::Error::custom)
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl DiskMap {
    /// From a₁..a_N; a₁ must be nonzero.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].norm() == 0.0 {
            return Err(Error::Domain("disk map needs a₁ ≠ 0".into()));
        }
        Ok(Self { coeffs })
    }

    /// Identity map at truncation n.
    pub fn identity(n: usize) -> Self {
        let mut c = vec![zero(); n.max(1)];
        c[0] = C64::new(1.0, 0.0);
        Self { coeffs: c }
    }

    /// Scaling z ↦ cz.
    pub fn scaling(n: usize, c: C64) -> Result<Self> {
        let mut v = vec![zero(); n.max(1)];
        v[0] = c;
        Self::new(v)
    }

    /// Möbius map z/(1 − tz), truncated at n.
    pub fn mobius(n: usize, t: C64) -> Self {
        Self {
            coeffs: (0..n).map(|k| t.powu(k as u32)).collect(),
        }
    }

    /// Truncation N.
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficients a₁..a_N.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient a_k (zero outside 1..N).
    pub fn coeff(&self, k: usize) -> C64 {
        if k == 0 || k > self.n() {
            zero()
        } else {
            self.coeffs[k - 1]
        }
    }

    /// Zero-pad or truncate.
    pub fn resized(&self, n: usize) -> Self {
        Self {
            coeffs: (1..=n.max(1)).map(|k| self.coeff(k)).collect(),
        }
    }

    /// Value at z.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(zero(), |acc, a| (acc + a) * z)
    }

    /// Derivative at z.
    pub fn deriv(&self, z: C64) -> C64 {
        let mut acc = zero();
        for k in (1..=self.n()).rev() {
            acc = acc * z + self.coeffs[k - 1] * k as f64;
        }
        acc
    }

    /// Boundary samples on the uniform grid of size g.
    pub fn samples(&self, g: usize) -> Vec<C64> {
        self.boundary_trace().samples(g)
    }

    /// Derivative samples on the uniform grid of size g.
    pub fn deriv_samples(&self, g: usize) -> Vec<C64> {
        let mut c = vec![zero(); g];
        for k in 1..=self.n() {
            c[(k - 1) % g] += self.coeffs[k - 1] * k as f64;
        }
        synthesize(&c)
    }

    /// Restriction to |z| = 1.
    pub fn boundary_trace(&self) -> LaurentSeries {
        let mut s = LaurentSeries::zeros(self.n());
        for k in 1..=self.n() {
            s.set(k as i64, self.coeffs[k - 1]);
        }
        s
    }

    /// Grid samples of ln(r(z)/z).
    pub fn ell_samples(&self, g: usize) -> Result<Vec<C64>> {
        let z = spectral::grid_points(g);
        let q: Vec<C64> = self.samples(g).iter().zip(&z).map(|(r, z)| r / z).collect();
        log_samples(&q)
    }

    /// Grid samples of ln r′(z).
    pub fn m_samples(&self, g: usize) -> Result<Vec<C64>> {
        log_samples(&self.deriv_samples(g))
    }

    /// ℓ(r) = ln(r(z)/z) at truncation n.
    pub fn ell_vector(&self, n: usize) -> Result<LaurentSeries> {
        let g = grid_for(n.max(self.n()));
        Ok(LaurentSeries::from_samples(&self.ell_samples(g)?, n))
    }

    /// m(r) = ln r′(z) at truncation n.
    pub fn m_vector(&self, n: usize) -> Result<LaurentSeries> {
        let g = grid_for(n.max(self.n()));
        Ok(LaurentSeries::from_samples(&self.m_samples(g)?, n))
    }

    /// r*(z) = 1/conj(r(1/z̄)), truncated at n.
    pub fn star(&self, n: usize) -> Result<CoDiskMap> {
        let g = grid_for(n.max(self.n()));
        let s = self.samples(g);
        check_nonzero(&s)?;
        let inv: Vec<C64> = s.iter().map(|v| v.conj().inv()).collect();
        let c = analyze(&inv);
        let tail = (1..=n as i64).map(|k| spectral::mode(&c, -k)).collect();
        CoDiskMap::new(spectral::mode(&c, 1), spectral::mode(&c, 0), tail)
    }

    /// s°(z) = conj(s(z̄)).
    pub fn conj_coeffs(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    /// z ↦ r(e^{iθ}z).
    pub fn rotate_argument(&self, theta: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * C64::from_polar(1.0, (i + 1) as f64 * theta))
            .collect();
        Self { coeffs }
    }

    /// Multiply the map by a constant.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Boundary-sampling univalence check.
    pub fn validate(&self) -> Result<()> {
        let g = grid_for(self.n()).max(4 * self.n());
        validate_trace(
            &self.samples(g),
            &self.deriv_samples(g),
            &self.samples(4 * self.n().max(8)),
        )
    }
}

impl CoDiskMap {
    /// From b₁, b₀ and b₋₁..b₋N; b₁ must be nonzero.
    pub fn new(b1: C64, b0: C64, tail: Vec<C64>) -> Result<Self> {
        if b1.norm() == 0.0 {
            return Err(Error::Domain("co-disk map needs b₁ ≠ 0".into()));
        }
        Ok(Self { b1, b0, tail })
    }

    /// Identity map at truncation n.
    pub fn identity(n: usize) -> Self {
        Self {
            b1: C64::new(1.0, 0.0),
            b0: zero(),
            tail: vec![zero(); n],
        }
    }

    /// Truncation N (number of negative powers).
    pub fn n(&self) -> usize {
        self.tail.len()
    }

    /// Leading coefficient b₁.
    pub fn b1(&self) -> C64 {
        self.b1
    }

    /// Constant coefficient b₀.
    pub fn b0(&self) -> C64 {
        self.b0
    }

    /// Coefficients b₋₁..b₋N.
    pub fn tail(&self) -> &[C64] {
        &self.tail
    }

    /// Coefficient of z^k for k ≤ 1.
    pub fn coeff(&self, k: i64) -> C64 {
        match k {
            1 => self.b1,
            0 => self.b0,
            k if k < 0 && (-k) as usize <= self.n() => self.tail[(-k - 1) as usize],
            _ => zero(),
        }
    }

    /// Zero-pad or truncate the tail.
    pub fn resized(&self, n: usize) -> Self {
        Self {
            b1: self.b1,
            b0: self.b0,
            tail: (1..=n as i64).map(|k| self.coeff(-k)).collect(),
        }
    }

    /// Value at z ≠ 0.
    pub fn eval(&self, z: C64) -> C64 {
        let w = z.inv();
        let t = self.tail.iter().rev().fold(zero(), |acc, b| (acc + b) * w);
        self.b1 * z + self.b0 + t
    }

    /// Derivative at z ≠ 0.
    pub fn deriv(&self, z: C64) -> C64 {
        let w = z.inv();
        let mut acc = zero();
        for k in (1..=self.n()).rev() {
            acc = acc * w - self.tail[k - 1] * k as f64;
        }
        self.b1 + acc * w * w
    }

    /// Restriction to |z| = 1.
    pub fn boundary_trace(&self) -> LaurentSeries {
        let mut s = LaurentSeries::zeros(self.n().max(1));
        s.set(1, self.b1);
        s.set(0, self.b0);
        for k in 1..=self.n() {
            s.set(-(k as i64), self.tail[k - 1]);
        }
        s
    }

    /// Boundary samples on the uniform grid of size g.
    pub fn samples(&self, g: usize) -> Vec<C64> {
        self.boundary_trace().samples(g)
    }

    /// Derivative samples on the uniform grid of size g.
    pub fn deriv_samples(&self, g: usize) -> Vec<C64> {
        let mut c = vec![zero(); g];
        c[0] += self.b1;
        for k in 1..=self.n() {
            let m = -(k as i64) - 1;
            c[m.rem_euclid(g as i64) as usize] -= self.tail[k - 1] * k as f64;
        }
        synthesize(&c)
    }

    /// Grid samples of ln(r(z)/z).
    pub fn ell_samples(&self, g: usize) -> Result<Vec<C64>> {
        let z = spectral::grid_points(g);
        let q: Vec<C64> = self.samples(g).iter().zip(&z).map(|(r, z)| r / z).collect();
        log_samples(&q)
    }

    /// Grid samples of ln r′(z).
    pub fn m_samples(&self, g: usize) -> Result<Vec<C64>> {
        log_samples(&self.deriv_samples(g))
    }

    /// ℓ(r) = ln(r(z)/z) at truncation n.
    pub fn ell_vector(&self, n: usize) -> Result<LaurentSeries> {
        let g = grid_for(n.max(self.n()));
        Ok(LaurentSeries::from_samples(&self.ell_samples(g)?, n))
    }

    /// m(r) = ln r′(z) at truncation n.
    pub fn m_vector(&self, n: usize) -> Result<LaurentSeries> {
        let g = grid_for(n.max(self.n()));
        Ok(LaurentSeries::from_samples(&self.m_samples(g)?, n))
    }

    /// r*(z) = 1/conj(r(1/z̄)), a disk map truncated at n.
    pub fn star(&self, n: usize) -> Result<DiskMap> {
        let g = grid_for(n.max(self.n()));
        let s = self.samples(g);
        check_nonzero(&s)?;
        let inv: Vec<C64> = s.iter().map(|v| v.conj().inv()).collect();
        let c = analyze(&inv);
        DiskMap::new((1..=n as i64).map(|k| spectral::mode(&c, k)).collect())
    }

    /// Conjugate all coefficients.
    pub fn conj_coeffs(&self) -> Self {
        Self {
            b1: self.b1.conj(),
            b0: self.b0.conj(),
            tail: self.tail.iter().map(|c| c.conj()).collect(),
        }
    }

    /// z ↦ r(e^{iθ}z).
    pub fn rotate_argument(&self, theta: f64) -> Self {
        let tail = self
            .tail
            .iter()
            .enumerate()
            .map(|(i, b)| b * C64::from_polar(1.0, -((i + 1) as f64) * theta))
            .collect();
        Self {
            b1: self.b1 * C64::from_polar(1.0, theta),
            b0: self.b0,
            tail,
        }
    }

    /// Multiply the map by a constant.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            b1: self.b1 * c,
            b0: self.b0 * c,
            tail: self.tail.iter().map(|b| b * c).collect(),
        }
    }

    /// Boundary-sampling univalence check.
    pub fn validate(&self) -> Result<()> {
        let n = self.n().max(1);
        let g = grid_for(n).max(4 * n);
        validate_trace(
            &self.samples(g),
            &self.deriv_samples(g),
            &self.samples(4 * n.max(8)),
        )
    }
}

fn check_nonzero(s: &[C64]) -> Result<()> {
    let scale = s.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    if s.iter().any(|z| z.norm() <= scale * 1e-14) {
        return Err(Error::Singular("map vanishes on the boundary".into()));
    }
    Ok(())
}

fn validate_trace(trace: &[C64], deriv: &[C64], coarse: &[C64]) -> Result<()> {
    check_nonzero(deriv)
        .map_err(|_| Error::NotUnivalent("derivative vanishes on the boundary".into()))?;
    let w = spectral::winding(deriv);
    if w != 0 {
        return Err(Error::NotUnivalent(format!(
            "derivative has {} zeros inside",
            w.abs()
        )));
    }
    if spectral::winding(trace).abs() != 1 {
        return Err(Error::NotUnivalent(
            "boundary trace does not wind once".into(),
        ));
    }
    let diam = coarse
        .iter()
        .flat_map(|a| coarse.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    for i in 0..coarse.len() {
        for j in (i + 1)..coarse.len() {
            if (coarse[i] - coarse[j]).norm() <= 1e-10 * diam {
                return Err(Error::NotUnivalent(format!("samples {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn boundary_trace_examples() {
        let id = DiskMap::identity(4).boundary_trace();
        assert_eq!(id.coeff(1), c(1.0, 0.0));
        assert!(
            id.sub(&LaurentSeries::monomial(4, 1, c(1.0, 0.0)))
                .sup_norm()
                == 0.0
        );
        let t = 0.3;
        let m = DiskMap::mobius(20, c(t, 0.0));
        let s = LaurentSeries::from_fn(20, |z| z / (1.0 - z * t));
        for k in 1..=20 {
            assert!((m.boundary_trace().coeff(k) - s.coeff(k)).norm() < 1e-14);
            assert!((s.coeff(k) - c(t.powi(k as i32 - 1), 0.0)).norm() < 1e-14);
        }
        let cd = CoDiskMap::new(c(1.0, 0.0), c(0.0, 0.0), vec![c(0.2, 0.0)]).unwrap();
        let tr = cd.boundary_trace();
        assert_eq!((tr.coeff(1), tr.coeff(-1)), (c(1.0, 0.0), c(0.2, 0.0)));
    }

    #[test]
    fn ell_m_examples() {
        let id = DiskMap::identity(4);
        assert!(id.ell_vector(8).unwrap().sup_norm() < 1e-15);
        assert!(id.m_vector(8).unwrap().sup_norm() < 1e-15);
        let s = DiskMap::scaling(4, c(0.5, 0.7)).unwrap();
        let l = s.ell_vector(8).unwrap();
        assert!((l.constant_mode() - c(0.5, 0.7).ln()).norm() < 1e-14);
        assert!(
            l.sub(&LaurentSeries::constant(8, c(0.5, 0.7).ln()))
                .sup_norm()
                < 1e-14
        );
        let t = c(0.3, -0.2);
        let m = DiskMap::mobius(60, t);
        let l = m.ell_vector(16).unwrap();
        for k in 1..=16 {
            assert!((l.coeff(k) - t.powi(k as i32) / k as f64).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_spectral() {
        let m = DiskMap::new(vec![c(1.0, 0.1), c(0.2, -0.1), c(0.05, 0.02)]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: DiskMap = serde_json::from_str(&json).unwrap();
        let deriv = back.boundary_trace().derivative_z();
        let g = 32;
        let z = spectral::grid_points(g);
        for (zz, d) in z.iter().zip(back.deriv_samples(g)) {
            assert!((deriv.eval(*zz) - d).norm() < 1e-12);
        }
        let cd = CoDiskMap::new(c(1.0, 0.0), c(0.1, 0.0), vec![c(0.2, 0.1), c(0.0, 0.05)]).unwrap();
        let json = serde_json::to_string(&cd).unwrap();
        assert!(json.contains("\"codisk\""));
        let back: CoDiskMap = serde_json::from_str(&json).unwrap();
        let deriv = back.boundary_trace().derivative_z();
        for (zz, d) in z.iter().zip(back.deriv_samples(g)) {
            assert!((deriv.eval(*zz) - d).norm() < 1e-12);
            assert!((back.deriv(*zz) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn star_examples() {
        let id = DiskMap::identity(4).star(4).unwrap();
        assert!((id.b1() - c(1.0, 0.0)).norm() < 1e-15 && id.b0().norm() < 1e-15);
        let cc = c(0.8, 0.3);
        let s = DiskMap::scaling(4, cc).unwrap().star(4).unwrap();
        assert!((s.b1() - cc.conj().inv()).norm() < 1e-15);
        assert!(s.tail().iter().all(|t| t.norm() < 1e-15));
    }

    #[test]
    fn validator_accepts_mobius_and_rejects_critical_point() {
        for t in [c(0.5, 0.0), c(0.0, 0.5), c(-0.3, 0.3), c(0.1, 0.0)] {
            DiskMap::mobius(80, t).validate().unwrap();
        }
        let bad = DiskMap::new(vec![c(1.0, 0.0), c(1.0 / 1.9, 0.0)])
            .unwrap()
            .scaled(c(2.0, 0.0));
        assert!(matches!(bad.validate(), Err(Error::NotUnivalent(_))));
        let cd = CoDiskMap::new(c(1.0, 0.0), c(0.0, 0.0), vec![c(0.2, 0.0)]).unwrap();
        cd.validate().unwrap();
        let cd_bad = CoDiskMap::new(c(1.0, 0.0), c(0.0, 0.0), vec![c(1.2, 0.0)]).unwrap();
        assert!(cd_bad.validate().is_err());
    }

    fn arb_disk() -> impl Strategy<Value = DiskMap> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6).prop_map(|v| {
            let mut co = vec![c(1.0, 0.0)];
            for (k, (a, b)) in v.into_iter().enumerate() {
                co.push(c(a, b) * 0.15 * 0.3f64.powi(k as i32));
            }
            DiskMap::new(co).unwrap()
        })
    }

    proptest! {
        #[test]
        fn star_is_involution(m in arb_disk()) {
            let back = m.star(60).unwrap().star(60).unwrap();
            for k in 1..=m.n() {
                prop_assert!((back.coeff(k) - m.coeff(k)).norm() < 1e-10);
            }
        }

        #[test]
        fn rotation_shifts_ell_phases(m in arb_disk(), th in -1.0f64..1.0) {
            let l = m.ell_vector(12).unwrap();
            let lr = m.rotate_argument(th).ell_vector(12).unwrap();
            for k in 1..=12i64 {
                let e = C64::from_polar(1.0, k as f64 * th);
                prop_assert!((lr.coeff(k) - l.coeff(k) * e).norm() < 1e-12);
            }
        }
    }
}
