//! Grunsky-type operator blocks in the orthonormal basis e_k = z^{±k}/√k.
//!
//! `grunsky_k`, `grunsky_m`, `transfer_l` and `transfer_lt` return the
//! operators themselves (f ↦ F₁∘p and the Faber transfers). The blocks that
//! enter Gaussian kernels are obtained with [`kernel_k`], [`kernel_m`],
//! [`kernel_l`] and [`kernel_lt`].

use crate::circle_series::{bracket, CircleDiffeo, LaurentSeries};
use crate::linalg::{self, CMat};
use crate::spectral::{self, analyze, grid_for};
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::{par, Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Subspace tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "V+")]
    VPlus,
    #[serde(rename = "V-")]
    VMinus,
}

/// Finite block of an operator between V₊/V₋ in the orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBlock {
    pub matrix: CMat,
    pub domain: Space,
    pub range: Space,
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    rows: usize,
    cols: usize,
    domain: Space,
    range: Space,
    basis: String,
    entries: Vec<C64>,
}

impl Serialize for OperatorBlock {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (r, c) = self.matrix.shape();
        let entries = (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect();
        BlockJson {
            rows: r,
            cols: c,
            domain: self.domain,
            range: self.range,
            basis: "e_k = z^(+-k)/sqrt(k), k = 1..n".into(),
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorBlock {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BlockJson::deserialize(d)?;
        if j.entries.len() != j.rows * j.cols {
            return Err(serde::de::Error::custom("entry count mismatch"));
        }
        Ok(Self {
            matrix: CMat::from_row_slice(j.rows, j.cols, &j.entries),
            domain: j.domain,
            range: j.range,
        })
    }
}

/// Mixed Taylor coefficients C[k][l] (k, l = 1..n) of ln((f(z) − f(w))/(z − w))
/// on the torus; `inside` selects z^k w^l, otherwise z^{−k} w^{−l}.
fn log_kernel_coeffs(
    f: impl Fn(C64) -> C64 + Sync,
    fd: impl Fn(C64) -> C64 + Sync,
    n: usize,
    inside: bool,
    g: usize,
) -> Result<CMat> {
    let z = spectral::grid_points(g);
    let fz: Vec<C64> = z.iter().map(|x| f(*x)).collect();
    let rows: Vec<Vec<C64>> = par::map_range(g, |i| {
        (0..g)
            .map(|j| {
                if i == j {
                    fd(z[i])
                } else {
                    (fz[i] - fz[j]) / (z[i] - z[j])
                }
            })
            .collect()
    });
    let scale = rows.iter().flatten().fold(0.0, |m: f64, v| m.max(v.norm()));
    let mut flat = Vec::with_capacity(g * g);
    for v in rows.into_iter().flatten() {
        if v.norm() <= 1e-12 * scale {
            return Err(Error::Singular(
                "difference quotient vanishes: boundary nearly self-intersects".into(),
            ));
        }
        flat.push(v.ln());
    }
    let c = spectral::analyze2(&flat, g);
    let at =
        |k: i64, l: i64| c[(k.rem_euclid(g as i64) as usize) * g + l.rem_euclid(g as i64) as usize];
    Ok(CMat::from_fn(n, n, |l, k| {
        let (k, l) = (k as i64 + 1, l as i64 + 1);
        let v = if inside { at(k, l) } else { at(-k, -l) };
        v * ((k * l) as f64).sqrt()
    }))
}

fn kernel_grid(n: usize, map_n: usize) -> usize {
    grid_for(n.max(map_n)).max(256)
}

/// Grunsky operator K(p): V₋ → V₊, f ↦ F₁∘p.
pub fn grunsky_k(p: &DiskMap, n: usize) -> Result<OperatorBlock> {
    let m = log_kernel_coeffs(
        |z| p.eval(z),
        |z| p.deriv(z),
        n,
        true,
        kernel_grid(n, p.n()),
    )?;
    Ok(OperatorBlock {
        matrix: m,
        domain: Space::VMinus,
        range: Space::VPlus,
    })
}

/// Grunsky operator M(r): V₊ → V₋ for a co-disk map.
pub fn grunsky_m(r: &CoDiskMap, n: usize) -> Result<OperatorBlock> {
    let m = log_kernel_coeffs(
        |z| r.eval(z),
        |z| r.deriv(z),
        n,
        false,
        kernel_grid(n, r.n()),
    )?;
    Ok(OperatorBlock {
        matrix: m,
        domain: Space::VPlus,
        range: Space::VMinus,
    })
}

/// Kernel block entering N(R): −K(p).
pub fn kernel_k(p: &DiskMap, n: usize) -> Result<CMat> {
    Ok(-grunsky_k(p, n)?.matrix)
}

/// Kernel block entering N(R): −M(r).
pub fn kernel_m(r: &CoDiskMap, n: usize) -> Result<CMat> {
    Ok(-grunsky_m(r, n)?.matrix)
}

/// Fourier coefficients of the powers h(z)^j, j = 1..n, from grid samples.
fn power_coeffs(samples: &[C64], n: usize) -> Vec<Vec<C64>> {
    let mut cur = vec![C64::new(1.0, 0.0); samples.len()];
    (0..n)
        .map(|_| {
            cur.iter_mut().zip(samples).for_each(|(c, s)| *c *= s);
            analyze(&cur)
        })
        .collect()
}

/// Faber transfer: column k is the expansion of z^{sign·k} in powers of
/// `base` (matched on modes of that sign), re-expanded through `target`.
fn faber_transfer(base: &[C64], target: &[C64], n: usize, sign: i64) -> Result<CMat> {
    let pb = power_coeffs(base, n);
    let pt = power_coeffs(target, n);
    let t = CMat::from_fn(n, n, |m, j| spectral::mode(&pb[j], sign * (m as i64 + 1)));
    let beta = linalg::inv(&t)?;
    let raw = CMat::from_fn(n, n, |l, j| spectral::mode(&pt[j], sign * (l as i64 + 1)));
    let vals = raw * beta;
    Ok(CMat::from_fn(n, n, |l, k| {
        vals[(l, k)] * ((l + 1) as f64).sqrt() / ((k + 1) as f64).sqrt()
    }))
}

/// Transfer operator L(r⁺, r₋): V₋ → V₋ of a welding pair.
pub fn transfer_l(plus: &DiskMap, minus: &CoDiskMap, n: usize) -> Result<OperatorBlock> {
    let g = grid_for(2 * n.max(plus.n()).max(minus.n()));
    let inv_plus: Vec<C64> = plus.samples(g).iter().map(|v| v.inv()).collect();
    let inv_minus: Vec<C64> = minus.samples(g).iter().map(|v| v.inv()).collect();
    let m = faber_transfer(&inv_plus, &inv_minus, n, -1)?;
    Ok(OperatorBlock {
        matrix: m,
        domain: Space::VMinus,
        range: Space::VMinus,
    })
}

/// Transfer operator Lᵗ(p₊, p⁻): V₊ → V₊ of a welding pair.
pub fn transfer_lt(plus: &DiskMap, minus: &CoDiskMap, n: usize) -> Result<OperatorBlock> {
    let g = grid_for(2 * n.max(plus.n()).max(minus.n()));
    let m = faber_transfer(&minus.samples(g), &plus.samples(g), n, 1)?;
    Ok(OperatorBlock {
        matrix: m,
        domain: Space::VPlus,
        range: Space::VPlus,
    })
}

/// Kernel block L = transpose of [`transfer_l`].
pub fn kernel_l(plus: &DiskMap, minus: &CoDiskMap, n: usize) -> Result<CMat> {
    Ok(transfer_l(plus, minus, n)?.matrix.transpose())
}

/// Kernel block Lᵗ = transpose of [`transfer_lt`].
pub fn kernel_lt(plus: &DiskMap, minus: &CoDiskMap, n: usize) -> Result<CMat> {
    Ok(transfer_lt(plus, minus, n)?.matrix.transpose())
}

/// Blocks Φ = P₊T(γ)|V₊ and Ψ = P₊T(γ)|V₋ with T(γ)f = f∘γ⁻¹.
pub fn diffeo_blocks(gamma: &CircleDiffeo, n: usize) -> Result<(OperatorBlock, OperatorBlock)> {
    let g = grid_for(2 * n.max(gamma.n()));
    let inv = gamma.inverse_lift_samples(g)?;
    let cols: Vec<(Vec<C64>, Vec<C64>)> = par::map_range(n, |k| {
        let kk = (k + 1) as f64;
        let ep = analyze(
            &inv.iter()
                .map(|&t| C64::from_polar(1.0, kk * t))
                .collect::<Vec<_>>(),
        );
        let em = analyze(
            &inv.iter()
                .map(|&t| C64::from_polar(1.0, -kk * t))
                .collect::<Vec<_>>(),
        );
        let on = |c: &[C64]| {
            (1..=n as i64)
                .map(|l| spectral::mode(c, l) * (l as f64).sqrt() / kk.sqrt())
                .collect()
        };
        (on(&ep), on(&em))
    });
    let phi = CMat::from_fn(n, n, |l, k| cols[k].0[l]);
    let psi = CMat::from_fn(n, n, |l, k| cols[k].1[l]);
    Ok((
        OperatorBlock {
            matrix: phi,
            domain: Space::VPlus,
            range: Space::VPlus,
        },
        OperatorBlock {
            matrix: psi,
            domain: Space::VMinus,
            range: Space::VPlus,
        },
    ))
}

/// Leading n×n blocks of S J Sᵀ − J, S = [[Φ, Ψ], [Ψ̄, Φ̄]], computed with
/// internal size m ≥ n; returns the largest entry.
pub fn symplectic_residual(gamma: &CircleDiffeo, n: usize, m: usize) -> Result<f64> {
    let (phi, psi) = diffeo_blocks(gamma, m)?;
    let (f, p) = (phi.matrix, psi.matrix);
    let (fc, pc) = (linalg::conj(&f), linalg::conj(&p));
    let a = &f * p.transpose() - &p * f.transpose();
    let b = &f * fc.transpose() - &p * pc.transpose() - linalg::eye(m);
    let c = &pc * fc.transpose() - &fc * pc.transpose();
    let lead = |x: &CMat| linalg::max_abs(&x.view((0, 0), (n, n)).into_owned());
    Ok(lead(&a).max(lead(&b)).max(lead(&c)))
}

/// Leading n×n block of an inverse computed at internal size m.
pub fn leading_inverse(a: &CMat, n: usize) -> Result<CMat> {
    Ok(linalg::inv(a)?.view((0, 0), (n, n)).into_owned())
}

/// Apply a block to a series in its domain and return the image series.
pub fn apply_block(block: &OperatorBlock, f: &LaurentSeries) -> LaurentSeries {
    let n = block.matrix.ncols();
    let x: Vec<C64> = match block.domain {
        Space::VPlus => f.on_plus(n),
        Space::VMinus => f.on_minus(n),
    };
    let y = &block.matrix * linalg::CVec::from_vec(x);
    match block.range {
        Space::VPlus => LaurentSeries::from_on_plus(y.as_slice()),
        Space::VMinus => LaurentSeries::from_on_minus(y.as_slice()),
    }
}

/// Blocks of the quadratic form {f₋,Kf₋} + 2{f₊,Lf₋} + {f₊,Mf₊}.
pub struct FormBlocks<'a> {
    pub k: &'a OperatorBlock,
    pub l: &'a OperatorBlock,
    pub m: &'a OperatorBlock,
}

/// {f₋,Kf₋} + 2{f₊,Lf₋} + {f₊,Mf₊}.
pub fn quadratic_form(
    blocks: &FormBlocks,
    f_minus: &LaurentSeries,
    f_plus: &LaurentSeries,
) -> Result<C64> {
    check_support(f_minus, Space::VMinus)?;
    check_support(f_plus, Space::VPlus)?;
    Ok(bracket(f_minus, &apply_block(blocks.k, f_minus))
        + bracket(f_plus, &apply_block(blocks.l, f_minus)) * 2.0
        + bracket(f_plus, &apply_block(blocks.m, f_plus)))
}

/// {f₋, ℓ₁} + {f₊, ℓ₂}.
pub fn linear_pairing(
    f_minus: &LaurentSeries,
    f_plus: &LaurentSeries,
    l1: &LaurentSeries,
    l2: &LaurentSeries,
) -> Result<C64> {
    check_support(f_minus, Space::VMinus)?;
    check_support(f_plus, Space::VPlus)?;
    Ok(bracket(f_minus, l1) + bracket(f_plus, l2))
}

fn check_support(f: &LaurentSeries, space: Space) -> Result<()> {
    let bad = (-(f.n() as i64)..=f.n() as i64).any(|k| {
        let wrong = match space {
            Space::VPlus => k <= 0,
            Space::VMinus => k >= 0,
        };
        wrong && f.coeff(k).norm() > 0.0
    });
    if bad {
        return Err(Error::Domain(format!("series not supported in {space:?}")));
    }
    Ok(())
}
