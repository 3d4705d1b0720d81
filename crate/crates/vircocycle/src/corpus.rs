//! Seeded random instances: band-limited diffeomorphisms and near-identity
//! univalent maps with geometrically decaying coefficients.

use crate::circle_series::{CircleDiffeo, LaurentSeries};
use crate::gauss_fock::GaussianOperator;
use crate::linalg::{self, CMat, CVec};
use crate::univalent_maps::{CoDiskMap, DiskMap};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Coefficient decay ratio of generated maps.
pub const DECAY: f64 = 0.3;

const MAX_TRIES: usize = 64;

/// Deterministic generator seeded from a u64.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Diffeomorphism with `modes` Fourier modes, decaying like 1/k², scaled so
/// that sup|u| equals `bound` (identity when bound = 0).
pub fn random_diffeo(rng: &mut ChaCha8Rng, modes: usize, bound: f64) -> Result<CircleDiffeo> {
    let mut u = LaurentSeries::zeros(modes);
    for k in 1..=modes as i64 {
        let c = gauss(rng) / (k * k) as f64;
        u.set(k, c);
        u.set(-k, c.conj());
    }
    let sup = u.sup_norm();
    if bound == 0.0 || sup == 0.0 {
        return Ok(CircleDiffeo::identity(modes));
    }
    CircleDiffeo::from_displacement(u.scale(C64::new(bound / sup, 0.0)))
}

/// Disk map z + … with a₁ = 1 + O(eps) and a_k ~ eps·0.3^{k−1}.
pub fn random_disk_map(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> Result<DiskMap> {
    for _ in 0..MAX_TRIES {
        let mut c = vec![C64::new(1.0, 0.0) + gauss(rng) * (eps * DECAY)];
        for k in 2..=n {
            c.push(gauss(rng) * (eps * DECAY.powi(k as i32 - 1)));
        }
        let m = DiskMap::new(c)?;
        if m.validate().is_ok() {
            return Ok(m);
        }
    }
    Err(Error::Inadmissible(
        "rejection sampling exhausted for disk maps".into(),
    ))
}

/// Co-disk map b₁z + b₀ + Σ b₋ₖ z^{−k} with b₁ = 1 + O(eps), b₋ₖ ~ eps·0.3^{k+1}.
pub fn random_codisk_map(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> Result<CoDiskMap> {
    for _ in 0..MAX_TRIES {
        let b1 = C64::new(1.0, 0.0) + gauss(rng) * (eps * DECAY);
        let b0 = gauss(rng) * (eps * DECAY);
        let tail = (1..=n)
            .map(|k| gauss(rng) * (eps * DECAY.powi(k as i32 + 1)))
            .collect();
        let m = CoDiskMap::new(b1, b0, tail)?;
        if m.validate().is_ok() {
            return Ok(m);
        }
    }
    Err(Error::Inadmissible(
        "rejection sampling exhausted for co-disk maps".into(),
    ))
}

/// Gaussian operator in n variables with ‖K‖ = ‖M‖ = `quad`, ‖L‖ = `mix`,
/// |λ| = |μ| = `lin` and unit prefactor.
pub fn random_gaussian_operator(
    rng: &mut ChaCha8Rng,
    n: usize,
    quad: f64,
    mix: f64,
    lin: f64,
) -> Result<GaussianOperator> {
    let mut mat = |sym: bool, norm: f64| {
        let a = CMat::from_fn(n, n, |_, _| gauss(rng));
        let a = if sym { &a + a.transpose() } else { a };
        let s = linalg::spectral_norm(&a);
        a * C64::new(norm / s, 0.0)
    };
    let (k, l, m) = (mat(true, quad), mat(false, mix), mat(true, quad));
    let mut vec = |norm: f64| {
        let v = CVec::from_fn(n, |_, _| gauss(rng));
        let s = v.norm();
        v * C64::new(norm / s, 0.0)
    };
    let (lam, mu) = (vec(lin), vec(lin));
    GaussianOperator::new(k, l, m, lam, mu)
}

/// One (r₋, p₊) pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapPair {
    pub r_minus: CoDiskMap,
    pub p_plus: DiskMap,
}

/// Generated instance files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub bound: f64,
    pub diffeos: Vec<CircleDiffeo>,
    pub pairs: Vec<MapPair>,
}

/// Default map amplitude; chosen so that composite welding diffeomorphisms
/// of generated pairs stay inside the default admissibility gate.
pub const MAP_EPS: f64 = 0.12;
/// Seed of the shipped corpus.
pub const DEFAULT_SEED: u64 = 7;
/// Number of coefficients of generated maps.
pub const MAP_DEGREE: usize = 6;
/// Number of Fourier modes of generated diffeomorphisms.
pub const DIFFEO_MODES: usize = 4;

/// `count` diffeomorphisms with sup|u| = bound and `count` map pairs with
/// amplitude min(4·bound, MAP_EPS).
pub fn generate(seed: u64, count: usize, bound: f64) -> Result<Corpus> {
    let mut r = rng(seed);
    let diffeos = (0..count)
        .map(|_| random_diffeo(&mut r, DIFFEO_MODES, bound))
        .collect::<Result<_>>()?;
    let eps = (4.0 * bound).min(MAP_EPS);
    let pairs = (0..count)
        .map(|_| {
            Ok(MapPair {
                r_minus: random_codisk_map(&mut r, MAP_DEGREE, eps)?,
                p_plus: random_disk_map(&mut r, MAP_DEGREE, eps)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Corpus {
        seed,
        bound,
        diffeos,
        pairs,
    })
}

/// The shipped map-pair corpus used by the cocycle checks.
pub fn map_pairs(seed: u64, count: usize) -> Result<Vec<MapPair>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            Ok(MapPair {
                r_minus: random_codisk_map(&mut r, MAP_DEGREE, MAP_EPS)?,
                p_plus: random_disk_map(&mut r, MAP_DEGREE, MAP_EPS)?,
            })
        })
        .collect()
}

/// Seeded diffeomorphisms with sup|u| = bound.
pub fn diffeos(seed: u64, count: usize, bound: f64) -> Result<Vec<CircleDiffeo>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_diffeo(&mut r, DIFFEO_MODES, bound))
        .collect()
}

/// Seeded disk maps.
pub fn disk_maps(seed: u64, count: usize, eps: f64) -> Result<Vec<DiskMap>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_disk_map(&mut r, MAP_DEGREE, eps))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = serde_json::to_string(&generate(7, 3, 0.05).unwrap()).unwrap();
        let b = serde_json::to_string(&generate(7, 3, 0.05).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_bound_gives_identity() {
        let c = generate(1, 4, 0.0).unwrap();
        assert!(c.diffeos.iter().all(|d| d.displacement().sup_norm() == 0.0));
        assert!(c
            .pairs
            .iter()
            .all(|p| p.p_plus.coeffs().iter().skip(1).all(|x| x.norm() == 0.0)));
    }

    #[test]
    fn generated_instances_pass_validators() {
        let c = generate(3, 20, 0.1).unwrap();
        for d in &c.diffeos {
            assert!((d.displacement().sup_norm() - 0.1).abs() < 1e-9);
            assert!(d.oscillation() <= 0.2 + 1e-12);
        }
        for p in &c.pairs {
            p.p_plus.validate().unwrap();
            p.r_minus.validate().unwrap();
        }
    }

    #[test]
    fn gaussian_operators_have_requested_norms() {
        let mut r = rng(5);
        let g = random_gaussian_operator(&mut r, 3, 0.3, 0.5, 0.2).unwrap();
        assert!((&g.k - g.k.transpose()).norm() < 1e-15);
        assert!((linalg::spectral_norm(&g.m) - 0.3).abs() < 1e-12);
        assert!((linalg::spectral_norm(&g.l) - 0.5).abs() < 1e-12);
        assert!((g.lam.norm() - 0.2).abs() < 1e-12);
        assert!(g.is_bounded());
    }
}
