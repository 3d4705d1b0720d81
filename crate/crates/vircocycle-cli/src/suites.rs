//! Verification suites behind `verify`, one entry per acceptance criterion,
//! and the per-instance cocycle check shared with the `cocycle` command.

use crate::commands::{GLUING_TOL, GRAM_TOL, RELATION_TOL, ROUND_TRIP_TOL};
use crate::Settings;
use clap::{Args, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};
use vircocycle::circle_series::CircleDiffeo;
use vircocycle::cocycle::{
    self, CocycleInstance, ColumnResiduals, DetLink, Drift, InstanceResiduals, LInverseResiduals,
    TheoremReport,
};
use vircocycle::corpus;
use vircocycle::gauss_fock::{gauss_product, TruncatedFock};
use vircocycle::grunsky;
use vircocycle::kernel_rkhs::{KernelPoint, KernelTable};
use vircocycle::linalg;
use vircocycle::par;
use vircocycle::univalent_maps::{CoDiskMap, DiskMap};
use vircocycle::virasoro::{self, GradedPolySpace};
use vircocycle::welding;
use vircocycle::{Result as LibResult, C64};

pub const DRIFT_TOL: f64 = 1e-6;
pub const ROUTE_TOL: f64 = 1e-6;
pub const CROSS_TOL: f64 = 1e-7;
pub const COLUMN_TOL: f64 = 1e-6;
pub const L_INVERSE_TOL: f64 = 1e-7;
pub const DET_TOL: f64 = 1e-6;
pub const FIT_TOL: f64 = 1e-6;
pub const GAUGE_TOL: f64 = 1e-7;
pub const IDENTITY_TOL: f64 = 1e-5;
pub const CLASSICAL_TOL: f64 = 1e-8;
pub const PRODUCT_TOL: f64 = 1e-7;
pub const MOBIUS_TOL: f64 = 1e-12;
pub const SERIES_TOL: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Virasoro,
    Discrete,
    Welding,
    Gaussian,
    Grunsky,
    Cocycle,
    Identity,
    Classical,
    Gram,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suites to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<Suite>,
    /// Map pairs in the cocycle corpus.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
}

/// Everything checked on one (r₋, p₊) instance.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceCheck {
    pub n: usize,
    pub solver: InstanceResiduals,
    pub theorem: TheoremReport,
    /// Fit residual of log κ over the 4×4 grid in [0, 1]².
    pub fit_residual: f64,
    pub route_difference: f64,
    pub cross_term: f64,
    pub columns: ColumnResiduals,
    pub l_inverse: LInverseResiduals,
    pub det_link: DetLink,
    pub gauge_change: f64,
    pub convergence: Drift,
    pub failures: Vec<String>,
    pub passed: bool,
}

fn square_grid(values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .flat_map(|&a| values.iter().map(move |&b| (a, b)))
        .collect()
}

/// NaN residuals fail.
fn within(x: f64, tol: f64) -> bool {
    x <= tol
}

const GAUGES: [(f64, f64); 3] = [(0.4, 0.0), (0.0, -0.7), (1.3, 0.9)];

pub fn check_instance(
    r: &CoDiskMap,
    p: &DiskMap,
    grid: &[f64],
    s: &Settings,
) -> LibResult<InstanceCheck> {
    let inst = CocycleInstance::new(r, p, s.n, &s.weld)?;
    let theorem = cocycle::verify_theorem(&inst, &square_grid(grid), s.tol)?;
    let fit = cocycle::verify_theorem(
        &inst,
        &square_grid(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]),
        s.tol,
    )?;
    let route_difference = (theorem.lambda_integral - theorem.lambda_matrix)
        .norm()
        .max((theorem.mu_integral - theorem.mu_matrix).norm());
    let cross_term = cocycle::verify_cross_term(&inst)?;
    let columns = cocycle::verify_columns(&inst)?;
    let l_inverse = cocycle::verify_l_inverse(&inst)?;
    let det_link = cocycle::det_link(&inst, theorem.mu_integral)?;
    let mut gauge_change: f64 = 0.0;
    for (tr, tp) in GAUGES {
        let (l, m) = cocycle::lambda_mu_integral(&inst.with_gauge(tr, tp, &s.weld)?)?;
        gauge_change = gauge_change.max(
            (l - theorem.lambda_integral)
                .norm()
                .max((m - theorem.mu_integral).norm()),
        );
    }
    let convergence = cocycle::drift(r, p, s.n, &s.weld)?;
    let checks = [
        ("theorem", theorem.max_rel_residual, s.tol),
        ("drift", convergence.drift, DRIFT_TOL),
        ("routes", route_difference, ROUTE_TOL),
        ("cross term", cross_term, CROSS_TOL),
        ("columns", columns.plus.max(columns.minus), COLUMN_TOL),
        (
            "L inverse",
            l_inverse.r_side.max(l_inverse.p_side),
            L_INVERSE_TOL,
        ),
        ("det link", det_link.rel_residual, DET_TOL),
        ("fit", fit.fit_residual, FIT_TOL),
        ("gauge", gauge_change, GAUGE_TOL),
    ];
    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !within(c.1, c.2))
        .map(|c| format!("{}: {:.3e} > {:.1e}", c.0, c.1, c.2))
        .collect();
    Ok(InstanceCheck {
        n: s.n,
        solver: inst.residuals,
        passed: failures.is_empty(),
        fit_residual: fit.fit_residual,
        theorem,
        route_difference,
        cross_term,
        columns,
        l_inverse,
        det_link,
        gauge_change,
        convergence,
        failures,
    })
}

pub fn seeded_points(
    seed: u64,
    count: usize,
    bound: f64,
    s: &Settings,
) -> Result<Vec<KernelPoint>, String> {
    corpus::diffeos(seed, count, bound)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|g| KernelPoint::from_diffeo(g, s.n, &s.weld).map_err(|e| e.to_string()))
        .collect()
}

fn entry(criterion: u32, name: &str, passed: bool, metrics: Value) -> Value {
    json!({ "criterion": criterion, "name": name, "passed": passed, "metrics": metrics })
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn virasoro_suite() -> LibResult<Vec<Value>> {
    let space = GradedPolySpace::new(10);
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.7, 0.3)] {
        let sweep = virasoro::relation_sweep(4, C64::new(a, 0.0), C64::new(b, 0.0), &space)?;
        worst = worst.max(max_of(sweep.iter().map(|r| r.residual)));
    }
    Ok(vec![entry(
        1,
        "virasoro relations",
        worst <= RELATION_TOL,
        json!({ "max_residual": worst }),
    )])
}

fn discrete_suite() -> LibResult<Vec<Value>> {
    let t = virasoro::discrete_series(3)?;
    let mut hs: Vec<Ratio<i64>> = t.iter().map(|p| p.h).collect();
    hs.sort();
    hs.dedup();
    let ok = hs == [Ratio::new(0, 1), Ratio::new(1, 16), Ratio::new(1, 2)]
        && t.iter().all(|p| p.c == Ratio::new(1, 2));
    let hs: Vec<String> = hs.iter().map(|h| h.to_string()).collect();
    Ok(vec![entry(
        2,
        "discrete series table",
        ok,
        json!({ "h": hs, "c": "1/2" }),
    )])
}

fn welding_suite(seed: u64, s: &Settings) -> LibResult<Vec<Value>> {
    let gammas = corpus::diffeos(seed, 20, 0.05)?;
    let rows = par::map(&gammas, |g| -> LibResult<(f64, f64)> {
        let pair = welding::weld(g, 64, &s.weld)?;
        let back = welding::induced_diffeo(&pair.plus, &pair.minus, 64)?;
        Ok((back.distance(g), pair.residual))
    })
    .into_iter()
    .collect::<LibResult<Vec<_>>>()?;
    let rt = max_of(rows.iter().map(|r| r.0));
    let res = max_of(rows.iter().map(|r| r.1));
    Ok(vec![entry(
        3,
        "welding round trip",
        rt <= ROUND_TRIP_TOL && res <= GLUING_TOL,
        json!({ "max_round_trip": rt, "max_residual": res }),
    )])
}

/// Product against kernel composition in the truncated Fock space with
/// degree ≤ 16 on each side.
fn gaussian_suite(seed: u64) -> LibResult<Vec<Value>> {
    let space = TruncatedFock::total_degree(2, 16);
    let mut rng = corpus::rng(seed);
    let mut worst: f64 = 0.0;
    let mut sigma: f64 = 0.0;
    for _ in 0..10 {
        let a = corpus::random_gaussian_operator(&mut rng, 2, 0.3, 0.5, 0.3)?;
        let b = corpus::random_gaussian_operator(&mut rng, 2, 0.3, 0.5, 0.3)?;
        let ka = space.gaussian_kernel(&a)?;
        let kb = space.gaussian_kernel(&b)?;
        let kc = space.gaussian_kernel(&gauss_product(&a, &b)?)?;
        let composed = space.action_matrix(&ka) * &kb;
        for (i, x) in space.basis().iter().enumerate() {
            for (j, y) in space.basis().iter().enumerate() {
                if space.grade(x) + space.grade(y) <= 16 {
                    worst = worst.max((composed[(i, j)] - kc[(i, j)]).norm());
                }
            }
        }
        sigma = sigma.max((composed[(0, 0)] - kc[(0, 0)]).norm());
    }
    Ok(vec![entry(
        4,
        "gaussian product",
        worst <= PRODUCT_TOL && sigma <= PRODUCT_TOL,
        json!({ "max_coefficient_error": worst, "sigma_error": sigma }),
    )])
}

fn grunsky_suite() -> LibResult<Vec<Value>> {
    let mut mob: f64 = 0.0;
    for t in [C64::new(0.1, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.5)] {
        mob = mob.max(linalg::max_abs(
            &grunsky::grunsky_k(&DiskMap::mobius(80, t), 8)?.matrix,
        ));
    }
    let t = 0.1_f64;
    let k = grunsky::grunsky_k(
        &DiskMap::new(vec![C64::new(1.0, 0.0), C64::new(t, 0.0)])?,
        8,
    )?
    .matrix;
    let mut series: f64 = 0.0;
    for a in 1..=8u64 {
        for b in 1..=8u64 {
            let m = a + b;
            let binom = (1..=a).fold(1.0, |acc, i| acc * (m - a + i) as f64 / i as f64);
            let want = (-1f64).powi(m as i32 + 1) * t.powi(m as i32) * binom / m as f64
                * ((a * b) as f64).sqrt();
            series =
                series.max((k[((b - 1) as usize, (a - 1) as usize)] - C64::new(want, 0.0)).norm());
        }
    }
    Ok(vec![entry(
        5,
        "grunsky oracles",
        mob <= MOBIUS_TOL && series <= SERIES_TOL,
        json!({ "mobius_max": mob, "series_error": series }),
    )])
}

fn cocycle_suite(count: usize, s: &Settings) -> LibResult<Vec<Value>> {
    let pairs = corpus::map_pairs(s.seed, count)?;
    let checks = par::map(&pairs, |p| {
        check_instance(&p.r_minus, &p.p_plus, &[0.0, 0.5, 1.0], s)
    })
    .into_iter()
    .collect::<LibResult<Vec<_>>>()?;
    let m = |f: &dyn Fn(&InstanceCheck) -> f64| max_of(checks.iter().map(f));
    let theorem = m(&|c| c.theorem.max_rel_residual);
    let drift = m(&|c| c.convergence.drift);
    let route = m(&|c| c.route_difference);
    let cross = m(&|c| c.cross_term);
    let cols = m(&|c| c.columns.plus.max(c.columns.minus));
    let linv = m(&|c| c.l_inverse.r_side.max(c.l_inverse.p_side));
    let det = m(&|c| c.det_link.rel_residual);
    let fit = m(&|c| c.fit_residual);
    let gauge = max_of(checks.iter().take(5).map(|c| c.gauge_change));
    Ok(vec![
        entry(
            6,
            "theorem",
            theorem <= s.tol && drift <= DRIFT_TOL,
            json!({ "instances": count, "max_rel_residual": theorem, "max_drift": drift }),
        ),
        entry(
            7,
            "route equivalence",
            route <= ROUTE_TOL && cross <= CROSS_TOL && cols <= COLUMN_TOL && linv <= L_INVERSE_TOL,
            json!({ "routes": route, "cross_term": cross, "columns": cols, "l_inverse": linv }),
        ),
        entry(
            8,
            "det link",
            det <= DET_TOL,
            json!({ "max_rel_residual": det }),
        ),
        entry(
            9,
            "exp-affine structure",
            fit <= FIT_TOL,
            json!({ "max_fit_residual": fit }),
        ),
        entry(
            13,
            "gauge independence",
            gauge <= GAUGE_TOL,
            json!({ "max_change": gauge }),
        ),
    ])
}

fn identity_suite(s: &Settings) -> LibResult<Vec<Value>> {
    let triples: Vec<Vec<CircleDiffeo>> = (0..10)
        .map(|i| corpus::diffeos(s.seed + 100 + i, 3, 0.05))
        .collect::<LibResult<_>>()?;
    let res = par::map(&triples, |g| -> LibResult<f64> {
        let mut w: f64 = 0.0;
        for (h, c) in [(0.3, 1.7), (1.0, 2.0)] {
            w = w.max(cocycle::cocycle_identity(
                &g[0], &g[1], &g[2], h, c, s.n, &s.weld,
            )?);
        }
        Ok(w)
    })
    .into_iter()
    .collect::<LibResult<Vec<_>>>()?;
    let worst = max_of(res);
    Ok(vec![entry(
        10,
        "projective cocycle identity",
        worst <= IDENTITY_TOL,
        json!({ "max_rel_residual": worst }),
    )])
}

fn classical_suite(s: &Settings) -> LibResult<Vec<Value>> {
    let (mut bott, mut wind): (f64, f64) = (0.0, 0.0);
    for i in 0..10 {
        let g = corpus::diffeos(s.seed + 200 + i, 3, 0.1)?;
        let (b, w) = cocycle::classical_cocycle_residuals(&g[0], &g[1], &g[2])?;
        bott = bott.max(b);
        wind = wind.max(w);
    }
    Ok(vec![entry(
        11,
        "bott and winding cocycles",
        bott <= CLASSICAL_TOL && wind <= CLASSICAL_TOL,
        json!({ "bott": bott, "winding": wind }),
    )])
}

fn gram_suite(s: &Settings) -> Result<Vec<Value>, String> {
    let points = seeded_points(s.seed + 300, 8, 0.05, s)?;
    let table = KernelTable::new(&points, s.n, &s.weld).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut rows = vec![];
    for (h, c) in [(0.3, 1.7), (1.0, 2.0)] {
        let g = table.gram(h, c);
        ok &= g.is_psd(GRAM_TOL) && g.hermitian_defect <= GRAM_TOL;
        rows.push(json!({ "h": h, "c": c, "min_eigenvalue": g.min_eigenvalue, "trace": g.trace, "hermitian_defect": g.hermitian_defect }));
    }
    Ok(vec![entry(12, "kernel positivity", ok, json!(rows))])
}

pub fn verify(a: &VerifyArgs, s: &Settings) -> Result<(Value, bool), String> {
    let all = a.suite.contains(&Suite::All);
    let on = |x: Suite| all || a.suite.contains(&x);
    let count = s.campaign.count.unwrap_or(a.count);
    let e = |r: LibResult<Vec<Value>>| r.map_err(|e| e.to_string());
    let mut entries: Vec<Value> = vec![];
    if on(Suite::Virasoro) {
        entries.extend(e(virasoro_suite())?);
    }
    if on(Suite::Discrete) {
        entries.extend(e(discrete_suite())?);
    }
    if on(Suite::Welding) {
        entries.extend(e(welding_suite(s.seed, s))?);
    }
    if on(Suite::Gaussian) {
        entries.extend(e(gaussian_suite(s.seed))?);
    }
    if on(Suite::Grunsky) {
        entries.extend(e(grunsky_suite())?);
    }
    if on(Suite::Cocycle) && count > 0 {
        entries.extend(e(cocycle_suite(count, s))?);
    }
    if on(Suite::Identity) {
        entries.extend(e(identity_suite(s))?);
    }
    if on(Suite::Classical) {
        entries.extend(e(classical_suite(s))?);
    }
    if on(Suite::Gram) {
        entries.extend(gram_suite(s)?);
    }
    entries.sort_by_key(|v| v["criterion"].as_u64());
    let ok = entries.iter().all(|v| v["passed"].as_bool() == Some(true));
    Ok((
        json!({ "seed": s.seed, "n": s.n, "criteria": entries, "passed": ok }),
        ok,
    ))
}
