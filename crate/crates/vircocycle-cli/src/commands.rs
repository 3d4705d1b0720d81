use crate::suites::{self, InstanceCheck};
use crate::{read_json, Settings};
use clap::Args;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use vircocycle::circle_series::CircleDiffeo;
use vircocycle::cocycle::{self, CocycleInstance};
use vircocycle::corpus;
use vircocycle::kernel_rkhs::{KernelPoint, KernelTable};
use vircocycle::par;
use vircocycle::univalent_maps::{CoDiskMap, DiskMap};
use vircocycle::virasoro::{self, GradedPolySpace};
use vircocycle::welding;
use vircocycle::C64;

type Outcome = Result<(Value, bool), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of diffeomorphisms and of map pairs.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Sup-norm of the generated displacements.
    #[arg(long, default_value_t = 0.05)]
    pub bound: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gen(a: &GenArgs, s: &Settings) -> Outcome {
    if a.bound > s.weld.max_displacement {
        return Err(format!(
            "bound {} exceeds the admissibility gate {}",
            a.bound, s.weld.max_displacement
        ));
    }
    let count = s.campaign.count.unwrap_or(a.count);
    let c = corpus::generate(s.seed, count, a.bound).map_err(err)?;
    std::fs::create_dir_all(&a.out).map_err(err)?;
    let mut files = vec![];
    let mut put = |name: String, v: &dyn erased::Json| -> Result<(), String> {
        let p = a.out.join(&name);
        v.write(&p)?;
        files.push(name);
        Ok(())
    };
    put("corpus.json".into(), &c)?;
    for (i, g) in c.diffeos.iter().enumerate() {
        put(format!("diffeo_{i:03}.json"), g)?;
        let pt = KernelPoint::from_diffeo(g, s.n, &s.weld).map_err(err)?;
        put(format!("point_{i:03}.json"), &pt.map)?;
    }
    for (i, p) in c.pairs.iter().enumerate() {
        put(format!("r_minus_{i:03}.json"), &p.r_minus)?;
        put(format!("p_plus_{i:03}.json"), &p.p_plus)?;
    }
    Ok((
        json!({ "seed": s.seed, "count": count, "bound": a.bound, "files": files }),
        true,
    ))
}

mod erased {
    use serde::Serialize;
    use std::path::Path;

    /// Object-safe JSON writer.
    pub trait Json {
        fn write(&self, path: &Path) -> Result<(), String>;
    }

    impl<T: Serialize> Json for T {
        fn write(&self, path: &Path) -> Result<(), String> {
            crate::write_json(path, self)
        }
    }
}

#[derive(Args, Debug)]
pub struct WeldArgs {
    /// Diffeomorphism file; without it the seeded campaign runs.
    #[arg(long)]
    pub diffeo: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 0.05)]
    pub bound: f64,
}

/// Round-trip tolerance of induced diffeomorphisms.
pub const ROUND_TRIP_TOL: f64 = 1e-8;
/// Gluing residual bound of the round-trip campaign.
pub const GLUING_TOL: f64 = 1e-9;

fn round_trip(g: &CircleDiffeo, s: &Settings) -> Result<Value, String> {
    let pair = welding::weld(g, s.n, &s.weld).map_err(err)?;
    let back = welding::induced_diffeo(&pair.plus, &pair.minus, s.n).map_err(err)?;
    Ok(json!({
        "residual": pair.residual,
        "round_trip": back.distance(g),
        "report": pair.report,
        "plus": pair.plus,
        "minus": pair.minus,
    }))
}

pub fn weld(a: &WeldArgs, s: &Settings) -> Outcome {
    if let Some(p) = &a.diffeo {
        let g: CircleDiffeo = read_json(p)?;
        let mut r = round_trip(&g, s)?;
        let ok = r["round_trip"].as_f64().unwrap_or(f64::INFINITY) <= ROUND_TRIP_TOL;
        r["passed"] = ok.into();
        return Ok((r, ok));
    }
    let count = s.campaign.count.unwrap_or(a.count);
    let gammas = corpus::diffeos(s.seed, count, a.bound).map_err(err)?;
    let rows: Vec<Value> = par::map(&gammas, |g| {
        round_trip(g, s).map(|mut r| {
            if let Some(o) = r.as_object_mut() {
                o.remove("plus");
                o.remove("minus");
            }
            r
        })
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let max = |k: &str| {
        rows.iter()
            .filter_map(|r| r[k].as_f64())
            .fold(0.0, f64::max)
    };
    let (rt, res) = (max("round_trip"), max("residual"));
    let ok = rt <= ROUND_TRIP_TOL && res <= GLUING_TOL;
    Ok((
        json!({
            "seed": s.seed, "n": s.n, "count": count, "bound": a.bound,
            "max_round_trip": rt, "max_residual": res, "passed": ok, "instances": rows,
        }),
        ok,
    ))
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    /// Co-disk map file r₋.
    #[arg(long)]
    pub r_minus: Option<PathBuf>,
    /// Disk map file p₊.
    #[arg(long)]
    pub p_plus: Option<PathBuf>,
    /// Index into the seeded corpus when no files are given.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

impl InstanceArgs {
    fn load(&self, s: &Settings) -> Result<(CoDiskMap, DiskMap), String> {
        match (&self.r_minus, &self.p_plus) {
            (Some(r), Some(p)) => Ok((read_json(r)?, read_json(p)?)),
            (None, None) => {
                let mut pairs = corpus::map_pairs(s.seed, self.index + 1).map_err(err)?;
                let p = pairs.swap_remove(self.index);
                Ok((p.r_minus, p.p_plus))
            }
            _ => Err("give both --r-minus and --p-plus, or neither".into()),
        }
    }
}

#[derive(Args, Debug)]
pub struct CocycleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Values taken by both α and β; the grid is their square.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub alpha_beta_grid: Vec<f64>,
}

pub fn cocycle(a: &CocycleArgs, s: &Settings) -> Outcome {
    let (r, p) = a.instance.load(s)?;
    let grid = s
        .campaign
        .grid
        .clone()
        .unwrap_or_else(|| a.alpha_beta_grid.clone());
    let check: InstanceCheck = suites::check_instance(&r, &p, &grid, s).map_err(err)?;
    let ok = check.passed;
    Ok((serde_json::to_value(check).map_err(err)?, ok))
}

#[derive(Args, Debug)]
pub struct VirasoroArgs {
    /// Energy cutoff E of the graded space.
    #[arg(long, default_value_t = 10)]
    pub cutoff: usize,
    /// Largest |n|, |m| swept.
    #[arg(long, default_value_t = 4)]
    pub bound: i64,
    /// α values, paired with --beta.
    #[arg(long, value_delimiter = ',', default_value = "0,1,0.7")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0,0.3")]
    pub beta: Vec<f64>,
}

/// Residual bound of the relation sweep.
pub const RELATION_TOL: f64 = 1e-8;

pub fn virasoro_check(a: &VirasoroArgs, _s: &Settings) -> Outcome {
    if a.alpha.len() != a.beta.len() {
        return Err("--alpha and --beta need the same number of values".into());
    }
    let space = GradedPolySpace::new(a.cutoff);
    let mut rows = vec![];
    let mut worst: f64 = 0.0;
    for (&al, &be) in a.alpha.iter().zip(&a.beta) {
        let sweep = virasoro::relation_sweep(a.bound, C64::new(al, 0.0), C64::new(be, 0.0), &space)
            .map_err(err)?;
        let m = sweep.iter().map(|r| r.residual).fold(0.0, f64::max);
        worst = worst.max(m);
        rows.push(json!({ "alpha": al, "beta": be, "max_residual": m, "relations": sweep }));
    }
    let ok = worst <= RELATION_TOL;
    Ok((
        json!({ "cutoff": a.cutoff, "dim": space.dim(), "bound": a.bound, "max_residual": worst, "passed": ok, "sweeps": rows }),
        ok,
    ))
}

#[derive(Args, Debug)]
pub struct KacArgs {
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Print the discrete-series table at this p instead.
    #[arg(long)]
    pub p: Option<i64>,
    /// Largest α, β searched for reducibility.
    #[arg(long, default_value_t = 6)]
    pub bound: i64,
}

pub fn kac(a: &KacArgs) -> Outcome {
    if let Some(p) = a.p {
        let table = virasoro::discrete_series(p).map_err(err)?;
        let rows: Vec<Value> = table
            .iter()
            .map(|t| json!({ "alpha": t.alpha, "beta": t.beta, "h": t.h.to_string(), "c": t.c.to_string() }))
            .collect();
        let mut hs: Vec<String> = table.iter().map(|t| t.h.to_string()).collect();
        hs.sort();
        hs.dedup();
        return Ok((json!({ "p": p, "table": rows, "distinct_h": hs }), true));
    }
    let (Some(h), Some(c)) = (a.h, a.c) else {
        return Err("give --h and --c, or --p".into());
    };
    let reducible = virasoro::kac_reducible(C64::new(h, 0.0), C64::new(c, 0.0), a.bound);
    Ok((
        json!({ "h": h, "c": c, "class": virasoro::unitarity_class(h, c), "reducible_pairs": reducible }),
        true,
    ))
}

#[derive(Args, Debug)]
pub struct GramArgs {
    /// Directory of point_*.json disk maps; seeded points without it.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, default_value_t = 0.05)]
    pub bound: f64,
    /// h values, paired with --c.
    #[arg(long, value_delimiter = ',', default_value = "0.3,1")]
    pub h: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1.7,2")]
    pub c: Vec<f64>,
}

/// Positivity and symmetry tolerance of Gram matrices.
pub const GRAM_TOL: f64 = 1e-8;

fn load_points(dir: &Path) -> Result<Vec<KernelPoint>, String> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("point_") && n.ends_with(".json"))
        })
        .collect();
    names.sort();
    names
        .iter()
        .map(|p| KernelPoint::new(read_json(p)?).map_err(err))
        .collect()
}

pub fn gram(a: &GramArgs, s: &Settings) -> Outcome {
    if a.h.len() != a.c.len() {
        return Err("--h and --c need the same number of values".into());
    }
    let points = match &a.points {
        Some(d) => load_points(d)?,
        None => suites::seeded_points(s.seed, s.campaign.count.unwrap_or(a.count), a.bound, s)?,
    };
    let table = KernelTable::new(&points, s.n, &s.weld).map_err(err)?;
    let mut ok = true;
    let reports: Vec<Value> =
        a.h.iter()
            .zip(&a.c)
            .map(|(&h, &c)| {
                let g = table.gram(h, c);
                let psd = g.is_psd(GRAM_TOL) && g.hermitian_defect <= GRAM_TOL;
                ok &= psd;
                json!({ "psd": psd, "gram": g })
            })
            .collect();
    Ok((
        json!({ "points": points.len(), "n": s.n, "passed": ok, "reports": reports, "table": table }),
        ok,
    ))
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Truncation orders; the last is the reference.
    #[arg(long, value_delimiter = ',', default_value = "8,12,16,24,32,48,96")]
    pub ns: Vec<usize>,
}

pub fn convergence(a: &ConvergenceArgs, s: &Settings) -> Outcome {
    let (r, p) = a.instance.load(s)?;
    let ns = s
        .campaign
        .truncations
        .clone()
        .unwrap_or_else(|| a.ns.clone());
    // Low orders may not reach the weld target; such rows carry the error.
    let vals = par::map(&ns, |&n| {
        (
            n,
            CocycleInstance::new(&r, &p, n, &s.weld).and_then(|i| cocycle::lambda_mu_integral(&i)),
        )
    });
    let reference = vals
        .iter()
        .rev()
        .find_map(|(_, v)| v.as_ref().ok().copied());
    let rows: Vec<Value> = vals
        .iter()
        .map(|(n, v)| match (v, reference) {
            (Ok((l, m)), Some((lr, mr))) => json!({
                "n": n, "lambda": l, "mu": m,
                "distance_to_reference": (l - lr).norm().max((m - mr).norm()),
            }),
            (Err(e), _) => json!({ "n": n, "error": e.to_string() }),
            (Ok(_), None) => unreachable!("a successful row implies a reference"),
        })
        .collect();
    let drift = cocycle::drift(&r, &p, s.n, &s.weld).map_err(err)?;
    let ok = drift.drift <= suites::DRIFT_TOL;
    Ok((json!({ "rows": rows, "drift": drift, "passed": ok }), ok))
}
