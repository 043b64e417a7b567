//! The acceptance suite: numbered criteria with tags, each producing measured
//! values against theoretical targets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::analysis::{
    box_count_system, dim_estimate, exponent_ceiling, exponent_series, level_set, BoxCountSeries, LevelKind, Mode,
    Selector, DEFAULT_WINDOW,
};
use crate::cantor::{
    build_homogeneous, build_two_scale, find_counterexample_params, CantorKind, CantorParams, CantorSystem, TargetSet,
    DEFAULT_BUDGET,
};
use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::expansion::{format_f64, log2_biguint, Expansion, Space};
use crate::saturate::{
    build_convergence, build_divergence, build_gauge_minus_s, build_multibeta, build_packing_neg, build_packing_pos,
    build_phased, build_zero_exponent, Built, GaugeSpec, MultiBetaSpec, PackingSpec, SaturationSpec, ZeroExponentSpec,
    ZeroSign,
};
use crate::wavelet::{build_system, Family, WaveletSystem};

/// One measured quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub name: String,
    pub target: String,
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Item {
    fn new(name: impl Into<String>, target: impl Into<String>, measured: impl Into<String>, tolerance: impl Into<String>, pass: bool) -> Item {
        Item { name: name.into(), target: target.into(), measured: measured.into(), tolerance: tolerance.into(), pass }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "target": self.target,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "status": status(self.pass),
        })
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub tags: &'static [&'static str],
    pub title: &'static str,
    pub anchor: &'static str,
    pub items: Vec<Item>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.items.is_empty() && self.items.iter().all(|i| i.pass)
    }

    /// Report entry; wall-clock time is deliberately left out.
    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "tags": self.tags,
            "title": self.title,
            "anchor": self.anchor,
            "status": status(self.pass()),
            "checks": self.items.iter().map(Item::to_json).collect::<Vec<_>>(),
            "error": self.error,
        })
    }
}

/// Outcome of loading and checking an expansion file.
#[derive(Debug, Clone)]
pub struct FileOutcome {
    pub path: PathBuf,
    pub items: Vec<Item>,
    pub error: Option<String>,
}

impl FileOutcome {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.items.iter().all(|i| i.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "path": self.path.display().to_string(),
            "status": status(self.pass()),
            "checks": self.items.iter().map(Item::to_json).collect::<Vec<_>>(),
            "error": self.error,
        })
    }
}

type CriterionFn = fn() -> Result<Vec<Item>>;

pub struct Criterion {
    pub id: u32,
    pub tags: &'static [&'static str],
    pub title: &'static str,
    pub anchor: &'static str,
    /// Runtime budget in seconds.
    pub budget: f64,
    run: CriterionFn,
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, tags: &["expansion"], title: "telescoping and decomposition on every builder", anchor: "partial sum telescoping", budget: 30.0, run: telescoping },
        Criterion { id: 2, tags: &["cantor", "analysis"], title: "homogeneous set positivity and box dimension", anchor: "certificate positivity on homogeneous sets", budget: 10.0, run: positivity_mechanics },
        Criterion { id: 3, tags: &["saturate", "analysis"], title: "divergence recipe at beta = 0.4", anchor: "divergence recipe exponent", budget: 60.0, run: divergence },
        Criterion { id: 4, tags: &["saturate", "analysis"], title: "convergence recipe at s = 1/4, alpha' = 0.6", anchor: "convergence recipe exponent", budget: 60.0, run: convergence },
        Criterion { id: 5, tags: &["saturate", "analysis"], title: "phased divergence with J = 2", anchor: "phased recipe level separation", budget: 60.0, run: phased },
        Criterion { id: 6, tags: &["cantor", "analysis"], title: "two-scale counts and dimensions", anchor: "two-scale set combinatorics", budget: 30.0, run: two_scale },
        Criterion { id: 7, tags: &["cantor"], title: "counterexample parameter certificates", anchor: "two-scale parameter inequalities", budget: 5.0, run: feasibility },
        Criterion { id: 8, tags: &["saturate", "analysis"], title: "zero exponent on the two-scale set", anchor: "zero-exponent construction", budget: 120.0, run: zero_exponent },
        Criterion { id: 9, tags: &["saturate", "analysis"], title: "gauge construction", anchor: "gauge recipe remainder exponent", budget: 120.0, run: gauge },
        Criterion { id: 10, tags: &["expansion"], title: "norm-count, remainder bound and exponent ceiling on every builder", anchor: "coefficient counting and remainder bound", budget: 60.0, run: bounds },
        Criterion { id: 11, tags: &["cli"], title: "byte-identical reports across thread counts", anchor: "determinism", budget: 600.0, run: determinism },
    ]
}

/// Comma-separated ids or tags; empty selects everything.
#[derive(Debug, Clone, Default)]
pub struct Filter(Vec<String>);

impl Filter {
    pub fn parse(raw: Option<&str>) -> Filter {
        Filter(raw.unwrap_or("").split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    pub fn selects(&self, c: &Criterion) -> bool {
        self.0.is_empty() || self.0.iter().any(|f| f == &c.id.to_string() || c.tags.contains(&f.as_str()))
    }
}

pub fn run_criterion(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let (items, error) = match (c.run)() {
        Ok(items) => (items, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Outcome { id: c.id, tags: c.tags, title: c.title, anchor: c.anchor, items, error, seconds: start.elapsed().as_secs_f64() }
}

/// Full report object with sorted keys and no timings.
pub fn report(outcomes: &[Outcome], files: &[FileOutcome]) -> Value {
    let passed = outcomes.iter().filter(|o| o.pass()).count() + files.iter().filter(|f| f.pass()).count();
    let total = outcomes.len() + files.len();
    json!({
        "criteria": outcomes.iter().map(Outcome::to_json).collect::<Vec<_>>(),
        "files": files.iter().map(FileOutcome::to_json).collect::<Vec<_>>(),
        "summary": {"passed": passed, "failed": total - passed, "status": status(passed == total)},
    })
}

pub fn timings(outcomes: &[Outcome]) -> Value {
    let m: BTreeMap<String, Value> = outcomes.iter().map(|o| (o.id.to_string(), json!(o.seconds))).collect();
    json!(m)
}

// ---------------------------------------------------------------------------
// shared fixtures

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn haar() -> Result<Arc<WaveletSystem>> {
    Ok(Arc::new(build_system(Family::Haar, 1, 10)?))
}

fn space(s: BigRational, p: i64) -> Result<Space> {
    Space::new(1, s, q(p, 1), q(2, 1))
}

fn zero() -> DyadicPoint {
    DyadicPoint::zero(1, 0)
}

fn fmt(v: f64) -> String {
    format_f64(v)
}

fn fmt_range(lo: f64, hi: f64) -> String {
    format!("[{}, {}]", fmt(lo), fmt(hi))
}

fn divergence_spec(n_max: u32, target: TargetSet) -> Result<SaturationSpec> {
    Ok(SaturationSpec { space: space(q(0, 1), 2)?, wavelet: haar()?, n: 2, t: Some(1), target, alpha_prime: 0.2, n_max })
}

fn convergence_spec(n_max: u32) -> Result<SaturationSpec> {
    Ok(SaturationSpec {
        space: space(q(1, 4), 2)?,
        wavelet: haar()?,
        n: 4,
        t: Some(1),
        target: TargetSet::Points(vec![zero()]),
        alpha_prime: 0.6,
        n_max,
    })
}

fn zero_exponent_spec(sign: ZeroSign) -> Result<ZeroExponentSpec> {
    Ok(ZeroExponentSpec {
        space: space(q(1, 4), 2)?,
        wavelet: haar()?,
        u: q(3, 1),
        n: 8,
        t: 2,
        eps: q(1, 2),
        k_max: 2,
        sign,
    })
}

fn gauge_spec(depth: u32) -> Result<GaugeSpec> {
    // Haar is gated at s = 1/p for p = 2, so the s = 1/2 instance runs with p = 1
    Ok(GaugeSpec { space: space(q(1, 2), 1)?, wavelet: haar()?, t: Some(1), depth })
}

fn packing_spec(beta: BigRational, l_max: u32) -> Result<PackingSpec> {
    let (s, p) = (q(1, 4), q(2, 1));
    let params = find_counterexample_params(&s, &p, &beta, 1)?;
    Ok(PackingSpec { space: space(s, 2)?, wavelet: haar()?, params, l_max })
}

/// Small instances of every builder.
fn catalog() -> Result<Vec<(&'static str, Built)>> {
    let mut out = vec![
        ("divergence", build_divergence(&divergence_spec(12, TargetSet::Points(vec![zero()]))?)?),
        ("divergence_left_segment", {
            let mut s = divergence_spec(12, TargetSet::LexPrefix { t_prime: 1.5 })?;
            s.alpha_prime = 0.45;
            build_divergence(&s)?
        }),
    ];
    for (k, b) in build_phased(&divergence_spec(12, TargetSet::Points(vec![zero()]))?, 2)?.into_iter().enumerate() {
        out.push((if k == 0 { "phased_0" } else { "phased_1" }, b));
    }
    out.push(("convergence", build_convergence(&convergence_spec(10)?)?));
    out.push((
        "multibeta",
        build_multibeta(&MultiBetaSpec {
            space: space(q(0, 1), 2)?,
            wavelet: haar()?,
            n: 2,
            t: Some(1),
            betas: vec![0.3, 0.4],
            target_dims: None,
            n_max: 12,
        })?,
    ));
    out.push(("packing_pos", build_packing_pos(&packing_spec(q(1, 10), 6)?)?));
    out.push(("packing_neg", build_packing_neg(&packing_spec(q(-1, 10), 6)?)?));
    out.push(("zero_exponent_plus", build_zero_exponent(&zero_exponent_spec(ZeroSign::Plus)?)?));
    out.push(("zero_exponent_minus", build_zero_exponent(&zero_exponent_spec(ZeroSign::Minus)?)?));
    out.push(("gauge_minus_s", build_gauge_minus_s(&gauge_spec(10)?)?));
    Ok(out)
}

/// Half the points on the builder's set, half on a uniform dyadic grid of `[0, 1)`.
fn test_points(b: &Built, count: usize, seed: u64) -> Result<Vec<DyadicPoint>> {
    let on_set = count / 2;
    let g = b.system.depth.clamp(1, 16);
    let mut pts = b.system.sample_points(g, on_set, seed)?;
    let rest = (count - on_set) as i64;
    pts.extend((0..rest).map(|k| DyadicPoint::from_i64(&[2 * k + 1], 11)));
    Ok(pts)
}

// ---------------------------------------------------------------------------
// criteria

/// Largest relative residual of `P_{j+1} = P_j + Q_j` and `P_j + R_j = f` at `x`.
pub fn telescoping_residual(e: &Expansion, x: &DyadicPoint, j_max: u32) -> Result<f64> {
    let (ps, rs) = e.sums(x, j_max)?;
    let details: BTreeMap<u32, f64> = e.detail_values(x)?.into_iter().collect();
    let total = e.eval_total(x)?;
    let mut worst = 0.0f64;
    for j in 0..j_max as usize {
        let qj = details.get(&(j as u32)).copied().unwrap_or(0.0);
        let mag = ps[j].abs().max(ps[j + 1].abs()).max(total.abs()).max(1.0);
        worst = worst.max((ps[j + 1] - ps[j] - qj).abs() / mag);
        worst = worst.max((ps[j] + rs[j] - total).abs() / mag);
    }
    Ok(worst)
}

fn telescoping() -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for (seed, (name, b)) in catalog()?.into_iter().enumerate() {
        let pts = test_points(&b, 1000, seed as u64 + 1)?;
        let worst = pts
            .par_iter()
            .map(|x| telescoping_residual(&b.expansion, x, 40))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        items.push(Item::new(format!("{name}: max relative residual, 1000 points, j <= 40"), "0", fmt(worst), "1e-10", worst <= 1e-10));
    }
    Ok(items)
}

fn positivity_mechanics() -> Result<Vec<Item>> {
    let w = haar()?;
    let params = CantorParams::for_wavelet(&w, CantorKind::Homogeneous { n: 2 }, Some(1))?;
    let sys = CantorSystem::new(params, 6, DEFAULT_BUDGET)?;
    let m = w.effective_m().ok_or(Error::CertificateNotFound(0))?;
    let grid = sys.endpoint_grid(6, 6)?;
    let (mut inside_min, mut outside_max, mut pairs) = (f64::INFINITY, 0.0f64, 0usize);
    for n in 0..=3 {
        for lambda in sys.generation(n)? {
            let mu = sys.mu(&lambda)?;
            for x in &grid {
                let v = w.eval(1, &mu, x)?;
                if lambda.contains(x) {
                    inside_min = inside_min.min(v);
                } else {
                    outside_max = outside_max.max(v.abs());
                }
                pairs += 1;
            }
        }
    }
    let mut items = vec![
        Item::new(format!("min psi_mu(lambda) on lambda, {pairs} cube-point pairs"), format!(">= {}", fmt(m)), fmt(inside_min), "0", inside_min >= m),
        Item::new("max |psi_mu(lambda)| off lambda", "0", fmt(outside_max), "0", outside_max == 0.0),
    ];
    let k = build_homogeneous(1, 0, 2, 12)?;
    let levels: Vec<u32> = (1..=25).collect();
    let est = dim_estimate(&BoxCountSeries::for_system(&k, &levels)?, &Selector::All)?;
    items.push(Item::new("box-count dimension, j <= 25", "0.5", fmt(est.least_squares), "0.05", (est.least_squares - 0.5).abs() <= 0.05));
    Ok(items)
}

fn window_item(name: &str, lo: Option<f64>, hi: Option<f64>, target: f64, tol: f64) -> Item {
    match (lo, hi) {
        (Some(lo), Some(hi)) => Item::new(
            name,
            fmt(target),
            fmt_range(lo, hi),
            fmt(tol),
            (lo - target).abs() <= tol && (hi - target).abs() <= tol,
        ),
        _ => Item::new(name, fmt(target), "undefined", fmt(tol), false),
    }
}

fn min_over_grid(e: &Expansion, grid: &[DyadicPoint], j_max: u32, remainder: bool) -> Result<f64> {
    Ok(grid
        .par_iter()
        .map(|x| {
            let (p, r) = e.sums(x, j_max)?;
            let src = if remainder { r } else { p };
            Ok(src.into_iter().fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

fn divergence() -> Result<Vec<Item>> {
    let b = build_divergence(&divergence_spec(200, TargetSet::Points(vec![zero()]))?)?;
    let e = &b.expansion;
    let grid = b.system.endpoint_grid(10, 10)?;
    let min_p = min_over_grid(e, &grid, 24, false)?;
    let mut items = vec![Item::new(format!("min P_j f on {} grid points, j <= 24", grid.len()), ">= 0", fmt(min_p), "0", min_p >= 0.0)];
    let series = exponent_series(e, &zero(), Mode::PartialSum, 1..=400, DEFAULT_WINDOW)?;
    let (lo, hi) = (series.liminf_est, series.limsup_est);
    items.push(match (lo, hi) {
        (Some(lo), Some(hi)) => Item::new(
            format!("window estimate at x = 0 over [{}, {}]", series.window.0, series.window.1),
            "[0.33, 0.47]",
            fmt_range(lo, hi),
            "0",
            lo >= 0.33 && hi <= 0.47,
        ),
        _ => Item::new("window estimate at x = 0", "[0.33, 0.47]", "undefined", "0", false),
    });
    let lgrid = b.system.endpoint_grid(6, 6)?;
    let set = level_set(e, 0.4, Mode::PartialSum, LevelKind::Exact, &lgrid, 1..=400, 0.07)?;
    let contains_zero = set.iter().any(|x| x.reduced() == zero());
    items.push(Item::new(format!("level set at beta = 0.4 contains x = 0 ({} points)", set.len()), "true", contains_zero.to_string(), "0", contains_zero));
    let bound = (1.0 - 2.0 * 0.33) + 0.1;
    let slope = if set.is_empty() {
        None
    } else {
        Some(dim_estimate(&BoxCountSeries::for_points(&set, &(1..=12).collect::<Vec<_>>()), &Selector::All)?.least_squares)
    };
    items.push(match slope {
        Some(sl) => Item::new("level-set box-count slope", format!("<= {}", fmt(bound)), fmt(sl), "0", sl <= bound),
        None => Item::new("level-set box-count slope", format!("<= {}", fmt(bound)), "empty set", "0", false),
    });
    Ok(items)
}

fn convergence() -> Result<Vec<Item>> {
    // deep enough that the truncated tail does not move R_j for j <= 40
    let b = build_convergence(&convergence_spec(40)?)?;
    let e = &b.expansion;
    let grid = b.system.endpoint_grid(5, 5)?;
    let min_r = min_over_grid(e, &grid, 40, true)?;
    let mut items = vec![Item::new(format!("min R_j f on {} grid points, j <= 40", grid.len()), ">= 0", fmt(min_r), "0", min_r >= 0.0)];
    let series = exponent_series(e, &zero(), Mode::Remainder, 24..=40, 1.0)?;
    items.push(window_item("remainder exponent at x = 0 over [24, 40]", series.liminf_est, series.limsup_est, -0.05, 0.02));
    Ok(items)
}

fn phased() -> Result<Vec<Item>> {
    let sys = homogeneous_haar(2, 1, 12)?;
    let mut g = vec![zero()];
    g.extend(sys.sample_points(12, 99, 17)?);
    let phases = build_phased(&divergence_spec(200, TargetSet::Points(g.clone()))?, 2)?;
    let levels: Vec<Vec<u32>> = phases.iter().map(|b| b.expansion.levels()).collect();
    let shared = levels[0].iter().filter(|l| levels[1].contains(l)).count();
    let mut items = vec![Item::new("levels shared by the two phases", "0", shared.to_string(), "0", shared == 0)];
    for (k, b) in phases.iter().enumerate() {
        let off = &levels[1 - k];
        let worst = g
            .par_iter()
            .map(|x| {
                let d: BTreeMap<u32, f64> = b.expansion.detail_values(x)?.into_iter().collect();
                Ok(off.iter().map(|l| d.get(l).copied().unwrap_or(0.0).abs()).fold(0.0f64, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        items.push(Item::new(format!("phase {k}: max |Q| on off-phase levels at 100 target points"), "0", fmt(worst), "0", worst == 0.0));
        let series = exponent_series(&b.expansion, &zero(), Mode::PartialSum, 1..=400, DEFAULT_WINDOW)?;
        items.push(window_item(
            &format!("phase {k}: window estimate at x = 0 over [{}, {}]", series.window.0, series.window.1),
            series.liminf_est,
            series.limsup_est,
            0.4,
            0.07,
        ));
    }
    Ok(items)
}

fn homogeneous_haar(n: u32, t: u32, depth: u32) -> Result<CantorSystem> {
    let params = CantorParams::for_wavelet(&*haar()?, CantorKind::Homogeneous { n }, Some(t))?;
    CantorSystem::new(params, depth, DEFAULT_BUDGET)
}

fn two_scale() -> Result<Vec<Item>> {
    let (t, n) = (1u32, 2u32);
    let sys = build_two_scale(t, 0, n, q(2, 1), q(2, 1), 6)?;
    let bounds = sys.two_scale_boundaries();
    let mut items = Vec::new();
    // closed form: free digits exactly on the odd intervals (N_{2k}, N_{2k+1}]
    let mut log2_m = 0u64;
    let mut mismatches = Vec::new();
    for (k, &nk) in bounds.iter().enumerate() {
        if k % 2 == 1 {
            log2_m += nk - bounds[k - 1];
        }
        let counted = box_count_system(&sys, t + n * nk as u32)?;
        let closed = BigUint::one() << log2_m;
        if counted != closed {
            mismatches.push(format!("M_{nk}: {counted} vs {closed}"));
        }
    }
    items.push(Item::new(
        format!("recursion counts against closed forms at N_k = {bounds:?}"),
        "all equal",
        if mismatches.is_empty() { "all equal".to_string() } else { mismatches.join("; ") },
        "0",
        mismatches.is_empty(),
    ));
    for (nk, expected) in [(2u64, 2u32), (4, 2), (8, 32)] {
        let got = box_count_system(&sys, t + n * nk as u32)?;
        items.push(Item::new(format!("M_{nk}"), expected.to_string(), got.to_string(), "0", got == BigUint::from(expected)));
    }
    let sel = Selector::for_system(&sys);
    let est = dim_estimate(&BoxCountSeries::for_system(&sys, &sel.required_levels())?, &sel)?;
    items.push(Item::new("upper dimension (odd-boundary selector)", fmt(1.0 / 3.0), fmt(est.upper), "0.08", (est.upper - 1.0 / 3.0).abs() <= 0.08));
    items.push(Item::new("lower dimension (even-boundary selector)", fmt(1.0 / 6.0), fmt(est.lower), "0.08", (est.lower - 1.0 / 6.0).abs() <= 0.08));
    Ok(items)
}

fn feasibility() -> Result<Vec<Item>> {
    let (s, p) = (q(1, 4), q(2, 1));
    let mut items = Vec::new();
    for beta in [q(1, 10), q(-1, 10)] {
        let c = find_counterexample_params(&s, &p, &beta, 1)?;
        let failing: Vec<&str> = c.checks.iter().filter(|k| !k.holds).map(|k| k.label).collect();
        items.push(Item::new(
            format!("beta = {beta}: {} exact inequalities (N = {}, t = {}, eps = {})", c.checks.len(), c.n, c.t, c.eps),
            "all hold",
            if failing.is_empty() { "all hold".to_string() } else { failing.join(", ") },
            "0",
            failing.is_empty() && !c.checks.is_empty(),
        ));
        let alpha = BigRational::one() - &s * &p - &beta * &p;
        items.push(Item::new(
            format!("beta = {beta}: predicted packing dimension"),
            format!("> {alpha}"),
            c.dim_p.to_string(),
            "0",
            c.dim_p > alpha,
        ));
    }
    Ok(items)
}

fn zero_exponent() -> Result<Vec<Item>> {
    let spec = zero_exponent_spec(ZeroSign::Plus)?;
    let b = build_zero_exponent(&spec)?;
    let n3 = crate::cantor::two_scale_sequence(&spec.u, &q(2, 1), 1_000)[3];
    let j = spec.n * n3 as u32;
    let pts = b.system.sample_points(b.system.depth, 10, 23)?;
    let series = pts
        .par_iter()
        .map(|x| exponent_series(&b.expansion, x, Mode::PartialSum, 1..=j, DEFAULT_WINDOW))
        .collect::<Result<Vec<_>>>()?;
    let liminf = series.iter().map(|s| s.liminf_est.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
    let limsup = series.iter().map(|s| s.limsup_est.unwrap_or(f64::INFINITY)).fold(f64::NEG_INFINITY, f64::max);
    let w = series[0].window;
    let mut items = vec![
        Item::new(format!("smallest liminf estimate over [{}, {}], 10 points of L", w.0, w.1), ">= -0.08", fmt(liminf), "0", liminf >= -0.08),
        Item::new(format!("largest limsup estimate over [{}, {}], 10 points of L", w.0, w.1), "<= 0.08", fmt(limsup), "0", limsup <= 0.08),
    ];
    let log2_sup = b.term_norms.iter().map(|t| t.log2_norm).fold(f64::NEG_INFINITY, f64::max);
    let certified = b.checks.iter().all(|c| c.holds);
    items.push(Item::new("log2 sup_k ||f_k|| over realized terms (finite)", "finite", fmt(log2_sup), "0", log2_sup.is_finite()));
    items.push(Item::new("certificate checks", "all hold", certified.to_string(), "0", certified));
    Ok(items)
}

fn gauge() -> Result<Vec<Item>> {
    let b = build_gauge_minus_s(&gauge_spec(12)?)?;
    let mass = b.system.gauge_mass_bound();
    let bad: Vec<u32> = mass.iter().filter(|m| !m.holds).map(|m| m.generation).collect();
    let mut items = vec![Item::new(
        format!("mass bound mu(I) <= phi(|I|) on generations 0..={}", b.system.depth),
        "all hold",
        if bad.is_empty() { "all hold".to_string() } else { format!("fails at generations {bad:?}") },
        "0",
        bad.is_empty(),
    )];
    let worst = b.term_norms.iter().map(|t| t.log2_norm).fold(f64::NEG_INFINITY, f64::max);
    items.push(Item::new("max log2 ||f_n||", "<= 0", fmt(worst), "0", worst <= 1e-12));
    let s = b.expansion.space.s();
    let j = b.expansion.trusted_depth;
    let series = exponent_series(&b.expansion, &zero(), Mode::Remainder, 1..=j, DEFAULT_WINDOW)?;
    items.push(window_item(
        &format!("remainder exponent at x = 0 over [{}, {}]", series.window.0, series.window.1),
        series.liminf_est,
        series.limsup_est,
        -s,
        0.05 * s,
    ));
    Ok(items)
}

/// Worst excess `log2 count - bound` of the norm-count inequality.
pub fn norm_count_excess(e: &Expansion, gammas: &[f64]) -> Result<f64> {
    let m = e.besov_norm()?.sup_eps();
    let (d, s, p) = (e.d() as f64, e.space.s(), e.space.p());
    let mut worst = f64::NEG_INFINITY;
    for j in e.levels() {
        for &g in gammas {
            let count = e.count_large_coefficients(g, j)?;
            if count.is_zero() {
                continue;
            }
            let bound = p * m.log2() + (d - s * p - g * p) * j as f64;
            worst = worst.max(log2_biguint(&count) - bound);
        }
    }
    Ok(worst)
}

/// Largest `|R_j f(x)| / (C remainder_bound)` over the points and `j <= j_max`.
pub fn remainder_ratio(e: &Expansion, pts: &[DyadicPoint], j_max: u32) -> Result<f64> {
    let eps = e.default_remainder_eps();
    let c = e.remainder_constant(eps);
    Ok(pts
        .par_iter()
        .map(|x| {
            let (_, rs) = e.sums(x, j_max)?;
            let mut worst = 0.0f64;
            for j in 0..=j_max {
                let r = rs[j as usize].abs();
                if r == 0.0 {
                    continue;
                }
                let rb = e.remainder_bound(j, x, eps)?;
                worst = worst.max(if rb > 0.0 { r / (c * rb) } else { f64::INFINITY });
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max))
}

fn bounds() -> Result<Vec<Item>> {
    let gammas: Vec<f64> = (-8..=8).map(|g| g as f64 / 8.0).collect();
    let mut items = Vec::new();
    for (seed, (name, b)) in catalog()?.into_iter().enumerate() {
        let e = &b.expansion;
        let excess = norm_count_excess(e, &gammas)?;
        items.push(Item::new(format!("{name}: norm-count excess (log2)"), "<= 0", fmt(excess), "1e-9", excess <= 1e-9));
        let pts = test_points(&b, 100, 100 + seed as u64)?;
        let j_max = (e.top_level() + 1).min(60);
        let ratio = remainder_ratio(e, &pts, j_max)?;
        items.push(Item::new(format!("{name}: max |R_j f| / (C bound)"), "<= 1", fmt(ratio), "1e-12", ratio <= 1.0 + 1e-12));
        if e.space.critical() > BigRational::zero() {
            let violations = pts[..20]
                .par_iter()
                .map(|x| Ok(exponent_ceiling(e, x, j_max)?.iter().filter(|c| !c.holds).count()))
                .collect::<Result<Vec<usize>>>()?
                .into_iter()
                .sum::<usize>();
            items.push(Item::new(format!("{name}: exponent ceiling violations"), "0", violations.to_string(), "0", violations == 0));
        }
    }
    Ok(items)
}

fn determinism() -> Result<Vec<Item>> {
    let exe = std::env::current_exe()?;
    let base = std::env::temp_dir().join(format!("wavesat-determinism-{}", std::process::id()));
    let mut reports = Vec::new();
    for threads in [1u32, 8] {
        let dir = base.join(format!("threads-{threads}"));
        std::fs::create_dir_all(&dir)?;
        let status = std::process::Command::new(&exe)
            .args(["verify", "--threads", &threads.to_string(), "--filter", "1,2,3,4,5,6,7,8,9,10", "--out-dir"])
            .arg(&dir)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()?;
        if status.code().is_none_or(|c| c > 1) {
            return Err(Error::Config(format!("verify with {threads} threads exited with {status}")));
        }
        reports.push(std::fs::read(dir.join("report.json"))?);
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = reports[0] == reports[1];
    Ok(vec![Item::new(
        "report bytes with --threads 1 and --threads 8",
        "identical",
        if same { "identical".to_string() } else { "different".to_string() },
        "0",
        same,
    )])
}

/// Load an expansion file and run the structural checks on it.
pub fn check_file(path: &Path) -> FileOutcome {
    let loaded = std::fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|t| serde_json::from_str::<Value>(&t).map_err(Error::from))
        .and_then(|v| Expansion::from_json(&v));
    let e = match loaded {
        Ok(e) => e,
        Err(err) => return FileOutcome { path: path.to_path_buf(), items: Vec::new(), error: Some(format!("{}: {err}", path.display())) },
    };
    let checks = || -> Result<Vec<Item>> {
        let pts: Vec<DyadicPoint> = (0..100i64).map(|k| DyadicPoint::from_i64(&[2 * k + 1], 8)).collect();
        let j_max = (e.top_level() + 1).min(40);
        let worst = pts.iter().map(|x| telescoping_residual(&e, x, j_max)).collect::<Result<Vec<f64>>>()?.into_iter().fold(0.0f64, f64::max);
        let gammas: Vec<f64> = (-8..=8).map(|g| g as f64 / 8.0).collect();
        let excess = norm_count_excess(&e, &gammas)?;
        Ok(vec![
            Item::new("max relative telescoping residual", "0", fmt(worst), "1e-10", worst <= 1e-10),
            Item::new("norm-count excess (log2)", "<= 0", fmt(excess), "1e-9", excess <= 1e-9),
        ])
    };
    match checks() {
        Ok(items) => FileOutcome { path: path.to_path_buf(), items, error: None },
        Err(err) => FileOutcome { path: path.to_path_buf(), items: Vec::new(), error: Some(format!("{}: {err}", path.display())) },
    }
}
