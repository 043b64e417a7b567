//! Pointwise exponent estimators and box-counting dimension estimates.
//!
//! Exponents are read off `a_j = log2|.| / j` through a trailing window of
//! the `j` range: the window maximum estimates the limsup and the minimum the
//! liminf. A least-squares slope is reported alongside for diagnostics.

use std::collections::BTreeSet;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cantor::CantorSystem;
use crate::dyadic::DyadicPoint;
use crate::error::{param, Error, Result};
use crate::expansion::{format_f64, log2_biguint, Expansion};

/// Default trailing-window fraction.
pub const DEFAULT_WINDOW: f64 = 0.2;

/// Which quantity the exponent is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    PartialSum,
    Remainder,
    /// Largest coefficient on the cube `lambda_j(x)`.
    Coefficient,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::PartialSum => "partial_sum",
            Mode::Remainder => "remainder",
            Mode::Coefficient => "coefficient",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "partial_sum" | "P" => Ok(Mode::PartialSum),
            "remainder" | "R" => Ok(Mode::Remainder),
            "coefficient" | "C" => Ok(Mode::Coefficient),
            other => Err(Error::Config(format!("unknown exponent mode {other:?}"))),
        }
    }
}

/// `a_j` over a range of levels with its window estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSeries {
    pub x: DyadicPoint,
    pub mode: Mode,
    pub j_min: u32,
    /// `a_j` for `j = j_min ..`; `-inf` where the magnitude vanishes.
    pub values: Vec<f64>,
    pub window: (u32, u32),
    /// Entries of the window excluded as `-inf`.
    pub excluded: usize,
    /// `None` when the window is undefined (more than half excluded).
    pub limsup_est: Option<f64>,
    pub liminf_est: Option<f64>,
    /// Least-squares slope of `log2|.|` against `j` over the finite entries.
    pub regression_slope: Option<f64>,
}

impl ExponentSeries {
    pub fn a(&self, j: u32) -> Option<f64> {
        j.checked_sub(self.j_min).and_then(|i| self.values.get(i as usize).copied())
    }

    pub fn is_defined(&self) -> bool {
        self.limsup_est.is_some()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "x": self.x.to_string(),
            "mode": self.mode.name(),
            "window": [self.window.0, self.window.1],
            "excluded": self.excluded,
            "limsup_est": self.limsup_est.map(format_f64),
            "liminf_est": self.liminf_est.map(format_f64),
            "regression_slope": self.regression_slope.map(format_f64),
        })
    }
}

/// Trailing window `[ceil((1 - w) J), J]` of a range ending at `J`.
pub fn trailing_window(range: &RangeInclusive<u32>, w: f64) -> (u32, u32) {
    let end = *range.end();
    let start = ((1.0 - w) * end as f64).ceil() as u32;
    (start.max(*range.start()).min(end), end)
}

/// `log2 |.|` of the series quantity at every `j` of the range.
fn magnitudes(f: &Expansion, x: &DyadicPoint, mode: Mode, range: &RangeInclusive<u32>) -> Result<Vec<f64>> {
    let end = *range.end();
    let lg = |v: f64| if v == 0.0 { f64::NEG_INFINITY } else { v.abs().log2() };
    Ok(match mode {
        Mode::PartialSum | Mode::Remainder => {
            let (p, r) = f.sums(x, end)?;
            let src = if mode == Mode::PartialSum { p } else { r };
            range.clone().map(|j| lg(src[j as usize])).collect()
        }
        Mode::Coefficient => range
            .clone()
            .map(|j| {
                let k = x.floor_scaled(j);
                let cube = crate::dyadic::DyadicCube::new(j, k);
                let best = (1..=f.wavelet.n_wavelets()).map(|i| f.coefficient(i, &cube).abs()).fold(0.0, f64::max);
                lg(best)
            })
            .collect(),
    })
}

/// Exponent series of `f` at `x`.
pub fn exponent_series(f: &Expansion, x: &DyadicPoint, mode: Mode, range: RangeInclusive<u32>, w: f64) -> Result<ExponentSeries> {
    if range.is_empty() {
        return Err(param("exponent_series", "empty j range"));
    }
    if !(w > 0.0 && w <= 1.0) {
        return Err(param("exponent_series", format!("window fraction {w} must lie in (0, 1]")));
    }
    if f.trusted_depth > 0 && *range.end() > f.trusted_depth {
        return Err(param(
            "exponent_series",
            format!("j = {} exceeds the trusted depth {} of the truncated series", range.end(), f.trusted_depth),
        ));
    }
    let logs = magnitudes(f, x, mode, &range)?;
    let values: Vec<f64> = range
        .clone()
        .zip(&logs)
        .map(|(j, l)| if j == 0 || !l.is_finite() { f64::NEG_INFINITY } else { l / j as f64 })
        .collect();
    let window = trailing_window(&range, w);
    let j_min = *range.start();
    let win: Vec<f64> = (window.0..=window.1).map(|j| values[(j - j_min) as usize]).collect();
    let finite: Vec<f64> = win.iter().copied().filter(|v| v.is_finite()).collect();
    let excluded = win.len() - finite.len();
    let defined = !finite.is_empty() && 2 * excluded <= win.len();
    let (limsup_est, liminf_est) = if defined {
        (
            Some(finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            Some(finite.iter().copied().fold(f64::INFINITY, f64::min)),
        )
    } else {
        (None, None)
    };
    let pts: Vec<(f64, f64)> = range
        .clone()
        .zip(&logs)
        .filter(|(j, l)| *j > 0 && l.is_finite())
        .map(|(j, l)| (j as f64, *l))
        .collect();
    Ok(ExponentSeries {
        x: x.clone(),
        mode,
        j_min,
        values,
        window,
        excluded,
        limsup_est,
        liminf_est,
        regression_slope: least_squares(&pts).map(|(slope, _)| slope),
    })
}

/// Exponent series at many points; point-parallel, results in input order.
pub fn exponent_series_many(
    f: &Expansion,
    xs: &[DyadicPoint],
    mode: Mode,
    range: RangeInclusive<u32>,
    w: f64,
) -> Result<Vec<ExponentSeries>> {
    xs.par_iter().map(|x| exponent_series(f, x, mode, range.clone(), w)).collect()
}

/// Which of the level sets `E`, `E^-`, `E^+` is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelKind {
    /// Both window estimates near `beta`.
    Exact,
    /// The liminf estimate near `beta`.
    Lower,
    /// The limsup estimate near `beta`.
    Upper,
}

/// True when the idealized series' partial sums converge at every point, as
/// required before remainders are meaningful.
pub fn partial_sums_converge(f: &Expansion) -> bool {
    match f.builder.get("name").and_then(Value::as_str) {
        None => true,
        Some("convergence" | "packing_neg" | "gauge_minus_s") => true,
        Some("zero_exponent") => f.builder["params"]["sign"] == "-",
        Some(_) => false,
    }
}

/// Grid points whose window estimates lie within `tol` of `beta`.
pub fn level_set(
    f: &Expansion,
    beta: f64,
    mode: Mode,
    kind: LevelKind,
    grid: &[DyadicPoint],
    range: RangeInclusive<u32>,
    tol: f64,
) -> Result<Vec<DyadicPoint>> {
    if mode == Mode::Remainder && !partial_sums_converge(f) {
        return Ok(Vec::new());
    }
    let series = exponent_series_many(f, grid, mode, range, DEFAULT_WINDOW)?;
    let near = |v: Option<f64>| v.is_some_and(|v| (v - beta).abs() <= tol);
    Ok(series
        .into_iter()
        .filter(|s| match kind {
            LevelKind::Exact => near(s.limsup_est) && near(s.liminf_est),
            LevelKind::Lower => near(s.liminf_est),
            LevelKind::Upper => near(s.limsup_est),
        })
        .map(|s| s.x)
        .collect())
}

/// Number of distinct generation-`j` cubes containing the points.
pub fn box_count_points(points: &[DyadicPoint], j: u32) -> BigUint {
    let cubes: BTreeSet<Vec<BigInt>> = points.par_iter().map(|x| x.floor_scaled(j)).collect::<Vec<_>>().into_iter().collect();
    BigUint::from(cubes.len())
}

/// Number of generation-`j` cubes meeting the limit set of a construction.
pub fn box_count_system(sys: &CantorSystem, j: u32) -> Result<BigUint> {
    let mut layout = sys.layout().clone();
    layout.box_count(j as u64)
}

/// How the regression levels are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// Every level for both slopes.
    All,
    /// Two-scale sets: `j = t + N N_{2k+1}` for the upper slope and
    /// `j = t + N N_{2k}` for the lower one.
    TwoScale { boundaries: Vec<u64>, n: u32, t: u32 },
}

impl Selector {
    pub fn for_system(sys: &CantorSystem) -> Selector {
        match &sys.params.kind {
            crate::cantor::CantorKind::TwoScale { n, .. } => Selector::TwoScale {
                boundaries: sys.two_scale_boundaries(),
                n: *n,
                t: sys.t(),
            },
            _ => Selector::All,
        }
    }

    fn levels(&self, parity: usize) -> Option<Vec<u32>> {
        match self {
            Selector::All => None,
            Selector::TwoScale { boundaries, n, t } => Some(
                boundaries
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 2 == parity)
                    .map(|(_, b)| t + n * *b as u32)
                    .collect(),
            ),
        }
    }

    /// All levels the selector can use, for building a series.
    pub fn required_levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.levels(0).into_iter().flatten().chain(self.levels(1).into_iter().flatten()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn name(&self) -> &'static str {
        match self {
            Selector::All => "all",
            Selector::TwoScale { .. } => "two_scale",
        }
    }
}

/// Box counts at a list of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountSeries {
    pub levels: Vec<u32>,
    pub counts: Vec<BigUint>,
}

impl BoxCountSeries {
    pub fn for_points(points: &[DyadicPoint], levels: &[u32]) -> BoxCountSeries {
        BoxCountSeries {
            levels: levels.to_vec(),
            counts: levels.iter().map(|&j| box_count_points(points, j)).collect(),
        }
    }

    pub fn for_system(sys: &CantorSystem, levels: &[u32]) -> Result<BoxCountSeries> {
        let counts = levels.par_iter().map(|&j| box_count_system(sys, j)).collect::<Result<Vec<_>>>()?;
        Ok(BoxCountSeries { levels: levels.to_vec(), counts })
    }

    fn points(&self, only: Option<&[u32]>) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .zip(&self.counts)
            .filter(|(j, _)| only.is_none_or(|o| o.contains(j)))
            .map(|(j, c)| (*j as f64, log2_biguint(c)))
            .collect()
    }
}

/// Slope estimates with confidence half-widths (twice the standard error).
#[derive(Debug, Clone, PartialEq)]
pub struct DimEstimate {
    pub upper: f64,
    pub lower: f64,
    pub upper_halfwidth: f64,
    pub lower_halfwidth: f64,
    /// Plain least squares over every level.
    pub least_squares: f64,
    pub selector: &'static str,
}

impl DimEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "upper": format_f64(self.upper),
            "lower": format_f64(self.lower),
            "upper_halfwidth": format_f64(self.upper_halfwidth),
            "lower_halfwidth": format_f64(self.lower_halfwidth),
            "least_squares": format_f64(self.least_squares),
            "selector": self.selector,
        })
    }
}

/// `(slope, standard error)` of a least-squares line; `None` below two points.
pub fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let se = if pts.len() > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, se))
}

/// Upper and lower box-dimension slopes of a series.
pub fn dim_estimate(series: &BoxCountSeries, selector: &Selector) -> Result<DimEstimate> {
    if series.levels.len() < 4 {
        return Err(Error::InsufficientLevels { need: 4, got: series.levels.len() });
    }
    let all = series.points(None);
    let (ls, ls_se) = least_squares(&all).ok_or(Error::InsufficientLevels { need: 2, got: all.len() })?;
    let fit = |parity: usize| -> Result<(f64, f64)> {
        match selector.levels(parity) {
            None => Ok((ls, 2.0 * ls_se)),
            Some(levels) => {
                let pts = series.points(Some(&levels));
                least_squares(&pts)
                    .map(|(s, se)| (s, 2.0 * se))
                    .ok_or(Error::InsufficientLevels { need: 2, got: pts.len() })
            }
        }
    };
    let (upper, upper_halfwidth) = fit(1)?;
    let (lower, lower_halfwidth) = fit(0)?;
    Ok(DimEstimate { upper, lower, upper_halfwidth, lower_halfwidth, least_squares: ls, selector: selector.name() })
}

/// One comparison of the exponent ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct CeilingCheck {
    pub j: u32,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|P_j f(x)|` (when `d - sp > 0`) or `|R_j f(x)|` (when `d - sp < 0`)
/// against `C_w M 2^{(d/p - s) j}` with `M` the `B^{s,infinity}_p` bound.
pub fn exponent_ceiling(f: &Expansion, x: &DyadicPoint, j_max: u32) -> Result<Vec<CeilingCheck>> {
    let crit = f.space.critical();
    if crit.is_zero() {
        return Ok(Vec::new());
    }
    let m = f.besov_norm()?.weak_bound();
    let cw = f.wavelet.c_w();
    let (d, s, p) = (f.d() as f64, f.space.s(), f.space.p());
    let (ps, rs) = f.sums(x, j_max)?;
    let src = if crit > num_rational::BigRational::zero() { ps } else { rs };
    Ok((0..=j_max)
        .map(|j| {
            let value = src[j as usize].abs();
            let bound = cw * m * ((d / p - s) * j as f64).exp2();
            CeilingCheck { j, value, bound, holds: value <= bound * (1.0 + 1e-12) }
        })
        .collect())
}

/// Window coherence: when the liminf estimate over `[J/2, J]` is at least
/// `beta + delta`, some detail level in `[(1 - eps) j, (1 + eps) j]` has
/// magnitude at least `2^{(beta - 2 delta) j}` for every `j` of the window.
/// Returns `None` when the hypothesis fails.
pub fn window_coherence(f: &Expansion, x: &DyadicPoint, j_end: u32, beta: f64, delta: f64) -> Result<Option<bool>> {
    let eps = 0.2;
    let series = exponent_series(f, x, Mode::PartialSum, 1..=j_end, 0.5)?;
    match series.liminf_est {
        Some(l) if l >= beta + delta => {}
        _ => return Ok(None),
    }
    let details = f.detail_values(x)?;
    for j in series.window.0..=series.window.1 {
        let lo = ((1.0 - eps) * j as f64).floor() as u32;
        let hi = ((1.0 + eps) * j as f64).ceil() as u32;
        let best = details.iter().filter(|(l, _)| (lo..=hi).contains(l)).map(|(_, q)| q.abs()).fold(0.0, f64::max);
        if best < ((beta - 2.0 * delta) * j as f64).exp2() {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

/// `exponents.csv`: one row per series, `a_j` columns over the shared range.
pub fn write_exponents_csv(path: &Path, series: &[ExponentSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let j_min = series.iter().map(|s| s.j_min).min().unwrap_or(0);
    let j_max = series.iter().map(|s| s.j_min + s.values.len() as u32).max().unwrap_or(0);
    let mut header = vec!["x".to_string(), "mode".to_string()];
    header.extend((j_min..j_max).map(|j| format!("a_{j}")));
    header.extend(["limsup_est".to_string(), "liminf_est".to_string()]);
    w.write_record(&header)?;
    let est = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), format_f64);
    for s in series {
        let mut row = vec![s.x.to_string(), s.mode.name().to_string()];
        row.extend((j_min..j_max).map(|j| s.a(j).map_or_else(String::new, format_f64)));
        row.push(est(s.limsup_est));
        row.push(est(s.liminf_est));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `boxcount.csv`: `j, N_j, selector` rows.
pub fn write_boxcount_csv(path: &Path, series: &BoxCountSeries, selector: &Selector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["j", "N_j", "selector"])?;
    let upper = selector.levels(1).unwrap_or_default();
    let lower = selector.levels(0).unwrap_or_default();
    for (j, c) in series.levels.iter().zip(&series.counts) {
        let tag = match (upper.contains(j), lower.contains(j)) {
            _ if matches!(selector, Selector::All) => "all",
            (true, _) => "upper",
            (_, true) => "lower",
            _ => "",
        };
        w.write_record([j.to_string(), c.to_string(), tag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `dims.json` with the slope estimates.
pub fn write_dims_json(path: &Path, est: &DimEstimate) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&est.to_json())? + "\n")?;
    Ok(())
}
