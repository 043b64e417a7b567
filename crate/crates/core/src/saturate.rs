//! Saturating functions: explicit expansions whose partial sums or
//! remainders reach a prescribed exponent on a prescribed Cantor set.
//!
//! Every recipe places one coefficient per cube `lambda` of a generation on
//! the companion cube `mu(lambda)`, wavelet index 1, divided by the
//! certificate's lower bound so the shifted wavelet is at least 1 on `lambda`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::cantor::{
    intersecting_cubes, two_scale_sequence, CantorKind, CantorParams, CantorSystem, CounterexampleParams, TargetSet,
    DEFAULT_BUDGET,
};
use crate::dyadic::DyadicPoint;
use crate::error::{param, Error, Result};
use crate::expansion::{log2_biguint, rat_f64, Block, Expansion, Space};
use crate::wavelet::WaveletSystem;

/// `log2` of the Besov norm of a single-generation term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermNorm {
    pub index: u32,
    pub level: u32,
    pub log2_norm: f64,
}

/// One verified claim of a builder certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub anchor: &'static str,
    pub detail: String,
    pub holds: bool,
}

impl Check {
    pub fn to_json(&self) -> Value {
        json!({"anchor": self.anchor, "detail": self.detail, "holds": self.holds})
    }
}

/// Builder output: the expansion plus what is needed to verify it.
#[derive(Debug, Clone)]
pub struct Built {
    pub expansion: Expansion,
    pub system: Arc<CantorSystem>,
    pub target: TargetSet,
    /// Target exponent of the recipe, when it prescribes one.
    pub target_exponent: Option<f64>,
    pub term_norms: Vec<TermNorm>,
    pub checks: Vec<Check>,
    /// Points of the target set used to verify the exponent.
    pub witnesses: Vec<DyadicPoint>,
}

impl Built {
    /// Largest term norm (`sup_n ||f_n||`).
    pub fn sup_term_norm(&self) -> f64 {
        self.term_norms.iter().map(|t| t.log2_norm).fold(f64::NEG_INFINITY, f64::max).exp2()
    }

    pub fn certificate(&self) -> Value {
        json!({
            "builder": self.expansion.builder,
            "system": self.system.to_json(true),
            "target": self.target.to_json(),
            "target_exponent": self.target_exponent,
            "term_norms": self.term_norms.iter().map(|t| json!({"index": t.index, "level": t.level, "log2_norm": t.log2_norm})).collect::<Vec<_>>(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Shared inputs of the homogeneous-set recipes.
#[derive(Debug, Clone)]
pub struct SaturationSpec {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
    /// Radix `N` of the homogeneous set.
    pub n: u32,
    /// Generation of `K_0`; defaults to the certificate's.
    pub t: Option<u32>,
    pub target: TargetSet,
    /// Working exponent `alpha'`.
    pub alpha_prime: f64,
    pub n_max: u32,
}

fn effective_m(w: &WaveletSystem) -> Result<f64> {
    w.effective_m().ok_or(Error::CertificateNotFound(crate::wavelet::CERTIFICATE_T_CAP))
}

fn homogeneous_system(spec: &SaturationSpec) -> Result<Arc<CantorSystem>> {
    let params = CantorParams::for_wavelet(&spec.wavelet, CantorKind::Homogeneous { n: spec.n }, spec.t)?;
    Ok(Arc::new(CantorSystem::new(params, spec.n_max, DEFAULT_BUDGET)?))
}

/// Add `value * sum_{lambda in Gamma_n} psi_{mu(lambda)}` to `e`; returns `card(Gamma_n)`.
fn add_generation(e: &mut Expansion, sys: &Arc<CantorSystem>, target: &TargetSet, n: u32, value: f64) -> Result<BigUint> {
    if target.is_structured() {
        let block = Block::new(1, value, Arc::clone(sys), n, target.clone())?;
        let card = block.card.clone();
        e.add_block(block)?;
        Ok(card)
    } else {
        let gamma = intersecting_cubes(sys, target, n)?;
        for lambda in &gamma {
            e.add_detail(1, sys.mu(lambda)?, value)?;
        }
        Ok(BigUint::from(gamma.len()))
    }
}

/// `log2 ||c sum_{Gamma} psi_mu||` for a single level `j`.
fn term_log2_norm(space: &Space, level: u32, card: &BigUint, log2_c: f64) -> f64 {
    let (s, p, d) = (space.s(), space.p(), space.d as f64);
    (s - d / p) * level as f64 + log2_biguint(card) / p + log2_c
}

fn metadata(name: &str, params: Value) -> Value {
    json!({"name": name, "params": params})
}

fn check_alpha_prime(spec: &SaturationSpec, sys: &CantorSystem, convergence: bool) -> Result<()> {
    let crit = rat_f64(&spec.space.critical());
    let a = spec.alpha_prime;
    let kappa = sys.theoretical_dims().1;
    let dim_g = spec.target.box_dim(sys);
    let op = if convergence { "build_convergence" } else { "build_divergence" };
    if !a.is_finite() {
        return Err(param(op, "alpha' must be finite"));
    }
    if convergence {
        if !(a > crit.max(0.0) && a < kappa) {
            return Err(param(op, format!("alpha' = {a} must lie in (max(0, d - sp), kappa) = ({}, {kappa})", crit.max(0.0))));
        }
    } else if spec.space.s.is_zero() {
        if !(a > 0.0 && a < kappa) {
            return Err(param(op, format!("with s = 0, alpha' = {a} must lie in (0, kappa) = (0, {kappa})")));
        }
    } else if !(a > 0.0 && a < crit && a < kappa) {
        return Err(param(op, format!("alpha' = {a} must lie in (0, d - sp) = (0, {crit}) and below kappa = {kappa}")));
    }
    if !(dim_g < a) {
        return Err(param(op, format!("the target's box dimension {dim_g} must be below alpha' = {a}")));
    }
    Ok(())
}

/// `sum_n weight(n) f_n` with `f_n = 2^{level(n)(d - sp - alpha')/p} sum_{Gamma_n} psi_{mu(lambda)}`.
fn saturation_sum(
    spec: &SaturationSpec,
    sys: &Arc<CantorSystem>,
    e: &mut Expansion,
    outer_weight: f64,
    include: impl Fn(u32) -> bool,
) -> Result<Vec<TermNorm>> {
    let m = effective_m(&spec.wavelet)?;
    let (p, d) = (spec.space.p(), spec.space.d as f64);
    let crit = d - spec.space.s() * p;
    let mut norms = Vec::new();
    for n in 1..=spec.n_max {
        if !include(n) {
            continue;
        }
        let level = sys.level(n) as f64;
        let log2_c = level * (crit - spec.alpha_prime) / p - m.log2();
        let value = outer_weight * (log2_c.exp2()) / (n as f64 * n as f64);
        let card = add_generation(e, sys, &spec.target, n, value)?;
        norms.push(TermNorm {
            index: n,
            level: sys.mu_level(n),
            log2_norm: term_log2_norm(&spec.space, sys.mu_level(n), &card, log2_c),
        });
    }
    Ok(norms)
}

fn saturation_params(spec: &SaturationSpec, sys: &CantorSystem) -> Value {
    json!({
        "space": spec.space.to_json(),
        "cantor": sys.params.to_json(),
        "target": spec.target.to_json(),
        "alpha_prime": spec.alpha_prime,
        "n_max": spec.n_max,
    })
}

fn norm_check(anchor: &'static str, norms: &[TermNorm], bound_log2: f64) -> Check {
    let worst = norms.iter().map(|t| t.log2_norm).fold(f64::NEG_INFINITY, f64::max);
    Check {
        anchor,
        detail: format!("max log2 ||f_n|| = {worst:.6} against log2 bound {bound_log2:.6}"),
        holds: worst <= bound_log2 + 1e-9,
    }
}

/// Divergence recipe: `f = sum_n n^{-2} f_n`, nonnegative partial sums on `K`
/// and partial-sum exponent `(d - sp - alpha')/p` on the target.
pub fn build_divergence(spec: &SaturationSpec) -> Result<Built> {
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let sys = homogeneous_system(spec)?;
    check_alpha_prime(spec, &sys, false)?;
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let norms = saturation_sum(spec, &sys, &mut e, 1.0, |_| true)?;
    e.n_max = spec.n_max;
    e.trusted_depth = sys.mu_level(spec.n_max);
    e.builder = metadata("divergence", saturation_params(spec, &sys));
    let c_g = target_growth_constant(spec, &sys)?;
    Ok(Built {
        expansion: e,
        target: spec.target.clone(),
        target_exponent: Some((rat_f64(&spec.space.critical()) - spec.alpha_prime) / spec.space.p()),
        checks: vec![norm_check("divergence recipe norm bound", &norms, c_g.log2() - effective_m(&spec.wavelet)?.log2())],
        term_norms: norms,
        witnesses: witness_points(&spec.target, &sys, spec.n_max),
        system: sys,
    })
}

/// `C_G = sup_n card(Gamma_n) 2^{-level(n) alpha'}` over the realized generations, as `C^{1/p}`.
fn target_growth_constant(spec: &SaturationSpec, sys: &CantorSystem) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=spec.n_max {
        let card = if spec.target.is_structured() {
            match &spec.target {
                TargetSet::Whole => sys.card(n),
                t => t.prefix_count(sys.layout(), n),
            }
        } else {
            BigUint::from(intersecting_cubes(sys, &spec.target, n)?.len())
        };
        worst = worst.max(log2_biguint(&card) - sys.level(n) as f64 * spec.alpha_prime);
    }
    let sp = spec.space.s() * spec.space.p();
    // the norm display also carries 2^{t (d - sp - alpha')}
    let shift = sys.t() as f64 * (spec.space.d as f64 - sp - spec.alpha_prime);
    Ok(((worst.max(0.0) + shift.max(0.0)) / spec.space.p()).exp2())
}

fn witness_points(target: &TargetSet, sys: &CantorSystem, n_max: u32) -> Vec<DyadicPoint> {
    match target {
        TargetSet::Points(ps) => ps.clone(),
        _ => vec![sys.leftmost_point(n_max)],
    }
}

/// Phased recipe: `f_k = sum_{n = k mod J} n^{-2} f_n` for `k = 0 .. J-1`.
pub fn build_phased(spec: &SaturationSpec, j_phases: u32) -> Result<Vec<Built>> {
    if j_phases == 0 {
        return Err(param("build_phased", "J must be at least 1"));
    }
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let sys = homogeneous_system(spec)?;
    check_alpha_prime(spec, &sys, false)?;
    let c_g = target_growth_constant(spec, &sys)?;
    let m = effective_m(&spec.wavelet)?;
    (0..j_phases)
        .map(|k| {
            let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
            let norms = saturation_sum(spec, &sys, &mut e, 1.0, |n| n % j_phases == k)?;
            e.n_max = spec.n_max;
            e.trusted_depth = sys.mu_level(spec.n_max);
            let mut params = saturation_params(spec, &sys);
            params["J"] = json!(j_phases);
            params["phase"] = json!(k);
            e.builder = metadata("phased", params);
            Ok(Built {
                expansion: e,
                target: spec.target.clone(),
                target_exponent: Some((rat_f64(&spec.space.critical()) - spec.alpha_prime) / spec.space.p()),
                checks: vec![norm_check("phased recipe norm bound", &norms, c_g.log2() - m.log2())],
                term_norms: norms,
                witnesses: witness_points(&spec.target, &sys, spec.n_max),
                system: Arc::clone(&sys),
            })
        })
        .collect()
}

/// Convergence recipe: same coefficients with `alpha' > d - sp`; nonnegative
/// remainders on `K` and remainder exponent `(d - sp - alpha')/p` on the target.
pub fn build_convergence(spec: &SaturationSpec) -> Result<Built> {
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let sys = homogeneous_system(spec)?;
    check_alpha_prime(spec, &sys, true)?;
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let norms = saturation_sum(spec, &sys, &mut e, 1.0, |_| true)?;
    e.n_max = spec.n_max;
    e.trusted_depth = sys.mu_level(spec.n_max);
    e.builder = metadata("convergence", saturation_params(spec, &sys));
    let c_g = target_growth_constant(spec, &sys)?;
    let crit = rat_f64(&spec.space.critical());
    Ok(Built {
        expansion: e,
        target: spec.target.clone(),
        target_exponent: Some((crit - spec.alpha_prime) / spec.space.p()),
        checks: vec![
            norm_check("convergence recipe norm bound", &norms, c_g.log2() - effective_m(&spec.wavelet)?.log2()),
            Check {
                anchor: "convergence recipe summability",
                detail: format!("alpha' - (d - sp) = {}", spec.alpha_prime - crit),
                holds: spec.alpha_prime > crit,
            },
        ],
        term_norms: norms,
        witnesses: witness_points(&spec.target, &sys, spec.n_max),
        system: sys,
    })
}

/// Inputs of the multi-exponent recipe.
#[derive(Debug, Clone)]
pub struct MultiBetaSpec {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
    pub n: u32,
    pub t: Option<u32>,
    /// Exponents, any order; realized ascending.
    pub betas: Vec<f64>,
    /// Box dimension of each `F_beta`; defaults to `alpha'(beta) / 2`.
    pub target_dims: Option<Vec<f64>>,
    pub n_max: u32,
}

/// Multi-exponent recipe: `f = sum_k 2^{-k} f_k` with `f_k` saturating
/// `F_{beta_k}`, a decreasing family of left segments of `K`.
pub fn build_multibeta(spec: &MultiBetaSpec) -> Result<Built> {
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    if spec.space.d != 1 {
        return Err(param("build_multibeta", "nested left segments are one-dimensional"));
    }
    let params = CantorParams::for_wavelet(&spec.wavelet, CantorKind::Homogeneous { n: spec.n }, spec.t)?;
    let sys = Arc::new(CantorSystem::new(params, spec.n_max, DEFAULT_BUDGET)?);
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    e.n_max = spec.n_max;
    e.trusted_depth = sys.mu_level(spec.n_max);
    let p = spec.space.p();
    let crit = rat_f64(&spec.space.critical());
    let mut order: Vec<usize> = (0..spec.betas.len()).collect();
    order.sort_by(|a, b| spec.betas[*a].total_cmp(&spec.betas[*b]));
    let mut norms = Vec::new();
    let mut checks = Vec::new();
    let mut witnesses = Vec::new();
    let mut targets = Vec::new();
    let mut last_t_prime = f64::NEG_INFINITY;
    for (rank, &idx) in order.iter().enumerate() {
        let beta = spec.betas[idx];
        let alpha_prime = crit - beta * p;
        let dim = match &spec.target_dims {
            Some(d) => *d.get(idx).ok_or_else(|| param("build_multibeta", "one target dimension per beta"))?,
            None => alpha_prime / 2.0,
        };
        let t_prime = spec.n as f64 * (1.0 - dim);
        if t_prime < last_t_prime {
            return Err(Error::ConstructionMismatch(format!(
                "target sets are not nested: beta = {beta} needs a larger set than a smaller beta"
            )));
        }
        last_t_prime = t_prime;
        let target = TargetSet::LexPrefix { t_prime };
        let sub = SaturationSpec {
            space: spec.space.clone(),
            wavelet: Arc::clone(&spec.wavelet),
            n: spec.n,
            t: spec.t,
            target: target.clone(),
            alpha_prime,
            n_max: spec.n_max,
        };
        target.validate(&sys)?;
        check_alpha_prime(&sub, &sys, false)?;
        let weight = (-((rank + 1) as f64)).exp2();
        norms.extend(saturation_sum(&sub, &sys, &mut e, weight, |_| true)?);
        checks.push(Check {
            anchor: "multi-exponent nested family",
            detail: format!("beta = {beta}: left segment of dimension {dim} below alpha' = {alpha_prime}"),
            holds: dim < alpha_prime,
        });
        targets.push((beta, target));
    }
    // witnesses: the last kept cube of F_{beta_k} lies outside F_{beta_{k+1}} deep down
    for (pos, (_, target)) in targets.iter().enumerate() {
        let point = if pos + 1 == targets.len() {
            sys.leftmost_point(spec.n_max)
        } else {
            let count = target.prefix_count(sys.layout(), spec.n_max);
            last_prefix_corner(&sys, spec.n_max, &count)
        };
        witnesses.push(point);
    }
    e.builder = metadata(
        "multibeta",
        json!({
            "space": spec.space.to_json(),
            "cantor": sys.params.to_json(),
            "betas": targets.iter().map(|(b, _)| *b).collect::<Vec<_>>(),
            "targets": targets.iter().map(|(_, t)| t.to_json()).collect::<Vec<_>>(),
            "n_max": spec.n_max,
        }),
    );
    Ok(Built {
        expansion: e,
        system: sys,
        target: targets.last().map(|(_, t)| t.clone()).unwrap_or(TargetSet::Points(Vec::new())),
        target_exponent: targets.last().map(|(b, _)| *b),
        term_norms: norms,
        checks,
        witnesses,
    })
}

/// Corner of the cube of rank `count - 1` in generation `n` (lexicographic).
fn last_prefix_corner(sys: &CantorSystem, n: u32, count: &BigUint) -> DyadicPoint {
    let layout = sys.layout();
    let mut rem = count - BigUint::one();
    let mut digits = vec![0u128; n as usize];
    for i in (1..=n).rev() {
        let base = BigUint::from(layout.digit_count(i));
        let q = &rem % &base;
        digits[(i - 1) as usize] = num_traits::ToPrimitive::to_u128(&q).unwrap_or(0);
        rem /= base;
    }
    layout.corner(n, &[digits])
}

/// Inputs of the two-scale packing recipes.
#[derive(Debug, Clone)]
pub struct PackingSpec {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
    pub params: CounterexampleParams,
    /// Last generation `l` of the series.
    pub l_max: u32,
}

fn packing_common(spec: &PackingSpec, name: &'static str) -> Result<(Arc<CantorSystem>, Expansion, Vec<TermNorm>, Vec<(u32, f64)>)> {
    let cp = &spec.params;
    if !cp.all_hold() {
        return Err(Error::Infeasible("counterexample parameters fail their inequalities".into()));
    }
    if spec.space.d != 1 || spec.space.s != cp.s || spec.space.p != cp.p {
        return Err(param(name, "space must match the counterexample parameters (d = 1)"));
    }
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let params = CantorParams::for_wavelet(
        &spec.wavelet,
        CantorKind::TwoScale { n: cp.n, u: cp.u.clone(), v: cp.v.clone() },
        Some(cp.t.max(spec.wavelet.certificate().map_or(1, |c| c.t))),
    )?;
    let sys = Arc::new(CantorSystem::new(params, spec.l_max, DEFAULT_BUDGET)?);
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let m = effective_m(&spec.wavelet)?;
    let (s, p) = (spec.space.s(), spec.space.p());
    let mut norms = Vec::new();
    let mut coeffs = Vec::new();
    for l in 1..=spec.l_max {
        let level = sys.mu_level(l);
        let log2_m = sys.layout().log2_card(l);
        // c_{Nl} = 2^{(Nl/p)(1 - sp)} M_l^{-1/p}
        let log2_c = level as f64 / p * (1.0 - s * p) - log2_m / p;
        coeffs.push((l, log2_c));
        let value = (log2_c - m.log2()).exp2() / (l as f64 * l as f64);
        let card = add_generation(&mut e, &sys, &TargetSet::Whole, l, value)?;
        norms.push(TermNorm { index: l, level, log2_norm: term_log2_norm(&spec.space, level, &card, log2_c) });
    }
    e.n_max = spec.l_max;
    e.trusted_depth = sys.mu_level(spec.l_max);
    e.builder = metadata(name, json!({"space": spec.space.to_json(), "counterexample": cp.to_json(), "l_max": spec.l_max}));
    Ok((sys, e, norms, coeffs))
}

/// Positive-exponent packing recipe: `f = sum_l l^{-2} c_{Nl} sum_{Gamma_l} psi_{mu(lambda)}`
/// over all cubes of the two-scale generations.
pub fn build_packing_pos(spec: &PackingSpec) -> Result<Built> {
    if !spec.params.beta.is_positive() {
        return Err(param("build_packing_pos", "beta must be positive"));
    }
    let (sys, e, norms, _) = packing_common(spec, "packing_pos")?;
    let checks = packing_checks(spec, &norms);
    let witnesses = vec![sys.leftmost_point(spec.l_max)];
    Ok(Built {
        expansion: e,
        system: sys,
        target: TargetSet::Whole,
        target_exponent: Some(rat_f64(&spec.params.beta)),
        term_norms: norms,
        checks,
        witnesses,
    })
}

/// Negative-exponent packing recipe: same coefficients, now decaying; adds the
/// convergence certificate `c_{Nl} <= C 2^{-delta N l}`.
pub fn build_packing_neg(spec: &PackingSpec) -> Result<Built> {
    if !spec.params.beta.is_negative() {
        return Err(param("build_packing_neg", "beta must be negative"));
    }
    let (sys, e, norms, coeffs) = packing_common(spec, "packing_neg")?;
    let mut checks = packing_checks(spec, &norms);
    let cp = &spec.params;
    let one = BigRational::one();
    let frac = BigRational::new(((cp.n - cp.t) as i64).into(), (cp.n as i64).into());
    let decay = (&one - &cp.s * &cp.p) - frac * (&cp.u - &one) / (&cp.u * &cp.v - &one);
    let delta = -rat_f64(&decay) / rat_f64(&cp.p);
    // c_{Nl} 2^{delta' N l} over the realized l, with delta' = delta / 2
    let half = delta / 2.0;
    let log2_const = coeffs.iter().map(|(l, c)| c + half * sys.mu_level(*l) as f64).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        anchor: "negative packing convergence certificate",
        detail: format!("asymptotic decay rate delta = {delta:.6}; c_Nl <= 2^{log2_const:.3} 2^(-{half:.6} N l) for every realized l"),
        holds: delta > 0.0 && log2_const.is_finite(),
    });
    let witnesses = vec![sys.leftmost_point(spec.l_max)];
    Ok(Built {
        expansion: e,
        system: sys,
        target: TargetSet::Whole,
        target_exponent: Some(rat_f64(&spec.params.beta)),
        term_norms: norms,
        checks,
        witnesses,
    })
}

fn packing_checks(spec: &PackingSpec, norms: &[TermNorm]) -> Vec<Check> {
    let mut checks = vec![norm_check("packing recipe norm bound", norms, 0.0)];
    for c in &spec.params.checks {
        checks.push(Check {
            anchor: "two-scale parameter inequality",
            detail: format!("{}: {} {:?} {}", c.label, c.lhs, c.relation, c.rhs),
            holds: c.holds,
        });
    }
    checks
}

/// Sign of the zero-exponent recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSign {
    /// Divergent partial sums with exponent 0.
    Plus,
    /// Convergent series whose remainders have exponent 0.
    Minus,
}

/// Inputs of the zero-exponent recipe.
#[derive(Debug, Clone)]
pub struct ZeroExponentSpec {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
    pub u: BigRational,
    pub n: u32,
    pub t: u32,
    /// Slack `epsilon` of the dimension window.
    pub eps: BigRational,
    /// Last index `k` of the series.
    pub k_max: u32,
    pub sign: ZeroSign,
}

/// Zero-exponent recipe on the two-scale set with `v = 1/(1 - sp)`:
/// `f = sum_k (k+1)^{-2} c_{N N_{2k}} sum_{Gamma_{N_{2k}}} psi_{mu(lambda)}`.
pub fn build_zero_exponent(spec: &ZeroExponentSpec) -> Result<Built> {
    let one = BigRational::one();
    let sp = &spec.space.s * &spec.space.p;
    if spec.space.d != 1 {
        return Err(param("build_zero_exponent", "the two-scale set is one-dimensional"));
    }
    if sp >= one {
        return Err(param("build_zero_exponent", "needs 1 - sp > 0"));
    }
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let v = &one / (&one - &sp);
    let frac = BigRational::new(((spec.n - spec.t) as i64).into(), (spec.n as i64).into());
    let ratio = (&spec.u - &one) / (&spec.u * &v - &one) * &frac;
    let lower = (&one - &spec.eps) * (&one - &sp);
    let window = ratio > lower && ratio < &one - &sp;
    if !window {
        return Err(param(
            "build_zero_exponent",
            format!("(u-1)/(uv-1) (N-t)/N = {ratio} must lie in ((1-eps)(1-sp), 1-sp) = ({lower}, {})", &one - &sp),
        ));
    }
    let seq = two_scale_sequence(&spec.u, &v, u64::MAX);
    let depth_idx = 2 * spec.k_max as usize;
    let depth = *seq.get(depth_idx).ok_or_else(|| param("build_zero_exponent", "k_max too large"))?;
    let depth = u32::try_from(depth).map_err(|_| param("build_zero_exponent", "depth overflow"))?;
    let params = CantorParams::for_wavelet(
        &spec.wavelet,
        CantorKind::TwoScale { n: spec.n, u: spec.u.clone(), v: v.clone() },
        Some(spec.t),
    )?;
    let sys = Arc::new(CantorSystem::new(params, depth, DEFAULT_BUDGET)?);
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let m = effective_m(&spec.wavelet)?;
    let mut norms = Vec::new();
    let sign = if spec.sign == ZeroSign::Plus { 1.0 } else { -1.0 };
    for k in 0..=spec.k_max {
        let n2k = seq[2 * k as usize] as u32;
        let level = sys.mu_level(n2k);
        let log2_c = sign * level as f64 / (k as f64 + 1.0);
        let value = (log2_c - m.log2()).exp2() / ((k as f64 + 1.0) * (k as f64 + 1.0));
        let card = add_generation(&mut e, &sys, &TargetSet::Whole, n2k, value)?;
        norms.push(TermNorm { index: k, level, log2_norm: term_log2_norm(&spec.space, level, &card, log2_c) });
    }
    let sup = zero_exponent_norm_sup(spec, &v, sign)?;
    e.n_max = spec.k_max;
    e.trusted_depth = sys.mu_level(depth);
    e.builder = metadata(
        "zero_exponent",
        json!({
            "space": spec.space.to_json(), "u": spec.u.to_string(), "v": v.to_string(), "N": spec.n, "t": spec.t,
            "eps": spec.eps.to_string(), "k_max": spec.k_max,
            "sign": if spec.sign == ZeroSign::Plus { "+" } else { "-" },
        }),
    );
    let realized = norms.iter().map(|t| t.log2_norm).fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        Check {
            anchor: "zero-exponent dimension window",
            detail: format!("(u-1)/(uv-1) (N-t)/N = {ratio}; packing dimension {}", rat_f64(&(&ratio * &v))),
            holds: window,
        },
        Check {
            anchor: "zero-exponent uniform norm bound",
            detail: format!("log2 sup_k ||f_k|| = {sup:.6} over all k (realized max {realized:.6})"),
            holds: sup.is_finite() && realized <= sup + 1e-9,
        },
    ];
    let witnesses = vec![sys.leftmost_point(depth)];
    Ok(Built {
        expansion: e,
        system: sys,
        target: TargetSet::Whole,
        target_exponent: Some(0.0),
        term_norms: norms,
        checks,
        witnesses,
    })
}

/// `log2 sup_k ||f_k||` over every `k`, realized or not, from the exact counts
/// `M_{N_{2k}}`; the exponent eventually decreases linearly, so the scan stops
/// once the terms are beyond any later maximum.
fn zero_exponent_norm_sup(spec: &ZeroExponentSpec, v: &BigRational, sign: f64) -> Result<f64> {
    let seq = two_scale_sequence(&spec.u, v, 1 << 40);
    let (s, p) = (spec.space.s(), spec.space.p());
    let full_bits = (spec.n - spec.t) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut log2_m = 0.0;
    let mut prev = 0u64;
    for k in 0..(seq.len() / 2) {
        let n2k = seq[2 * k];
        // count of full steps in [prev, n2k)
        let full: u64 = seq
            .chunks(2)
            .filter(|w| w.len() == 2)
            .map(|w| {
                let lo = w[0].max(prev);
                let hi = w[1].min(n2k);
                hi.saturating_sub(lo)
            })
            .sum();
        log2_m += full as f64 * full_bits;
        prev = n2k;
        let level = spec.n as f64 * n2k as f64;
        let log2_norm = (s - 1.0 / p) * level + log2_m / p + sign * level / (k as f64 + 1.0);
        best = best.max(log2_norm);
    }
    Ok(best)
}

/// Inputs of the gauge recipe.
#[derive(Debug, Clone)]
pub struct GaugeSpec {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
    pub t: Option<u32>,
    pub depth: u32,
}

/// Gauge recipe: `f = sum_n n^{-2} 2^{-W_n s} sum_{Theta_n} psi_{mu(lambda)}`
/// on the gauge Cantor set; remainder exponent `-s` on all of `K`.
pub fn build_gauge_minus_s(spec: &GaugeSpec) -> Result<Built> {
    if spec.space.s <= BigRational::zero() {
        return Err(param("build_gauge_minus_s", "s must be positive"));
    }
    if spec.space.d != 1 {
        return Err(param("build_gauge_minus_s", "the gauge set is one-dimensional"));
    }
    spec.wavelet.check_regularity(spec.space.s(), spec.space.p())?;
    let params = CantorParams::for_wavelet(&spec.wavelet, CantorKind::Gauge, spec.t)?;
    let sys = Arc::new(CantorSystem::new(params, spec.depth, DEFAULT_BUDGET)?);
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let m = effective_m(&spec.wavelet)?;
    let s = spec.space.s();
    let mut norms = Vec::new();
    for n in 1..=spec.depth {
        let level = sys.mu_level(n);
        let log2_c = -(level as f64) * s;
        let value = (log2_c - m.log2()).exp2() / (n as f64 * n as f64);
        let card = add_generation(&mut e, &sys, &TargetSet::Whole, n, value)?;
        norms.push(TermNorm { index: n, level, log2_norm: term_log2_norm(&spec.space, level, &card, log2_c) });
    }
    e.n_max = spec.depth;
    e.trusted_depth = sys.mu_level(spec.depth);
    e.builder = metadata(
        "gauge_minus_s",
        json!({"space": spec.space.to_json(), "cantor": sys.params.to_json(), "depth": spec.depth}),
    );
    let checks = vec![norm_check("gauge recipe norm bound", &norms, 0.0)];
    let witnesses = vec![sys.leftmost_point(spec.depth)];
    Ok(Built {
        expansion: e,
        system: sys,
        target: TargetSet::Whole,
        target_exponent: Some(-s),
        term_norms: norms,
        checks,
        witnesses,
    })
}

/// Single term `f_n` of the divergence recipe (unit weight), for norm checks.
pub fn divergence_term(spec: &SaturationSpec, n: u32) -> Result<Expansion> {
    let sys = homogeneous_system(&SaturationSpec { n_max: n, ..spec.clone() })?;
    let mut e = Expansion::new(spec.space.clone(), Arc::clone(&spec.wavelet))?;
    let m = effective_m(&spec.wavelet)?;
    let (p, d) = (spec.space.p(), spec.space.d as f64);
    let crit = d - spec.space.s() * p;
    let level = sys.level(n) as f64;
    let value = (level * (crit - spec.alpha_prime) / p - m.log2()).exp2();
    add_generation(&mut e, &sys, &spec.target, n, value)?;
    e.n_max = n;
    Ok(e)
}
