//! Experiment configuration files and their translation into builder inputs.

use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::analysis::{LevelKind, Mode, DEFAULT_WINDOW};
use crate::cantor::{find_counterexample_params, TargetSet};
use crate::dyadic::{DyadicCube, DyadicPoint};
use crate::error::{Error, Result};
use crate::expansion::{parse_rational_str, rat_f64, Space};
use crate::saturate::{
    build_convergence, build_divergence, build_gauge_minus_s, build_multibeta, build_packing_neg, build_packing_pos,
    build_phased, build_zero_exponent, Built, GaugeSpec, MultiBetaSpec, PackingSpec, SaturationSpec, ZeroExponentSpec,
    ZeroSign,
};
use crate::wavelet::{build_system, Family, WaveletSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub wavelet: WaveletConfig,
    pub builder: BuilderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub d: usize,
    pub s: String,
    pub p: String,
    pub q: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    pub family: String,
    #[serde(default = "one")]
    pub order: usize,
    #[serde(default = "default_resolution")]
    pub resolution: u32,
}

fn one() -> usize {
    1
}

fn default_resolution() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum TargetConfig {
    Whole,
    Points(Vec<PointConfig>),
    /// Cubes as `[j, k...]`.
    Cubes(Vec<Vec<i64>>),
    LeftSegment { t_prime: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub num: Vec<i64>,
    pub res: u32,
}

impl PointConfig {
    pub fn point(&self) -> DyadicPoint {
        DyadicPoint::from_i64(&self.num, self.res)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "name", rename_all = "snake_case")]
pub enum BuilderConfig {
    Divergence {
        #[serde(rename = "N")]
        n: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<u32>,
        target: TargetConfig,
        alpha_prime: String,
        n_max: u32,
    },
    Phased {
        #[serde(rename = "N")]
        n: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<u32>,
        target: TargetConfig,
        alpha_prime: String,
        n_max: u32,
        #[serde(rename = "J")]
        j: u32,
        /// Which residue class is estimated.
        #[serde(default)]
        phase: u32,
    },
    Convergence {
        #[serde(rename = "N")]
        n: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<u32>,
        target: TargetConfig,
        alpha_prime: String,
        n_max: u32,
    },
    #[serde(rename = "multibeta")]
    MultiBeta {
        #[serde(rename = "N")]
        n: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<u32>,
        betas: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_dims: Option<Vec<f64>>,
        n_max: u32,
    },
    PackingPos {
        beta: String,
        #[serde(default = "t_min")]
        t_min: u32,
        l_max: u32,
    },
    PackingNeg {
        beta: String,
        #[serde(default = "t_min")]
        t_min: u32,
        l_max: u32,
    },
    ZeroExponent {
        u: String,
        #[serde(rename = "N")]
        n: u32,
        t: u32,
        eps: String,
        k_max: u32,
        sign: String,
    },
    GaugeMinusS {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<u32>,
        depth: u32,
    },
}

fn t_min() -> u32 {
    1
}

/// Exponent estimation at chosen points, compared with the builder's target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub mode: String,
    /// Explicit points; the builder's witnesses when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointConfig>>,
    pub j_min: u32,
    pub j_max: u32,
    #[serde(default = "default_window")]
    pub window: f64,
    pub tolerance: f64,
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

/// Level-set extraction on a generation-endpoint grid plus box counting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub mode: String,
    pub beta: f64,
    pub tolerance: f64,
    /// `exact`, `lower` or `upper`.
    pub kind: String,
    pub grid_generation: u32,
    pub j_min: u32,
    pub j_max: u32,
    pub box_levels: Vec<u32>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; parsing it back yields the same bytes.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

/// Parse a rational exponent, rejecting infinity explicitly.
pub fn exponent_param(name: &str, raw: &str) -> Result<BigRational> {
    let t = raw.trim().to_ascii_lowercase();
    if matches!(t.as_str(), "inf" | "infinity" | "+inf" | "\u{221e}") {
        return Err(Error::Config(format!("{name} = {raw}: only p,q < \u{221e} supported")));
    }
    parse_rational_str(raw).map_err(|e| Error::Config(format!("{name}: {e}")))
}

/// Everything a config resolves to before any computation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub space: Space,
    pub wavelet: Arc<WaveletSystem>,
}

/// Validate the cross-module parameter domains and build the wavelet system.
pub fn resolve(cfg: &ExperimentConfig) -> Result<Resolved> {
    let s = exponent_param("s", &cfg.space.s)?;
    let p = exponent_param("p", &cfg.space.p)?;
    let q = exponent_param("q", &cfg.space.q)?;
    let space = Space::new(cfg.space.d, s, p, q).map_err(|e| Error::Config(e.to_string()))?;
    let family = Family::parse(&cfg.wavelet.family, cfg.wavelet.order).map_err(|e| Error::Config(e.to_string()))?;
    let w = build_system(family, 1, cfg.wavelet.resolution)?;
    w.check_regularity(space.s(), space.p())?;
    let w = if cfg.space.d > 1 { w.with_dimension(cfg.space.d) } else { w };
    if let Some(e) = &cfg.estimate {
        Mode::parse(&e.mode)?;
        if e.j_min > e.j_max || !(e.window > 0.0 && e.window <= 1.0) {
            return Err(Error::Config("estimate needs j_min <= j_max and window in (0, 1]".into()));
        }
    }
    if let Some(sp) = &cfg.spectrum {
        Mode::parse(&sp.mode)?;
        level_kind(&sp.kind)?;
    }
    Ok(Resolved { space, wavelet: Arc::new(w) })
}

pub fn level_kind(s: &str) -> Result<LevelKind> {
    match s {
        "exact" => Ok(LevelKind::Exact),
        "lower" => Ok(LevelKind::Lower),
        "upper" => Ok(LevelKind::Upper),
        other => Err(Error::Config(format!("unknown level-set kind {other:?}"))),
    }
}

fn target(t: &TargetConfig) -> Result<TargetSet> {
    Ok(match t {
        TargetConfig::Whole => TargetSet::Whole,
        TargetConfig::Points(ps) => TargetSet::Points(ps.iter().map(PointConfig::point).collect()),
        TargetConfig::Cubes(cs) => TargetSet::Cubes(
            cs.iter()
                .map(|c| match c.split_first() {
                    Some((j, k)) if *j >= 0 && !k.is_empty() => Ok(DyadicCube::new(*j as u32, k.iter().map(|v| BigInt::from(*v)).collect())),
                    _ => Err(Error::Config("cube needs [j, k...]".into())),
                })
                .collect::<Result<_>>()?,
        ),
        TargetConfig::LeftSegment { t_prime } => TargetSet::LexPrefix { t_prime: *t_prime },
    })
}

fn real(name: &str, raw: &str) -> Result<f64> {
    Ok(rat_f64(&exponent_param(name, raw)?))
}

fn saturation(r: &Resolved, n: u32, t: Option<u32>, tg: &TargetConfig, alpha_prime: &str, n_max: u32) -> Result<SaturationSpec> {
    Ok(SaturationSpec {
        space: r.space.clone(),
        wavelet: Arc::clone(&r.wavelet),
        n,
        t,
        target: target(tg)?,
        alpha_prime: real("alpha_prime", alpha_prime)?,
        n_max,
    })
}

/// Run the configured builder.
pub fn build(cfg: &ExperimentConfig, r: &Resolved) -> Result<Built> {
    match &cfg.builder {
        BuilderConfig::Divergence { n, t, target, alpha_prime, n_max } => {
            build_divergence(&saturation(r, *n, *t, target, alpha_prime, *n_max)?)
        }
        BuilderConfig::Phased { n, t, target, alpha_prime, n_max, j, phase } => {
            if *phase >= *j {
                return Err(Error::Config(format!("phase {phase} must be below J = {j}")));
            }
            let mut all = build_phased(&saturation(r, *n, *t, target, alpha_prime, *n_max)?, *j)?;
            Ok(all.swap_remove(*phase as usize))
        }
        BuilderConfig::Convergence { n, t, target, alpha_prime, n_max } => {
            build_convergence(&saturation(r, *n, *t, target, alpha_prime, *n_max)?)
        }
        BuilderConfig::MultiBeta { n, t, betas, target_dims, n_max } => build_multibeta(&MultiBetaSpec {
            space: r.space.clone(),
            wavelet: Arc::clone(&r.wavelet),
            n: *n,
            t: *t,
            betas: betas.iter().map(|b| real("beta", b)).collect::<Result<_>>()?,
            target_dims: target_dims.clone(),
            n_max: *n_max,
        }),
        BuilderConfig::PackingPos { beta, t_min, l_max } | BuilderConfig::PackingNeg { beta, t_min, l_max } => {
            let b = exponent_param("beta", beta)?;
            let params = find_counterexample_params(&r.space.s, &r.space.p, &b, *t_min)?;
            let spec = PackingSpec { space: r.space.clone(), wavelet: Arc::clone(&r.wavelet), params, l_max: *l_max };
            if matches!(cfg.builder, BuilderConfig::PackingPos { .. }) {
                build_packing_pos(&spec)
            } else {
                build_packing_neg(&spec)
            }
        }
        BuilderConfig::ZeroExponent { u, n, t, eps, k_max, sign } => build_zero_exponent(&ZeroExponentSpec {
            space: r.space.clone(),
            wavelet: Arc::clone(&r.wavelet),
            u: exponent_param("u", u)?,
            n: *n,
            t: *t,
            eps: exponent_param("eps", eps)?,
            k_max: *k_max,
            sign: match sign.as_str() {
                "+" => ZeroSign::Plus,
                "-" => ZeroSign::Minus,
                other => return Err(Error::Config(format!("sign must be \"+\" or \"-\", found {other:?}"))),
            },
        }),
        BuilderConfig::GaugeMinusS { t, depth } => build_gauge_minus_s(&GaugeSpec {
            space: r.space.clone(),
            wavelet: Arc::clone(&r.wavelet),
            t: *t,
            depth: *depth,
        }),
    }
}
