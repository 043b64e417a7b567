//! Cantor constructions driven by a positivity certificate.
//!
//! Every construction here is a digit system: generation `i` appends one
//! base-`2^{r_i}` digit to the address `l` of each cube, and a cube of
//! generation `n` is `[(k + l 2^t) / 2^{t + W_n}, ...)` with `W_n = r_1 + ... + r_n`.
//! Its companion cube is `mu = [l / 2^{W_n}, ...)`.
//!
//! Digits of a full step are `k 2^{r-t} + q sigma`, `q < 2^{r-t-log2 sigma}`,
//! where `sigma` is the smallest power of two at least the wavelet support
//! length (1 for Haar). A copy step keeps a single digit.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::dyadic::{DyadicCube, DyadicPoint};
use crate::error::{param, Error, Result};
use crate::wavelet::WaveletSystem;

/// Default number of cubes materialized eagerly.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Largest radix (bits per generation) supported by the digit arithmetic.
pub const MAX_RADIX: u32 = 120;

#[derive(Debug, Clone, PartialEq)]
pub enum CantorKind {
    /// Self-similar set with `2^{N-t}` similarities of ratio `2^{-N}`.
    Homogeneous { n: u32 },
    /// Alternating subdivide/copy steps with boundaries `N_0 = 1`,
    /// `N_{2k+1} = ceil(u N_{2k})`, `N_{2k+2} = ceil(v N_{2k+1})`.
    TwoScale {
        n: u32,
        u: BigRational,
        v: BigRational,
    },
    /// Growing radix `N_n = n + t` (plus the stride bits).
    Gauge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorParams {
    pub kind: CantorKind,
    pub t: u32,
    /// Left index of `K_0` per coordinate.
    pub k: Vec<u64>,
    /// `log2` of the digit stride.
    pub stride_bits: u32,
}

impl CantorParams {
    pub fn homogeneous(t: u32, k: u64, n: u32) -> Self {
        CantorParams {
            kind: CantorKind::Homogeneous { n },
            t,
            k: vec![k],
            stride_bits: 0,
        }
    }

    pub fn two_scale(t: u32, k: u64, n: u32, u: BigRational, v: BigRational) -> Self {
        CantorParams {
            kind: CantorKind::TwoScale { n, u, v },
            t,
            k: vec![k],
            stride_bits: 0,
        }
    }

    pub fn gauge(t: u32, k: u64) -> Self {
        CantorParams {
            kind: CantorKind::Gauge,
            t,
            k: vec![k],
            stride_bits: 0,
        }
    }

    /// Parameters anchored on a wavelet's positivity certificate.
    ///
    /// `t` may exceed the certificate generation; the leftmost sub-interval is used.
    pub fn for_wavelet(w: &WaveletSystem, kind: CantorKind, t: Option<u32>) -> Result<Self> {
        let cert = w.certificate().ok_or(Error::CertificateNotFound(crate::wavelet::CERTIFICATE_T_CAP))?;
        let t = t.unwrap_or(cert.t);
        if t < cert.t {
            return Err(param("cantor", format!("t = {t} is below the certificate generation {}", cert.t)));
        }
        let up = t - cert.t;
        let mut k = vec![cert.k << up];
        if w.d > 1 {
            let sb = w
                .scaling_bound()
                .ok_or_else(|| param("cantor", "no positive interval of the scaling function at the certificate generation"))?;
            k.extend(std::iter::repeat_n(sb.k << up, w.d - 1));
        }
        let stride_bits = (w.support as u64).next_power_of_two().trailing_zeros();
        Ok(CantorParams { kind, t, k, stride_bits })
    }

    pub fn d(&self) -> usize {
        self.k.len()
    }

    fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(param("cantor", "t must be at least 1"));
        }
        if self.k.is_empty() {
            return Err(param("cantor", "k must have at least one coordinate"));
        }
        let limit = 1u64 << (self.t + self.stride_bits).min(63);
        if let Some(k) = self.k.iter().find(|&&k| k >= limit) {
            return Err(param(
                "cantor",
                format!("k = {k} must be below 2^(t + stride bits) = {limit} for the generations to nest"),
            ));
        }
        match &self.kind {
            CantorKind::Homogeneous { n } => {
                if *n < self.t + self.stride_bits {
                    return Err(param(
                        "build_homogeneous",
                        format!("N = {n} is below t + stride bits = {}", self.t + self.stride_bits),
                    ));
                }
                if *n > MAX_RADIX {
                    return Err(param("build_homogeneous", format!("N = {n} exceeds {MAX_RADIX}")));
                }
            }
            CantorKind::TwoScale { n, u, v } => {
                let one = BigRational::one();
                if *u <= one || *v <= one {
                    return Err(param("build_two_scale", "u and v must exceed 1"));
                }
                if *n < self.t + self.stride_bits + 1 {
                    return Err(param("build_two_scale", "N must exceed t + stride bits"));
                }
                if *n > MAX_RADIX {
                    return Err(param("build_two_scale", format!("N = {n} exceeds {MAX_RADIX}")));
                }
                if self.d() != 1 {
                    return Err(param("build_two_scale", "the two-scale set is one-dimensional"));
                }
            }
            CantorKind::Gauge => {
                if self.d() != 1 {
                    return Err(param("build_gauge", "the gauge set is one-dimensional"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let kind = match &self.kind {
            CantorKind::Homogeneous { n } => json!({"kind": "homogeneous", "N": n}),
            CantorKind::TwoScale { n, u, v } => {
                json!({"kind": "two_scale", "N": n, "u": u.to_string(), "v": v.to_string()})
            }
            CantorKind::Gauge => json!({"kind": "gauge"}),
        };
        json!({"construction": kind, "t": self.t, "k": self.k, "stride_bits": self.stride_bits})
    }
}

/// Two-scale boundaries `N_0, N_1, ...` up to the first index whose value reaches `limit`.
pub fn two_scale_sequence(u: &BigRational, v: &BigRational, limit: u64) -> Vec<u64> {
    let mut seq = vec![1u64];
    while *seq.last().unwrap() < limit && seq.len() < 200 {
        let i = seq.len();
        let prev = BigRational::from_integer(BigInt::from(*seq.last().unwrap()));
        let factor = if i % 2 == 1 { u } else { v };
        let next = (prev * factor).ceil().to_integer().to_u64().unwrap_or(u64::MAX);
        seq.push(next.max(seq.last().unwrap() + 1));
    }
    seq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigitRule {
    Full,
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub radix: u32,
    pub rule: DigitRule,
}

/// Generation-by-generation digit structure of a construction.
#[derive(Debug, Clone)]
pub struct Layout {
    pub t: u32,
    pub k: Vec<u64>,
    pub stride_bits: u32,
    kind: CantorKind,
    two_scale: Vec<u64>,
    steps: Vec<Step>,
    /// `W_n` for `n = 0..=steps.len()`.
    offsets: Vec<u64>,
}

impl Layout {
    pub fn new(params: &CantorParams, generations: u32) -> Result<Layout> {
        params.validate()?;
        let mut layout = Layout {
            t: params.t,
            k: params.k.clone(),
            stride_bits: params.stride_bits,
            kind: params.kind.clone(),
            two_scale: Vec::new(),
            steps: Vec::new(),
            offsets: vec![0],
        };
        layout.extend_to(generations)?;
        Ok(layout)
    }

    /// Layout covering every generation whose level is at most `level`, plus one.
    pub fn up_to_level(params: &CantorParams, level: u32) -> Result<Layout> {
        let mut layout = Layout::new(params, 0)?;
        while layout.level(layout.generations()) <= level as u64 {
            let g = layout.generations() + 1;
            layout.extend_to(g)?;
        }
        Ok(layout)
    }

    pub fn extend_to(&mut self, generations: u32) -> Result<()> {
        while (self.steps.len() as u32) < generations {
            let i = self.steps.len() as u32 + 1;
            let step = match &self.kind {
                CantorKind::Homogeneous { n } => Step { radix: *n, rule: DigitRule::Full },
                CantorKind::Gauge => {
                    let radix = i + self.t + self.stride_bits;
                    if radix > MAX_RADIX {
                        return Err(param("build_gauge", format!("generation {i} needs radix {radix} > {MAX_RADIX}")));
                    }
                    Step { radix, rule: DigitRule::Full }
                }
                CantorKind::TwoScale { n, u, v } => {
                    let j = (i - 1) as u64;
                    if self.two_scale.last().is_none_or(|&last| last <= j + 1) {
                        self.two_scale = two_scale_sequence(u, v, j + 2);
                    }
                    let full = self
                        .two_scale
                        .chunks(2)
                        .any(|w| w.len() == 2 && w[0] <= j && j < w[1]);
                    Step {
                        radix: *n,
                        rule: if full { DigitRule::Full } else { DigitRule::Copy },
                    }
                }
            };
            let w = self.offsets.last().unwrap() + step.radix as u64;
            self.steps.push(step);
            self.offsets.push(w);
        }
        Ok(())
    }

    pub fn generations(&self) -> u32 {
        self.steps.len() as u32
    }

    pub fn step(&self, i: u32) -> Step {
        self.steps[(i - 1) as usize]
    }

    /// `W_n`.
    pub fn offset(&self, n: u32) -> u64 {
        self.offsets[n as usize]
    }

    /// Dyadic generation of the cubes of `Theta_n`.
    pub fn level(&self, n: u32) -> u64 {
        self.t as u64 + self.offsets[n as usize]
    }

    /// Dyadic generation of the companion cubes `mu(lambda)`, `lambda in Theta_n`.
    pub fn mu_level(&self, n: u32) -> u32 {
        self.offsets[n as usize] as u32
    }

    /// Generation `n` with `level(n) == j`, if any.
    pub fn generation_at_level(&self, j: u64) -> Option<u32> {
        if j < self.t as u64 {
            return None;
        }
        self.offsets
            .binary_search(&(j - self.t as u64))
            .ok()
            .map(|n| n as u32)
    }

    /// Generation `n` with `mu_level(n) == j`, if any.
    pub fn generation_at_mu_level(&self, j: u64) -> Option<u32> {
        self.offsets.binary_search(&j).ok().map(|n| n as u32)
    }

    /// Number of digits available at generation `i` in one coordinate.
    pub fn digit_count(&self, i: u32) -> u128 {
        let s = self.step(i);
        match s.rule {
            DigitRule::Copy => 1,
            DigitRule::Full => 1u128 << (s.radix - self.t - self.stride_bits),
        }
    }

    fn digit_min(&self, i: u32, c: usize) -> u128 {
        (self.k[c] as u128) << (self.step(i).radix - self.t)
    }

    /// The `q`-th digit of generation `i` in coordinate `c`.
    pub fn digit(&self, i: u32, c: usize, q: u128) -> u128 {
        let min = self.digit_min(i, c);
        match self.step(i).rule {
            DigitRule::Full => min + (q << self.stride_bits),
            DigitRule::Copy => {
                if self.step(i).radix - self.t - self.stride_bits >= 1 {
                    min + (1u128 << self.stride_bits)
                } else {
                    min
                }
            }
        }
    }

    /// Position of `digit` in the digit set of generation `i`, if present.
    pub fn digit_index(&self, i: u32, c: usize, digit: u128) -> Option<u128> {
        let min = self.digit_min(i, c);
        match self.step(i).rule {
            DigitRule::Copy => (digit == self.digit(i, c, 0)).then_some(0),
            DigitRule::Full => {
                if digit < min {
                    return None;
                }
                let off = digit - min;
                let mask = (1u128 << self.stride_bits) - 1;
                if off & mask != 0 {
                    return None;
                }
                let q = off >> self.stride_bits;
                (q < self.digit_count(i)).then_some(q)
            }
        }
    }

    /// Digit indices of an address `l` at generation `n`, coarsest first.
    pub fn decode(&self, n: u32, c: usize, l: &BigInt) -> Option<Vec<u128>> {
        // Digits may exceed their radix when k >= 2^t, so strip the fixed
        // part `k 2^{r_i - t}` of every digit before splitting into fields.
        let mut base = BigInt::zero();
        for i in 1..=n {
            base = (base << self.step(i).radix as usize) + BigInt::from(self.digit_min(i, c));
        }
        let rem = l - base;
        if rem.is_negative() || rem.bits() > self.offset(n) {
            return None;
        }
        let mag = rem.magnitude();
        let mut out = vec![0u128; n as usize];
        let mut shift = self.offset(n);
        for i in 1..=n {
            let r = self.step(i).radix as u64;
            shift -= r;
            let field = extract_bits(mag, shift, r as u32);
            out[(i - 1) as usize] = self.digit_index(i, c, self.digit_min(i, c) + field)?;
        }
        Some(out)
    }

    /// Address of `lambda` as a generation-`n` cube, checking form and membership.
    pub fn address(&self, lambda: &DyadicCube) -> Result<(u32, Vec<BigInt>)> {
        if lambda.d() != self.k.len() {
            return Err(Error::ConstructionMismatch(format!(
                "cube {lambda} has dimension {} but the construction has {}",
                lambda.d(),
                self.k.len()
            )));
        }
        let n = self.generation_at_level(lambda.j as u64).ok_or_else(|| {
            Error::ConstructionMismatch(format!("cube {lambda} is not at the width of any generation"))
        })?;
        let two_t = BigInt::one() << self.t as usize;
        let mut ls = Vec::with_capacity(lambda.d());
        for (c, kc) in lambda.k.iter().enumerate() {
            let rem = kc - BigInt::from(self.k[c]);
            if rem.is_negative() || !(&rem % &two_t).is_zero() {
                return Err(Error::ConstructionMismatch(format!(
                    "cube {lambda} is not of the form (k + l 2^t) / 2^(t + W_n)"
                )));
            }
            let l = rem >> self.t as usize;
            if self.decode(n, c, &l).is_none() {
                return Err(Error::ConstructionMismatch(format!(
                    "cube {lambda} is not a generation-{n} cube of the construction"
                )));
            }
            ls.push(l);
        }
        Ok((n, ls))
    }

    /// Address of the generation-`n` cube with the given digit indices.
    pub fn compose(&self, c: usize, digits: &[u128]) -> BigInt {
        let mut l = BigInt::zero();
        for (idx, &q) in digits.iter().enumerate() {
            let i = idx as u32 + 1;
            l = (l << self.step(i).radix as usize) + BigInt::from(self.digit(i, c, q));
        }
        l
    }

    pub fn cube_from_address(&self, n: u32, l: &[BigInt]) -> DyadicCube {
        DyadicCube {
            j: self.level(n) as u32,
            k: l
                .iter()
                .enumerate()
                .map(|(c, l)| BigInt::from(self.k[c]) + (l << self.t as usize))
                .collect(),
        }
    }

    /// `card(Theta_n)` in one coordinate.
    pub fn card_1d(&self, n: u32) -> BigUint {
        let mut acc = BigUint::one();
        for i in 1..=n {
            acc *= BigUint::from(self.digit_count(i));
        }
        acc
    }

    /// `card(Theta_n)`.
    pub fn card(&self, n: u32) -> BigUint {
        let one = self.card_1d(n);
        let mut acc = BigUint::one();
        for _ in 0..self.k.len() {
            acc *= &one;
        }
        acc
    }

    /// `log2 card(Theta_n)`, exact for these power-of-two counts.
    pub fn log2_card(&self, n: u32) -> f64 {
        let mut bits = 0u64;
        for i in 1..=n {
            bits += 127 - self.digit_count(i).leading_zeros() as u64;
        }
        (bits * self.k.len() as u64) as f64
    }

    /// Addresses of all generation-`n` cubes in one coordinate, ascending.
    fn addresses_1d(&self, n: u32, c: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero()];
        for i in 1..=n {
            let r = self.step(i).radix as usize;
            let count = self.digit_count(i);
            let mut next = Vec::with_capacity(out.len() * count as usize);
            for l in &out {
                let base = l << r;
                for q in 0..count {
                    next.push(&base + BigInt::from(self.digit(i, c, q)));
                }
            }
            out = next;
        }
        out
    }

    /// All cubes of `Theta_n`, lexicographic in `k`.
    pub fn enumerate(&self, n: u32) -> Vec<DyadicCube> {
        let per: Vec<Vec<BigInt>> = (0..self.k.len()).map(|c| self.addresses_1d(n, c)).collect();
        let mut combos: Vec<Vec<BigInt>> = vec![Vec::new()];
        for list in &per {
            let mut grown = Vec::with_capacity(combos.len() * list.len());
            for prefix in &combos {
                for l in list {
                    let mut p = prefix.clone();
                    p.push(l.clone());
                    grown.push(p);
                }
            }
            combos = grown;
        }
        combos.iter().map(|l| self.cube_from_address(n, l)).collect()
    }

    /// Cube of `Theta_n` containing `x`, if `x` lies in `K_n`.
    pub fn cube_containing(&self, x: &DyadicPoint, n: u32) -> Option<DyadicCube> {
        let lambda = DyadicCube {
            j: self.level(n) as u32,
            k: x.floor_scaled(self.level(n) as u32),
        };
        self.address(&lambda).ok().map(|_| lambda)
    }

    /// Corner of the generation-`n` cube with the given digit indices per coordinate.
    pub fn corner(&self, n: u32, digits: &[Vec<u128>]) -> DyadicPoint {
        let l: Vec<BigInt> = digits.iter().enumerate().map(|(c, d)| self.compose(c, d)).collect();
        self.cube_from_address(n, &l).corner()
    }

    /// Distinct generation-`j` ancestors of the cubes of `K`, counted exactly.
    pub fn box_count(&mut self, j: u64) -> Result<BigUint> {
        if j <= self.t as u64 {
            return Ok(BigUint::one());
        }
        while self.level(self.generations()) < j {
            let g = self.generations() + 1;
            self.extend_to(g)?;
        }
        let n = (0..=self.generations())
            .rev()
            .find(|&n| self.level(n) <= j)
            .expect("generation zero sits at level t");
        if self.level(n) == j {
            return Ok(self.card(n));
        }
        let i = n + 1;
        let e = self.level(i) - j;
        let mut acc = self.card(n);
        for c in 0..self.k.len() {
            let count = self.digit_count(i);
            let first = BigInt::from(self.k[c]) + (BigInt::from(self.digit(i, c, 0)) << self.t as usize);
            let last = BigInt::from(self.k[c]) + (BigInt::from(self.digit(i, c, count - 1)) << self.t as usize);
            let distinct = (last >> e as usize) - (first >> e as usize) + 1;
            let distinct = if self.step(i).rule == DigitRule::Copy {
                BigInt::one()
            } else if e <= (self.t + self.stride_bits) as u64 {
                BigInt::from(count)
            } else {
                distinct
            };
            acc *= distinct.to_biguint().expect("positive count");
        }
        Ok(acc)
    }
}

fn extract_bits(mag: &BigUint, shift: u64, width: u32) -> u128 {
    let v = mag >> shift as usize;
    let digits = v.to_u64_digits();
    let lo = *digits.first().unwrap_or(&0) as u128;
    let hi = *digits.get(1).unwrap_or(&0) as u128;
    let all = lo | (hi << 64);
    if width >= 128 {
        all
    } else {
        all & ((1u128 << width) - 1)
    }
}

/// A construction with its generations `Theta_0 .. Theta_depth`.
#[derive(Debug, Clone)]
pub struct CantorSystem {
    pub params: CantorParams,
    pub depth: u32,
    pub budget: u64,
    layout: Layout,
    generations: Vec<Vec<DyadicCube>>,
}

impl CantorSystem {
    /// Build with eager materialization of every generation that fits the budget;
    /// deeper generations are answered by branch-following.
    pub fn new(params: CantorParams, depth: u32, budget: u64) -> Result<CantorSystem> {
        let layout = Layout::new(&params, depth)?;
        let mut sys = CantorSystem {
            params,
            depth,
            budget,
            layout,
            generations: Vec::new(),
        };
        let mut total = BigUint::zero();
        for n in 0..=depth {
            total += sys.layout.card(n);
            if total > BigUint::from(budget) {
                break;
            }
            let g = sys.layout.enumerate(n);
            sys.generations.push(g);
        }
        Ok(sys)
    }

    /// Build requiring every generation to be materialized.
    pub fn new_eager(params: CantorParams, depth: u32, budget: u64, op: &'static str) -> Result<CantorSystem> {
        let layout = Layout::new(&params, depth)?;
        let total: BigUint = (0..=depth).map(|n| layout.card(n)).sum();
        if total > BigUint::from(budget) {
            let _ = op;
            return Err(Error::Capacity {
                what: format!("{op} to depth {depth}"),
                required: total.to_string(),
                budget,
            });
        }
        CantorSystem::new(params, depth, budget)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn d(&self) -> usize {
        self.params.d()
    }

    pub fn t(&self) -> u32 {
        self.params.t
    }

    pub fn materialized_depth(&self) -> Option<u32> {
        (!self.generations.is_empty()).then(|| self.generations.len() as u32 - 1)
    }

    pub fn card(&self, n: u32) -> BigUint {
        self.layout.card(n)
    }

    pub fn level(&self, n: u32) -> u32 {
        self.layout.level(n) as u32
    }

    pub fn mu_level(&self, n: u32) -> u32 {
        self.layout.mu_level(n)
    }

    /// Cubes of `Theta_n`; materializes on demand within the budget.
    pub fn generation(&self, n: u32) -> Result<Vec<DyadicCube>> {
        if let Some(g) = self.generations.get(n as usize) {
            return Ok(g.clone());
        }
        if n > self.depth {
            return Err(param("generation", format!("generation {n} is beyond depth {}", self.depth)));
        }
        let card = self.layout.card(n);
        if card > BigUint::from(self.budget) {
            return Err(Error::Capacity {
                what: format!("generation {n}"),
                required: card.to_string(),
                budget: self.budget,
            });
        }
        Ok(self.layout.enumerate(n))
    }

    /// `mu(lambda)` for a cube of this system.
    pub fn mu(&self, lambda: &DyadicCube) -> Result<DyadicCube> {
        let (n, l) = self.layout.address(lambda)?;
        if n > self.depth {
            return Err(Error::ConstructionMismatch(format!("cube {lambda} is deeper than the system")));
        }
        Ok(DyadicCube {
            j: self.layout.mu_level(n),
            k: l,
        })
    }

    /// Generation-`n` cube containing `x`, if any.
    pub fn cube_containing(&self, x: &DyadicPoint, n: u32) -> Option<DyadicCube> {
        self.layout.cube_containing(x, n)
    }

    /// `x in K_n`.
    pub fn contains_point(&self, x: &DyadicPoint, n: u32) -> bool {
        self.cube_containing(x, n).is_some()
    }

    /// Theoretical dimension(s): `(lower, upper)` box dimensions of the limit set.
    pub fn theoretical_dims(&self) -> (f64, f64) {
        let t = self.params.t as f64;
        let sb = self.params.stride_bits as f64;
        let d = self.d() as f64;
        match &self.params.kind {
            CantorKind::Homogeneous { n } => {
                let k = d * (*n as f64 - t - sb) / *n as f64;
                (k, k)
            }
            CantorKind::TwoScale { n, u, v } => {
                let (u, v) = (rat_f64(u), rat_f64(v));
                let base = (*n as f64 - t - sb) / *n as f64;
                let upper = base * (u - 1.0) * v / (u * v - 1.0);
                (upper / v, upper)
            }
            CantorKind::Gauge => (1.0, 1.0),
        }
    }

    /// Realized two-scale dimension ratios `log2 M_j / (N j)` at the last
    /// realized `N_{2k}` (lower) and `N_{2k+1}` (upper) within the depth.
    pub fn realized_two_scale_dims(&self) -> Option<(f64, f64)> {
        let CantorKind::TwoScale { n, u, v } = &self.params.kind else {
            return None;
        };
        let seq = two_scale_sequence(u, v, self.depth as u64);
        let within: Vec<(usize, u64)> = seq
            .iter()
            .cloned()
            .enumerate()
            .filter(|&(_, m)| m <= self.depth as u64)
            .collect();
        let ratio = |m: u64| self.layout.log2_card(m as u32) / (*n as f64 * m as f64);
        let lower = within.iter().rev().find(|(i, _)| i % 2 == 0).map(|&(_, m)| ratio(m))?;
        let upper = within.iter().rev().find(|(i, _)| i % 2 == 1).map(|&(_, m)| ratio(m))?;
        Some((lower, upper))
    }

    /// Two-scale boundaries within the depth.
    pub fn two_scale_boundaries(&self) -> Vec<u64> {
        match &self.params.kind {
            CantorKind::TwoScale { u, v, .. } => two_scale_sequence(u, v, self.depth as u64)
                .into_iter()
                .filter(|&m| m <= self.depth as u64)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Leftmost point of `K_n` (corner of the leftmost generation-`n` cube).
    pub fn leftmost_point(&self, n: u32) -> DyadicPoint {
        let digits = vec![vec![0u128; n as usize]; self.d()];
        self.layout.corner(n, &digits)
    }

    /// Corners of the cubes of `Theta_n` reached by extending each cube of
    /// `Theta_{n_grid}` with its leftmost digits down to generation `n`.
    pub fn endpoint_grid(&self, n_grid: u32, n: u32) -> Result<Vec<DyadicPoint>> {
        let n = n.max(n_grid);
        let mut layout = self.layout.clone();
        layout.extend_to(n)?;
        let card = layout.card(n_grid);
        if card > BigUint::from(self.budget) {
            return Err(Error::Capacity {
                what: format!("endpoint grid at generation {n_grid}"),
                required: card.to_string(),
                budget: self.budget,
            });
        }
        let cubes = layout.enumerate(n_grid);
        let mut out = Vec::with_capacity(cubes.len());
        for cube in cubes {
            let (_, ls) = layout.address(&cube)?;
            let digits: Vec<Vec<u128>> = ls
                .iter()
                .enumerate()
                .map(|(c, l)| {
                    let mut d = layout.decode(n_grid, c, l).expect("enumerated cube decodes");
                    d.resize(n as usize, 0);
                    d
                })
                .collect();
            out.push(layout.corner(n, &digits));
        }
        Ok(out)
    }

    /// `count` corners of uniformly drawn generation-`n` cubes (seeded, reproducible).
    pub fn sample_points(&self, n: u32, count: usize, seed: u64) -> Result<Vec<DyadicPoint>> {
        let mut layout = self.layout.clone();
        layout.extend_to(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let digits: Vec<Vec<u128>> = (0..self.d())
                .map(|_| {
                    (1..=n)
                        .map(|i| {
                            let c = layout.digit_count(i);
                            if c == 1 {
                                0
                            } else {
                                rng.gen_range(0..c)
                            }
                        })
                        .collect()
                })
                .collect();
            out.push(layout.corner(n, &digits));
        }
        Ok(out)
    }

    /// Natural mass of each cube of `Theta_n`, as `log2`.
    pub fn log2_mass(&self, n: u32) -> f64 {
        -self.layout.log2_card(n)
    }

    /// Per-generation check of `mu(I) <= phi(|I|)` with `phi(r) = r exp(ln^{3/4}(1/r))`.
    pub fn gauge_mass_bound(&self) -> Vec<MassCheck> {
        (0..=self.depth)
            .map(|n| {
                let level = self.layout.level(n) as f64;
                let log2_mass = self.log2_mass(n);
                let ln_inv = level * std::f64::consts::LN_2;
                let log2_phi = -level + ln_inv.powf(0.75) / std::f64::consts::LN_2;
                MassCheck {
                    generation: n,
                    level: self.layout.level(n) as u32,
                    log2_mass,
                    log2_phi,
                    holds: log2_mass <= log2_phi,
                }
            })
            .collect()
    }

    pub fn to_json(&self, summary: bool) -> Value {
        let (lo, hi) = self.theoretical_dims();
        let mut v = json!({
            "params": self.params.to_json(),
            "depth": self.depth,
            "counts": (0..=self.depth).map(|n| self.card(n).to_string()).collect::<Vec<_>>(),
            "levels": (0..=self.depth).map(|n| self.level(n)).collect::<Vec<_>>(),
            "dimension": {"lower": lo, "upper": hi},
        });
        if !summary {
            v["generations"] = Value::Array(
                self.generations
                    .iter()
                    .map(|g| Value::Array(g.iter().map(DyadicCube::to_json).collect()))
                    .collect(),
            );
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassCheck {
    pub generation: u32,
    pub level: u32,
    pub log2_mass: f64,
    pub log2_phi: f64,
    pub holds: bool,
}

/// Homogeneous set with one-dimensional Haar geometry, all generations materialized.
pub fn build_homogeneous(t: u32, k: u64, n: u32, depth: u32) -> Result<CantorSystem> {
    if depth == 0 && n < t {
        return Err(param("build_homogeneous", format!("N = {n} is below t = {t}")));
    }
    CantorSystem::new_eager(CantorParams::homogeneous(t, k, n), depth, DEFAULT_BUDGET, "build_homogeneous")
}

/// Two-scale set realizing `N_0 .. N_phases`.
pub fn build_two_scale(t: u32, k: u64, n: u32, u: BigRational, v: BigRational, phases: u32) -> Result<CantorSystem> {
    if phases == 0 {
        return Err(param("build_two_scale", "phases must be at least 1"));
    }
    let params = CantorParams::two_scale(t, k, n, u.clone(), v.clone());
    params.validate()?;
    let seq = two_scale_sequence(&u, &v, u64::MAX);
    let depth = *seq
        .get(phases as usize)
        .ok_or_else(|| param("build_two_scale", "too many phases"))?;
    let depth = u32::try_from(depth).map_err(|_| param("build_two_scale", "depth overflow"))?;
    CantorSystem::new(params, depth, DEFAULT_BUDGET)
}

/// Gauge set with `N_n = n + t`.
pub fn build_gauge(t: u32, k: u64, depth: u32) -> Result<CantorSystem> {
    CantorSystem::new(CantorParams::gauge(t, k), depth, DEFAULT_BUDGET)
}

/// Target set `G` inside a construction.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    /// Finite set of exact points.
    Points(Vec<DyadicPoint>),
    /// Finite union of dyadic cubes.
    Cubes(Vec<DyadicCube>),
    /// The whole limit set.
    Whole,
    /// Lexicographic left segment keeping the first `ceil(2^{(N - t') n})`
    /// cubes of each generation of a homogeneous set.
    LexPrefix { t_prime: f64 },
}

impl TargetSet {
    /// Upper box dimension of the target, when known.
    pub fn box_dim(&self, sys: &CantorSystem) -> f64 {
        match self {
            TargetSet::Points(_) | TargetSet::Cubes(_) => 0.0,
            TargetSet::Whole => sys.theoretical_dims().1,
            TargetSet::LexPrefix { t_prime } => match sys.params.kind {
                CantorKind::Homogeneous { n } => (n as f64 - t_prime) / n as f64,
                _ => f64::NAN,
            },
        }
    }

    /// True for targets answered lazily (without listing cubes).
    pub fn is_structured(&self) -> bool {
        matches!(self, TargetSet::Whole | TargetSet::LexPrefix { .. })
    }

    pub fn validate(&self, sys: &CantorSystem) -> Result<()> {
        if let TargetSet::LexPrefix { t_prime } = self {
            let CantorKind::Homogeneous { n } = sys.params.kind else {
                return Err(param("target", "left-segment targets need a homogeneous set"));
            };
            if sys.d() != 1 {
                return Err(param("target", "left-segment targets are one-dimensional"));
            }
            let floor = (sys.params.t + sys.params.stride_bits) as f64;
            if !(*t_prime >= floor && *t_prime <= n as f64) {
                return Err(param("target", format!("t' = {t_prime} must lie in [{floor}, {n}]")));
            }
        }
        Ok(())
    }

    /// Number of kept cubes of generation `n` for a left segment.
    pub fn prefix_count(&self, layout: &Layout, n: u32) -> BigUint {
        let TargetSet::LexPrefix { t_prime } = self else {
            return layout.card(n);
        };
        let mut prev = BigUint::one();
        for g in 1..=n {
            let radix = layout.step(g).radix as f64;
            let e = (radix - t_prime) * g as f64;
            let raw = ceil_pow2(e);
            let cap = &prev * BigUint::from(layout.digit_count(g));
            let mut c = if raw > cap { cap } else { raw };
            if c.is_zero() {
                c = BigUint::one();
            }
            prev = c;
        }
        prev
    }

    /// Membership of a generation-`n` address for structured targets.
    pub fn contains_address(&self, layout: &Layout, n: u32, l: &[BigInt], prefix: Option<&BigUint>) -> bool {
        match self {
            TargetSet::Whole => l.iter().enumerate().all(|(c, l)| layout.decode(n, c, l).is_some()),
            TargetSet::LexPrefix { .. } => {
                let Some(digits) = layout.decode(n, 0, &l[0]) else {
                    return false;
                };
                let count = BigUint::from(layout.digit_count(1).max(1));
                let mut rank = BigUint::zero();
                for (idx, q) in digits.iter().enumerate() {
                    let base = BigUint::from(layout.digit_count(idx as u32 + 1));
                    rank = rank * base + BigUint::from(*q);
                }
                let _ = count;
                match prefix {
                    Some(c) => &rank < c,
                    None => rank < self.prefix_count(layout, n),
                }
            }
            TargetSet::Points(_) | TargetSet::Cubes(_) => false,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            TargetSet::Points(ps) => json!({"points": ps.iter().map(DyadicPoint::to_json).collect::<Vec<_>>()}),
            TargetSet::Cubes(cs) => json!({"cubes": cs.iter().map(DyadicCube::to_json).collect::<Vec<_>>()}),
            TargetSet::Whole => json!("whole"),
            TargetSet::LexPrefix { t_prime } => json!({"left_segment": {"t_prime": t_prime}}),
        }
    }
}

/// `ceil(2^e)` for real `e >= 0`, computed from a double mantissa.
fn ceil_pow2(e: f64) -> BigUint {
    if e <= 0.0 {
        return BigUint::one();
    }
    let whole = e.floor();
    let frac = e - whole;
    let mant = frac.exp2();
    if whole < 52.0 {
        return BigUint::from((mant * whole.exp2()).ceil() as u128);
    }
    let scaled = (mant * 2f64.powi(52)).ceil() as u64;
    BigUint::from(scaled) << (whole as usize - 52)
}

/// `Gamma_n`: cubes of `Theta_n` meeting `G`.
pub fn intersecting_cubes(sys: &CantorSystem, g: &TargetSet, n: u32) -> Result<Vec<DyadicCube>> {
    match g {
        TargetSet::Points(ps) => {
            let set: BTreeSet<DyadicCube> = ps.iter().filter_map(|x| sys.cube_containing(x, n)).collect();
            Ok(set.into_iter().collect())
        }
        TargetSet::Cubes(cs) => {
            let level = sys.level(n);
            let mut set = BTreeSet::new();
            let mut coarse = Vec::new();
            for c in cs {
                if c.j >= level {
                    let a = c.ancestor(level);
                    if sys.layout.address(&a).is_ok() {
                        set.insert(a);
                    }
                } else {
                    coarse.push(c);
                }
            }
            if !coarse.is_empty() {
                for lambda in sys.generation(n)? {
                    if coarse.iter().any(|c| c.contains_cube(&lambda)) {
                        set.insert(lambda);
                    }
                }
            }
            Ok(set.into_iter().collect())
        }
        TargetSet::Whole => sys.generation(n),
        TargetSet::LexPrefix { .. } => {
            g.validate(sys)?;
            let count = g.prefix_count(&sys.layout, n);
            if count > BigUint::from(sys.budget) {
                return Err(Error::Capacity {
                    what: format!("left segment of generation {n}"),
                    required: count.to_string(),
                    budget: sys.budget,
                });
            }
            let c = count.to_usize().unwrap_or(usize::MAX);
            let mut out = Vec::with_capacity(c);
            let per = sys.layout.digit_count(1).max(1);
            let _ = per;
            for rank in 0..c {
                let mut rem = BigUint::from(rank);
                let mut digits = vec![0u128; n as usize];
                for i in (1..=n).rev() {
                    let base = BigUint::from(sys.layout.digit_count(i));
                    digits[(i - 1) as usize] = (&rem % &base).to_u128().unwrap_or(0);
                    rem /= base;
                }
                let l = sys.layout.compose(0, &digits);
                out.push(sys.layout.cube_from_address(n, &[l]));
            }
            Ok(out)
        }
    }
}

fn rat_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Relation asserted by an inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Greater,
    GreaterEq,
    Less,
    LessEq,
}

impl Relation {
    fn holds(&self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            Relation::Greater => lhs > rhs,
            Relation::GreaterEq => lhs >= rhs,
            Relation::Less => lhs < rhs,
            Relation::LessEq => lhs <= rhs,
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Relation::Greater => ">",
            Relation::GreaterEq => ">=",
            Relation::Less => "<",
            Relation::LessEq => "<=",
        }
    }
}

/// One exactly verified inequality.
#[derive(Debug, Clone)]
pub struct InequalityCheck {
    pub label: &'static str,
    pub lhs: BigRational,
    pub relation: Relation,
    pub rhs: BigRational,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(label: &'static str, lhs: BigRational, relation: Relation, rhs: BigRational) -> Self {
        let holds = relation.holds(&lhs, &rhs);
        InequalityCheck { label, lhs, relation, rhs, holds }
    }

    /// Signed slack, positive when the inequality holds.
    pub fn slack(&self) -> BigRational {
        match self.relation {
            Relation::Greater | Relation::GreaterEq => &self.lhs - &self.rhs,
            Relation::Less | Relation::LessEq => &self.rhs - &self.lhs,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "label": self.label,
            "lhs": self.lhs.to_string(),
            "relation": self.relation.symbol(),
            "rhs": self.rhs.to_string(),
            "holds": self.holds,
        })
    }
}

/// Parameters of the two-scale counterexample construction.
#[derive(Debug, Clone)]
pub struct CounterexampleParams {
    pub s: BigRational,
    pub p: BigRational,
    pub beta: BigRational,
    pub alpha: BigRational,
    pub eps: BigRational,
    pub u: BigRational,
    pub v: BigRational,
    pub n: u32,
    pub t: u32,
    pub eta: BigRational,
    /// Predicted packing dimension `((N-t)/N) (u-1) v / (uv-1)`.
    pub dim_p: BigRational,
    pub checks: Vec<InequalityCheck>,
}

impl CounterexampleParams {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "s": self.s.to_string(), "p": self.p.to_string(), "beta": self.beta.to_string(),
            "alpha": self.alpha.to_string(), "eps": self.eps.to_string(),
            "u": self.u.to_string(), "v": self.v.to_string(), "N": self.n, "t": self.t,
            "eta": self.eta.to_string(), "dim_P": self.dim_p.to_string(),
            "checks": self.checks.iter().map(InequalityCheck::to_json).collect::<Vec<_>>(),
        })
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn check_counterexample_domain(s: &BigRational, p: &BigRational, beta: &BigRational) -> Result<BigRational> {
    let zero = BigRational::zero();
    let one = BigRational::one();
    if *s <= zero {
        return Err(param("find_counterexample_params", "s must be positive (the construction fails for s = 0)"));
    }
    if *p < one {
        return Err(param("find_counterexample_params", "p must be at least 1"));
    }
    if &one - s * p <= zero {
        return Err(param("find_counterexample_params", "needs 1 - sp > 0"));
    }
    let upper = one.clone() / p - s;
    if beta.is_zero() || *beta <= -s.clone() || *beta >= upper {
        return Err(param(
            "find_counterexample_params",
            format!("beta = {beta} must lie in (-s, 1/p - s) = ({}, {upper}) and be nonzero", -s.clone()),
        ));
    }
    Ok(one - s * p - beta * p)
}

/// Exact verification of a parameter choice; `eta` defaults to the
/// construction's choice (`D/(1+eta) = alpha` for positive beta,
/// `floor(2^64 eps^{3/2}) / 2^64` for negative beta).
pub fn verify_counterexample_params(
    s: &BigRational,
    p: &BigRational,
    beta: &BigRational,
    eps: &BigRational,
    n: u32,
    t: u32,
    eta: Option<BigRational>,
) -> Result<CounterexampleParams> {
    let alpha = check_counterexample_domain(s, p, beta)?;
    if t > n || n == 0 {
        return Err(param("verify_counterexample_params", "needs N >= t"));
    }
    let one = BigRational::one();
    let u = &one + eps;
    let v = &one + (&one / &alpha - &one) * eps;
    let uv1 = &u * &v - &one;
    let frac = rat((n - t) as i64, n as i64);
    let c_up = (&u - &one) * &v / &uv1;
    let c_low = (&u - &one) / &uv1;
    let dim = &frac * &c_up;
    let base = &one - s * p;
    let target = &base - &alpha;
    let mut checks = Vec::new();
    let eta = if beta.is_positive() {
        let eta = eta.unwrap_or_else(|| &dim / &alpha - &one);
        checks.push(InequalityCheck::new("packing dimension exceeds alpha", dim.clone(), Relation::Greater, alpha.clone()));
        checks.push(InequalityCheck::new(
            "late-window partial-sum exponent",
            &base - &dim / (&one + &eta),
            Relation::GreaterEq,
            target.clone(),
        ));
        checks.push(InequalityCheck::new(
            "early-window partial-sum exponent",
            (&one / ((&one + &eta) * &u)) * (&base - &frac * &c_low),
            Relation::GreaterEq,
            target.clone(),
        ));
        checks.push(InequalityCheck::new(
            "dimension within alpha(1 + eps^2)",
            dim.clone(),
            Relation::LessEq,
            &alpha * (&one + eps * eps),
        ));
        checks.push(InequalityCheck::new("eta positive", eta.clone(), Relation::Greater, BigRational::zero()));
        eta
    } else {
        let eta = eta.unwrap_or_else(|| eta_three_halves(eps));
        checks.push(InequalityCheck::new(
            "coefficients decay",
            &base - &frac * &c_low,
            Relation::Less,
            BigRational::zero(),
        ));
        checks.push(InequalityCheck::new("packing dimension exceeds alpha", dim.clone(), Relation::Greater, alpha.clone()));
        checks.push(InequalityCheck::new(
            "early-window remainder exponent",
            &base - &frac * (&one - (&v - &one) / ((&one - &eta) * &uv1)),
            Relation::GreaterEq,
            target.clone(),
        ));
        checks.push(InequalityCheck::new(
            "late-window remainder exponent",
            (&v / (&one - &eta)) * (&base - &frac * &c_low),
            Relation::GreaterEq,
            target.clone(),
        ));
        checks.push(InequalityCheck::new(
            "dimension within alpha(1 + eps^2)",
            dim.clone(),
            Relation::LessEq,
            &alpha * (&one + eps * eps),
        ));
        checks.push(InequalityCheck::new("eta in (0, 1)", eta.clone(), Relation::Greater, BigRational::zero()));
        checks.push(InequalityCheck::new("eta below 1", eta.clone(), Relation::Less, one.clone()));
        eta
    };
    Ok(CounterexampleParams {
        s: s.clone(),
        p: p.clone(),
        beta: beta.clone(),
        alpha,
        eps: eps.clone(),
        u,
        v,
        n,
        t,
        eta,
        dim_p: dim,
        checks,
    })
}

/// `floor(2^64 eps^{3/2}) / 2^64`, exact whenever `eps^{3/2}` is a dyadic rational.
fn eta_three_halves(eps: &BigRational) -> BigRational {
    let scale = BigInt::one() << 128usize;
    let cube = eps * eps * eps * BigRational::from_integer(scale);
    let floor = cube.floor().to_integer();
    let root = floor.to_biguint().map(|b| b.sqrt()).unwrap_or_default();
    BigRational::new(BigInt::from_biguint(Sign::Plus, root), BigInt::one() << 64usize)
}

/// Scan `eps = 2^{-3} .. 2^{-20}` and `N <= 10^4` for parameters satisfying
/// every inequality of the two-scale construction, all in exact arithmetic.
pub fn find_counterexample_params(
    s: &BigRational,
    p: &BigRational,
    beta: &BigRational,
    t_min: u32,
) -> Result<CounterexampleParams> {
    let alpha = check_counterexample_domain(s, p, beta)?;
    let one = BigRational::one();
    let t_min = t_min.max(1);
    let mut tightest: Option<(InequalityCheck, BigRational)> = None;
    for e in 3..=20u32 {
        let eps = BigRational::new(BigInt::one(), BigInt::one() << e as usize);
        let u = &one + &eps;
        let v = &one + (&one / &alpha - &one) * &eps;
        let c_up = (&u - &one) * &v / (&u * &v - &one);
        let hi = &alpha * (&one + &eps * &eps);
        for n in t_min.max(1)..=10_000u32 {
            let nn = BigRational::from_integer(BigInt::from(n));
            // t range from alpha < ((N-t)/N) c <= hi
            let t_lo = (&nn * (&one - &hi / &c_up)).ceil().to_integer();
            let t_start = t_lo.to_i64().unwrap_or(0).max(t_min as i64);
            let mut t = t_start;
            while t <= n as i64 {
                let dim = rat(n as i64 - t, n as i64) * &c_up;
                if dim <= alpha {
                    break;
                }
                if dim <= hi {
                    let cand = verify_counterexample_params(s, p, beta, &eps, n, t as u32, None)?;
                    if cand.all_hold() {
                        return Ok(cand);
                    }
                    for c in cand.checks.iter().filter(|c| !c.holds) {
                        let gap = -c.slack();
                        if tightest.as_ref().is_none_or(|(_, g)| gap < *g) {
                            tightest = Some((c.clone(), gap));
                        }
                    }
                }
                t += 1;
            }
        }
    }
    let detail = tightest
        .map(|(c, g)| format!("tightest violated inequality: {} (short by {})", c.label, g))
        .unwrap_or_else(|| "no (N, t) hits the dimension window".into());
    Err(Error::Infeasible(detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_bits_reads_fields() {
        let v = BigUint::from(0b1011_0110u32);
        assert_eq!(extract_bits(&v, 1, 3), 0b011);
        assert_eq!(extract_bits(&v, 4, 4), 0b1011);
    }

    #[test]
    fn ceil_pow2_small_and_large() {
        assert_eq!(ceil_pow2(3.0), BigUint::from(8u32));
        assert_eq!(ceil_pow2(0.5), BigUint::from(2u32));
        assert_eq!(ceil_pow2(60.0), BigUint::one() << 60usize);
    }
}
