//! Compactly supported wavelet systems.
//!
//! Haar is evaluated in closed form. Daubechies systems are tabulated by the
//! cascade algorithm on the grid `2^{-R}`; points finer than the grid are
//! evaluated exactly through the two-scale refinement matrices, so every
//! dyadic point gets the value the refinement equation assigns to it.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dyadic::{DyadicCube, DyadicPoint};
use crate::error::{param, Error, Result};

/// Low-pass filters of the extremal-phase Daubechies family, orders 1 to 10,
/// normalized so the taps sum to sqrt(2).
#[allow(clippy::excessive_precision)]
pub(crate) const DAUBECHIES: [&[f64]; 10] = [
    &[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    &[0.4829629131445341433749, 0.8365163037378079055753, 0.224143868042013381026, -0.1294095225512603811744],
    &[0.3326705529500826159985, 0.8068915093110925764945, 0.4598775021184915700952, -0.1350110200102545886964, -0.08544127388202666169282, 0.03522629188570953660274],
    &[0.2303778133088965008633, 0.7148465705529156470899, 0.6308807679298589078817, -0.02798376941685985421141, -0.1870348117190930840796, 0.03084138183556076362722, 0.03288301166688519973541, -0.01059740178506903210488],
    &[0.1601023979741929144807, 0.6038292697971896705401, 0.7243085284377729277281, 0.1384281459013207315054, -0.2422948870663820318626, -0.03224486958463837464848, 0.07757149384004571352313, -0.006241490212798274274191, -0.01258075199908199946851, 0.003335725285473771277998],
    &[0.1115407433501094636213, 0.4946238903984530856772, 0.7511339080210953506789, 0.315250351709197629086, -0.2262646939654398200763, -0.1297668675672619355623, 0.09750160558732304910234, 0.02752286553030572862554, -0.03158203931748602956508, 0.0005538422011614961392519, 0.004777257510945510639636, -0.001077301085308479564853],
    &[0.07785205408500917901996, 0.396539319481917306539, 0.7291320908462351199169, 0.4697822874051931224716, -0.1439060039285649754051, -0.2240361849938749826381, 0.07130921926683026475088, 0.08061260915108307191292, -0.03802993693501441357959, -0.01657454163066688065411, 0.01255099855609984061299, 0.0004295779729213665211321, -0.001801640704047490915268, 0.0003537137999745202484463],
    &[0.05441584224310400995501, 0.3128715909142999706592, 0.6756307362972898068078, 0.5853546836542067127713, -0.01582910525634930566738, -0.2840155429615469265162, 0.0004724845739132827703606, 0.128747426620478458857, -0.01736930100180754616962, -0.04408825393079475150676, 0.01398102791739828164872, 0.008746094047405776716383, -0.004870352993451574310422, -0.0003917403733769470462981, 0.0006754494064505693663695, -0.0001174767841247695337306],
    &[0.0380779473638783465887, 0.243834674612590353732, 0.6048231236901111119031, 0.6572880780513005380782, 0.133197385825007576191, -0.2932737832791749088064, -0.09684078322297646051351, 0.1485407493381063801351, 0.03072568147933337921232, -0.06763282906132997367564, 0.0002509471148314519575872, 0.02236166212367909720537, -0.004723204757751397277926, -0.004281503682463429834497, 0.001847646883056226476619, 0.0002303857635231959672052, -0.000251963188942710136975, 0.00003934732031627159948069],
    &[0.02667005790055555358662, 0.1881768000776914890209, 0.5272011889317255864817, 0.6884590394536035657419, 0.2811723436605774607487, -0.2498464243273153794161, -0.1959462743773770435043, 0.1273693403357932600827, 0.09305736460357235116035, -0.07139414716639708714534, -0.02945753682187581285828, 0.03321267405934100173976, 0.003606553566956169655423, -0.01073317548333057504432, 0.001395351747052901165789, 0.001992405295185056117159, -0.0006858566949597116265614, -0.0001164668551292854509515, 0.00009358867032006959133405, -0.00001326420289452124481244],
];

/// Hölder exponents of the Daubechies scaling functions, orders 1 to 10.
const DAUBECHIES_REGULARITY: [f64; 10] = [
    0.0, 0.550, 1.088, 1.618, 1.969, 2.189, 2.460, 2.761, 3.073, 3.381,
];

/// Default largest generation scanned for a positivity certificate.
pub const CERTIFICATE_T_CAP: u32 = 6;

/// Refinement beyond the table is capped at this many extra bits.
pub const MAX_REFINE_BITS: u32 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Haar,
    Daubechies(usize),
}

impl Family {
    /// Parse a family name and order as they appear in config files.
    pub fn parse(name: &str, order: usize) -> Result<Family> {
        match name.to_ascii_lowercase().as_str() {
            "haar" => Ok(Family::Haar),
            "daubechies" | "db" => {
                if order == 1 {
                    Ok(Family::Haar)
                } else {
                    Ok(Family::Daubechies(order))
                }
            }
            other => Err(param("build_system", format!("unknown wavelet family {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Haar => "haar",
            Family::Daubechies(_) => "daubechies",
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Family::Haar => 1,
            Family::Daubechies(n) => *n,
        }
    }
}

/// Interval `[k/2^t, (k+1)/2^t)` on which the sampled mother wavelet is at least `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub t: u32,
    pub k: u64,
    pub m: f64,
}

/// Interval at the certificate's generation on which the sampled scaling
/// function is at least `m`; used by the other coordinates when `d > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingBound {
    pub k: u64,
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct WaveletSystem {
    pub family: Family,
    pub d: usize,
    /// Low-pass taps `h_n`, summing to sqrt(2).
    pub low: Vec<f64>,
    /// High-pass taps `g_n = (-1)^n h_{L-1-n}`.
    pub high: Vec<f64>,
    pub resolution: u32,
    /// Support length `S`: phi and psi vanish outside `[0, S)`.
    pub support: u32,
    /// Estimated Hölder exponent.
    pub regularity: f64,
    phi: Vec<f64>,
    psi: Vec<f64>,
    /// Refinement matrices acting on `(phi(f + m))_m` for the two binary digits.
    t_phi: [Vec<f64>; 2],
    t_psi: [Vec<f64>; 2],
    c_w: f64,
    c_phi: f64,
    certificate: Option<PositivityCertificate>,
    scaling_bound: Option<ScalingBound>,
}

/// Build a wavelet system on `R^d` sampled at resolution `r`.
pub fn build_system(family: Family, d: usize, r: u32) -> Result<WaveletSystem> {
    if d == 0 {
        return Err(param("build_system", "dimension must be at least 1"));
    }
    if r < 4 {
        return Err(param("build_system", format!("resolution R={r} is below 4")));
    }
    if r > 24 {
        return Err(param("build_system", format!("resolution R={r} exceeds 24")));
    }
    let (low, regularity) = match family {
        Family::Haar => (DAUBECHIES[0].to_vec(), 0.0),
        Family::Daubechies(n) if (1..=10).contains(&n) => {
            (DAUBECHIES[n - 1].to_vec(), DAUBECHIES_REGULARITY[n - 1])
        }
        Family::Daubechies(n) => {
            return Err(param("build_system", format!("Daubechies order {n} is not tabulated (1..=10)")))
        }
    };
    let family = if family == Family::Daubechies(1) { Family::Haar } else { family };
    let taps = low.len();
    let high: Vec<f64> = (0..taps)
        .map(|n| if n % 2 == 0 { low[taps - 1 - n] } else { -low[taps - 1 - n] })
        .collect();
    let support = (taps - 1) as u32;
    let (phi, psi) = if family == Family::Haar {
        haar_tables(r)
    } else {
        cascade_tables(&low, &high, r)?
    };
    WaveletSystem::assemble(family, d, low, high, r, support, regularity, phi, psi)
}

fn haar_tables(r: u32) -> (Vec<f64>, Vec<f64>) {
    let n = 1usize << r;
    let mut phi = vec![1.0; n + 1];
    phi[n] = 0.0;
    let mut psi = vec![0.0; n + 1];
    for (i, v) in psi.iter_mut().enumerate().take(n) {
        *v = if 2 * i < n { 1.0 } else { -1.0 };
    }
    (phi, psi)
}

/// Cascade algorithm: phi at the integers from the refinement eigenvector,
/// then dyadic refinement down to the grid `2^{-r}`.
fn cascade_tables(low: &[f64], high: &[f64], r: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = low.len() - 1;
    let sqrt2 = std::f64::consts::SQRT_2;
    let size = s + 1;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            let n = 2 * i as i64 - j as i64;
            if n >= 0 && (n as usize) < low.len() {
                a[(i, j)] = sqrt2 * low[n as usize];
            }
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..size {
        a[(size - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(size);
    rhs[size - 1] = 1.0;
    let ints = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| param("build_system", "refinement matrix has no unit eigenvector"))?;

    let step = 1usize << r;
    let len = s * step + 1;
    let mut phi = vec![0.0; len];
    for i in 0..=s {
        phi[i * step] = ints[i];
    }
    phi[0] = 0.0;
    phi[s * step] = 0.0;
    for level in 1..=r {
        let stride = 1usize << (r - level);
        let mut idx = stride;
        while idx < s * step {
            phi[idx] = refine_at(&phi, low, idx, step, s);
            idx += 2 * stride;
        }
    }
    let psi = (0..len).map(|idx| refine_at(&phi, high, idx, step, s)).collect();
    Ok((phi, psi))
}

/// `sqrt2 * sum_n taps[n] * phi(2x - n)` at grid index `idx`.
fn refine_at(phi: &[f64], taps: &[f64], idx: usize, step: usize, s: usize) -> f64 {
    let two_x = 2 * idx as i64;
    let mut acc = 0.0;
    for (n, &h) in taps.iter().enumerate() {
        let y = two_x - (n * step) as i64;
        if y >= 0 && (y as usize) < s * step {
            acc += h * phi[y as usize];
        }
    }
    std::f64::consts::SQRT_2 * acc
}

impl WaveletSystem {
    /// System from explicit tables on `[0, support]` at step `2^{-r}`.
    ///
    /// Intended for tests and for plugging in externally tabulated families;
    /// no refinement beyond the grid is available for such systems.
    pub fn from_samples(phi: Vec<f64>, psi: Vec<f64>, r: u32, support: u32) -> Result<WaveletSystem> {
        let len = (support as usize) * (1usize << r) + 1;
        if phi.len() != len || psi.len() != len {
            return Err(param("from_samples", format!("tables must have {len} samples")));
        }
        WaveletSystem::assemble(
            Family::Daubechies(0),
            1,
            Vec::new(),
            Vec::new(),
            r,
            support,
            0.0,
            phi,
            psi,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        family: Family,
        d: usize,
        low: Vec<f64>,
        high: Vec<f64>,
        r: u32,
        support: u32,
        regularity: f64,
        phi: Vec<f64>,
        psi: Vec<f64>,
    ) -> Result<WaveletSystem> {
        let s = support as usize;
        let sqrt2 = std::f64::consts::SQRT_2;
        let build = |taps: &[f64], b: usize| {
            let mut m = vec![0.0; s * s];
            for row in 0..s {
                for col in 0..s {
                    let n = 2 * row as i64 + b as i64 - col as i64;
                    if n >= 0 && (n as usize) < taps.len() {
                        m[row * s + col] = sqrt2 * taps[n as usize];
                    }
                }
            }
            m
        };
        let t_phi = [build(&low, 0), build(&low, 1)];
        let t_psi = [build(&high, 0), build(&high, 1)];
        let mut w = WaveletSystem {
            family,
            d,
            low,
            high,
            resolution: r,
            support,
            regularity,
            phi,
            psi,
            t_phi,
            t_psi,
            c_w: 0.0,
            c_phi: 0.0,
            certificate: None,
            scaling_bound: None,
        };
        let (c_w, c_phi) = w.decay_constants();
        w.c_w = c_w;
        w.c_phi = c_phi;
        w.certificate = find_certificate_in(&w.psi, r, support, CERTIFICATE_T_CAP);
        w.scaling_bound = w
            .certificate
            .and_then(|c| best_interval(&w.phi, r, support, c.t).map(|(k, m)| ScalingBound { k, m }));
        Ok(w)
    }

    /// Same system on `R^d`.
    pub fn with_dimension(&self, d: usize) -> WaveletSystem {
        let mut w = self.clone();
        w.d = d;
        let (c_w, c_phi) = w.decay_constants();
        w.c_w = c_w;
        w.c_phi = c_phi;
        w
    }

    /// Support bound `A`: every mother wavelet vanishes outside `[-A, A]^d`.
    pub fn support_radius(&self) -> u32 {
        self.support
    }

    /// Number of mother wavelets, `2^d - 1`.
    pub fn n_wavelets(&self) -> usize {
        (1usize << self.d) - 1
    }

    /// Bound on `sum_i sum_k |psi^{(i)}(x - k)|`.
    pub fn c_w(&self) -> f64 {
        self.c_w
    }

    /// Bound on `sum_k |phi(x - k)|` in dimension `d`.
    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    /// Largest sampled `|psi|`.
    pub fn psi_sup(&self) -> f64 {
        self.psi.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn certificate(&self) -> Option<PositivityCertificate> {
        self.certificate
    }

    pub fn scaling_bound(&self) -> Option<ScalingBound> {
        self.scaling_bound
    }

    /// Lower bound of the first mother wavelet on the certificate box in `R^d`.
    pub fn effective_m(&self) -> Option<f64> {
        let c = self.certificate?;
        let rest = if self.d > 1 { self.scaling_bound?.m.powi(self.d as i32 - 1) } else { 1.0 };
        Some(c.m * rest)
    }

    /// Sampled phi on the grid `2^{-R}` over `[0, S]`.
    pub fn phi_samples(&self) -> &[f64] {
        &self.phi
    }

    /// Sampled psi on the grid `2^{-R}` over `[0, S]`.
    pub fn psi_samples(&self) -> &[f64] {
        &self.psi
    }

    /// Smoothness gate for an experiment in `B^s_p`.
    pub fn check_regularity(&self, s: f64, p: f64) -> Result<()> {
        match self.family {
            Family::Haar => {
                let cap = 1.0f64.min(1.0 / p);
                if s < cap {
                    Ok(())
                } else {
                    Err(Error::RegularityGate(format!(
                        "Haar is admitted only for s < min(1, 1/p) = {cap}; got s = {s}, use a Daubechies system with regularity above s"
                    )))
                }
            }
            Family::Daubechies(n) => {
                if self.regularity > s {
                    Ok(())
                } else {
                    Err(Error::RegularityGate(format!(
                        "Daubechies order {n} has regularity {} which does not exceed s = {s}",
                        self.regularity
                    )))
                }
            }
        }
    }

    fn table_index(&self, y: &DyadicPoint) -> Option<usize> {
        // y is one-dimensional here; caller guarantees res <= R
        let shift = (self.resolution - y.res) as usize;
        (&y.num[0] << shift).to_usize()
    }

    /// Value of phi (`wavelet == false`) or psi (`wavelet == true`) at a 1-D dyadic point.
    pub fn factor(&self, wavelet: bool, y_num: &BigInt, y_res: u32) -> Result<f64> {
        if y_num.is_negative() {
            return Ok(0.0);
        }
        let s = self.support as u64;
        // y >= S ?
        if y_num.bits() > 0 && (y_num >> y_res as usize) >= BigInt::from(s) {
            return Ok(0.0);
        }
        if self.family == Family::Haar {
            return Ok(haar_value(wavelet, y_num, y_res));
        }
        let r = self.resolution;
        if y_res <= r {
            let y = DyadicPoint { num: vec![y_num.clone()], res: y_res };
            let idx = self.table_index(&y).expect("index inside the table");
            return Ok(if wavelet { self.psi[idx] } else { self.phi[idx] });
        }
        // reduce before refining
        let tz = y_num.trailing_zeros().unwrap_or(0).min((y_res - r) as u64) as u32;
        if tz > 0 {
            return self.factor(wavelet, &(y_num >> tz as usize), y_res - tz);
        }
        let extra = y_res - r;
        if extra > MAX_REFINE_BITS || self.low.is_empty() {
            return Err(Error::Precision(format!(
                "point at resolution {y_res} is beyond the sample grid 2^-{r}"
            )));
        }
        Ok(self.refine_value(wavelet, y_num, y_res))
    }

    /// Exact evaluation off the grid: `e_i^T T_{b_1} ... T_{b_q} V(f_q)`.
    fn refine_value(&self, wavelet: bool, y_num: &BigInt, y_res: u32) -> f64 {
        let s = self.support as usize;
        let r = self.resolution;
        let int_part = (y_num >> y_res as usize).to_usize().unwrap_or(0);
        let one = BigInt::from(1u8) << y_res as usize;
        let frac = y_num - (BigInt::from(int_part) << y_res as usize);
        debug_assert!(frac < one);
        let q = y_res - r;
        let mut row = vec![0.0; s];
        row[int_part] = 1.0;
        let mut next = vec![0.0; s];
        for step in 0..q {
            let bit = if frac.bit((y_res - 1 - step) as u64) { 1 } else { 0 };
            let m = if step == 0 && wavelet { &self.t_psi[bit] } else { &self.t_phi[bit] };
            for col in 0..s {
                let mut acc = 0.0;
                for (rr, rv) in row.iter().enumerate() {
                    acc += rv * m[rr * s + col];
                }
                next[col] = acc;
            }
            std::mem::swap(&mut row, &mut next);
        }
        let tail_mask = (BigInt::from(1u8) << r as usize) - 1;
        let base = (&frac & &tail_mask).to_usize().unwrap_or(0);
        let step = 1usize << r;
        row.iter()
            .enumerate()
            .map(|(m, w)| w * self.phi[base + m * step])
            .sum()
    }

    /// `psi^{(i)}_lambda(x) = psi^{(i)}(2^j x - k)`; index 0 is the scaling function.
    pub fn eval(&self, i: usize, lambda: &DyadicCube, x: &DyadicPoint) -> Result<f64> {
        if lambda.d() != self.d || x.d() != self.d {
            return Err(param("eval_wavelet", "dimension mismatch between system, cube and point"));
        }
        if i >= 1usize << self.d {
            return Err(param("eval_wavelet", format!("wavelet index {i} out of range")));
        }
        let y = x.scaled_offset(lambda.j, &lambda.k);
        let mut v = 1.0;
        for c in 0..self.d {
            let f = self.factor((i >> c) & 1 == 1, &y.num[c], y.res)?;
            if f == 0.0 {
                return Ok(0.0);
            }
            v *= f;
        }
        Ok(v)
    }

    /// Translations `k` at generation `j` whose support contains `x`.
    pub fn active_translations(&self, x: &DyadicPoint, j: u32) -> Vec<Vec<BigInt>> {
        let base = x.floor_scaled(j);
        let s = self.support as i64;
        let mut out: Vec<Vec<BigInt>> = vec![Vec::new()];
        for b in base.iter() {
            let mut grown = Vec::with_capacity(out.len() * s as usize);
            for prefix in &out {
                for off in (0..s).rev() {
                    let mut p = prefix.clone();
                    p.push(b - off);
                    grown.push(p);
                }
            }
            out = grown;
        }
        out
    }

    /// Cubes `lambda` of generation `j` with `psi^{(i)}_lambda(x)` possibly nonzero.
    pub fn active_cubes(&self, x: &DyadicPoint, j: u32) -> Vec<(usize, DyadicCube)> {
        let ks = self.active_translations(x, j);
        let mut out = Vec::with_capacity(ks.len() * self.n_wavelets());
        for k in ks {
            for i in 1..=self.n_wavelets() {
                out.push((i, DyadicCube { j, k: k.clone() }));
            }
        }
        out
    }

    fn decay_constants(&self) -> (f64, f64) {
        let step = 1usize << self.resolution;
        let s = self.support as usize;
        let mut a_max: f64 = 0.0;
        let mut a_min = f64::INFINITY;
        let mut b_max: f64 = 0.0;
        let mut ab_max: f64 = 0.0;
        for base in 0..step {
            let a: f64 = (0..s).map(|m| self.phi[base + m * step].abs()).sum();
            let b: f64 = (0..s).map(|m| self.psi[base + m * step].abs()).sum();
            a_max = a_max.max(a);
            a_min = a_min.min(a);
            b_max = b_max.max(b);
            ab_max = ab_max.max(a + b);
        }
        let d = self.d as i32;
        let c_w = if self.d == 1 { b_max } else { ab_max.powi(d) - a_min.powi(d) };
        (c_w, a_max.powi(d))
    }

    /// Largest `|phi(x) - sqrt2 sum_n h_n phi(2x - n)|` over the sample grid.
    pub fn refinement_residual(&self) -> f64 {
        if self.family == Family::Haar || self.low.is_empty() {
            return 0.0;
        }
        let step = 1usize << self.resolution;
        let s = self.support as usize;
        (0..=s * step)
            .map(|idx| (self.phi[idx] - refine_at(&self.phi, &self.low, idx, step, s)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "family": self.family.name(),
            "order": self.family.order(),
            "R": self.resolution,
            "d": self.d,
            "filters": {
                "low": self.low.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>(),
                "high": self.high.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>(),
            },
            "A": self.support,
            "regularity": self.regularity,
            "certificate": self.certificate.map(|c| json!({"t": c.t, "k": c.k, "m": format!("{}", c.m)})),
        })
    }
}

fn haar_value(wavelet: bool, y_num: &BigInt, y_res: u32) -> f64 {
    // caller has checked 0 <= y < 1
    if !wavelet {
        return 1.0;
    }
    if y_res == 0 {
        return if y_num.is_zero() { 1.0 } else { 0.0 };
    }
    let half = BigInt::from(1u8) << (y_res - 1) as usize;
    if y_num < &half {
        1.0
    } else {
        -1.0
    }
}

/// Interval of generation `t` with the largest positive sampled minimum.
fn best_interval(table: &[f64], r: u32, support: u32, t: u32) -> Option<(u64, f64)> {
    if t > r {
        return None;
    }
    let width = 1usize << (r - t);
    let count = (support as usize) << t;
    let mut best: Option<(u64, f64)> = None;
    for k in 0..count {
        let lo = k * width;
        let m = table[lo..lo + width].iter().cloned().fold(f64::INFINITY, f64::min);
        if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
            best = Some((k as u64, m));
        }
    }
    best
}

fn find_certificate_in(psi: &[f64], r: u32, support: u32, t_cap: u32) -> Option<PositivityCertificate> {
    (1..=t_cap.min(r)).find_map(|t| best_interval(psi, r, support, t).map(|(k, m)| PositivityCertificate { t, k, m }))
}

/// Positivity certificate: the first generation `t <= t_cap` holding an
/// interval `[k/2^t, (k+1)/2^t)` where the sampled psi is strictly positive,
/// taking the interval with the largest minimum (smallest `k` on ties).
pub fn find_positivity_certificate(w: &WaveletSystem) -> Result<PositivityCertificate> {
    w.certificate
        .ok_or(Error::CertificateNotFound(CERTIFICATE_T_CAP.min(w.resolution)))
}

/// Same scan with an explicit generation cap.
pub fn find_positivity_certificate_up_to(w: &WaveletSystem, t_cap: u32) -> Result<PositivityCertificate> {
    find_certificate_in(&w.psi, w.resolution, w.support, t_cap).ok_or(Error::CertificateNotFound(t_cap))
}

/// Point evaluation `psi^{(i)}_lambda(x)`.
pub fn eval_wavelet(w: &WaveletSystem, i: usize, lambda: &DyadicCube, x: &DyadicPoint) -> Result<f64> {
    w.eval(i, lambda, x)
}

/// Active set `Gamma_j(x)` with wavelet indices.
pub fn active_cubes(w: &WaveletSystem, x: &DyadicPoint, j: u32) -> Vec<(usize, DyadicCube)> {
    w.active_cubes(x, j)
}
