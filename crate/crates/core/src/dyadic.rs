//! Exact dyadic cubes and points.
//!
//! A cube `(j, k)` is the half-open box `prod [k_i / 2^j, (k_i + 1) / 2^j)`.
//! A point `(num, res)` is `num_i / 2^res`. All arithmetic is on big integers,
//! so nothing rounds regardless of depth.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{Number, Value};

use crate::cantor::{CantorParams, Layout};
use crate::error::{Error, Result};

/// Half-open dyadic cube of generation `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub j: u32,
    pub k: Vec<BigInt>,
}

/// Exact dyadic point `num / 2^res` in every coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    pub num: Vec<BigInt>,
    pub res: u32,
}

impl DyadicCube {
    pub fn new(j: u32, k: Vec<BigInt>) -> Self {
        DyadicCube { j, k }
    }

    pub fn from_i64(j: u32, k: &[i64]) -> Self {
        DyadicCube {
            j,
            k: k.iter().map(|&v| BigInt::from(v)).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.k.len()
    }

    /// Sup-norm diameter `2^{-j}`.
    pub fn width(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    pub fn contains(&self, x: &DyadicPoint) -> bool {
        x.d() == self.d() && x.floor_scaled(self.j) == self.k
    }

    /// True when `other` is contained in `self`.
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        other.j >= self.j && other.d() == self.d() && other.ancestor(self.j) == *self
    }

    pub fn intersects(&self, other: &DyadicCube) -> bool {
        self.contains_cube(other) || other.contains_cube(self)
    }

    /// Ancestor at generation `j <= self.j`.
    pub fn ancestor(&self, j: u32) -> DyadicCube {
        assert!(j <= self.j, "ancestor generation above cube generation");
        let shift = (self.j - j) as usize;
        DyadicCube {
            j,
            k: self.k.iter().map(|k| k >> shift).collect(),
        }
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        (self.j > 0).then(|| self.ancestor(self.j - 1))
    }

    /// The `2^d` children in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.d();
        (0..1usize << d)
            .map(|bits| DyadicCube {
                j: self.j + 1,
                k: (0..d)
                    .map(|c| (&self.k[c] << 1usize) + BigInt::from((bits >> (d - 1 - c)) & 1))
                    .collect(),
            })
            .collect()
    }

    /// Lower-left corner, which belongs to the cube.
    pub fn corner(&self) -> DyadicPoint {
        DyadicPoint {
            num: self.k.clone(),
            res: self.j,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = vec![Value::from(self.j)];
        v.extend(self.k.iter().map(bigint_json));
        Value::Array(v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Format("cube must be an array [j, k...]".into()))?;
        if arr.len() < 2 {
            return Err(Error::Format("cube needs a generation and coordinates".into()));
        }
        let j = arr[0]
            .as_u64()
            .and_then(|j| u32::try_from(j).ok())
            .ok_or_else(|| Error::Format("cube generation must be a small integer".into()))?;
        let k = arr[1..].iter().map(json_bigint).collect::<Result<_>>()?;
        Ok(DyadicCube { j, k })
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; ", self.j)?;
        for (i, k) in self.k.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl DyadicPoint {
    pub fn new(num: Vec<BigInt>, res: u32) -> Self {
        DyadicPoint { num, res }
    }

    pub fn from_i64(num: &[i64], res: u32) -> Self {
        DyadicPoint {
            num: num.iter().map(|&v| BigInt::from(v)).collect(),
            res,
        }
    }

    pub fn zero(d: usize, res: u32) -> Self {
        DyadicPoint {
            num: vec![BigInt::zero(); d],
            res,
        }
    }

    pub fn d(&self) -> usize {
        self.num.len()
    }

    /// Same point with the smallest resolution that represents it.
    pub fn reduced(&self) -> DyadicPoint {
        let tz = self
            .num
            .iter()
            .filter(|n| !n.is_zero())
            .map(|n| n.trailing_zeros().unwrap_or(0))
            .min()
            .unwrap_or(u64::MAX);
        let shift = tz.min(self.res as u64) as u32;
        DyadicPoint {
            num: self.num.iter().map(|n| n >> shift as usize).collect(),
            res: self.res - shift,
        }
    }

    /// Re-express at resolution `r`; fails when `r` is too coarse.
    pub fn at_resolution(&self, r: u32) -> Result<DyadicPoint> {
        if r >= self.res {
            let up = (r - self.res) as usize;
            return Ok(DyadicPoint {
                num: self.num.iter().map(|n| n << up).collect(),
                res: r,
            });
        }
        let red = self.reduced();
        if red.res > r {
            return Err(Error::Precision(format!(
                "point needs resolution {} but {} was requested",
                red.res, r
            )));
        }
        red.at_resolution(r)
    }

    /// `floor(2^j x)` coordinate-wise, for any `j`.
    pub fn floor_scaled(&self, j: u32) -> Vec<BigInt> {
        if j >= self.res {
            let up = (j - self.res) as usize;
            self.num.iter().map(|n| n << up).collect()
        } else {
            let down = (self.res - j) as usize;
            self.num.iter().map(|n| n >> down).collect()
        }
    }

    /// `2^j x - k` as an exact dyadic point.
    pub fn scaled_offset(&self, j: u32, k: &[BigInt]) -> DyadicPoint {
        if j >= self.res {
            let up = (j - self.res) as usize;
            DyadicPoint {
                num: self
                    .num
                    .iter()
                    .zip(k)
                    .map(|(n, k)| (n << up) - k)
                    .collect(),
                res: 0,
            }
        } else {
            let r = self.res - j;
            DyadicPoint {
                num: self
                    .num
                    .iter()
                    .zip(k)
                    .map(|(n, k)| n - (k << r as usize))
                    .collect(),
                res: r,
            }
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.num.iter().map(|n| ratio_to_f64(n, self.res)).collect()
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "num": self.num.iter().map(bigint_json).collect::<Vec<_>>(),
            "res": self.res,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = v
            .get("num")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Format("point needs a \"num\" array".into()))?
            .iter()
            .map(json_bigint)
            .collect::<Result<_>>()?;
        let res = v
            .get("res")
            .and_then(Value::as_u64)
            .and_then(|r| u32::try_from(r).ok())
            .ok_or_else(|| Error::Format("point needs an integer \"res\"".into()))?;
        Ok(DyadicPoint { num, res })
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        for (i, n) in r.num.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            if r.res == 0 {
                write!(f, "{n}")?;
            } else {
                write!(f, "{n}/2^{}", r.res)?;
            }
        }
        Ok(())
    }
}

/// `n / 2^r` rounded to the nearest double, without overflow for huge `n`.
pub fn ratio_to_f64(n: &BigInt, r: u32) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let bits = n.bits();
    if bits <= 1000 && r <= 1000 {
        if let Some(v) = n.to_f64() {
            return v * (-(r as f64)).exp2();
        }
    }
    let keep = 60u64;
    let drop = bits.saturating_sub(keep);
    let head = (n.abs() >> drop as usize).to_f64().unwrap_or(0.0);
    let v = head * ((drop as f64) - r as f64).exp2();
    if n.is_negative() {
        -v
    } else {
        v
    }
}

pub(crate) fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::Number(
            n.to_string()
                .parse::<Number>()
                .expect("integer literal is a valid JSON number"),
        ),
    }
}

pub(crate) fn json_bigint(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .to_string()
            .parse::<BigInt>()
            .map_err(|_| Error::Format(format!("expected an integer, found {n}"))),
        Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| Error::Format(format!("expected an integer, found {s:?}"))),
        other => Err(Error::Format(format!("expected an integer, found {other}"))),
    }
}

/// `lambda_j(x)`: the generation-`j` cube containing `x`.
pub fn cube_of_point(x: &DyadicPoint, j: u32) -> Result<DyadicCube> {
    if j > x.res {
        return Err(Error::Precision(format!(
            "generation {j} is finer than the point resolution {}",
            x.res
        )));
    }
    Ok(DyadicCube {
        j,
        k: x.floor_scaled(j),
    })
}

/// Companion cube `mu(lambda)` of a generation-`n` cube of the construction.
///
/// For `lambda = [(k + l 2^t) / 2^{t+W_n}, ...)` this returns `[l / 2^{W_n}, ...)`,
/// where `W_n` is the accumulated radix of the first `n` generations.
pub fn mu_of(lambda: &DyadicCube, params: &CantorParams) -> Result<DyadicCube> {
    let layout = Layout::up_to_level(params, lambda.j)?;
    let (n, l) = layout.address(lambda)?;
    Ok(DyadicCube {
        j: layout.mu_level(n),
        k: l,
    })
}
