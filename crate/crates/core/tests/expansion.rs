use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;
use wavesat::cantor::TargetSet;
use wavesat::dyadic::{DyadicCube, DyadicPoint};
use wavesat::expansion::*;
use wavesat::saturate::{build_convergence, build_divergence, divergence_term, SaturationSpec};
use wavesat::wavelet::{build_system, Family, WaveletSystem};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn haar() -> Arc<WaveletSystem> {
    Arc::new(build_system(Family::Haar, 1, 10).unwrap())
}

fn space(s: BigRational, p: i64) -> Space {
    Space::new(1, s, q(p, 1), q(2, 1)).unwrap()
}

fn pt(num: i64, res: u32) -> DyadicPoint {
    DyadicPoint::from_i64(&[num], res)
}

/// Oracle: the Haar mother wavelet on the real line.
fn haar_psi(y: f64) -> f64 {
    if (0.0..0.5).contains(&y) {
        1.0
    } else if (0.5..1.0).contains(&y) {
        -1.0
    } else {
        0.0
    }
}

/// Oracle: `Q_l f(x)` summed over every stored Haar coefficient, read from the file form.
fn haar_q_oracle(e: &Expansion, l: u32, x: f64) -> f64 {
    let v = e.to_json().unwrap();
    v["details"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|row| row[1].as_u64() == Some(l as u64))
        .map(|row| {
            let k = row[2].as_f64().unwrap();
            let c: f64 = row[3].as_str().unwrap().parse().unwrap();
            c * haar_psi(x * (l as f64).exp2() - k)
        })
        .sum()
}

fn divergence_spec(n_max: u32) -> SaturationSpec {
    SaturationSpec {
        space: space(q(0, 1), 2),
        wavelet: haar(),
        n: 2,
        t: Some(1),
        target: TargetSet::Points(vec![pt(0, 0)]),
        alpha_prime: 0.2,
        n_max,
    }
}

fn convergence_spec(n_max: u32) -> SaturationSpec {
    SaturationSpec {
        space: space(q(1, 4), 2),
        wavelet: haar(),
        n: 4,
        t: Some(1),
        target: TargetSet::Points(vec![pt(0, 0)]),
        alpha_prime: 0.6,
        n_max,
    }
}

#[test]
fn besov_norm_examples() {
    let mut e = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    e.add_detail(1, DyadicCube::from_i64(3, &[0]), 1.0).unwrap();
    let b = e.besov_norm().unwrap();
    assert!((b.levels[0].eps - (-1.5f64).exp2()).abs() < 1e-15);
    assert!((b.norm - 0.353553).abs() < 1e-6);

    let zero = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    assert_eq!(zero.besov_norm().unwrap().norm, 0.0);

    // f_3 of the divergence recipe: level 6, card(Gamma_3) = 1
    let f3 = divergence_term(&divergence_spec(3), 3).unwrap();
    let b = f3.besov_norm().unwrap();
    assert_eq!(b.levels.len(), 1);
    assert_eq!(b.levels[0].j, 6);
    let oracle = (2.8f64 - 3.0).exp2();
    assert!((b.levels[0].eps - oracle).abs() < 1e-12);
    assert!((b.levels[0].eps - 0.87055).abs() < 1e-5);
}

#[test]
fn evaluator_examples() {
    let mut f = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    f.add_detail(1, DyadicCube::from_i64(0, &[0]), 1.0).unwrap();
    assert_eq!(f.eval_q(0, &pt(1, 2)).unwrap(), 1.0);
    assert_eq!(f.eval_q(0, &pt(3, 2)).unwrap(), -1.0);
    assert_eq!(f.eval_q(1, &pt(1, 2)).unwrap(), 0.0);
    for x in [pt(1, 2), pt(3, 2), pt(5, 3)] {
        assert_eq!(f.eval_p(0, &x).unwrap(), 0.0);
        for j in 1..6 {
            assert_eq!(f.eval_p(j, &x).unwrap(), f.eval_p(1, &x).unwrap());
        }
        assert_eq!(f.eval_r(1, &x).unwrap(), 0.0);
    }
    assert_eq!(f.eval_p(1, &pt(1, 2)).unwrap(), 1.0);
    assert_eq!(f.eval_r(0, &pt(1, 2)).unwrap(), 1.0);

    let mut g = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    g.add_detail(1, DyadicCube::from_i64(1, &[0]), 2.0).unwrap();
    g.add_detail(1, DyadicCube::from_i64(1, &[1]), -1.0).unwrap();
    let x = pt(5, 3);
    assert_eq!(g.eval_q(1, &x).unwrap(), -1.0);
    assert_eq!(g.eval_q(1, &x).unwrap(), haar_q_oracle(&g, 1, 0.625));

    let mut h = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    h.add_scaling(vec![BigInt::from(0)], 1.0).unwrap();
    for j in 0..8 {
        assert_eq!(h.eval_p(j, &pt(1, 1)).unwrap(), 1.0);
    }

    let zero = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    assert_eq!(zero.eval_r(0, &pt(1, 2)).unwrap(), 0.0);
    assert_eq!(zero.count_large_coefficients(0.0, 3).unwrap(), BigUint::from(0u8));
    assert_eq!(zero.remainder_bound(0, &pt(1, 2), 0.1).unwrap(), 0.0);
}

#[test]
fn divergence_partial_sums_at_zero() {
    let f = build_divergence(&divergence_spec(12)).unwrap().expansion;
    let x = pt(0, 0);
    for n in 1..=11u32 {
        let j = 2 * n + 1;
        let lower = (0.4 * j as f64).exp2() / (n * n) as f64;
        // independent oracle: the explicit finite sum of the terms with level 2m < j
        let oracle: f64 = (1..=n).map(|m| (0.4 * (2 * m + 1) as f64).exp2() / (m * m) as f64).sum();
        let p = f.eval_p(j, &x).unwrap();
        assert!(p >= lower, "P_{j} f(0) = {p} below {lower}");
        assert!((p - oracle).abs() <= 1e-12 * oracle);
    }
}

#[test]
fn convergence_remainder_lower_bound() {
    let spec = convergence_spec(12);
    let f = build_convergence(&spec).unwrap().expansion;
    let x = pt(0, 0);
    let c = (0.5 - 0.6) / 2.0;
    // R_j, j in (Nn, N(n+1)], contains the level N(n+1) term of index n + 1
    for n in 0..spec.n_max {
        let m = n + 1;
        let bound = ((4 * m + 1) as f64 * c).exp2() / (m * m) as f64;
        for j in 4 * n + 1..=4 * m {
            let r = f.eval_r(j, &x).unwrap();
            assert!(r >= bound * (1.0 - 1e-12), "R_{j} f(0) = {r} below {bound}");
        }
    }
}

#[test]
fn count_large_examples() {
    let mut e = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    e.add_detail(1, DyadicCube::from_i64(3, &[0]), 1.0).unwrap();
    assert_eq!(e.count_large_coefficients(-1.0, 3).unwrap(), BigUint::from(1u8));
    assert_eq!(e.count_large_coefficients(1.0, 3).unwrap(), BigUint::from(0u8));

    let f3 = divergence_term(&divergence_spec(3), 3).unwrap();
    assert_eq!(f3.count_large_coefficients(0.3, 6).unwrap(), BigUint::from(1u8));
}

#[test]
fn remainder_bound_examples() {
    let mut f = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    f.add_detail(1, DyadicCube::from_i64(0, &[0]), 1.0).unwrap();
    assert!((f.remainder_bound(0, &pt(1, 2), 0.1).unwrap() - 1.0).abs() < 1e-15);

    let spec = convergence_spec(10);
    let b = build_convergence(&spec).unwrap();
    let cw = spec.wavelet.c_w();
    let eps = b.expansion.default_remainder_eps();
    for (idx, x) in b.system.sample_points(3, 100, 7).unwrap().iter().enumerate() {
        let j = 5 + (idx as u32 % 20);
        let r = b.expansion.eval_r(j, x).unwrap().abs();
        let rb = b.expansion.remainder_bound(j, x, eps).unwrap();
        assert!(rb >= r / cw - 1e-15, "bound {rb} below |R| / C_w = {}", r / cw);
    }
}

fn grid_check(e: &Expansion, points: &[DyadicPoint], j_max: u32) {
    let top = e.top_level() + 1;
    for x in points {
        let total = e.eval_total(x).unwrap();
        let (ps, rs) = e.sums(x, j_max).unwrap();
        for j in 0..j_max {
            let pj = e.eval_p(j, x).unwrap();
            let pj1 = e.eval_p(j + 1, x).unwrap();
            let qj = e.eval_q(j, x).unwrap();
            let rj = e.eval_r(j, x).unwrap();
            let mag = pj.abs().max(pj1.abs()).max(total.abs()).max(1.0);
            assert!((pj1 - pj - qj).abs() <= 1e-12 * mag);
            assert!((pj + rj - total).abs() <= 1e-10 * mag);
            assert_eq!(ps[j as usize], pj);
            assert_eq!(rs[j as usize], rj);
        }
        assert_eq!(e.eval_p(top, x).unwrap(), total);
    }
}

#[test]
fn telescoping_and_decomposition_on_builders() {
    let div = build_divergence(&divergence_spec(10)).unwrap();
    let pts = div.system.sample_points(6, 40, 1).unwrap();
    grid_check(&div.expansion, &pts, 24);
    let conv = build_convergence(&convergence_spec(8)).unwrap();
    let pts = conv.system.sample_points(4, 40, 2).unwrap();
    grid_check(&conv.expansion, &pts, 34);
}

#[test]
fn haar_evaluation_matches_direct_sum() {
    let f = build_divergence(&divergence_spec(6)).unwrap();
    for x in f.system.sample_points(6, 30, 3).unwrap() {
        let xf = x.to_f64()[0];
        for l in f.expansion.levels() {
            let got = f.expansion.eval_q(l, &x).unwrap();
            assert_eq!(got, haar_q_oracle(&f.expansion, l, xf));
        }
    }
}

fn norm_count_holds(e: &Expansion, gammas: &[f64]) {
    let b = e.besov_norm().unwrap();
    let m = b.sup_eps();
    let (d, s, p) = (1.0, e.space.s(), e.space.p());
    for j in e.levels() {
        for &g in gammas {
            let count = e.count_large_coefficients(g, j).unwrap();
            let c = log2_biguint(&count);
            let bound = p * m.log2() + (d - s * p - g * p) * j as f64;
            assert!(count == BigUint::from(0u8) || c <= bound + 1e-9, "gamma {g}, j {j}: log2 count {c} > {bound}");
        }
    }
}

#[test]
fn norm_count_inequality_on_builders() {
    let gammas: Vec<f64> = (-8..=8).map(|g| g as f64 / 8.0).collect();
    norm_count_holds(&build_divergence(&divergence_spec(12)).unwrap().expansion, &gammas);
    norm_count_holds(&build_convergence(&convergence_spec(10)).unwrap().expansion, &gammas);
    let mut whole = divergence_spec(14);
    whole.target = TargetSet::LexPrefix { t_prime: 1.5 };
    whole.alpha_prime = 0.45;
    norm_count_holds(&build_divergence(&whole).unwrap().expansion, &gammas);
}

#[test]
fn besov_norm_of_lazy_blocks_matches_materialized() {
    let mut spec = divergence_spec(8);
    spec.target = TargetSet::LexPrefix { t_prime: 1.5 };
    spec.alpha_prime = 0.45;
    let lazy = build_divergence(&spec).unwrap().expansion;
    let mut explicit = Expansion::new(lazy.space.clone(), haar()).unwrap();
    for j in lazy.levels() {
        for (i, lambda, v) in lazy.level_coefficients(j).unwrap() {
            explicit.add_detail(i, lambda, v).unwrap();
        }
    }
    let a = lazy.besov_norm().unwrap();
    let b = explicit.besov_norm().unwrap();
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert_eq!(x.j, y.j);
        assert!((x.eps - y.eps).abs() <= 1e-12 * y.eps);
    }
    assert_eq!(lazy.n_coefficients(), explicit.n_coefficients());
    for g in [-0.5, 0.0, 0.2, 0.4] {
        for j in lazy.levels() {
            assert_eq!(lazy.count_large_coefficients(g, j).unwrap(), explicit.count_large_coefficients(g, j).unwrap());
        }
    }
}

#[test]
fn json_round_trip_is_exact() {
    let f = build_divergence(&divergence_spec(6)).unwrap().expansion;
    let v = f.to_json().unwrap();
    let g = Expansion::from_json(&v).unwrap();
    assert_eq!(g.to_json().unwrap(), v);
    for j in f.levels() {
        let mut a = f.level_coefficients(j).unwrap();
        let mut b = g.level_coefficients(j).unwrap();
        a.sort_by(|x, y| x.1.cmp(&y.1));
        b.sort_by(|x, y| x.1.cmp(&y.1));
        assert_eq!(a, b);
    }
}

#[test]
fn rejects_invalid_spaces() {
    assert!(Space::new(1, q(0, 1), q(1, 2), q(2, 1)).is_err());
    assert!(Space::new(1, q(-1, 2), q(2, 1), q(2, 1)).is_err());
    let mut e = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
    assert!(e.add_detail(1, DyadicCube::from_i64(0, &[0]), f64::NAN).is_err());
}

#[test]
fn remainder_constant_calibration() {
    let spec = convergence_spec(10);
    let b = build_convergence(&spec).unwrap();
    let e = &b.expansion;
    let eps = e.default_remainder_eps();
    let ch = e.remainder_constant(eps);
    let mut calibrated = 0.0f64;
    for (idx, x) in b.system.sample_points(5, 1000, 11).unwrap().iter().enumerate() {
        let j = idx as u32 % 40;
        let r = e.eval_r(j, x).unwrap().abs();
        let rb = e.remainder_bound(j, x, eps).unwrap();
        if rb > 0.0 {
            calibrated = calibrated.max(r / rb);
            assert!(r <= ch * rb * (1.0 + 1e-12));
        }
    }
    assert!(calibrated < 10.0 * spec.wavelet.c_w(), "calibrated constant {calibrated}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn telescoping_random_haar(coeffs in prop::collection::vec((0u32..8, 0i64..256, -4.0f64..4.0), 1..30), xn in 0i64..1024) {
        let mut e = Expansion::new(space(q(0, 1), 2), haar()).unwrap();
        for (j, k, v) in coeffs {
            let k = k % (1i64 << j);
            e.add_detail(1, DyadicCube::from_i64(j, &[k]), v).unwrap();
        }
        let x = pt(xn, 10);
        let total = e.eval_total(&x).unwrap();
        for j in 0..10 {
            let d = e.eval_p(j + 1, &x).unwrap() - e.eval_p(j, &x).unwrap() - e.eval_q(j, &x).unwrap();
            prop_assert!(d.abs() <= 1e-12 * total.abs().max(1.0));
            let r = e.eval_p(j, &x).unwrap() + e.eval_r(j, &x).unwrap() - total;
            prop_assert!(r.abs() <= 1e-10 * total.abs().max(1.0));
        }
    }

    #[test]
    fn single_coefficient_norm(j in 0u32..30, v in 0.01f64..100.0) {
        let mut e = Expansion::new(space(q(1, 4), 2), haar()).unwrap();
        e.add_detail(1, DyadicCube::from_i64(j, &[0]), v).unwrap();
        let eps = e.besov_norm().unwrap().levels[0].eps;
        let oracle = v * ((0.25 - 0.5) * j as f64).exp2();
        prop_assert!((eps - oracle).abs() <= 1e-12 * oracle);
    }
}
