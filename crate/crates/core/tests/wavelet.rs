use std::collections::HashMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesat::dyadic::{DyadicCube, DyadicPoint};
use wavesat::wavelet::{active_cubes, build_system, eval_wavelet, find_positivity_certificate, Family, WaveletSystem};
use wavesat::Error;

/// Independent D2 evaluator: closed-form filter and integer values, then
/// plain recursion of the refinement equation on exact dyadic arguments.
struct D2Oracle {
    h: [f64; 4],
    memo: HashMap<(i64, u32), f64>,
}

impl D2Oracle {
    fn new() -> Self {
        let s3 = 3f64.sqrt();
        let d = 4.0 * 2f64.sqrt();
        D2Oracle {
            h: [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d],
            memo: HashMap::new(),
        }
    }

    /// phi(a / 2^r)
    fn phi(&mut self, a: i64, r: u32) -> f64 {
        if a <= 0 || a >= (3i64 << r) {
            return 0.0;
        }
        if r == 0 {
            let s3 = 3f64.sqrt();
            return match a {
                1 => (1.0 + s3) / 2.0,
                2 => (1.0 - s3) / 2.0,
                _ => 0.0,
            };
        }
        if a % 2 == 0 {
            return self.phi(a / 2, r - 1);
        }
        if let Some(v) = self.memo.get(&(a, r)) {
            return *v;
        }
        // phi(y) = sqrt2 sum h_n phi(2y - n), 2y = a / 2^{r-1}
        let mut v = 0.0;
        for n in 0..4 {
            v += self.h[n] * self.phi(a - ((n as i64) << (r - 1)), r - 1);
        }
        v *= 2f64.sqrt();
        self.memo.insert((a, r), v);
        v
    }

    fn psi(&mut self, a: i64, r: u32) -> f64 {
        let mut v = 0.0;
        for n in 0..4usize {
            let g = if n % 2 == 0 { self.h[3 - n] } else { -self.h[3 - n] };
            // 2y - n at resolution r: (2a - n 2^r) / 2^r
            v += g * self.phi(2 * a - ((n as i64) << r), r);
        }
        v * 2f64.sqrt()
    }
}

fn pt(n: i64, r: u32) -> DyadicPoint {
    DyadicPoint::from_i64(&[n], r)
}

#[test]
fn haar_closed_form() {
    let w = build_system(Family::Haar, 1, 4).unwrap();
    let l = DyadicCube::from_i64(0, &[0]);
    assert_eq!(eval_wavelet(&w, 1, &l, &pt(1, 2)).unwrap(), 1.0);
    assert_eq!(eval_wavelet(&w, 1, &DyadicCube::from_i64(1, &[1]), &pt(3, 2)).unwrap(), -1.0);
    assert_eq!(eval_wavelet(&w, 1, &DyadicCube::from_i64(0, &[3]), &pt(1, 2)).unwrap(), 0.0);
    // exact at any depth
    assert_eq!(eval_wavelet(&w, 1, &l, &pt((1 << 40) - 1, 41)).unwrap(), 1.0);
    assert_eq!(eval_wavelet(&w, 1, &l, &pt(1 << 40, 41)).unwrap(), -1.0);
    assert_eq!(w.refinement_residual(), 0.0);
    let c = find_positivity_certificate(&w).unwrap();
    assert_eq!((c.t, c.k, c.m), (1, 0, 1.0));
}

#[test]
fn daubechies_one_is_haar() {
    assert_eq!(Family::parse("daubechies", 1).unwrap(), Family::Haar);
    assert!(Family::parse("meyer", 3).is_err());
}

#[test]
fn d2_integer_values_and_support() {
    let w = build_system(Family::Daubechies(2), 1, 10).unwrap();
    let s3 = 3f64.sqrt();
    assert_eq!(w.support_radius(), 3);
    let phi1 = w.phi_samples()[1 << 10];
    let phi2 = w.phi_samples()[2 << 10];
    assert!((phi1 - (1.0 + s3) / 2.0).abs() < 1e-9, "phi(1) = {phi1}");
    assert!((phi2 - (1.0 - s3) / 2.0).abs() < 1e-9, "phi(2) = {phi2}");
    assert!((phi1 - 1.36603).abs() < 1e-5 && (phi2 + 0.36603).abs() < 1e-5);
    assert!(w.refinement_residual() <= 2f64.powi(-10 + 2));
}

#[test]
fn d2_tables_match_recursive_oracle() {
    let w = build_system(Family::Daubechies(2), 1, 10).unwrap();
    let mut o = D2Oracle::new();
    for a in (0..(3 << 10)).step_by(37) {
        assert!((w.phi_samples()[a as usize] - o.phi(a, 10)).abs() < 1e-9);
        assert!((w.psi_samples()[a as usize] - o.psi(a, 10)).abs() < 1e-9);
    }
    // points finer than the table go through exact refinement
    let l = DyadicCube::from_i64(0, &[0]);
    for a in [1i64, 777, 4097, 12_000] {
        let v = eval_wavelet(&w, 1, &l, &pt(a, 14)).unwrap();
        assert!((v - o.psi(a, 14)).abs() < 1e-9, "psi({a}/2^14)");
    }
}

#[test]
fn d2_certificate_matches_oracle_scan() {
    let w = build_system(Family::Daubechies(2), 1, 12).unwrap();
    let c = find_positivity_certificate(&w).unwrap();
    // Oracle: first generation t with a half-open interval on which every
    // grid value of psi is positive; the largest minimum wins.
    let mut o = D2Oracle::new();
    let r = 12u32;
    let mut best: Option<(u32, u64, f64)> = None;
    'outer: for t in 1..=6u32 {
        for k in 0..(3u64 << t) {
            let lo = (k << (r - t)) as i64;
            let hi = ((k + 1) << (r - t)) as i64;
            let m = (lo..hi).map(|a| o.psi(a, r)).fold(f64::INFINITY, f64::min);
            if m > 0.0 && best.is_none_or(|b| m > b.2) {
                best = Some((t, k, m));
            }
        }
        if best.is_some() {
            break 'outer;
        }
    }
    let (t, k, m) = best.unwrap();
    assert_eq!((c.t, c.k), (t, k));
    assert!((c.m - m).abs() < 1e-9);
    // frozen values
    assert_eq!((c.t, c.k), (2, 5));
    assert!((c.m - 1.0636).abs() < 1e-3);
}

#[test]
fn zero_system_has_no_certificate() {
    let len = (1usize << 4) + 1;
    let w = WaveletSystem::from_samples(vec![0.0; len], vec![0.0; len], 4, 1).unwrap();
    assert!(matches!(find_positivity_certificate(&w), Err(Error::CertificateNotFound(_))));
    assert!(w.certificate().is_none());
}

#[test]
fn sample_only_system_rejects_off_grid_points() {
    let len = (1usize << 4) + 1;
    let w = WaveletSystem::from_samples(vec![1.0; len], vec![1.0; len], 4, 1).unwrap();
    let l = DyadicCube::from_i64(0, &[0]);
    assert!(eval_wavelet(&w, 1, &l, &pt(1, 4)).is_ok());
    assert!(matches!(eval_wavelet(&w, 1, &l, &pt(1, 6)), Err(Error::Precision(_))));
}

#[test]
fn build_rejects_bad_arguments() {
    assert!(build_system(Family::Haar, 1, 3).is_err());
    assert!(build_system(Family::Daubechies(11), 1, 10).is_err());
    assert!(build_system(Family::Haar, 0, 10).is_err());
}

#[test]
fn active_cube_counts() {
    let haar = build_system(Family::Haar, 1, 8).unwrap();
    let d2 = build_system(Family::Daubechies(2), 1, 10).unwrap();
    let haar2 = build_system(Family::Haar, 2, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let j = rng.gen_range(0..12u32);
        let x = pt(rng.gen_range(-5000..5000), 10);
        assert_eq!(active_cubes(&haar, &x, j).len(), 1);
        let a = d2.support_radius() as usize;
        assert!(active_cubes(&d2, &x, j).len() <= 2 * a + 1);
        let y = DyadicPoint::from_i64(&[rng.gen_range(0..1024), rng.gen_range(0..1024)], 10);
        let cubes = active_cubes(&haar2, &y, j);
        assert_eq!(cubes.len(), 3);
        assert!(cubes.iter().all(|(_, c)| *c == cubes[0].1));
    }
}

#[test]
fn active_cubes_cover_every_nonzero_term() {
    let d2 = build_system(Family::Daubechies(2), 1, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let j = rng.gen_range(0..6u32);
        let x = pt(rng.gen_range(0..4096), 10);
        let active: Vec<_> = active_cubes(&d2, &x, j).into_iter().map(|(_, c)| c).collect();
        let base = x.floor_scaled(j)[0].clone();
        for dk in -6i64..=6 {
            let lam = DyadicCube::new(j, vec![&base + BigInt::from(dk)]);
            let v = eval_wavelet(&d2, 1, &lam, &x).unwrap();
            if v != 0.0 {
                assert!(active.contains(&lam));
            }
        }
    }
}

#[test]
fn decay_sum_bounded_by_cw() {
    for (fam, d) in [(Family::Haar, 1), (Family::Daubechies(2), 1), (Family::Daubechies(3), 1), (Family::Haar, 2), (Family::Daubechies(2), 2)] {
        let w = build_system(fam, d, 10).unwrap();
        let cw = w.c_w();
        assert!(cw.is_finite() && cw > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let j = rng.gen_range(0..=12u32);
            let x = DyadicPoint::new((0..d).map(|_| BigInt::from(rng.gen_range(-4096i64..4096))).collect(), 10);
            let total: f64 = active_cubes(&w, &x, j)
                .iter()
                .map(|(i, l)| eval_wavelet(&w, *i, l, &x).unwrap().abs())
                .sum();
            assert!(total <= 1.05 * cw, "{fam:?} d={d}: {total} > 1.05 * {cw}");
        }
    }
}

#[test]
fn regularity_gate() {
    let haar = build_system(Family::Haar, 1, 8).unwrap();
    assert!(haar.check_regularity(0.25, 2.0).is_ok());
    assert!(matches!(haar.check_regularity(0.5, 2.0), Err(Error::RegularityGate(_))));
    let d2 = build_system(Family::Daubechies(2), 1, 8).unwrap();
    assert!(d2.check_regularity(0.5, 2.0).is_ok());
    assert!(d2.check_regularity(0.6, 2.0).is_err());
    let d4 = build_system(Family::Daubechies(4), 1, 8).unwrap();
    assert!(d4.check_regularity(1.5, 1.0).is_ok());
}

#[test]
fn refinement_residual_within_tolerance() {
    for order in 2..=10 {
        let w = build_system(Family::Daubechies(order), 1, 10).unwrap();
        assert!(w.refinement_residual() <= 2f64.powi(-8), "order {order}");
    }
}
