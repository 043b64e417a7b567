use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use wavesat::cantor::*;
use wavesat::dyadic::{DyadicCube, DyadicPoint};
use wavesat::wavelet::{build_system, Family};
use wavesat::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Oracle: the self-similar construction run literally on intervals,
/// `K_{n+1} = union over digits w of s_w(K_n)` with `s_w(x) = (x + w) / 2^N`.
fn homogeneous_oracle(t: u32, k: u64, n_big: u32, depth: u32) -> Vec<BTreeSet<(u32, BigInt)>> {
    let k0 = BigInt::from(k);
    let mut gens = vec![BTreeSet::from([(t, k0.clone())])];
    let omega: Vec<BigInt> = (0..(1u64 << (n_big - t)))
        .map(|q| (BigInt::from(k) << (n_big - t) as usize) + q)
        .collect();
    for _ in 0..depth {
        let prev = gens.last().unwrap();
        let mut next = BTreeSet::new();
        for (j, a) in prev {
            // s_w([a/2^j, (a+1)/2^j)) = [(a + w 2^j) / 2^{j+N}, ...)
            for w in &omega {
                next.insert((j + n_big, a + (w << *j as usize)));
            }
        }
        gens.push(next);
    }
    gens
}

fn as_set(cubes: &[DyadicCube]) -> BTreeSet<(u32, BigInt)> {
    cubes.iter().map(|c| (c.j, c.k[0].clone())).collect()
}

#[test]
fn homogeneous_examples() {
    let sys = build_homogeneous(1, 0, 2, 1).unwrap();
    assert_eq!(
        sys.generation(1).unwrap(),
        vec![DyadicCube::from_i64(3, &[0]), DyadicCube::from_i64(3, &[2])]
    );
    assert_eq!(sys.theoretical_dims(), (0.5, 0.5));
    let sys = build_homogeneous(1, 0, 2, 3).unwrap();
    assert_eq!(sys.card(3), BigUint::from(8u32));
    let sys = build_homogeneous(2, 3, 5, 0).unwrap();
    assert_eq!(sys.generation(0).unwrap(), vec![DyadicCube::from_i64(2, &[3])]);
    assert!(matches!(build_homogeneous(3, 0, 2, 1), Err(Error::Parameter { .. })));
}

#[test]
fn homogeneous_matches_similarity_oracle() {
    for (t, k, n) in [(1u32, 0u64, 2u32), (1, 1, 3), (2, 3, 4), (3, 5, 5)] {
        let sys = build_homogeneous(t, k, n, 4).unwrap();
        let oracle = homogeneous_oracle(t, k, n, 4);
        for g in 0..=4 {
            assert_eq!(as_set(&sys.generation(g).unwrap()), oracle[g as usize], "t={t} k={k} N={n} gen {g}");
        }
    }
}

#[test]
fn homogeneous_capacity_error_reports_budget() {
    match build_homogeneous(1, 0, 20, 3) {
        Err(Error::Capacity { required, budget, .. }) => {
            assert_eq!(budget, DEFAULT_BUDGET);
            assert!(required.parse::<BigUint>().unwrap() > BigUint::from(budget));
        }
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn nesting_and_widths() {
    let sys = build_homogeneous(2, 1, 4, 3).unwrap();
    for g in 1..=3u32 {
        let prev = sys.generation(g - 1).unwrap();
        for c in sys.generation(g).unwrap() {
            assert_eq!(c.j, 2 + 4 * g);
            assert_eq!(prev.iter().filter(|p| p.contains_cube(&c)).count(), 1);
        }
    }
}

#[test]
fn two_scale_counts() {
    let sys = build_two_scale(1, 0, 2, q(2, 1), q(2, 1), 3).unwrap();
    assert_eq!(sys.depth, 8);
    let m = |j: u32| sys.card(j);
    assert_eq!(m(1), BigUint::from(1u32));
    assert_eq!(m(2), BigUint::from(2u32));
    assert_eq!(m(4), BigUint::from(2u32));
    assert_eq!(m(8), BigUint::from(32u32));
    // closed form M_{N_{2k}} = 2^{(N-t)(u-1)((uv)^k - 1)/(uv - 1)} for integer u, v
    for (u, v) in [(2i64, 2i64), (2, 3), (3, 2)] {
        let sys = build_two_scale(1, 0, 3, q(u, 1), q(v, 1), 4).unwrap();
        let seq = sys.two_scale_boundaries();
        for kk in 0..=2u32 {
            let idx = 2 * kk as usize;
            if idx >= seq.len() {
                break;
            }
            let uv = u * v;
            let e = 2 * (u - 1) * (uv.pow(kk) - 1) / (uv - 1);
            assert_eq!(sys.card(seq[idx] as u32), BigUint::one() << e as usize, "u={u} v={v} k={kk}");
        }
    }
    let (lo, hi) = sys_dims(1, 0, 2, 2, 2);
    assert!((hi - 1.0 / 3.0).abs() < 1e-12 && (lo - 1.0 / 6.0).abs() < 1e-12);
}

fn sys_dims(t: u32, k: u64, n: u32, u: i64, v: i64) -> (f64, f64) {
    build_two_scale(t, k, n, q(u, 1), q(v, 1), 2).unwrap().theoretical_dims()
}

#[test]
fn two_scale_rejects_unit_ratios() {
    assert!(matches!(build_two_scale(1, 0, 2, q(1, 1), q(1, 1), 2), Err(Error::Parameter { .. })));
}

#[test]
fn gauge_counts() {
    let sys = build_gauge(1, 0, 3).unwrap();
    let g1 = sys.generation(1).unwrap();
    assert_eq!(g1.len(), 2);
    assert!(g1.iter().all(|c| c.j == 3));
    let g2 = sys.generation(2).unwrap();
    assert_eq!(g2.len(), 8);
    assert!(g2.iter().all(|c| c.j == 6));
    assert_eq!(sys.generation(0).unwrap(), vec![DyadicCube::from_i64(1, &[0])]);
    for c in &g2 {
        assert!(((&c.k[0] - BigInt::from(0)) % 2u32) == BigInt::from(0));
    }
}

#[test]
fn intersecting_cubes_examples() {
    let sys = build_homogeneous(1, 0, 2, 5).unwrap();
    let zero = TargetSet::Points(vec![DyadicPoint::zero(1, 0)]);
    for n in 0..=5 {
        let g = intersecting_cubes(&sys, &zero, n).unwrap();
        assert_eq!(g, vec![sys.generation(n).unwrap()[0].clone()]);
        assert_eq!(intersecting_cubes(&sys, &TargetSet::Whole, n).unwrap(), sys.generation(n).unwrap());
    }
    // the left corner of the rightmost deepest branch lies in every generation
    let right = sys.generation(5).unwrap().last().unwrap().corner();
    let two = TargetSet::Points(vec![DyadicPoint::zero(1, 0), right]);
    for n in 1..=5 {
        assert_eq!(intersecting_cubes(&sys, &two, n).unwrap().len(), 2);
    }
    let cubes = TargetSet::Cubes(vec![DyadicCube::from_i64(2, &[0])]);
    assert_eq!(intersecting_cubes(&sys, &cubes, 2).unwrap().len(), 2);
}

#[test]
fn left_segments_are_nested_prefixes() {
    let sys = CantorSystem::new(CantorParams::homogeneous(1, 0, 4), 5, DEFAULT_BUDGET).unwrap();
    let a = TargetSet::LexPrefix { t_prime: 2.5 };
    let b = TargetSet::LexPrefix { t_prime: 3.0 };
    for n in 0..=5 {
        let ga = intersecting_cubes(&sys, &a, n).unwrap();
        let gb = intersecting_cubes(&sys, &b, n).unwrap();
        let all = sys.generation(n).unwrap();
        assert_eq!(&all[..ga.len()], &ga[..]);
        assert!(gb.len() <= ga.len());
        let want = (1.5 * n as f64).exp2().ceil() as usize;
        assert_eq!(ga.len(), want.min(all.len()));
        if n > 0 {
            let parent = intersecting_cubes(&sys, &a, n - 1).unwrap();
            assert!(ga.iter().all(|c| parent.iter().any(|p| p.contains_cube(c))));
        }
        for c in &all {
            let (_, l) = sys.layout().address(c).unwrap();
            assert_eq!(a.contains_address(sys.layout(), n, &l, None), ga.contains(c));
        }
    }
}

#[test]
fn box_count_matches_enumeration() {
    let systems = vec![
        CantorSystem::new(CantorParams::homogeneous(1, 0, 3), 4, DEFAULT_BUDGET).unwrap(),
        CantorSystem::new(CantorParams::homogeneous(2, 3, 5), 3, DEFAULT_BUDGET).unwrap(),
        build_two_scale(1, 0, 3, q(2, 1), q(2, 1), 3).unwrap(),
        build_gauge(1, 0, 4).unwrap(),
        CantorSystem::new(
            CantorParams::for_wavelet(&build_system(Family::Daubechies(2), 1, 8).unwrap(), CantorKind::Homogeneous { n: 7 }, None).unwrap(),
            3,
            DEFAULT_BUDGET,
        )
        .unwrap(),
    ];
    for sys in systems {
        let deepest = sys.materialized_depth().unwrap().min(4);
        let cubes = sys.generation(deepest).unwrap();
        let mut layout = sys.layout().clone();
        for j in 0..=sys.level(deepest) {
            let brute: BTreeSet<DyadicCube> = cubes.iter().map(|c| c.ancestor(j)).collect();
            let want = if j < sys.t() { 1 } else { brute.len() };
            assert_eq!(layout.box_count(j as u64).unwrap(), BigUint::from(want), "{:?} j={j}", sys.params.kind);
        }
    }
}

/// Exhaustive companion positivity: psi_{mu(lambda)}(x) >= m on lambda, zero on other cubes.
fn check_companion(fam: Family, n_big: u32, depth: u32, t: Option<u32>) {
    let w = build_system(fam, 1, 10).unwrap();
    let cert = w.certificate().unwrap();
    let params = CantorParams::for_wavelet(&w, CantorKind::Homogeneous { n: n_big }, t).unwrap();
    let sys = CantorSystem::new(params, depth, DEFAULT_BUDGET).unwrap();
    for n in 0..=depth {
        let cubes = sys.generation(n).unwrap();
        let grid = sys.endpoint_grid(n, depth).unwrap();
        let mut extra = sys.sample_points(depth, 20, 5).unwrap();
        extra.extend(grid);
        for lam in &cubes {
            let mu = sys.mu(lam).unwrap();
            for x in &extra {
                let v = w.eval(1, &mu, x).unwrap();
                if lam.contains(x) {
                    assert!(v >= cert.m - 1e-9, "{fam:?}: {v} < m on {lam}");
                } else {
                    assert_eq!(v, 0.0, "{fam:?}: nonzero off {lam}");
                }
            }
        }
    }
}

#[test]
fn companion_positivity_haar() {
    check_companion(Family::Haar, 2, 3, None);
    check_companion(Family::Haar, 4, 2, Some(2));
}

#[test]
fn companion_positivity_daubechies() {
    check_companion(Family::Daubechies(2), 6, 2, None);
    check_companion(Family::Daubechies(3), 8, 2, None);
    check_companion(Family::Daubechies(2), 7, 2, Some(3));
}

#[test]
fn gauge_mass_bound_per_generation() {
    let sys = build_gauge(1, 0, 40).unwrap();
    let checks = sys.gauge_mass_bound();
    assert_eq!(checks.len(), 41);
    for c in &checks {
        // mass 2^{-(S_n - n t)} with S_n = n(n+1)/2 + n t
        let n = c.generation as f64;
        assert_eq!(c.log2_mass, -(n * (n + 1.0) / 2.0));
        assert!(c.holds, "generation {}", c.generation);
    }
}

#[test]
fn counterexample_spec_example_is_exact() {
    let (s, p, beta) = (q(1, 4), q(2, 1), q(1, 10));
    let eps = q(1, 10);
    let r = verify_counterexample_params(&s, &p, &beta, &eps, 100, 13, None).unwrap();
    assert_eq!(r.alpha, q(3, 10));
    assert_eq!(r.u, q(11, 10));
    assert_eq!(r.v, q(37, 30));
    assert_eq!(r.dim_p, q(3219, 10700));
    assert!(r.dim_p > q(3, 10) && r.dim_p <= q(3, 10) * q(101, 100));
    assert!(r.all_hold(), "{:?}", r.checks.iter().filter(|c| !c.holds).map(|c| c.label).collect::<Vec<_>>());
}

/// Oracle for the scan: the same inequalities written out independently.
fn oracle_holds(s: &BigRational, p: &BigRational, beta: &BigRational, r: &CounterexampleParams) -> bool {
    let one = BigRational::one();
    let alpha = &one - s * p - beta * p;
    let frac = q((r.n - r.t) as i64, r.n as i64);
    let uv1 = &r.u * &r.v - &one;
    let big = &frac * (&r.u - &one) * &r.v / &uv1;
    let small = &frac * (&r.u - &one) / &uv1;
    let base = &one - s * p;
    let goal = &base - &alpha;
    let window = big > alpha && big <= &alpha * (&one + &r.eps * &r.eps);
    if beta > &BigRational::from_integer(0.into()) {
        window
            && &base - &big / (&one + &r.eta) >= goal
            && (&base - &small) / ((&one + &r.eta) * &r.u) >= goal
    } else {
        let gap = &one - (&r.v - &one) / ((&one - &r.eta) * &uv1);
        window
            && &base - &small < BigRational::from_integer(0.into())
            && &base - &frac * gap >= goal
            && &r.v / (&one - &r.eta) * (&base - &small) >= goal
    }
}

#[test]
fn counterexample_scan_positive_and_negative_beta() {
    let (s, p) = (q(1, 4), q(2, 1));
    let pos = find_counterexample_params(&s, &p, &q(1, 10), 1).unwrap();
    assert!(pos.all_hold() && oracle_holds(&s, &p, &q(1, 10), &pos));
    assert_eq!((pos.eps.clone(), pos.n, pos.t), (q(1, 8), 13, 2));
    let neg = find_counterexample_params(&s, &p, &q(-1, 10), 1).unwrap();
    assert!(neg.all_hold() && oracle_holds(&s, &p, &q(-1, 10), &neg));
    assert_eq!((neg.eps.clone(), neg.n, neg.t), (q(1, 8), 66, 1));
}

#[test]
fn counterexample_domain_errors() {
    let p = q(2, 1);
    assert!(matches!(find_counterexample_params(&q(0, 1), &p, &q(1, 10), 1), Err(Error::Parameter { .. })));
    assert!(matches!(find_counterexample_params(&q(1, 4), &p, &q(1, 4), 1), Err(Error::Parameter { .. })));
    assert!(matches!(find_counterexample_params(&q(1, 4), &p, &q(0, 1), 1), Err(Error::Parameter { .. })));
    assert!(matches!(find_counterexample_params(&q(1, 4), &p, &q(-1, 4), 1), Err(Error::Parameter { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn points_in_k_follow_branches(t in 1u32..3, k in 0u64..3, extra in 1u32..3, seed in 0u64..1000) {
        let n_big = t + extra;
        let k = k % (1 << t);
        let sys = CantorSystem::new(CantorParams::homogeneous(t, k, n_big), 4, DEFAULT_BUDGET).unwrap();
        for x in sys.sample_points(4, 5, seed).unwrap() {
            for n in 0..=4 {
                let cube = sys.cube_containing(&x, n).unwrap();
                prop_assert!(cube.contains(&x));
                prop_assert!(sys.generation(n).unwrap().contains(&cube));
            }
        }
    }

    #[test]
    fn address_round_trip(t in 1u32..4, extra in 1u32..4, depth in 0u32..4, seed in 0u64..500) {
        let n_big = t + extra;
        let sys = CantorSystem::new(CantorParams::homogeneous(t, 1 % (1 << t), n_big), depth, DEFAULT_BUDGET).unwrap();
        for x in sys.sample_points(depth, 3, seed).unwrap() {
            let lam = sys.cube_containing(&x, depth).unwrap();
            let (n, l) = sys.layout().address(&lam).unwrap();
            prop_assert_eq!(n, depth);
            prop_assert_eq!(sys.layout().cube_from_address(n, &l), lam.clone());
            let mu = sys.mu(&lam).unwrap();
            prop_assert_eq!(mu.j, n_big * depth);
        }
    }
}
