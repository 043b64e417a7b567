use num_bigint::BigInt;
use proptest::prelude::*;
use wavesat::cantor::{CantorParams, Layout};
use wavesat::dyadic::{cube_of_point, mu_of, DyadicCube, DyadicPoint};
use wavesat::Error;

fn pt(n: i64, r: u32) -> DyadicPoint {
    DyadicPoint::from_i64(&[n], r)
}

/// Oracle: floor(2^j n / 2^r) by repeated halving with floor semantics.
fn floor_oracle(n: i64, r: u32, j: u32) -> i64 {
    let mut v = n as i128;
    if j >= r {
        v <<= j - r;
    } else {
        for _ in 0..(r - j) {
            v = v.div_euclid(2);
        }
    }
    v as i64
}

#[test]
fn cube_of_point_examples() {
    assert_eq!(cube_of_point(&pt(5, 4), 2).unwrap(), DyadicCube::from_i64(2, &[1]));
    for j in 0..8 {
        assert_eq!(cube_of_point(&pt(0, 8), j).unwrap(), DyadicCube::from_i64(j, &[0]));
    }
    let x = pt(3, 3);
    assert_eq!(cube_of_point(&x, 3).unwrap().k[0], BigInt::from(floor_oracle(3, 3, 3)));
    assert_eq!(cube_of_point(&x, 1).unwrap().k[0], BigInt::from(floor_oracle(3, 3, 1)));
    assert_eq!(cube_of_point(&x, 1).unwrap(), DyadicCube::from_i64(1, &[0]));
}

#[test]
fn cube_of_point_rejects_coarse_resolution() {
    assert!(matches!(cube_of_point(&pt(1, 2), 3), Err(Error::Precision(_))));
}

#[test]
fn right_boundary_belongs_to_next_cube() {
    let c = DyadicCube::from_i64(2, &[1]);
    assert!(c.contains(&pt(1, 2)));
    assert!(!c.contains(&pt(2, 2)));
    assert!(DyadicCube::from_i64(2, &[2]).contains(&pt(2, 2)));
}

#[test]
fn negative_coordinates_floor() {
    assert_eq!(cube_of_point(&pt(-1, 3), 1).unwrap(), DyadicCube::from_i64(1, &[-1]));
    assert_eq!(cube_of_point(&pt(-5, 2), 0).unwrap(), DyadicCube::from_i64(0, &[-2]));
}

#[test]
fn mu_of_examples() {
    let params = CantorParams::homogeneous(1, 0, 2);
    assert_eq!(mu_of(&DyadicCube::from_i64(3, &[2]), &params).unwrap(), DyadicCube::from_i64(2, &[1]));
    assert_eq!(mu_of(&DyadicCube::from_i64(3, &[0]), &params).unwrap(), DyadicCube::from_i64(2, &[0]));
    assert_eq!(mu_of(&DyadicCube::from_i64(1, &[0]), &params).unwrap(), DyadicCube::from_i64(0, &[0]));
}

#[test]
fn mu_of_rejects_foreign_cubes() {
    let params = CantorParams::homogeneous(1, 0, 2);
    // wrong width
    assert!(matches!(mu_of(&DyadicCube::from_i64(2, &[0]), &params), Err(Error::ConstructionMismatch(_))));
    // right width, not a Theta_1 cube
    assert!(matches!(mu_of(&DyadicCube::from_i64(3, &[1]), &params), Err(Error::ConstructionMismatch(_))));
    assert!(matches!(mu_of(&DyadicCube::from_i64(3, &[4]), &params), Err(Error::ConstructionMismatch(_))));
}

#[test]
fn mu_of_injective_on_generations() {
    for (t, k, n) in [(1u32, 0u64, 2u32), (1, 1, 3), (2, 3, 4)] {
        let params = CantorParams::homogeneous(t, k, n);
        let layout = Layout::new(&params, 5).unwrap();
        for g in 0..=5u32 {
            if layout.card(g) > 70_000u32.into() {
                continue;
            }
            let cubes = layout.enumerate(g);
            let mus: std::collections::BTreeSet<_> = cubes.iter().map(|c| mu_of(c, &params).unwrap()).collect();
            assert_eq!(mus.len(), cubes.len());
        }
    }
}

#[test]
fn json_round_trip_with_huge_coordinates() {
    let big: BigInt = BigInt::from(1) << 200usize;
    let c = DyadicCube::new(210, vec![big.clone() + 7]);
    let text = serde_json::to_string(&c.to_json()).unwrap();
    assert!(text.starts_with("[210,"));
    let back = DyadicCube::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, c);
    let p = DyadicPoint::new(vec![big, BigInt::from(-3)], 250);
    let back = DyadicPoint::from_json(&serde_json::from_str(&serde_json::to_string(&p.to_json()).unwrap()).unwrap()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn width_is_exact_power_of_two() {
    assert_eq!(DyadicCube::from_i64(0, &[3]).width(), 1.0);
    assert_eq!(DyadicCube::from_i64(10, &[3]).width(), 1.0 / 1024.0);
}

proptest! {
    #[test]
    fn nesting(n in -100_000i64..100_000, r in 0u32..24, j in 0u32..24) {
        let x = pt(n, r);
        prop_assume!(j < r);
        let outer = cube_of_point(&x, j).unwrap();
        let inner = cube_of_point(&x, j + 1).unwrap();
        prop_assert!(outer.contains_cube(&inner));
        prop_assert!(outer.contains(&x) && inner.contains(&x));
        prop_assert_eq!(outer.k[0].clone(), BigInt::from(floor_oracle(n, r, j)));
    }

    #[test]
    fn children_partition_parent(k in -50i64..50, j in 0u32..10, a in 0i64..64, b in 0i64..64) {
        let c = DyadicCube::from_i64(j, &[k, -k]);
        let kids = c.children();
        prop_assert_eq!(kids.len(), 4);
        let x = DyadicPoint::from_i64(&[(k << 6) + a, ((-k) << 6) + b], j + 6);
        prop_assert!(c.contains(&x));
        prop_assert_eq!(kids.iter().filter(|q| q.contains(&x)).count(), 1);
        for q in &kids {
            prop_assert_eq!(q.parent().unwrap(), c.clone());
        }
    }

    #[test]
    fn reduced_is_same_point(n in -10_000i64..10_000, r in 0u32..20) {
        let x = pt(n, r);
        let red = x.reduced();
        prop_assert_eq!(red.at_resolution(r).unwrap(), x.clone());
        prop_assert_eq!(red.to_f64(), x.to_f64());
    }
}
