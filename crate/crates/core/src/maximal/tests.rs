use proptest::prelude::*;

use super::*;

fn box_density() -> GridMeasure {
    let g = GridField::from_fn(1, -4.0, 4.0, 1.0 / 64.0, |x| {
        if x[0].abs() <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    GridMeasure::from_density(g).unwrap()
}

/// Dense scan over radii of the closed-ball average for a 1D measure.
fn scan_1d(nu: &GridMeasure, x: f64, r_max: f64, steps: usize) -> f64 {
    let mass = |a: f64, b: f64| {
        let atoms: f64 = nu
            .atoms()
            .iter()
            .filter(|at| at.location[0] >= a && at.location[0] <= b)
            .map(|at| at.mass)
            .sum();
        let dens = nu.density().map_or(0.0, |d| {
            let mut acc = 0.0;
            for (k, v) in d.values().iter().enumerate() {
                let e0 = d.lo() + k as f64 * d.spacing();
                let overlap = (b.min(e0 + d.spacing()) - a.max(e0)).max(0.0);
                acc += v.abs() * overlap;
            }
            acc
        });
        atoms + dens
    };
    (1..=steps)
        .map(|k| {
            let s = r_max * k as f64 / steps as f64;
            mass(x - s, x + s) / (2.0 * s)
        })
        .fold(0.0, f64::max)
}

#[test]
fn box_density_examples() {
    let nu = box_density();
    assert_eq!(maximal_at(&nu, &[0.0], None).unwrap(), 1.0);
    let at2 = maximal_at(&nu, &[2.0], None).unwrap();
    assert!((at2 - 1.0 / 3.0).abs() < 1e-12, "{at2}");
    let scanned = scan_1d(&nu, 2.0, 6.0, 6000);
    assert!((scanned - at2).abs() < 1e-3);
    assert!(scanned <= at2 + 1e-12);
    assert_eq!(maximal_at(&nu, &[2.0], Some(0.5)).unwrap(), 0.0);
}

#[test]
fn atom_tail_formula() {
    let nu = GridMeasure::atoms_1d(&[(0.0, 1.0)]).unwrap();
    for &x in &[0.1, -0.5, 3.0] {
        let m = maximal_at(&nu, &[x], None).unwrap();
        assert!((m - 1.0 / (2.0 * f64::abs(x))).abs() < 1e-12);
    }
    assert_eq!(maximal_at(&nu, &[0.0], None).unwrap(), f64::INFINITY);
    assert_eq!(maximal_at(&nu, &[1.0], Some(0.5)).unwrap(), 0.0);
}

#[test]
fn empty_measure_is_zero() {
    let nu = GridMeasure::zero(1).unwrap();
    assert_eq!(maximal_at(&nu, &[0.3], None).unwrap(), 0.0);
    let nu2 = GridMeasure::zero(2).unwrap();
    assert_eq!(maximal_at(&nu2, &[0.3, 0.1], None).unwrap(), 0.0);
}

#[test]
fn query_validation() {
    let nu = box_density();
    assert!(maximal_at(&nu, &[0.0, 1.0], None).is_err());
    assert!(maximal_at(&nu, &[0.0], Some(0.0)).is_err());
    assert!(maximal_at(&nu, &[f64::NAN], None).is_err());
}

#[test]
fn constant_density_2d_is_constant() {
    let g = GridField::from_fn(2, -1.0, 1.0, 0.125, |_| 3.0).unwrap();
    let nu = GridMeasure::from_density(g.clone()).unwrap();
    let m = MaximalOperator::new(&nu).on_grid(&g, 0.3).unwrap();
    for v in m.values() {
        assert!((v - 3.0).abs() < 1e-12);
    }
}

#[test]
fn digital_ball_matches_brute_force() {
    let g = GridField::from_fn(2, 0.0, 1.0, 0.0625, |x| {
        ((7.0 * x[0]).sin() * (3.0 * x[1]).cos()).max(0.0)
    })
    .unwrap();
    let nu = GridMeasure::from_density(g.clone()).unwrap();
    let op = MaximalOperator::new(&nu);
    let n = g.cells() as i64;
    for &(i0, j0) in &[(3i64, 4i64), (0, 15), (-5, 20)] {
        let x = [
            g.lo() + (i0 as f64 + 0.5) * g.spacing(),
            g.lo() + (j0 as f64 + 0.5) * g.spacing(),
        ];
        let got = op.eval(&x, f64::INFINITY).unwrap();
        let mut best = 0.0f64;
        for k in 0..=(2 * 40 * 40) {
            let mut mass = 0.0;
            let mut count = 0.0;
            for dj in -40i64..=40 {
                for di in -40i64..=40 {
                    if di * di + dj * dj <= k {
                        count += 1.0;
                        let (i, j) = (i0 + di, j0 + dj);
                        if (0..n).contains(&i) && (0..n).contains(&j) {
                            mass += g.values()[(j * n + i) as usize].abs();
                        }
                    }
                }
            }
            best = best.max(mass / count);
        }
        assert!((got - best).abs() < 1e-12, "{got} vs {best}");
    }
}

fn random_1d_measure() -> impl Strategy<Value = GridMeasure> {
    (
        prop::collection::vec((-3.0f64..3.0, 0.01f64..2.0), 0..5),
        prop::collection::vec(0.0f64..2.0, 32),
        any::<bool>(),
    )
        .prop_map(|(atoms, dens, with_density)| {
            let density = with_density
                .then(|| GridField::new(1, -2.0, 2.0, 0.125, dens).unwrap());
            let atoms = atoms
                .into_iter()
                .map(|(x, m)| Atom {
                    location: vec![x],
                    mass: m,
                })
                .collect();
            GridMeasure::new(1, atoms, density).unwrap()
        })
}

fn eval_points() -> Vec<f64> {
    (0..41).map(|k| -4.0 + 0.2 * k as f64 + 0.0123).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restriction_is_monotone(nu in random_1d_measure(), r1 in 0.05f64..2.0, extra in 0.0f64..3.0) {
        let op = MaximalOperator::new(&nu);
        for x in eval_points() {
            let a = op.eval(&[x], r1).unwrap();
            let b = op.eval(&[x], r1 + extra).unwrap();
            let c = op.eval(&[x], f64::INFINITY).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-12) && b <= c * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sublinear(a in random_1d_measure(), b in random_1d_measure()) {
        let sum = a.sum(&b).unwrap();
        let (oa, ob, os) = (MaximalOperator::new(&a), MaximalOperator::new(&b), MaximalOperator::new(&sum));
        for x in eval_points() {
            let lhs = os.eval(&[x], f64::INFINITY).unwrap();
            let rhs = oa.eval(&[x], f64::INFINITY).unwrap() + ob.eval(&[x], f64::INFINITY).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn scaling_is_exact(nu in random_1d_measure(), c in 0.01f64..100.0) {
        let scaled = nu.scaled(c).unwrap();
        let (o, s) = (MaximalOperator::new(&nu), MaximalOperator::new(&scaled));
        for x in eval_points() {
            let m = o.eval(&[x], f64::INFINITY).unwrap();
            let ms = s.eval(&[x], f64::INFINITY).unwrap();
            prop_assert!((ms - c * m).abs() <= 1e-12 * c * m.max(1e-300));
        }
    }

    #[test]
    fn exact_sup_dominates_scan(nu in random_1d_measure(), x in -3.5f64..3.5) {
        let m = maximal_at(&nu, &[x], Some(4.0)).unwrap();
        let scan = scan_1d(&nu, x, 4.0, 400);
        prop_assert!(scan <= m * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn total_mass_matches_parts(nu in random_1d_measure()) {
        let parts: f64 = nu.atoms().iter().map(|a| a.mass).sum::<f64>()
            + nu.density().map_or(0.0, |d| d.values().iter().map(|v| v.abs()).sum::<f64>() * d.spacing());
        prop_assert!((nu.total_mass() - parts).abs() <= 1e-9 * parts.max(1.0));
    }

    #[test]
    fn maximal_bounded_by_sup_density(vals in prop::collection::vec(0.0f64..5.0, 64)) {
        // L-infinity boundedness of M for densities.
        let g = GridField::new(2, 0.0, 1.0, 0.125, vals).unwrap();
        let sup = g.values().iter().cloned().fold(0.0, f64::max);
        let nu = GridMeasure::from_density(g.clone()).unwrap();
        let m = MaximalOperator::new(&nu).on_grid(&g, f64::INFINITY).unwrap();
        for v in m.values() {
            prop_assert!(*v <= sup * (1.0 + 1e-12));
        }
    }
}
