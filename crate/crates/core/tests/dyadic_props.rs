use multinorm::dyadic::{DyadicCube, DyadicGrid};
use multinorm::matrix::{Exponents, StandardMatrix};
use multinorm::rational::{rat, to_f64};
use multinorm::scales::ScaleLattice;
use multinorm::Rat;
use proptest::prelude::*;

fn grids() -> Vec<DyadicGrid> {
    let e = StandardMatrix::figure1();
    vec![
        DyadicGrid::new(e.clone(), Exponents::isotropic(2)),
        DyadicGrid::new(e.clone(), Exponents::new(vec![rat(1, 2), rat(3, 2)], vec![vec![0], vec![1]]).unwrap()),
        DyadicGrid::new(e, Exponents::new(vec![Rat::from_integer(1), rat(2, 3), rat(5, 4)], vec![vec![0, 1], vec![2]]).unwrap()),
    ]
}

fn tree(g: &DyadicGrid, i: usize, depth: i64) -> Vec<DyadicCube> {
    (0..=depth).flat_map(|l| g.unit_cubes(i, l)).collect()
}

#[test]
fn cubes_tile_the_unit_cube() {
    for g in grids() {
        for i in 0..g.n() {
            for l in 0..=6 {
                let cubes = g.unit_cubes(i, l);
                let total: Rat = cubes.iter().map(|c| c.measure()).sum();
                assert_eq!(total, Rat::from_integer(1));
                for a in 0..cubes.len().min(64) {
                    for b in 0..cubes.len() {
                        if a != b {
                            assert!(!cubes[a].intersects(&cubes[b]));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn nested_or_disjoint() {
    for g in grids() {
        for i in 0..g.n() {
            let t = tree(&g, i, if g.exponents.block(i).len() > 1 { 4 } else { 6 });
            for a in &t {
                for b in &t {
                    if a.intersects(b) {
                        if a.scale == b.scale {
                            assert!(a.same_set(b));
                        } else if a.scale > b.scale {
                            assert!(a.is_subset_of(b));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn ancestors_contain_descendants() {
    for g in grids() {
        for i in 0..g.n() {
            for q in tree(&g, i, 6) {
                for m in 0..=q.scale + 1 {
                    let a = g.ancestor(&q, m);
                    assert!(q.is_subset_of(&a));
                    assert_eq!(a.scale, (q.scale - m).max(0));
                }
            }
        }
    }
}

#[test]
fn rescaling_monotone_and_comparable() {
    for g in grids() {
        let delta = g.comparison_delta();
        for i in 0..g.n() {
            let qi = to_f64(&g.exponents.q(i));
            let ca = g.measure_constant(i);
            let t = tree(&g, i, 5);
            for q in &t {
                for m in 0..=4i64 {
                    let anc = g.ancestor(q, m);
                    let big = g.rescale_enlarge(q, m as f64 + delta).unwrap();
                    for (k, _) in q.coords.iter().enumerate() {
                        assert!(big.lo[k] <= to_f64(&anc.lo(k)) && to_f64(&anc.hi(k)) <= big.hi[k]);
                    }
                    if m <= q.scale {
                        let lhs = to_f64(&anc.measure());
                        let rhs = ca * (m as f64 * qi).exp2() * to_f64(&q.measure());
                        assert!(lhs >= rhs * (1.0 - 1e-12), "{lhs} {rhs}");
                    }
                }
                for p in &t {
                    if q.is_subset_of(p) {
                        for m in 0..=4 {
                            let a = g.rescale_enlarge(q, m as f64).unwrap();
                            let b = g.rescale_enlarge(p, m as f64).unwrap();
                            assert!(b.contains_region(&a));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn induced_sequences_are_admissible() {
    for e in [
        StandardMatrix::figure1(),
        StandardMatrix::from_integers(&[&[1, 2, 3], &[2, 1, 2], &[3, 2, 1]]).unwrap(),
    ] {
        let n = e.n();
        let x = Exponents::new((0..n).map(|h| rat(h as i128 + 1, 2)).collect(), (0..n).map(|i| vec![i]).collect()).unwrap();
        let g = DyadicGrid::new(e.clone(), x.clone());
        let a = g.sequence.slack();
        let amax = x.max_lambda();
        for k in 0..n {
            for i in 0..n {
                for lk in 0..40 {
                    let nu = g.induced_mu(k, i, lk, i);
                    let target = Rat::from_integer(lk as i128) * x.lambda()[i] / e.e(k, i);
                    let dev = Rat::from_integer(nu as i128) - target;
                    assert!(multinorm::rational::abs(&dev) <= a + amax);
                }
            }
        }
    }
}

#[test]
fn s_view_blocks_equal_factor_products() {
    let g = DyadicGrid::new(StandardMatrix::figure1(), Exponents::isotropic(2));
    let lat = ScaleLattice::from_matrix(&g.matrix);
    for sc in lat.enumerate(7) {
        let Some(s) = sc.partition.clone() else { continue };
        let r = g.rectangle_at(&[0.37, 0.61], &sc.l);
        let view = g.s_view(&r, &sc, &s).unwrap();
        for bc in &view {
            let mut k = 0;
            for q in &bc.cubes {
                for (c, _) in q.coords.iter().enumerate() {
                    assert_eq!(bc.nu[k], q.mu[c]);
                    k += 1;
                }
            }
        }
        // principal partitions leave the cubes untouched
        if s.is_principal() {
            assert!(view.iter().all(|b| b.cubes.len() == 1));
        }
    }
}

#[test]
fn s_view_cubes_nest() {
    let g = DyadicGrid::new(StandardMatrix::figure1(), Exponents::isotropic(2));
    let lat = ScaleLattice::from_matrix(&g.matrix);
    let scales: Vec<_> = lat.enumerate(6).into_iter().filter(|s| s.partition.is_some()).collect();
    let pts = [[0.11, 0.93], [0.5, 0.5], [0.77, 0.2]];
    let mut rects = Vec::new();
    for sc in &scales {
        for p in &pts {
            rects.push(g.rectangle_at(p, &sc.l));
        }
    }
    for a in &rects {
        for b in &rects {
            // within one factor, cubes are nested or disjoint
            for i in 0..2 {
                let (qa, qb) = (&a.cubes[i], &b.cubes[i]);
                if qa.intersects(qb) {
                    assert!(qa.is_subset_of(qb) || qb.is_subset_of(qa));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn rectangles_nest_along_scales(x in proptest::collection::vec(0.0f64..1.0, 3), l in proptest::collection::vec(0i64..8, 2), d in proptest::collection::vec(0i64..8, 2)) {
        for g in grids() {
            let lp: Vec<i64> = l.iter().zip(&d).map(|(a, b)| (a - b).max(0)).collect();
            let fine = g.rectangle_at(&x, &l);
            let coarse = g.rectangle_at(&x, &lp);
            prop_assert!(fine.is_subset_of(&coarse));
            prop_assert!(fine.contains_point(&x));
        }
    }
}
