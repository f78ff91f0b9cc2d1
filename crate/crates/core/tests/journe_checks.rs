use multinorm::journe::*;
use multinorm::Rat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rect(level: &[u32], index: &[u32]) -> Rect {
    Rect::new(level.to_vec(), index.to_vec())
}

fn model(s: usize, depth: u32) -> Model {
    Model::new(s, depth).unwrap()
}

#[test]
fn zero_enlargement_is_identity_and_enlargement_is_monotone() {
    let m = model(2, 4);
    let omega = OpenSetModel::new(m, &[rect(&[2, 1], &[1, 0])]).unwrap();
    assert_eq!(standard_enlarge(&omega, 0), omega);
    let chain = standard_enlargements(&omega, 3);
    for w in chain.windows(2) {
        assert!(w[0].is_subset_of(&w[1]));
    }
}

#[test]
fn fast_maximal_scan_matches_brute_force() {
    let m = model(2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for pieces in 1..=12 {
        let omega = random_open_set(m, pieces, 4, &mut rng);
        assert_eq!(maximal_level_set(&omega), maximal_level_set_brute(&omega), "pieces {pieces}");
    }
}

#[test]
fn embeddedness_examples() {
    let m = model(2, 5);
    let r = rect(&[3, 2], &[5, 1]);
    let omega = OpenSetModel::new(m, &[r.clone()]).unwrap();
    assert_eq!(embeddedness(&omega, &r, 0).unwrap().mu, 0);
    let parent = r.parent(0, 1).unwrap();
    let bigger = OpenSetModel::new(m, &[parent.clone()]).unwrap();
    let e = embeddedness(&bigger, &r, 0).unwrap();
    assert!(e.mu >= 1);
    // a direct count: the grandparent is half covered, which is not a majority
    assert_eq!(bigger.intersection_measure(&r.parent(0, 2).unwrap()), parent.measure());
    assert_eq!(e.mu, 1);
    assert!(!e.capped);
    assert!(embeddedness(&omega, &rect(&[1, 1], &[0, 0]), 0).is_err());
    let whole = OpenSetModel::new(m, &[Rect::root(2)]).unwrap();
    let e = embeddedness(&whole, &r, 1).unwrap();
    assert_eq!(e.mu, 2);
    assert!(e.capped);
}

#[test]
fn embedded_rectangle_lies_in_the_next_enlargement() {
    let m = model(2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let omega = random_open_set(m, 5, 3, &mut rng);
        let next = standard_enlarge(&omega, 1);
        for r in omega.dyadic_family().iter().step_by(7) {
            for f in 0..2 {
                let mu = embeddedness(&omega, r, f).unwrap().mu;
                assert!(next.contains_rect(&r.parent(f, mu).unwrap()));
            }
        }
    }
}

#[test]
fn complete_string_for_three_factors() {
    assert_eq!(complete_string(3), vec![0, 1, 2, 0]);
    for b in [vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2], vec![0, 2], vec![0, 1, 2]] {
        assert!(string_contains(&[0, 1, 2, 0], &b), "{b:?}");
    }
    assert!(!string_contains(&[0, 1, 2], &[0, 2]));
}

#[test]
fn empty_string_is_the_identity_state() {
    let m = model(2, 4);
    let omega = OpenSetModel::new(m, &[rect(&[1, 2], &[0, 1])]).unwrap();
    let family = omega.dyadic_family();
    let state = string_enlarge(&omega, &family, &[]).unwrap();
    assert!(state.rects.iter().all(|ev| ev.m == vec![vec![0, 0]] && ev.enlarged(0) == ev.rect));
    assert!(string_enlarge(&omega, &family, &[0, 2]).is_err());
    assert!(string_enlarge(&omega, &[rect(&[0, 0], &[0, 0])], &[0]).is_err());
}

#[test]
fn shadows_agree_two_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in 1..=3 {
        let m = model(s, 4);
        for pieces in [1, 3, 8, 14] {
            let omega = random_open_set(m, pieces, 4, &mut rng);
            let rects: Vec<Rect> = omega.dyadic_family().into_iter().rev().step_by(3).take(14).collect();
            assert_eq!(shadow_measure(4, &rects).unwrap(), shadow_measure_inclusion_exclusion(&rects).unwrap());
        }
    }
}

#[test]
fn single_rectangle_carbery_seeger_is_trivial() {
    let m = model(2, 4);
    let r = rect(&[2, 1], &[1, 1]);
    let omega = OpenSetModel::new(m, &[r.clone()]).unwrap();
    let state = string_enlarge(&omega, &[r.clone()], &[0, 1]).unwrap();
    let report = carbery_seeger_check(&state, &[0], &CarberySeegerOptions::default()).unwrap();
    assert_eq!(report.rows[0].m, vec![0]);
    assert_eq!(report.rows[0].lhs, r.measure());
    assert!(report.rows[0].lhs <= omega.measure());
    assert!(report.pass);
    assert!(carbery_seeger_check(&state, &[0, 1], &CarberySeegerOptions::default()).is_ok());
    let short = string_enlarge(&omega, &[r], &[0]).unwrap();
    assert!(carbery_seeger_check(&short, &[0, 1], &CarberySeegerOptions::default()).is_err());
}

#[test]
fn enlarging_omega_only_raises_the_right_side() {
    let m = model(2, 4);
    let r = rect(&[2, 2], &[1, 1]);
    let small = OpenSetModel::new(m, &[r.clone()]).unwrap();
    let large = OpenSetModel::new(m, &[r.clone(), rect(&[1, 1], &[1, 0])]).unwrap();
    let a = carbery_seeger_check(&string_enlarge(&small, &[r.clone()], &[0, 1]).unwrap(), &[0], &Default::default()).unwrap();
    let b = carbery_seeger_check(&string_enlarge(&large, &[r], &[0, 1]).unwrap(), &[0], &Default::default()).unwrap();
    // once m′ covers every enlargement the left side is |R| in both cases
    let (ra, rb) = (a.rows.last().unwrap(), b.rows.last().unwrap());
    assert_eq!(ra.lhs, rb.lhs);
    assert!(rb.ratio <= ra.ratio);
}

#[test]
fn bar_measure_is_bounded_by_the_enlargement_constant() {
    let m = model(2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let string = complete_string(2);
    let mut worst_growth: f64 = 0.0;
    let mut bars = Vec::new();
    for k in 0..50 {
        let omega = random_open_set(m, 1 + k % 6, 3, &mut rng);
        let chain = standard_enlargements(&omega, string.len() + 1);
        let base = multinorm::rational::to_f64(&omega.measure());
        for (j, o) in chain.iter().enumerate().skip(1) {
            worst_growth = worst_growth.max((multinorm::rational::to_f64(&o.measure()) / base).powf(1.0 / j as f64));
        }
        let state = string_enlarge(&omega, &omega.dyadic_family(), &string).unwrap();
        assert!(state.monotone());
        assert!(state.embedding_holds());
        let c = state.comparabilities().unwrap();
        assert!(c.bar_inside_enlarged);
        bars.push(c.bar / c.omega);
    }
    let bound = worst_growth.powi(string.len() as i32 + 1);
    assert!(bars.iter().all(|&b| b <= bound + 1e-12), "{bars:?} vs {bound}");
}

#[test]
fn instance_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(3, 3);
    let omega = OpenSetModel::new(m, &[rect(&[1, 1, 2], &[0, 1, 3]), rect(&[2, 1, 1], &[3, 0, 0])]).unwrap();
    let inst = Instance::new(&omega, None, &[0, 1, 2, 0]);
    assert_eq!(inst.string, vec![1, 2, 3, 1]);
    let path = dir.path().join("inst.json");
    inst.save(&path).unwrap();
    let back = Instance::load(&path).unwrap();
    assert_eq!(back, inst);
    let (o, fam, string) = back.resolve().unwrap();
    assert_eq!(o, omega);
    assert_eq!(fam, omega.dyadic_family());
    assert_eq!(string, vec![0, 1, 2, 0]);
}

#[test]
fn depth_cap_is_enforced() {
    assert!(matches!(Model::new(3, 8), Err(multinorm::Error::DepthCap(_))));
    let m = model(2, 3);
    assert!(OpenSetModel::new(m, &[rect(&[4, 0], &[0, 0])]).is_err());
    assert_eq!(OpenSetModel::new(m, &[Rect::root(2)]).unwrap().measure(), Rat::from_integer(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embeddedness_is_monotone_in_omega(seed in 0u64..1000, extra in 1usize..5) {
        let m = model(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = random_open_set(m, 3, 3, &mut rng);
        let more = random_open_set(m, extra, 3, &mut rng);
        let mut rects = omega.canonical();
        rects.extend(more.canonical());
        let bigger = OpenSetModel::new(m, &rects).unwrap();
        for r in omega.dyadic_family().iter().step_by(5) {
            for f in 0..2 {
                prop_assert!(embeddedness(&omega, r, f).unwrap().mu <= embeddedness(&bigger, r, f).unwrap().mu);
            }
        }
    }

    #[test]
    fn canonical_form_is_disjoint_and_exact(seed in 0u64..1000, pieces in 1usize..8) {
        let m = model(2, 4);
        let omega = random_open_set(m, pieces, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let canon = omega.canonical();
        let total = canon.iter().fold(Rat::from_integer(0), |a, r| a + r.measure());
        prop_assert_eq!(total, omega.measure());
        prop_assert_eq!(OpenSetModel::new(m, &canon).unwrap(), omega);
    }
}
