use std::sync::OnceLock;

use multinorm::dyadic::{DyadicGrid, DyadicRectangle};
use multinorm::grid::{Grid, SampledFunction};
use multinorm::hardy::*;
use multinorm::matrix::{StandardMatrix, Structure};
use multinorm::partitions::MarkedPartition;
use num_complex::Complex64;

fn structure() -> Structure {
    Structure::isotropic(StandardMatrix::from_integers(&[&[1, 2], &[2, 1]]).unwrap())
}

fn grid() -> Grid {
    Grid::new(vec![256, 256], vec![4.0, 4.0]).unwrap()
}

fn decomposer() -> &'static Decomposer {
    static D: OnceLock<Decomposer> = OnceLock::new();
    D.get_or_init(|| Decomposer::new(&structure(), &grid(), 2.0, 1).unwrap())
}

fn bump(g: &Grid, centre: [f64; 2], radius: f64, freq: f64) -> SampledFunction {
    SampledFunction::from_real_fn(g, |x| {
        let r2 = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)) / (radius * radius);
        if r2 < 1.0 {
            (-1.0 / (1.0 - r2)).exp() * (std::f64::consts::TAU * freq * x[0]).cos()
        } else {
            0.0
        }
    })
}

fn rect(structure: &Structure, l: [i64; 2], corners: [i64; 2]) -> DyadicRectangle {
    let dy = DyadicGrid::new(structure.matrix.clone(), structure.exponents.clone());
    DyadicRectangle { l: l.to_vec(), cubes: (0..2).map(|i| dy.cube(i, l[i], vec![corners[i]])).collect() }
}

fn box_fn(g: &Grid, f: impl Fn(&[f64]) -> f64) -> SampledFunction {
    SampledFunction::from_real_fn(g, f)
}

#[test]
fn h1_of_zero_is_zero() {
    let d = decomposer();
    assert_eq!(h1_norm(&d.analyzer, &SampledFunction::zeros(&grid()), 1).unwrap(), 0.0);
}

#[test]
fn unit_cube_indicator_is_an_atom() {
    let s = structure();
    let g = grid();
    let a = box_fn(&g, |x| if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) { 1.0 } else { 0.0 });
    let atom = Atom { partition: None, tau: 2.0, payload: a, geometry: Geometry::Unit { corner: vec![0, 0] } };
    let report = validate_atom(&s, &atom, 1e-8).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");

    let off = Atom { tau: 1.0, geometry: Geometry::Unit { corner: vec![-2, -2] }, ..atom.clone() };
    let report = validate_atom(&s, &off, 1e-8).unwrap();
    assert!(report.failures().iter().any(|c| c.clause == "support"));
}

/// Haar in x1 on the rectangle of 𝔻_{{1.,2}} at L = (1,0), L²-normalized to |R|^{-1/2}.
fn haar_atom(constant: f64) -> Atom {
    let s = structure();
    let g = grid();
    let r = rect(&s, [1, 0], [1, 0]);
    let m = multinorm::rational::to_f64(&r.measure());
    let a = box_fn(&g, |x| {
        if (0.5..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) {
            let sign = if x[0] < 0.75 { 1.0 } else { -1.0 };
            (sign + constant) / m
        } else {
            0.0
        }
    });
    Atom { partition: Some(MarkedPartition::parse(2, "{1.,2}").unwrap()), tau: 2.0, payload: a, geometry: Geometry::Single { rect: r } }
}

#[test]
fn haar_atom_passes_and_constant_breaks_cancellation() {
    let s = structure();
    let report = validate_atom(&s, &haar_atom(0.0), 1e-8).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
    let report = validate_atom(&s, &haar_atom(0.3), 1e-8).unwrap();
    let failed: Vec<_> = report.failures().iter().map(|c| c.clause.clone()).collect();
    assert!(failed.iter().any(|c| c.contains("cancellation")), "{failed:?}");
}

#[test]
fn rectangle_outside_the_class_is_malformed() {
    let s = structure();
    let mut atom = haar_atom(0.0);
    atom.geometry = Geometry::Single { rect: rect(&s, [1, 1], [1, 0]) };
    assert!(validate_atom(&s, &atom, 1e-8).is_err());
    atom.partition = None;
    assert!(validate_atom(&s, &atom, 1e-8).is_err());
}

/// Product Haar on one rectangle of 𝔻_{{1.}{2.}} at L = (1,1), with Ω = R.
fn product_atom(scale: f64) -> Atom {
    let s = structure();
    let g = grid();
    let r = rect(&s, [1, 1], [1, 1]);
    let m = multinorm::rational::to_f64(&r.measure());
    // ‖a‖₂² = |Ω|^{-1} exactly
    let a = box_fn(&g, |x| {
        if (0.5..1.0).contains(&x[0]) && (0.5..1.0).contains(&x[1]) {
            let sx = if x[0] < 0.75 { 1.0 } else { -1.0 };
            let sy = if x[1] < 0.75 { 1.0 } else { -1.0 };
            scale * sx * sy / m
        } else {
            0.0
        }
    });
    Atom {
        partition: Some(MarkedPartition::parse(2, "{1.}{2.}").unwrap()),
        tau: 2.0,
        payload: a.clone(),
        geometry: Geometry::Multi {
            omega: vec![r.clone()],
            omega_measure: m,
            corner: vec![0, 0],
            pre_atoms: vec![PreAtom { rect: r, payload: a }],
        },
    }
}

#[test]
fn product_haar_is_a_multi_atom_and_scaling_breaks_the_bound() {
    let s = structure();
    let report = validate_atom(&s, &product_atom(1.0), 1e-8).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
    let report = validate_atom(&s, &product_atom(2.0), 1e-8).unwrap();
    assert!(report.failures().iter().any(|c| c.clause.starts_with("partition bound")));
}

#[test]
fn localization_is_a_partition_of_unity() {
    let d = decomposer();
    let g = grid();
    let f = SampledFunction::from_real_fn(&g, |x| (x[0] * 1.3).sin() + (x[1] * 0.7).cos());
    let pieces = d.localize(&f);
    assert_eq!(pieces.len(), 16);
    let mut total = SampledFunction::zeros(&g);
    for (corner, p) in &pieces {
        let bounds = rescaled_unit_cube(&structure(), corner, 0.0);
        for (i, v) in p.data.iter().enumerate() {
            if v.norm() > 0.0 {
                let x = g.point(i);
                for h in 0..2 {
                    let c = 0.5 * (bounds[h].0 + bounds[h].1);
                    let dist = ((x[h] - c + 2.0).rem_euclid(4.0) - 2.0).abs();
                    assert!(dist < PIECE_RADIUS + 1e-12);
                }
            }
        }
        total = total.add(p).unwrap();
    }
    assert!(total.sub(&f).unwrap().max_abs() < 1e-12);

    let small = bump(&g, [0.5, 0.5], 0.5, 0.0);
    let pieces = d.localize(&small);
    assert_eq!(pieces.len(), 1);
    assert_eq!(pieces[0].0, vec![0, 0]);
}

#[test]
fn decomposition_of_a_bump() {
    let d = decomposer();
    let s = structure();
    let g = grid();
    let f = bump(&g, [0.5, 0.5], 0.45, 3.0);
    let dec = d.decompose(&f, 1).unwrap();
    let norm = f.quadrature_norm(2);
    assert!(dec.diagnostics.residual_assignment <= 1e-9 * norm, "{:?}", dec.diagnostics);
    let validator = AtomValidator::new(&s);
    for t in &dec.terms {
        let r = validator.validate(&t.atom, 1e-8).unwrap();
        assert_ne!(r.verdict, Verdict::Fail, "{} {:?}", t.atom.label(), r.failures());
        assert!(t.coefficient > 0.0);
    }
    let reconstruction = dec.reconstruction().unwrap();
    assert!(reconstruction.sub(&f).unwrap().quadrature_norm(2) <= 1e-12 * norm);

    let empty: Vec<_> = dec.terms.iter().filter(|t| t.atom.partition.is_none()).collect();
    assert_eq!(empty.len(), 1);
    let (psi, tilde) = d.analyzer.symbols(0);
    let k0 = SampledFunction::from_spectrum(&g, psi.iter().zip(tilde).map(|(a, b)| Complex64::new(a * b, 0.0)).collect()).unwrap();
    let f0 = f.convolve(&k0).unwrap();
    assert!((empty[0].coefficient - f0.quadrature_norm(2)).abs() <= 1e-12 * empty[0].coefficient);
    assert!(empty[0].coefficient <= f.quadrature_norm(1) * k0.quadrature_norm(2) * (1.0 + 1e-12));

    let classes: Vec<usize> = dec.terms.iter().map(|t| t.atom.s()).collect();
    assert!(classes.contains(&1) && classes.contains(&2), "{classes:?}");
    let h1 = h1_norm(&d.analyzer, &f, 1).unwrap();
    println!("bump: {} terms, sum |lambda| / h1 = {:.3}", dec.terms.len(), dec.coefficient_sum() / h1);
}

#[test]
fn decomposition_is_homogeneous_and_deterministic() {
    let d = decomposer();
    let g = grid();
    let f = bump(&g, [0.3, 0.6], 0.4, 2.0);
    let one = d.decompose(&f, 1).unwrap();
    let two = d.decompose(&f.scale(2.0), 1).unwrap();
    let parallel = d.decompose(&f, 3).unwrap();
    assert_eq!(one.terms.len(), two.terms.len());
    assert_eq!(one.terms.len(), parallel.terms.len());
    for ((a, b), c) in one.terms.iter().zip(&two.terms).zip(&parallel.terms) {
        assert!((b.coefficient - 2.0 * a.coefficient).abs() <= 1e-12 * b.coefficient);
        assert!(b.atom.payload.sub(&a.atom.payload).unwrap().max_abs() <= 1e-9 * a.atom.payload.max_abs());
        assert_eq!(a.coefficient, c.coefficient);
        assert_eq!(a.atom.payload, c.atom.payload);
        assert_eq!(a.atom.label(), c.atom.label());
    }
}

#[test]
fn mid_band_blocks_concentrate_in_their_class() {
    let d = decomposer();
    let g = grid();
    for (k, scale) in d.analyzer.scales().iter().enumerate().filter(|(_, s)| s.partition.is_some()) {
        let (psi, tilde) = d.analyzer.symbols(k);
        let f = SampledFunction::from_spectrum(
            &g,
            (0..g.len())
                .map(|i| {
                    let xi = g.frequency(i);
                    Complex64::from_polar(psi[i] * tilde[i], -std::f64::consts::TAU * 0.5 * (xi[0] + xi[1]))
                })
                .collect(),
        )
        .unwrap();
        let dec = d.decompose(&f, 1).unwrap();
        let label = scale.partition_label();
        let top = dec.diagnostics.classes.iter().max_by(|a, b| a.1.coefficient_sum.total_cmp(&b.1.coefficient_sum)).unwrap();
        assert_eq!(top.0, &label, "{:?}", dec.diagnostics.classes);
        let h1 = h1_norm(&d.analyzer, &f, 1).unwrap();
        println!("L={:?} S={label}: sum |lambda| / h1 = {:.3}", scale.l, dec.coefficient_sum() / h1);
    }
}

#[test]
fn atoms_have_bounded_h1_norm() {
    let d = decomposer();
    let g = grid();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, c) in [[0.5, 0.5], [0.2, 0.7], [-0.4, 0.1]].iter().enumerate() {
        let dec = d.decompose(&bump(&g, *c, 0.45, k as f64 + 1.0), 1).unwrap();
        for t in &dec.terms {
            worst = worst.max(h1_norm(&d.analyzer, &t.atom.payload, 1).unwrap());
            count += 1;
        }
    }
    println!("{count} atoms, max h1 = {worst:.3}");
    assert!(count >= 20);
    assert!(worst.is_finite() && worst < 20.0);
}

#[test]
fn json_round_trip() {
    let d = decomposer();
    let s = structure();
    let g = grid();
    let dec = d.decompose(&bump(&g, [0.5, 0.5], 0.45, 3.0), 1).unwrap();
    let dir = std::env::temp_dir().join(format!("multinorm-hardy-{}", std::process::id()));
    dec.save(&dir).unwrap();
    let back = Decomposition::load(&dir, &s).unwrap();
    assert_eq!(back.record(), dec.record());
    for (a, b) in back.terms.iter().zip(&dec.terms) {
        assert_eq!(a.atom.payload, b.atom.payload);
    }
    let text = std::fs::read_to_string(dir.join("decomposition.json")).unwrap();
    assert!(text.contains("\"format\": \"multinorm-decomposition\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_parameters_are_rejected() {
    let s = structure();
    assert!(matches!(Decomposer::new(&s, &grid(), 1.0, 1), Err(multinorm::Error::Window(_))));
    assert!(matches!(Decomposer::new(&s, &grid(), 2.0, 2), Err(multinorm::Error::Window(_))));
    assert!(Decomposer::new(&s, &Grid::new(vec![256, 256], vec![2.0, 2.0]).unwrap(), 2.0, 1).is_err());
    let other = Grid::new(vec![128, 128], vec![4.0, 4.0]).unwrap();
    assert!(decomposer().decompose(&SampledFunction::zeros(&other), 1).is_err());
}
