use multinorm::calderon::*;
use multinorm::grid::{Grid, SampledFunction};
use multinorm::kernels::*;
use multinorm::matrix::{StandardMatrix, Structure};
use multinorm::squarefn::{corpus, Analyzer};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn structure() -> Structure {
    Structure::isotropic(StandardMatrix::from_integers(&[&[1, 1], &[2, 1]]).unwrap())
}

fn c0(r: &ValidationReport) -> f64 {
    r.constants.iter().map(|c| c.near.max(c.far)).fold(0.0, f64::max)
}

#[test]
fn products_of_local_symbols_are_multipliers() {
    let s = structure();
    let m1 = local_symbol(&s, 0, 0.3);
    let m2 = local_symbol(&s, 1, 1.7);
    let r1 = validate_multiplier(&m1, &s, 3, 1000, 11).unwrap();
    let r2 = validate_multiplier(&m2, &s, 3, 1000, 11).unwrap();
    let rp = validate_multiplier(&m1.product(&m2), &s, 3, 1000, 11).unwrap();
    assert!(r1.pass, "{:?}", r1.failures);
    assert!(r2.pass, "{:?}", r2.failures);
    assert!(rp.pass, "{:?}", rp.failures);
    // Leibniz: each product constant is at most a sum of 2^{|α|} factor products.
    assert!(c0(&rp) <= 8.0 * c0(&r1) * c0(&r2), "{} {} {}", c0(&rp), c0(&r1), c0(&r2));

    let riesz = riesz_product(&s, &[Some(0), Some(1)]).unwrap();
    let rr = validate_multiplier(&riesz, &s, 3, 1000, 12).unwrap();
    assert!(rr.pass, "{:?}", rr.failures);
}

#[test]
fn three_factor_product_passes() {
    let s = Structure::isotropic(StandardMatrix::from_integers(&[&[1, 1, 1], &[2, 1, 1], &[4, 2, 1]]).unwrap());
    let m = (0..3).fold(Multiplier::one(), |acc, i| acc.product(&local_symbol(&s, i, 0.5 + i as f64)));
    let r = validate_multiplier(&m, &s, 2, 200, 5).unwrap();
    assert!(r.pass, "{:?}", r.failures);
}

#[test]
fn pieces_vanish_on_dotted_subspaces() {
    let s = structure();
    // Subspace vanishing comes from block supports, so it is a property of the tensor family;
    // convolution pieces vanish only at the origin.
    let conv = MultiNormFamily::convolution(&s, Profile::default(), 4, 5).unwrap();
    let kc = synthesize_kernel(&riesz_product(&s, &[Some(0), None]).unwrap(), &conv).unwrap();
    for scale in kc.scales() {
        assert_eq!(kc.piece(scale, &[0.0, 0.0]), 0.0);
    }
    {
        let fam = MultiNormFamily::tensor(&s, Profile::default(), 4, 5).unwrap();
        let k = synthesize_kernel(&riesz_product(&s, &[Some(0), None]).unwrap(), &fam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for scale in k.scales() {
            for &j in &scale.dotted {
                for _ in 0..200 {
                    let mut zeta = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
                    zeta[j] = 0.0;
                    assert_eq!(k.piece(scale, &zeta), 0.0, "{scale:?}");
                }
            }
        }
    }
}

fn band_limited(fam: &MultiNormFamily, g: &Grid, seed: u64) -> SampledFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec: Vec<Complex64> = (0..g.len())
        .map(|i| {
            let xi = g.frequency(i);
            let a = fam.args(&xi);
            let cover: f64 = fam.scales.iter().map(|s| fam.psi(s, &a)).sum();
            if (cover - 1.0).abs() <= 1e-13 {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SampledFunction::from_spectrum(g, spec).unwrap()
}

#[test]
fn synthesized_riesz_matches_direct_symbol() {
    let s = structure();
    let g = Grid::uniform(2, 64, 2.0).unwrap();
    let fam = MultiNormFamily::tensor(&s, Profile::default(), 4, 4).unwrap();
    let m = riesz_product(&s, &[Some(0), Some(1)]).unwrap();
    let k = synthesize_kernel(&m, &fam).unwrap();
    for xi in mid_band_probes(&fam, 1000, 4) {
        assert!((k.symbol(&xi) - m.eval(&xi)).abs() <= 1e-9);
    }
    let f = band_limited(&fam, &g, 1);
    assert!(f.spectral_l2() > 0.0);
    let a = apply_kernel(&k, &f, 1e-12).unwrap();
    let b = apply_symbol(&m, &f);
    assert!(a.sub(&b).unwrap().max_abs() <= 1e-9 * b.max_abs().max(1.0));
}

#[test]
fn unit_symbol_is_band_pass_projection() {
    let s = structure();
    let g = Grid::uniform(2, 64, 2.0).unwrap();
    let fam = MultiNormFamily::convolution(&s, Profile::default(), 4, 4).unwrap();
    let k = synthesize_kernel(&Multiplier::one(), &fam).unwrap();
    let f = band_limited(&fam, &g, 2);
    let out = apply_kernel(&k, &f, 1e-12).unwrap();
    assert!(out.sub(&f).unwrap().max_abs() <= 1e-12 * f.max_abs());
    let delta = SampledFunction::delta(&g);
    assert!(apply_kernel(&k, &delta, 1e-3).is_err());
    let proj = apply_kernel(&k, &delta, 1.0).unwrap();
    let want = delta.apply_symbol(|xi| {
        let a = fam.args(xi);
        Complex64::new(fam.scales.iter().map(|sc| fam.psi(sc, &a)).sum(), 0.0)
    });
    assert!(proj.sub(&want).unwrap().max_abs() <= 1e-12 * want.max_abs());
}

#[test]
fn space_localized_family_is_rejected() {
    let s = structure();
    let g = Grid::uniform(2, 64, 4.0).unwrap();
    let fam = MultiNormFamily::space_localized(&s, &g, 2, 1.0 / 16.0, 1, 4).unwrap();
    assert!(synthesize_kernel(&Multiplier::one(), &fam).is_err());
}

#[test]
fn application_is_linear_and_translation_invariant() {
    let s = structure();
    let g = Grid::uniform(2, 64, 2.0).unwrap();
    let fam = MultiNormFamily::tensor(&s, Profile::default(), 4, 4).unwrap();
    let k = synthesize_kernel(&riesz_product(&s, &[None, Some(1)]).unwrap(), &fam).unwrap();
    let f = band_limited(&fam, &g, 3);
    let h = band_limited(&fam, &g, 4);
    let tf = apply_kernel(&k, &f, 1e-12).unwrap();
    let th = apply_kernel(&k, &h, 1e-12).unwrap();
    let sum = apply_kernel(&k, &f.scale(-2.5).add(&h).unwrap(), 1e-12).unwrap();
    let want = tf.scale(-2.5).add(&th).unwrap();
    assert!(sum.sub(&want).unwrap().max_abs() <= 1e-12 * want.max_abs());

    let shift = |u: &SampledFunction| {
        let mut out = SampledFunction::zeros(&g);
        for i in 0..g.len() {
            let mut k = g.unravel(i);
            k[0] = (k[0] + 5) % 64;
            k[1] = (k[1] + 61) % 64;
            out.data[g.ravel(&k)] = u.data[i];
        }
        out
    };
    let a = apply_kernel(&k, &shift(&f), 1e-12).unwrap();
    let b = shift(&tf);
    assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * b.max_abs());
}

#[test]
fn square_function_ratio_is_bounded_on_corpus() {
    let s = structure();
    let g = Grid::uniform(2, 128, 2.0).unwrap();
    let fam = MultiNormFamily::tensor(&s, Profile::default(), 4, 4).unwrap();
    let an = Analyzer::new(fam.clone(), &g).unwrap();
    let mut worst = 0.0f64;
    for (idx, j) in [[Some(0), Some(1)], [Some(1), None], [None, Some(0)]].iter().enumerate() {
        let k = synthesize_kernel(&riesz_product(&s, j).unwrap(), &fam).unwrap();
        for m in corpus(&fam, &g, 7 + idx as u64) {
            let sf = an.s_tensor(&m.function, 4).unwrap().quadrature_norm(1);
            if sf == 0.0 {
                continue;
            }
            let tf = apply_kernel(&k, &m.function, 1.0).unwrap();
            let stf = an.s_tensor(&tf, 4).unwrap().quadrature_norm(1);
            worst = worst.max(stf / sf);
        }
    }
    println!("max ||S(Tf)||_1 / ||Sf||_1 = {worst:.4}");
    assert!(worst.is_finite() && worst <= 10.0, "{worst}");
}
