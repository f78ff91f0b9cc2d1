//! The local Hardy norm, multi-norm atoms and the constructive atomic decomposition.
//!
//! Everything runs on a periodic grid with the compactly supported (cascade) tensor family, so
//! supports, cancellations and the L² bounds of the construction hold up to FFT roundoff.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calderon::MultiNormFamily;
use crate::dyadic::{DyadicGrid, DyadicRectangle};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::matrix::Structure;
use crate::partitions::MarkedPartition;
use crate::rational::to_f64;
use crate::scales::{Scale, ScaleLattice};
use crate::squarefn::Analyzer;

/// ‖S_Ψ f‖₁ for the analyzer's family over the window.
pub fn h1_norm(analyzer: &Analyzer, f: &SampledFunction, window: i64) -> Result<f64> {
    Ok(analyzer.square(f, window)?.quadrature_norm(1))
}

/// Per-coordinate bounds of 2^τ∘R: each side scaled by 2^{τλ_h} about the centre.
pub fn rescaled_rectangle(structure: &Structure, rect: &DyadicRectangle, tau: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); structure.d()];
    for cube in &rect.cubes {
        for (k, &h) in cube.coords.iter().enumerate() {
            let (lo, hi) = (to_f64(&cube.lo(k)), to_f64(&cube.hi(k)));
            let half = 0.5 * (hi - lo) * (tau * structure.exponents.lambda_f64(h)).exp2();
            let c = 0.5 * (lo + hi);
            out[h] = (c - half, c + half);
        }
    }
    out
}

/// Per-coordinate bounds of 2^τ∘Q_P for the unit cube with corner P.
pub fn rescaled_unit_cube(structure: &Structure, corner: &[i64], tau: f64) -> Vec<(f64, f64)> {
    corner
        .iter()
        .enumerate()
        .map(|(h, &p)| {
            let half = 0.5 * (tau * structure.exponents.lambda_f64(h)).exp2();
            (p as f64 + 0.5 - half, p as f64 + 0.5 + half)
        })
        .collect()
}

const EDGE: f64 = 1e-12;

/// Samples whose coordinates all satisfy the per-axis predicate.
fn box_mask(g: &Grid, axis: impl Fn(usize, f64) -> bool) -> Vec<bool> {
    let per_axis: Vec<Vec<bool>> = (0..g.dim()).map(|h| (0..g.n[h]).map(|k| axis(h, g.coord(h, k))).collect()).collect();
    let mut out = vec![true; g.len()];
    let mut stride = 1;
    for h in (0..g.dim()).rev() {
        for (i, v) in out.iter_mut().enumerate() {
            *v = *v && per_axis[h][(i / stride) % g.n[h]];
        }
        stride *= g.n[h];
    }
    out
}

fn rect_mask(g: &Grid, rect: &DyadicRectangle) -> Vec<bool> {
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); g.dim()];
    for c in &rect.cubes {
        for (k, &h) in c.coords.iter().enumerate() {
            bounds[h] = (to_f64(&c.lo(k)), to_f64(&c.hi(k)));
        }
    }
    box_mask(g, |h, x| x >= bounds[h].0 && x < bounds[h].1)
}

/// max |f| outside the bounds (taken periodically) relative to max |f|.
fn leakage(f: &SampledFunction, bounds: &[(f64, f64)]) -> f64 {
    let max = f.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let g = &f.grid;
    let mask = box_mask(g, |h, x| {
        let (lo, hi) = bounds[h];
        let p = g.period[h];
        x + ((lo - EDGE - x) / p).ceil() * p <= hi + EDGE
    });
    f.data.iter().zip(mask).filter(|(_, m)| !m).map(|(v, _)| v.norm()).fold(0.0, f64::max) / max
}

/// Worst |∫ f dx_block| over the other variables, relative to the worst ∫ |f| dx_block.
pub fn slice_cancellation(f: &SampledFunction, block: &[usize]) -> f64 {
    let g = &f.grid;
    let d = g.dim();
    let mut strides = vec![1usize; d];
    for h in (0..d.saturating_sub(1)).rev() {
        strides[h] = strides[h + 1] * g.n[h + 1];
    }
    let mut rest = vec![0usize; d];
    let mut size = 1;
    for h in (0..d).rev() {
        if !block.contains(&h) {
            rest[h] = size;
            size *= g.n[h];
        }
    }
    let mut sums = vec![(Complex64::new(0.0, 0.0), 0.0f64); size];
    for (i, v) in f.data.iter().enumerate() {
        let key: usize = (0..d).map(|h| ((i / strides[h]) % g.n[h]) * rest[h]).sum();
        sums[key].0 += v;
        sums[key].1 += v.norm();
    }
    let den = sums.iter().map(|s| s.1).fold(0.0, f64::max);
    if den == 0.0 {
        return 0.0;
    }
    sums.iter().map(|s| s.0.norm()).fold(0.0, f64::max) / den
}

fn l2(f: &SampledFunction) -> f64 {
    f.quadrature_norm(2)
}

#[derive(Clone, Debug)]
pub struct PreAtom {
    pub rect: DyadicRectangle,
    pub payload: SampledFunction,
}

#[derive(Clone, Debug)]
pub enum Geometry {
    /// s = 0: the unit cube Q_P.
    Unit { corner: Vec<i64> },
    /// s = 1: the rectangle R of 𝔻_S.
    Single { rect: DyadicRectangle },
    /// s ≥ 2: Ω as a union of dyadic rectangles inside 2^τ∘Q_P, and the pre-atoms.
    Multi { omega: Vec<DyadicRectangle>, omega_measure: f64, corner: Vec<i64>, pre_atoms: Vec<PreAtom> },
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub partition: Option<MarkedPartition>,
    pub tau: f64,
    pub payload: SampledFunction,
    pub geometry: Geometry,
}

impl Atom {
    pub fn s(&self) -> usize {
        self.partition.as_ref().map_or(0, |p| p.blocks().len())
    }

    pub fn label(&self) -> String {
        self.partition.as_ref().map_or("{}".to_string(), |p| p.encode())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Borderline,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub value: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub checks: Vec<ClauseCheck>,
    pub verdict: Verdict,
}

impl AtomReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn failures(&self) -> Vec<&ClauseCheck> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail).collect()
    }
}

/// Clause checks against a tolerance: within tol passes, within 10·tol is borderline.
struct Checker {
    tol: f64,
    checks: Vec<ClauseCheck>,
}

impl Checker {
    /// value ≤ bound·(1 + tol).
    fn at_most(&mut self, clause: String, value: f64, bound: f64) {
        let verdict = if !value.is_finite() {
            Verdict::Fail
        } else if value <= bound * (1.0 + self.tol) {
            Verdict::Pass
        } else if value <= bound * (1.0 + 10.0 * self.tol) {
            Verdict::Borderline
        } else {
            Verdict::Fail
        };
        self.checks.push(ClauseCheck { clause, value, bound, verdict });
    }

    /// A relative defect that should vanish.
    fn small(&mut self, clause: String, value: f64) {
        let verdict = if value <= self.tol {
            Verdict::Pass
        } else if value <= 10.0 * self.tol {
            Verdict::Borderline
        } else {
            Verdict::Fail
        };
        self.checks.push(ClauseCheck { clause, value, bound: self.tol, verdict });
    }

    fn finish(self) -> AtomReport {
        let verdict = self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass);
        AtomReport { checks: self.checks, verdict }
    }
}

/// Checks atoms against the clauses of the atom definition for one structure.
pub struct AtomValidator {
    pub structure: Structure,
    lattice: ScaleLattice,
    dyadic: DyadicGrid,
    /// Random partitions tried for the pre-atom bound, besides singletons and the whole set.
    pub partitions: usize,
    pub seed: u64,
}

impl AtomValidator {
    pub fn new(structure: &Structure) -> Self {
        AtomValidator {
            structure: structure.clone(),
            lattice: ScaleLattice::new(structure),
            dyadic: DyadicGrid::new(structure.matrix.clone(), structure.exponents.clone()),
            partitions: 8,
            seed: 0,
        }
    }

    fn check_rect(&self, rect: &DyadicRectangle, partition: &MarkedPartition) -> Result<()> {
        let bad = |why: &str| Err(Error::Precondition(format!("rectangle at {:?} is not in the dyadic family of {}: {why}", rect.l, partition.encode())));
        match self.lattice.is_admissible(&rect.l) {
            Some(Scale { partition: Some(p), .. }) if &p == partition => {}
            _ => return bad("scale not in the class"),
        }
        if rect.cubes.len() != self.structure.n() {
            return bad("wrong factor count");
        }
        for (i, c) in rect.cubes.iter().enumerate() {
            let want = self.dyadic.cube(i, rect.l[i], c.corner.clone());
            if want.coords != c.coords || want.mu != c.mu || c.scale != rect.l[i] || c.factor != i {
                return bad("cube does not match its scale");
            }
        }
        Ok(())
    }

    pub fn validate(&self, atom: &Atom, tol: f64) -> Result<AtomReport> {
        let s = &self.structure;
        let mut ck = Checker { tol, checks: Vec::new() };
        let a = &atom.payload;
        match (&atom.geometry, &atom.partition) {
            (Geometry::Unit { corner }, None) => {
                ck.small("support".into(), leakage(a, &rescaled_unit_cube(s, corner, atom.tau)));
                ck.at_most("size".into(), l2(a), 1.0);
            }
            (Geometry::Single { rect }, Some(p)) if p.blocks().len() == 1 => {
                self.check_rect(rect, p)?;
                ck.small("support".into(), leakage(a, &rescaled_rectangle(s, rect, atom.tau)));
                ck.at_most("size".into(), l2(a), to_f64(&rect.measure()).powf(-0.5));
                let k = p.blocks()[0].dotted;
                ck.small(format!("cancellation x{}", k + 1), slice_cancellation(a, s.exponents.block(k)));
            }
            (Geometry::Multi { omega, omega_measure, corner, pre_atoms }, Some(p)) if p.blocks().len() >= 2 => {
                let g = &a.grid;
                let mut mask = vec![false; g.len()];
                for r in omega {
                    for (m, v) in mask.iter_mut().zip(rect_mask(g, r)) {
                        *m |= v;
                    }
                }
                let measure = mask.iter().filter(|&&b| b).count() as f64 * g.cell();
                ck.small("omega measure".into(), (measure - omega_measure).abs() / omega_measure.max(f64::MIN_POSITIVE));
                let cube = rescaled_unit_cube(s, corner, atom.tau);
                let outside = omega
                    .iter()
                    .filter(|r| {
                        r.cubes.iter().any(|c| {
                            c.coords.iter().enumerate().any(|(k, &h)| {
                                let (lo, hi) = (to_f64(&c.lo(k)), to_f64(&c.hi(k)));
                                let period = g.period[h];
                                let shift = ((cube[h].0 - EDGE - lo) / period).ceil() * period;
                                hi + shift > cube[h].1 + EDGE
                            })
                        })
                    })
                    .count();
                ck.small("omega in rescaled cube".into(), outside as f64);
                let mut total = SampledFunction::zeros(g);
                for (j, pre) in pre_atoms.iter().enumerate() {
                    self.check_rect(&pre.rect, p)?;
                    let inside_omega = mask.iter().zip(rect_mask(g, &pre.rect)).all(|(m, r)| *m || !r);
                    ck.small(format!("pre-atom {j} rectangle in omega"), if inside_omega { 0.0 } else { 1.0 });
                    ck.small(format!("pre-atom {j} support"), leakage(&pre.payload, &rescaled_rectangle(s, &pre.rect, atom.tau)));
                    for b in p.blocks() {
                        ck.small(
                            format!("pre-atom {j} cancellation x{}", b.dotted + 1),
                            slice_cancellation(&pre.payload, s.exponents.block(b.dotted)),
                        );
                    }
                    total = total.add(&pre.payload)?;
                }
                let scale = l2(a).max(f64::MIN_POSITIVE);
                ck.small("sum of pre-atoms".into(), l2(&total.sub(a)?) / scale);
                let bound = 1.0 / omega_measure;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let m = pre_atoms.len();
                let mut labelings: Vec<(String, Vec<usize>)> =
                    vec![("singletons".into(), (0..m).collect()), ("whole".into(), vec![0; m])];
                for t in 0..self.partitions {
                    let parts = rng.gen_range(1..=m.max(1));
                    labelings.push((format!("random {t}"), (0..m).map(|_| rng.gen_range(0..parts)).collect()));
                }
                for (name, labels) in labelings {
                    let mut sums: BTreeMap<usize, SampledFunction> = BTreeMap::new();
                    for (pre, &lab) in pre_atoms.iter().zip(&labels) {
                        let e = sums.entry(lab).or_insert_with(|| SampledFunction::zeros(g));
                        *e = e.add(&pre.payload)?;
                    }
                    let v: f64 = sums.values().map(|f| l2(f).powi(2)).sum();
                    ck.at_most(format!("partition bound ({name})"), v, bound);
                }
            }
            _ => return Err(Error::Precondition("atom geometry does not match its partition".into())),
        }
        Ok(ck.finish())
    }
}

pub fn validate_atom(structure: &Structure, atom: &Atom, tol: f64) -> Result<AtomReport> {
    AtomValidator::new(structure).validate(atom, tol)
}

/// The kernel-size calibration tying the family's spatial step to τ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: f64,
    /// Cascade step s: Ψ_L^{(−L)} ∗ Ψ̃_L^{(−L)} has extent proportional to s·2^{−ℓλ}.
    pub step: f64,
    pub p: u32,
    pub m: u32,
    /// Largest ratio, over scales and coordinates, of kernel extent to the allowed margin (≤ 1).
    pub worst_ratio: f64,
    /// Half-width of the pieces of the partition of unity, per coordinate.
    pub piece_radius: Vec<f64>,
}

const SUPPORT_FLOOR: f64 = 1e-12;

/// Max |x_h| over samples where |k| exceeds SUPPORT_FLOOR·max |k|.
fn extents(k: &SampledFunction) -> Vec<f64> {
    let g = &k.grid;
    let max = k.max_abs();
    let mut out = vec![0.0f64; g.dim()];
    for (i, v) in k.data.iter().enumerate() {
        if v.norm() > SUPPORT_FLOOR * max {
            for (h, x) in g.point(i).iter().enumerate() {
                out[h] = out[h].max(x.abs());
            }
        }
    }
    out
}

fn side(structure: &Structure, seq: &crate::dyadic::AdmissibleSequence, l: &[i64], h: usize) -> f64 {
    (-(seq.mu(l[structure.exponents.factor_of(h)], h) as f64)).exp2()
}

/// Half-width of the pieces of the partition of unity used to localize inputs around unit cubes.
pub const PIECE_RADIUS: f64 = 0.625;

/// Picks the largest cascade step s = 2^{−j} ≥ Δ for which, at every scale L of the window,
/// Ψ_L ∗ Ψ̃_L extends at most side_h(L)·(2^{τλ_h} − 1)/4 in coordinate h, and every dyadic rectangle
/// meeting the filtered support of a piece stays inside 2^τ∘Q_P.
pub fn calibrate(structure: &Structure, grid: &Grid, tau: f64, window: i64, p: u32, m: u32) -> Result<Calibration> {
    if tau <= 0.0 {
        return Err(Error::NonPositiveParameter("tau"));
    }
    let seq = crate::dyadic::AdmissibleSequence::floor(&structure.exponents);
    let d = structure.d();
    let reach: Vec<f64> = (0..d).map(|h| 0.5 * (tau * structure.exponents.lambda_f64(h)).exp2()).collect();
    let min_spacing = (0..d).map(|h| grid.spacing(h)).fold(f64::INFINITY, f64::min);
    let max_spacing = (0..d).map(|h| grid.spacing(h)).fold(0.0, f64::max);
    let mut step = 1.0f64;
    while step >= max_spacing && step >= min_spacing {
        let family = MultiNormFamily::space_localized(structure, grid, p, step, m, window)?;
        let args = family.grid_args(grid);
        let mut worst: f64 = 0.0;
        let mut hull = vec![(0.5f64, 0.5f64); d];
        for scale in &family.scales {
            let k = SampledFunction::from_spectrum(
                grid,
                args.iter().map(|a| Complex64::new(family.psi(scale, a) * family.psi_tilde(scale, a), 0.0)).collect(),
            )?;
            let e = extents(&k);
            for h in 0..d {
                let sigma = side(structure, &seq, &scale.l, h);
                let allowed = sigma * (2.0 * reach[h] - 1.0) / 4.0;
                worst = worst.max(e[h] / allowed).max(4.0 * e[h] / grid.period[h]);
                let a = PIECE_RADIUS + e[h];
                hull[h].0 = hull[h].0.min(((0.5 - a) / sigma).floor() * sigma);
                hull[h].1 = hull[h].1.max(((0.5 + a) / sigma).floor() * sigma + sigma);
            }
        }
        let covered = (0..d).all(|h| hull[h].0.floor() >= 0.5 - reach[h] && hull[h].1.ceil() <= 0.5 + reach[h]);
        if worst <= 1.0 && covered {
            let resolved = (0..d).all(|h| step >= grid.spacing(h) * (seq.mu(window, h) as f64).exp2() * (1.0 - 1e-12));
            if !resolved {
                return Err(Error::Window(format!(
                    "grid too coarse: the kernel step {step} that fits 2^{tau}-rescaled rectangles cannot resolve window {window}"
                )));
            }
            return Ok(Calibration { tau, step, p, m, worst_ratio: worst, piece_radius: vec![PIECE_RADIUS; d] });
        }
        step /= 2.0;
    }
    Err(Error::Window(format!("no kernel step on this grid keeps supports inside 2^{tau}-rescaled rectangles")))
}

/// One term λ·a of a decomposition; `piece` indexes the localized piece of the input.
#[derive(Clone, Debug)]
pub struct Term {
    pub coefficient: f64,
    pub atom: Atom,
    pub level: Option<i64>,
    pub piece: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassDiagnostics {
    /// Rectangles of 𝔻_S in some 𝓑^i_S.
    pub rectangles: usize,
    /// Groups: maximal rectangles (s = 1) or maximal rectangles of Ω^i_s carrying pre-atoms (s ≥ 2).
    pub maximal: usize,
    pub atoms: usize,
    pub coefficient_sum: f64,
    /// C_S = sup (Σ_{L ∈ 𝓛_S} |Ψ̃̂_L|²)^{1/2}, folded into the coefficients.
    pub normalization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub piece: usize,
    pub i: i64,
    pub omega: f64,
    pub omega_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub pieces: usize,
    pub levels: Vec<LevelDiagnostics>,
    pub classes: BTreeMap<String, ClassDiagnostics>,
    /// ‖f − Σ_{L in window} Ψ_L ∗ Ψ̃_L ∗ f‖₂: the window tail.
    pub residual_tail: f64,
    /// ‖Σ_{L} Ψ_L ∗ Ψ̃_L ∗ f − Σ λ a‖₂.
    pub residual_assignment: f64,
    pub input_l2: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub tau: f64,
    pub window: i64,
    pub calibration: Calibration,
    pub terms: Vec<Term>,
    pub residual: SampledFunction,
    pub diagnostics: Diagnostics,
}

impl Decomposition {
    pub fn coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    pub fn reconstruction(&self) -> Result<SampledFunction> {
        let mut out = self.residual.clone();
        for t in &self.terms {
            out = out.add(&t.atom.payload.scale(t.coefficient))?;
        }
        Ok(out)
    }
}

/// Precomputed cell layout of one scale: samples per side, cell of each sample and cell corners.
struct ScaleCells {
    scale: usize,
    l: Vec<i64>,
    cells: Vec<usize>,
    ncell: Vec<usize>,
    cell_of: Vec<usize>,
    corners: Vec<Vec<i64>>,
    per_cell: usize,
}

impl ScaleCells {
    fn new(grid: &Grid, scale: usize, l: &[i64], cells: Vec<usize>) -> Self {
        let d = grid.dim();
        let ncell: Vec<usize> = (0..d).map(|h| grid.n[h] / cells[h]).collect();
        let total: usize = ncell.iter().product();
        let signed = |h: usize, k: usize| if k < grid.n[h] / 2 { k as i64 } else { k as i64 - grid.n[h] as i64 };
        let mut corners = vec![Vec::new(); total];
        let mut cell_of = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let k = grid.unravel(i);
            let p: Vec<i64> = (0..d).map(|h| signed(h, k[h]).div_euclid(cells[h] as i64)).collect();
            let mut id = 0;
            for h in 0..d {
                id = id * ncell[h] + p[h].rem_euclid(ncell[h] as i64) as usize;
            }
            if corners[id].is_empty() {
                corners[id] = p;
            }
            cell_of.push(id);
        }
        ScaleCells { scale, l: l.to_vec(), per_cell: cells.iter().product(), cells, ncell, cell_of, corners }
    }

    fn len(&self) -> usize {
        self.corners.len()
    }

    fn coarser_or_equal(&self, other: &ScaleCells) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| a >= b)
    }

    /// The cell of `self` containing cell `c` of the finer layout `fine`.
    fn container(&self, fine: &ScaleCells, c: usize) -> usize {
        let p = &fine.corners[c];
        let mut id = 0;
        for h in 0..self.cells.len() {
            let q = p[h].div_euclid((self.cells[h] / fine.cells[h]) as i64);
            id = id * self.ncell[h] + q.rem_euclid(self.ncell[h] as i64) as usize;
        }
        id
    }
}

/// Cells of the tables in `set` satisfying `pred` and contained in no other such cell.
fn maximal_flags(tables: &[ScaleCells], set: &[usize], pred: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<bool>> {
    let mut flags: Vec<Vec<bool>> = tables.iter().map(|t| vec![false; t.len()]).collect();
    for &a in set {
        for c in 0..tables[a].len() {
            if !pred(a, c) {
                continue;
            }
            let dominated = set.iter().any(|&b| {
                b != a
                    && tables[b].coarser_or_equal(&tables[a])
                    && (tables[b].cells != tables[a].cells || b < a)
                    && pred(b, tables[b].container(&tables[a], c))
            });
            flags[a][c] = !dominated;
        }
    }
    flags
}

/// The maximal cell containing cell c of table a: largest volume, then lowest table index.
fn maximal_container(tables: &[ScaleCells], set: &[usize], flags: &[Vec<bool>], a: usize, c: usize) -> Option<(usize, usize)> {
    set.iter()
        .filter(|&&b| tables[b].coarser_or_equal(&tables[a]))
        .map(|&b| (b, tables[b].container(&tables[a], c)))
        .filter(|&(b, cb)| flags[b][cb])
        .max_by(|x, y| tables[x.0].per_cell.cmp(&tables[y.0].per_cell).then(y.0.cmp(&x.0)))
}

fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let results: Vec<Result<Vec<R>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| scope.spawn(|| part.iter().map(&f).collect::<Result<Vec<R>>>())).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// A pending group: the rectangles R' (table, cell) whose filtered pieces make one atom or pre-atom.
struct Group {
    members: Vec<(usize, usize)>,
}

/// The constructive decomposition on a fixed grid, window and τ.
pub struct Decomposer {
    pub structure: Structure,
    pub grid: Grid,
    pub tau: f64,
    pub window: i64,
    pub calibration: Calibration,
    pub analyzer: Analyzer,
    dyadic: DyadicGrid,
    tables: Vec<ScaleCells>,
    /// Threshold, relative to the maximum, below which S_PP and the pieces count as zero.
    pub floor: f64,
}

impl Decomposer {
    pub fn new(structure: &Structure, grid: &Grid, tau: f64, window: i64) -> Result<Self> {
        if grid.dim() != structure.d() {
            return Err(Error::GridMismatch("grid dimension differs from the structure".into()));
        }
        for h in 0..grid.dim() {
            let p = grid.period[h];
            if p.fract() != 0.0 || p < (tau * structure.exponents.lambda_f64(h)).exp2() {
                return Err(Error::Precondition(format!("decomposition needs integer periods of at least 2^(tau*lambda); axis {h} has {p}")));
            }
        }
        let calibration = calibrate(structure, grid, tau, window, 1, 1)?;
        let family = MultiNormFamily::space_localized(structure, grid, calibration.p, calibration.step, calibration.m, window)?;
        let analyzer = Analyzer::new(family, grid)?;
        let dyadic = DyadicGrid::new(structure.matrix.clone(), structure.exponents.clone());
        let mut tables = Vec::new();
        for (k, s) in analyzer.scales().iter().enumerate() {
            let cells: Vec<usize> = (0..grid.dim())
                .map(|h| {
                    let c = side(structure, &dyadic.sequence, &s.l, h) / grid.spacing(h);
                    if c < 1.0 {
                        return Err(Error::Window(format!("rectangles at scale {:?} are finer than the grid", s.l)));
                    }
                    Ok(c as usize)
                })
                .collect::<Result<_>>()?;
            tables.push(ScaleCells::new(grid, k, &s.l, cells));
        }
        Ok(Decomposer { structure: structure.clone(), grid: grid.clone(), tau, window, calibration, analyzer, dyadic, tables, floor: 1e-13 })
    }

    fn rectangle(&self, t: &ScaleCells, c: usize) -> DyadicRectangle {
        let corner = &t.corners[c];
        let cubes = (0..self.structure.n())
            .map(|i| {
                let p = self.structure.exponents.block(i).iter().map(|&h| corner[h]).collect();
                self.dyadic.cube(i, t.l[i], p)
            })
            .collect();
        DyadicRectangle { l: t.l.clone(), cubes }
    }

    /// Splits f by a smooth periodic partition of unity into pieces supported within `piece_radius`
    /// of unit cube centres; a single piece is returned unchanged when f already fits.
    pub fn localize(&self, f: &SampledFunction) -> Vec<(Vec<i64>, SampledFunction)> {
        let g = &self.grid;
        let d = g.dim();
        let r = &self.calibration.piece_radius;
        let max = f.max_abs();
        if max == 0.0 {
            return Vec::new();
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (i, v) in f.data.iter().enumerate() {
            if v.norm() > SUPPORT_FLOOR * max {
                for (h, x) in g.point(i).iter().enumerate() {
                    lo[h] = lo[h].min(*x);
                    hi[h] = hi[h].max(*x);
                }
            }
        }
        let corner: Vec<i64> = (0..d).map(|h| (0.5 * (lo[h] + hi[h]) - 0.5).round() as i64).collect();
        if (0..d).all(|h| lo[h] >= corner[h] as f64 + 0.5 - r[h] && hi[h] <= corner[h] as f64 + 0.5 + r[h]) {
            return vec![(corner, f.clone())];
        }
        let bump = |t: f64, r: f64| if t.abs() < r { (-1.0 / (1.0 - (t / r).powi(2))).exp() } else { 0.0 };
        // periodic distance from x to the centre p + 1/2
        let offset = |h: usize, x: f64, p: i64| {
            let period = g.period[h];
            (x - p as f64 - 0.5 + period / 2.0).rem_euclid(period) - period / 2.0
        };
        let centres: Vec<Vec<i64>> =
            (0..d).map(|h| (-(g.period[h] as i64) / 2..(g.period[h] as i64 + 1) / 2).collect()).collect();
        let weights: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|h| {
                (0..g.n[h])
                    .map(|k| {
                        let x = g.coord(h, k);
                        let w: Vec<f64> = centres[h].iter().map(|&p| bump(offset(h, x, p), r[h])).collect();
                        let total: f64 = w.iter().sum();
                        w.into_iter().map(|v| v / total).collect()
                    })
                    .collect()
            })
            .collect();
        let ranges: Vec<(i64, i64)> = (0..d).map(|h| (0, centres[h].len() as i64 - 1)).collect();
        let mut out = Vec::new();
        for idx in crate::scales::product(&ranges) {
            let piece = SampledFunction::new(
                g.clone(),
                f.data
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let k = g.unravel(i);
                        v * (0..d).map(|h| weights[h][k[h]][idx[h] as usize]).product::<f64>()
                    })
                    .collect(),
            )
            .expect("same grid");
            if piece.max_abs() > SUPPORT_FLOOR * max {
                out.push(((0..d).map(|h| centres[h][idx[h] as usize]).collect(), piece));
            }
        }
        out
    }

    pub fn decompose(&self, f: &SampledFunction, jobs: usize) -> Result<Decomposition> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch("input grid differs from the decomposer grid".into()));
        }
        let pieces = self.localize(f);
        let mut terms = Vec::new();
        let mut levels = Vec::new();
        let mut classes: BTreeMap<String, ClassDiagnostics> = BTreeMap::new();
        for (k, (corner, piece)) in pieces.iter().enumerate() {
            self.decompose_piece(k, corner, piece, jobs, &mut terms, &mut levels, &mut classes)?;
        }
        let mut approx = SampledFunction::zeros(&self.grid);
        for t in &terms {
            approx = approx.add(&t.atom.payload.scale(t.coefficient))?;
        }
        let residual = f.sub(&approx)?;
        let projected = self.analyzer.reconstruct(f, self.window)?;
        let diagnostics = Diagnostics {
            pieces: pieces.len(),
            levels,
            classes,
            residual_tail: l2(&f.sub(&projected)?),
            residual_assignment: l2(&projected.sub(&approx)?),
            input_l2: l2(f),
        };
        Ok(Decomposition { tau: self.tau, window: self.window, calibration: self.calibration.clone(), terms, residual, diagnostics })
    }

    /// Σ over the group's rectangles of Ψ̃_L ∗ (1_{R'} · g_L), scaled by 1/λ.
    fn synthesize(&self, pieces: &[SampledFunction], group: &Group, lambda: f64) -> Result<SampledFunction> {
        let g = &self.grid;
        let mut by_scale: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(t, c) in &group.members {
            by_scale.entry(t).or_default().push(c);
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); g.len()];
        for (t, cells) in by_scale {
            let table = &self.tables[t];
            let set: BTreeSet<usize> = cells.into_iter().collect();
            let masked = SampledFunction::new(
                g.clone(),
                pieces[t].data.iter().enumerate().map(|(i, v)| if set.contains(&table.cell_of[i]) { *v } else { Complex64::new(0.0, 0.0) }).collect(),
            )?;
            let (_, tilde) = self.analyzer.symbols(table.scale);
            for ((s, v), w) in spec.iter_mut().zip(masked.spectrum()).zip(tilde) {
                *s += v * w;
            }
        }
        Ok(SampledFunction::from_spectrum(g, spec)?.scale(1.0 / lambda))
    }

    fn cell_energy(&self, pieces: &[SampledFunction]) -> Vec<Vec<f64>> {
        self.tables
            .iter()
            .enumerate()
            .map(|(t, table)| {
                let mut e = vec![0.0; table.len()];
                for (i, v) in pieces[t].data.iter().enumerate() {
                    e[table.cell_of[i]] += v.norm_sqr() * self.grid.cell();
                }
                e
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn decompose_piece(
        &self,
        index: usize,
        corner: &[i64],
        f: &SampledFunction,
        jobs: usize,
        terms: &mut Vec<Term>,
        levels: &mut Vec<LevelDiagnostics>,
        classes: &mut BTreeMap<String, ClassDiagnostics>,
    ) -> Result<()> {
        let g = &self.grid;
        let scales = self.analyzer.scales();
        let spec = f.spectrum();

        // s = 0
        let zero = scales.iter().position(|s| s.partition.is_none()).expect("window contains L = 0");
        let (psi0, tilde0) = self.analyzer.symbols(zero);
        let kernel0 = SampledFunction::from_spectrum(g, psi0.iter().zip(tilde0).map(|(a, b)| Complex64::new(a * b, 0.0)).collect())?;
        let f0 = SampledFunction::from_spectrum(g, spec.iter().enumerate().map(|(i, v)| v * psi0[i] * tilde0[i]).collect())?;
        // ‖f₀‖₂ ≤ ‖Ψ₀ ∗ Ψ̃₀‖₂·‖f‖₁; the sharper left side is the coefficient
        let lambda0 = l2(&f0);
        if lambda0 > self.floor * l2(&kernel0) * f.quadrature_norm(1) {
            terms.push(Term {
                coefficient: lambda0,
                atom: Atom { partition: None, tau: self.tau, payload: f0.scale(1.0 / lambda0), geometry: Geometry::Unit { corner: corner.to_vec() } },
                level: None,
                piece: index,
            });
            let e = classes.entry("{}".into()).or_default();
            e.atoms += 1;
            e.coefficient_sum += lambda0;
            e.normalization = l2(&kernel0);
        }

        // levels of S_PP
        let spp = self.analyzer.s_pp(f, self.window)?;
        let vals: Vec<f64> = spp.data.iter().map(|v| v.re).collect();
        let vmax = vals.iter().cloned().fold(0.0, f64::max);
        if vmax == 0.0 {
            return Ok(());
        }
        let cut = self.floor * vmax;
        let mut pieces: Vec<SampledFunction> = self.analyzer.pieces(f, self.window)?.into_iter().map(|(_, p)| p).collect();
        let pmax = pieces.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
        for p in pieces.iter_mut() {
            for v in p.data.iter_mut() {
                if v.norm() <= self.floor * pmax {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }

        // i_R for every rectangle: the largest i with |R ∩ Ω^i| > |R|/2
        let level: Vec<Vec<Option<i64>>> = self
            .tables
            .iter()
            .map(|t| {
                let mut buckets: Vec<Vec<f64>> = vec![Vec::with_capacity(t.per_cell); t.len()];
                for (i, &v) in vals.iter().enumerate() {
                    buckets[t.cell_of[i]].push(v);
                }
                buckets
                    .into_iter()
                    .map(|mut b| {
                        let k = b.len() / 2;
                        let (_, v, _) = b.select_nth_unstable_by(k, |x, y| y.partial_cmp(x).unwrap());
                        (*v > cut).then(|| v.log2().ceil() as i64 - 1)
                    })
                    .collect()
            })
            .collect();
        let mut top = vec![None::<i64>; g.len()];
        for (t, table) in self.tables.iter().enumerate() {
            for (i, slot) in top.iter_mut().enumerate() {
                *slot = (*slot).max(level[t][table.cell_of[i]]);
            }
        }
        let min_top: Vec<Vec<Option<i64>>> = self
            .tables
            .iter()
            .map(|t| {
                let mut m = vec![Some(i64::MAX); t.len()];
                for (i, &v) in top.iter().enumerate() {
                    let c = t.cell_of[i];
                    m[c] = m[c].min(v);
                }
                m
            })
            .collect();
        let positive: Vec<f64> = vals.iter().cloned().filter(|&v| v > cut).collect();
        let i_lo = positive.iter().cloned().fold(f64::INFINITY, f64::min).log2().floor() as i64;
        let i_hi = vmax.log2().ceil() as i64;
        let omega_s = |i: i64| top.iter().filter(|&&t| t >= Some(i)).count() as f64 * g.cell();
        for i in i_lo..=i_hi {
            let omega = vals.iter().filter(|&&v| v > cut && v > (i as f64).exp2()).count() as f64 * g.cell();
            levels.push(LevelDiagnostics { piece: index, i, omega, omega_s: omega_s(i) });
        }
        let energy = self.cell_energy(&pieces);

        // classes S ≠ ∅
        let mut by_class: BTreeMap<MarkedPartition, Vec<usize>> = BTreeMap::new();
        for (t, s) in scales.iter().enumerate() {
            if let Some(p) = &s.partition {
                by_class.entry(p.clone()).or_default().push(t);
            }
        }
        let all: Vec<usize> = (0..self.tables.len()).collect();
        struct Job {
            partition: MarkedPartition,
            level: i64,
            lambda: f64,
            groups: Vec<(DyadicRectangle, Group)>,
            omega: Option<(Vec<DyadicRectangle>, f64, Vec<i64>)>,
        }
        let mut work: Vec<Job> = Vec::new();
        for (partition, set) in &by_class {
            let label = partition.encode();
            let norm = {
                let mut best: f64 = 0.0;
                for i in 0..g.len() {
                    let v: f64 = set.iter().map(|&t| self.analyzer.symbols(self.tables[t].scale).1[i].powi(2)).sum();
                    best = best.max(v);
                }
                best.sqrt()
            };
            let diag = classes.entry(label).or_default();
            diag.normalization = norm;
            let present: BTreeSet<i64> = set.iter().flat_map(|&t| level[t].iter().flatten().copied()).collect();
            let s = partition.blocks().len();
            for &i in &present {
                let in_b = |t: usize, c: usize| level[t][c] == Some(i);
                let members: Vec<(usize, usize)> = set.iter().flat_map(|&t| (0..self.tables[t].len()).filter(move |&c| in_b(t, c)).map(move |c| (t, c))).collect();
                diag.rectangles += members.len();
                let raw: f64 = members.iter().map(|&(t, c)| energy[t][c]).sum();
                if s == 1 {
                    let flags = maximal_flags(&self.tables, set, &in_b);
                    let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
                    for &(t, c) in &members {
                        let key = maximal_container(&self.tables, set, &flags, t, c).expect("a rectangle of the class lies in a maximal one");
                        groups.entry(key).or_insert(Group { members: Vec::new() }).members.push((t, c));
                    }
                    for ((t, c), group) in groups {
                        let e: f64 = group.members.iter().map(|&(u, v)| energy[u][v]).sum();
                        if e == 0.0 {
                            continue;
                        }
                        let rect = self.rectangle(&self.tables[t], c);
                        // |R|^{1/2}; the payload's own L² norm completes the coefficient
                        let lambda = to_f64(&rect.measure()).sqrt();
                        diag.maximal += 1;
                        work.push(Job { partition: partition.clone(), level: i, lambda, groups: vec![(rect, group)], omega: None });
                    }
                } else {
                    if raw == 0.0 {
                        continue;
                    }
                    let in_omega = |t: usize, c: usize| min_top[t][c] >= Some(i);
                    let flags = maximal_flags(&self.tables, set, &in_omega);
                    let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
                    for &(t, c) in &members {
                        let key = maximal_container(&self.tables, set, &flags, t, c).expect("a rectangle of the class lies in a maximal one");
                        groups.entry(key).or_insert(Group { members: Vec::new() }).members.push((t, c));
                    }
                    let om = omega_s(i);
                    let lambda = norm * om.sqrt() * raw.sqrt();
                    let oflags = maximal_flags(&self.tables, &all, &|t, c| level[t][c] >= Some(i));
                    let mut omega = Vec::new();
                    for (t, fl) in oflags.iter().enumerate() {
                        for (c, &b) in fl.iter().enumerate() {
                            if b {
                                omega.push(self.rectangle(&self.tables[t], c));
                            }
                        }
                    }
                    diag.maximal += groups.len();
                    let groups = groups.into_iter().map(|((t, c), grp)| (self.rectangle(&self.tables[t], c), grp)).collect();
                    work.push(Job { partition: partition.clone(), level: i, lambda, groups, omega: Some((omega, om, corner.to_vec())) });
                }
            }
        }

        let built = par_map(&work, jobs, |job| {
            job.groups.iter().map(|(_, grp)| self.synthesize(&pieces, grp, 1.0)).collect::<Result<Vec<_>>>()
        })?;
        for (mut job, payloads) in work.into_iter().zip(built) {
            let label = job.partition.encode();
            let atom = match job.omega {
                None => {
                    let (rect, _) = job.groups.into_iter().next().expect("one group");
                    let payload = payloads.into_iter().next().expect("one payload");
                    job.lambda *= l2(&payload);
                    if job.lambda == 0.0 {
                        continue;
                    }
                    Atom { partition: Some(job.partition), tau: self.tau, payload: payload.scale(1.0 / job.lambda), geometry: Geometry::Single { rect } }
                }
                Some((omega, omega_measure, corner)) => {
                    let payloads: Vec<SampledFunction> = payloads.iter().map(|p| p.scale(1.0 / job.lambda)).collect();
                    let mut total = SampledFunction::zeros(g);
                    for p in &payloads {
                        total = total.add(p)?;
                    }
                    let pre_atoms = job.groups.into_iter().zip(payloads).map(|((rect, _), payload)| PreAtom { rect, payload }).collect();
                    Atom { partition: Some(job.partition), tau: self.tau, payload: total, geometry: Geometry::Multi { omega, omega_measure, corner, pre_atoms } }
                }
            };
            let e = classes.get_mut(&label).expect("class registered");
            e.atoms += 1;
            e.coefficient_sum += job.lambda;
            terms.push(Term { coefficient: job.lambda, atom, level: Some(job.level), piece: index });
        }
        Ok(())
    }
}

/// Decomposes f with the default kernel parameters for the given τ and window.
pub fn atomic_decompose(structure: &Structure, f: &SampledFunction, tau: f64, window: i64, jobs: usize) -> Result<Decomposition> {
    Decomposer::new(structure, &f.grid, tau, window)?.decompose(f, jobs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryRecord {
    Unit { corner: Vec<i64> },
    Single { rect: DyadicRectangle },
    Multi { omega: Vec<DyadicRectangle>, omega_measure: f64, corner: Vec<i64>, pre_atoms: Vec<PreAtomRecord> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreAtomRecord {
    pub rect: DyadicRectangle,
    pub payload: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coefficient: f64,
    pub partition: String,
    pub s: usize,
    pub level: Option<i64>,
    pub piece: usize,
    pub l2_norm: f64,
    pub payload: String,
    pub geometry: GeometryRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub format: String,
    pub version: u32,
    pub grid: Grid,
    pub tau: f64,
    pub window: i64,
    pub calibration: Calibration,
    pub coefficient_sum: f64,
    pub terms: Vec<TermRecord>,
    pub residual: String,
    pub diagnostics: Diagnostics,
}

pub const DECOMPOSITION_FORMAT: &str = "multinorm-decomposition";

impl Decomposition {
    /// Metadata with payload file names relative to the output directory.
    pub fn record(&self) -> DecompositionRecord {
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let payload = format!("atom-{k:05}.bin");
                let geometry = match &t.atom.geometry {
                    Geometry::Unit { corner } => GeometryRecord::Unit { corner: corner.clone() },
                    Geometry::Single { rect } => GeometryRecord::Single { rect: rect.clone() },
                    Geometry::Multi { omega, omega_measure, corner, pre_atoms } => GeometryRecord::Multi {
                        omega: omega.clone(),
                        omega_measure: *omega_measure,
                        corner: corner.clone(),
                        pre_atoms: pre_atoms
                            .iter()
                            .enumerate()
                            .map(|(j, p)| PreAtomRecord { rect: p.rect.clone(), payload: format!("atom-{k:05}-pre-{j:04}.bin") })
                            .collect(),
                    },
                };
                TermRecord {
                    coefficient: t.coefficient,
                    partition: t.atom.label(),
                    s: t.atom.s(),
                    level: t.level,
                    piece: t.piece,
                    l2_norm: l2(&t.atom.payload),
                    payload,
                    geometry,
                }
            })
            .collect();
        DecompositionRecord {
            format: DECOMPOSITION_FORMAT.into(),
            version: 1,
            grid: self.residual.grid.clone(),
            tau: self.tau,
            window: self.window,
            calibration: self.calibration.clone(),
            coefficient_sum: self.coefficient_sum(),
            terms,
            residual: "residual.bin".into(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Writes decomposition.json and the payload files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let record = self.record();
        for (t, r) in self.terms.iter().zip(&record.terms) {
            t.atom.payload.save(&dir.join(&r.payload))?;
            if let (Geometry::Multi { pre_atoms, .. }, GeometryRecord::Multi { pre_atoms: names, .. }) = (&t.atom.geometry, &r.geometry) {
                for (p, n) in pre_atoms.iter().zip(names) {
                    p.payload.save(&dir.join(&n.payload))?;
                }
            }
        }
        self.residual.save(&dir.join(&record.residual))?;
        fs::write(dir.join("decomposition.json"), serde_json::to_string_pretty(&record)?)?;
        Ok(())
    }

    pub fn load(dir: &Path, structure: &Structure) -> Result<Self> {
        let record: DecompositionRecord = serde_json::from_str(&fs::read_to_string(dir.join("decomposition.json"))?)?;
        if record.format != DECOMPOSITION_FORMAT || record.version != 1 {
            return Err(Error::Parse(format!("unsupported decomposition format {} v{}", record.format, record.version)));
        }
        let mut terms = Vec::new();
        for r in &record.terms {
            let partition = if r.partition == "{}" { None } else { Some(MarkedPartition::parse(structure.n(), &r.partition)?) };
            let geometry = match &r.geometry {
                GeometryRecord::Unit { corner } => Geometry::Unit { corner: corner.clone() },
                GeometryRecord::Single { rect } => Geometry::Single { rect: rect.clone() },
                GeometryRecord::Multi { omega, omega_measure, corner, pre_atoms } => Geometry::Multi {
                    omega: omega.clone(),
                    omega_measure: *omega_measure,
                    corner: corner.clone(),
                    pre_atoms: pre_atoms
                        .iter()
                        .map(|p| Ok(PreAtom { rect: p.rect.clone(), payload: SampledFunction::load(&dir.join(&p.payload))? }))
                        .collect::<Result<_>>()?,
                },
            };
            let atom = Atom { partition, tau: record.tau, payload: SampledFunction::load(&dir.join(&r.payload))?, geometry };
            terms.push(Term { coefficient: r.coefficient, atom, level: r.level, piece: r.piece });
        }
        Ok(Decomposition {
            tau: record.tau,
            window: record.window,
            calibration: record.calibration,
            terms,
            residual: SampledFunction::load(&dir.join(&record.residual))?,
            diagnostics: record.diagnostics,
        })
    }
}
