//! Square functions of tensor, Plancherel–Pólya, convolution and lattice type, the local strong
//! maximal operator, and L¹ equivalence reports over a seeded corpus.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calderon::{FamilyKind, MultiNormFamily};
use crate::dyadic::AdmissibleSequence;
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::matrix::Structure;
use crate::scales::{product, Scale};

fn real(grid: &Grid, v: Vec<f64>) -> SampledFunction {
    SampledFunction { grid: grid.clone(), data: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect() }
}

/// Symbols of a family sampled once on a grid, with the pieces f ∗ Ψ_L^{(−L)} computed on demand.
pub struct Analyzer {
    pub grid: Grid,
    pub family: MultiNormFamily,
    psi: Vec<Vec<f64>>,
    psi_tilde: Vec<Vec<f64>>,
    sequence: AdmissibleSequence,
}

impl Analyzer {
    pub fn new(family: MultiNormFamily, grid: &Grid) -> Result<Self> {
        if grid.dim() != family.structure.d() {
            return Err(Error::GridMismatch("grid dimension differs from the structure".into()));
        }
        let args = family.grid_args(grid);
        let psi = family.scales.iter().map(|s| args.iter().map(|a| family.psi(s, a)).collect()).collect();
        let psi_tilde = family.scales.iter().map(|s| args.iter().map(|a| family.psi_tilde(s, a)).collect()).collect();
        let sequence = AdmissibleSequence::floor(&family.structure.exponents);
        Ok(Analyzer { grid: grid.clone(), family, psi, psi_tilde, sequence })
    }

    pub fn scales(&self) -> &[Scale] {
        &self.family.scales
    }

    /// Sampled transforms of Ψ_L^{(−L)} and Ψ̃_L^{(−L)} for the k-th scale.
    pub fn symbols(&self, k: usize) -> (&[f64], &[f64]) {
        (&self.psi[k], &self.psi_tilde[k])
    }

    fn check(&self, f: &SampledFunction, window: i64) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch("function and analyzer grids differ".into()));
        }
        if window > self.family.window {
            return Err(Error::Window(format!("window {window} exceeds the family window {}", self.family.window)));
        }
        Ok(())
    }

    fn in_window(&self, window: i64) -> impl Iterator<Item = (usize, &Scale)> {
        self.family.scales.iter().enumerate().filter(move |(_, s)| s.l.iter().all(|&v| v <= window))
    }

    fn filter(&self, spec: &[Complex64], symbol: &[f64]) -> SampledFunction {
        SampledFunction::from_spectrum(&self.grid, spec.iter().zip(symbol).map(|(a, b)| a * b).collect()).unwrap()
    }

    /// f ∗ Ψ_L^{(−L)} for each scale of the window.
    pub fn pieces(&self, f: &SampledFunction, window: i64) -> Result<Vec<(Scale, SampledFunction)>> {
        self.check(f, window)?;
        let spec = f.spectrum();
        Ok(self.in_window(window).map(|(k, s)| (s.clone(), self.filter(&spec, &self.psi[k]))).collect())
    }

    /// Σ_L f ∗ Ψ_L^{(−L)} ∗ Ψ̃_L^{(−L)} over the window.
    pub fn reconstruct(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        self.check(f, window)?;
        let spec = f.spectrum();
        let mut sym = vec![0.0; self.grid.len()];
        for (k, _) in self.in_window(window) {
            for (i, v) in sym.iter_mut().enumerate() {
                *v += self.psi[k][i] * self.psi_tilde[k][i];
            }
        }
        Ok(self.filter(&spec, &sym))
    }

    /// Pointwise (Σ_L |f ∗ Ψ_L^{(−L)}|²)^{1/2}; with a convolution family this is S′.
    pub fn square(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        let mut acc = vec![0.0; self.grid.len()];
        for (_, p) in self.pieces(f, window)? {
            for (a, v) in acc.iter_mut().zip(&p.data) {
                *a += v.norm_sqr();
            }
        }
        Ok(real(&self.grid, acc.into_iter().map(f64::sqrt).collect()))
    }

    pub fn s_tensor(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        if self.family.kind != FamilyKind::Tensor {
            return Err(Error::Precondition("tensor square function needs a tensor family".into()));
        }
        self.square(f, window)
    }

    pub fn s_conv(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        if self.family.kind != FamilyKind::Convolution {
            return Err(Error::Precondition("convolution square function needs a convolution family".into()));
        }
        self.square(f, window)
    }

    /// S″: all L ∈ ℕⁿ with max ℓ_i ≤ window, using the n-fold hat-convolution terms.
    pub fn s_grid(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        if self.family.kind != FamilyKind::Convolution {
            return Err(Error::Precondition("lattice square function needs a convolution family".into()));
        }
        self.check(f, window)?;
        let spec = f.spectrum();
        let args = self.family.grid_args(&self.grid);
        let mut acc = vec![0.0; self.grid.len()];
        for l in product(&vec![(0, window); self.family.n()]) {
            let sym: Vec<f64> = args.iter().map(|a| self.family.lattice_term(&l, a)).collect();
            for (a, v) in acc.iter_mut().zip(&self.filter(&spec, &sym).data) {
                *a += v.norm_sqr();
            }
        }
        Ok(real(&self.grid, acc.into_iter().map(f64::sqrt).collect()))
    }

    /// Samples per axis of a dyadic rectangle at scale L.
    pub fn rectangle_cells(&self, l: &[i64]) -> Vec<usize> {
        let exps = &self.family.structure.exponents;
        (0..self.grid.dim())
            .map(|h| {
                let mu = self.sequence.mu(l[exps.factor_of(h)], h);
                let side = (-(mu as f64)).exp2();
                let c = (side / self.grid.spacing(h)).round().max(1.0) as usize;
                c.min(self.grid.n[h])
            })
            .collect()
    }

    /// Plancherel–Pólya: each |f ∗ Ψ_L^{(−L)}| replaced by its max over the dyadic rectangle at scale L.
    pub fn s_pp(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        if self.family.kind != FamilyKind::Tensor {
            return Err(Error::Precondition("Plancherel-Polya square function needs a tensor family".into()));
        }
        let mut acc = vec![0.0; self.grid.len()];
        for (s, p) in self.pieces(f, window)? {
            let sup = rectangle_sup(&self.grid, &p.abs(), &self.rectangle_cells(&s.l));
            for (a, v) in acc.iter_mut().zip(&sup) {
                *a += v * v;
            }
        }
        Ok(real(&self.grid, acc.into_iter().map(f64::sqrt).collect()))
    }

    /// min and max over the grid of Σ_L Ψ̂_L², the L² frame bounds of the window.
    pub fn frame_bounds(&self, window: i64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.grid.len() {
            let v: f64 = self.in_window(window).map(|(k, _)| self.psi[k][i] * self.psi[k][i]).sum();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Max over aligned cells of `cells[h]` samples per axis, broadcast back to every sample.
pub fn rectangle_sup(grid: &Grid, values: &[f64], cells: &[usize]) -> Vec<f64> {
    let mut v = values.to_vec();
    let d = grid.dim();
    let mut stride = 1;
    for h in (0..d).rev() {
        let n = grid.n[h];
        let c = cells[h].clamp(1, n);
        let block = stride * n;
        if c > 1 {
            for outer in (0..v.len()).step_by(block) {
                for inner in 0..stride {
                    for start in (0..n).step_by(c) {
                        let idx = |k: usize| outer + inner + k * stride;
                        let m = (start..(start + c).min(n)).map(|k| v[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
                        for k in start..(start + c).min(n) {
                            v[idx(k)] = m;
                        }
                    }
                }
            }
        }
        stride = block;
    }
    v
}

/// Fixed-point image of |f| so that box sums are exact and order independent.
fn quantize(values: &[f64]) -> (Vec<i128>, f64) {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return (vec![0; values.len()], 1.0);
    }
    let shift = 90 - max.log2().ceil() as i32;
    let scale = (shift as f64).exp2();
    (values.iter().map(|v| (v * scale).round() as i128).collect(), scale)
}

/// Per-axis half-widths in samples for each admissible radius vector, and the radius exponents.
fn radius_table(structure: &Structure, grid: &Grid) -> Vec<(Vec<i64>, Vec<usize>)> {
    let exps = &structure.exponents;
    let n = structure.n();
    let mut depth = vec![0i64; n];
    for h in 0..grid.dim() {
        let i = exps.factor_of(h);
        // smallest j with 2^{−jλ} < Δ: the box has shrunk to a single sample
        let j = (grid.spacing(h).log2().abs() / exps.lambda_f64(h)).floor() as i64 + 1;
        depth[i] = depth[i].max(j);
    }
    product(&depth.iter().map(|&j| (0, j)).collect::<Vec<_>>())
        .into_iter()
        .map(|js| {
            let w = (0..grid.dim())
                .map(|h| {
                    let r = (-(js[exps.factor_of(h)] as f64) * exps.lambda_f64(h)).exp2();
                    ((r / grid.spacing(h)) * (1.0 + 1e-12)).floor() as usize
                })
                .collect();
            (js, w)
        })
        .collect()
}

fn axis_window_sums(grid: &Grid, v: &[i128], h: usize, w: usize) -> Vec<i128> {
    let n = grid.n[h];
    let stride: usize = grid.n[h + 1..].iter().product();
    let block = stride * n;
    let mut out = vec![0i128; v.len()];
    let full = 2 * w + 1 >= n;
    for outer in (0..v.len()).step_by(block) {
        for inner in 0..stride {
            let idx = |k: usize| outer + inner + k * stride;
            if full {
                let s: i128 = (0..n).map(|k| v[idx(k)]).sum();
                for k in 0..n {
                    out[idx(k)] = s;
                }
                continue;
            }
            let mut s: i128 = (0..=2 * w).map(|t| v[idx((t + n - w) % n)]).sum();
            for k in 0..n {
                out[idx(k)] = s;
                s += v[idx((k + w + 1) % n)] - v[idx((k + n - w) % n)];
            }
        }
    }
    out
}

fn box_count(grid: &Grid, w: &[usize]) -> f64 {
    (0..grid.dim()).map(|h| (2 * w[h] + 1).min(grid.n[h]) as f64).product()
}

/// Local strong maximal function: sup over dyadic radii 2^{−j_i} ≤ 1 per factor of centred box
/// averages of |f|, the box in factor i having half-width r_i^{λ_h} in coordinate h (periodic).
pub fn strong_maximal(structure: &Structure, f: &SampledFunction) -> SampledFunction {
    let grid = &f.grid;
    let (q, scale) = quantize(&f.abs());
    let mut best = vec![0.0f64; grid.len()];
    for (_, w) in radius_table(structure, grid) {
        let mut s = q.clone();
        for h in 0..grid.dim() {
            s = axis_window_sums(grid, &s, h, w[h]);
        }
        let count = box_count(grid, &w);
        for (b, v) in best.iter_mut().zip(&s) {
            *b = b.max(*v as f64 / scale / count);
        }
    }
    real(grid, best)
}

/// Exhaustive O(N^{2d}) evaluation of the same operator.
pub fn strong_maximal_bruteforce(structure: &Structure, f: &SampledFunction) -> SampledFunction {
    let grid = &f.grid;
    let (q, scale) = quantize(&f.abs());
    let table = radius_table(structure, grid);
    let dist = |h: usize, a: usize, b: usize| {
        let n = grid.n[h];
        let d = (a + n - b) % n;
        d.min(n - d)
    };
    let mut out = vec![0.0f64; grid.len()];
    for x in 0..grid.len() {
        let kx = grid.unravel(x);
        for (_, w) in &table {
            let mut s: i128 = 0;
            for y in 0..grid.len() {
                let ky = grid.unravel(y);
                let inside = (0..grid.dim()).all(|h| 2 * w[h] + 1 >= grid.n[h] || dist(h, kx[h], ky[h]) <= w[h]);
                if inside {
                    s += q[y];
                }
            }
            out[x] = out[x].max(s as f64 / scale / box_count(grid, w));
        }
    }
    real(grid, out)
}

/// One named member of the test corpus.
#[derive(Clone, Debug)]
pub struct CorpusMember {
    pub name: String,
    pub function: SampledFunction,
}

/// Seeded corpus: single-block bumps, band-limited trigonometric polynomials, near-atoms and
/// mollified point masses, five of each, all real valued.
pub fn corpus(family: &MultiNormFamily, grid: &Grid, seed: u64) -> Vec<CorpusMember> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let window = family.window;
    let nyq = (0..d).map(|h| grid.nyquist(h)).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();

    let inner: Vec<&Scale> = family.scales.iter().filter(|s| s.l.iter().all(|&v| v >= 1 && v < window)).collect();
    for k in 0..5 {
        let s = inner[rng.gen_range(0..inner.len())].clone();
        let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.25..0.25)).collect();
        let f = SampledFunction::from_symbol(grid, |xi| {
            let a = family.args(xi);
            let phase: f64 = xi.iter().zip(&shift).map(|(u, v)| u * v).sum();
            Complex64::from_polar(family.psi(&s, &a), -2.0 * std::f64::consts::PI * phase)
        });
        let f = real(grid, f.data.iter().map(|v| v.re).collect());
        out.push(CorpusMember { name: format!("block-{k}-L{:?}", s.l), function: f });
    }

    let band = ((window - 1) as f64).exp2().min(nyq / 2.0);
    for k in 0..5 {
        let terms: Vec<(Vec<f64>, f64, f64)> = (0..12)
            .map(|_| {
                let freq: Vec<f64> = (0..d)
                    .map(|h| (rng.gen_range(-band..band) * grid.period[h]).round() / grid.period[h])
                    .collect();
                (freq, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0))
            })
            .collect();
        let f = SampledFunction::from_real_fn(grid, |x| {
            terms
                .iter()
                .map(|(fr, a, ph)| {
                    let t: f64 = fr.iter().zip(x).map(|(u, v)| u * v).sum();
                    a * (2.0 * std::f64::consts::PI * (t + ph)).cos()
                })
                .sum()
        });
        out.push(CorpusMember { name: format!("trig-{k}"), function: f });
    }

    for k in 0..5 {
        let width: Vec<f64> = (0..d).map(|_| (rng.gen_range(-4.5..-2.5f64)).exp2()).collect();
        let centre: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let f = SampledFunction::from_real_fn(grid, |x| {
            let mut v = 1.0;
            for h in 0..d {
                let u = (x[h] - centre[h]) / width[h];
                v *= -u * (-u * u / 2.0).exp() / width[h];
            }
            v
        });
        out.push(CorpusMember { name: format!("atom-{k}"), function: f });
    }

    for k in 0..5 {
        let sigma = (-2.0 - k as f64 * 0.75).exp2();
        let centre: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(d as f64 / 2.0);
        let f = SampledFunction::from_real_fn(grid, |x| {
            let r2: f64 = (0..d).map(|h| (x[h] - centre[h]).powi(2)).sum();
            (-r2 / (2.0 * sigma * sigma)).exp() / norm
        });
        out.push(CorpusMember { name: format!("mass-{k}"), function: f });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquareKind {
    Tensor,
    PlancherelPolya,
    Convolution,
    Lattice,
}

pub struct SquareFunctionSpec<'a> {
    pub name: String,
    pub kind: SquareKind,
    pub analyzer: &'a Analyzer,
}

impl SquareFunctionSpec<'_> {
    pub fn eval(&self, f: &SampledFunction, window: i64) -> Result<SampledFunction> {
        match self.kind {
            SquareKind::Tensor => self.analyzer.s_tensor(f, window),
            SquareKind::PlancherelPolya => self.analyzer.s_pp(f, window),
            SquareKind::Convolution => self.analyzer.s_conv(f, window),
            SquareKind::Lattice => self.analyzer.s_grid(f, window),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSpread {
    pub numerator: String,
    pub denominator: String,
    pub min: f64,
    pub max: f64,
    /// max / min, or None when some member has a zero norm.
    pub spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionReport {
    pub note: String,
    pub window: i64,
    pub corpus: Vec<String>,
    pub norms: Vec<BTreeMap<String, f64>>,
    pub l1: Vec<f64>,
    pub ratios: Vec<RatioSpread>,
}

/// ‖S_• f‖₁ for every square function and corpus member, with pairwise ratio spreads.
pub fn equivalence_report(corpus: &[CorpusMember], specs: &[SquareFunctionSpec], window: i64, jobs: usize) -> Result<SquareFunctionReport> {
    let jobs = jobs.max(1);
    let mut rows: Vec<Option<Result<BTreeMap<String, f64>>>> = (0..corpus.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<(usize, &mut [Option<Result<BTreeMap<String, f64>>>])> = {
            let size = corpus.len().div_ceil(jobs).max(1);
            rows.chunks_mut(size).enumerate().map(|(c, s)| (c * size, s)).collect()
        };
        for (start, slot) in chunks {
            scope.spawn(move || {
                for (k, out) in slot.iter_mut().enumerate() {
                    let f = &corpus[start + k].function;
                    let row = specs
                        .iter()
                        .map(|s| s.eval(f, window).map(|v| (s.name.clone(), v.quadrature_norm(1))))
                        .collect::<Result<BTreeMap<_, _>>>();
                    *out = Some(row);
                }
            });
        }
    });
    let norms = rows.into_iter().map(|r| r.unwrap()).collect::<Result<Vec<_>>>()?;
    let mut ratios = Vec::new();
    for a in specs {
        for b in specs {
            if a.name >= b.name {
                continue;
            }
            let mut min = f64::INFINITY;
            let mut max: f64 = 0.0;
            let mut degenerate = corpus.is_empty();
            for row in &norms {
                let (x, y) = (row[&a.name], row[&b.name]);
                if x == 0.0 || y == 0.0 {
                    degenerate = true;
                    continue;
                }
                min = min.min(x / y);
                max = max.max(x / y);
            }
            let spread = if degenerate { None } else { Some(max / min) };
            ratios.push(RatioSpread { numerator: a.name.clone(), denominator: b.name.clone(), min, max, spread });
        }
    }
    Ok(SquareFunctionReport {
        note: "grid quadratures on band-limited samples; evidence for L1 equivalence, not a proof for rough data".into(),
        window,
        corpus: corpus.iter().map(|c| c.name.clone()).collect(),
        l1: corpus.iter().map(|c| c.function.quadrature_norm(1)).collect(),
        norms,
        ratios,
    })
}
