//! One-parameter and multi-norm Calderón reproducing families, evaluated on the frequency side.
//!
//! Every member is represented by its Fourier transform at its own scale: `nu(ℓ, ξ)` is the transform
//! of φ_ℓ^{(−ℓ)}, so rescaling never touches sampled data.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::kernels::smooth_norm_unchecked;
use crate::matrix::Structure;
use crate::rational::{to_f64, Rat};
use crate::scales::{Scale, ScaleLattice, Tube};

pub const DEFAULT_ORDER: u32 = 4;

/// Smooth radial step: 1 for r ≤ inner, 0 for r ≥ outer, built from exp(−1/t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Profile {
    fn default() -> Self {
        Profile { inner: 0.5, outer: 2.0 }
    }
}

fn mollifier(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl Profile {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::NonPositiveParameter("profile radii"));
        }
        Ok(Profile { inner, outer })
    }

    pub fn chi(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let u = (self.outer / r).ln() / (self.outer / self.inner).ln();
        let a = mollifier(u);
        a / (a + mollifier(1.0 - u))
    }
}

/// Per-factor evaluation data, computed once per frequency.
#[derive(Clone, Debug, PartialEq)]
pub enum BumpArg {
    Radius(f64),
    /// nu at ℓ = 0, 1, …; 1 beyond the end.
    Table(Vec<f64>),
}

/// Closed-form transform of a base low-pass profile and its rescalings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymbolicBump {
    /// χ of the smooth homogeneous norm for the weights `weights` on `coords`.
    Radial { profile: Profile, coords: Vec<usize>, weights: Vec<f64> },
    /// Per coordinate Π_{k=ℓ·step}^{top} cos^{2p}(π s 2^{−k} ξ): a compactly supported B-spline
    /// whose finest step stays on the sampling grid.
    Cascade { coords: Vec<usize>, steps: Vec<i64>, top: Vec<i64>, p: u32, s: f64 },
}

impl SymbolicBump {
    pub fn arg(&self, xi: &[f64]) -> BumpArg {
        match self {
            SymbolicBump::Radial { coords, weights, .. } => {
                let x: Vec<f64> = coords.iter().map(|&h| xi[h]).collect();
                BumpArg::Radius(smooth_norm_unchecked(weights, &x))
            }
            SymbolicBump::Cascade { coords, steps, top, p, s } => {
                let len = (0..coords.len()).map(|c| (top[c] + 1 + steps[c] - 1) / steps[c] + 1).max().unwrap_or(1);
                let mut table = vec![1.0; len.max(1) as usize];
                for (c, &h) in coords.iter().enumerate() {
                    let mut suffix = vec![1.0; top[c].max(-1) as usize + 2];
                    for k in (0..=top[c]).rev() {
                        let t = (std::f64::consts::PI * s * (-(k as f64)).exp2() * xi[h]).cos();
                        suffix[k as usize] = suffix[k as usize + 1] * t.powi(2 * *p as i32);
                    }
                    for (l, v) in table.iter_mut().enumerate() {
                        let k = l as i64 * steps[c];
                        if k <= top[c] {
                            *v *= suffix[k as usize];
                        }
                    }
                }
                BumpArg::Table(table)
            }
        }
    }

    /// Transform of φ_ℓ^{(−ℓ)}.
    pub fn nu(&self, l: i64, a: &BumpArg) -> f64 {
        match (self, a) {
            (SymbolicBump::Radial { profile, .. }, BumpArg::Radius(r)) => profile.chi(r * (-(l as f64)).exp2()),
            (SymbolicBump::Cascade { .. }, BumpArg::Table(t)) => t.get(l as usize).copied().unwrap_or(1.0),
            _ => panic!("argument does not match bump kind"),
        }
    }

    pub fn is_frequency_localized(&self) -> bool {
        matches!(self, SymbolicBump::Radial { .. })
    }
}

/// φ_ℓ, ψ_ℓ and the tilded partners built with M = m + 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneParamFamily {
    pub bump: SymbolicBump,
    pub m: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Member {
    Phi,
    Psi,
    PhiTilde,
    PsiTilde,
}

impl OneParamFamily {
    pub fn new(bump: SymbolicBump, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::NonPositiveParameter("cancellation order m"));
        }
        Ok(OneParamFamily { bump, m })
    }

    pub fn big_m(&self) -> i32 {
        self.m as i32 + 1
    }

    pub fn nu(&self, l: i64, a: &BumpArg) -> f64 {
        self.bump.nu(l, a)
    }

    pub fn mu(&self, l: i64, a: &BumpArg) -> f64 {
        if l == 0 {
            self.nu(0, a)
        } else {
            self.nu(l, a) - self.nu(l - 1, a)
        }
    }

    pub fn nu_tilde(&self, l: i64, a: &BumpArg) -> f64 {
        let v = self.nu(l, a);
        let b = 1.0 - v * v;
        v * (0..self.big_m()).map(|k| b.powi(k)).sum::<f64>()
    }

    pub fn mu_tilde(&self, l: i64, a: &BumpArg) -> f64 {
        if l == 0 {
            return self.nu_tilde(0, a);
        }
        let v = self.nu(l, a);
        let w = self.nu(l - 1, a);
        let (bv, bw) = (1.0 - v * v, 1.0 - w * w);
        let mm = self.big_m();
        (v + w) * (0..mm).map(|k| bw.powi(mm - 1 - k) * bv.powi(k)).sum::<f64>()
    }

    pub fn member(&self, which: Member, l: i64, a: &BumpArg) -> f64 {
        match which {
            Member::Phi => self.nu(l, a),
            Member::Psi => self.mu(l, a),
            Member::PhiTilde => self.nu_tilde(l, a),
            Member::PsiTilde => self.mu_tilde(l, a),
        }
    }

    /// μ_ℓ μ̃_ℓ at scale ℓ.
    pub fn pair(&self, l: i64, a: &BumpArg) -> f64 {
        self.mu(l, a) * self.mu_tilde(l, a)
    }

    /// ν_ℓ ν̃_ℓ at scale ℓ.
    pub fn low_pair(&self, l: i64, a: &BumpArg) -> f64 {
        self.nu(l, a) * self.nu_tilde(l, a)
    }

    /// (1 − ν_Λ²)^M, the part of the identity not yet reproduced after scale Λ.
    pub fn tail(&self, l: i64, a: &BumpArg) -> f64 {
        let v = self.nu(l, a);
        (1.0 - v * v).powi(self.big_m())
    }

    /// Samples the member at scale ℓ from its transform.
    pub fn sample(&self, grid: &Grid, which: Member, l: i64) -> SampledFunction {
        SampledFunction::from_symbol(grid, |xi| Complex64::new(self.member(which, l, &self.bump.arg(xi)), 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    Tensor,
    Convolution,
}

/// Ψ_L (tensor) or Σ_L (convolution) over the admissible scales of a window.
#[derive(Clone, Debug)]
pub struct MultiNormFamily {
    pub kind: FamilyKind,
    pub structure: Structure,
    pub factors: Vec<OneParamFamily>,
    pub lattice: ScaleLattice,
    pub window: i64,
    pub scales: Vec<Scale>,
    covered: HashSet<Vec<i64>>,
}

fn lambdas(structure: &Structure, coords: &[usize]) -> Vec<f64> {
    coords.iter().map(|&h| structure.exponents.lambda_f64(h)).collect()
}

impl MultiNormFamily {
    pub fn from_factors(kind: FamilyKind, structure: &Structure, factors: Vec<OneParamFamily>, window: i64) -> Result<Self> {
        if factors.len() != structure.n() {
            return Err(Error::Precondition(format!("{} factor families for n = {}", factors.len(), structure.n())));
        }
        if window < 0 {
            return Err(Error::Window("negative window".into()));
        }
        let lattice = ScaleLattice::new(structure);
        let scales = lattice.enumerate(window);
        let mut covered = HashSet::new();
        for s in &scales {
            covered.extend(Tube::new(s).lattice());
        }
        Ok(MultiNormFamily { kind, structure: structure.clone(), factors, lattice, window, scales, covered })
    }

    /// Per-factor radial bumps in the block variables with the block dilations.
    pub fn tensor(structure: &Structure, profile: Profile, m: u32, window: i64) -> Result<Self> {
        let factors = (0..structure.n())
            .map(|i| {
                let coords = structure.exponents.block(i).to_vec();
                let weights = lambdas(structure, &coords);
                OneParamFamily::new(SymbolicBump::Radial { profile, coords, weights }, m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_factors(FamilyKind::Tensor, structure, factors, window)
    }

    /// Radial bumps on all of ℝ^d, one for each family of hat-dilations.
    pub fn convolution(structure: &Structure, profile: Profile, m: u32, window: i64) -> Result<Self> {
        let d = structure.d();
        let factors = (0..structure.n())
            .map(|i| {
                let weights = (0..d)
                    .map(|h| {
                        let j = structure.exponents.factor_of(h);
                        structure.matrix.ef(j, i) * structure.exponents.lambda_f64(h)
                    })
                    .collect();
                OneParamFamily::new(SymbolicBump::Radial { profile, coords: (0..d).collect(), weights }, m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_factors(FamilyKind::Convolution, structure, factors, window)
    }

    /// Tensor family with compactly supported B-spline factors matched to `grid`.
    pub fn space_localized(structure: &Structure, grid: &Grid, p: u32, s: f64, m: u32, window: i64) -> Result<Self> {
        if grid.dim() != structure.d() {
            return Err(Error::GridMismatch("grid dimension differs from the structure".into()));
        }
        let factors = (0..structure.n())
            .map(|i| {
                let coords = structure.exponents.block(i).to_vec();
                let mut steps = Vec::new();
                let mut top = Vec::new();
                for &h in &coords {
                    let lam = structure.exponents.lambda()[h];
                    if !lam.is_integer() {
                        return Err(Error::Precondition("space-localized families need integer exponents".into()));
                    }
                    steps.push(*lam.numer() as i64);
                    let ratio = s / grid.spacing(h);
                    if ratio < 1.0 || ratio.log2().fract() != 0.0 {
                        return Err(Error::GridMismatch("cascade step must be a power-of-two multiple of the spacing".into()));
                    }
                    top.push(ratio.log2() as i64);
                }
                OneParamFamily::new(SymbolicBump::Cascade { coords, steps, top, p, s }, m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_factors(FamilyKind::Tensor, structure, factors, window)
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn args(&self, xi: &[f64]) -> Vec<BumpArg> {
        self.factors.iter().map(|f| f.bump.arg(xi)).collect()
    }

    pub fn grid_args(&self, grid: &Grid) -> Vec<Vec<BumpArg>> {
        (0..grid.len()).map(|i| self.args(&grid.frequency(i))).collect()
    }

    fn product(&self, scale: &Scale, args: &[BumpArg], inside: Member, outside: Member) -> f64 {
        (0..self.n())
            .map(|i| {
                let w = if scale.in_dotted(i) { inside } else { outside };
                self.factors[i].member(w, scale.l[i], &args[i])
            })
            .product()
    }

    /// Transform of Ψ_L^{(−L)} (or Σ_L^{(−L)}).
    pub fn psi(&self, scale: &Scale, args: &[BumpArg]) -> f64 {
        self.product(scale, args, Member::Psi, Member::Phi)
    }

    pub fn psi_tilde(&self, scale: &Scale, args: &[BumpArg]) -> f64 {
        self.product(scale, args, Member::PsiTilde, Member::PhiTilde)
    }

    pub fn phi(&self, l: &[i64], args: &[BumpArg]) -> f64 {
        (0..self.n()).map(|i| self.factors[i].nu(l[i], &args[i])).product()
    }

    pub fn phi_tilde(&self, l: &[i64], args: &[BumpArg]) -> f64 {
        (0..self.n()).map(|i| self.factors[i].nu_tilde(l[i], &args[i])).product()
    }

    /// Π_i μ_i(ℓ_i): the term indexed by an arbitrary L ∈ ℕⁿ.
    pub fn lattice_term(&self, l: &[i64], args: &[BumpArg]) -> f64 {
        (0..self.n()).map(|i| self.factors[i].mu(l[i], &args[i])).product()
    }

    pub fn lattice_term_tilde(&self, l: &[i64], args: &[BumpArg]) -> f64 {
        (0..self.n()).map(|i| self.factors[i].mu_tilde(l[i], &args[i])).product()
    }

    /// Whether M ∈ ℕⁿ lies in the tube of some scale of the window.
    pub fn covers(&self, m: &[i64]) -> bool {
        self.covered.contains(m)
    }

    /// Symbol box containing the support of Ψ̂_L^{(−L)}: radii per factor (0 lower bound off the dotted set).
    pub fn support_box(&self, scale: &Scale) -> Option<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for (i, f) in self.factors.iter().enumerate() {
            let SymbolicBump::Radial { profile, .. } = &f.bump else {
                return None;
            };
            let t = (scale.l[i] as f64).exp2();
            let lo = if scale.in_dotted(i) { t * profile.inner / 2.0 } else { 0.0 };
            out.push((lo, t * profile.outer));
        }
        Some(out)
    }

    /// Scales ℓ of factor i whose pair term is nonzero at this argument.
    fn active(&self, i: usize, a: &BumpArg, tilde: bool) -> Vec<i64> {
        let cap = self.window * (to_f64(&self.structure.matrix.max_entry()).ceil() as i64 + 1) + 48;
        (0..=cap)
            .filter(|&l| {
                let f = &self.factors[i];
                let v = if tilde { f.pair(l, a) } else { f.mu(l, a) };
                v != 0.0
            })
            .collect()
    }
}

fn index_product(lists: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let ranges: Vec<Vec<i64>> = lists.to_vec();
    let mut out = vec![vec![]];
    for r in &ranges {
        let mut next = Vec::new();
        for p in &out {
            for &v in r {
                let mut q: Vec<i64> = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Residuals of the windowed reproducing sums at a set of probe frequencies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReproducingReport {
    pub probes: usize,
    /// Probes whose every active lattice term is covered by the window.
    pub inside: usize,
    /// max |Σ Ψ̂Ψ̃̂ − 1| over inside probes.
    pub max_residual: f64,
    /// max |Σ Ψ̂ − 1| over inside probes.
    pub max_residual_lp: f64,
    /// max over all probes of |(Σ Ψ̂Ψ̃̂ − 1) + uncovered tail|.
    pub max_tail_mismatch: f64,
}

pub fn reproducing_sum(family: &MultiNormFamily, args: &[BumpArg]) -> (f64, f64) {
    let mut t = 0.0;
    let mut lp = 0.0;
    for s in &family.scales {
        let p = family.psi(s, args);
        lp += p;
        if p != 0.0 {
            t += p * family.psi_tilde(s, args);
        }
    }
    (t, lp)
}

pub fn verify_reproducing(family: &MultiNormFamily, probes: &[Vec<f64>]) -> ReproducingReport {
    let mut rep = ReproducingReport { probes: probes.len(), ..Default::default() };
    for xi in probes {
        let args = family.args(xi);
        let (t, lp) = reproducing_sum(family, &args);
        let mut inside = true;
        let mut uncovered = 0.0;
        for tilde in [true, false] {
            let lists: Vec<Vec<i64>> = (0..family.n()).map(|i| family.active(i, &args[i], tilde)).collect();
            for m in index_product(&lists) {
                if !family.covers(&m) {
                    inside = false;
                    if tilde {
                        uncovered += (0..family.n()).map(|i| family.factors[i].pair(m[i], &args[i])).product::<f64>();
                    }
                }
            }
        }
        rep.max_tail_mismatch = rep.max_tail_mismatch.max((t - 1.0 + uncovered).abs());
        if inside {
            rep.inside += 1;
            rep.max_residual = rep.max_residual.max((t - 1.0).abs());
            rep.max_residual_lp = rep.max_residual_lp.max((lp - 1.0).abs());
        }
    }
    rep
}

/// Random frequencies in ℝ^d whose active terms all lie in the window.
pub fn mid_band_probes(family: &MultiNormFamily, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = family.structure.d();
    let mut out = Vec::with_capacity(count);
    let top = family.window as f64;
    for _ in 0..count * 2000 {
        if out.len() == count {
            break;
        }
        let xi: Vec<f64> = (0..d)
            .map(|_| {
                let mag = rng.gen_range(-2.0..top + 1.0f64).exp2();
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let args = family.args(&xi);
        let ok = (0..2).all(|pass| {
            let lists: Vec<Vec<i64>> = (0..family.n()).map(|i| family.active(i, &args[i], pass == 0)).collect();
            index_product(&lists).iter().all(|m| family.covers(m))
        });
        if ok {
            out.push(xi);
        }
    }
    out
}

/// max over probes and ℓ ≤ lmax of |ν_ℓν̃_ℓ − Σ_{ℓ′≤ℓ} μ_ℓ′μ̃_ℓ′| and of |ν_ℓν̃_ℓ + (1 − ν_ℓ²)^M − 1|.
pub fn telescoping_residual(family: &OneParamFamily, lmax: i64, probes: &[Vec<f64>]) -> (f64, f64) {
    let mut tele: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for xi in probes {
        let a = family.bump.arg(xi);
        let mut acc = 0.0;
        for l in 0..=lmax {
            acc += family.pair(l, &a);
            let lp = family.low_pair(l, &a);
            tele = tele.max((lp - acc).abs());
            tail = tail.max((lp + family.tail(l, &a) - 1.0).abs());
        }
    }
    (tele, tail)
}

/// |Φ̂_L Φ̃̂_L − Σ_{L′ ∈ 𝓛, L′ ≤ L} Ψ̂_L′ Ψ̃̂_L′| at one frequency.
pub fn restricted_sum_residual(family: &MultiNormFamily, scale: &Scale, args: &[BumpArg]) -> f64 {
    let lhs = family.phi(&scale.l, args) * family.phi_tilde(&scale.l, args);
    let rhs: f64 = family
        .scales
        .iter()
        .filter(|s| s.l.iter().zip(&scale.l).all(|(a, b)| a <= b))
        .map(|s| family.psi(s, args) * family.psi_tilde(s, args))
        .sum();
    (lhs - rhs).abs()
}

/// t̃_j = min_i e(j,i) t_i.
pub fn tilde_t(structure: &Structure, t: &[Rat]) -> Vec<Rat> {
    let n = structure.n();
    (0..n)
        .map(|j| (0..n).map(|i| structure.matrix.e(j, i) * t[i]).min().unwrap())
        .collect()
}

/// Result of rewriting f_1^{(−ℓ_1)_1} ∗ … ∗ f_n^{(−ℓ_n)_n} as k^{(−L)}.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub scale: Vec<i64>,
    pub t_tilde: Vec<Rat>,
    pub kernel: SampledFunction,
    pub seminorm: f64,
    pub factor_seminorms: Vec<f64>,
}

impl Collapse {
    pub fn ratio(&self) -> f64 {
        self.seminorm / self.factor_seminorms.iter().product::<f64>()
    }
}

/// max_{|α|,|β| ≤ order} sup |x^α ∂^β g| on the grid, derivatives taken spectrally.
pub fn schwartz_seminorm(f: &SampledFunction, order: u32) -> f64 {
    let g = &f.grid;
    let d = g.dim();
    let multi: Vec<Vec<u32>> = crate::scales::product(&vec![(0, order as i64); d])
        .into_iter()
        .filter(|a| a.iter().sum::<i64>() <= order as i64)
        .map(|a| a.into_iter().map(|v| v as u32).collect())
        .collect();
    let spec = f.spectrum();
    let points: Vec<Vec<f64>> = (0..g.len()).map(|i| g.point(i)).collect();
    let mut best: f64 = 0.0;
    for beta in &multi {
        let ds: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let xi = g.frequency(i);
                let mut v = spec[i];
                for h in 0..d {
                    v *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi[h]).powu(beta[h]);
                }
                v
            })
            .collect();
        let dg = SampledFunction::from_spectrum(g, ds).unwrap();
        for alpha in &multi {
            for (i, x) in points.iter().enumerate() {
                let w: f64 = (0..d).map(|h| x[h].powi(alpha[h] as i32)).product();
                best = best.max((dg.data[i] * w).norm());
            }
        }
    }
    best
}

/// Collapses an n-fold hat-rescaled convolution onto the scale `ell` (or its tube owner if ℓ ∉ 𝓛).
pub fn convolution_collapse(
    structure: &Structure,
    grid: &Grid,
    factors: &[&dyn Fn(&[f64]) -> Complex64],
    ell: &[i64],
    order: u32,
) -> Result<Collapse> {
    let n = structure.n();
    if factors.len() != n || ell.len() != n {
        return Err(Error::Precondition("one factor and one scale per hat-dilation family".into()));
    }
    let lattice = ScaleLattice::new(structure);
    let scale = match lattice.is_admissible(ell) {
        Some(s) => s.l,
        None => lattice.owner(ell).l,
    };
    let t_tilde = tilde_t(structure, &ell.iter().map(|&v| Rat::from_integer(v as i128)).collect::<Vec<_>>());
    let exps = &structure.exponents;
    let symbol = |xi: &[f64]| -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for (i, f) in factors.iter().enumerate() {
            let zeta: Vec<f64> = (0..xi.len())
                .map(|h| {
                    let j = exps.factor_of(h);
                    let e = scale[j] as f64 - structure.matrix.ef(j, i) * ell[i] as f64;
                    (e * exps.lambda_f64(h)).exp2() * xi[h]
                })
                .collect();
            v *= f(&zeta);
        }
        v
    };
    let kernel = SampledFunction::from_symbol(grid, symbol);
    let factor_seminorms = factors
        .iter()
        .map(|f| schwartz_seminorm(&SampledFunction::from_symbol(grid, |xi| f(xi)), order))
        .collect();
    let seminorm = schwartz_seminorm(&kernel, order);
    Ok(Collapse { scale, t_tilde, kernel, seminorm, factor_seminorms })
}
