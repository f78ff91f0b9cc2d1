//! Multipliers, dyadic kernel synthesis, symbol validation and local Riesz symbols.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calderon::{MultiNormFamily, Profile};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::matrix::Structure;
use crate::scales::{product, Scale};

/// The r > 0 with Σ_h (r^{−w_h} x_h)² = 1: smooth away from 0 and homogeneous for x_h ↦ t^{w_h} x_h.
pub fn smooth_homogeneous_norm(weights: &[f64], x: &[f64]) -> Result<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroPoint);
    }
    Ok(smooth_norm_unchecked(weights, x))
}

pub(crate) fn smooth_norm_unchecked(weights: &[f64], x: &[f64]) -> f64 {
    // G(u) = Σ x_h² e^{−2 w_h u} − 1 is decreasing in u = ln r.
    let terms: Vec<(f64, f64)> = weights
        .iter()
        .zip(x)
        .filter(|(_, &v)| v != 0.0)
        .map(|(&w, &v)| (w, (v * v).ln()))
        .collect();
    if terms.is_empty() {
        return 0.0;
    }
    let g = |u: f64| -> (f64, f64) {
        let mut s = -1.0;
        let mut ds = 0.0;
        for &(w, l2) in &terms {
            let t = (l2 - 2.0 * w * u).exp();
            s += t;
            ds -= 2.0 * w * t;
        }
        (s, ds)
    };
    let spread = (terms.len() as f64).ln() / 2.0;
    let mut lo = terms.iter().map(|&(w, l2)| l2 / (2.0 * w)).fold(f64::NEG_INFINITY, f64::max);
    let mut hi = terms.iter().map(|&(w, l2)| (l2 / 2.0 + spread) / w).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return lo.exp();
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = g(u);
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - v / dv;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - u).abs() <= 1e-16 * u.abs().max(1.0) {
            u = next;
            break;
        }
        u = next;
    }
    u.exp()
}


/// Weights of the hat-dilation δ̂^i on each coordinate: e(j,i)·λ_h for h in block j.
pub fn hat_weights(structure: &Structure, i: usize) -> Vec<f64> {
    (0..structure.d())
        .map(|h| structure.matrix.ef(structure.exponents.factor_of(h), i) * structure.exponents.lambda_f64(h))
        .collect()
}

/// A real symbol m(ξ) on ℝ^d.
#[derive(Clone)]
pub struct Multiplier {
    pub name: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multiplier({})", self.name)
    }
}

impl Multiplier {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Multiplier { name: name.into(), f: Arc::new(f) }
    }

    pub fn one() -> Self {
        Self::new("1", |_| 1.0)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        (self.f)(xi)
    }

    pub fn product(&self, other: &Multiplier) -> Multiplier {
        let (a, b) = (self.f.clone(), other.f.clone());
        Multiplier::new(format!("({})*({})", self.name, other.name), move |xi| a(xi) * b(xi))
    }

    pub fn from_expr(expr: &Expr, structure: &Structure) -> Self {
        let e = expr.clone();
        let s = structure.clone();
        Multiplier::new(expr.to_string(), move |xi| e.eval(&s, xi))
    }
}

/// θ: 1 on |ξ| ≤ 1, 0 on |ξ| ≥ 2.
pub fn theta(r: f64) -> f64 {
    Profile { inner: 1.0, outer: 2.0 }.chi(r)
}

/// K̂♭_{i,h}(ξ) = ξ_h / |ξ|_i^{w_h} · (1 − θ(|ξ|_i)), |·|_i the smooth norm of δ̂^i; `None` is δ₀.
pub fn riesz_local(structure: &Structure, i: usize, h: Option<usize>) -> Result<Multiplier> {
    let Some(h) = h else {
        return Ok(Multiplier::one());
    };
    if i >= structure.n() || h >= structure.d() {
        return Err(Error::Index { index: i.max(h), size: structure.d() });
    }
    let w = hat_weights(structure, i);
    Ok(Multiplier::new(format!("riesz({},{})", i + 1, h + 1), move |xi| {
        if xi.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        let r = smooth_norm_unchecked(&w, xi);
        xi[h] / r.powf(w[h]) * (1.0 - theta(r))
    }))
}

/// R_J: the product of K̂♭_{i,j_i} over the hat-dilation families.
pub fn riesz_product(structure: &Structure, j: &[Option<usize>]) -> Result<Multiplier> {
    let mut m = Multiplier::one();
    for (i, &h) in j.iter().enumerate() {
        m = m.product(&riesz_local(structure, i, h)?);
    }
    Ok(m)
}

/// A local Mihlin–Hörmander symbol for δ̂^i: a smooth degree-0 function of the δ̂^i sphere, cut off near 0.
pub fn local_symbol(structure: &Structure, i: usize, phase: f64) -> Multiplier {
    let w = hat_weights(structure, i);
    Multiplier::new(format!("mh{}", i + 1), move |xi| {
        if xi.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        let r = smooth_norm_unchecked(&w, xi);
        let u: f64 = xi.iter().zip(&w).enumerate().map(|(h, (x, wh))| (h as f64 + phase) * x / r.powf(*wh)).sum();
        (1.0 + 0.5 * u.sin()) * (1.0 - theta(r))
    })
}

fn derivative(m: &Multiplier, xi: &mut Vec<f64>, alpha: &mut [u32], steps: &[f64]) -> f64 {
    let Some(h) = alpha.iter().position(|&a| a > 0) else {
        return m.eval(xi);
    };
    alpha[h] -= 1;
    let x0 = xi[h];
    xi[h] = x0 + steps[h];
    let a = derivative(m, xi, alpha, steps);
    xi[h] = x0 - steps[h];
    let b = derivative(m, xi, alpha, steps);
    xi[h] = x0;
    alpha[h] += 1;
    (a - b) / (2.0 * steps[h])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaConstant {
    pub alpha: Vec<u32>,
    /// sup |∂^α m|·Π(1+N̂_i)^{[[α^i]]} over samples reaching 2^{range}.
    pub near: f64,
    /// the same over samples reaching 2^{2·range}.
    pub far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub constants: Vec<AlphaConstant>,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn constant(&self, alpha: &[u32]) -> Option<&AlphaConstant> {
        self.constants.iter().find(|c| c.alpha == alpha)
    }
}

/// Frequencies whose factor scales are log-uniform in [2^{−1}, 2^{range}].
pub fn symbol_samples(structure: &Structure, count: usize, range: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = &structure.exponents;
    (0..count)
        .map(|_| {
            let t: Vec<f64> = (0..structure.n()).map(|_| rng.gen_range(-1.0..range)).collect();
            (0..structure.d())
                .map(|h| {
                    let v = (t[exps.factor_of(h)] * exps.lambda_f64(h)).exp2() * rng.gen_range(0.5..1.0);
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect()
}

const GROWTH_TOLERANCE: f64 = 4.0;

/// Estimates the multiplier constants C_α for |α| ≤ max_order on `samples` frequencies reaching 2^6 and
/// on those plus `samples` more reaching 2^12 (equal density in log scale). A symbol passes when every
/// constant is finite and grows by at most a factor 4 from the first set to the second.
pub fn validate_multiplier(m: &Multiplier, structure: &Structure, max_order: u32, samples: usize, seed: u64) -> Result<ValidationReport> {
    let d = structure.d();
    let exps = &structure.exponents;
    let alphas: Vec<Vec<u32>> = product(&vec![(0, max_order as i64); d])
        .into_iter()
        .filter(|a| a.iter().sum::<i64>() <= max_order as i64)
        .map(|a| a.into_iter().map(|v| v as u32).collect())
        .collect();
    let range = 6.0;
    let near = symbol_samples(structure, samples, range, seed);
    let extra = symbol_samples(structure, samples, 2.0 * range, seed ^ 0x5eed);
    let sets = [near.clone(), near.into_iter().chain(extra).collect::<Vec<_>>()];
    let mut sups = vec![[0.0f64; 2]; alphas.len()];
    for (k, set) in sets.iter().enumerate() {
        for xi in set {
            let nh: Vec<f64> = (0..structure.n()).map(|i| 1.0 + structure.norm_nhat(i, xi)).collect();
            let steps: Vec<f64> = (0..d).map(|h| 1e-3 * nh[exps.factor_of(h)].powf(exps.lambda_f64(h))).collect();
            for (a, alpha) in alphas.iter().enumerate() {
                let mut x = xi.clone();
                let mut al = alpha.clone();
                let v = derivative(m, &mut x, &mut al, &steps);
                if !v.is_finite() {
                    return Err(Error::Precondition(format!("symbol {} is not finite at {xi:?}", m.name)));
                }
                let weight: f64 = (0..d).map(|h| nh[exps.factor_of(h)].powf(exps.lambda_f64(h) * alpha[h] as f64)).product();
                sups[a][k] = sups[a][k].max(v.abs() * weight);
            }
        }
    }
    let mut failures = Vec::new();
    let constants: Vec<AlphaConstant> = alphas
        .iter()
        .zip(&sups)
        .map(|(alpha, s)| {
            if s[1] > GROWTH_TOLERANCE * s[0].max(1e-6) {
                failures.push(format!("alpha {alpha:?}: constant grows from {:.3e} to {:.3e}", s[0], s[1]));
            }
            AlphaConstant { alpha: alpha.clone(), near: s[0], far: s[1] }
        })
        .collect();
    Ok(ValidationReport { pass: failures.is_empty(), constants, failures })
}

/// Per-scale pieces η_L with m_L = m(2^L ·)Ψ̂_L over the scales of a family window.
#[derive(Clone, Debug)]
pub struct DyadicKernel {
    pub multiplier: Multiplier,
    pub family: MultiNormFamily,
}

impl DyadicKernel {
    pub fn scales(&self) -> &[Scale] {
        &self.family.scales
    }

    /// m_L(ζ) = m(2^L ζ) Ψ̂_L(ζ), the transform of η_L.
    pub fn piece(&self, scale: &Scale, zeta: &[f64]) -> f64 {
        let exps = &self.family.structure.exponents;
        let xi: Vec<f64> = (0..zeta.len())
            .map(|h| ((scale.l[exps.factor_of(h)] as f64) * exps.lambda_f64(h)).exp2() * zeta[h])
            .collect();
        self.multiplier.eval(&xi) * self.family.psi(scale, &self.family.args(&xi))
    }

    /// Σ_L m_L(2^{−L} ξ).
    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let args = self.family.args(xi);
        let m = self.multiplier.eval(xi);
        self.family.scales.iter().map(|s| m * self.family.psi(s, &args)).sum()
    }
}

pub fn synthesize_kernel(m: &Multiplier, family: &MultiNormFamily) -> Result<DyadicKernel> {
    if !family.factors.iter().all(|f| f.bump.is_frequency_localized()) {
        return Err(Error::Precondition("kernel synthesis needs a frequency-localized family".into()));
    }
    Ok(DyadicKernel { multiplier: m.clone(), family: family.clone() })
}

/// Frequency-side application of Σ_L η_L^{(−L)}; errors if more than `tol` of f's spectral mass lies
/// where the window's partition of unity is incomplete.
pub fn apply_kernel(kernel: &DyadicKernel, f: &SampledFunction, tol: f64) -> Result<SampledFunction> {
    let g = &f.grid;
    let spec = f.spectrum();
    let mut outside = 0.0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(g.len());
    for (i, v) in spec.iter().enumerate() {
        let xi = g.frequency(i);
        let args = kernel.family.args(&xi);
        let cover: f64 = kernel.family.scales.iter().map(|s| kernel.family.psi(s, &args)).sum();
        total += v.norm_sqr();
        if (cover - 1.0).abs() > 1e-12 {
            outside += v.norm_sqr();
        }
        out.push(v * (kernel.multiplier.eval(&xi) * cover));
    }
    if total > 0.0 && (outside / total).sqrt() > tol {
        return Err(Error::Window(format!(
            "{:.3e} of the spectrum lies beyond the window's band",
            (outside / total).sqrt()
        )));
    }
    SampledFunction::from_spectrum(g, out)
}

/// Direct multiplication of the spectrum by m.
pub fn apply_symbol(m: &Multiplier, f: &SampledFunction) -> SampledFunction {
    f.apply_symbol(|xi| Complex64::new(m.eval(xi), 0.0))
}

pub fn sample_grid_band(grid: &Grid) -> f64 {
    (0..grid.dim()).map(|h| grid.nyquist(h)).fold(f64::INFINITY, f64::min)
}

/// Expression mini-format for multipliers (grammar version 1).
///
/// ```text
/// expr    := term (("+" | "-") term)*
/// term    := unary (("*" | "/") unary)*
/// unary   := "-" unary | power
/// power   := atom ("^" integer)?
/// atom    := number | "x" k | "b" i | "nhat" i | "rho" i | "pi"
///          | ("cut" | "hi" | "sqrt" | "abs") "(" expr ")" | "(" expr ")"
/// ```
///
/// `x k` is ξ_k, `b i` the smooth homogeneous norm of block i, `nhat i` the max-type norm N̂_i,
/// `rho i` the smooth norm for δ̂^i (all 1-based); `cut` is θ (1 below 1, 0 above 2) and `hi` is 1 − θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Block(usize),
    NHat(usize),
    Rho(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(String, Box<Expr>),
}

pub const EXPR_GRAMMAR_VERSION: u32 = 1;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coord(k) => write!(f, "x{}", k + 1),
            Expr::Block(i) => write!(f, "b{}", i + 1),
            Expr::NHat(i) => write!(f, "nhat{}", i + 1),
            Expr::Rho(i) => write!(f, "rho{}", i + 1),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Call(n, a) => write!(f, "{n}({a})"),
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?}", p.tokens[p.pos])));
        }
        Ok(e)
    }

    /// Checks indices against a structure.
    pub fn check(&self, structure: &Structure) -> Result<()> {
        let (n, d) = (structure.n(), structure.d());
        let bad = |k: usize, size: usize| if k >= size { Err(Error::Index { index: k + 1, size }) } else { Ok(()) };
        match self {
            Expr::Num(_) => Ok(()),
            Expr::Coord(k) => bad(*k, d),
            Expr::Block(i) | Expr::NHat(i) | Expr::Rho(i) => bad(*i, n),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.check(structure),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.check(structure)?;
                b.check(structure)
            }
        }
    }

    pub fn eval(&self, s: &Structure, xi: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(k) => xi[*k],
            Expr::Block(i) => {
                let b = s.exponents.block(*i);
                let w: Vec<f64> = b.iter().map(|&h| s.exponents.lambda_f64(h)).collect();
                let x: Vec<f64> = b.iter().map(|&h| xi[h]).collect();
                smooth_norm_unchecked(&w, &x)
            }
            Expr::NHat(i) => s.norm_nhat(*i, xi),
            Expr::Rho(i) => smooth_norm_unchecked(&hat_weights(s, *i), xi),
            Expr::Neg(a) => -a.eval(s, xi),
            Expr::Add(a, b) => a.eval(s, xi) + b.eval(s, xi),
            Expr::Sub(a, b) => a.eval(s, xi) - b.eval(s, xi),
            Expr::Mul(a, b) => a.eval(s, xi) * b.eval(s, xi),
            Expr::Div(a, b) => a.eval(s, xi) / b.eval(s, xi),
            Expr::Pow(a, k) => a.eval(s, xi).powi(*k),
            Expr::Call(n, a) => {
                let v = a.eval(s, xi);
                match n.as_str() {
                    "cut" => theta(v),
                    "hi" => 1.0 - theta(v),
                    "sqrt" => v.sqrt(),
                    _ => v.abs(),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == 'e'
                || ((chars[i] == '-' || chars[i] == '+') && chars[i - 1] == 'e'))
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| Error::Parse(format!("bad number {s}")))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat('+') {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat('-') {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat('*') {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat('/') {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let a = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            match self.peek() {
                Some(Tok::Num(v)) if v.fract() == 0.0 => {
                    let k = *v as i32;
                    self.pos += 1;
                    return Ok(Expr::Pow(Box::new(a), if neg { -k } else { k }));
                }
                _ => return Err(Error::Parse("exponent must be an integer".into())),
            }
        }
        Ok(a)
    }

    fn index(&mut self) -> Result<usize> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 1.0 => {
                let k = *v as usize - 1;
                self.pos += 1;
                Ok(k)
            }
            _ => Err(Error::Parse("expected a 1-based index".into())),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::Coord(self.index()?)),
                    "b" => Ok(Expr::Block(self.index()?)),
                    "nhat" => Ok(Expr::NHat(self.index()?)),
                    "rho" => Ok(Expr::Rho(self.index()?)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "cut" | "hi" | "sqrt" | "abs" => {
                        self.expect('(')?;
                        let e = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::Call(name, Box::new(e)))
                    }
                    _ => Err(Error::Parse(format!("unknown name {name}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::StandardMatrix;

    fn s2() -> Structure {
        Structure::isotropic(StandardMatrix::from_integers(&[&[1, 1], &[2, 1]]).unwrap())
    }

    #[test]
    fn isotropic_is_euclidean() {
        let r = smooth_homogeneous_norm(&[1.0, 1.0, 1.0], &[1.0, 2.0, -2.0]).unwrap();
        assert!((r - 3.0).abs() < 1e-14);
        assert!(smooth_homogeneous_norm(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn unit_sphere_and_homogeneity() {
        let w = [1.0, 2.0, 0.5];
        let x = [0.6, 0.0, -0.8];
        assert!((smooth_homogeneous_norm(&w, &x).unwrap() - 1.0).abs() < 1e-14);
        let y = [0.3, -1.7, 4.0];
        let r = smooth_homogeneous_norm(&w, &y).unwrap();
        let t: f64 = 3.7;
        let ty: Vec<f64> = y.iter().zip(&w).map(|(v, wi)| v * t.powf(*wi)).collect();
        assert!((smooth_homogeneous_norm(&w, &ty).unwrap() / (t * r) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_symbol_constants() {
        let r = validate_multiplier(&Multiplier::one(), &s2(), 3, 200, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.constant(&[0, 0]).unwrap().near, 1.0);
        for c in &r.constants {
            if c.alpha.iter().sum::<u32>() > 0 {
                assert_eq!(c.near, 0.0);
            }
        }
    }

    #[test]
    fn unbounded_symbol_fails_at_order_zero() {
        let m = Multiplier::new("x1", |xi| xi[0]);
        let r = validate_multiplier(&m, &s2(), 1, 200, 1).unwrap();
        assert!(!r.pass);
        assert!(r.failures[0].contains("[0, 0]"));
        let nan = Multiplier::new("nan", |_| f64::NAN);
        assert!(validate_multiplier(&nan, &s2(), 0, 5, 1).is_err());
    }

    #[test]
    fn riesz_symbols() {
        let s = s2();
        let r = riesz_local(&s, 0, Some(0)).unwrap();
        let id = riesz_product(&s, &[None, None]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let xi = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
            assert!((r.eval(&xi) + r.eval(&[-xi[0], xi[1]])).abs() < 1e-15);
            assert!(r.eval(&xi).abs() <= 1.0 + 1e-12);
            assert_eq!(id.eval(&xi), 1.0);
        }
        assert_eq!(r.eval(&[0.1, 0.1]), 0.0);
    }

    #[test]
    fn expressions() {
        let s = s2();
        let e = Expr::parse("x1 * hi(rho1) / rho1 ^ 1 + 2*cut(b2) - -3").unwrap();
        e.check(&s).unwrap();
        let xi = [3.0, 4.0];
        let want = 3.0 * (1.0 - theta(smooth_norm_unchecked(&hat_weights(&s, 0), &xi)))
            / smooth_norm_unchecked(&hat_weights(&s, 0), &xi)
            + 2.0 * theta(4.0)
            + 3.0;
        assert!((e.eval(&s, &xi) - want).abs() < 1e-14);
        assert!((Expr::parse("nhat2").unwrap().eval(&s, &[9.0, 2.0]) - 9.0).abs() < 1e-12);
        assert!(Expr::parse("x3").unwrap().check(&s).is_err());
        assert!(Expr::parse("x1 +").is_err());
        assert!(Expr::parse("foo(x1)").is_err());
        assert!(Expr::parse("x1^0.5").is_err());
        let round = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(round.eval(&s, &xi), e.eval(&s, &xi));
    }
}
