//! Periodic sampling grids, DFT convolution, quadrature and the binary array format.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample layout: `n[h]` points per coordinate over a period `period[h]` (both powers of two).
///
/// Sample k of axis h sits at kΔ for k < N/2 and (k − N)Δ otherwise; frequency k is k/P (cycles)
/// with the same wrap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: Vec<usize>,
    pub period: Vec<f64>,
}

impl Grid {
    pub fn new(n: Vec<usize>, period: Vec<f64>) -> Result<Self> {
        if n.len() != period.len() || n.is_empty() {
            return Err(Error::GridMismatch("axis count".into()));
        }
        for (&m, &p) in n.iter().zip(&period) {
            if !m.is_power_of_two() || m < 2 {
                return Err(Error::GridMismatch(format!("{m} points is not a power of two")));
            }
            if !(p > 0.0) || p.log2().fract() != 0.0 {
                return Err(Error::GridMismatch(format!("period {p} is not a power of two")));
            }
        }
        Ok(Grid { n, period })
    }

    pub fn uniform(d: usize, n: usize, period: f64) -> Result<Self> {
        Self::new(vec![n; d], vec![period; d])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, h: usize) -> f64 {
        self.period[h] / self.n[h] as f64
    }

    /// Δ^d, the quadrature weight.
    pub fn cell(&self) -> f64 {
        (0..self.dim()).map(|h| self.spacing(h)).product()
    }

    pub fn volume(&self) -> f64 {
        self.period.iter().product()
    }

    fn signed(&self, h: usize, k: usize) -> f64 {
        let n = self.n[h];
        if k < n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    }

    pub fn coord(&self, h: usize, k: usize) -> f64 {
        self.signed(h, k) * self.spacing(h)
    }

    pub fn freq(&self, h: usize, k: usize) -> f64 {
        self.signed(h, k) / self.period[h]
    }

    /// Largest representable frequency on axis h.
    pub fn nyquist(&self, h: usize) -> f64 {
        self.n[h] as f64 / (2.0 * self.period[h])
    }

    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for h in (0..self.dim()).rev() {
            out[h] = idx % self.n[h];
            idx /= self.n[h];
        }
        out
    }

    pub fn ravel(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.n).fold(0, |acc, (&ki, &ni)| acc * ni + ki)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx).iter().enumerate().map(|(h, &k)| self.coord(h, k)).collect()
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx).iter().enumerate().map(|(h, &k)| self.freq(h, k)).collect()
    }

    /// Index of the sample nearest to x (wrapping periodically).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let k: Vec<usize> = (0..self.dim())
            .map(|h| {
                let n = self.n[h] as i64;
                let v = (x[h] / self.spacing(h)).round() as i64;
                v.rem_euclid(n) as usize
            })
            .collect();
        self.ravel(&k)
    }
}

/// A complex function sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

fn fft_axes(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let d = grid.dim();
    let mut stride = 1;
    for h in (0..d).rev() {
        let n = grid.n[h];
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let block = stride * n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                for k in 0..n {
                    line[k] = data[outer + inner + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    data[outer + inner + k * stride] = line[k];
                }
            }
        }
        stride = block;
    }
}

impl SampledFunction {
    pub fn new(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} grid points", data.len(), grid.len())));
        }
        Ok(SampledFunction { grid, data })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SampledFunction { grid: grid.clone(), data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        SampledFunction { grid: grid.clone(), data }
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// f̂(ξ_k) ≈ ∫ f(x) e^{−2πixξ_k} dx by the periodic Riemann sum.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut d = self.data.clone();
        fft_axes(&self.grid, &mut d, false);
        let c = self.grid.cell();
        d.iter_mut().for_each(|v| *v *= c);
        d
    }

    pub fn from_spectrum(grid: &Grid, spec: Vec<Complex64>) -> Result<Self> {
        if spec.len() != grid.len() {
            return Err(Error::GridMismatch("spectrum length".into()));
        }
        let mut d = spec;
        fft_axes(grid, &mut d, true);
        let c = 1.0 / grid.volume();
        d.iter_mut().for_each(|v| *v *= c);
        Ok(SampledFunction { grid: grid.clone(), data: d })
    }

    /// Spectrum sampled from a closed-form transform.
    pub fn from_symbol(grid: &Grid, symbol: impl Fn(&[f64]) -> Complex64) -> Self {
        let spec = (0..grid.len()).map(|i| symbol(&grid.frequency(i))).collect();
        Self::from_spectrum(grid, spec).unwrap()
    }

    /// Multiply the spectrum by a symbol evaluated at the grid frequencies.
    pub fn apply_symbol(&self, symbol: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut s = self.spectrum();
        for (i, v) in s.iter_mut().enumerate() {
            *v *= symbol(&self.grid.frequency(i));
        }
        Self::from_spectrum(&self.grid, s).unwrap()
    }

    pub fn convolve(&self, other: &SampledFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("convolution operands live on different grids".into()));
        }
        let a = self.spectrum();
        let b = other.spectrum();
        Self::from_spectrum(&self.grid, a.iter().zip(&b).map(|(x, y)| x * y).collect())
    }

    /// Unit mass at the origin sample.
    pub fn delta(grid: &Grid) -> Self {
        let mut f = Self::zeros(grid);
        f.data[0] = Complex64::new(1.0 / grid.cell(), 0.0);
        f
    }

    pub fn quadrature_norm(&self, p: u32) -> f64 {
        let c = self.grid.cell();
        match p {
            1 => self.data.iter().map(|v| v.norm()).sum::<f64>() * c,
            2 => (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * c).sqrt(),
            _ => {
                let p = p as f64;
                (self.data.iter().map(|v| v.norm().powf(p)).sum::<f64>() * c).powf(1.0 / p)
            }
        }
    }

    pub fn integral(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() * self.grid.cell()
    }

    /// L² norm computed on the frequency side.
    pub fn spectral_l2(&self) -> f64 {
        (self.spectrum().iter().map(|v| v.norm_sqr()).sum::<f64>() / self.grid.volume()).sqrt()
    }

    /// max over the other coordinates of |∫ x_B^α f dx_B| for the coordinates `block`.
    pub fn moment(&self, alpha: &[u32], block: &[usize]) -> f64 {
        let g = &self.grid;
        let mut acc: std::collections::HashMap<Vec<usize>, Complex64> = std::collections::HashMap::new();
        let w: f64 = block.iter().map(|&h| g.spacing(h)).product();
        for idx in 0..g.len() {
            let k = g.unravel(idx);
            let mut weight = 1.0;
            for (a, &h) in alpha.iter().zip(block) {
                weight *= g.coord(h, k[h]).powi(*a as i32);
            }
            let rest: Vec<usize> = (0..g.dim()).filter(|h| !block.contains(h)).map(|h| k[h]).collect();
            *acc.entry(rest).or_default() += self.data[idx] * weight * w;
        }
        acc.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("sum operands live on different grids".into()));
        }
        Ok(SampledFunction {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        SampledFunction { grid: self.grid.clone(), data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn abs(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fraction of L² mass in the outer shell |x_h| > P/4 of some axis; large values signal wrap-around.
    pub fn wrap_residual(&self) -> f64 {
        let g = &self.grid;
        let total: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = (0..g.len())
            .filter(|&i| {
                let x = g.point(i);
                (0..g.dim()).any(|h| x[h].abs() > g.period[h] / 4.0)
            })
            .map(|i| self.data[i].norm_sqr())
            .sum();
        (outer / total).sqrt()
    }

    /// g(x) = 2^{Σ s_h} f(2^{s_h} x_h) with integer per-coordinate exponents s_h ≥ 0.
    ///
    /// Samples of the compressed function are read off the original grid; f is taken to vanish
    /// outside the fundamental box. The spectrum above Nyquist·2^{−s_h} must be negligible.
    pub fn compress(&self, s: &[i64], tol: f64) -> Result<Self> {
        let g = &self.grid;
        if s.iter().all(|&v| v == 0) {
            return Ok(self.clone());
        }
        if s.iter().any(|&v| v < 0) {
            return Err(Error::Precondition("compression exponents must be nonnegative".into()));
        }
        let spec = self.spectrum();
        let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        let above: f64 = (0..g.len())
            .filter(|&i| {
                let xi = g.frequency(i);
                (0..g.dim()).any(|h| xi[h].abs() > g.nyquist(h) / (s[h] as f64).exp2())
            })
            .map(|i| spec[i].norm_sqr())
            .sum();
        if total > 0.0 && (above / total).sqrt() > tol {
            return Err(Error::Nyquist(format!(
                "relative spectral mass {:.3e} beyond the compressed band",
                (above / total).sqrt()
            )));
        }
        let jac: f64 = s.iter().map(|&v| (v as f64).exp2()).product();
        let data = (0..g.len())
            .map(|idx| {
                let k = g.unravel(idx);
                let mut src = Vec::with_capacity(g.dim());
                for h in 0..g.dim() {
                    let n = g.n[h] as i64;
                    let sk = if (k[h] as i64) < n / 2 { k[h] as i64 } else { k[h] as i64 - n };
                    let t = sk << s[h];
                    if t < -n / 2 || t >= n / 2 {
                        return Complex64::new(0.0, 0.0);
                    }
                    src.push(t.rem_euclid(n) as usize);
                }
                self.data[g.ravel(&src)] * jac
            })
            .collect();
        Ok(SampledFunction { grid: g.clone(), data })
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&DTYPE_COMPLEX_F64.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        for &n in &self.grid.n {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &p in &self.grid.period {
            w.write_all(&p.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a sampled-function file".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format version {version}")));
        }
        let dtype = read_u32(r)?;
        if dtype != DTYPE_COMPLEX_F64 {
            return Err(Error::Parse(format!("unsupported dtype {dtype}")));
        }
        let d = read_u32(r)? as usize;
        if d == 0 || d > 16 {
            return Err(Error::Parse(format!("bad dimension count {d}")));
        }
        let mut n = Vec::with_capacity(d);
        for _ in 0..d {
            n.push(read_u64(r)? as usize);
        }
        let mut period = Vec::with_capacity(d);
        for _ in 0..d {
            period.push(f64::from_bits(read_u64(r)?));
        }
        let grid = Grid::new(n, period)?;
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = f64::from_bits(read_u64(r)?);
            let im = f64::from_bits(read_u64(r)?);
            data.push(Complex64::new(re, im));
        }
        Ok(SampledFunction { grid, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

const MAGIC: &[u8; 4] = b"MNSF";
const FORMAT_VERSION: u32 = 1;
const DTYPE_COMPLEX_F64: u32 = 1;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
