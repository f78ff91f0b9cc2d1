//! Exponents, standard matrices and the two families of dilations.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rat};

/// Homogeneity exponents λ_h and the assignment of scalar coordinates to factors.
///
/// Indices are 0-based. `blocks[i]` lists the coordinates of factor `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exponents {
    lambda: Vec<Rat>,
    blocks: Vec<Vec<usize>>,
}

impl Exponents {
    pub fn new(lambda: Vec<Rat>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let d = lambda.len();
        if d == 0 {
            return Err(Error::Exponents("no coordinates".into()));
        }
        if let Some(h) = lambda.iter().position(|l| *l <= Rat::zero()) {
            return Err(Error::Exponents(format!("lambda[{h}] is not positive")));
        }
        let mut owner = vec![usize::MAX; d];
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::Exponents(format!("block {i} is empty")));
            }
            for &h in b {
                if h >= d {
                    return Err(Error::Exponents(format!("coordinate {h} out of range")));
                }
                if owner[h] != usize::MAX {
                    return Err(Error::Exponents(format!("coordinate {h} in two blocks")));
                }
                owner[h] = i;
            }
        }
        if let Some(h) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Exponents(format!("coordinate {h} not covered")));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        Ok(Exponents { lambda, blocks })
    }

    /// One scalar coordinate per factor, all exponents 1.
    pub fn isotropic(n: usize) -> Self {
        Self::new(vec![Rat::one(); n], (0..n).map(|i| vec![i]).collect()).unwrap()
    }

    /// Each factor `ℝ^{dims[i]}` with all exponents 1.
    pub fn with_dims(dims: &[usize]) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut h = 0;
        for &di in dims {
            blocks.push((h..h + di).collect());
            h += di;
        }
        Self::new(vec![Rat::one(); h], blocks)
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[Rat] {
        &self.lambda
    }

    pub fn lambda_f64(&self, h: usize) -> f64 {
        to_f64(&self.lambda[h])
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    /// Factor owning scalar coordinate `h`.
    pub fn factor_of(&self, h: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&h)).unwrap()
    }

    /// Homogeneous dimension q_i.
    pub fn q(&self, i: usize) -> Rat {
        self.blocks[i].iter().map(|&h| self.lambda[h]).sum()
    }

    pub fn max_lambda(&self) -> Rat {
        self.lambda.iter().copied().max().unwrap()
    }

    pub fn min_lambda(&self) -> Rat {
        self.lambda.iter().copied().min().unwrap()
    }

    /// Block norm |x_i| = Σ_{h∈E_i} |x_h|^{1/λ_h}.
    pub fn block_norm(&self, i: usize, x: &[f64]) -> f64 {
        self.blocks[i]
            .iter()
            .map(|&h| x[h].abs().powf(1.0 / self.lambda_f64(h)))
            .sum()
    }

    /// t∘x on block i: x_h ↦ t^{λ_h} x_h.
    pub fn block_dilate(&self, i: usize, t: f64, x: &mut [f64]) {
        for &h in &self.blocks[i] {
            x[h] *= t.powf(self.lambda_f64(h));
        }
    }

    /// [[α^i]] = Σ_{h∈E_i} λ_h α_h.
    pub fn block_length(&self, i: usize, alpha: &[u32]) -> Rat {
        self.blocks[i]
            .iter()
            .map(|&h| self.lambda[h] * Rat::from_integer(alpha[h] as i128))
            .sum()
    }
}

/// Which condition of standardness failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// e(j,j) ≠ 1
    Diagonal,
    /// e(j,ℓ) > e(j,k)e(k,ℓ)
    Triangle,
    /// e(j,k)e(k,j) < 1
    Reciprocal,
    /// e(j,k)e(k,j) = 1
    Reducible,
}

/// First violated triple (0-based) and the failing condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (j, k, l) = (self.j + 1, self.k + 1, self.l + 1);
        match self.kind {
            ViolationKind::Diagonal => write!(f, "e({j},{j}) != 1"),
            ViolationKind::Triangle => write!(f, "e({j},{l}) > e({j},{k})e({k},{l})"),
            ViolationKind::Reciprocal => write!(f, "e({j},{k})e({k},{j}) < 1"),
            ViolationKind::Reducible => write!(f, "reducible: e({j},{k})e({k},{j}) = 1"),
        }
    }
}

/// An n×n standard matrix with exact rational entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardMatrix {
    e: Vec<Vec<Rat>>,
}

/// Check positivity and squareness, then the three standardness conditions in order.
pub fn validate_matrix(entries: Vec<Vec<Rat>>) -> Result<StandardMatrix> {
    let n = entries.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    for (row, r) in entries.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NonSquare { row, len: r.len(), n });
        }
    }
    for j in 0..n {
        for k in 0..n {
            if entries[j][k] <= Rat::zero() {
                return Err(Error::NonPositive { j, k });
            }
        }
    }
    let e = &entries;
    for j in 0..n {
        if !e[j][j].is_one() {
            return Err(Error::NotStandard(Violation { j, k: j, l: j, kind: ViolationKind::Diagonal }));
        }
    }
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                if e[j][l] > e[j][k] * e[k][l] {
                    return Err(Error::NotStandard(Violation { j, k, l, kind: ViolationKind::Triangle }));
                }
            }
        }
    }
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let p = e[j][k] * e[k][j];
            if p.is_one() {
                return Err(Error::NotStandard(Violation { j, k, l: j, kind: ViolationKind::Reducible }));
            }
            if p < Rat::one() {
                return Err(Error::NotStandard(Violation { j, k, l: j, kind: ViolationKind::Reciprocal }));
            }
        }
    }
    Ok(StandardMatrix { e: entries })
}

impl StandardMatrix {
    pub fn from_integers(rows: &[&[i64]]) -> Result<Self> {
        validate_matrix(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rat::from_integer(v as i128)).collect())
                .collect(),
        )
    }

    /// The matrix [[1,1],[2,1]] of the two-factor worked example.
    pub fn figure1() -> Self {
        Self::from_integers(&[&[1, 1], &[2, 1]]).unwrap()
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn e(&self, j: usize, k: usize) -> Rat {
        self.e[j][k]
    }

    pub fn ef(&self, j: usize, k: usize) -> f64 {
        to_f64(&self.e[j][k])
    }

    pub fn entries(&self) -> &[Vec<Rat>] {
        &self.e
    }

    pub fn max_entry(&self) -> Rat {
        self.e.iter().flatten().copied().max().unwrap()
    }

    pub fn min_entry(&self) -> Rat {
        self.e.iter().flatten().copied().min().unwrap()
    }

    /// Q_i = Σ_j q_j / e(i,j), the homogeneous dimension for δ^i.
    pub fn big_q(&self, exps: &Exponents, i: usize) -> Rat {
        (0..self.n()).map(|j| exps.q(j) / self.e[i][j]).sum()
    }

    /// Q̂_i = Σ_j q_j e(j,i), the homogeneous dimension for δ̂^i.
    pub fn big_q_hat(&self, exps: &Exponents, i: usize) -> Rat {
        (0..self.n()).map(|j| exps.q(j) * self.e[j][i]).sum()
    }

    /// [[α]]_i = Σ_j e(j,i)[[α^j]].
    pub fn homogeneous_length(&self, exps: &Exponents, i: usize, alpha: &[u32]) -> Rat {
        (0..self.n()).map(|j| self.e[j][i] * exps.block_length(j, alpha)).sum()
    }
}

/// Logarithmic coordinates t_i = log₂⁺|ξ_i|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    pub t: Vec<f64>,
}

impl LogPoint {
    /// n̂_i(t) = max_j t_j / e(j,i).
    pub fn nhat(&self, e: &StandardMatrix, i: usize) -> f64 {
        self.t
            .iter()
            .enumerate()
            .map(|(j, &tj)| tj / e.ef(j, i))
            .fold(0.0, f64::max)
    }
}

/// A standard matrix together with exponents: the full multi-norm structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub matrix: StandardMatrix,
    pub exponents: Exponents,
}

impl Structure {
    pub fn new(matrix: StandardMatrix, exponents: Exponents) -> Result<Self> {
        if matrix.n() != exponents.n() {
            return Err(Error::Exponents(format!(
                "matrix has {} factors but exponents have {}",
                matrix.n(),
                exponents.n()
            )));
        }
        Ok(Structure { matrix, exponents })
    }

    pub fn isotropic(matrix: StandardMatrix) -> Self {
        let n = matrix.n();
        Structure { matrix, exponents: Exponents::isotropic(n) }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn d(&self) -> usize {
        self.exponents.d()
    }

    pub fn block_norms(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|j| self.exponents.block_norm(j, x)).collect()
    }

    /// N_i(x) = max_j |x_j|^{e(i,j)}.
    pub fn norm_n(&self, i: usize, x: &[f64]) -> f64 {
        (0..self.n())
            .map(|j| self.exponents.block_norm(j, x).powf(self.matrix.ef(i, j)))
            .fold(0.0, f64::max)
    }

    /// N̂_i(ξ) = max_j |ξ_j|^{1/e(j,i)}.
    pub fn norm_nhat(&self, i: usize, xi: &[f64]) -> f64 {
        (0..self.n())
            .map(|j| self.exponents.block_norm(j, xi).powf(1.0 / self.matrix.ef(j, i)))
            .fold(0.0, f64::max)
    }

    /// δ^i_t x (primal) or δ̂^i_t ξ (dual).
    pub fn dilate(&self, i: usize, t: f64, x: &[f64], dual: bool) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveParameter("t"));
        }
        if i >= self.n() {
            return Err(Error::Index { index: i, size: self.n() });
        }
        let mut y = x.to_vec();
        for j in 0..self.n() {
            let s = if dual {
                t.powf(self.matrix.ef(j, i))
            } else {
                t.powf(1.0 / self.matrix.ef(i, j))
            };
            self.exponents.block_dilate(j, s, &mut y);
        }
        Ok(y)
    }

    pub fn log_map(&self, xi: &[f64]) -> LogPoint {
        LogPoint {
            t: (0..self.n())
                .map(|j| self.exponents.block_norm(j, xi).log2().max(0.0))
                .collect(),
        }
    }

    /// x ∈ B(1), the common unit ball.
    pub fn in_unit_ball(&self, x: &[f64]) -> bool {
        (0..self.n()).all(|j| self.exponents.block_norm(j, x) <= 1.0)
    }
}
