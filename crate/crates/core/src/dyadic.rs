//! Anisotropic dyadic cubes and rectangles in physical space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Exponents, StandardMatrix};
use crate::partitions::MarkedPartition;
use crate::rational::{floor, to_f64, Rat};
use crate::scales::Scale;

/// Side-length exponents μ(ℓ,h): non-decreasing, μ(0,h) = 0, |μ(ℓ,h) − ℓλ_h| ≤ a.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibleSequence {
    /// μ(ℓ,h) = ⌊ℓλ_h⌋.
    Floor { lambda: Vec<Rat> },
    /// Explicit table `mu[h][ℓ]`; scales past the end continue with slope taken from `lambda`.
    Table { lambda: Vec<Rat>, mu: Vec<Vec<i64>>, slack: Rat },
}

impl AdmissibleSequence {
    pub fn floor(exps: &Exponents) -> Self {
        AdmissibleSequence::Floor { lambda: exps.lambda().to_vec() }
    }

    pub fn mu(&self, l: i64, h: usize) -> i64 {
        let l = l.max(0);
        match self {
            AdmissibleSequence::Floor { lambda } => floor(&(lambda[h] * Rat::from_integer(l as i128))),
            AdmissibleSequence::Table { lambda, mu, .. } => {
                let row = &mu[h];
                if (l as usize) < row.len() {
                    row[l as usize]
                } else {
                    let last = row.len() as i64 - 1;
                    row[last as usize] + floor(&(lambda[h] * Rat::from_integer((l - last) as i128)))
                }
            }
        }
    }

    /// The slack constant a.
    pub fn slack(&self) -> Rat {
        match self {
            AdmissibleSequence::Floor { lambda } => lambda.iter().copied().max().unwrap(),
            AdmissibleSequence::Table { slack, .. } => *slack,
        }
    }

    pub fn lambda(&self) -> &[Rat] {
        match self {
            AdmissibleSequence::Floor { lambda } | AdmissibleSequence::Table { lambda, .. } => lambda,
        }
    }

    /// Check the defining properties up to scale `max_l`.
    pub fn is_admissible_up_to(&self, max_l: i64) -> bool {
        let a = self.slack();
        (0..self.lambda().len()).all(|h| {
            self.mu(0, h) == 0
                && (0..=max_l).all(|l| {
                    let dev = Rat::from_integer(self.mu(l, h) as i128) - self.lambda()[h] * Rat::from_integer(l as i128);
                    (l == 0 || self.mu(l, h) >= self.mu(l - 1, h)) && crate::rational::abs(&dev) <= a
                })
        })
    }
}

/// A dyadic cube in one factor: side h is [2^{−μ_h} p_h, 2^{−μ_h}(p_h+1)).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub factor: usize,
    pub scale: i64,
    /// Global coordinate indices of the factor, in order.
    pub coords: Vec<usize>,
    pub corner: Vec<i64>,
    pub mu: Vec<i64>,
}

fn pow2_neg(m: i64) -> Rat {
    if m >= 0 {
        Rat::new(1, 1i128 << m)
    } else {
        Rat::from_integer(1i128 << (-m))
    }
}

impl DyadicCube {
    pub fn lo(&self, k: usize) -> Rat {
        Rat::from_integer(self.corner[k] as i128) * pow2_neg(self.mu[k])
    }

    pub fn hi(&self, k: usize) -> Rat {
        Rat::from_integer(self.corner[k] as i128 + 1) * pow2_neg(self.mu[k])
    }

    pub fn side(&self, k: usize) -> f64 {
        (-(self.mu[k] as f64)).exp2()
    }

    pub fn center(&self, k: usize) -> f64 {
        (self.corner[k] as f64 + 0.5) * self.side(k)
    }

    pub fn measure(&self) -> Rat {
        self.mu.iter().map(|&m| pow2_neg(m)).product()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.coords.iter().enumerate().all(|(k, &h)| {
            let lo = to_f64(&self.lo(k));
            let hi = to_f64(&self.hi(k));
            x[h] >= lo && x[h] < hi
        })
    }

    /// Set inclusion, decided exactly.
    pub fn is_subset_of(&self, other: &DyadicCube) -> bool {
        self.factor == other.factor
            && (0..self.corner.len()).all(|k| other.lo(k) <= self.lo(k) && self.hi(k) <= other.hi(k))
    }

    pub fn intersects(&self, other: &DyadicCube) -> bool {
        self.factor == other.factor
            && (0..self.corner.len()).all(|k| self.lo(k) < other.hi(k) && other.lo(k) < self.hi(k))
    }

    pub fn same_set(&self, other: &DyadicCube) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }
}

/// An axis-parallel box with real bounds (half-open on the right).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub coords: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.coords.iter().enumerate().all(|(k, &h)| x[h] >= self.lo[k] && x[h] < self.hi[k])
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        (0..self.lo.len()).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn product(parts: &[Region]) -> Region {
        let mut r = Region { coords: vec![], lo: vec![], hi: vec![] };
        for p in parts {
            r.coords.extend(&p.coords);
            r.lo.extend(&p.lo);
            r.hi.extend(&p.hi);
        }
        r
    }
}

/// A product of per-factor dyadic cubes at a multi-scale L.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub l: Vec<i64>,
    pub cubes: Vec<DyadicCube>,
}

impl DyadicRectangle {
    pub fn measure(&self) -> Rat {
        self.cubes.iter().map(|c| c.measure()).product()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.cubes.iter().all(|c| c.contains_point(x))
    }

    pub fn is_subset_of(&self, other: &DyadicRectangle) -> bool {
        self.cubes.iter().zip(&other.cubes).all(|(a, b)| a.is_subset_of(b))
    }

    pub fn intersects(&self, other: &DyadicRectangle) -> bool {
        self.cubes.iter().zip(&other.cubes).all(|(a, b)| a.intersects(b))
    }

    /// Serialized as (L, corner integers per factor).
    pub fn key(&self) -> (Vec<i64>, Vec<Vec<i64>>) {
        (self.l.clone(), self.cubes.iter().map(|c| c.corner.clone()).collect())
    }
}

/// Per-block cube of the coarser S-decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCube {
    pub block: usize,
    pub dotted: usize,
    pub scale: i64,
    pub cubes: Vec<DyadicCube>,
    /// ν(ℓ_{k_r},h) for each coordinate of each cube, in the same order.
    pub nu: Vec<i64>,
}

/// Dyadic geometry for a multi-norm structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub exponents: Exponents,
    pub matrix: StandardMatrix,
    pub sequence: AdmissibleSequence,
}

impl DyadicGrid {
    pub fn new(matrix: StandardMatrix, exponents: Exponents) -> Self {
        let sequence = AdmissibleSequence::floor(&exponents);
        DyadicGrid { exponents, matrix, sequence }
    }

    pub fn with_sequence(mut self, sequence: AdmissibleSequence) -> Self {
        self.sequence = sequence;
        self
    }

    pub fn n(&self) -> usize {
        self.exponents.n()
    }

    pub fn cube(&self, i: usize, l: i64, corner: Vec<i64>) -> DyadicCube {
        let coords = self.exponents.block(i).to_vec();
        let mu = coords.iter().map(|&h| self.sequence.mu(l, h)).collect();
        DyadicCube { factor: i, scale: l, coords, corner, mu }
    }

    /// The cube of scale ℓ in factor i containing x (x is a full point of ℝ^d).
    pub fn cube_at(&self, x: &[f64], i: usize, l: i64) -> DyadicCube {
        let coords = self.exponents.block(i).to_vec();
        let corner = coords
            .iter()
            .map(|&h| (x[h] * (self.sequence.mu(l, h) as f64).exp2()).floor() as i64)
            .collect();
        self.cube(i, l, corner)
    }

    pub fn rectangle_at(&self, x: &[f64], l: &[i64]) -> DyadicRectangle {
        DyadicRectangle { l: l.to_vec(), cubes: (0..self.n()).map(|i| self.cube_at(x, i, l[i])).collect() }
    }

    /// 2^m Q: the ancestor at scale max(ℓ − m, 0).
    pub fn ancestor(&self, q: &DyadicCube, m: i64) -> DyadicCube {
        let target = (q.scale - m.max(0)).max(0);
        let corner = q
            .coords
            .iter()
            .zip(&q.corner)
            .map(|(&h, &p)| {
                let shift = self.sequence.mu(q.scale, h) - self.sequence.mu(target, h);
                p.div_euclid(1i64 << shift)
            })
            .collect();
        self.cube(q.factor, target, corner)
    }

    /// How many m in 0..=ℓ give the same set as 2^m Q.
    pub fn ancestor_multiplicity(&self, q: &DyadicCube, m: i64) -> usize {
        let a = self.ancestor(q, m);
        (0..=q.scale).filter(|&k| self.ancestor(q, k).same_set(&a)).count()
    }

    /// 2^m R with one m per factor.
    pub fn dyadic_enlarge(&self, r: &DyadicRectangle, m: &[i64]) -> DyadicRectangle {
        let cubes: Vec<DyadicCube> = r.cubes.iter().zip(m).map(|(q, &mi)| self.ancestor(q, mi)).collect();
        DyadicRectangle { l: cubes.iter().map(|c| c.scale).collect(), cubes }
    }

    /// 2^m R with one m per block of S, applied to every factor of the block.
    pub fn dyadic_enlarge_blocks(&self, r: &DyadicRectangle, s: &MarkedPartition, m: &[i64]) -> DyadicRectangle {
        let mut per = vec![0; self.n()];
        for (b, &mb) in s.blocks().iter().zip(m) {
            for &i in &b.members {
                per[i] = mb;
            }
        }
        self.dyadic_enlarge(r, &per)
    }

    /// 2^ρ∘Q: centred box with half-sides 2^{ρλ_h} 2^{−μ(ℓ,h)}.
    pub fn rescale_enlarge(&self, q: &DyadicCube, rho: f64) -> Result<Region> {
        self.rescale_with(q, rho, |h| self.exponents.lambda_f64(h))
    }

    fn rescale_with(&self, q: &DyadicCube, rho: f64, weight: impl Fn(usize) -> f64) -> Result<Region> {
        if !(rho >= 0.0) {
            return Err(Error::NonPositiveParameter("rho"));
        }
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (k, &h) in q.coords.iter().enumerate() {
            let half = (rho * weight(h)).exp2() * q.side(k);
            lo.push(q.center(k) - half);
            hi.push(q.center(k) + half);
        }
        Ok(Region { coords: q.coords.clone(), lo, hi })
    }

    /// δ in 2^m Q ⊆ 2^{m+δ}∘Q: (2a+1)·max 1/λ_h.
    pub fn comparison_delta(&self) -> f64 {
        let a = to_f64(&self.sequence.slack());
        let g = 1.0 / to_f64(&self.exponents.min_lambda());
        (2.0 * a + 1.0) * g
    }

    /// Constant c_a in |2^m Q| ≥ c_a 2^{m q_i}|Q|.
    pub fn measure_constant(&self, i: usize) -> f64 {
        let a = to_f64(&self.sequence.slack());
        (-2.0 * a * self.exponents.block(i).len() as f64).exp2()
    }

    /// The coarser view R = Π_r Q_{A_r}; requires the scale to belong to S.
    pub fn s_view(&self, r: &DyadicRectangle, scale: &Scale, s: &MarkedPartition) -> Result<Vec<BlockCube>> {
        if scale.l != r.l || scale.partition.as_ref() != Some(s) {
            return Err(Error::Precondition(format!("rectangle at {:?} is not in the class of {}", r.l, s)));
        }
        let mut out = Vec::new();
        for (idx, b) in s.blocks().iter().enumerate() {
            let k = b.dotted;
            let lk = r.l[k];
            let mut nu = Vec::new();
            let mut cubes = Vec::new();
            for &i in &b.members {
                let li = floor(&(Rat::from_integer(lk as i128) / self.matrix.e(k, i)));
                for &h in self.exponents.block(i) {
                    nu.push(self.sequence.mu(li, h));
                }
                cubes.push(r.cubes[i].clone());
            }
            out.push(BlockCube { block: idx, dotted: k, scale: lk, cubes, nu });
        }
        Ok(out)
    }

    /// ν(ℓ_k,h) = μ(⌊ℓ_k/e(k,i)⌋,h) for coordinate h of factor i.
    pub fn induced_mu(&self, k: usize, i: usize, lk: i64, h: usize) -> i64 {
        let li = floor(&(Rat::from_integer(lk as i128) / self.matrix.e(k, i)));
        self.sequence.mu(li, h)
    }

    /// 2^{ρ_r}∘Q_{A_r} for each block: exponents λ_h/e(k_r,i).
    pub fn s_rescale(&self, view: &[BlockCube], rho: &[f64]) -> Result<Region> {
        let mut parts = Vec::new();
        for (bc, &p) in view.iter().zip(rho) {
            for q in &bc.cubes {
                let e = self.matrix.ef(bc.dotted, q.factor);
                parts.push(self.rescale_with(q, p, |h| self.exponents.lambda_f64(h) / e)?);
            }
        }
        let mut r = Region::product(&parts);
        // restore coordinate order
        let mut idx: Vec<usize> = (0..r.coords.len()).collect();
        idx.sort_by_key(|&k| r.coords[k]);
        r = Region {
            coords: idx.iter().map(|&k| r.coords[k]).collect(),
            lo: idx.iter().map(|&k| r.lo[k]).collect(),
            hi: idx.iter().map(|&k| r.hi[k]).collect(),
        };
        Ok(r)
    }

    /// All cubes of factor i at scale ℓ inside the unit cube [0,1)^{d_i}.
    pub fn unit_cubes(&self, i: usize, l: i64) -> Vec<DyadicCube> {
        let coords = self.exponents.block(i).to_vec();
        let ranges: Vec<(i64, i64)> = coords.iter().map(|&h| (0, (1i64 << self.sequence.mu(l, h)) - 1)).collect();
        crate::scales::product(&ranges).into_iter().map(|c| self.cube(i, l, c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn one_d() -> DyadicGrid {
        DyadicGrid::new(StandardMatrix::figure1(), Exponents::isotropic(2))
    }

    #[test]
    fn cube_example() {
        let g = one_d();
        let q = g.cube_at(&[0.3, 0.0], 0, 2);
        assert_eq!((q.lo(0), q.hi(0)), (rat(1, 4), rat(1, 2)));
        let a = g.ancestor(&q, 1);
        assert_eq!((a.lo(0), a.hi(0)), (rat(0, 1), rat(1, 2)));
        assert_eq!(g.ancestor(&q, 0), q);
        assert_eq!(g.ancestor(&q, 9).scale, 0);
    }

    #[test]
    fn half_exponent_repeats_sides() {
        let x = Exponents::new(vec![rat(1, 2), Rat::from_integer(1)], vec![vec![0], vec![1]]).unwrap();
        let g = DyadicGrid::new(StandardMatrix::figure1(), x);
        let a = g.cube_at(&[0.3, 0.0], 0, 2);
        let b = g.cube_at(&[0.3, 0.0], 0, 3);
        assert_eq!(a.side(0), 0.5);
        assert_eq!(b.side(0), 0.5);
        assert!(a.same_set(&b));
        assert_eq!(g.ancestor_multiplicity(&b, 0), 2);
    }

    #[test]
    fn rescale_at_zero_doubles() {
        let g = one_d();
        let q = g.cube_at(&[0.3, 0.0], 0, 2);
        let r = g.rescale_enlarge(&q, 0.0).unwrap();
        assert_eq!((r.lo[0], r.hi[0]), (0.125, 0.625));
        assert!(g.rescale_enlarge(&q, -1.0).is_err());
    }

    #[test]
    fn s_view_of_figure1() {
        let g = one_d();
        let lat = crate::scales::ScaleLattice::from_matrix(&g.matrix);
        let sc = lat.is_admissible(&[3, 3]).unwrap();
        let s = sc.partition.clone().unwrap();
        assert_eq!(s.encode(), "{1.,2}");
        let r = g.rectangle_at(&[0.3, 0.7], &[3, 3]);
        let v = g.s_view(&r, &sc, &s).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].nu, vec![g.sequence.mu(3, 0), g.sequence.mu(3, 1)]);
        let other = MarkedPartition::principal(2);
        assert!(g.s_view(&r, &sc, &other).is_err());
    }
}
