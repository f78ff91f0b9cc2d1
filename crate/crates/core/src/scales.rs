//! The admissible scale lattice, tubes, frequency blocks and the distance diagnostics.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::lp::{maximize, LpOutcome};
use crate::matrix::Structure;
use crate::partitions::{principal_cone, tau, to_rats, ConeCensus, MarkedPartition};
use crate::rational::{floor, rat, Rat};

/// An admissible lattice point L with its dotted set and assigned partition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scale {
    pub l: Vec<i64>,
    pub dotted: Vec<usize>,
    pub partition: Option<MarkedPartition>,
}

impl Scale {
    pub fn zero(n: usize) -> Self {
        Scale { l: vec![0; n], dotted: vec![], partition: None }
    }

    pub fn partition_label(&self) -> String {
        self.partition.as_ref().map_or("{}".to_string(), |s| s.encode())
    }

    pub fn in_dotted(&self, j: usize) -> bool {
        self.dotted.contains(&j)
    }
}

/// T_L: ℓ_j ± ½ for dotted j, [0, ℓ_j + ½] otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tube {
    pub owner: Scale,
    pub lo: Vec<Rat>,
    pub hi: Vec<Rat>,
}

impl Tube {
    pub fn new(scale: &Scale) -> Self {
        let n = scale.l.len();
        let half = rat(1, 2);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for j in 0..n {
            let l = Rat::from_integer(scale.l[j] as i128);
            hi.push(l + half);
            lo.push(if scale.in_dotted(j) { (l - half).max(Rat::zero()) } else { Rat::zero() });
        }
        Tube { owner: scale.clone(), lo, hi }
    }

    /// Whether M ∈ 𝓣_L.
    pub fn lattice_contains(&self, m: &[i64]) -> bool {
        let s = &self.owner;
        m.iter().enumerate().all(|(j, &mj)| {
            if s.in_dotted(j) {
                mj == s.l[j]
            } else {
                (0..=s.l[j]).contains(&mj)
            }
        })
    }

    /// 𝓣_L as an explicit list.
    pub fn lattice(&self) -> Vec<Vec<i64>> {
        let s = &self.owner;
        let ranges: Vec<(i64, i64)> = (0..s.l.len())
            .map(|j| if s.in_dotted(j) { (s.l[j], s.l[j]) } else { (0, s.l[j]) })
            .collect();
        product(&ranges)
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.iter().enumerate().all(|(j, &x)| {
            x >= crate::rational::to_f64(&self.lo[j]) && x <= crate::rational::to_f64(&self.hi[j])
        })
    }

    /// Closed boxes intersect.
    pub fn intersects(&self, other: &Tube) -> bool {
        (0..self.lo.len()).all(|j| self.lo[j] <= other.hi[j] && other.lo[j] <= self.hi[j])
    }
}

/// All integer points of a product of closed ranges, lexicographic.
pub fn product(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &(a, b) in ranges {
        let mut next = Vec::new();
        for p in &out {
            for v in a..=b {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// B_L as per-factor block-norm ranges: lo ≤ |ξ_j| ≤ hi (lo = 0 means no lower bound).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBlock {
    pub owner: Scale,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FrequencyBlock {
    pub fn contains(&self, norms: &[f64]) -> bool {
        norms.iter().enumerate().all(|(j, &v)| v >= self.lo[j] && v <= self.hi[j])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub bound: i64,
    pub cubes_checked: usize,
    pub violations: Vec<(Vec<i64>, Vec<Vec<i64>>)>,
}

/// Witness of a κ value: the lattice point(s) realizing the maximum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaReport {
    pub bound: i64,
    pub kappa: [Rat; 4],
    pub witnesses: [Vec<Vec<Rat>>; 4],
    pub crude_bound: Rat,
}

/// The lattice 𝓛 of a multi-norm structure (only the matrix matters here).
#[derive(Clone, Debug)]
pub struct ScaleLattice {
    pub census: ConeCensus,
}

impl ScaleLattice {
    pub fn new(structure: &Structure) -> Self {
        ScaleLattice { census: ConeCensus::new(&structure.matrix) }
    }

    pub fn from_matrix(e: &crate::matrix::StandardMatrix) -> Self {
        ScaleLattice { census: ConeCensus::new(e) }
    }

    pub fn n(&self) -> usize {
        self.census.n()
    }

    fn e(&self, j: usize, k: usize) -> Rat {
        self.census.matrix.e(j, k)
    }

    /// Candidate S ∈ 𝓢_E with D(S) = D and L ∈ Γ_S, sorted by encoding.
    fn candidates(&self, l: &[Rat], dotted: &[usize]) -> Vec<MarkedPartition> {
        let mut c: Vec<MarkedPartition> = self
            .census
            .containing(l)
            .into_iter()
            .map(|i| self.census.partitions[i].clone())
            .filter(|s| s.dotted() == dotted)
            .collect();
        c.sort_by_key(|s| s.encode());
        c
    }

    /// Maximality test through the floor/τ characterization; None if L is not admissible.
    pub fn is_admissible(&self, l: &[i64]) -> Option<Scale> {
        assert_eq!(l.len(), self.n());
        if l.iter().any(|&x| x < 0) {
            return None;
        }
        let t = to_rats(l);
        let dom = self.census.dominant_set(&t);
        if dom.dotted.is_empty() {
            return Some(Scale::zero(self.n()));
        }
        let s = dom.witness.unwrap();
        if !self.satisfies_floor_conditions(l, &s) {
            return None;
        }
        let assigned = self.candidates(&t, &dom.dotted).into_iter().next().unwrap();
        Some(Scale { l: l.to_vec(), dotted: dom.dotted, partition: Some(assigned) })
    }

    /// ℓ_i = ⌊ℓ_{k_r}/e(k_r,i)⌋ on A_r and ℓ_{k_p} ≤ τ_S(k_p,k_q) ℓ_{k_q}.
    ///
    /// The τ clause is taken non-strict: the strict form rejects points on cone
    /// boundaries that are maximal by definition, e.g. L = (1,0,1) for
    /// E = [[1,2,3],[2,1,2],[3,2,1]].
    pub fn satisfies_floor_conditions(&self, l: &[i64], s: &MarkedPartition) -> bool {
        let e = &self.census.matrix;
        for b in s.blocks() {
            let k = b.dotted;
            for &i in &b.members {
                let v = Rat::from_integer(l[k] as i128) / e.e(k, i);
                if floor(&v) != l[i] {
                    return false;
                }
            }
        }
        let nb = s.blocks().len();
        for p in 0..nb {
            for q in 0..nb {
                if p == q {
                    continue;
                }
                let kp = s.blocks()[p].dotted;
                let kq = s.blocks()[q].dotted;
                let bound = tau(e, s, p, q).unwrap() * Rat::from_integer(l[kq] as i128);
                if Rat::from_integer(l[kp] as i128) > bound {
                    return false;
                }
            }
        }
        true
    }

    /// Definitional maximality: no step L + e_j with j ∉ D stays in the same class.
    pub fn is_maximal_by_definition(&self, l: &[i64]) -> bool {
        let d = self.census.dominant_set_int(l).dotted;
        if d.is_empty() {
            return true;
        }
        (0..self.n()).filter(|j| !d.contains(j)).all(|j| {
            let mut m = l.to_vec();
            m[j] += 1;
            self.census.dominant_set_int(&m).dotted != d
        })
    }

    /// Every admissible L with all ℓ_i ≤ bound, lexicographic.
    pub fn enumerate(&self, bound: i64) -> Vec<Scale> {
        product(&vec![(0, bound.max(0)); self.n()])
            .into_iter()
            .filter_map(|l| self.is_admissible(&l))
            .collect()
    }

    /// The same list grouped by assigned partition (key "{}" for L = 0).
    pub fn enumerate_grouped(&self, bound: i64) -> BTreeMap<String, Vec<Scale>> {
        let mut out: BTreeMap<String, Vec<Scale>> = BTreeMap::new();
        for s in self.enumerate(bound) {
            out.entry(s.partition_label()).or_default().push(s);
        }
        out
    }

    pub fn tube(&self, scale: &Scale) -> Tube {
        Tube::new(scale)
    }

    /// The L whose tube lattice set contains M.
    pub fn owner(&self, m: &[i64]) -> Scale {
        let dom = self.census.dominant_set_int(m);
        let Some(s) = dom.witness else {
            return Scale::zero(self.n());
        };
        let mut l = m.to_vec();
        for b in s.blocks() {
            let k = b.dotted;
            for &i in &b.members {
                if i != k {
                    l[i] = floor(&(Rat::from_integer(m[k] as i128) / self.e(k, i)));
                }
            }
        }
        self.is_admissible(&l).expect("owner of a lattice cube must be admissible")
    }

    fn enlarged(&self, bound: i64) -> i64 {
        let min = self.census.matrix.min_entry();
        let f = if min < Rat::one() { Rat::one() / min } else { Rat::one() };
        let v = f * Rat::from_integer(bound as i128);
        -floor(&(-v))
    }

    /// Each Q_M with M in the window lies in exactly one tube lattice set.
    pub fn tube_cover_check(&self, bound: i64) -> CoverReport {
        let n = self.n();
        let big = self.enlarged(bound);
        let mut hits: HashMap<Vec<i64>, Vec<Vec<i64>>> = HashMap::new();
        for s in self.enumerate(big) {
            let tube = Tube::new(&s);
            if s.dotted.iter().any(|&j| s.l[j] > bound) {
                continue;
            }
            let ranges: Vec<(i64, i64)> = (0..n)
                .map(|j| if s.in_dotted(j) { (s.l[j], s.l[j]) } else { (0, s.l[j].min(bound)) })
                .collect();
            for m in product(&ranges) {
                debug_assert!(tube.lattice_contains(&m));
                hits.entry(m).or_default().push(s.l.clone());
            }
        }
        let mut violations = Vec::new();
        let all = product(&vec![(0, bound); n]);
        for m in &all {
            let h = hits.get(m).cloned().unwrap_or_default();
            if h.len() != 1 {
                violations.push((m.clone(), h));
            }
        }
        CoverReport { bound, cubes_checked: all.len(), violations }
    }

    /// Tube containing the log image of ξ; boundary ties go to the lexicographically smallest L.
    pub fn block_membership(&self, structure: &Structure, xi: &[f64]) -> Scale {
        if structure.in_unit_ball(xi) {
            return Scale::zero(self.n());
        }
        let t = structure.log_map(xi).t;
        self.membership_log(&t)
    }

    pub fn membership_log(&self, t: &[f64]) -> Scale {
        let ranges: Vec<(i64, i64)> = t
            .iter()
            .map(|&x| {
                let r = x.round() as i64;
                let frac = x - x.floor();
                if frac == 0.5 {
                    (x.floor() as i64, x.ceil() as i64)
                } else {
                    (r, r)
                }
            })
            .collect();
        product(&ranges)
            .into_iter()
            .map(|m| self.owner(&m))
            .min_by(|a, b| a.l.cmp(&b.l))
            .unwrap()
    }

    pub fn frequency_block(&self, scale: &Scale) -> FrequencyBlock {
        let n = self.n();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for j in 0..n {
            let l = scale.l[j] as f64;
            hi[j] = (l + 0.5).exp2();
            if scale.in_dotted(j) && scale.l[j] > 0 {
                lo[j] = (l - 0.5).exp2();
            }
        }
        FrequencyBlock { owner: scale.clone(), lo, hi }
    }

    /// Constant C in the outer product bound N_{k_r}(ξ_{A_r}) ≤ C 2^{ℓ_{k_r}}.
    pub fn outer_constant(&self) -> f64 {
        let m = crate::rational::to_f64(&self.census.matrix.max_entry());
        (0.5f64).max(m / 2.0).exp2()
    }

    /// Outer product description: dyadic control on dotted coordinates and on each N_{k_r}(ξ_{A_r}).
    pub fn outer_product_contains(&self, structure: &Structure, scale: &Scale, xi: &[f64]) -> bool {
        let Some(s) = &scale.partition else {
            return structure.in_unit_ball(xi) || structure.block_norms(xi).iter().all(|&v| v <= 2f64.sqrt());
        };
        let norms = structure.block_norms(xi);
        let c = self.outer_constant();
        let tol = 1e-12;
        for &j in &scale.dotted {
            let p = (scale.l[j] as f64).exp2();
            let lo = if scale.l[j] == 0 { 0.0 } else { p / 2f64.sqrt() };
            if norms[j] < lo * (1.0 - tol) || norms[j] > p * 2f64.sqrt() * (1.0 + tol) {
                return false;
            }
        }
        for b in s.blocks() {
            let k = b.dotted;
            let nk = b
                .members
                .iter()
                .map(|&j| norms[j].powf(structure.matrix.ef(k, j)))
                .fold(0.0, f64::max);
            if nk > c * (scale.l[k] as f64).exp2() * (1.0 + tol) {
                return false;
            }
        }
        true
    }

    /// sup-distance from a rational point to Γ(E), by linear programming.
    pub fn distance_to_principal(&self, t: &[Rat]) -> Rat {
        let n = self.n();
        let cone = principal_cone(&self.census.matrix);
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for j in 0..n {
            let mut a = vec![Rat::zero(); n + 1];
            a[j] = Rat::one();
            a[n] = -Rat::one();
            rows.push(a.clone());
            rhs.push(t[j]);
            a[j] = -Rat::one();
            rows.push(a);
            rhs.push(-t[j]);
        }
        for c in cone.constraints.iter().skip(n) {
            let mut a = c.a.clone();
            a.push(Rat::zero());
            rows.push(a);
            rhs.push(Rat::zero());
        }
        let mut obj = vec![Rat::zero(); n + 1];
        obj[n] = -Rat::one();
        match maximize(&rows, &rhs, &obj) {
            LpOutcome::Optimal { value, .. } => -value,
            o => panic!("distance LP must be feasible and bounded: {o:?}"),
        }
    }

    /// The four window maxima of the distance lemma plus the crude bound max e(i,j).
    pub fn kappa_diagnostics(&self, bound: i64) -> KappaReport {
        let n = self.n();
        let lat: Vec<Scale> = self.enumerate(bound);
        let pts: Vec<Vec<Rat>> = lat.iter().map(|s| to_rats(&s.l)).collect();
        let sup = |a: &[Rat], b: &[Rat]| {
            a.iter().zip(b).map(|(x, y)| crate::rational::abs(&(x - y))).max().unwrap()
        };
        let dist_lat = |t: &[Rat]| pts.iter().map(|p| sup(p, t)).min().unwrap();

        let mut kappa = [Rat::zero(); 4];
        let mut wit: [Vec<Vec<Rat>>; 4] = Default::default();

        for p in &pts {
            let d = self.distance_to_principal(p);
            if d > kappa[0] || wit[0].is_empty() {
                if d > kappa[0] || wit[0].is_empty() {
                    kappa[0] = d;
                    wit[0] = vec![p.clone()];
                }
            }
        }

        let cone = principal_cone(&self.census.matrix);
        let half = bound; // half-integer steps up to bound/2
        for raw in product(&vec![(0, half); n]) {
            let t: Vec<Rat> = raw.iter().map(|&v| rat(v as i128, 2)).collect();
            if !cone.contains(&t) {
                continue;
            }
            let d = dist_lat(&t);
            if d > kappa[1] || wit[1].is_empty() {
                kappa[1] = d;
                wit[1] = vec![t];
            }
        }

        let half_pts: Vec<&Vec<i64>> = lat.iter().map(|s| &s.l).filter(|l| l.iter().all(|&v| 2 * v <= bound)).collect();
        for a in &half_pts {
            for b in &half_pts {
                let m: Vec<i64> = a.iter().zip(b.iter()).map(|(x, y)| *x.min(y)).collect();
                let t = to_rats(&m);
                let d = dist_lat(&t);
                if d > kappa[2] || wit[2].is_empty() {
                    kappa[2] = d;
                    wit[2] = vec![to_rats(a), to_rats(b)];
                }
            }
        }

        let tubes: Vec<Tube> = lat.iter().map(Tube::new).collect();
        for i in 0..tubes.len() {
            for j in i..tubes.len() {
                if tubes[i].intersects(&tubes[j]) {
                    let d = sup(&pts[i], &pts[j]);
                    if d > kappa[3] || wit[3].is_empty() {
                        kappa[3] = d;
                        wit[3] = vec![pts[i].clone(), pts[j].clone()];
                    }
                }
            }
        }
        KappaReport { bound, kappa, witnesses: wit, crude_bound: self.census.matrix.max_entry() }
    }

    /// Admissible points in a window as a set, for fast lookups.
    pub fn lattice_set(&self, bound: i64) -> HashSet<Vec<i64>> {
        self.enumerate(bound).into_iter().map(|s| s.l).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::StandardMatrix;

    fn fig() -> ScaleLattice {
        ScaleLattice::from_matrix(&StandardMatrix::figure1())
    }

    #[test]
    fn admissibility_examples() {
        let s = fig();
        let z = s.is_admissible(&[0, 0]).unwrap();
        assert!(z.dotted.is_empty() && z.partition.is_none());
        assert_eq!(s.is_admissible(&[1, 2]).unwrap().dotted, vec![1]);
        assert_eq!(s.is_admissible(&[2, 2]).unwrap().dotted, vec![0]);
        assert!(s.is_admissible(&[1, 4]).is_none());
        assert_eq!(s.is_admissible(&[2, 3]).unwrap().dotted, vec![0, 1]);
    }

    #[test]
    fn window_four() {
        let s = fig();
        let mut got: Vec<Vec<i64>> = s.enumerate(4).into_iter().map(|x| x.l).collect();
        got.sort();
        let mut want = vec![
            vec![0, 0], vec![1, 1], vec![2, 2], vec![3, 3], vec![4, 4], vec![2, 3], vec![3, 4],
            vec![0, 1], vec![1, 2], vec![1, 3], vec![2, 4],
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(s.enumerate(0).len(), 1);
        let g = s.enumerate_grouped(4);
        assert_eq!(g.values().map(|v| v.len()).sum::<usize>(), 11);
    }

    #[test]
    fn tube_example() {
        let s = fig();
        let sc = s.is_admissible(&[2, 2]).unwrap();
        let t = s.tube(&sc);
        assert_eq!(t.lo, vec![rat(3, 2), Rat::zero()]);
        assert_eq!(t.hi, vec![rat(5, 2), rat(5, 2)]);
        let full = s.tube(&s.is_admissible(&[2, 3]).unwrap());
        assert_eq!(full.lattice(), vec![vec![2, 3]]);
    }

    #[test]
    fn membership_example() {
        let s = fig();
        let st = Structure::isotropic(StandardMatrix::figure1());
        let xi = [2.1f64.exp2(), 2.2f64.exp2()];
        assert_eq!(s.block_membership(&st, &xi).l, vec![2, 2]);
        assert_eq!(s.block_membership(&st, &[0.5, 0.5]).l, vec![0, 0]);
    }

    #[test]
    fn distance_of_boundary_point() {
        let s = fig();
        assert_eq!(s.distance_to_principal(&to_rats(&[2, 4])), Rat::zero());
        assert_eq!(s.distance_to_principal(&to_rats(&[1, 3])), rat(1, 3));
    }
}
