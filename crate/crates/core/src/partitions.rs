//! Marked partitions, the cones Γ_S and Γ(E), faces, and dominant sets.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{maximize, LpOutcome};
use crate::matrix::StandardMatrix;
use crate::rational::{display, Rat};

/// One block A_r with its dotted entry k_r (0-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Block {
    pub members: Vec<usize>,
    pub dotted: usize,
}

/// A partition of {0,…,n−1} with one dotted entry per block, blocks sorted by smallest member.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarkedPartition {
    n: usize,
    blocks: Vec<Block>,
}

impl MarkedPartition {
    pub fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for b in &mut blocks {
            b.members.sort_unstable();
            if !b.members.contains(&b.dotted) {
                return Err(Error::Precondition(format!("dotted {} not in its block", b.dotted + 1)));
            }
            for &i in &b.members {
                if i >= n || seen[i] {
                    return Err(Error::Precondition(format!("index {} repeated or out of range", i + 1)));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Precondition("blocks do not cover all indices".into()));
        }
        blocks.sort_by_key(|b| b.members[0]);
        Ok(MarkedPartition { n, blocks })
    }

    /// {•1}{•2}…{•n}.
    pub fn principal(n: usize) -> Self {
        MarkedPartition {
            n,
            blocks: (0..n).map(|i| Block { members: vec![i], dotted: i }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// D(S), sorted.
    pub fn dotted(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.blocks.iter().map(|b| b.dotted).collect();
        d.sort_unstable();
        d
    }

    /// Index r of the block containing i.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.iter().position(|b| b.members.contains(&i)).unwrap()
    }

    pub fn is_principal(&self) -> bool {
        self.blocks.len() == self.n
    }

    /// Encoding such as `{1.,3}{2.}`; indices 1-based.
    pub fn encode(&self) -> String {
        let mut s = String::new();
        for b in &self.blocks {
            s.push('{');
            let parts: Vec<String> = b
                .members
                .iter()
                .map(|&i| if i == b.dotted { format!("{}.", i + 1) } else { format!("{}", i + 1) })
                .collect();
            s.push_str(&parts.join(","));
            s.push('}');
        }
        s
    }

    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('{')
                .and_then(|r| r.split_once('}'))
                .ok_or_else(|| Error::Parse(format!("bad partition `{text}`")))?;
            let mut members = Vec::new();
            let mut dotted = None;
            for tok in body.0.split(',') {
                let tok = tok.trim();
                let (num, dot) = match tok.strip_suffix('.') {
                    Some(t) => (t, true),
                    None => (tok, false),
                };
                let i: usize = num.parse().map_err(|_| Error::Parse(format!("bad index `{tok}`")))?;
                if i == 0 {
                    return Err(Error::Parse("indices are 1-based".into()));
                }
                if dot {
                    if dotted.is_some() {
                        return Err(Error::Parse("two dotted entries in a block".into()));
                    }
                    dotted = Some(i - 1);
                }
                members.push(i - 1);
            }
            let dotted = dotted.ok_or_else(|| Error::Parse("block without dotted entry".into()))?;
            blocks.push(Block { members, dotted });
            rest = body.1.trim_start();
        }
        Self::new(n, blocks)
    }
}

impl fmt::Display for MarkedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    // restricted growth strings
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(i: usize, maxv: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        let n = rgs.len();
        if i == n {
            let k = rgs.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); k];
            for (j, &b) in rgs.iter().enumerate() {
                blocks[b].push(j);
            }
            out.push(blocks);
            return;
        }
        for v in 0..=maxv + 1 {
            rgs[i] = v;
            rec(i + 1, maxv.max(v), rgs, out);
        }
    }
    if n > 0 {
        rgs[0] = 0;
        rec(1, 0, &mut rgs, &mut out);
    }
    out
}

/// All marked partitions of {1,…,n}: more blocks first, then block structure, then dotted entries.
pub fn enumerate_marked_partitions(n: usize) -> Result<Vec<MarkedPartition>> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let mut parts = set_partitions(n);
    parts.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut out = Vec::new();
    for p in parts {
        let mut choice = vec![0usize; p.len()];
        loop {
            let blocks = p
                .iter()
                .zip(&choice)
                .map(|(m, &c)| Block { members: m.clone(), dotted: m[c] })
                .collect();
            out.push(MarkedPartition { n, blocks });
            let mut r = p.len();
            loop {
                if r == 0 {
                    break;
                }
                r -= 1;
                choice[r] += 1;
                if choice[r] < p[r].len() {
                    break;
                }
                choice[r] = 0;
                if r == 0 {
                    r = usize::MAX;
                    break;
                }
            }
            if r == usize::MAX {
                break;
            }
        }
    }
    Ok(out)
}

/// τ_S(k_p,k_q) = min_{ℓ∈A_q} e(k_p,ℓ)/e(k_q,ℓ).
pub fn tau(e: &StandardMatrix, s: &MarkedPartition, p: usize, q: usize) -> Result<Rat> {
    let nb = s.blocks.len();
    for idx in [p, q] {
        if idx >= nb {
            return Err(Error::Index { index: idx, size: nb });
        }
    }
    let kp = s.blocks[p].dotted;
    let kq = s.blocks[q].dotted;
    Ok(s.blocks[q]
        .members
        .iter()
        .map(|&l| e.e(kp, l) / e.e(kq, l))
        .min()
        .unwrap())
}

/// A homogeneous linear constraint a·t ≤ 0 (or < 0 when strict).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: Vec<Rat>,
    pub strict: bool,
}

impl Constraint {
    pub fn holds(&self, t: &[Rat]) -> bool {
        let v: Rat = self.a.iter().zip(t).map(|(a, x)| a * x).sum();
        if self.strict {
            v < Rat::zero()
        } else {
            v <= Rat::zero()
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, a) in self.a.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{}*t{}", display(a), j + 1)?;
        }
        if first {
            f.write_str("0")?;
        }
        f.write_str(if self.strict { " < 0" } else { " <= 0" })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeOwner {
    Partition(MarkedPartition),
    Face(MarkedPartition),
    Dotted(Vec<usize>),
}

/// An intersection of homogeneous half-spaces in ℝⁿ (nonnegativity included explicitly).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cone {
    pub owner: ConeOwner,
    pub n: usize,
    pub constraints: Vec<Constraint>,
}

impl Cone {
    pub fn contains(&self, t: &[Rat]) -> bool {
        self.constraints.iter().all(|c| c.holds(t))
    }

    pub fn contains_int(&self, l: &[i64]) -> bool {
        self.contains(&to_rats(l))
    }

    /// Whether some point satisfies every nonzero constraint strictly.
    pub fn interior_nonempty(&self) -> bool {
        let n = self.n;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for c in &self.constraints {
            if c.a.iter().all(|x| x.is_zero()) {
                if c.strict {
                    return false;
                }
                continue;
            }
            let mut row = c.a.clone();
            row.push(Rat::one());
            rows.push(row);
            rhs.push(Rat::zero());
        }
        let mut sum = vec![Rat::one(); n];
        sum.push(Rat::zero());
        rows.push(sum);
        rhs.push(Rat::one());
        let mut cap = vec![Rat::zero(); n];
        cap.push(Rat::one());
        rows.push(cap);
        rhs.push(Rat::one());
        let mut obj = vec![Rat::zero(); n];
        obj.push(Rat::one());
        match maximize(&rows, &rhs, &obj) {
            LpOutcome::Optimal { value, .. } => value > Rat::zero(),
            _ => false,
        }
    }

    fn nonneg(n: usize) -> Vec<Constraint> {
        (0..n)
            .map(|j| {
                let mut a = vec![Rat::zero(); n];
                a[j] = -Rat::one();
                Constraint { a, strict: false }
            })
            .collect()
    }
}

pub fn to_rats(l: &[i64]) -> Vec<Rat> {
    l.iter().map(|&x| Rat::from_integer(x as i128)).collect()
}

/// t_k dominant in n̂_j(t): t_k/e(k,j) ≥ t_i/e(i,j) for every i.
pub fn is_dominant(e: &StandardMatrix, t: &[Rat], k: usize, j: usize) -> bool {
    let tk = t[k] / e.e(k, j);
    (0..e.n()).all(|i| t[i] / e.e(i, j) <= tk)
}

/// Γ_S: for i ∈ A_r, t_{k_r} is dominant in n̂_i(t).
pub fn cone_gamma(e: &StandardMatrix, s: &MarkedPartition) -> Cone {
    let n = e.n();
    let mut constraints = Cone::nonneg(n);
    for b in &s.blocks {
        let k = b.dotted;
        for &i in &b.members {
            for j in 0..n {
                if j == k {
                    continue;
                }
                let mut a = vec![Rat::zero(); n];
                a[j] += Rat::one() / e.e(j, i);
                a[k] -= Rat::one() / e.e(k, i);
                if a.iter().any(|x| !x.is_zero()) {
                    constraints.push(Constraint { a, strict: false });
                }
            }
        }
    }
    Cone { owner: ConeOwner::Partition(s.clone()), n, constraints }
}

/// The reduced description: t_j e(k_r,j) ≤ t_{k_r} on A_r and t_{k_p} ≤ τ_S(k_p,k_q) t_{k_q}.
pub fn cone_reduced(e: &StandardMatrix, s: &MarkedPartition) -> Cone {
    let n = e.n();
    let mut constraints = Cone::nonneg(n);
    for b in &s.blocks {
        let k = b.dotted;
        for &j in &b.members {
            if j == k {
                continue;
            }
            let mut a = vec![Rat::zero(); n];
            a[j] = e.e(k, j);
            a[k] = -Rat::one();
            constraints.push(Constraint { a, strict: false });
        }
    }
    let nb = s.blocks.len();
    for p in 0..nb {
        for q in 0..nb {
            if p == q {
                continue;
            }
            let mut a = vec![Rat::zero(); n];
            a[s.blocks[p].dotted] = Rat::one();
            a[s.blocks[q].dotted] = -tau(e, s, p, q).unwrap();
            constraints.push(Constraint { a, strict: false });
        }
    }
    Cone { owner: ConeOwner::Partition(s.clone()), n, constraints }
}

/// Γ(E), the cone of the principal partition.
pub fn principal_cone(e: &StandardMatrix) -> Cone {
    cone_gamma(e, &MarkedPartition::principal(e.n()))
}

/// F_S = Γ_S ∩ Γ(E).
pub fn face(e: &StandardMatrix, s: &MarkedPartition) -> Cone {
    let mut c = cone_gamma(e, s);
    let n = e.n();
    c.constraints.extend(principal_cone(e).constraints.into_iter().skip(n));
    c.owner = ConeOwner::Face(s.clone());
    c
}

/// Strict pairwise conditions t_{k_p} < e(k_p,k_q) t_{k_q} for distinct dotted entries.
pub fn strict_dotted(e: &StandardMatrix, d: &[usize]) -> Vec<Constraint> {
    let n = e.n();
    let mut out = Vec::new();
    for &p in d {
        for &q in d {
            if p != q {
                let mut a = vec![Rat::zero(); n];
                a[p] = Rat::one();
                a[q] = -e.e(p, q);
                out.push(Constraint { a, strict: true });
            }
        }
    }
    out
}

/// The dotted set D(t) with a canonical witness partition (None for t = 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    pub dotted: Vec<usize>,
    pub witness: Option<MarkedPartition>,
}

/// All marked partitions of n, their cones, and which cones have nonempty interior.
#[derive(Clone, Debug)]
pub struct ConeCensus {
    pub matrix: StandardMatrix,
    pub partitions: Vec<MarkedPartition>,
    pub cones: Vec<Cone>,
    pub nonempty: Vec<bool>,
}

impl ConeCensus {
    pub fn new(e: &StandardMatrix) -> Self {
        let partitions = enumerate_marked_partitions(e.n()).unwrap();
        let cones: Vec<Cone> = partitions.iter().map(|s| cone_gamma(e, s)).collect();
        let nonempty = cones.iter().map(|c| c.interior_nonempty()).collect();
        ConeCensus { matrix: e.clone(), partitions, cones, nonempty }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Indices into `partitions` of 𝓢_E.
    pub fn admissible(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.partitions.len()).filter(move |&i| self.nonempty[i])
    }

    pub fn is_admissible(&self, s: &MarkedPartition) -> bool {
        self.partitions.iter().position(|p| p == s).is_some_and(|i| self.nonempty[i])
    }

    /// Indices of S ∈ 𝓢_E with t ∈ Γ_S.
    pub fn containing(&self, t: &[Rat]) -> Vec<usize> {
        self.admissible().filter(|&i| self.cones[i].contains(t)).collect()
    }

    pub fn dominant_set(&self, t: &[Rat]) -> Dominance {
        if t.iter().all(|x| x.is_zero()) {
            return Dominance { dotted: vec![], witness: None };
        }
        let cands = self.containing(t);
        let sets: Vec<BTreeSet<usize>> = cands
            .iter()
            .map(|&i| self.partitions[i].dotted().into_iter().collect())
            .collect();
        let min = sets
            .iter()
            .min_by_key(|s| s.len())
            .expect("every nonzero point lies in some cone")
            .clone();
        debug_assert!(sets.iter().all(|s| min.is_subset(s)));
        let dotted: Vec<usize> = min.into_iter().collect();
        let witness = self.canonical_witness(t, &dotted).unwrap_or_else(|| {
            let i = cands
                .iter()
                .copied()
                .find(|&i| self.partitions[i].dotted() == dotted)
                .unwrap();
            self.partitions[i].clone()
        });
        Dominance { dotted, witness: Some(witness) }
    }

    pub fn dominant_set_int(&self, l: &[i64]) -> Dominance {
        self.dominant_set(&to_rats(l))
    }

    fn canonical_witness(&self, t: &[Rat], dotted: &[usize]) -> Option<MarkedPartition> {
        let e = &self.matrix;
        let n = e.n();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); dotted.len()];
        for i in 0..n {
            let r = if let Some(r) = dotted.iter().position(|&k| k == i) {
                r
            } else {
                let mut best = 0;
                for (r, &k) in dotted.iter().enumerate() {
                    if t[k] / e.e(k, i) > t[dotted[best]] / e.e(dotted[best], i) {
                        best = r;
                    }
                }
                best
            };
            members[r].push(i);
        }
        let blocks = members
            .into_iter()
            .zip(dotted)
            .map(|(m, &k)| Block { members: m, dotted: k })
            .collect();
        let s = MarkedPartition::new(n, blocks).ok()?;
        let idx = self.partitions.iter().position(|p| *p == s)?;
        (self.nonempty[idx] && self.cones[idx].contains(t)).then_some(s)
    }

    /// Membership in Γ(D) via the union-with-strict-conditions description.
    pub fn in_gamma_d(&self, t: &[Rat], d: &[usize]) -> bool {
        if d.is_empty() {
            return t.iter().all(|x| x.is_zero());
        }
        if t.iter().any(|x| *x < Rat::zero()) || t.iter().all(|x| x.is_zero()) {
            return false;
        }
        let strict = strict_dotted(&self.matrix, d);
        if !strict.iter().all(|c| c.holds(t)) || d.iter().any(|&k| t[k].is_zero() && d.len() > 1) {
            return false;
        }
        self.admissible()
            .any(|i| self.partitions[i].dotted() == d && self.cones[i].contains(t))
    }

    /// F(D) = Γ(D) ∩ Γ(E), as a union of faces with the strict dotted conditions.
    pub fn face_d(&self, d: &[usize]) -> Vec<Cone> {
        let n = self.n();
        if d.is_empty() {
            let constraints = (0..n)
                .map(|j| {
                    let mut a = vec![Rat::zero(); n];
                    a[j] = Rat::one();
                    Constraint { a, strict: false }
                })
                .chain(Cone::nonneg(n))
                .collect();
            return vec![Cone { owner: ConeOwner::Dotted(vec![]), n, constraints }];
        }
        self.admissible()
            .filter(|&i| self.partitions[i].dotted() == d)
            .map(|i| {
                let mut c = face(&self.matrix, &self.partitions[i]);
                c.constraints.extend(strict_dotted(&self.matrix, d));
                for &k in d {
                    let mut a = vec![Rat::zero(); n];
                    a[k] = -Rat::one();
                    c.constraints.push(Constraint { a, strict: true });
                }
                c.owner = ConeOwner::Dotted(d.to_vec());
                c
            })
            .collect()
    }
}
