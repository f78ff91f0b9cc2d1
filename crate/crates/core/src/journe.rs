//! Journé-type covering computations in a finite dyadic product model.
//!
//! Each of the s factors is the dyadic tree of [0,1) cut at a fixed depth D, so open sets are unions
//! of finest cells and every measure below is an exact dyadic rational.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// Largest log₂ of the number of finest cells (and of the dilation grid) the model accepts.
pub const MAX_CELLS_LOG2: u32 = 24;

/// A dyadic rectangle: in factor r the interval [index_r 2^{−level_r}, (index_r + 1) 2^{−level_r}).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub level: Vec<u32>,
    pub index: Vec<u32>,
}

impl Rect {
    pub fn new(level: Vec<u32>, index: Vec<u32>) -> Self {
        Rect { level, index }
    }

    pub fn s(&self) -> usize {
        self.level.len()
    }

    /// The whole model [0,1)^s.
    pub fn root(s: usize) -> Self {
        Rect { level: vec![0; s], index: vec![0; s] }
    }

    /// 2^{m e_r}R: the ancestor m generations up in factor r, if it exists.
    pub fn parent(&self, r: usize, m: u32) -> Option<Rect> {
        if m > self.level[r] {
            return None;
        }
        let mut out = self.clone();
        out.level[r] -= m;
        out.index[r] >>= m;
        Some(out)
    }

    /// 2^m R with a multi-index m.
    pub fn enlarge(&self, m: &[u32]) -> Option<Rect> {
        let mut out = self.clone();
        for (r, &k) in m.iter().enumerate() {
            out = out.parent(r, k)?;
        }
        Some(out)
    }

    pub fn measure(&self) -> Rat {
        Rat::new(1, 1i128 << self.level.iter().sum::<u32>())
    }

    pub fn contains(&self, other: &Rect) -> bool {
        (0..self.s()).all(|r| other.level[r] >= self.level[r] && other.index[r] >> (other.level[r] - self.level[r]) == self.index[r])
    }

    /// Dyadic rectangles are nested or disjoint factor by factor.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let mut out = self.clone();
        for r in 0..self.s() {
            let (fine, coarse) = if self.level[r] >= other.level[r] { (self, other) } else { (other, self) };
            if fine.index[r] >> (fine.level[r] - coarse.level[r]) != coarse.index[r] {
                return None;
            }
            out.level[r] = fine.level[r];
            out.index[r] = fine.index[r];
        }
        Some(out)
    }

    /// The factors listed, in order.
    pub fn project(&self, factors: &[usize]) -> Rect {
        Rect { level: factors.iter().map(|&r| self.level[r]).collect(), index: factors.iter().map(|&r| self.index[r]).collect() }
    }

    fn cell_range(&self, r: usize, depth: u32) -> (usize, usize) {
        let w = 1usize << (depth - self.level[r]);
        (self.index[r] as usize * w, (self.index[r] as usize + 1) * w)
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.level.iter().zip(&self.index).map(|(l, i)| format!("{l}:{i}")).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// The s-factor model with depth D per factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub s: usize,
    pub depth: u32,
}

impl Model {
    pub fn new(s: usize, depth: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::NonPositiveParameter("number of factors"));
        }
        if depth as usize * s > MAX_CELLS_LOG2 as usize - s {
            return Err(Error::DepthCap(format!("depth {depth} with {s} factors exceeds 2^{} cells", MAX_CELLS_LOG2 - s as u32)));
        }
        Ok(Model { s, depth })
    }

    pub fn side(&self) -> usize {
        1 << self.depth
    }

    pub fn cells(&self) -> usize {
        1 << (self.depth as usize * self.s)
    }

    /// Measure of one finest cell.
    pub fn cell_measure(&self) -> Rat {
        Rat::new(1, 1i128 << (self.depth as usize * self.s))
    }

    fn linear(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &v| (acc << self.depth) | v)
    }

    pub fn check_rect(&self, rect: &Rect) -> Result<()> {
        if rect.s() != self.s || rect.index.len() != self.s {
            return Err(Error::Precondition(format!("rectangle {rect} has the wrong number of factors")));
        }
        for r in 0..self.s {
            if rect.level[r] > self.depth {
                return Err(Error::DepthCap(format!("rectangle {rect} is finer than depth {}", self.depth)));
            }
            if rect.index[r] >= 1 << rect.level[r] {
                return Err(Error::Index { index: rect.index[r] as usize, size: 1 << rect.level[r] });
            }
        }
        Ok(())
    }

    pub fn fill(&self, set: &mut FixedBitSet, rect: &Rect) {
        let ranges: Vec<(usize, usize)> = (0..self.s).map(|r| rect.cell_range(r, self.depth)).collect();
        let last = self.s - 1;
        for_each_index(&ranges[..last], |prefix| {
            let mut c: Vec<usize> = prefix.to_vec();
            c.push(ranges[last].0);
            let start = self.linear(&c);
            set.insert_range(start..start + ranges[last].1 - ranges[last].0);
        });
    }

    pub fn rect_set(&self, rect: &Rect) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.cells());
        self.fill(&mut set, rect);
        set
    }

    /// All level tuples, coarse to fine.
    pub fn level_tuples(&self) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for _ in 0..self.s {
            out = out.into_iter().flat_map(|p: Vec<u32>| (0..=self.depth).map(move |l| [p.clone(), vec![l]].concat())).collect();
        }
        out
    }

    /// Every dyadic rectangle with the given levels.
    pub fn rects_at(&self, level: &[u32]) -> Vec<Rect> {
        let ranges: Vec<(usize, usize)> = level.iter().map(|&l| (0, 1usize << l)).collect();
        let mut out = Vec::new();
        for_each_index(&ranges, |idx| out.push(Rect::new(level.to_vec(), idx.iter().map(|&i| i as u32).collect())));
        out
    }
}

/// Calls f on every multi-index of the product of half-open ranges.
fn for_each_index(ranges: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|(a, b)| a >= b) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < ranges[k].1 {
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

/// Summed-area table of a cell set: rectangle counts in 2^s lookups.
struct Counts {
    model: Model,
    table: Vec<u32>,
}

impl Counts {
    fn new(model: Model, set: &FixedBitSet) -> Self {
        let n = model.side() + 1;
        let mut table = vec![0u32; n.pow(model.s as u32)];
        let strides: Vec<usize> = (0..model.s).map(|r| n.pow((model.s - 1 - r) as u32)).collect();
        for i in set.ones() {
            let mut at = 0;
            let mut rest = i;
            for r in (0..model.s).rev() {
                at += ((rest & (model.side() - 1)) + 1) * strides[r];
                rest >>= model.depth;
            }
            table[at] += 1;
        }
        for r in 0..model.s {
            for i in 0..table.len() {
                if (i / strides[r]) % n > 0 {
                    table[i] += table[i - strides[r]];
                }
            }
        }
        Counts { model, table }
    }

    fn count(&self, rect: &Rect) -> u64 {
        let n = self.model.side() + 1;
        let s = self.model.s;
        let ranges: Vec<(usize, usize)> = (0..s).map(|r| rect.cell_range(r, self.model.depth)).collect();
        let mut total: i64 = 0;
        for corner in 0..(1usize << s) {
            let mut at = 0;
            let mut sign = 1i64;
            for (r, range) in ranges.iter().enumerate() {
                let v = if corner >> r & 1 == 1 {
                    range.1
                } else {
                    sign = -sign;
                    range.0
                };
                at = at * n + v;
            }
            total += sign * self.table[at] as i64;
        }
        total as u64
    }
}

/// Ω as a set of finest cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenSetModel {
    pub model: Model,
    cells: FixedBitSet,
}

impl OpenSetModel {
    pub fn new(model: Model, rects: &[Rect]) -> Result<Self> {
        let mut cells = FixedBitSet::with_capacity(model.cells());
        for r in rects {
            model.check_rect(r)?;
            model.fill(&mut cells, r);
        }
        Self::from_cells(model, cells)
    }

    pub fn from_cells(model: Model, cells: FixedBitSet) -> Result<Self> {
        if cells.count_ones(..) == 0 {
            return Err(Error::Precondition("open set has zero measure".into()));
        }
        Ok(OpenSetModel { model, cells })
    }

    pub fn count(&self) -> usize {
        self.cells.count_ones(..)
    }

    pub fn measure(&self) -> Rat {
        self.model.cell_measure() * Rat::from_integer(self.count() as i128)
    }

    pub fn cells(&self) -> &FixedBitSet {
        &self.cells
    }

    pub fn contains_rect(&self, rect: &Rect) -> bool {
        self.model.rect_set(rect).is_subset(&self.cells)
    }

    pub fn is_subset_of(&self, other: &OpenSetModel) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn intersection_measure(&self, rect: &Rect) -> Rat {
        let n = self.model.rect_set(rect).intersection_count(&self.cells);
        self.model.cell_measure() * Rat::from_integer(n as i128)
    }

    /// 𝔻(Ω): every dyadic rectangle contained in Ω.
    pub fn dyadic_family(&self) -> Vec<Rect> {
        let counts = Counts::new(self.model, &self.cells);
        let mut out = Vec::new();
        for level in self.model.level_tuples() {
            let full = 1u64 << (self.model.depth as usize * self.model.s - level.iter().sum::<u32>() as usize);
            out.extend(self.model.rects_at(&level).into_iter().filter(|r| counts.count(r) == full));
        }
        out
    }

    /// Canonical representation: greedily take the largest dyadic rectangles inside Ω (ties in
    /// lexicographic order of levels and indices) that are disjoint from those already taken.
    pub fn canonical(&self) -> Vec<Rect> {
        let mut family = self.dyadic_family();
        family.sort_by(|a, b| a.level.iter().sum::<u32>().cmp(&b.level.iter().sum::<u32>()).then(a.cmp(b)));
        let mut covered = FixedBitSet::with_capacity(self.model.cells());
        let mut out = Vec::new();
        for r in family {
            let set = self.model.rect_set(&r);
            if set.is_disjoint(&covered) {
                covered.union_with(&set);
                out.push(r);
            }
            if covered == self.cells {
                break;
            }
        }
        out
    }
}

/// {x : 𝓜_s 1_Ω(x) > 1/2} with the dyadic strong maximal operator, scanning rectangles through a
/// summed-area table.
pub fn maximal_level_set(omega: &OpenSetModel) -> OpenSetModel {
    let model = omega.model;
    let counts = Counts::new(model, &omega.cells);
    let mut out = omega.cells.clone();
    for level in model.level_tuples() {
        let volume = 1u64 << (model.depth as usize * model.s - level.iter().sum::<u32>() as usize);
        for r in model.rects_at(&level) {
            if 2 * counts.count(&r) > volume {
                model.fill(&mut out, &r);
            }
        }
    }
    OpenSetModel { model, cells: out }
}

/// The same level set by direct averaging over every rectangle containing each cell.
pub fn maximal_level_set_brute(omega: &OpenSetModel) -> OpenSetModel {
    let model = omega.model;
    let mut out = FixedBitSet::with_capacity(model.cells());
    let side = model.side();
    let mut cell = vec![0usize; model.s];
    for i in 0..model.cells() {
        let mut rest = i;
        for r in (0..model.s).rev() {
            cell[r] = rest & (side - 1);
            rest >>= model.depth;
        }
        let hit = model.level_tuples().into_iter().any(|level| {
            let rect = Rect::new(level.clone(), (0..model.s).map(|r| (cell[r] >> (model.depth - level[r])) as u32).collect());
            let set = model.rect_set(&rect);
            2 * set.intersection_count(&omega.cells) > set.count_ones(..)
        });
        out.set(i, hit);
    }
    OpenSetModel { model, cells: out }
}

/// Ω^{(0)}, …, Ω^{(j)}.
pub fn standard_enlargements(omega: &OpenSetModel, j: usize) -> Vec<OpenSetModel> {
    let mut out = vec![omega.clone()];
    for _ in 0..j {
        let next = maximal_level_set(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

pub fn standard_enlarge(omega: &OpenSetModel, j: usize) -> OpenSetModel {
    standard_enlargements(omega, j).pop().expect("non-empty")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embeddedness {
    pub mu: u32,
    /// The scan reached the root of the factor tree with the majority condition still holding.
    pub capped: bool,
}

fn embeddedness_with(omega: &OpenSetModel, counts: &Counts, rect: &Rect, r: usize) -> Result<Embeddedness> {
    if !omega.contains_rect(rect) {
        return Err(Error::Precondition(format!("rectangle {rect} is not contained in the open set")));
    }
    let model = omega.model;
    let mut mu = 0;
    for m in 0..=rect.level[r] {
        let p = rect.parent(r, m).expect("within the tree");
        let volume = 1u64 << (model.depth as usize * model.s - p.level.iter().sum::<u32>() as usize);
        if 2 * counts.count(&p) > volume {
            mu = m;
        }
    }
    Ok(Embeddedness { mu, capped: mu == rect.level[r] })
}

/// Emb^r_Ω(R) = 2^μ with μ the largest m for which Ω fills more than half of 2^{m e_r}R.
pub fn embeddedness(omega: &OpenSetModel, rect: &Rect, r: usize) -> Result<Embeddedness> {
    omega.model.check_rect(rect)?;
    if r >= omega.model.s {
        return Err(Error::Index { index: r, size: omega.model.s });
    }
    embeddedness_with(omega, &Counts::new(omega.model, &omega.cells), rect, r)
}

/// Whether some segment of the string lists the subset without repetition.
pub fn string_contains(string: &[usize], subset: &[usize]) -> bool {
    let b = subset.len();
    if b == 0 || b > string.len() {
        return false;
    }
    let want: BTreeSet<usize> = subset.iter().copied().collect();
    string.windows(b).any(|w| {
        let got: BTreeSet<usize> = w.iter().copied().collect();
        got.len() == b && got == want
    })
}

fn subsets(s: usize) -> Vec<Vec<usize>> {
    (1..1usize << s).map(|mask| (0..s).filter(|r| mask >> r & 1 == 1).collect()).collect()
}

pub fn is_complete(string: &[usize], s: usize) -> bool {
    subsets(s).iter().all(|b| string_contains(string, b))
}

/// A complete string: (1,…,s) extended greedily, each missing subset appended after the longest
/// suffix it can reuse. For s = 3 this is (1,2,3,1).
pub fn complete_string(s: usize) -> Vec<usize> {
    let mut string: Vec<usize> = (0..s).collect();
    let mut missing: Vec<Vec<usize>> = subsets(s);
    missing.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    for b in missing {
        if string_contains(&string, &b) {
            continue;
        }
        let set: BTreeSet<usize> = b.iter().copied().collect();
        // longest suffix of distinct elements of B
        let mut keep = 0;
        for k in 1..b.len() {
            let tail: BTreeSet<usize> = string[string.len() - k..].iter().copied().collect();
            if tail.len() == k && tail.is_subset(&set) {
                keep = k;
            }
        }
        let used: BTreeSet<usize> = string[string.len() - keep..].iter().copied().collect();
        string.extend(b.iter().filter(|r| !used.contains(r)));
    }
    string
}

/// The evolution of one rectangle along the string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectEvolution {
    pub rect: Rect,
    /// m^{(0)}, …, m^{(N)}.
    pub m: Vec<Vec<u32>>,
    /// μ_1, …, μ_N.
    pub mu: Vec<u32>,
    pub capped: Vec<bool>,
}

impl RectEvolution {
    /// R^{(j)} = 2^{m^{(j)}} R.
    pub fn enlarged(&self, j: usize) -> Rect {
        self.rect.enlarge(&self.m[j]).expect("enlargements stay in the tree")
    }
}

#[derive(Clone, Debug)]
pub struct EnlargementState {
    pub string: Vec<usize>,
    pub omega: OpenSetModel,
    /// Ω^{(0)}, …, Ω^{(N+1)}.
    pub enlargements: Vec<OpenSetModel>,
    pub rects: Vec<RectEvolution>,
}

/// Runs the string enlargement of every rectangle of the family.
pub fn string_enlarge(omega: &OpenSetModel, family: &[Rect], string: &[usize]) -> Result<EnlargementState> {
    let model = omega.model;
    if let Some(&bad) = string.iter().find(|&&r| r >= model.s) {
        return Err(Error::Index { index: bad, size: model.s });
    }
    for r in family {
        model.check_rect(r)?;
        if !omega.contains_rect(r) {
            return Err(Error::Precondition(format!("rectangle {r} is not contained in the open set")));
        }
    }
    let n = string.len();
    let enlargements = standard_enlargements(omega, n + 1);
    let counts: Vec<Counts> = enlargements.iter().map(|o| Counts::new(model, &o.cells)).collect();
    let mut rects = Vec::with_capacity(family.len());
    for rect in family {
        let mut ev = RectEvolution { rect: rect.clone(), m: vec![vec![0; model.s]], mu: Vec::new(), capped: Vec::new() };
        for (j, &r) in string.iter().enumerate().map(|(k, r)| (k + 1, r)) {
            let current = ev.enlarged(j - 1);
            let e = embeddedness_with(&enlargements[j], &counts[j], &current, r)?;
            let mut m = ev.m[j - 1].clone();
            m[r] += e.mu;
            ev.m.push(m);
            ev.mu.push(e.mu);
            ev.capped.push(e.capped);
        }
        rects.push(ev);
    }
    Ok(EnlargementState { string: string.to_vec(), omega: omega.clone(), enlargements, rects })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparabilities {
    pub omega: f64,
    /// |Ω̄| for Ω̄ = ∪ 2^{m^{(N)}(R)} R.
    pub bar: f64,
    /// |Ω̂| for Ω̂ = ∪ 2^{m^{(N)}(R)} ∘ R (dilation about the centre).
    pub hat: f64,
    /// |Ω^{(N+1)}|.
    pub enlarged: f64,
    pub bar_inside_enlarged: bool,
}

impl EnlargementState {
    pub fn n(&self) -> usize {
        self.string.len()
    }

    /// R^{(j)} ⊆ Ω^{(j+1)} for every rectangle and step.
    pub fn embedding_holds(&self) -> bool {
        self.rects.iter().all(|ev| (0..=self.n()).all(|j| self.enlargements[j + 1].contains_rect(&ev.enlarged(j))))
    }

    pub fn monotone(&self) -> bool {
        self.rects.iter().all(|ev| ev.m.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b)))
    }

    pub fn omega_bar(&self) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.omega.model.cells());
        for ev in &self.rects {
            self.omega.model.fill(&mut set, &ev.enlarged(self.n()));
        }
        set
    }

    /// |Ω̂| counted on a grid of step 2^{−(D+1)} over [−1/2, 3/2)^s.
    pub fn omega_hat_measure(&self) -> Result<Rat> {
        let model = self.omega.model;
        let d = model.depth;
        let bits = (d + 2) as usize * model.s;
        if bits > MAX_CELLS_LOG2 as usize {
            return Err(Error::DepthCap(format!("dilation grid needs 2^{bits} cells")));
        }
        let side = 1usize << (d + 2);
        let mut set = FixedBitSet::with_capacity(1 << bits);
        for ev in &self.rects {
            let m = &ev.m[self.n()];
            let ranges: Vec<(usize, usize)> = (0..model.s)
                .map(|r| {
                    let k = ev.rect.level[r];
                    let centre = (2 * ev.rect.index[r] as usize + 1) << (d - k);
                    let half = 1usize << (d + m[r] - k);
                    (centre + (1 << d) - half, centre + (1 << d) + half)
                })
                .collect();
            let last = model.s - 1;
            for_each_index(&ranges[..last], |prefix| {
                let start = prefix.iter().fold(0, |acc, &v| acc * side + v) * side + ranges[last].0;
                set.insert_range(start..start + ranges[last].1 - ranges[last].0);
            });
        }
        Ok(Rat::new(set.count_ones(..) as i128, 1i128 << bits) * Rat::from_integer(1i128 << model.s))
    }

    pub fn comparabilities(&self) -> Result<Comparabilities> {
        let model = self.omega.model;
        let bar = self.omega_bar();
        let last = self.enlargements.last().expect("non-empty");
        let cell = crate::rational::to_f64(&model.cell_measure());
        Ok(Comparabilities {
            omega: crate::rational::to_f64(&self.omega.measure()),
            bar: bar.count_ones(..) as f64 * cell,
            hat: crate::rational::to_f64(&self.omega_hat_measure()?),
            enlarged: crate::rational::to_f64(&last.measure()),
            bar_inside_enlarged: bar.is_subset(last.cells()),
        })
    }
}

/// |sh(𝓐)| by filling finest cells of the model spanned by the rectangles' factors.
pub fn shadow_measure(depth: u32, rects: &[Rect]) -> Result<Rat> {
    let Some(first) = rects.first() else { return Ok(Rat::from_integer(0)) };
    let model = Model::new(first.s(), depth)?;
    let mut set = FixedBitSet::with_capacity(model.cells());
    for r in rects {
        model.check_rect(r)?;
        model.fill(&mut set, r);
    }
    Ok(model.cell_measure() * Rat::from_integer(set.count_ones(..) as i128))
}

/// Largest family accepted by the inclusion–exclusion shadow.
pub const INCLUSION_EXCLUSION_CAP: usize = 18;

/// |sh(𝓐)| by inclusion–exclusion over intersections (dyadic rectangles meet in dyadic rectangles).
pub fn shadow_measure_inclusion_exclusion(rects: &[Rect]) -> Result<Rat> {
    if rects.len() > INCLUSION_EXCLUSION_CAP {
        return Err(Error::Precondition(format!("inclusion-exclusion is capped at {INCLUSION_EXCLUSION_CAP} rectangles")));
    }
    fn walk(rects: &[Rect], start: usize, current: Option<&Rect>, sign: i128, acc: &mut Rat) {
        for k in start..rects.len() {
            let next = match current {
                None => Some(rects[k].clone()),
                Some(c) => c.intersect(&rects[k]),
            };
            if let Some(n) = next {
                *acc += n.measure() * Rat::from_integer(sign);
                walk(rects, k + 1, Some(&n), -sign, acc);
            }
        }
    }
    let mut acc = Rat::from_integer(0);
    walk(rects, 0, None, 1, &mut acc);
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarberySeegerRow {
    pub m: Vec<u32>,
    pub lhs: Rat,
    /// lhs / |Ω|.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarberySeegerOptions {
    pub max_degree: u32,
    pub bound: f64,
}

impl Default for CarberySeegerOptions {
    fn default() -> Self {
        CarberySeegerOptions { max_degree: 4, bound: 32.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarberySeegerReport {
    pub subset: Vec<usize>,
    pub rows: Vec<CarberySeegerRow>,
    /// (p, least C with lhs ≤ C(1+|m′|)^p |Ω| over the grid).
    pub constants: Vec<(u32, f64)>,
    /// Smallest p whose least constant is within the bound.
    pub fitted_degree: Option<u32>,
    pub constant: f64,
    /// Least-squares slope of log max-ratio against log(1+|m′|), for reference.
    pub slope: f64,
    pub pass: bool,
}

/// Σ_{R′ ∈ Ū_B^{N,m′}} |R′|·|sh(V̄^{N,m′}(R′))| against C(1+|m′|)^p|Ω| over the grid of m′ up to the
/// largest observed m_B^{(N)}, computed exactly.
pub fn carbery_seeger_check(state: &EnlargementState, subset: &[usize], options: &CarberySeegerOptions) -> Result<CarberySeegerReport> {
    let model = state.omega.model;
    let mut b: Vec<usize> = subset.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.is_empty() || b.iter().any(|&r| r >= model.s) {
        return Err(Error::Precondition("subset must be a non-empty set of factors".into()));
    }
    if !string_contains(&state.string, &b) {
        return Err(Error::Precondition("the string does not contain the subset".into()));
    }
    let rest: Vec<usize> = (0..model.s).filter(|r| !b.contains(r)).collect();
    let n = state.n();
    let tagged: Vec<(Vec<u32>, Rect, Rect)> = state
        .rects
        .iter()
        .map(|ev| (b.iter().map(|&r| ev.m[n][r]).collect(), ev.rect.project(&b), ev.rect.project(&rest)))
        .collect();
    let top: Vec<u32> = (0..b.len()).map(|k| tagged.iter().map(|t| t.0[k]).max().unwrap_or(0)).collect();
    let omega = state.omega.measure();
    let ranges: Vec<(usize, usize)> = top.iter().map(|&t| (0, t as usize + 1)).collect();
    let mut grid = Vec::new();
    for_each_index(&ranges, |m| grid.push(m.iter().map(|&v| v as u32).collect::<Vec<u32>>()));
    let mut rows = Vec::with_capacity(grid.len());
    for m in grid {
        let mut groups: BTreeMap<&Rect, Vec<Rect>> = BTreeMap::new();
        for (mb, prime, second) in &tagged {
            if mb.iter().zip(&m).all(|(a, b)| a <= b) {
                groups.entry(prime).or_default().push(second.clone());
            }
        }
        let mut lhs = Rat::from_integer(0);
        for (prime, seconds) in groups {
            let sh = if rest.is_empty() { Rat::from_integer(1) } else { shadow_measure(model.depth, &seconds)? };
            lhs += prime.measure() * sh;
        }
        let ratio = crate::rational::to_f64(&(lhs / omega));
        rows.push(CarberySeegerRow { m, lhs, ratio });
    }
    let size = |m: &[u32]| m.iter().sum::<u32>() as f64;
    let constants: Vec<(u32, f64)> = (0..=options.max_degree)
        .map(|p| (p, rows.iter().map(|row| row.ratio / (1.0 + size(&row.m)).powi(p as i32)).fold(0.0, f64::max)))
        .collect();
    let fitted = constants.iter().find(|(_, c)| *c <= options.bound).copied();
    let mut by_size: BTreeMap<u32, f64> = BTreeMap::new();
    for row in &rows {
        let e = by_size.entry(row.m.iter().sum()).or_insert(0.0);
        *e = e.max(row.ratio);
    }
    let pts: Vec<(f64, f64)> = by_size.iter().filter(|(_, &v)| v > 0.0).map(|(&k, &v)| ((1.0 + k as f64).ln(), v.ln())).collect();
    let slope = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        num / den
    } else {
        0.0
    };
    Ok(CarberySeegerReport {
        subset: b,
        rows,
        constants,
        fitted_degree: fitted.map(|f| f.0),
        constant: fitted.map_or(f64::INFINITY, |f| f.1),
        slope,
        pass: fitted.is_some(),
    })
}

/// A union of `pieces` random dyadic rectangles with levels in 1..=max_level.
pub fn random_open_set(model: Model, pieces: usize, max_level: u32, rng: &mut impl Rng) -> OpenSetModel {
    let top = max_level.clamp(1, model.depth);
    let rects: Vec<Rect> = (0..pieces.max(1))
        .map(|_| {
            let level: Vec<u32> = (0..model.s).map(|_| rng.gen_range(1..=top)).collect();
            let index = level.iter().map(|&l| rng.gen_range(0..1u32 << l)).collect();
            Rect::new(level, index)
        })
        .collect();
    OpenSetModel::new(model, &rects).expect("random rectangles are valid and non-empty")
}

pub const JOURNE_FORMAT: &str = "multinorm-journe";

/// A stored instance: Ω in canonical form, an optional rectangle family (𝔻(Ω) when absent) and a
/// string written with 1-based factor labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub format: String,
    pub version: u32,
    pub s: usize,
    pub depth: u32,
    pub omega: Vec<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<Rect>>,
    pub string: Vec<usize>,
}

impl Instance {
    pub fn new(omega: &OpenSetModel, family: Option<Vec<Rect>>, string: &[usize]) -> Self {
        Instance {
            format: JOURNE_FORMAT.into(),
            version: 1,
            s: omega.model.s,
            depth: omega.model.depth,
            omega: omega.canonical(),
            family,
            string: string.iter().map(|r| r + 1).collect(),
        }
    }

    /// Ω, the family and the 0-based string.
    pub fn resolve(&self) -> Result<(OpenSetModel, Vec<Rect>, Vec<usize>)> {
        if self.format != JOURNE_FORMAT || self.version != 1 {
            return Err(Error::Parse(format!("unsupported instance format {} v{}", self.format, self.version)));
        }
        let model = Model::new(self.s, self.depth)?;
        let omega = OpenSetModel::new(model, &self.omega)?;
        let family = self.family.clone().unwrap_or_else(|| omega.dyadic_family());
        if self.string.iter().any(|&r| r == 0 || r > self.s) {
            return Err(Error::Parse("string entries are factor labels 1..=s".into()));
        }
        Ok((omega, family, self.string.iter().map(|r| r - 1).collect()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
