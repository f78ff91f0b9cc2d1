//! Exact rational simplex for small problems: maximize c·x subject to Ax ≤ b, x ≥ 0.
//!
//! Slack-form tableau with Bland's rule, so it always terminates.

use num_traits::{One, Zero};

use crate::rational::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, x: Vec<Rat> },
}

struct Tableau {
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    c: Vec<Rat>,
    v: Rat,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, l: usize, e: usize) {
        let ale = self.a[l][e];
        self.b[e] = self.b[l] / ale;
        let nb: Vec<usize> = self.nonbasic.iter().copied().filter(|&j| j != e).collect();
        for &j in &nb {
            self.a[e][j] = self.a[l][j] / ale;
        }
        self.a[e][l] = Rat::one() / ale;
        let bs: Vec<usize> = self.basic.iter().copied().filter(|&i| i != l).collect();
        for &i in &bs {
            let aie = self.a[i][e];
            if aie.is_zero() {
                self.a[i][l] = Rat::zero();
                continue;
            }
            let be = self.b[e];
            self.b[i] -= aie * be;
            for &j in &nb {
                let d = aie * self.a[e][j];
                self.a[i][j] -= d;
            }
            self.a[i][l] = -aie * self.a[e][l];
            self.a[i][e] = Rat::zero();
        }
        let ce = self.c[e];
        self.v += ce * self.b[e];
        for &j in &nb {
            let d = ce * self.a[e][j];
            self.c[j] -= d;
        }
        self.c[l] = -ce * self.a[e][l];
        self.c[e] = Rat::zero();
        for x in self.nonbasic.iter_mut() {
            if *x == e {
                *x = l;
            }
        }
        for x in self.basic.iter_mut() {
            if *x == l {
                *x = e;
            }
        }
    }

    /// Returns false if unbounded.
    fn run(&mut self) -> bool {
        loop {
            let e = match self.nonbasic.iter().copied().filter(|&j| self.c[j] > Rat::zero()).min() {
                Some(e) => e,
                None => return true,
            };
            let mut best: Option<(Rat, usize)> = None;
            for &i in &self.basic {
                if self.a[i][e] > Rat::zero() {
                    let delta = self.b[i] / self.a[i][e];
                    best = match best {
                        Some((d, k)) if d < delta || (d == delta && k < i) => Some((d, k)),
                        _ => Some((delta, i)),
                    };
                }
            }
            match best {
                Some((_, l)) => self.pivot(l, e),
                None => return false,
            }
        }
    }
}

pub fn maximize(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    // variables: 0..n original, n..n+m slack, n+m auxiliary
    let t = n + m + 1;
    let x0 = n + m;
    let mut tab = Tableau {
        a: vec![vec![Rat::zero(); t]; t],
        b: vec![Rat::zero(); t],
        c: vec![Rat::zero(); t],
        v: Rat::zero(),
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
    };
    for i in 0..m {
        for j in 0..n {
            tab.a[n + i][j] = a[i][j];
        }
        tab.b[n + i] = b[i];
    }
    let worst = (0..m).min_by(|&i, &k| b[i].cmp(&b[k]).then(i.cmp(&k)));
    if let Some(k) = worst.filter(|&k| b[k] < Rat::zero()) {
        tab.nonbasic.push(x0);
        for i in 0..m {
            tab.a[n + i][x0] = -Rat::one();
        }
        tab.c[x0] = -Rat::one();
        tab.pivot(n + k, x0);
        tab.run();
        if !tab.v.is_zero() {
            return LpOutcome::Infeasible;
        }
        if tab.basic.contains(&x0) {
            let e = tab
                .nonbasic
                .iter()
                .copied()
                .find(|&j| !tab.a[x0][j].is_zero())
                .expect("degenerate auxiliary row");
            tab.pivot(x0, e);
        }
        tab.nonbasic.retain(|&j| j != x0);
        tab.c = vec![Rat::zero(); t];
        tab.v = Rat::zero();
        for j in 0..n {
            if c[j].is_zero() {
                continue;
            }
            if tab.nonbasic.contains(&j) {
                tab.c[j] += c[j];
            } else {
                tab.v += c[j] * tab.b[j];
                let nb = tab.nonbasic.clone();
                for k in nb {
                    let d = c[j] * tab.a[j][k];
                    tab.c[k] -= d;
                }
            }
        }
    } else {
        tab.c[..n].copy_from_slice(c);
    }
    if !tab.run() {
        return LpOutcome::Unbounded;
    }
    let x = (0..n)
        .map(|j| if tab.basic.contains(&j) { tab.b[j] } else { Rat::zero() })
        .collect();
    LpOutcome::Optimal { value: tab.v, x }
}
