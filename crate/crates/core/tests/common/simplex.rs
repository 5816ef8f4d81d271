//! Dense two-phase simplex with Bland's rule. Small problems only; used as an
//! independent reference for the production allocators.

const TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl Outcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// minimize `c.x` subject to rows, `x >= 0`.
#[derive(Clone, Debug)]
pub struct Lp {
    n: usize,
    c: Vec<f64>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

impl Lp {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            c: vec![0.0; n],
            rows: Vec::new(),
        }
    }

    pub fn cost(&mut self, j: usize, v: f64) {
        self.c[j] = v;
    }

    pub fn row(&mut self, terms: &[(usize, f64)], cmp: Cmp, rhs: f64) {
        let mut a = vec![0.0; self.n];
        for &(j, v) in terms {
            a[j] += v;
        }
        self.rows.push((a, cmp, rhs));
    }

    pub fn solve(&self) -> Outcome {
        let m = self.rows.len();
        let rows: Vec<(Vec<f64>, Cmp, f64)> = self
            .rows
            .iter()
            .map(|(a, cmp, b)| {
                if *b < 0.0 {
                    let flipped = match cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *cmp, *b)
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let arts = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let first_art = self.n + slacks;
        let width = first_art + arts;
        let mut t = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0usize; m];
        let (mut s, mut a) = (self.n, first_art);
        for (i, (coef, cmp, b)) in rows.iter().enumerate() {
            t[i][..self.n].copy_from_slice(coef);
            t[i][width] = *b;
            match cmp {
                Cmp::Le => {
                    t[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Cmp::Ge => {
                    t[i][s] = -1.0;
                    s += 1;
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Cmp::Eq => {
                    t[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }

        let mut tab = Tableau { t, basis, width };
        let phase1: Vec<f64> = (0..width).map(|j| if j >= first_art { 1.0 } else { 0.0 }).collect();
        if !tab.optimize(&phase1, width) {
            unreachable!("phase one is bounded below by zero");
        }
        if tab.objective(&phase1) > 1e-7 {
            return Outcome::Infeasible;
        }
        for i in 0..m {
            if tab.basis[i] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
        let mut c2 = vec![0.0; width];
        c2[..self.n].copy_from_slice(&self.c);
        if !tab.optimize(&c2, first_art) {
            return Outcome::Unbounded;
        }
        let mut x = vec![0.0; self.n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < self.n {
                x[b] = tab.t[i][width];
            }
        }
        let value = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        Outcome::Optimal { x, value }
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    fn objective(&self, c: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| c[b] * self.t[i][self.width])
            .sum()
    }

    /// Minimizes `c` over columns `< allowed`. Returns false if unbounded.
    fn optimize(&mut self, c: &[f64], allowed: usize) -> bool {
        for _ in 0..200_000 {
            let reduced = |j: usize| {
                c[j] - self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| c[b] * self.t[i][j])
                    .sum::<f64>()
            };
            let Some(enter) = (0..allowed).find(|&j| !self.basis.contains(&j) && reduced(j) < -1e-9) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][enter];
                if a > TOL {
                    let ratio = self.t[i][self.width] / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter);
        }
        panic!("simplex did not terminate");
    }
}
