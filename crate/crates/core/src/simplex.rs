//! Exact-rational phase-one simplex for small feasibility problems.
//!
//! Decides whether `{x ≥ 0 : A x (=|≤|≥) b}` is non-empty. A feasible answer
//! carries a point; an infeasible one carries Farkas multipliers `y` with
//! `yᵀA ≤ 0`, `yᵀb > 0` and the sign pattern of the row relations
//! (`y ≤ 0` on `≤` rows, `y ≥ 0` on `≥` rows). Bland's rule keeps the
//! pivoting finite.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub relation: Relation,
    pub rhs: BigRational,
}

impl Constraint {
    pub fn new(coeffs: Vec<BigRational>, relation: Relation, rhs: BigRational) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Feasible(Vec<BigRational>),
    Infeasible(Vec<BigRational>),
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    z: Vec<BigRational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let inv = BigRational::one() / &self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let support: Vec<usize> = (0..=self.width)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<BigRational>| {
            let f = row[col].clone();
            if f.is_zero() {
                return;
            }
            for &j in &support {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.z);
        self.basis[r] = col;
    }

    fn entering(&self) -> Option<usize> {
        (0..self.width).find(|&j| self.z[j].is_positive())
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs = self.width;
        let mut best: Option<(usize, BigRational)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if !row[col].is_positive() {
                continue;
            }
            let ratio = &row[rhs] / &row[col];
            let better = match &best {
                None => true,
                Some((b, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*b]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Finds a point of the polyhedron or a Farkas certificate of emptiness.
pub fn find_feasible_point(num_vars: usize, constraints: &[Constraint]) -> LpOutcome {
    let m = constraints.len();
    let slack_rows: Vec<usize> = (0..m)
        .filter(|&i| constraints[i].relation != Relation::Eq)
        .collect();
    let n_slack = slack_rows.len();
    let art0 = num_vars + n_slack;
    let width = art0 + m;

    let mut signs = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for (i, c) in constraints.iter().enumerate() {
        assert_eq!(c.coeffs.len(), num_vars, "row {i} has wrong width");
        let mut row = vec![BigRational::zero(); width + 1];
        row[..num_vars].clone_from_slice(&c.coeffs);
        if let Some(k) = slack_rows.iter().position(|&r| r == i) {
            row[num_vars + k] = match c.relation {
                Relation::Le => BigRational::one(),
                _ => -BigRational::one(),
            };
        }
        row[width] = c.rhs.clone();
        let sign = if c.rhs.is_negative() { -1 } else { 1 };
        if sign < 0 {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[art0 + i] = BigRational::one();
        signs.push(sign);
        rows.push(row);
    }

    // z_j = Σ_i c_B(i)·T_ij − c_j with every artificial basic at cost 1.
    let mut z = vec![BigRational::zero(); width + 1];
    for row in &rows {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                z[j] += v;
            }
        }
    }
    for zj in &mut z[art0..width] {
        *zj -= BigRational::one();
    }

    let mut t = Tableau {
        rows,
        z,
        basis: (art0..width).collect(),
        width,
    };
    while let Some(col) = t.entering() {
        let r = t.leaving(col).expect("phase one is bounded below by zero");
        t.pivot(r, col);
    }

    if t.z[width].is_zero() {
        let mut x = vec![BigRational::zero(); num_vars];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < num_vars {
                x[b] = t.rows[i][width].clone();
            }
        }
        LpOutcome::Feasible(x)
    } else {
        let y = (0..m)
            .map(|i| {
                let y = &t.z[art0 + i] + BigRational::one();
                if signs[i] < 0 {
                    -y
                } else {
                    y
                }
            })
            .collect();
        LpOutcome::Infeasible(y)
    }
}

pub fn row_value(coeffs: &[BigRational], x: &[BigRational]) -> BigRational {
    coeffs
        .iter()
        .zip(x)
        .filter(|(a, _)| !a.is_zero())
        .fold(BigRational::zero(), |acc, (a, v)| acc + a * v)
}

/// Checks `x ≥ 0` and every constraint.
pub fn check_point(constraints: &[Constraint], x: &[BigRational]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && constraints.iter().all(|c| {
            let lhs = row_value(&c.coeffs, x);
            match c.relation {
                Relation::Eq => lhs == c.rhs,
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
}

/// Checks the Farkas conditions for `y` directly against the constraints.
pub fn check_farkas(num_vars: usize, constraints: &[Constraint], y: &[BigRational]) -> bool {
    if y.len() != constraints.len() {
        return false;
    }
    let signs_ok = constraints.iter().zip(y).all(|(c, yi)| match c.relation {
        Relation::Eq => true,
        Relation::Le => !yi.is_positive(),
        Relation::Ge => !yi.is_negative(),
    });
    let columns_ok = (0..num_vars).all(|j| {
        let col: BigRational = constraints
            .iter()
            .zip(y)
            .fold(BigRational::zero(), |acc, (c, yi)| acc + &c.coeffs[j] * yi);
        !col.is_positive()
    });
    let rhs: BigRational = constraints
        .iter()
        .zip(y)
        .fold(BigRational::zero(), |acc, (c, yi)| acc + &c.rhs * yi);
    signs_ok && columns_ok && rhs.is_positive()
}
