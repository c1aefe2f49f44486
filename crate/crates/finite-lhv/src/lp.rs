//! In-repo linear feasibility solver.
//!
//! Phase-1 simplex on a dense tableau, generic over the scalar type:
//! `f64` for throughput, `BigRational` for exact certification. Problems
//! are given in equality form `A x = b`, `x >= 0`; the solver either
//! returns a basic feasible solution (a vertex of the feasible polytope,
//! hence with at most `m` nonzero entries) or a Farkas vector `y` with
//! `y^T A <= 0` and `y^T b > 0` witnessing infeasibility.

use num_bigint::BigInt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic mode for the feasibility solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpMode {
    /// Plain `f64` pivoting with a 1e-11 pivot tolerance.
    Float,
    /// Exact rational arithmetic; pivot tolerance zero.
    Rational,
}

/// Scalar abstraction shared by the float and rational backends.
pub trait LpScalar: Clone + PartialOrd + std::fmt::Debug {
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    /// Entries with |x| <= pivot_tol are treated as exact zeros.
    fn pivot_tol() -> Self;
    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::pivot_tol()
    }
}

impl LpScalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn pivot_tol() -> Self {
        1e-11
    }
}

impl LpScalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn pivot_tol() -> Self {
        <BigRational as Zero>::zero()
    }
}

/// Basic feasible solution of `A x = b, x >= 0`.
#[derive(Debug, Clone)]
pub struct FeasibleSolution<S> {
    /// Full solution vector (length = number of structural columns).
    pub x: Vec<S>,
    /// Basic variable index per tableau row (structural < n, artificial >= n).
    pub basis: Vec<usize>,
    /// Phase-1 objective at termination (sum of artificial values).
    pub objective: S,
    /// max |A x - b| recomputed from the original data.
    pub residual: f64,
}

/// Farkas infeasibility witness: `y^T A <= 0` (up to pivot tolerance)
/// while `y^T b = excess > 0`.
#[derive(Debug, Clone)]
pub struct FarkasCertificate<S> {
    pub y: Vec<S>,
    pub excess: S,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<S> {
    Feasible(FeasibleSolution<S>),
    Infeasible(FarkasCertificate<S>),
}

/// Feasibility threshold on the phase-1 objective: a float run accepts a
/// residual up to this; the rational backend accepts only exact zero plus
/// the same explicit slack (inputs are f64-quantized, so boundary targets
/// may sit a few ulps outside the exact hull).
const FEAS_TOL: f64 = 1e-9;

/// Solve `A x = b, x >= 0` by phase-1 simplex.
///
/// `a` is row-major, `m x n`. Deterministic: Dantzig pricing with a Bland
/// fallback once the iteration count passes `5(m+n)`, smallest-index tie
/// breaks in the ratio test.
pub fn solve_feasibility<S: LpScalar>(a: &[Vec<S>], b: &[S]) -> Result<LpOutcome<S>> {
    let m = a.len();
    if m == 0 {
        return Ok(LpOutcome::Feasible(FeasibleSolution {
            x: Vec::new(),
            basis: Vec::new(),
            objective: S::zero(),
            residual: 0.0,
        }));
    }
    let n = a[0].len();

    // Tableau: m rows x (n structural + m artificial + rhs).
    let width = n + m + 1;
    let mut t: Vec<Vec<S>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let flip = b[i] < S::zero();
        let mut r: Vec<S> = Vec::with_capacity(width);
        for v in row {
            r.push(if flip { v.neg() } else { v.clone() });
        }
        for j in 0..m {
            r.push(if j == i { S::one() } else { S::zero() });
        }
        r.push(if flip { b[i].neg() } else { b[i].clone() });
        t.push(r);
    }

    // Phase-1 cost row: reduced costs of structural columns start at
    // -sum(rows); artificials at 0; last entry is -objective.
    let mut cost: Vec<S> = vec![S::zero(); width];
    for r in &t {
        for (j, c) in cost.iter_mut().enumerate() {
            if j < n || j == width - 1 {
                *c = c.sub(&r[j]);
            }
        }
    }

    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_iters = 200 * (m + n) + 2000;
    let bland_after = 5 * (m + n) + 50;

    for iter in 0..=max_iters {
        if iter == max_iters {
            return Err(Error::Numerical(format!(
                "simplex did not converge after {max_iters} iterations (m={m}, n={n})"
            )));
        }

        // Entering column: most negative reduced cost (Dantzig), or the
        // first negative one once in Bland mode.
        let mut enter: Option<usize> = None;
        if iter < bland_after {
            let mut best = S::pivot_tol().neg();
            for (j, c) in cost.iter().enumerate().take(width - 1) {
                if *c < best {
                    best = c.clone();
                    enter = Some(j);
                }
            }
        } else {
            for (j, c) in cost.iter().enumerate().take(width - 1) {
                if *c < S::pivot_tol().neg() {
                    enter = Some(j);
                    break;
                }
            }
        }

        let Some(e) = enter else {
            break; // optimal
        };

        // Ratio test; ties broken by smallest basic-variable index.
        let mut leave: Option<usize> = None;
        let mut best_ratio: Option<S> = None;
        for (i, row) in t.iter().enumerate() {
            let pivot = &row[e];
            if *pivot > S::pivot_tol() {
                let ratio = row[width - 1].div(pivot);
                let better = match &best_ratio {
                    None => true,
                    Some(r) => ratio < *r || (ratio == *r && basis[i] < basis[leave.unwrap()]),
                };
                if better {
                    best_ratio = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0);
            // reaching this means numerical breakdown.
            return Err(Error::Numerical(
                "phase-1 ratio test found no pivot row".into(),
            ));
        };

        // Pivot on (l, e).
        let pivot = t[l][e].clone();
        for v in t[l].iter_mut() {
            *v = v.div(&pivot);
        }
        for i in 0..m {
            if i != l && !t[i][e].is_zero_tol() {
                let f = t[i][e].clone();
                for j in 0..width {
                    let delta = f.mul(&t[l][j]);
                    t[i][j] = t[i][j].sub(&delta);
                }
                t[i][e] = S::zero();
            }
        }
        if !cost[e].is_zero_tol() {
            let f = cost[e].clone();
            for j in 0..width {
                let delta = f.mul(&t[l][j]);
                cost[j] = cost[j].sub(&delta);
            }
            cost[e] = S::zero();
        }
        basis[l] = e;
    }

    // Objective value = -cost[rhs].
    let objective = cost[width - 1].neg();

    if objective.to_f64() <= FEAS_TOL {
        let mut x = vec![S::zero(); n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] = t[i][width - 1].clone();
            }
        }
        // Residual against the original data.
        let mut residual = 0.0_f64;
        for (i, row) in a.iter().enumerate() {
            let mut acc = S::zero();
            for (j, v) in row.iter().enumerate() {
                acc = acc.add(&v.mul(&x[j]));
            }
            let r = acc.sub(&b[i]).abs().to_f64();
            if r > residual {
                residual = r;
            }
        }
        Ok(LpOutcome::Feasible(FeasibleSolution {
            x,
            basis,
            objective,
            residual,
        }))
    } else {
        // Farkas vector from the artificial reduced costs: y_i = 1 - cbar(s_i).
        let mut y = Vec::with_capacity(m);
        for i in 0..m {
            let yi = S::one().sub(&cost[n + i]);
            // Undo the sign flip applied to rows with negative rhs.
            if b[i] < S::zero() {
                y.push(yi.neg());
            } else {
                y.push(yi);
            }
        }
        Ok(LpOutcome::Infeasible(FarkasCertificate {
            y,
            excess: objective,
        }))
    }
}

/// Exact solve of the square rational system `B w = rhs`: rows are scaled
/// to integers, forward elimination runs fraction-free (Bareiss) over
/// `BigInt`, and back-substitution restores rationals. Returns `None` when
/// `B` is singular. Orders of magnitude faster than naive elimination in
/// `Ratio<BigInt>`, whose per-step gcd normalization dominates.
pub fn solve_square_system_rational(
    cols: &[Vec<BigRational>],
    rhs: &[BigRational],
) -> Option<Vec<BigRational>> {
    use num_integer::Integer;
    let k = cols.len();
    if k == 0 {
        return Some(Vec::new());
    }
    if cols[0].len() != k {
        return None;
    }

    // Clear denominators without inflating the matrix: rows are scaled by
    // the lcm of their *matrix* denominators only (1 for 0/1 systems), and
    // the right-hand side by one global lcm L, solving for L*w instead.
    let mut rhs_lcm = BigInt::from(1);
    for r in rhs {
        rhs_lcm = rhs_lcm.lcm(r.denom());
    }
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(k);
    for i in 0..k {
        let mut row_lcm = BigInt::from(1);
        for c in cols {
            row_lcm = row_lcm.lcm(c[i].denom());
        }
        let mut row: Vec<BigInt> = Vec::with_capacity(k + 1);
        for c in cols {
            row.push(c[i].numer() * (&row_lcm / c[i].denom()));
        }
        row.push(rhs[i].numer() * (&rhs_lcm / rhs[i].denom()) * &row_lcm);
        m.push(row);
    }

    // Bareiss fraction-free forward elimination with row pivoting.
    let zero = BigInt::from(0);
    let mut prev = BigInt::from(1);
    for col in 0..k {
        let piv = (col..k).find(|&r| m[r][col] != zero)?;
        m.swap(col, piv);
        for r in (col + 1)..k {
            for j in (col + 1)..=k {
                let num = &m[col][col] * &m[r][j] - &m[r][col] * &m[col][j];
                m[r][j] = num / &prev;
            }
            m[r][col] = zero.clone();
        }
        prev = m[col][col].clone();
    }

    // Back substitution in rationals on the triangular system, undoing
    // the right-hand-side scaling at the end.
    let mut w = vec![<BigRational as LpScalar>::zero(); k];
    for i in (0..k).rev() {
        let mut acc = BigRational::from_integer(m[i][k].clone());
        for j in (i + 1)..k {
            acc -= BigRational::from_integer(m[i][j].clone()) * &w[j];
        }
        if m[i][i] == zero {
            return None;
        }
        w[i] = acc / BigRational::from_integer(m[i][i].clone());
    }
    let scale = BigRational::from_integer(rhs_lcm);
    for wi in w.iter_mut() {
        *wi = &*wi / &scale;
    }
    Some(w)
}

/// Exact solve of the square system `B w = rhs` by Gaussian elimination
/// (columns of `B` given as `cols`). Returns `None` if `B` is singular.
pub fn solve_square_system<S: LpScalar>(cols: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let k = cols.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let m = cols[0].len();
    if m != k {
        return None;
    }
    // Augmented row-major matrix.
    let mut aug: Vec<Vec<S>> = (0..m)
        .map(|i| {
            let mut row: Vec<S> = cols.iter().map(|c| c[i].clone()).collect();
            row.push(rhs[i].clone());
            row
        })
        .collect();

    for col in 0..k {
        // Pivot: largest magnitude in f64 terms keeps the float backend
        // stable; any nonzero works for rationals.
        let mut piv = None;
        let mut best = 0.0_f64;
        for (r, row) in aug.iter().enumerate().skip(col) {
            let mag = row[col].abs().to_f64();
            if !row[col].is_zero_tol() && mag > best {
                best = mag;
                piv = Some(r);
            }
        }
        let piv = piv?;
        aug.swap(col, piv);
        let d = aug[col][col].clone();
        for v in aug[col].iter_mut() {
            *v = v.div(&d);
        }
        for r in 0..m {
            if r != col && !aug[r][col].is_zero_tol() {
                let f = aug[r][col].clone();
                for j in col..=k {
                    let delta = f.mul(&aug[col][j]);
                    aug[r][j] = aug[r][j].sub(&delta);
                }
            }
        }
    }
    Some((0..k).map(|i| aug[i][k].clone()).collect())
}
