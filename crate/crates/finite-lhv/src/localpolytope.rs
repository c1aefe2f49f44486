//! Local-polytope membership: turn a state plus finite measurement sets
//! into a behavior table, decide membership in the convex hull of
//! deterministic strategies by linear programming, and extract an explicit
//! finite-shared-randomness model (or a separating Bell functional with a
//! brute-force-validated local bound).
//!
//! The float path solves the LP directly; rational mode re-derives the
//! returned basis (or the Farkas functional) in exact arithmetic and falls
//! back to a fully rational simplex if the certificate does not check out.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_decompose, AntipodalPairing, Polyhedron, UnitVector};
use crate::lp::{self, LpMode, LpOutcome, LpScalar};
use crate::quantum::{born_joint, noisy_state, DensityState, QubitSetting};

/// Finite-settings joint distribution p(a, b | x, y) with a, b in {+1, -1}.
/// Outcome index 0 encodes +1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorTable {
    pub m_a: usize,
    pub m_b: usize,
    /// Row-major over ((x * m_b + y) * 4 + ia * 2 + ib).
    pub probs: Vec<f64>,
}

impl BehaviorTable {
    pub fn new(m_a: usize, m_b: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != m_a * m_b * 4 {
            return Err(Error::InvalidInput(format!(
                "behavior table needs {} entries, got {}",
                m_a * m_b * 4,
                probs.len()
            )));
        }
        let t = Self { m_a, m_b, probs };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for x in 0..self.m_a {
            for y in 0..self.m_b {
                let mut sum = 0.0;
                for ia in 0..2 {
                    for ib in 0..2 {
                        let p = self.get(x, y, ia, ib);
                        if p < -1e-12 {
                            return Err(Error::InvalidInput(format!(
                                "negative probability {p:.3e} at ({x},{y})"
                            )));
                        }
                        sum += p;
                    }
                }
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "slice ({x},{y}) sums to {sum}, not 1"
                    )));
                }
            }
        }
        // No-signaling: marginals independent of the远 setting.
        for x in 0..self.m_a {
            let m0: [f64; 2] = [self.marginal_a(x, 0, 0), self.marginal_a(x, 0, 1)];
            for y in 1..self.m_b {
                for ia in 0..2 {
                    if (self.marginal_a(x, y, ia) - m0[ia]).abs() > 1e-10 {
                        return Err(Error::InvalidInput(format!(
                            "signaling: Alice's marginal at x={x} depends on y={y}"
                        )));
                    }
                }
            }
        }
        for y in 0..self.m_b {
            let m0: [f64; 2] = [self.marginal_b(0, y, 0), self.marginal_b(0, y, 1)];
            for x in 1..self.m_a {
                for ib in 0..2 {
                    if (self.marginal_b(x, y, ib) - m0[ib]).abs() > 1e-10 {
                        return Err(Error::InvalidInput(format!(
                            "signaling: Bob's marginal at y={y} depends on x={x}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ia: usize, ib: usize) -> f64 {
        self.probs[(x * self.m_b + y) * 4 + ia * 2 + ib]
    }

    pub fn marginal_a(&self, x: usize, y: usize, ia: usize) -> f64 {
        self.get(x, y, ia, 0) + self.get(x, y, ia, 1)
    }

    pub fn marginal_b(&self, x: usize, y: usize, ib: usize) -> f64 {
        self.get(x, y, 0, ib) + self.get(x, y, 1, ib)
    }

    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        self.get(x, y, 0, 0) + self.get(x, y, 1, 1) - self.get(x, y, 0, 1) - self.get(x, y, 1, 0)
    }
}

/// One deterministic response pair: outcome per setting on each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a_outcomes: Vec<i8>,
    pub b_outcomes: Vec<i8>,
}

impl DeterministicStrategy {
    fn from_bits(sa: u32, sb: u32, m_a: usize, m_b: usize) -> Self {
        Self {
            a_outcomes: (0..m_a)
                .map(|x| if sa >> x & 1 == 1 { 1 } else { -1 })
                .collect(),
            b_outcomes: (0..m_b)
                .map(|y| if sb >> y & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }
}

/// Sparse mixture of deterministic strategies reproducing a behavior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalModel {
    pub m_a: usize,
    pub m_b: usize,
    pub strategies: Vec<DeterministicStrategy>,
    pub weights: Vec<f64>,
    /// Shared-randomness cost log2(support size).
    pub bits: f64,
    /// Weights certified in exact rational arithmetic.
    pub exact: bool,
}

impl LocalModel {
    /// Rebuild the behavior this model produces.
    pub fn synthesize(&self) -> BehaviorTable {
        let mut probs = vec![0.0; self.m_a * self.m_b * 4];
        for (s, w) in self.strategies.iter().zip(&self.weights) {
            for x in 0..self.m_a {
                for y in 0..self.m_b {
                    let ia = usize::from(s.a_outcomes[x] < 0);
                    let ib = usize::from(s.b_outcomes[y] < 0);
                    probs[(x * self.m_b + y) * 4 + ia * 2 + ib] += w;
                }
            }
        }
        BehaviorTable {
            m_a: self.m_a,
            m_b: self.m_b,
            probs,
        }
    }

    /// Max absolute deviation from a target table.
    pub fn deviation_from(&self, table: &BehaviorTable) -> f64 {
        let own = self.synthesize();
        own.probs
            .iter()
            .zip(&table.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Separating Bell functional: value on the table exceeds the local bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellCertificate {
    pub m_a: usize,
    pub m_b: usize,
    /// Coefficient per table entry (same indexing as `BehaviorTable`).
    pub coefficients: Vec<f64>,
    /// Max of the functional over all deterministic strategies.
    pub local_bound: f64,
    /// Value on the tested table.
    pub value: f64,
    pub margin: f64,
    /// Bound and margin re-derived in exact rational arithmetic.
    pub exact: bool,
}

impl BellCertificate {
    /// Correlator-form coefficient for the (x, y) block:
    /// (c(+,+) + c(-,-) - c(+,-) - c(-,+)) / 4.
    pub fn correlator_coefficient(&self, x: usize, y: usize) -> f64 {
        let at = |ia: usize, ib: usize| self.coefficients[(x * self.m_b + y) * 4 + ia * 2 + ib];
        (at(0, 0) + at(1, 1) - at(0, 1) - at(1, 0)) / 4.0
    }

    /// Margin scaled so the largest |correlator coefficient| is 1, which
    /// puts CHSH-type functionals on the familiar scale.
    pub fn normalized_margin(&self) -> f64 {
        let mut top = 0.0_f64;
        for x in 0..self.m_a {
            for y in 0..self.m_b {
                top = top.max(self.correlator_coefficient(x, y).abs());
            }
        }
        if top <= 0.0 {
            return self.margin;
        }
        self.margin / top
    }
}

#[derive(Debug, Clone)]
pub enum Membership {
    Local(LocalModel),
    Nonlocal(BellCertificate),
}

/// Exact Born behavior of a two-qubit state on finite setting lists.
pub fn behavior_from_state(
    rho: &DensityState,
    settings_a: &[QubitSetting],
    settings_b: &[QubitSetting],
) -> Result<BehaviorTable> {
    let (m_a, m_b) = (settings_a.len(), settings_b.len());
    if m_a == 0 || m_b == 0 {
        return Err(Error::InvalidInput("empty setting list".into()));
    }
    if m_a > 10 || m_b > 10 {
        return Err(Error::InvalidInput(format!(
            "setting counts ({m_a}, {m_b}) exceed the LP size guard of 10 per side"
        )));
    }
    let mut probs = vec![0.0; m_a * m_b * 4];
    for (x, a) in settings_a.iter().enumerate() {
        for (y, b) in settings_b.iter().enumerate() {
            let joint = born_joint(rho, a, b)?;
            for ia in 0..2 {
                for ib in 0..2 {
                    probs[(x * m_b + y) * 4 + ia * 2 + ib] = joint[ia][ib];
                }
            }
        }
    }
    BehaviorTable::new(m_a, m_b, probs)
}

/// Strategy column entries are 0/1 indicators; row index is the table
/// index. Rows: 4 m_a m_b equality constraints (normalization implied).
fn strategy_column_rows(sa: u32, sb: u32, m_a: usize, m_b: usize) -> Vec<usize> {
    let mut rows = Vec::with_capacity(m_a * m_b);
    for x in 0..m_a {
        let ia = usize::from(sa >> x & 1 == 0);
        for y in 0..m_b {
            let ib = usize::from(sb >> y & 1 == 0);
            rows.push((x * m_b + y) * 4 + ia * 2 + ib);
        }
    }
    rows
}

/// Best strategy under a row-weight vector: for each Alice assignment the
/// Bob side decouples per setting, so the max over all 2^(mA+mB)
/// strategies is exact at 2^mA cost.
fn price_columns<S: LpScalar>(y: &[S], m_a: usize, m_b: usize) -> (S, u32, u32) {
    let mut best: Option<(S, u32, u32)> = None;
    for sa in 0..(1u32 << m_a) {
        let mut score = S::zero();
        let mut sb = 0u32;
        for yy in 0..m_b {
            let mut best_b: Option<(S, u32)> = None;
            for jb in 0..2u32 {
                let mut acc = S::zero();
                for x in 0..m_a {
                    let ia = usize::from(sa >> x & 1 == 0);
                    let row = (x * m_b + yy) * 4 + ia * 2 + (1 - jb as usize);
                    acc = acc.add(&y[row]);
                }
                if best_b.as_ref().map_or(true, |(s, _)| acc > *s) {
                    best_b = Some((acc, jb));
                }
            }
            let (s, jb) = best_b.unwrap();
            score = score.add(&s);
            if jb == 1 {
                sb |= 1 << yy;
            }
        }
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, sa, sb));
        }
    }
    let (s, sa, sb) = best.unwrap();
    (s, sa, sb)
}

/// Exact local bound of a functional: max over all deterministic
/// strategies (via the same per-side decoupling, which is an exact
/// maximization, not a heuristic).
fn local_bound_of<S: LpScalar>(coeffs: &[S], m_a: usize, m_b: usize) -> S {
    price_columns(coeffs, m_a, m_b).0
}

const FULL_MATRIX_LIMIT: u32 = 14;

struct MembershipLp<'a> {
    table: &'a BehaviorTable,
}

impl<'a> MembershipLp<'a> {
    fn solve_float(&self) -> Result<FloatOutcome> {
        let (m_a, m_b) = (self.table.m_a, self.table.m_b);
        let rows = m_a * m_b * 4;
        let b: Vec<f64> = self.table.probs.clone();
        if (m_a + m_b) as u32 <= FULL_MATRIX_LIMIT {
            // Dense full-matrix LP.
            let n = 1usize << (m_a + m_b);
            let mut a = vec![vec![0.0; n]; rows];
            let mut ids = Vec::with_capacity(n);
            for sa in 0..(1u32 << m_a) {
                for sb in 0..(1u32 << m_b) {
                    let col = ids.len();
                    for r in strategy_column_rows(sa, sb, m_a, m_b) {
                        a[r][col] = 1.0;
                    }
                    ids.push((sa, sb));
                }
            }
            match lp::solve_feasibility(&a, &b)? {
                LpOutcome::Feasible(sol) => Ok(FloatOutcome::Feasible {
                    weights: sol
                        .x
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| **w > 1e-12)
                        .map(|(i, w)| (ids[i], *w))
                        .collect(),
                    basis: sol.basis.iter().map(|&j| basis_id(j, &ids, rows)).collect(),
                }),
                LpOutcome::Infeasible(cert) => Ok(FloatOutcome::Infeasible { y: cert.y }),
            }
        } else {
            self.solve_float_column_generation()
        }
    }

    /// Lazy column generation for large strategy spaces: keep a working
    /// set, enlarge it with the best-priced strategy until the restricted
    /// problem is feasible or pricing proves global infeasibility.
    fn solve_float_column_generation(&self) -> Result<FloatOutcome> {
        let (m_a, m_b) = (self.table.m_a, self.table.m_b);
        let rows = m_a * m_b * 4;
        let b: Vec<f64> = self.table.probs.clone();
        let mut ids: Vec<(u32, u32)> = vec![(0, 0), (!0u32, !0u32)];
        let mut seen: std::collections::HashSet<(u32, u32)> = ids.iter().copied().collect();
        for _ in 0..100_000 {
            let mut a = vec![vec![0.0; ids.len()]; rows];
            for (col, &(sa, sb)) in ids.iter().enumerate() {
                for r in strategy_column_rows(sa, sb, m_a, m_b) {
                    a[r][col] = 1.0;
                }
            }
            match lp::solve_feasibility(&a, &b)? {
                LpOutcome::Feasible(sol) => {
                    return Ok(FloatOutcome::Feasible {
                        weights: sol
                            .x
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| **w > 1e-12)
                            .map(|(i, w)| (ids[i], *w))
                            .collect(),
                        basis: sol.basis.iter().map(|&j| basis_id(j, &ids, rows)).collect(),
                    });
                }
                LpOutcome::Infeasible(cert) => {
                    let (score, sa, sb) = price_columns(&cert.y, m_a, m_b);
                    // y^T b > 0 with y^T A_s <= 0 for every strategy means
                    // a genuine separating functional.
                    if score <= 1e-10 {
                        return Ok(FloatOutcome::Infeasible { y: cert.y });
                    }
                    if !seen.insert((sa, sb)) {
                        return Err(Error::Numerical(
                            "column generation stalled on a repeated strategy".into(),
                        ));
                    }
                    ids.push((sa, sb));
                }
            }
        }
        Err(Error::Numerical("column generation did not converge".into()))
    }
}

enum FloatOutcome {
    Feasible {
        weights: Vec<((u32, u32), f64)>,
        basis: Vec<BasisCol>,
    },
    Infeasible {
        y: Vec<f64>,
    },
}

#[derive(Clone, Copy)]
enum BasisCol {
    Strategy(u32, u32),
    Artificial(usize),
}

fn basis_id(j: usize, ids: &[(u32, u32)], _rows: usize) -> BasisCol {
    if j < ids.len() {
        BasisCol::Strategy(ids[j].0, ids[j].1)
    } else {
        BasisCol::Artificial(j - ids.len())
    }
}

/// Decide membership of a behavior in the local polytope.
///
/// Feasible tables yield a `LocalModel` (a vertex of the weight polytope,
/// so its support is at most the constraint count plus one); infeasible
/// tables yield a separating `BellCertificate` whose local bound is
/// recomputed independently of the LP.
pub fn local_membership(table: &BehaviorTable, mode: LpMode) -> Result<Membership> {
    let (m_a, m_b) = (table.m_a, table.m_b);
    let rows = m_a * m_b * 4;
    let solver = MembershipLp { table };
    match solver.solve_float()? {
        FloatOutcome::Feasible { weights, basis } => {
            if mode == LpMode::Rational {
                if let Some(model) = certify_feasible_rational(table, &basis) {
                    return Ok(Membership::Local(model));
                }
                // Certification failed: redo the decisive step exactly.
                return solve_full_rational(table);
            }
            Ok(Membership::Local(build_model(table, weights, false)))
        }
        FloatOutcome::Infeasible { y } => {
            let bound = local_bound_of(&y, m_a, m_b);
            let value: f64 = y.iter().zip(&table.probs).map(|(yi, p)| yi * p).sum();
            let margin = value - bound;
            if margin <= 0.0 {
                // Float Farkas vector did not survive revalidation.
                return solve_full_rational(table);
            }
            if mode == LpMode::Rational {
                let yq: Vec<BigRational> =
                    y.iter().map(|&v| <BigRational as LpScalar>::from_f64(v)).collect();
                let bound_q = local_bound_of(&yq, m_a, m_b);
                let mut value_q = <BigRational as LpScalar>::zero();
                for (yi, p) in yq.iter().zip(&table.probs) {
                    value_q = value_q.add(&yi.mul(&<BigRational as LpScalar>::from_f64(*p)));
                }
                let margin_q = value_q.sub(&bound_q);
                if margin_q.to_f64() <= 0.0 {
                    return solve_full_rational(table);
                }
                return Ok(Membership::Nonlocal(BellCertificate {
                    m_a,
                    m_b,
                    coefficients: y,
                    local_bound: bound_q.to_f64(),
                    value: value_q.to_f64(),
                    margin: margin_q.to_f64(),
                    exact: true,
                }));
            }
            let _ = rows;
            Ok(Membership::Nonlocal(BellCertificate {
                m_a,
                m_b,
                coefficients: y,
                local_bound: bound,
                value,
                margin,
                exact: false,
            }))
        }
    }
}

fn build_model(table: &BehaviorTable, weights: Vec<((u32, u32), f64)>, exact: bool) -> LocalModel {
    let (m_a, m_b) = (table.m_a, table.m_b);
    let mut strategies = Vec::with_capacity(weights.len());
    let mut ws = Vec::with_capacity(weights.len());
    for ((sa, sb), w) in weights {
        strategies.push(DeterministicStrategy::from_bits(sa, sb, m_a, m_b));
        ws.push(w);
    }
    let bits = (ws.len().max(1) as f64).log2();
    LocalModel {
        m_a,
        m_b,
        strategies,
        weights: ws,
        bits,
        exact,
    }
}

/// Re-solve the float basis exactly (fraction-free elimination). Succeeds
/// iff the basis is nonsingular over the rationals, strategy weights are
/// nonnegative, and the artificial components (the exactly-computed
/// residual) stay within input quantization. A float-built table violates
/// no-signaling at the ~1e-16 level, which puts it exactly outside the
/// strategy-column span, so demanding literally zero artificials would
/// reject every instance.
fn certify_feasible_rational(table: &BehaviorTable, basis: &[BasisCol]) -> Option<LocalModel> {
    let (m_a, m_b) = (table.m_a, table.m_b);
    let rows = m_a * m_b * 4;
    let zero = <BigRational as LpScalar>::zero();
    let one = <BigRational as LpScalar>::one();
    let cols: Vec<Vec<BigRational>> = basis
        .iter()
        .map(|bc| {
            let mut col = vec![zero.clone(); rows];
            match bc {
                BasisCol::Strategy(sa, sb) => {
                    for r in strategy_column_rows(*sa, *sb, m_a, m_b) {
                        col[r] = one.clone();
                    }
                }
                BasisCol::Artificial(i) => col[*i] = one.clone(),
            }
            col
        })
        .collect();
    let rhs: Vec<BigRational> = table
        .probs
        .iter()
        .map(|&p| <BigRational as LpScalar>::from_f64(p))
        .collect();
    let w = lp::solve_square_system_rational(&cols, &rhs)?;
    let mut weights = Vec::new();
    for (wi, bc) in w.iter().zip(basis) {
        match bc {
            BasisCol::Strategy(sa, sb) => {
                let wf = wi.to_f64();
                if *wi < zero {
                    if wf < -1e-12 {
                        return None;
                    }
                    continue; // clamp exact dust
                }
                if wf > 1e-15 {
                    weights.push(((*sa, *sb), wf));
                }
            }
            BasisCol::Artificial(_) => {
                if wi.abs().to_f64() > 1e-12 {
                    return None;
                }
            }
        }
    }
    Some(build_model(table, weights, true))
}

/// Fully rational simplex over the complete strategy matrix. Last resort;
/// only reachable when float certification fails.
fn solve_full_rational(table: &BehaviorTable) -> Result<Membership> {
    let (m_a, m_b) = (table.m_a, table.m_b);
    if (m_a + m_b) as u32 > FULL_MATRIX_LIMIT {
        return Err(Error::Numerical(
            "rational fallback above the full-matrix limit is not supported".into(),
        ));
    }
    let rows = m_a * m_b * 4;
    let zero = <BigRational as LpScalar>::zero();
    let one = <BigRational as LpScalar>::one();
    let n = 1usize << (m_a + m_b);
    let mut a = vec![vec![zero.clone(); n]; rows];
    let mut ids = Vec::with_capacity(n);
    for sa in 0..(1u32 << m_a) {
        for sb in 0..(1u32 << m_b) {
            let col = ids.len();
            for r in strategy_column_rows(sa, sb, m_a, m_b) {
                a[r][col] = one.clone();
            }
            ids.push((sa, sb));
        }
    }
    let b: Vec<BigRational> = table
        .probs
        .iter()
        .map(|&p| <BigRational as LpScalar>::from_f64(p))
        .collect();
    match lp::solve_feasibility(&a, &b)? {
        LpOutcome::Feasible(sol) => {
            let weights: Vec<((u32, u32), f64)> = sol
                .x
                .iter()
                .enumerate()
                .filter(|(_, w)| w.to_f64() > 1e-15)
                .map(|(i, w)| (ids[i], w.to_f64()))
                .collect();
            Ok(Membership::Local(build_model(table, weights, true)))
        }
        LpOutcome::Infeasible(cert) => {
            let bound = local_bound_of(&cert.y, m_a, m_b);
            let mut value = zero.clone();
            for (yi, p) in cert.y.iter().zip(&b) {
                value = value.add(&yi.mul(p));
            }
            let margin = value.sub(&bound);
            Ok(Membership::Nonlocal(BellCertificate {
                m_a,
                m_b,
                coefficients: cert.y.iter().map(|v| v.to_f64()).collect(),
                local_bound: bound.to_f64(),
                value: value.to_f64(),
                margin: margin.to_f64(),
                exact: true,
            }))
        }
    }
}

/// Two-stage finite model for a locally depolarized state: settings map to
/// distributions over polyhedron directions (stage 1), a LocalModel on the
/// antipodal representative directions answers (stage 2).
#[derive(Debug)]
pub struct NoisyCompositeModel {
    pub poly: Polyhedron,
    pub pairing: AntipodalPairing,
    pub eta: f64,
    pub model: LocalModel,
    /// Behavior of the stage-2 model on the representative directions.
    stage2: BehaviorTable,
}

#[derive(Debug)]
pub enum NoisyModelOutcome {
    Model(NoisyCompositeModel),
    /// The base state's behavior on the directions is already nonlocal.
    Nonlocal(BellCertificate),
}

/// Build the composite model for `noisy_state(rho, eta)` from a LHV model
/// of `rho` on the polyhedron's directions. Requires eta <= inscribed
/// radius so every shrunk Bloch vector decomposes over the vertex set.
pub fn finite_model_for_noisy_state(
    rho: &DensityState,
    eta: f64,
    poly: &Polyhedron,
    mode: LpMode,
) -> Result<NoisyModelOutcome> {
    if rho.dims() != (2, 2) {
        return Err(Error::InvalidInput(
            "composite model implemented for two-qubit states".into(),
        ));
    }
    let ell = crate::geometry::inscribed_radius(poly)?;
    if eta > ell + 1e-12 {
        return Err(Error::DecompositionInfeasible { margin: eta - ell });
    }
    let pairing = poly.antipodal_pairing()?;
    let table = behavior_from_state(rho, &pairing.representatives, &pairing.representatives)?;
    match local_membership(&table, mode)? {
        Membership::Nonlocal(cert) => Ok(NoisyModelOutcome::Nonlocal(cert)),
        Membership::Local(model) => {
            let stage2 = model.synthesize();
            Ok(NoisyModelOutcome::Model(NoisyCompositeModel {
                poly: poly.clone(),
                pairing,
                eta,
                model,
                stage2,
            }))
        }
    }
}

impl NoisyCompositeModel {
    pub fn shared_randomness_bits(&self) -> f64 {
        self.model.bits
    }

    /// Composite behavior prediction at a setting pair: decompose the
    /// shrunk settings over the polyhedron, translate vertices to
    /// (representative, sign) and mix the stage-2 behavior.
    pub fn predict(&self, a: &QubitSetting, b: &QubitSetting) -> Result<[[f64; 2]; 2]> {
        let wa = convex_decompose(a.scaled(self.eta), self.poly.vertices(), LpMode::Float)?;
        let wb = convex_decompose(b.scaled(self.eta), self.poly.vertices(), LpMode::Float)?;
        let mut out = [[0.0f64; 2]; 2];
        for &(i, wi) in wa.support() {
            let (ra, sa) = self.pairing.assignment[i];
            for &(j, wj) in wb.support() {
                let (rb, sb) = self.pairing.assignment[j];
                for ia in 0..2usize {
                    for ib in 0..2usize {
                        // Measuring -r with outcome o is measuring r with -o.
                        let ia_eff = if sa > 0 { ia } else { 1 - ia };
                        let ib_eff = if sb > 0 { ib } else { 1 - ib };
                        out[ia][ib] += wi * wj * self.stage2.get(ra, rb, ia_eff, ib_eff);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Max deviation of the composite prediction from the Born behavior of
    /// the noisy state over the given setting pairs.
    pub fn max_deviation(
        &self,
        rho: &DensityState,
        pairs: &[(QubitSetting, QubitSetting)],
    ) -> Result<f64> {
        let noisy = noisy_state(rho, self.eta)?;
        let mut worst = 0.0_f64;
        for (a, b) in pairs {
            let got = self.predict(a, b)?;
            let want = born_joint(&noisy, a, b)?;
            for ia in 0..2 {
                for ib in 0..2 {
                    worst = worst.max((got[ia][ib] - want[ia][ib]).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Convenience wrapper: CHSH behavior of a state at the frozen optimal
/// settings.
pub fn chsh_behavior(rho: &DensityState) -> Result<BehaviorTable> {
    let s = crate::quantum::chsh_optimal_settings();
    behavior_from_state(rho, &[s.a1, s.a2], &[s.b1, s.b2])
}

/// Representative directions of a polyhedron as a setting list, paired
/// with the born statistics sanity check used in several tests.
pub fn direction_settings(poly: &Polyhedron) -> Result<Vec<UnitVector>> {
    Ok(poly.antipodal_pairing()?.representatives)
}
