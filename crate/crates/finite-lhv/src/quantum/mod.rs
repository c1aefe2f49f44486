//! Exact quantum reference layer: every state used by the simulation
//! protocols as a small density matrix, Born-rule statistics for projective
//! qubit measurements, entanglement certification by partial transpose,
//! and the noisy-state/noisy-measurement duality.

mod cmatrix;

pub use cmatrix::{hermitian_eigenvalues, C64, CMat};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UnitVector;

/// A projective qubit measurement is its Bloch vector (observable a.sigma
/// with outcomes +-1).
pub type QubitSetting = UnitVector;

/// Means and correlator of a +-1-valued measurement pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub mean_a: f64,
    pub mean_b: f64,
    pub corr_ab: f64,
}

/// A bipartite density matrix with local dimension labels.
#[derive(Debug, Clone)]
pub struct DensityState {
    mat: CMat,
    dims: (usize, usize),
}

/// JSON mirror: `{"dims":[dA,dB],"re":[[...]],"im":[[...]]}`.
#[derive(Serialize, Deserialize)]
struct DensityStateFile {
    dims: [usize; 2],
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for DensityState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.mat.dim();
        let mut re = vec![vec![0.0; n]; n];
        let mut im = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                re[i][j] = self.mat[(i, j)].re;
                im[i][j] = self.mat[(i, j)].im;
            }
        }
        DensityStateFile {
            dims: [self.dims.0, self.dims.1],
            re,
            im,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = DensityStateFile::deserialize(d)?;
        let n = f.dims[0] * f.dims[1];
        if f.re.len() != n || f.im.len() != n {
            return Err(serde::de::Error::custom("matrix size does not match dims"));
        }
        let mut mat = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = C64::new(f.re[i][j], f.im[i][j]);
            }
        }
        DensityState::new(mat, (f.dims[0], f.dims[1])).map_err(serde::de::Error::custom)
    }
}

impl DensityState {
    /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (min eigenvalue >= -1e-10).
    pub fn new(mat: CMat, dims: (usize, usize)) -> Result<Self> {
        if mat.dim() != dims.0 * dims.1 {
            return Err(Error::InvalidInput(format!(
                "matrix side {} does not match dims {}x{}",
                mat.dim(),
                dims.0,
                dims.1
            )));
        }
        let herm = mat.max_hermiticity_violation();
        if herm > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (violation {herm:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "trace is {tr}, expected 1"
            )));
        }
        let min_eig = hermitian_eigenvalues(&mat)?[0];
        if min_eig < -1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { mat, dims })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Reduced state on A (trace out B).
    pub fn reduced_a(&self) -> CMat {
        let (da, db) = self.dims;
        let mut m = CMat::zeros(da);
        for i in 0..da {
            for j in 0..da {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..db {
                    acc += self.mat[(i * db + k, j * db + k)];
                }
                m[(i, j)] = acc;
            }
        }
        m
    }

    /// Reduced state on B (trace out A).
    pub fn reduced_b(&self) -> CMat {
        let (da, db) = self.dims;
        let mut m = CMat::zeros(db);
        for k in 0..db {
            for l in 0..db {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..da {
                    acc += self.mat[(i * db + k, i * db + l)];
                }
                m[(k, l)] = acc;
            }
        }
        m
    }

    /// Partial transpose on the B factor.
    pub fn partial_transpose_b(&self) -> CMat {
        let (da, db) = self.dims;
        let n = da * db;
        let mut m = CMat::zeros(n);
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    for l in 0..db {
                        m[(i * db + k, j * db + l)] = self.mat[(i * db + l, j * db + k)];
                    }
                }
            }
        }
        m
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Random full-support mixed state: `rank` Haar-ish pure states with
    /// random weights. Intended for randomized identity sweeps.
    pub fn random_mixed<R: Rng + ?Sized>(
        dims: (usize, usize),
        rank: usize,
        rng: &mut R,
    ) -> DensityState {
        let n = dims.0 * dims.1;
        let mut mat = CMat::zeros(n);
        let mut weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        for &w in &weights {
            let psi: Vec<C64> = (0..n)
                .map(|_| {
                    // Box-Muller pairs give complex Gaussian amplitudes.
                    let u1: f64 = rng.gen::<f64>().max(1e-12);
                    let u2: f64 = rng.gen();
                    let r = (-2.0 * u1.ln()).sqrt();
                    C64::new(
                        r * (std::f64::consts::TAU * u2).cos(),
                        r * (std::f64::consts::TAU * u2).sin(),
                    )
                })
                .collect();
            mat = mat.add(&CMat::projector_onto(&psi).scale(w));
        }
        // Hermitize rounding dust before validating.
        let mat = mat.add(&mat.dagger()).scale(0.5);
        let tr = mat.trace().re;
        let mat = mat.scale(1.0 / tr);
        DensityState::new(mat, dims).expect("random mixture is a valid state")
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// v . sigma for a Bloch vector v.
pub fn sigma_dot(v: &UnitVector) -> CMat {
    let (x, y, z) = (v.x(), v.y(), v.z());
    CMat::from_rows(&[
        &[C64::new(z, 0.0), C64::new(x, -y)],
        &[C64::new(x, y), C64::new(-z, 0.0)],
    ])
}

/// Projector (I + sign * v.sigma)/2 onto the +-1 outcome of v.sigma.
pub fn outcome_projector(v: &UnitVector, sign: i8) -> CMat {
    let s = f64::from(sign.signum());
    CMat::identity(2).add(&sigma_dot(v).scale(s)).scale(0.5)
}

/// Qubit density matrix (I + r.sigma)/2 for |r| <= 1.
pub fn qubit_from_bloch(r: [f64; 3]) -> CMat {
    CMat::from_rows(&[
        &[
            C64::new((1.0 + r[2]) / 2.0, 0.0),
            C64::new(r[0] / 2.0, -r[1] / 2.0),
        ],
        &[
            C64::new(r[0] / 2.0, r[1] / 2.0),
            C64::new((1.0 - r[2]) / 2.0, 0.0),
        ],
    ])
}

/// Bloch vector of a 2x2 density matrix.
pub fn bloch_vector(m: &CMat) -> [f64; 3] {
    assert_eq!(m.dim(), 2);
    [
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ]
}

/// Two-qubit Werner state: alpha-weighted singlet plus white noise.
pub fn werner_state(alpha: f64) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "werner visibility {alpha} outside [0, 1]"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
        C64::new(0.0, 0.0),
    ];
    let singlet = CMat::projector_onto(&psi);
    let mat = singlet
        .scale(alpha)
        .add(&CMat::identity(4).scale((1.0 - alpha) / 4.0));
    DensityState::new(mat, (2, 2))
}

/// Exact Born statistics of the +-1 observables a.sigma and b.sigma.
pub fn born_statistics(
    rho: &DensityState,
    a: &QubitSetting,
    b: &QubitSetting,
) -> Result<CorrelationTriple> {
    let p = born_joint(rho, a, b)?;
    Ok(CorrelationTriple {
        mean_a: p[0][0] + p[0][1] - p[1][0] - p[1][1],
        mean_b: p[0][0] + p[1][0] - p[0][1] - p[1][1],
        corr_ab: p[0][0] + p[1][1] - p[0][1] - p[1][0],
    })
}

/// Joint outcome probabilities; index 0 is outcome +1, index 1 is -1.
pub fn born_joint(
    rho: &DensityState,
    a: &QubitSetting,
    b: &QubitSetting,
) -> Result<[[f64; 2]; 2]> {
    if rho.dims() != (2, 2) {
        return Err(Error::InvalidInput(format!(
            "born_joint needs a two-qubit state, got dims {:?}",
            rho.dims()
        )));
    }
    let mut out = [[0.0; 2]; 2];
    for (ia, sa) in [(0usize, 1i8), (1, -1)] {
        let pa = outcome_projector(a, sa);
        for (ib, sb) in [(0usize, 1i8), (1, -1)] {
            let pb = outcome_projector(b, sb);
            let val = pa.kron(&pb).trace_product(rho.matrix()).re;
            out[ia][ib] = val.max(0.0);
        }
    }
    Ok(out)
}

/// One-parameter filtered family: alpha-weighted partially entangled pure
/// state plus noise aligned with its B marginal.
pub fn filtered_state(alpha: f64, theta: f64) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "visibility {alpha} outside [0, 1]"
        )));
    }
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4) {
        return Err(Error::InvalidInput(format!(
            "theta {theta} outside (0, pi/4]"
        )));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let psi = [
        C64::new(c, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
    ];
    let pure = CMat::projector_onto(&psi);
    let rho_b = CMat::from_rows(&[
        &[C64::new(c * c, 0.0), C64::new(0.0, 0.0)],
        &[C64::new(0.0, 0.0), C64::new(s * s, 0.0)],
    ]);
    let noise = CMat::identity(2).scale(0.5).kron(&rho_b);
    DensityState::new(pure.scale(alpha).add(&noise.scale(1.0 - alpha)), (2, 2))
}

/// Local-noise map: eta^2 rho + eta(1-eta)(I/d (x) rho_B + rho_A (x) I/d)
/// + (1-eta)^2 I/d^2. eta = 1 returns rho unchanged.
pub fn noisy_state(rho: &DensityState, eta: f64) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("eta {eta} outside [0, 1]")));
    }
    let (da, db) = rho.dims();
    if da != db {
        return Err(Error::InvalidInput(format!(
            "noisy_state needs square bipartite dims, got {da}x{db}"
        )));
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let d = da;
    let id = CMat::identity(d).scale(1.0 / d as f64);
    let term_a = id.kron(&rho.reduced_b());
    let term_b = rho.reduced_a().kron(&id);
    let white = CMat::identity(d * d).scale(1.0 / ((d * d) as f64));
    let mat = rho
        .matrix()
        .scale(eta * eta)
        .add(&term_a.add(&term_b).scale(eta * (1.0 - eta)))
        .add(&white.scale((1.0 - eta) * (1.0 - eta)));
    DensityState::new(mat, rho.dims())
}

/// Max over outcome pairs of |tr[P_a (x) P_b rho(eta)] - tr[P_a(eta) (x)
/// P_b(eta) rho]| with P(eta) = eta P + (1-eta) I/2.
pub fn noisy_meas_residual(
    rho: &DensityState,
    eta: f64,
    a: &QubitSetting,
    b: &QubitSetting,
) -> Result<f64> {
    let noisy = noisy_state(rho, eta)?;
    let mut worst = 0.0_f64;
    for sa in [1i8, -1] {
        for sb in [1i8, -1] {
            let pa = outcome_projector(a, sa);
            let pb = outcome_projector(b, sb);
            let lhs = pa.kron(&pb).trace_product(noisy.matrix()).re;
            let pa_eta = pa.scale(eta).add(&CMat::identity(2).scale((1.0 - eta) / 2.0));
            let pb_eta = pb.scale(eta).add(&CMat::identity(2).scale((1.0 - eta) / 2.0));
            let rhs = pa_eta.kron(&pb_eta).trace_product(rho.matrix()).re;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Noisy POVM element eta A + (1-eta) tr(A) I/d. Exposed as a formula
/// helper only; no finite-decomposition claim is attached to it.
pub fn noisy_povm_element(elem: &CMat, eta: f64, d: usize) -> CMat {
    let tr = elem.trace().re;
    elem.scale(eta)
        .add(&CMat::identity(d).scale((1.0 - eta) * tr / d as f64))
}

fn embed_bipartite(rho: &DensityState, new_da: usize, new_db: usize) -> CMat {
    let (da, db) = rho.dims();
    let mut m = CMat::zeros(new_da * new_db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    m[(i * new_db + k, j * new_db + l)] = rho.matrix()[(i * db + k, j * db + l)];
                }
            }
        }
    }
    m
}

/// Two-sided extension of a d x d state onto (d+1) x (d+1): appends one
/// orthogonal level per party and mixes in the flag projector so that any
/// measurement effectively collapses onto the original support.
pub fn povm_extension_state(rho: &DensityState) -> Result<DensityState> {
    let (da, db) = rho.dims();
    if da != db {
        return Err(Error::InvalidInput(format!(
            "extension needs square dims, got {da}x{db}"
        )));
    }
    let d = da;
    let nd = d + 1;
    let embedded = embed_bipartite(rho, nd, nd);
    let mut f = CMat::zeros(nd);
    f[(d, d)] = C64::new(1.0, 0.0);
    let rho_a = rho.reduced_a().embed(nd);
    let rho_b = rho.reduced_b().embed(nd);
    let mat = embedded
        .add(&rho_a.kron(&f).add(&f.kron(&rho_b)).scale(d as f64))
        .add(&f.kron(&f).scale((d * d) as f64))
        .scale(1.0 / ((nd * nd) as f64));
    DensityState::new(mat, (nd, nd))
}

/// One-sided (Alice-only) extension onto (dA+1) x dB. For the two-qubit
/// Werner state this is (rho_W + 2 |2><2| (x) I/2)/3.
pub fn povm_extension_state_oneside(rho: &DensityState) -> Result<DensityState> {
    let (da, db) = rho.dims();
    let nd = da + 1;
    let embedded = embed_bipartite(rho, nd, db);
    let mut f = CMat::zeros(nd);
    f[(da, da)] = C64::new(1.0, 0.0);
    let mat = embedded
        .add(&f.kron(&rho.reduced_b()).scale(da as f64))
        .scale(1.0 / nd as f64);
    DensityState::new(mat, (nd, db))
}

/// Peres criterion verdict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NptVerdict {
    /// Partial transpose has an eigenvalue below -1e-10.
    pub entangled: bool,
    /// Witness: the minimum partial-transpose eigenvalue.
    pub min_pt_eigenvalue: f64,
    /// True for 2x2 and 2x3 systems where NPT is equivalent to
    /// entanglement; false means "NPT certificate only".
    pub conclusive: bool,
}

/// Entanglement certification by negative partial transpose.
pub fn is_entangled_npt(rho: &DensityState) -> Result<NptVerdict> {
    let (da, db) = rho.dims();
    if da * db > 9 {
        return Err(Error::InvalidInput(format!(
            "NPT check limited to total dimension 9, got {}",
            da * db
        )));
    }
    let pt = rho.partial_transpose_b();
    let min_eig = hermitian_eigenvalues(&pt)?[0];
    Ok(NptVerdict {
        entangled: min_eig < -1e-10,
        min_pt_eigenvalue: min_eig,
        conclusive: da * db <= 6,
    })
}

/// Outcome probability and Bob's normalized conditional state for Alice
/// measuring `a_setting` with the given outcome.
pub fn conditional_state(
    rho: &DensityState,
    a_setting: &QubitSetting,
    outcome: i8,
) -> Result<(f64, CMat)> {
    if rho.dims() != (2, 2) {
        return Err(Error::InvalidInput(
            "conditional_state needs a two-qubit state".into(),
        ));
    }
    let proj = outcome_projector(a_setting, outcome);
    let big = proj.kron(&CMat::identity(2));
    let p = big.trace_product(rho.matrix()).re;
    if p <= 1e-12 {
        return Err(Error::Conditioning(format!(
            "outcome {outcome} along ({:.4}, {:.4}, {:.4}) has probability {p:.3e}",
            a_setting.x(),
            a_setting.y(),
            a_setting.z()
        )));
    }
    // Tr_A[(P (x) I) rho] / p.
    let m = big.mul(rho.matrix());
    let mut cond = CMat::zeros(2);
    for k in 0..2 {
        for l in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..2 {
                acc += m[(i * 2 + k, i * 2 + l)];
            }
            cond[(k, l)] = acc / p;
        }
    }
    let cond = cond.add(&cond.dagger()).scale(0.5);
    Ok((p, cond))
}

/// CHSH settings (a1, a2; b1, b2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a1: QubitSetting,
    pub a2: QubitSetting,
    pub b1: QubitSetting,
    pub b2: QubitSetting,
}

/// Settings maximizing CHSH on Werner-type correlations (S = 2 sqrt(2) alpha).
pub fn chsh_optimal_settings() -> ChshSettings {
    let z = UnitVector::new(0.0, 0.0, 1.0).unwrap();
    let x = UnitVector::new(1.0, 0.0, 0.0).unwrap();
    let b1 = UnitVector::new(-1.0, 0.0, -1.0).unwrap();
    let b2 = UnitVector::new(1.0, 0.0, -1.0).unwrap();
    ChshSettings {
        a1: z,
        a2: x,
        b1,
        b2,
    }
}

/// S = E(a1,b1) + E(a1,b2) + E(a2,b1) - E(a2,b2).
pub fn chsh_value(rho: &DensityState, settings: &ChshSettings) -> Result<f64> {
    let e = |a: &QubitSetting, b: &QubitSetting| -> Result<f64> {
        Ok(born_statistics(rho, a, b)?.corr_ab)
    };
    Ok(e(&settings.a1, &settings.b1)? + e(&settings.a1, &settings.b2)?
        + e(&settings.a2, &settings.b1)?
        - e(&settings.a2, &settings.b2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn zhat() -> UnitVector {
        UnitVector::new(0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn werner_limits() {
        let white = werner_state(0.0).unwrap();
        for i in 0..4 {
            assert!((white.matrix()[(i, i)].re - 0.25).abs() < 1e-15);
        }
        let singlet = werner_state(1.0).unwrap();
        let eigs = singlet.eigenvalues().unwrap();
        assert!(eigs[3] > 1.0 - 1e-12 && eigs[2].abs() < 1e-12);
        assert!(werner_state(1.2).is_err());
    }

    #[test]
    fn werner_boundary_is_ppt_marginal() {
        let rho = werner_state(1.0 / 3.0).unwrap();
        let v = is_entangled_npt(&rho).unwrap();
        assert!(!v.entangled);
        assert!(v.min_pt_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn npt_thresholds() {
        assert!(is_entangled_npt(&werner_state(0.34).unwrap()).unwrap().entangled);
        assert!(!is_entangled_npt(&werner_state(0.2).unwrap()).unwrap().entangled);
    }

    #[test]
    fn born_on_werner_matches_closed_form() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let alpha: f64 = rng.gen();
            let rho = werner_state(alpha).unwrap();
            let a = UnitVector::random(&mut rng);
            let b = UnitVector::random(&mut rng);
            let t = born_statistics(&rho, &a, &b).unwrap();
            assert!(t.mean_a.abs() < 1e-12);
            assert!(t.mean_b.abs() < 1e-12);
            assert!((t.corr_ab + alpha * a.dot(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn born_product_state() {
        // |0><0| (x) |0><0| measured along z on both sides.
        let mut m = CMat::zeros(4);
        m[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityState::new(m, (2, 2)).unwrap();
        let t = born_statistics(&rho, &zhat(), &zhat()).unwrap();
        assert!((t.mean_a - 1.0).abs() < 1e-14);
        assert!((t.mean_b - 1.0).abs() < 1e-14);
        assert!((t.corr_ab - 1.0).abs() < 1e-14);
    }

    #[test]
    fn filtered_state_limits() {
        // theta = pi/4 has a maximally mixed B marginal.
        let rho = filtered_state(0.7, std::f64::consts::FRAC_PI_4).unwrap();
        let rb = rho.reduced_b();
        assert!((rb[(0, 0)].re - 0.5).abs() < 1e-12 && rb[(0, 1)].norm() < 1e-12);
        // alpha = 0 is product.
        let rho = filtered_state(0.0, 0.3).unwrap();
        let ra = rho.reduced_a();
        assert!((ra[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(filtered_state(0.5, 0.0).is_err());
        assert!(filtered_state(0.5, 1.0).is_err());
    }

    #[test]
    fn noisy_state_limits_and_werner_closure() {
        let rho = werner_state(0.8).unwrap();
        let same = noisy_state(&rho, 1.0).unwrap();
        assert!(same.matrix().sub(rho.matrix()).max_hermiticity_violation() < 1e-15);
        let white = noisy_state(&rho, 0.0).unwrap();
        for i in 0..4 {
            assert!((white.matrix()[(i, i)].re - 0.25).abs() < 1e-14);
        }
        // Werner family is closed: rho_W(alpha) -> rho_W(eta^2 alpha).
        let eta = 0.73;
        let mapped = noisy_state(&rho, eta).unwrap();
        let expect = werner_state(eta * eta * 0.8).unwrap();
        let diff = mapped.matrix().sub(expect.matrix());
        for i in 0..4 {
            for j in 0..4 {
                assert!(diff[(i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_state_composes() {
        let rho = werner_state(0.6).unwrap();
        let a = noisy_state(&noisy_state(&rho, 0.9).unwrap(), 0.7).unwrap();
        let b = noisy_state(&rho, 0.63).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(a.matrix()[(i, j)].norm() - b.matrix()[(i, j)].norm() < 1e-12);
                assert!((a.matrix()[(i, j)] - b.matrix()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_measurement_duality_residual() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let rho = DensityState::random_mixed((2, 2), 4, &mut rng);
            let eta: f64 = rng.gen();
            let a = UnitVector::random(&mut rng);
            let b = UnitVector::random(&mut rng);
            let r = noisy_meas_residual(&rho, eta, &a, &b).unwrap();
            assert!(r <= 1e-12, "residual {r:.3e}");
        }
        let rho = werner_state(0.5).unwrap();
        let a = zhat();
        assert_eq!(noisy_meas_residual(&rho, 1.0, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn extension_state_shape_and_display() {
        let rho = werner_state(0.43).unwrap();
        let ext = povm_extension_state(&rho).unwrap();
        assert_eq!(ext.dims(), (3, 3));
        assert!((ext.matrix().trace().re - 1.0).abs() < 1e-12);
        // Equals (rho + 2(rho_A (x) F + F (x) rho_B) + 4 F (x) F)/9.
        let embedded = embed_bipartite(&rho, 3, 3);
        let mut f = CMat::zeros(3);
        f[(2, 2)] = C64::new(1.0, 0.0);
        let manual = embedded
            .add(&rho.reduced_a().embed(3).kron(&f).scale(2.0))
            .add(&f.kron(&rho.reduced_b().embed(3)).scale(2.0))
            .add(&f.kron(&f).scale(4.0))
            .scale(1.0 / 9.0);
        let diff = ext.matrix().sub(&manual);
        for i in 0..9 {
            for j in 0..9 {
                assert!(diff[(i, j)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn extension_preserves_npt() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..5 {
            let alpha = 0.4 + 0.6 * rng.gen::<f64>();
            let rho = werner_state(alpha).unwrap();
            if !is_entangled_npt(&rho).unwrap().entangled {
                continue;
            }
            let ext = povm_extension_state(&rho).unwrap();
            let v = is_entangled_npt(&ext).unwrap();
            assert!(v.entangled, "extension lost NPT at alpha={alpha}");
            assert!(!v.conclusive);
        }
    }

    #[test]
    fn one_sided_extension_example() {
        let rho = werner_state(0.43).unwrap();
        let ext = povm_extension_state_oneside(&rho).unwrap();
        assert_eq!(ext.dims(), (3, 2));
        assert!((ext.matrix().trace().re - 1.0).abs() < 1e-12);
        // Flag block is 2 * I/2 / 3 = I/3.
        assert!((ext.matrix()[(4, 4)].re - 1.0 / 3.0).abs() < 1e-12);
        assert!((ext.matrix()[(5, 5)].re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_state_on_werner() {
        let alpha = 0.37;
        let rho = werner_state(alpha).unwrap();
        let (p, cond) = conditional_state(&rho, &zhat(), 1).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let r = bloch_vector(&cond);
        assert!((r[2] + alpha).abs() < 1e-12 && r[0].abs() < 1e-12);
        // alpha = 0: conditional is maximally mixed for any setting.
        let white = werner_state(0.0).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        let a = UnitVector::random(&mut rng);
        let (_, cond) = conditional_state(&white, &a, -1).unwrap();
        let r = bloch_vector(&cond);
        assert!(r.iter().all(|c| c.abs() < 1e-12));
        // Full-rank input keeps the conditional full rank.
        let (_, cond) = conditional_state(&werner_state(0.9).unwrap(), &a, 1).unwrap();
        let r = bloch_vector(&cond);
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        assert!(n < 1.0 - 1e-6);
    }

    #[test]
    fn conditional_zero_probability_rejected() {
        let mut m = CMat::zeros(4);
        m[(0, 0)] = C64::new(1.0, 0.0); // |00><00|
        let rho = DensityState::new(m, (2, 2)).unwrap();
        match conditional_state(&rho, &zhat(), -1) {
            Err(Error::Conditioning(_)) => {}
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn chsh_on_werner() {
        let settings = chsh_optimal_settings();
        for alpha in [0.0, 0.5, 0.75, 1.0] {
            let rho = werner_state(alpha).unwrap();
            let s = chsh_value(&rho, &settings).unwrap();
            assert!(
                (s - 2.0 * std::f64::consts::SQRT_2 * alpha).abs() < 1e-12,
                "alpha={alpha}, S={s}"
            );
        }
        let s = chsh_value(&werner_state(0.75).unwrap(), &settings).unwrap();
        assert!(s > 2.0 && (s - 2.1213).abs() < 1e-3);
    }

    #[test]
    fn chsh_optimal_settings_are_actually_optimal() {
        // Random-search oracle: no random settings beat the frozen ones.
        let rho = werner_state(1.0).unwrap();
        let best = chsh_value(&rho, &chsh_optimal_settings()).unwrap();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..500 {
            let s = ChshSettings {
                a1: UnitVector::random(&mut rng),
                a2: UnitVector::random(&mut rng),
                b1: UnitVector::random(&mut rng),
                b2: UnitVector::random(&mut rng),
            };
            assert!(chsh_value(&rho, &s).unwrap() <= best + 1e-9);
        }
        assert!((best - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn density_state_json_roundtrip() {
        let rho = werner_state(0.43).unwrap();
        let s = rho.to_json_string().unwrap();
        let back = DensityState::from_json_str(&s).unwrap();
        assert_eq!(back.dims(), (2, 2));
        let diff = back.matrix().sub(rho.matrix());
        for i in 0..4 {
            for j in 0..4 {
                assert!(diff[(i, j)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn invalid_density_matrices_rejected() {
        let mut m = CMat::identity(4).scale(0.25);
        m[(0, 1)] = C64::new(0.3, 0.1); // not Hermitian
        assert!(DensityState::new(m, (2, 2)).is_err());
        let m = CMat::identity(4); // trace 4
        assert!(DensityState::new(m, (2, 2)).is_err());
    }
}
