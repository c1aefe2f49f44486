//! LHS model for the filtered-state family: Bob's hidden qubit states are
//! pushed through the local filter diag(cos θ, sin θ) and renormalized,
//! the shared label is reweighted by each state's filter-success weight,
//! and Alice's setting is pre-rotated by the basis change that aligns the
//! filtered singlet with the target family (a π rotation about y).

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::geometry::{gamma_profile, inscribed_radius_of, GammaProfile, Polyhedron, UnitVector};
use crate::lp::LpMode;
use crate::quantum::{filtered_state, CorrelationTriple, DensityState, QubitSetting};

use super::{
    biased, coin, sgn_expect, sgn_response, DecompCache, ProtocolId, ProtocolSpec, RoundOutcome,
    SharedRandomness, Simulation,
};

pub struct FilteredLhs {
    poly: Polyhedron,
    profile: GammaProfile,
    ell: f64,
    theta: f64,
    /// Reweighted shared-label distribution q_λ ∝ filter success weight.
    q: Vec<f64>,
    q_cum: Vec<f64>,
    /// Bloch vectors of Bob's filtered hidden states.
    bob_bloch: Vec<[f64; 3]>,
    spec: ProtocolSpec,
    cache: DecompCache,
}

impl FilteredLhs {
    pub fn new(poly: Polyhedron, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidInput(format!(
                "theta {theta} outside (0, pi/4]"
            )));
        }
        if !poly.antipodal_closed() {
            return Err(Error::InvalidInput(format!(
                "'{}' is not antipodally closed",
                poly.name()
            )));
        }
        let profile = gamma_profile(&poly)?;
        let ell = inscribed_radius_of(&profile.m_vectors)?;
        let d = poly.vertex_count() as f64;
        let alpha = 2.0 * ell * profile.gamma_min / d;

        let cos2t = (2.0 * theta).cos();
        let sin2t = (2.0 * theta).sin();
        let mut q = Vec::with_capacity(poly.vertex_count());
        let mut bob_bloch = Vec::with_capacity(poly.vertex_count());
        for v in poly.vertices() {
            // Hidden state Bloch vector is -v; the filter maps it to
            // (sin2θ n_x, sin2θ n_y, cos2θ + n_z) / t with success
            // weight t = 1 + n_z cos2θ.
            let n = [-v.x(), -v.y(), -v.z()];
            let t = 1.0 + n[2] * cos2t;
            if t < 1e-12 {
                return Err(Error::DegenerateFilter(format!(
                    "filter annihilates the hidden state at vertex ({:.4}, {:.4}, {:.4})",
                    v.x(),
                    v.y(),
                    v.z()
                )));
            }
            q.push(t / d);
            bob_bloch.push([sin2t * n[0] / t, sin2t * n[1] / t, (cos2t + n[2]) / t]);
        }
        let total: f64 = q.iter().sum();
        for w in q.iter_mut() {
            *w /= total;
        }
        let mut q_cum = Vec::with_capacity(q.len());
        let mut acc = 0.0;
        for w in &q {
            acc += w;
            q_cum.push(acc);
        }
        let spec = ProtocolSpec {
            id: ProtocolId::FilteredLhs,
            polyhedron: Some(poly.name().to_string()),
            vertex_count: Some(poly.vertex_count()),
            n: None,
            alpha: Some(alpha),
            shared_randomness_bits: d.log2(),
            communication_bits: 0.0,
        };
        Ok(Self {
            poly,
            profile,
            ell,
            theta,
            q,
            q_cum,
            bob_bloch,
            spec,
            cache: DecompCache::new(LpMode::Float),
        })
    }

    pub fn visibility(&self) -> f64 {
        self.spec.alpha.unwrap()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn shared_weights(&self) -> &[f64] {
        &self.q
    }

    /// The basis change on Alice's side: a π rotation about the y axis.
    fn rotate_setting(a: &QubitSetting) -> UnitVector {
        UnitVector::new(-a.x(), a.y(), -a.z()).expect("rotation preserves the norm")
    }

    fn weights_for(&self, a: &QubitSetting) -> Result<std::sync::Arc<crate::geometry::ConvexWeights>> {
        let rotated = Self::rotate_setting(a);
        self.cache
            .get_or_compute(rotated.scaled(self.ell), &self.profile.m_vectors)
    }
}

impl Simulation for FilteredLhs {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, _b: &QubitSetting) -> Result<()> {
        self.weights_for(a).map(|_| ())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        crate::quantum::born_statistics(&filtered_state(self.visibility(), self.theta)?, a, b)
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        let w = self.weights_for(a)?;
        let verts = self.poly.vertices();
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for (lam, v) in verts.iter().enumerate() {
            let ea: f64 = w
                .support()
                .iter()
                .map(|&(i, wi)| {
                    wi * (self.profile.gamma_min / self.profile.gammas[i])
                        * sgn_expect(verts[i].dot(v))
                })
                .sum();
            let eb = b.dot3(&self.bob_bloch[lam]);
            mean_a += self.q[lam] * ea;
            mean_b += self.q[lam] * eb;
            corr += self.q[lam] * ea * eb;
        }
        Ok(CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        })
    }

    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness {
        let u: f64 = rng.gen();
        let lam = self
            .q_cum
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.q_cum.len() - 1);
        SharedRandomness::Single(lam)
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let SharedRandomness::Single(lam) = shared else {
            return Err(Error::InvalidInput(
                "filtered model expects a single shared label".into(),
            ));
        };
        let v = &self.poly.vertices()[*lam];
        let w = self.weights_for(a)?;
        let i = w.sample(local);
        let accept = self.profile.gamma_min / self.profile.gammas[i];
        let out_a = if local.gen::<f64>() < accept {
            sgn_response(self.poly.vertices()[i].dot(v), local)
        } else {
            coin(local)
        };
        let out_b = biased((1.0 + b.dot3(&self.bob_bloch[*lam])) / 2.0, local);
        Ok(RoundOutcome {
            a: out_a,
            b: out_b,
            message: None,
            selection: None,
        })
    }

    fn reference_state(&self) -> Result<DensityState> {
        filtered_state(self.visibility(), self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{iterate_family, make_platonic, PlatonicSolid};
    use crate::protocols::Protocol2;
    use crate::quantum::born_statistics;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn statistics_match_quantum_reference_exactly() {
        let poly = make_platonic(PlatonicSolid::Icosahedron);
        for theta in [0.3, 0.6, std::f64::consts::FRAC_PI_4] {
            let model = FilteredLhs::new(poly.clone(), theta).unwrap();
            let rho = filtered_state(model.visibility(), theta).unwrap();
            let mut rng = StdRng::seed_from_u64(13);
            for _ in 0..20 {
                let a = UnitVector::random(&mut rng);
                let b = UnitVector::random(&mut rng);
                let got = model.statistics(&a, &b).unwrap();
                let want = born_statistics(&rho, &a, &b).unwrap();
                assert!(
                    (got.corr_ab - want.corr_ab).abs() < 1e-9,
                    "theta={theta} corr {} vs {}",
                    got.corr_ab,
                    want.corr_ab
                );
                assert!((got.mean_a - want.mean_a).abs() < 1e-9);
                assert!((got.mean_b - want.mean_b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quarter_pi_reduces_to_unfiltered_protocol() {
        let poly = make_platonic(PlatonicSolid::Icosahedron);
        let theta = std::f64::consts::FRAC_PI_4;
        let model = FilteredLhs::new(poly.clone(), theta).unwrap();
        let base = Protocol2::new(poly).unwrap();
        // Uniform shared weights and unfiltered hidden states.
        for q in model.shared_weights() {
            assert!((q - 1.0 / 12.0).abs() < 1e-15);
        }
        let mut rng = StdRng::seed_from_u64(14);
        let a = UnitVector::random(&mut rng);
        let b = UnitVector::random(&mut rng);
        let rotated = UnitVector::new(-a.x(), a.y(), -a.z()).unwrap();
        let got = model.statistics(&a, &b).unwrap();
        let want = base.statistics(&rotated, &b).unwrap();
        assert!((got.corr_ab - want.corr_ab).abs() < 1e-12);
    }

    #[test]
    fn works_on_irregular_family_members() {
        let f1 = iterate_family(1).unwrap();
        let model = FilteredLhs::new(f1, 0.5).unwrap();
        let rho = filtered_state(model.visibility(), 0.5).unwrap();
        let mut rng = StdRng::seed_from_u64(15);
        let a = UnitVector::random(&mut rng);
        let b = UnitVector::random(&mut rng);
        let got = model.statistics(&a, &b).unwrap();
        let want = born_statistics(&rho, &a, &b).unwrap();
        assert!((got.corr_ab - want.corr_ab).abs() < 1e-9);
        assert!((got.mean_a - want.mean_a).abs() < 1e-9);
        assert!((got.mean_b - want.mean_b).abs() < 1e-9);
    }

    #[test]
    fn theta_out_of_range_rejected() {
        let poly = make_platonic(PlatonicSolid::Icosahedron);
        assert!(FilteredLhs::new(poly.clone(), 0.0).is_err());
        assert!(FilteredLhs::new(poly, 1.0).is_err());
    }
}
