//! Local hidden state protocols for Werner states: the regular-polyhedron
//! model (protocol 1) and its generalization to any antipodally closed
//! vertex set (protocol 2).
//!
//! Both share Bob's response: on shared vertex v, output b = +-1 with
//! probability (1 -+ b.v)/2, i.e. the Born rule on the hidden qubit state
//! with Bloch vector -v. Alice decomposes her shrunk setting over the
//! relevant vertex set and answers with the sign of a vertex dot product.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::geometry::{gamma_profile, inscribed_radius_of, GammaProfile, Polyhedron};
use crate::lp::LpMode;
use crate::quantum::{werner_state, CorrelationTriple, DensityState, QubitSetting};

use super::{
    biased, coin, sgn_expect, sgn_response, DecompCache, ProtocolId, ProtocolSpec, RoundOutcome,
    SharedRandomness, Simulation,
};

/// Visibility 2γℓ/D of the regular-polyhedron protocol.
pub fn protocol1_visibility(poly: &Polyhedron) -> Result<f64> {
    Protocol1::new(poly.clone()).map(|p| p.visibility())
}

/// Visibility 2ℓγ_min/D of the generalized protocol.
pub fn protocol2_visibility(poly: &Polyhedron) -> Result<f64> {
    Protocol2::new(poly.clone()).map(|p| p.visibility())
}

/// Protocol 1: requires a regular vertex set (half-space sums parallel to
/// the vertices with a common γ).
pub struct Protocol1 {
    poly: Polyhedron,
    gamma: f64,
    ell: f64,
    spec: ProtocolSpec,
    cache: DecompCache,
}

impl Protocol1 {
    pub fn new(poly: Polyhedron) -> Result<Self> {
        let profile = gamma_profile(&poly)?;
        if !profile.is_regular {
            return Err(Error::InvalidInput(format!(
                "'{}' is not regular (gamma range [{:.6}, {:.6}]); use protocol 2",
                poly.name(),
                profile.gamma_min,
                profile.gamma_max
            )));
        }
        let ell = inscribed_radius_of(poly.vertices())?;
        let d = poly.vertex_count() as f64;
        let gamma = profile.gamma_min;
        let alpha = 2.0 * gamma * ell / d;
        let spec = ProtocolSpec {
            id: ProtocolId::Protocol1,
            polyhedron: Some(poly.name().to_string()),
            vertex_count: Some(poly.vertex_count()),
            n: None,
            alpha: Some(alpha),
            shared_randomness_bits: d.log2(),
            communication_bits: 0.0,
        };
        Ok(Self {
            poly,
            gamma,
            ell,
            spec,
            cache: DecompCache::new(LpMode::Float),
        })
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.poly
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn shrinking_factor(&self) -> f64 {
        self.ell
    }

    pub fn visibility(&self) -> f64 {
        self.spec.alpha.unwrap()
    }

    fn weights_for(&self, a: &QubitSetting) -> Result<std::sync::Arc<crate::geometry::ConvexWeights>> {
        self.cache
            .get_or_compute(a.scaled(self.ell), self.poly.vertices())
    }

    /// Exact statistics when Alice's measurement is the vertex with index
    /// `i` (no decomposition step): the finite sum over the shared label.
    pub fn vertex_statistics(&self, i: usize, b: &QubitSetting) -> CorrelationTriple {
        let verts = self.poly.vertices();
        let d = verts.len() as f64;
        let vi = &verts[i];
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for v in verts {
            let ea = sgn_expect(vi.dot(v));
            let eb = -b.dot(v);
            mean_a += ea / d;
            mean_b += eb / d;
            corr += ea * eb / d;
        }
        CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        }
    }
}

impl Simulation for Protocol1 {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, _b: &QubitSetting) -> Result<()> {
        self.weights_for(a).map(|_| ())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        Ok(CorrelationTriple {
            mean_a: 0.0,
            mean_b: 0.0,
            corr_ab: -self.visibility() * a.dot(b),
        })
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        let w = self.weights_for(a)?;
        let verts = self.poly.vertices();
        let d = verts.len() as f64;
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for v in verts {
            let ea: f64 = w
                .support()
                .iter()
                .map(|&(i, wi)| wi * sgn_expect(verts[i].dot(v)))
                .sum();
            let eb = -b.dot(v);
            mean_a += ea / d;
            mean_b += eb / d;
            corr += ea * eb / d;
        }
        Ok(CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        })
    }

    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness {
        SharedRandomness::Single(rng.gen_range(0..self.poly.vertex_count()))
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let SharedRandomness::Single(lambda) = shared else {
            return Err(Error::InvalidInput(
                "protocol 1 expects a single shared label".into(),
            ));
        };
        let v = &self.poly.vertices()[*lambda];
        let w = self.weights_for(a)?;
        let i = w.sample(local);
        let out_a = sgn_response(self.poly.vertices()[i].dot(v), local);
        let out_b = biased((1.0 - b.dot(v)) / 2.0, local);
        Ok(RoundOutcome {
            a: out_a,
            b: out_b,
            message: None,
            selection: None,
        })
    }

    fn reference_state(&self) -> Result<DensityState> {
        werner_state(self.visibility())
    }
}

/// Protocol 2: any antipodally closed vertex set. Alice decomposes over
/// the derived vertex set M, answers with probability γ_min/γ_i and
/// otherwise outputs a random bit.
pub struct Protocol2 {
    poly: Polyhedron,
    profile: GammaProfile,
    ell: f64,
    spec: ProtocolSpec,
    cache: DecompCache,
}

impl Protocol2 {
    pub fn new(poly: Polyhedron) -> Result<Self> {
        if !poly.antipodal_closed() {
            return Err(Error::InvalidInput(format!(
                "'{}' is not antipodally closed; apply the closure first",
                poly.name()
            )));
        }
        let profile = gamma_profile(&poly)?;
        let ell = inscribed_radius_of(&profile.m_vectors)?;
        let d = poly.vertex_count() as f64;
        let alpha = 2.0 * ell * profile.gamma_min / d;
        let spec = ProtocolSpec {
            id: ProtocolId::Protocol2,
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
            spec,
            cache: DecompCache::new(LpMode::Float),
        })
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.poly
    }

    pub fn profile(&self) -> &GammaProfile {
        &self.profile
    }

    pub fn shrinking_factor(&self) -> f64 {
        self.ell
    }

    pub fn visibility(&self) -> f64 {
        self.spec.alpha.unwrap()
    }

    fn weights_for(&self, a: &QubitSetting) -> Result<std::sync::Arc<crate::geometry::ConvexWeights>> {
        self.cache
            .get_or_compute(a.scaled(self.ell), &self.profile.m_vectors)
    }

    /// Exact statistics when Alice's measurement is the derived vertex
    /// m_i: the finite sum over the shared label.
    pub fn vertex_statistics(&self, i: usize, b: &QubitSetting) -> CorrelationTriple {
        let verts = self.poly.vertices();
        let d = verts.len() as f64;
        let vi = &verts[i];
        let accept = self.profile.gamma_min / self.profile.gammas[i];
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for v in verts {
            let ea = accept * sgn_expect(vi.dot(v));
            let eb = -b.dot(v);
            mean_a += ea / d;
            mean_b += eb / d;
            corr += ea * eb / d;
        }
        CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        }
    }
}

impl Simulation for Protocol2 {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, _b: &QubitSetting) -> Result<()> {
        self.weights_for(a).map(|_| ())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        Ok(CorrelationTriple {
            mean_a: 0.0,
            mean_b: 0.0,
            corr_ab: -self.visibility() * a.dot(b),
        })
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        let w = self.weights_for(a)?;
        let verts = self.poly.vertices();
        let d = verts.len() as f64;
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for v in verts {
            let ea: f64 = w
                .support()
                .iter()
                .map(|&(i, wi)| {
                    wi * (self.profile.gamma_min / self.profile.gammas[i])
                        * sgn_expect(verts[i].dot(v))
                })
                .sum();
            let eb = -b.dot(v);
            mean_a += ea / d;
            mean_b += eb / d;
            corr += ea * eb / d;
        }
        Ok(CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        })
    }

    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness {
        SharedRandomness::Single(rng.gen_range(0..self.poly.vertex_count()))
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let SharedRandomness::Single(lambda) = shared else {
            return Err(Error::InvalidInput(
                "protocol 2 expects a single shared label".into(),
            ));
        };
        let v = &self.poly.vertices()[*lambda];
        let w = self.weights_for(a)?;
        let i = w.sample(local);
        let accept = self.profile.gamma_min / self.profile.gammas[i];
        let out_a = if local.gen::<f64>() < accept {
            sgn_response(self.poly.vertices()[i].dot(v), local)
        } else {
            coin(local)
        };
        let out_b = biased((1.0 - b.dot(v)) / 2.0, local);
        Ok(RoundOutcome {
            a: out_a,
            b: out_b,
            message: None,
            selection: None,
        })
    }

    fn reference_state(&self) -> Result<DensityState> {
        werner_state(self.visibility())
    }
}
