//! Communication-assisted simulation: the n-label selection protocol
//! (protocol 4, shared randomness plus a selection message) and the
//! one-way full-rank model (no shared randomness, a codebook label per
//! round).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::geometry::{
    gamma_profile, inscribed_radius, inscribed_radius_of, ConvexWeights, GammaProfile, Polyhedron,
};
use crate::lp::LpMode;
use crate::quantum::{
    bloch_vector, conditional_state, werner_state, CorrelationTriple, DensityState, QubitSetting,
};

use super::{
    biased, coin, sgn_expect, sgn_response, DecompCache, ProtocolId, ProtocolSpec, RoundOutcome,
    SharedRandomness, Simulation,
};

/// Vertex-setting visibility (γ_min/γ_max)(1 - x^n), x = 1 - 2γ_min/D.
pub fn protocol4_vertex_visibility(poly: &Polyhedron, n: usize) -> Result<f64> {
    Protocol4::new(poly.clone(), n).map(|p| p.vertex_visibility())
}

/// Full visibility including the decomposition factor ℓ².
pub fn protocol4_visibility(poly: &Polyhedron, n: usize) -> Result<f64> {
    Protocol4::new(poly.clone(), n).map(|p| p.visibility())
}

/// Closed-form mean transmitted label 1 + (1-x) x g_n'(x) with
/// g_n(x) = (1 - x^n)/(1 - x).
pub fn protocol4_avg_comm(poly: &Polyhedron, n: usize) -> Result<f64> {
    Protocol4::new(poly.clone(), n).map(|p| p.avg_communication())
}

/// Mean label in the dense-vertex-set limit (x -> 1/2): 2 - (1+n)/2^n.
pub fn protocol4_avg_comm_limit(n: usize) -> f64 {
    2.0 - (1.0 + n as f64) / 2f64.powi(n as i32)
}

fn g_prime(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let one_minus = 1.0 - x;
    (-nf * x.powi(n as i32 - 1) * one_minus + (1.0 - x.powi(n as i32))) / (one_minus * one_minus)
}

/// Selection protocol: Alice walks through n shared vertex labels, selects
/// one (or rejects them all) and tells Bob her selection index.
pub struct Protocol4 {
    poly: Polyhedron,
    profile: GammaProfile,
    n: usize,
    ell: f64,
    x: f64,
    spec: ProtocolSpec,
    cache: DecompCache,
}

impl Protocol4 {
    pub fn new(poly: Polyhedron, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInput("selection depth n must be >= 1".into()));
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
        let x = 1.0 - 2.0 * profile.gamma_min / d;
        let vertex_alpha = (profile.gamma_min / profile.gamma_max) * (1.0 - x.powi(n as i32));
        let alpha = vertex_alpha * ell * ell;
        let spec = ProtocolSpec {
            id: ProtocolId::Protocol4,
            polyhedron: Some(poly.name().to_string()),
            vertex_count: Some(poly.vertex_count()),
            n: Some(n),
            alpha: Some(alpha),
            shared_randomness_bits: (n as f64) * d.log2(),
            communication_bits: (n as f64).log2(),
        };
        Ok(Self {
            poly,
            profile,
            n,
            ell,
            x,
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

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shrinking_factor(&self) -> f64 {
        self.ell
    }

    /// x = 1 - 2γ_min/D, the per-step continuation mean.
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn vertex_visibility(&self) -> f64 {
        (self.profile.gamma_min / self.profile.gamma_max) * (1.0 - self.x.powi(self.n as i32))
    }

    pub fn visibility(&self) -> f64 {
        self.spec.alpha.unwrap()
    }

    /// Closed-form mean transmitted label. Exact whenever each derived
    /// direction m_l splits the vertex set the same way its vertex v_l
    /// does (true for the regular solids and the first family iterates).
    pub fn avg_communication(&self) -> f64 {
        1.0 + (1.0 - self.x) * self.x * g_prime(self.x, self.n)
    }

    fn weights_for(&self, v: &QubitSetting) -> Result<Arc<ConvexWeights>> {
        self.cache
            .get_or_compute(v.scaled(self.ell), &self.profile.m_vectors)
    }

    /// One round with both parties already at derived vertices m_l, m_k.
    pub fn vertex_round(
        &self,
        lambdas: &[usize],
        l: usize,
        k: usize,
        local: &mut dyn RngCore,
    ) -> RoundOutcome {
        assert_eq!(lambdas.len(), self.n);
        let gmin = self.profile.gamma_min;
        let gmax = self.profile.gamma_max;
        let m_l = &self.profile.m_vectors[l];
        let mut selection = 0u32;
        for (t, &lam) in lambdas.iter().enumerate() {
            let d = m_l.dot(&self.poly.vertices()[lam]).abs();
            let p_accept = d * gmin / gmax;
            let p_continue = 1.0 - d * gmin / self.profile.gammas[l];
            let u: f64 = local.gen();
            if u < p_accept {
                selection = (t + 1) as u32;
                break;
            } else if u >= p_accept + (1.0 - p_accept - p_continue).max(0.0) {
                // continue to the next label
            } else {
                break; // reject all
            }
        }
        let (a, message) = if selection >= 1 {
            let lam = lambdas[(selection - 1) as usize];
            (
                sgn_response(m_l.dot(&self.poly.vertices()[lam]), local),
                selection,
            )
        } else {
            (coin(local), 1)
        };
        let v_k = &self.poly.vertices()[k];
        let lam_c = lambdas[(message - 1) as usize];
        let b = if local.gen::<f64>() < gmin / self.profile.gammas[k] {
            -sgn_response(v_k.dot(&self.poly.vertices()[lam_c]), local)
        } else {
            coin(local)
        };
        RoundOutcome {
            a,
            b,
            message: Some(message),
            selection: Some(selection),
        }
    }

    fn enumeration_guard(&self) -> Result<()> {
        let count = (self.poly.vertex_count() as f64).powi(self.n as i32);
        if count > 2f64.powi(20) {
            return Err(Error::Resource(format!(
                "exact enumeration over D^n = {count:.3e} label tuples is too large"
            )));
        }
        Ok(())
    }

    /// Exact statistics (and mean label) at vertex settings (m_l, m_k) by
    /// enumeration over all D^n label tuples.
    pub fn vertex_statistics(&self, l: usize, k: usize) -> Result<(CorrelationTriple, f64)> {
        self.enumeration_guard()?;
        let d = self.poly.vertex_count();
        let dn = (d as f64).powi(self.n as i32);
        let gmin = self.profile.gamma_min;
        let gmax = self.profile.gamma_max;
        let m_l = &self.profile.m_vectors[l];
        let v_k = &self.poly.vertices()[k];
        let gk = gmin / self.profile.gammas[k];

        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        let mut mean_c = 0.0;

        let mut tuple = vec![0usize; self.n];
        loop {
            let mut reach = 1.0;
            let mut p_accept_at = Vec::with_capacity(self.n);
            for &lam in &tuple {
                let dot = m_l.dot(&self.poly.vertices()[lam]).abs();
                p_accept_at.push(reach * dot * gmin / gmax);
                reach *= 1.0 - dot * gmin / self.profile.gammas[l];
            }
            let p_reject = 1.0 - p_accept_at.iter().sum::<f64>();

            let eb_at = |c: usize| -> f64 {
                -gk * sgn_expect(v_k.dot(&self.poly.vertices()[tuple[c]]))
            };
            for (t, &pt) in p_accept_at.iter().enumerate() {
                let ea = sgn_expect(m_l.dot(&self.poly.vertices()[tuple[t]]));
                mean_a += pt * ea;
                mean_b += pt * eb_at(t);
                corr += pt * ea * eb_at(t);
                mean_c += pt * (t + 1) as f64;
            }
            // Rejection: a is a fair coin (uncorrelated), c = 1.
            mean_b += p_reject * eb_at(0);
            mean_c += p_reject;

            // Odometer over label tuples.
            let mut pos = 0;
            loop {
                if pos == self.n {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] < d {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == self.n {
                break;
            }
        }
        Ok((
            CorrelationTriple {
                mean_a: mean_a / dn,
                mean_b: mean_b / dn,
                corr_ab: corr / dn,
            },
            mean_c / dn,
        ))
    }

    /// Exact enumerated mean transmitted label at arbitrary settings.
    pub fn enumerated_mean_comm(&self, a: &QubitSetting) -> Result<f64> {
        let wa = self.weights_for(a)?;
        let mut acc = 0.0;
        for &(l, wl) in wa.support() {
            let (_, c) = self.vertex_statistics(l, 0)?;
            acc += wl * c;
        }
        Ok(acc)
    }
}

impl Simulation for Protocol4 {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, b: &QubitSetting) -> Result<()> {
        self.weights_for(a)?;
        self.weights_for(b)?;
        Ok(())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        Ok(CorrelationTriple {
            mean_a: 0.0,
            mean_b: 0.0,
            corr_ab: -self.visibility() * a.dot(b),
        })
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        let wa = self.weights_for(a)?;
        let wb = self.weights_for(b)?;
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for &(l, wl) in wa.support() {
            for &(k, wk) in wb.support() {
                let (t, _) = self.vertex_statistics(l, k)?;
                mean_a += wl * wk * t.mean_a;
                mean_b += wl * wk * t.mean_b;
                corr += wl * wk * t.corr_ab;
            }
        }
        Ok(CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        })
    }

    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness {
        SharedRandomness::Tuple(
            (0..self.n)
                .map(|_| rng.gen_range(0..self.poly.vertex_count()))
                .collect(),
        )
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let SharedRandomness::Tuple(lambdas) = shared else {
            return Err(Error::InvalidInput(
                "protocol 4 expects a label tuple".into(),
            ));
        };
        let l = self.weights_for(a)?.sample(local);
        let k = self.weights_for(b)?.sample(local);
        Ok(self.vertex_round(lambdas, l, k, local))
    }

    fn mean_communication(&self) -> Option<f64> {
        Some(self.avg_communication())
    }

    fn reference_state(&self) -> Result<DensityState> {
        werner_state(self.visibility())
    }
}

struct PreparedSetting {
    p_plus: f64,
    weights: [Arc<ConvexWeights>; 2],
}

/// One-way simulation of a full-rank two-qubit state: Alice samples her
/// outcome from the exact marginal, decomposes Bob's conditional state
/// over a pure-state codebook and sends the sampled vertex label.
pub struct FullRankComm {
    rho: DensityState,
    codebook: Polyhedron,
    ell: f64,
    spec: ProtocolSpec,
    prepared: Mutex<HashMap<[i64; 3], Arc<PreparedSetting>>>,
    cache: DecompCache,
}

impl FullRankComm {
    pub fn new(rho: DensityState, codebook: Polyhedron) -> Result<Self> {
        if rho.dims() != (2, 2) {
            return Err(Error::InvalidInput(
                "one-way model implemented for two-qubit states".into(),
            ));
        }
        let min_eig = rho.eigenvalues()?[0];
        if min_eig < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "state must be full rank (min eigenvalue {min_eig:.3e})"
            )));
        }
        let ell = inscribed_radius(&codebook)?;
        let d = codebook.vertex_count() as f64;
        let spec = ProtocolSpec {
            id: ProtocolId::FullRankComm,
            polyhedron: Some(codebook.name().to_string()),
            vertex_count: Some(codebook.vertex_count()),
            n: None,
            alpha: None,
            shared_randomness_bits: 0.0,
            communication_bits: d.log2(),
        };
        Ok(Self {
            rho,
            codebook,
            ell,
            spec,
            prepared: Mutex::new(HashMap::new()),
            cache: DecompCache::new(LpMode::Float),
        })
    }

    pub fn codebook(&self) -> &Polyhedron {
        &self.codebook
    }

    pub fn state(&self) -> &DensityState {
        &self.rho
    }

    fn prepared_for(&self, a: &QubitSetting) -> Result<Arc<PreparedSetting>> {
        let key = [
            (a.x() / 1e-12).round() as i64,
            (a.y() / 1e-12).round() as i64,
            (a.z() / 1e-12).round() as i64,
        ];
        if let Some(hit) = self.prepared.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let mut weights = Vec::with_capacity(2);
        let mut p_plus = 0.0;
        for outcome in [1i8, -1] {
            let (p, cond) = conditional_state(&self.rho, a, outcome)?;
            if outcome == 1 {
                p_plus = p;
            }
            let r = bloch_vector(&cond);
            let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if norm > self.ell + 1e-12 {
                return Err(Error::VisibilityTooHigh {
                    setting: a.as_array(),
                    norm,
                    limit: self.ell,
                });
            }
            weights.push(self.cache.get_or_compute(r, self.codebook.vertices())?);
        }
        let entry = Arc::new(PreparedSetting {
            p_plus,
            weights: [weights[0].clone(), weights[1].clone()],
        });
        self.prepared.lock().unwrap().insert(key, entry.clone());
        Ok(entry)
    }
}

impl Simulation for FullRankComm {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, _b: &QubitSetting) -> Result<()> {
        self.prepared_for(a).map(|_| ())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        crate::quantum::born_statistics(&self.rho, a, b)
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        let prep = self.prepared_for(a)?;
        let verts = self.codebook.vertices();
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for (idx, outcome) in [(0usize, 1.0f64), (1, -1.0)] {
            let p = if idx == 0 {
                prep.p_plus
            } else {
                1.0 - prep.p_plus
            };
            let eb: f64 = prep.weights[idx]
                .support()
                .iter()
                .map(|&(i, w)| w * b.dot(&verts[i]))
                .sum();
            mean_a += p * outcome;
            mean_b += p * eb;
            corr += p * outcome * eb;
        }
        Ok(CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        })
    }

    fn sample_shared(&self, _rng: &mut dyn RngCore) -> SharedRandomness {
        SharedRandomness::None
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        if !matches!(shared, SharedRandomness::None) {
            return Err(Error::InvalidInput(
                "one-way model uses no shared randomness".into(),
            ));
        }
        let prep = self.prepared_for(a)?;
        let (out_a, widx) = if local.gen::<f64>() < prep.p_plus {
            (1i8, 0usize)
        } else {
            (-1, 1)
        };
        let i = prep.weights[widx].sample(local);
        let v = &self.codebook.vertices()[i];
        let out_b = biased((1.0 + b.dot(v)) / 2.0, local);
        Ok(RoundOutcome {
            a: out_a,
            b: out_b,
            message: Some((i + 1) as u32),
            selection: None,
        })
    }

    fn reference_state(&self) -> Result<DensityState> {
        Ok(self.rho.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_platonic, PlatonicSolid, UnitVector};
    use crate::quantum::born_statistics;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn ico() -> Polyhedron {
        make_platonic(PlatonicSolid::Icosahedron)
    }

    #[test]
    fn protocol4_closed_forms_icosahedron() {
        let p4 = Protocol4::new(ico(), 2).unwrap();
        // x = 1 - 2 gamma / 12 = (5 - sqrt5)/6.
        let x = (5.0 - 5f64.sqrt()) / 6.0;
        assert!((p4.x() - x).abs() < 1e-12);
        assert!((p4.vertex_visibility() - (1.0 - x * x)).abs() < 1e-12);
        let ell2 = (5.0 + 2.0 * 5f64.sqrt()) / 15.0;
        assert!((p4.visibility() - (1.0 - x * x) * ell2).abs() < 1e-12);
        assert!((p4.avg_communication() - (1.0 + x * (1.0 - x))).abs() < 1e-12);
        // Frozen decimals for the record.
        assert!((p4.vertex_visibility() - 0.787797).abs() < 1e-6);
        assert!((p4.visibility() - 0.497474).abs() < 1e-6);
        assert!((p4.avg_communication() - 1.248452).abs() < 1e-6);
    }

    #[test]
    fn protocol4_n1_special_cases() {
        let p4 = Protocol4::new(ico(), 1).unwrap();
        assert!((p4.avg_communication() - 1.0).abs() < 1e-12);
        // n = 1 vertex visibility is 2 gamma_min^2 / (D gamma_max).
        let prof = p4.profile();
        let expect = 2.0 * prof.gamma_min * prof.gamma_min
            / (12.0 * prof.gamma_max);
        assert!((p4.vertex_visibility() - expect).abs() < 1e-12);
        assert!(Protocol4::new(ico(), 0).is_err());
    }

    #[test]
    fn protocol4_limit_formula() {
        assert!((protocol4_avg_comm_limit(2) - 1.25).abs() < 1e-15);
        assert!((protocol4_avg_comm_limit(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn protocol4_visibility_monotone_in_n() {
        let mut last = 0.0;
        for n in 1..=8 {
            let v = protocol4_visibility(&ico(), n).unwrap();
            assert!(v > last);
            last = v;
        }
        // Limit in n is (gamma_min/gamma_max) ell^2.
        let p4 = Protocol4::new(ico(), 60).unwrap();
        let lim = p4.shrinking_factor() * p4.shrinking_factor();
        assert!((p4.visibility() - lim).abs() < 1e-9);
    }

    #[test]
    fn protocol4_enumeration_matches_closed_form_at_vertices() {
        let p4 = Protocol4::new(ico(), 2).unwrap();
        let expect = p4.vertex_visibility();
        // Visibility is independent of Alice's vertex.
        for l in 0..12 {
            let (t, _) = p4.vertex_statistics(l, 5).unwrap();
            let mm = p4.profile().m_vectors[l].dot(&p4.profile().m_vectors[5]);
            assert!((t.corr_ab + expect * mm).abs() < 1e-9, "l={l}");
            assert!(t.mean_a.abs() < 1e-9, "l={l} mean_a={}", t.mean_a);
            assert!(t.mean_b.abs() < 1e-9, "l={l} mean_b={}", t.mean_b);
        }
    }

    #[test]
    fn protocol4_enumerated_mean_comm_matches_closed_form() {
        let p4 = Protocol4::new(ico(), 2).unwrap();
        let (_, c) = p4.vertex_statistics(3, 0).unwrap();
        assert!((c - p4.avg_communication()).abs() < 1e-9);
        let mut rng = StdRng::seed_from_u64(9);
        let a = UnitVector::random(&mut rng);
        let c2 = p4.enumerated_mean_comm(&a).unwrap();
        assert!((c2 - p4.avg_communication()).abs() < 1e-9);
    }

    #[test]
    fn protocol4_full_statistics_match_closed_form() {
        let p4 = Protocol4::new(ico(), 2).unwrap();
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..10 {
            let a = UnitVector::random(&mut rng);
            let b = UnitVector::random(&mut rng);
            let got = p4.statistics(&a, &b).unwrap();
            let want = p4.closed_form(&a, &b).unwrap();
            assert!((got.corr_ab - want.corr_ab).abs() < 1e-9);
            assert!(got.mean_a.abs() < 1e-9);
            assert!(got.mean_b.abs() < 1e-9);
        }
    }

    #[test]
    fn fullrank_statistics_reproduce_born() {
        let rho = werner_state(0.6).unwrap();
        let model = FullRankComm::new(rho.clone(), ico()).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let a = UnitVector::random(&mut rng);
            let b = UnitVector::random(&mut rng);
            let got = model.statistics(&a, &b).unwrap();
            let want = born_statistics(&rho, &a, &b).unwrap();
            assert!((got.corr_ab - want.corr_ab).abs() < 1e-9);
            assert!((got.mean_a - want.mean_a).abs() < 1e-9);
            assert!((got.mean_b - want.mean_b).abs() < 1e-9);
        }
    }

    #[test]
    fn fullrank_white_noise_has_flat_statistics() {
        let model = FullRankComm::new(werner_state(0.0).unwrap(), ico()).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        let a = UnitVector::random(&mut rng);
        let b = UnitVector::random(&mut rng);
        let t = model.statistics(&a, &b).unwrap();
        assert!(t.corr_ab.abs() < 1e-9 && t.mean_a.abs() < 1e-9 && t.mean_b.abs() < 1e-9);
    }

    #[test]
    fn fullrank_rejects_overscaled_states() {
        // alpha = 0.9 puts the conditional Bloch norm above the
        // icosahedron's inscribed radius for every setting.
        let model = FullRankComm::new(werner_state(0.9).unwrap(), ico()).unwrap();
        let a = UnitVector::new(0.0, 0.0, 1.0).unwrap();
        match model.prepare(&a, &a) {
            Err(Error::VisibilityTooHigh { norm, limit, .. }) => {
                assert!((norm - 0.9).abs() < 1e-9);
                assert!((limit - 0.7946544723).abs() < 1e-9);
            }
            other => panic!("expected VisibilityTooHigh, got {other:?}"),
        }
        // Rank-deficient input is rejected outright.
        assert!(FullRankComm::new(werner_state(1.0).unwrap(), ico()).is_err());
    }

    #[test]
    fn fullrank_round_carries_message() {
        let model = FullRankComm::new(werner_state(0.6).unwrap(), ico()).unwrap();
        let mut shared = StdRng::seed_from_u64(1);
        let mut local = StdRng::seed_from_u64(2);
        let a = UnitVector::new(0.0, 0.0, 1.0).unwrap();
        let r = model.round(&a, &a, &mut shared, &mut local).unwrap();
        let m = r.message.unwrap();
        assert!((1..=12).contains(&m));
    }
}
