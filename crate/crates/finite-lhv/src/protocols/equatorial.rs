//! Two-bit model for equatorial measurements: one bit picks the cosine or
//! sine component, a second bit flips both outputs to flatten the
//! marginals.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::quantum::{werner_state, CorrelationTriple, DensityState, QubitSetting};

use super::{
    biased, equatorial_angle, ProtocolId, ProtocolSpec, RoundOutcome, SharedRandomness, Simulation,
};

pub struct Equatorial {
    spec: ProtocolSpec,
}

impl Default for Equatorial {
    fn default() -> Self {
        Self::new()
    }
}

impl Equatorial {
    pub fn new() -> Self {
        Self {
            spec: ProtocolSpec {
                id: ProtocolId::Equatorial,
                polyhedron: None,
                vertex_count: None,
                n: None,
                alpha: Some(0.5),
                shared_randomness_bits: 2.0,
                communication_bits: 0.0,
            },
        }
    }

    pub fn visibility(&self) -> f64 {
        0.5
    }

    /// Round at explicit angles (settings on the equator).
    pub fn round_at_angles(
        &self,
        lambda: bool,
        mu: bool,
        theta_a: f64,
        theta_b: f64,
        local: &mut dyn RngCore,
    ) -> RoundOutcome {
        let flip = if mu { -1.0 } else { 1.0 };
        let comp_a = if lambda { theta_a.sin() } else { theta_a.cos() };
        let comp_b = if lambda { theta_b.sin() } else { theta_b.cos() };
        let a = biased((1.0 + flip * comp_a) / 2.0, local);
        let b = biased((1.0 - flip * comp_b) / 2.0, local);
        RoundOutcome {
            a,
            b,
            message: None,
            selection: None,
        }
    }

    /// Exact statistics at explicit angles: enumeration over the four
    /// (lambda, mu) pairs.
    pub fn statistics_at_angles(&self, theta_a: f64, theta_b: f64) -> CorrelationTriple {
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        let mut corr = 0.0;
        for lambda in [false, true] {
            for mu in [false, true] {
                let flip = if mu { -1.0 } else { 1.0 };
                let ea = flip * if lambda { theta_a.sin() } else { theta_a.cos() };
                let eb = -flip * if lambda { theta_b.sin() } else { theta_b.cos() };
                mean_a += ea / 4.0;
                mean_b += eb / 4.0;
                corr += ea * eb / 4.0;
            }
        }
        CorrelationTriple {
            mean_a,
            mean_b,
            corr_ab: corr,
        }
    }
}

impl Simulation for Equatorial {
    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn prepare(&self, a: &QubitSetting, b: &QubitSetting) -> Result<()> {
        equatorial_angle(a)?;
        equatorial_angle(b)?;
        Ok(())
    }

    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        self.prepare(a, b)?;
        Ok(CorrelationTriple {
            mean_a: 0.0,
            mean_b: 0.0,
            corr_ab: -0.5 * a.dot(b),
        })
    }

    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple> {
        Ok(self.statistics_at_angles(equatorial_angle(a)?, equatorial_angle(b)?))
    }

    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness {
        use rand::Rng;
        SharedRandomness::EquatorialPair {
            lambda: rng.gen(),
            mu: rng.gen(),
        }
    }

    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let SharedRandomness::EquatorialPair { lambda, mu } = shared else {
            return Err(Error::InvalidInput(
                "equatorial model expects a bit pair".into(),
            ));
        };
        Ok(self.round_at_angles(
            *lambda,
            *mu,
            equatorial_angle(a)?,
            equatorial_angle(b)?,
            local,
        ))
    }

    fn reference_state(&self) -> Result<DensityState> {
        werner_state(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn correlator_is_half_the_dot_product() {
        let eq = Equatorial::new();
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..100 {
            let ta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let tb: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let t = eq.statistics_at_angles(ta, tb);
            assert!(t.mean_a.abs() < 1e-12);
            assert!(t.mean_b.abs() < 1e-12);
            let dot = ta.cos() * tb.cos() + ta.sin() * tb.sin();
            assert!((t.corr_ab + 0.5 * dot).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_angles_give_minus_half() {
        let eq = Equatorial::new();
        let t = eq.statistics_at_angles(1.234, 1.234);
        assert!((t.corr_ab + 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_equatorial_settings_rejected() {
        let eq = Equatorial::new();
        let tilted = UnitVector::new(1.0, 0.0, 0.3).unwrap();
        let flat = UnitVector::new(0.0, 1.0, 0.0).unwrap();
        assert!(eq.statistics(&tilted, &flat).is_err());
        assert!(eq.statistics(&flat, &flat).is_ok());
    }
}
