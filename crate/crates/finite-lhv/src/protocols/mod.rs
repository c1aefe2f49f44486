//! Executable response functions for the simulation protocols, each in two
//! modes: exact analytic statistics (enumeration over the finite
//! shared-randomness support) and per-round sampling for Monte Carlo
//! verification.

mod communication;
mod equatorial;
mod filtered;
mod werner_lhs;

pub use communication::{
    protocol4_avg_comm, protocol4_avg_comm_limit, protocol4_vertex_visibility,
    protocol4_visibility, FullRankComm, Protocol4,
};
pub use equatorial::Equatorial;
pub use filtered::FilteredLhs;
pub use werner_lhs::{protocol1_visibility, protocol2_visibility, Protocol1, Protocol2};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_decompose, ConvexWeights, UnitVector, TIE_TOL};
use crate::lp::LpMode;
use crate::quantum::{CorrelationTriple, DensityState, QubitSetting};

/// The shared classical variable, per protocol family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SharedRandomness {
    /// No prior correlation (one-way communication model).
    None,
    /// A single vertex label in {0..D-1}.
    Single(usize),
    /// The equatorial model's bit pair.
    EquatorialPair { lambda: bool, mu: bool },
    /// n vertex labels for the selection protocol.
    Tuple(Vec<usize>),
}

/// One simulated round. `message` is present iff the protocol
/// communicates; `selection` records the selection variable T for
/// diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub a: i8,
    pub b: i8,
    pub message: Option<u32>,
    pub selection: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    Protocol1,
    Protocol2,
    Equatorial,
    Protocol4,
    FullRankComm,
    FilteredLhs,
}

impl std::fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Protocol1 => "protocol1",
            Self::Protocol2 => "protocol2",
            Self::Equatorial => "equatorial",
            Self::Protocol4 => "protocol4",
            Self::FullRankComm => "fullrank-comm",
            Self::FilteredLhs => "filtered-lhs",
        };
        f.write_str(s)
    }
}

/// Static description of a configured protocol: identity, resources and
/// derived visibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub id: ProtocolId,
    /// Name of the polyhedron in use, if any.
    pub polyhedron: Option<String>,
    /// Vertex count of the polyhedron in use, if any.
    pub vertex_count: Option<usize>,
    /// Selection depth n (communication protocol only).
    pub n: Option<usize>,
    /// Derived visibility of the simulated state, when the protocol
    /// targets a Werner-family state.
    pub alpha: Option<f64>,
    /// Shared randomness cost in bits.
    pub shared_randomness_bits: f64,
    /// Worst-case communication cost in bits per round (0 for local models).
    pub communication_bits: f64,
}

/// A runnable simulation protocol.
///
/// Samplers are pure given (shared draw, local stream, settings); analytic
/// evaluators are pure. Implementations are Send + Sync so the Monte Carlo
/// harness can drive rounds from a worker pool.
pub trait Simulation: Send + Sync {
    fn spec(&self) -> &ProtocolSpec;

    /// Validate a setting pair and warm the per-setting caches.
    fn prepare(&self, a: &QubitSetting, b: &QubitSetting) -> Result<()>;

    /// Closed-form target statistics for a setting pair.
    fn closed_form(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple>;

    /// Exact statistics by enumeration over the shared-randomness support
    /// and the decomposition supports.
    fn statistics(&self, a: &QubitSetting, b: &QubitSetting) -> Result<CorrelationTriple>;

    /// Draw the shared variable for one round.
    fn sample_shared(&self, rng: &mut dyn RngCore) -> SharedRandomness;

    /// Play one round at fixed shared randomness.
    fn round_with_shared(
        &self,
        shared: &SharedRandomness,
        a: &QubitSetting,
        b: &QubitSetting,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome>;

    /// Play one full round (shared and local streams kept separate so
    /// tests can fix one while varying the other).
    fn round(
        &self,
        a: &QubitSetting,
        b: &QubitSetting,
        shared: &mut dyn RngCore,
        local: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let s = self.sample_shared(shared);
        self.round_with_shared(&s, a, b, local)
    }

    /// Closed-form mean transmitted label, when the protocol communicates.
    fn mean_communication(&self) -> Option<f64> {
        None
    }

    /// The quantum state whose Born statistics the protocol reproduces.
    fn reference_state(&self) -> Result<DensityState>;
}

/// Sign response with the tie convention: an exact orthogonality
/// (|dot| <= 1e-12) is answered by a fair coin.
pub(crate) fn sgn_response(dot: f64, rng: &mut dyn RngCore) -> i8 {
    if dot.abs() <= TIE_TOL {
        if rng.gen::<bool>() {
            1
        } else {
            -1
        }
    } else if dot > 0.0 {
        1
    } else {
        -1
    }
}

/// Expectation of the sign response: +-1 off ties, 0 on a tie.
pub(crate) fn sgn_expect(dot: f64) -> f64 {
    if dot.abs() <= TIE_TOL {
        0.0
    } else if dot > 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn coin(rng: &mut dyn RngCore) -> i8 {
    if rng.gen::<bool>() {
        1
    } else {
        -1
    }
}

/// Draw +1 with probability p.
pub(crate) fn biased(p: f64, rng: &mut dyn RngCore) -> i8 {
    if rng.gen::<f64>() < p {
        1
    } else {
        -1
    }
}

/// Per-protocol convex-decomposition cache, keyed by the target quantized
/// at 1e-12 so caching never changes semantics. The vertex set is fixed
/// per protocol instance, so the target alone identifies the entry.
pub(crate) struct DecompCache {
    map: Mutex<HashMap<[i64; 3], Arc<ConvexWeights>>>,
    mode: LpMode,
}

impl DecompCache {
    pub fn new(mode: LpMode) -> Self {
        Self {
            map: Mutex::new(HashMap::new()),
            mode,
        }
    }

    fn key(target: &[f64; 3]) -> [i64; 3] {
        [
            (target[0] / 1e-12).round() as i64,
            (target[1] / 1e-12).round() as i64,
            (target[2] / 1e-12).round() as i64,
        ]
    }

    pub fn get_or_compute(
        &self,
        target: [f64; 3],
        verts: &[UnitVector],
    ) -> Result<Arc<ConvexWeights>> {
        let key = Self::key(&target);
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let w = Arc::new(convex_decompose(target, verts, self.mode)?);
        self.map.lock().unwrap().insert(key, w.clone());
        Ok(w)
    }
}

/// Reject settings off the Bloch equator.
pub(crate) fn equatorial_angle(v: &QubitSetting) -> Result<f64> {
    if v.z().abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "setting ({:.6}, {:.6}, {:.6}) is not equatorial",
            v.x(),
            v.y(),
            v.z()
        )));
    }
    Ok(v.y().atan2(v.x()))
}
