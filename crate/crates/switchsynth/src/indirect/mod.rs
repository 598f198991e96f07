//! Grid abstraction of the sampled system inside the safe box, the
//! bisimulation-style precision certificate for the linear case, safety
//! synthesis on the finite graph and periodic pattern extraction.

pub mod cycles;
pub mod graph;

pub use cycles::find_patterns;
pub use graph::{build_abstract_graph, safety_synthesis, AbstractGraph, Successor, WinningSet};

use crate::error::Result;
use crate::flow::{induced_inf_norm, Vector};
use crate::model::SwitchedSystem;
use crate::numeric;

/// The lattice `{x : x_i = 2 k_i eta}` (infinity-norm variant).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub eta: f64,
    pub dim: usize,
}

impl Grid {
    pub fn new(eta: f64, dim: usize) -> Self {
        assert!(eta > 0.0 && eta.is_finite(), "eta must be positive");
        Grid { eta, dim }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.eta
    }

    /// Represented state `(2 eta k_1, ..., 2 eta k_n)`.
    pub fn state(&self, p: &GridPoint) -> Vector {
        Vector::from_iterator(self.dim, p.k.iter().map(|&k| k as f64 * self.spacing()))
    }

    /// Closest grid point in the infinity norm; exact half-spacing ties
    /// round toward +inf per coordinate, so every state is within eta of
    /// its image.
    pub fn nearest(&self, x: &Vector) -> GridPoint {
        let k = x
            .iter()
            .map(|&v| (v / self.spacing() + 0.5).floor() as i64)
            .collect();
        GridPoint { k }
    }
}

/// A lattice point, stored by its integer coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub k: Vec<i64>,
}

/// Contraction certificate: `beta * eps + eta <= eps` with
/// `beta = max_p ||exp(A_p tau)||_inf`, so one abstraction step cannot grow
/// the tracking error beyond eps.
#[derive(Clone, Copy, Debug)]
pub struct BisimCertificate {
    pub beta: f64,
    pub eta: f64,
    pub epsilon: f64,
}

/// Outcome of the certificate check. When no mode-wise contraction holds in
/// the infinity norm the abstraction is still usable, just not certified.
#[derive(Clone, Copy, Debug)]
pub enum CertificateOutcome {
    Certified(BisimCertificate),
    Uncertified { beta: f64 },
}

impl CertificateOutcome {
    pub fn beta(&self) -> f64 {
        match self {
            CertificateOutcome::Certified(c) => c.beta,
            CertificateOutcome::Uncertified { beta } => *beta,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CertificateOutcome::Certified(_))
    }
}

/// Compute the contraction factor over all modes and, when it is below 1,
/// the smallest precision `eps = eta / (1 - beta)` satisfying
/// `beta * eps + eta <= eps`.
pub fn certificate(sys: &SwitchedSystem, eta: f64) -> Result<CertificateOutcome> {
    let flows = sys.flow_maps()?;
    let beta = flows
        .iter()
        .map(|f| induced_inf_norm(&f.e))
        .fold(0.0, f64::max);
    if beta < 1.0 {
        let epsilon = eta / (1.0 - beta);
        debug_assert!(beta * epsilon + eta <= epsilon * (1.0 + 1e-12));
        Ok(CertificateOutcome::Certified(BisimCertificate {
            beta,
            eta,
            epsilon,
        }))
    } else {
        Ok(CertificateOutcome::Uncertified { beta })
    }
}

/// Periodic mode sequence, one mode per sampling step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SwitchingPattern {
    pub modes: Vec<usize>,
}

impl SwitchingPattern {
    pub fn new(modes: Vec<usize>) -> Self {
        assert!(!modes.is_empty(), "pattern must be non-empty");
        SwitchingPattern { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographically smallest rotation, used to deduplicate cycles.
    pub fn canonical_rotation(&self) -> SwitchingPattern {
        let n = self.modes.len();
        let best = (0..n)
            .map(|s| {
                let mut rot = Vec::with_capacity(n);
                rot.extend_from_slice(&self.modes[s..]);
                rot.extend_from_slice(&self.modes[..s]);
                rot
            })
            .min()
            .expect("pattern is non-empty");
        SwitchingPattern { modes: best }
    }

    /// True if `other` is a rotation of `self`.
    pub fn matches_up_to_rotation(&self, other: &SwitchingPattern) -> bool {
        self.modes.len() == other.modes.len()
            && self.canonical_rotation() == other.canonical_rotation()
    }
}

impl std::fmt::Display for SwitchingPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.modes.iter().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Integer coordinate range of grid points inside a closed interval.
pub(crate) fn lattice_range(lo: f64, hi: f64, spacing: f64) -> (i64, i64) {
    let tol = numeric::DEFAULT.snap_tol;
    let k_lo = numeric::snapped_ceil(lo / spacing, tol);
    let k_hi = numeric::snapped_floor(hi / spacing, tol);
    (k_lo, k_hi)
}
