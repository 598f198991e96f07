//! Switched-system definitions, the two boost-converter builders and the
//! on-disk model format.

pub mod format;

pub use format::{parse_system, serialize_system, ParsedModel};

use crate::error::{Error, Result};
use crate::flow::{affine_flow, FlowMap, Matrix, Vector};

/// One linear dynamic `dx/dt = A x + b`, identified by a 1-based mode id.
#[derive(Clone, Debug)]
pub struct LinearMode {
    pub id: usize,
    pub a: Matrix,
    pub b: Vector,
    /// Switching-cell positions for converter modes, kept for reporting.
    pub sigma: Option<[u8; 3]>,
}

/// A switched linear system sampled every `tau` time units. Switching
/// signals are piecewise constant on `[k tau, (k+1) tau)`.
#[derive(Clone, Debug)]
pub struct SwitchedSystem {
    pub dim: usize,
    pub modes: Vec<LinearMode>,
    pub tau: f64,
}

impl SwitchedSystem {
    pub fn new(dim: usize, modes: Vec<LinearMode>, tau: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("system needs at least one mode".into()));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.id != i + 1 {
                return Err(Error::InvalidParameter(format!(
                    "mode ids must be exactly 1..{}, found {} at position {}",
                    modes.len(),
                    m.id,
                    i + 1
                )));
            }
            if m.a.nrows() != dim || m.a.ncols() != dim {
                return Err(Error::NonSquare {
                    rows: m.a.nrows(),
                    cols: m.a.ncols(),
                });
            }
            if m.b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.b.len(),
                });
            }
        }
        Ok(SwitchedSystem { dim, modes, tau })
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// One-step flow maps for all modes over the sampling period.
    pub fn flow_maps(&self) -> Result<Vec<FlowMap>> {
        self.flow_maps_for(self.tau)
    }

    /// Flow maps over an arbitrary duration (sub-sampling, oracles).
    pub fn flow_maps_for(&self, tau: f64) -> Result<Vec<FlowMap>> {
        self.modes
            .iter()
            .map(|m| affine_flow(&m.a, &m.b, tau, m.id))
            .collect()
    }
}

/// Closed axis-aligned box, the safe region V.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBox {
    pub lower: Vector,
    pub upper: Vector,
}

impl StateBox {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for i in 0..lower.len() {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidParameter(format!(
                    "box requires lower < upper in every dimension, got [{}, {}] in dimension {}",
                    lower[i],
                    upper[i],
                    i + 1
                )));
            }
        }
        Ok(StateBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Closed membership with a small boundary tolerance.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    /// Infinity-norm distance from x to the box (0 inside).
    pub fn distance_outside(&self, x: &Vector) -> f64 {
        (0..self.dim())
            .map(|i| (self.lower[i] - x[i]).max(x[i] - self.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// The box inflated by eps on every face.
    pub fn inflate(&self, eps: f64) -> StateBox {
        StateBox {
            lower: self.lower.map(|v| v - eps),
            upper: self.upper.map(|v| v + eps),
        }
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.upper[i] - self.lower[i]).collect()
    }

    pub fn center(&self) -> Vector {
        (&self.lower + &self.upper) * 0.5
    }
}

/// Per-unit electrical parameters of the 1-cell boost converter.
#[derive(Clone, Copy, Debug)]
pub struct Boost1CellParams {
    pub x_c: f64,
    pub x_l: f64,
    pub r_c: f64,
    pub r_l: f64,
    pub r_0: f64,
    pub v_s: f64,
}

impl Default for Boost1CellParams {
    fn default() -> Self {
        Boost1CellParams {
            x_c: 70.0,
            x_l: 3.0,
            r_c: 0.005,
            r_l: 0.05,
            r_0: 1.0,
            v_s: 1.0,
        }
    }
}

/// 2-mode, 2-dimensional boost converter; state order is (i_l, v_c).
pub fn build_boost_1cell(p: &Boost1CellParams, tau: f64) -> Result<SwitchedSystem> {
    for (name, v) in [
        ("x_c", p.x_c),
        ("x_l", p.x_l),
        ("r_0", p.r_0),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "1-cell parameter {name} must be positive, got {v}"
            )));
        }
    }
    for (name, v) in [("r_c", p.r_c), ("r_l", p.r_l), ("v_s", p.v_s)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "1-cell parameter {name} must be non-negative, got {v}"
            )));
        }
    }
    let rr = p.r_0 / (p.r_0 + p.r_c);
    let a1 = Matrix::from_row_slice(
        2,
        2,
        &[-p.r_l / p.x_l, 0.0, 0.0, -1.0 / (p.x_c * (p.r_0 + p.r_c))],
    );
    let a2 = Matrix::from_row_slice(
        2,
        2,
        &[
            -(p.r_l + p.r_0 * p.r_c / (p.r_0 + p.r_c)) / p.x_l,
            -rr / p.x_l,
            rr / p.x_c,
            -rr / p.x_c,
        ],
    );
    let b = Vector::from_vec(vec![p.v_s / p.x_l, 0.0]);
    SwitchedSystem::new(
        2,
        vec![
            LinearMode { id: 1, a: a1, b: b.clone(), sigma: None },
            LinearMode { id: 2, a: a2, b, sigma: None },
        ],
        tau,
    )
}

/// Circuit parameters of the 3-cell boost converter.
///
/// The defaults are working values for tests and demos, not measured
/// hardware parameters; override them in the model file for real studies.
#[derive(Clone, Copy, Debug)]
pub struct Boost3CellParams {
    pub r: f64,
    pub l: f64,
    pub m: f64,
    pub c: f64,
    pub r_load: f64,
    pub u: f64,
}

impl Default for Boost3CellParams {
    fn default() -> Self {
        Boost3CellParams {
            r: 0.1,
            l: 1e-3,
            m: 0.0,
            c: 1e-3,
            r_load: 1.0,
            u: 100.0,
        }
    }
}

/// All eight switching-cell position vectors.
pub const ALL_SIGMAS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [0, 0, 1],
    [0, 1, 0],
    [0, 1, 1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 1, 0],
    [1, 1, 1],
];

/// 4-dimensional converter with one mode per available sigma vector.
///
/// Dynamics: `dx/dt = M_LC^-1 M_S x + U M_LC^-1 (s1, s2, s3, 0)^T`. The A
/// matrix is shared by all modes; only the constant term depends on sigma.
///
/// Mode numbering: sigmas are ordered by the binary value `s1 s2 s3` and
/// ids assigned densely from 1. With all eight sigmas available this is
/// exactly binary value + 1 ((0,0,0) -> 1, (1,1,1) -> 8); with the
/// sigma1 = 0 restriction of a stuck-open first cell it gives ids 1..4.
pub fn build_boost_3cell(
    p: &Boost3CellParams,
    tau: f64,
    available_sigmas: &[[u8; 3]],
) -> Result<SwitchedSystem> {
    for (name, v) in [
        ("r", p.r),
        ("L", p.l),
        ("C", p.c),
        ("R", p.r_load),
        ("U", p.u),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "3-cell parameter {name} must be positive, got {v}"
            )));
        }
    }
    if available_sigmas.is_empty() {
        return Err(Error::InvalidParameter(
            "3-cell converter needs at least one available sigma vector".into(),
        ));
    }
    let m_lc = Matrix::from_row_slice(
        4,
        4,
        &[
            2.0 * p.l, -p.m, -p.m, 0.0, //
            -p.m, 2.0 * p.l, -p.m, 0.0, //
            -p.m, -p.m, 2.0 * p.l, 0.0, //
            0.0, 0.0, 0.0, p.c,
        ],
    );
    let m_s = Matrix::from_row_slice(
        4,
        4,
        &[
            -2.0 * p.r, 0.0, 0.0, -1.0, //
            0.0, -2.0 * p.r, 0.0, -1.0, //
            0.0, 0.0, -2.0 * p.r, -1.0, //
            1.0, 1.0, 1.0, -1.0 / p.r_load,
        ],
    );
    let m_lc_inv = m_lc.clone().try_inverse().ok_or_else(|| {
        Error::InvalidParameter("M_LC is singular for the given L, M, C".into())
    })?;
    let a = &m_lc_inv * &m_s;

    let mut sigmas: Vec<[u8; 3]> = available_sigmas.to_vec();
    sigmas.sort_by_key(|s| sigma_value(s));
    sigmas.dedup();

    let modes = sigmas
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let sv = Vector::from_vec(vec![s[0] as f64, s[1] as f64, s[2] as f64, 0.0]);
            LinearMode {
                id: i + 1,
                a: a.clone(),
                b: &m_lc_inv * sv * p.u,
                sigma: Some(s),
            }
        })
        .collect();
    SwitchedSystem::new(4, modes, tau)
}

fn sigma_value(s: &[u8; 3]) -> u8 {
    s[0] * 4 + s[1] * 2 + s[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn nominal_1cell() -> SwitchedSystem {
        build_boost_1cell(&Boost1CellParams::default(), 0.5).unwrap()
    }

    #[test]
    fn boost_1cell_nominal_matrices() {
        let sys = nominal_1cell();
        assert_eq!(sys.dim, 2);
        assert_eq!(sys.mode_count(), 2);
        let a1 = &sys.modes[0].a;
        assert!((a1[(0, 0)] - (-0.05 / 3.0)).abs() < 1e-15);
        assert!((a1[(1, 1)] - (-1.0 / (70.0 * 1.005))).abs() < 1e-15);
        assert_eq!(a1[(0, 1)], 0.0);
        assert_eq!(a1[(1, 0)], 0.0);
        let b1 = &sys.modes[0].b;
        assert!((b1[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b1[1], 0.0);
        let a2 = &sys.modes[1].a;
        assert!((a2[(0, 1)] - (-(1.0 / 3.0) * (1.0 / 1.005))).abs() < 1e-15);
        assert!((a2[(1, 0)] - (1.0 / 70.0) * (1.0 / 1.005)).abs() < 1e-15);
    }

    #[test]
    fn boost_1cell_degenerate_params() {
        let p = Boost1CellParams {
            r_l: 0.0,
            r_c: 0.0,
            r_0: 1.0,
            v_s: 0.0,
            ..Boost1CellParams::default()
        };
        let sys = build_boost_1cell(&p, 0.5).unwrap();
        for m in &sys.modes {
            assert_eq!(m.b, dvector![0.0, 0.0]);
        }
        let a1 = &sys.modes[0].a;
        assert_eq!(a1[(0, 0)], 0.0);
        assert!((a1[(1, 1)] - (-1.0 / 70.0)).abs() < 1e-15);
    }

    #[test]
    fn boost_1cell_eigenvalues_have_negative_real_part() {
        // at n = 2: trace < 0 and det > 0
        let sys = nominal_1cell();
        for m in &sys.modes {
            let tr = m.a[(0, 0)] + m.a[(1, 1)];
            let det = m.a[(0, 0)] * m.a[(1, 1)] - m.a[(0, 1)] * m.a[(1, 0)];
            assert!(tr < 0.0, "mode {} trace {}", m.id, tr);
            assert!(det > 0.0, "mode {} det {}", m.id, det);
        }
    }

    #[test]
    fn boost_3cell_mode_structure() {
        let p = Boost3CellParams::default();
        let sys = build_boost_3cell(&p, 1.0 / 60000.0, &ALL_SIGMAS).unwrap();
        assert_eq!(sys.dim, 4);
        assert_eq!(sys.mode_count(), 8);
        // sigma (0,0,0) -> mode 1, b = 0
        assert_eq!(sys.modes[0].sigma, Some([0, 0, 0]));
        assert!(sys.modes[0].b.amax() == 0.0);
        assert_eq!(sys.modes[7].sigma, Some([1, 1, 1]));
        // A identical across modes
        for m in &sys.modes[1..] {
            assert_eq!(m.a, sys.modes[0].a);
        }
        // restriction sigma1 = 0 keeps 4 modes
        let restricted: Vec<[u8; 3]> =
            ALL_SIGMAS.iter().copied().filter(|s| s[0] == 0).collect();
        let sys4 = build_boost_3cell(&p, 1.0 / 60000.0, &restricted).unwrap();
        assert_eq!(sys4.mode_count(), 4);
    }

    #[test]
    fn boost_3cell_diagonal_mlc_hand_check() {
        let p = Boost3CellParams {
            m: 0.0,
            l: 1.0,
            c: 1.0,
            u: 100.0,
            ..Boost3CellParams::default()
        };
        // M_LC = diag(2, 2, 2, 1); sigma = (1,0,0) -> b = (50, 0, 0, 0)
        let sys = build_boost_3cell(&p, 1.0, &[[1, 0, 0]]).unwrap();
        let b = &sys.modes[0].b;
        assert!((b[0] - 50.0).abs() < 1e-12);
        assert!(b[1].abs() < 1e-12 && b[2].abs() < 1e-12 && b[3].abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_systems() {
        assert!(build_boost_3cell(&Boost3CellParams::default(), 1.0, &[]).is_err());
        let p = Boost1CellParams { x_l: 0.0, ..Boost1CellParams::default() };
        assert!(build_boost_1cell(&p, 0.5).is_err());
        // L = M puts (1,1,1,0) in the kernel of M_LC
        let bad = Boost3CellParams { l: 1.0, m: 1.0, ..Boost3CellParams::default() };
        assert!(build_boost_3cell(&bad, 1.0, &ALL_SIGMAS).is_err());
    }
}
