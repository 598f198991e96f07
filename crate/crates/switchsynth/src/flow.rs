//! Exact one-step dynamics of a sampled linear mode.
//!
//! A mode `dx/dt = A x + b` observed every `tau` time units is the affine map
//! `x -> E x + c` with `E = exp(A tau)` and `c = int_0^tau exp(A s) ds . b`.
//! Both are obtained from a single exponential of the augmented matrix
//! `[[A, b], [0, 0]]`, which also covers singular `A`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Induced infinity norm: max over rows of the sum of absolute entries.
pub fn induced_inf_norm(m: &Matrix) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `exp(A t)` by scaling and squaring with diagonal Pade approximants
/// (Higham 2005 order selection on the 1-norm).
pub fn matrix_exponential(a: &Matrix, t: f64) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    check_finite(a, "matrix_exponential input")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("matrix_exponential time"));
    }
    Ok(expm(&(a * t)))
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &Matrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evaluate the [m/m] Pade approximant given precomputed even powers of A.
fn pade(a: &Matrix, powers: &[&Matrix], b: &[f64]) -> Matrix {
    let n = a.nrows();
    let id = DMatrix::identity(n, n);
    // u = A * (sum of odd coefficients over even powers), v = even part
    let mut u_inner = &id * b[1];
    let mut v = &id * b[0];
    for (i, p) in powers.iter().enumerate() {
        u_inner += *p * b[2 * i + 3];
        v += *p * b[2 * i + 2];
    }
    let u = a * u_inner;
    let p = &v + &u;
    let q = &v - &u;
    q.lu().solve(&p).expect("Pade denominator is singular")
}

fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::identity(0, 0);
    }
    let norm = one_norm(a);
    let a2 = a * a;
    if norm <= THETA_3 {
        return pade(a, &[&a2], &B3);
    }
    let a4 = &a2 * &a2;
    if norm <= THETA_5 {
        return pade(a, &[&a2, &a4], &B5);
    }
    let a6 = &a4 * &a2;
    if norm <= THETA_7 {
        return pade(a, &[&a2, &a4, &a6], &B7);
    }
    if norm <= THETA_9 {
        let a8 = &a6 * &a2;
        return pade(a, &[&a2, &a4, &a6, &a8], &B9);
    }
    // order 13, with scaling
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2f64.powi(-(s as i32));
    let a_s = a * scale;
    let a2 = &a_s * &a_s;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let id = DMatrix::identity(n, n);
    let u = &a_s
        * (&a6 * (&a6 * B13[13] + &a4 * B13[11] + &a2 * B13[9])
            + &a6 * B13[7]
            + &a4 * B13[5]
            + &a2 * B13[3]
            + &id * B13[1]);
    let v = &a6 * (&a6 * B13[12] + &a4 * B13[10] + &a2 * B13[8])
        + &a6 * B13[6]
        + &a4 * B13[4]
        + &a2 * B13[2]
        + &id * B13[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// The exact one-step affine map of one mode over one sampling period.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub e: Matrix,
    pub c: Vector,
    pub mode_id: usize,
    pub tau: f64,
    e_inv: Matrix,
}

impl FlowMap {
    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    pub fn post_point(&self, x: &Vector) -> Vector {
        assert_eq!(
            x.len(),
            self.dim(),
            "post_point: state dimension mismatch"
        );
        &self.e * x + &self.c
    }

    pub fn pre_point(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.dim(), "pre_point: state dimension mismatch");
        // solve E y = x - c rather than multiplying by a formed inverse
        self.e
            .clone()
            .lu()
            .solve(&(x - &self.c))
            .expect("flow matrix was validated invertible at construction")
    }

    /// Cached inverse, used only for cheap condition estimates and
    /// interval preimages; point computations go through an LU solve.
    pub fn e_inverse(&self) -> &Matrix {
        &self.e_inv
    }
}

/// Build the flow map of `dx/dt = A x + b` over one period `tau`.
///
/// `E` and `c` are read off the exponential of the `(n+1)x(n+1)` augmented
/// matrix `[[A, b], [0, 0]]`.
pub fn affine_flow(a: &Matrix, b: &Vector, tau: f64, mode_id: usize) -> Result<FlowMap> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    check_finite(a, "affine_flow A")?;
    if !b.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("affine_flow b"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive and finite, got {tau}"
        )));
    }
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, 1)).copy_from(b);
    let exp = matrix_exponential(&aug, tau)?;
    let e = exp.view((0, 0), (n, n)).into_owned();
    let c = Vector::from_iterator(n, (0..n).map(|i| exp[(i, n)]));
    check_finite(&e, "flow matrix E")?;

    let e_inv = e.clone().try_inverse().ok_or(Error::IllConditioned {
        cond: f64::INFINITY,
    })?;
    let cond = induced_inf_norm(&e) * induced_inf_norm(&e_inv);
    if !cond.is_finite() || cond > numeric::DEFAULT.cond_limit {
        return Err(Error::IllConditioned { cond });
    }
    Ok(FlowMap {
        e,
        c,
        mode_id,
        tau,
        e_inv,
    })
}
