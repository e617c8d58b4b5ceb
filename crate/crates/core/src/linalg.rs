//! Dense complex matrix foundation for the two-qutrit problem.
//!
//! The joint space is the tensor product of two qutrits with levels
//! `{|0>, |+1>, |-1>}`. Joint basis states are numbered 1..=9 in the
//! documentation and on the command line, 0..=8 internally:
//!
//! | index | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9 |
//! |-------|---|---|---|---|---|---|---|---|---|
//! | (a,b) | (0,0) | (0,+1) | (0,-1) | (+1,0) | (+1,+1) | (+1,-1) | (-1,0) | (-1,+1) | (-1,-1) |
//!
//! [`BasisLabel`] is the only place that mapping is encoded.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Joint Hilbert space dimension.
pub const DIM: usize = 9;
/// Single-qutrit dimension.
pub const QUTRIT_DIM: usize = 3;

/// Tolerance on `sum |a_i|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity and unit-trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;
/// Hermiticity tolerance accepted by the eigensolver.
pub const EIG_HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One qutrit level, in the order used to build joint indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Ground,
    Plus,
    Minus,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::Plus, Level::Minus];

    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Plus => 1,
            Level::Minus => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }

    /// The magnetic-like quantum number 0, +1 or -1.
    pub fn value(self) -> i8 {
        match self {
            Level::Ground => 0,
            Level::Plus => 1,
            Level::Minus => -1,
        }
    }

    pub fn is_excited(self) -> bool {
        self != Level::Ground
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Ground => write!(f, "0"),
            Level::Plus => write!(f, "+1"),
            Level::Minus => write!(f, "-1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Subsystem {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::A => write!(f, "A"),
            Subsystem::B => write!(f, "B"),
        }
    }
}

/// A joint basis state `|a, b>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub a: Level,
    pub b: Level,
}

impl BasisLabel {
    pub fn new(a: Level, b: Level) -> Self {
        BasisLabel { a, b }
    }

    /// From a 0-based joint index.
    pub fn from_index(k: usize) -> Option<Self> {
        if k >= DIM {
            return None;
        }
        Some(BasisLabel {
            a: Level::from_index(k / QUTRIT_DIM)?,
            b: Level::from_index(k % QUTRIT_DIM)?,
        })
    }

    /// From a 1-based joint index as used in documentation and configs.
    pub fn from_one_based(k: usize) -> Option<Self> {
        k.checked_sub(1).and_then(BasisLabel::from_index)
    }

    pub fn index(self) -> usize {
        self.a.index() * QUTRIT_DIM + self.b.index()
    }

    pub fn one_based(self) -> usize {
        self.index() + 1
    }

    pub fn level(self, s: Subsystem) -> Level {
        match s {
            Subsystem::A => self.a,
            Subsystem::B => self.b,
        }
    }

    pub fn all() -> impl Iterator<Item = BasisLabel> {
        (0..DIM).filter_map(BasisLabel::from_index)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.a, self.b)
    }
}

/// Nine amplitudes of a normalized two-qutrit pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState9 {
    amps: [C64; DIM],
}

impl PureState9 {
    pub fn new(amps: [C64; DIM]) -> Result<Self> {
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { norm_sq });
        }
        Ok(PureState9 { amps })
    }

    /// Rescales `amps` to unit norm. Fails only for the zero vector.
    pub fn normalized(mut amps: [C64; DIM]) -> Result<Self> {
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || norm_sq <= 0.0 {
            return Err(Error::Normalization { norm_sq });
        }
        let n = norm_sq.sqrt();
        for a in &mut amps {
            *a /= n;
        }
        PureState9::new(amps)
    }

    /// `|k>` for a 0-based index.
    pub fn basis(k: usize) -> Result<Self> {
        if k >= DIM {
            return Err(Error::Dimension {
                expected: DIM,
                got: k + 1,
            });
        }
        let mut amps = [C64::default(); DIM];
        amps[k] = c(1.0, 0.0);
        PureState9::new(amps)
    }

    /// Normalized superposition of `(0-based index, amplitude)` terms.
    pub fn superposition(terms: &[(usize, C64)]) -> Result<Self> {
        let mut amps = [C64::default(); DIM];
        for &(k, a) in terms {
            if k >= DIM {
                return Err(Error::Dimension {
                    expected: DIM,
                    got: k + 1,
                });
            }
            amps[k] += a;
        }
        PureState9::normalized(amps)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut amps = [C64::default(); DIM];
            for a in &mut amps {
                *a = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            if let Ok(s) = PureState9::normalized(amps) {
                return s;
            }
        }
    }

    /// Random state supported on the given 0-based indices only.
    pub fn random_on<R: Rng + ?Sized>(rng: &mut R, support: &[usize]) -> Self {
        loop {
            let mut amps = [C64::default(); DIM];
            for &k in support {
                amps[k] = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            if let Ok(s) = PureState9::normalized(amps) {
                return s;
            }
        }
    }

    pub fn amplitudes(&self) -> &[C64; DIM] {
        &self.amps
    }

    pub fn amplitude(&self, k: usize) -> C64 {
        self.amps[k]
    }

    /// 0-based indices whose amplitude magnitude exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..DIM).filter(|&k| self.amps[k].norm() > tol).collect()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix of dimension 3 or 9.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = DensityMatrix { m };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by an operation that preserves validity.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        DensityMatrix { m }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.m.nrows();
        if !self.m.is_square() || (n != DIM && n != QUTRIT_DIM) {
            return Err(Error::Dimension {
                expected: DIM,
                got: n,
            });
        }
        let dev = hermitian_deviation(&self.m);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace = {tr}")));
        }
        let min = hermitian_eigenvalues(&self.m)?[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Largest `|rho_ij - other_ij|`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    pub(crate) fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |m - m^dagger|` over entries.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `|psi><psi|`, entries `a_i a_j^*`.
pub fn projector(state: &PureState9) -> DensityMatrix {
    let a = state.amplitudes();
    let m = CMatrix::from_fn(DIM, DIM, |i, j| a[i] * a[j].conj());
    DensityMatrix::from_trusted(m)
}

/// Reduced state of the subsystem `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    rho.require_dim(DIM)?;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(QUTRIT_DIM, QUTRIT_DIM);
    for x in 0..QUTRIT_DIM {
        for y in 0..QUTRIT_DIM {
            let mut acc = C64::default();
            for e in 0..QUTRIT_DIM {
                let (i, j) = match keep {
                    Subsystem::A => (x * QUTRIT_DIM + e, y * QUTRIT_DIM + e),
                    Subsystem::B => (e * QUTRIT_DIM + x, e * QUTRIT_DIM + y),
                };
                acc += m[(i, j)];
            }
            out[(x, y)] = acc;
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Transpose over the indices of `subsystem` only. The result is Hermitian
/// with unit trace but need not be positive.
pub fn partial_transpose(m: &CMatrix, subsystem: Subsystem) -> Result<CMatrix> {
    if m.nrows() != DIM || m.ncols() != DIM {
        return Err(Error::Dimension {
            expected: DIM,
            got: m.nrows(),
        });
    }
    let out = CMatrix::from_fn(DIM, DIM, |i, j| {
        let (a, b) = (i / QUTRIT_DIM, i % QUTRIT_DIM);
        let (ap, bp) = (j / QUTRIT_DIM, j % QUTRIT_DIM);
        let (r, s) = match subsystem {
            Subsystem::A => (ap * QUTRIT_DIM + b, a * QUTRIT_DIM + bp),
            Subsystem::B => (a * QUTRIT_DIM + bp, ap * QUTRIT_DIM + b),
        };
        m[(r, s)]
    });
    Ok(out)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let dev = hermitian_deviation(m);
    if dev > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    // symmetrize so the solver sees an exactly Hermitian input
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let dev = hermitian_deviation(m);
    if dev > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}
