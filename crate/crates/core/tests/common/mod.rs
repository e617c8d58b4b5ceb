//! Test-side reference implementations, written without the library's
//! linear algebra so that they can serve as independent oracles.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qutrit_dephasing::linalg::CMatrix;
use qutrit_dephasing::PureState9;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(seed: u64) -> PureState9 {
    PureState9::random(&mut rng(seed))
}

/// Cyclic Jacobi rotations on a real symmetric matrix. Returns eigenvalues
/// ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix through the real embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is the original one doubled.
pub fn oracle_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[i][j] = z.re;
            r[i + n][j + n] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
        }
    }
    jacobi_eigenvalues(r).into_iter().step_by(2).collect()
}

/// Partial transpose on A by explicit `(a, b)` index bookkeeping.
pub fn oracle_partial_transpose_a(m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(9, 9);
    for a in 0..3 {
        for b in 0..3 {
            for a2 in 0..3 {
                for b2 in 0..3 {
                    out[(3 * a2 + b, 3 * a + b2)] = m[(3 * a + b, 3 * a2 + b2)];
                }
            }
        }
    }
    out
}

pub fn oracle_negativity(m: &CMatrix) -> f64 {
    oracle_eigenvalues(&oracle_partial_transpose_a(m))
        .into_iter()
        .filter(|l| *l < 0.0)
        .map(|l| -l)
        .sum()
}

pub fn outer(state: &PureState9) -> CMatrix {
    let a = state.amplitudes();
    CMatrix::from_fn(9, 9, |i, j| a[i] * a[j].conj())
}

/// Diagonals of the single-qutrit dephasing Kraus operators.
fn local_diagonals(g: f64) -> [[f64; 3]; 3] {
    let w = (1.0 - g * g).sqrt();
    [[1.0, g, g], [0.0, w, 0.0], [0.0, 0.0, w]]
}

/// Diagonals of the collective Kraus operators.
fn collective_diagonals(g: f64) -> [[f64; 9]; 3] {
    let g2 = g * g;
    let w1 = (1.0 - g2).sqrt();
    let w2 = -g2 * (1.0 - g2).sqrt();
    let w3 = ((1.0 - g2) * (1.0 - g2 * g2)).sqrt();
    [
        [g, 1.0, 1.0, 1.0, g, 1.0, 1.0, 1.0, g],
        [w1, 0.0, 0.0, 0.0, w2, 0.0, 0.0, 0.0, w2],
        [0.0, 0.0, 0.0, 0.0, w3, 0.0, 0.0, 0.0, w3],
    ]
}

/// Entry factor `f_ij = sum_mu d_mu(i) d_mu(j)` of the composed diagonal
/// channels, built from the Kraus diagonals directly.
pub fn oracle_factor(i: usize, j: usize, ga: f64, gb: f64, gc: f64) -> f64 {
    let loc = |g: f64, x: usize, y: usize| -> f64 {
        local_diagonals(g).iter().map(|d| d[x] * d[y]).sum()
    };
    let col: f64 = collective_diagonals(gc).iter().map(|d| d[i] * d[j]).sum();
    loc(ga, i / 3, j / 3) * loc(gb, i % 3, j % 3) * col
}

pub fn oracle_evolve(m: &CMatrix, ga: f64, gb: f64, gc: f64) -> CMatrix {
    CMatrix::from_fn(9, 9, |i, j| m[(i, j)] * oracle_factor(i, j, ga, gb, gc))
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}
