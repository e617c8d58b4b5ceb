//! Stochastic oracle for the dephasing channels.
//!
//! Each trajectory draws classical Gaussian phases and applies the diagonal
//! unitary `U = diag(exp(-i theta_k))`; the ensemble mean of `U rho U^dagger`
//! converges to the analytic channel.
//!
//! Phase model:
//! * local: qutrit X in level `+1` picks up `phi_{X,+}`, level `-1` picks up
//!   `phi_{X,-}`, ground picks up nothing. The four phases are independent
//!   with variance `Gamma1 t`, so ground/excited coherences decay as `gamma`
//!   and `+1/-1` coherences as `gamma^2`.
//! * collective: joint state k picks up `c_k phi_C` with
//!   `c = (0,1,1,1,2,1,1,1,2)` and `Var phi_C = Gamma2 t`, giving factors
//!   `exp(-(c_i - c_j)^2 Gamma2 t / 2)`, i.e. 1, `gamma` or `gamma^4`.
//!
//! White-noise phase at a fixed time is Gaussian, so phases are drawn in one
//! shot. [`NoiseModel::sample_phases_stepped`] accumulates Euler increments
//! instead and exists as a cross-check.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{collective_charge, evolve, ChannelSpec, NoiseSource};
use crate::error::{Error, Result};
use crate::linalg::{BasisLabel, CMatrix, DensityMatrix, Level, C64, DIM};

/// Entries with `|z|` above this are reported as disagreements.
pub const Z_THRESHOLD: f64 = 4.0;

/// Trajectories per work unit. Fixed so the reduction order never depends on
/// the thread count.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Phase variance rate of each local excited level on qutrit A.
    pub local_a: f64,
    pub local_b: f64,
    /// Variance rate of the shared collective phase.
    pub collective: f64,
}

impl NoiseModel {
    pub fn from_spec(spec: &ChannelSpec) -> Self {
        NoiseModel {
            local_a: spec.rate(NoiseSource::ALocal),
            local_b: spec.rate(NoiseSource::BLocal),
            collective: spec.rate(NoiseSource::Collective),
        }
    }

    fn assemble(&self, [a_plus, a_minus, b_plus, b_minus, coll]: [f64; 5]) -> [f64; DIM] {
        let local = |l: Level, plus: f64, minus: f64| match l {
            Level::Ground => 0.0,
            Level::Plus => plus,
            Level::Minus => minus,
        };
        let mut theta = [0.0; DIM];
        for (k, th) in theta.iter_mut().enumerate() {
            let label = BasisLabel::from_index(k).expect("joint index");
            *th = local(label.a, a_plus, a_minus)
                + local(label.b, b_plus, b_minus)
                + collective_charge(k) as f64 * coll;
        }
        theta
    }

    fn std_devs(&self, t: f64) -> [f64; 5] {
        let a = (self.local_a * t).sqrt();
        let b = (self.local_b * t).sqrt();
        [a, a, b, b, (self.collective * t).sqrt()]
    }

    /// The five underlying phases `(phi_A+, phi_A-, phi_B+, phi_B-, phi_C)`.
    pub fn sample_raw_phases<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> [f64; 5] {
        let sd = self.std_devs(t);
        let mut phi = [0.0; 5];
        for (p, s) in phi.iter_mut().zip(sd) {
            let z: f64 = rng.sample(StandardNormal);
            *p = s * z;
        }
        phi
    }

    /// Phase `theta_k` of every joint basis state at time `t`.
    pub fn sample_phases<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> [f64; DIM] {
        self.assemble(self.sample_raw_phases(t, rng))
    }

    /// Same distribution as [`Self::sample_phases`], built from `steps` Euler
    /// increments of the underlying white noise.
    pub fn sample_phases_stepped<R: Rng + ?Sized>(&self, t: f64, steps: usize, rng: &mut R) -> [f64; DIM] {
        let steps = steps.max(1);
        let dt = t / steps as f64;
        let sd = self.std_devs(dt);
        let mut phi = [0.0; 5];
        for _ in 0..steps {
            for (p, s) in phi.iter_mut().zip(sd) {
                let z: f64 = rng.sample(StandardNormal);
                *p += s * z;
            }
        }
        self.assemble(phi)
    }

    /// Diagonal unitary for one noise realization.
    pub fn sample_unitary<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> CMatrix {
        let theta = self.sample_phases(t, rng);
        let mut u = CMatrix::zeros(DIM, DIM);
        for (k, th) in theta.iter().enumerate() {
            u[(k, k)] = C64::from_polar(1.0, -th);
        }
        u
    }
}

/// RNG of trajectory `index` in a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsembleResult {
    pub mean_rho: DensityMatrix,
    pub n_trajectories: usize,
    /// Standard error of each complex entry, `sqrt((var re + var im) / n)`.
    pub stderr: DMatrix<f64>,
    pub seed: u64,
}

#[derive(Clone)]
struct Moments {
    sum: [C64; DIM * DIM],
    sum_sq_re: [f64; DIM * DIM],
    sum_sq_im: [f64; DIM * DIM],
}

impl Moments {
    fn zero() -> Self {
        Moments {
            sum: [C64::default(); DIM * DIM],
            sum_sq_re: [0.0; DIM * DIM],
            sum_sq_im: [0.0; DIM * DIM],
        }
    }

    fn add_sample(&mut self, rho0: &CMatrix, theta: &[f64; DIM]) {
        let phase: Vec<C64> = theta.iter().map(|&th| C64::from_polar(1.0, -th)).collect();
        for i in 0..DIM {
            for j in 0..DIM {
                let z = rho0[(i, j)] * phase[i] * phase[j].conj();
                let idx = i * DIM + j;
                self.sum[idx] += z;
                self.sum_sq_re[idx] += z.re * z.re;
                self.sum_sq_im[idx] += z.im * z.im;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        for idx in 0..DIM * DIM {
            self.sum[idx] += other.sum[idx];
            self.sum_sq_re[idx] += other.sum_sq_re[idx];
            self.sum_sq_im[idx] += other.sum_sq_im[idx];
        }
    }
}

/// Ensemble mean of `U rho0 U^dagger` over `n` trajectories.
///
/// Trajectory `k` draws from [`trajectory_rng`]`(seed, k)` and partial sums
/// are merged in index order, so the result is bit-identical for a given
/// seed regardless of how many threads rayon uses.
pub fn ensemble_evolve(
    rho0: &DensityMatrix,
    model: &NoiseModel,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<TrajectoryEnsembleResult> {
    rho0.require_dim(DIM)?;
    if n == 0 {
        return Err(Error::domain("n_trajectories", 0.0, "[1, inf)"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain("t", t, "[0, inf)"));
    }
    let m0 = rho0.matrix();
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::zero();
            for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = trajectory_rng(seed, k as u64);
                let theta = model.sample_phases(t, &mut rng);
                acc.add_sample(m0, &theta);
            }
            acc
        })
        .collect();
    let mut total = Moments::zero();
    for p in &partials {
        total.merge(p);
    }

    let nf = n as f64;
    let mean = CMatrix::from_fn(DIM, DIM, |i, j| total.sum[i * DIM + j] / nf);
    let stderr = DMatrix::from_fn(DIM, DIM, |i, j| {
        if n < 2 {
            return 0.0;
        }
        let idx = i * DIM + j;
        let mu = mean[(i, j)];
        let var_re = ((total.sum_sq_re[idx] - nf * mu.re * mu.re) / (nf - 1.0)).max(0.0);
        let var_im = ((total.sum_sq_im[idx] - nf * mu.im * mu.im) / (nf - 1.0)).max(0.0);
        ((var_re + var_im) / nf).sqrt()
    });
    Ok(TrajectoryEnsembleResult {
        mean_rho: DensityMatrix::from_trusted(mean),
        n_trajectories: n,
        stderr,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDisagreement {
    /// 1-based row and column.
    pub row: usize,
    pub col: usize,
    pub deviation: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub t: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    pub max_abs_deviation: f64,
    pub max_z: f64,
    /// `|mc - analytic| / stderr`; zero where the deviation is at rounding
    /// level.
    pub z_scores: DMatrix<f64>,
    pub disagreements: Vec<EntryDisagreement>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Deviations at or below this count as an exact match.
const EXACT_TOL: f64 = 1e-12;

/// Monte Carlo ensemble against the analytic channel for the same rates.
pub fn oracle_compare(
    rho0: &DensityMatrix,
    spec: &ChannelSpec,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<OracleReport> {
    let analytic = evolve(rho0, spec, t)?;
    let mc = ensemble_evolve(rho0, &NoiseModel::from_spec(spec), t, n, seed)?;
    let mut z_scores = DMatrix::zeros(DIM, DIM);
    let mut disagreements = Vec::new();
    let mut max_dev = 0.0_f64;
    let mut max_z = 0.0_f64;
    for i in 0..DIM {
        for j in 0..DIM {
            let dev = (mc.mean_rho.get(i, j) - analytic.get(i, j)).norm();
            let se = mc.stderr[(i, j)];
            // populations never fluctuate; their summation error would
            // otherwise be divided by a rounding-level stderr
            let z = if dev <= EXACT_TOL {
                0.0
            } else if se > 0.0 {
                dev / se
            } else {
                f64::INFINITY
            };
            z_scores[(i, j)] = z;
            max_dev = max_dev.max(dev);
            max_z = max_z.max(z);
            if z > Z_THRESHOLD {
                disagreements.push(EntryDisagreement {
                    row: i + 1,
                    col: j + 1,
                    deviation: dev,
                    z,
                });
            }
        }
    }
    Ok(OracleReport {
        t,
        n_trajectories: n,
        seed,
        max_abs_deviation: max_dev,
        max_z,
        z_scores,
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, hermitian_deviation, projector, PureState9};

    fn max_entangled() -> DensityMatrix {
        let s = 1.0 / 3f64.sqrt();
        projector(&PureState9::superposition(&[(0, c(s, 0.0)), (4, c(s, 0.0)), (8, c(s, 0.0))]).unwrap())
    }

    #[test]
    fn zero_rates_give_identity() {
        let model = NoiseModel::from_spec(&ChannelSpec::full(0.0, 0.0));
        let mut rng = trajectory_rng(1, 0);
        let u = model.sample_unitary(3.0, &mut rng);
        assert_eq!(u, CMatrix::identity(DIM, DIM));
    }

    #[test]
    fn unitary_entries_have_unit_modulus() {
        let model = NoiseModel::from_spec(&ChannelSpec::full(1.0, 2.0));
        let mut rng = trajectory_rng(2, 0);
        let u = model.sample_unitary(1.5, &mut rng);
        for i in 0..DIM {
            for j in 0..DIM {
                if i == j {
                    assert!((u[(i, i)].norm() - 1.0).abs() < 1e-15);
                } else {
                    assert_eq!(u[(i, j)], C64::default());
                }
            }
        }
    }

    #[test]
    fn local_phase_variance_matches_rate() {
        // Var(phi_A+) = Gamma1 t = 1; the sample variance of 1e5 draws has
        // standard error sqrt(2 / (n - 1)) ~ 0.0045
        let model = NoiseModel::from_spec(&ChannelSpec::multi_local(1.0));
        let n = 100_000;
        let mut rng = trajectory_rng(3, 0);
        let draws: Vec<f64> = (0..n).map(|_| model.sample_raw_phases(1.0, &mut rng)[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sigma = (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 1.0).abs() < 3.0 * sigma, "var = {var}");
    }

    #[test]
    fn collective_phase_of_plus_plus_is_doubled() {
        let model = NoiseModel::from_spec(&ChannelSpec::collective(1.0));
        let mut rng = trajectory_rng(4, 0);
        let raw = model.sample_raw_phases(1.0, &mut trajectory_rng(4, 0));
        let theta = model.sample_phases(1.0, &mut rng);
        assert_eq!(theta[4], 2.0 * raw[4]);
        assert_eq!(theta[0], 0.0);
        assert_eq!(theta[1], raw[4]);
    }

    #[test]
    fn single_trajectory_at_zero_rate_is_exact() {
        let rho = max_entangled();
        let r = ensemble_evolve(&rho, &NoiseModel::from_spec(&ChannelSpec::none()), 1.0, 1, 9).unwrap();
        assert_eq!(r.mean_rho, rho);
        assert_eq!(r.n_trajectories, 1);
    }

    #[test]
    fn zero_trajectories_is_an_error() {
        let rho = max_entangled();
        assert!(ensemble_evolve(&rho, &NoiseModel::from_spec(&ChannelSpec::none()), 1.0, 0, 9).is_err());
    }

    #[test]
    fn robust_psi1_is_untouched_by_collective_noise_per_trajectory() {
        let s = PureState9::superposition(&[(1, c(0.6, 0.0)), (3, c(0.0, 0.8))]).unwrap();
        let rho = projector(&s);
        let r = ensemble_evolve(&rho, &NoiseModel::from_spec(&ChannelSpec::collective(2.0)), 3.0, 50, 5).unwrap();
        // every trajectory contributes exactly a2 a4^*; the mean of 50 equal
        // values can still differ in the last bit
        assert!((r.mean_rho.get(1, 3) - rho.get(1, 3)).norm() < 1e-15);
        assert!(r.stderr[(1, 3)] < 1e-15);
    }

    #[test]
    fn diagonal_is_preserved_and_mean_is_hermitian() {
        let mut rng = trajectory_rng(6, 0);
        let rho = projector(&PureState9::random(&mut rng));
        let r = ensemble_evolve(&rho, &NoiseModel::from_spec(&ChannelSpec::full(1.0, 1.0)), 1.0, 3000, 6).unwrap();
        for i in 0..DIM {
            assert!((r.mean_rho.get(i, i) - rho.get(i, i)).norm() < 1e-14);
        }
        assert!(hermitian_deviation(r.mean_rho.matrix()) < 1e-12);
        assert!((r.mean_rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let rho = max_entangled();
        let model = NoiseModel::from_spec(&ChannelSpec::full(0.5, 0.5));
        let a = ensemble_evolve(&rho, &model, 1.0, 5000, 42).unwrap();
        let b = ensemble_evolve(&rho, &model, 1.0, 5000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c1 = pool.install(|| ensemble_evolve(&rho, &model, 1.0, 5000, 42).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c1);
        let d = ensemble_evolve(&rho, &model, 1.0, 5000, 43).unwrap();
        assert_ne!(a.mean_rho, d.mean_rho);
    }

    #[test]
    fn stepped_phases_have_the_same_variance() {
        let model = NoiseModel::from_spec(&ChannelSpec::multi_local(1.0));
        let n = 20_000;
        let mut rng = trajectory_rng(8, 0);
        // theta_5 = phi_A+ + phi_B+, variance 2 Gamma1 t
        let draws: Vec<f64> = (0..n)
            .map(|_| model.sample_phases_stepped(0.5, 100, &mut rng)[4])
            .collect();
        let var = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let sigma = 1.0 * (2.0 / n as f64).sqrt();
        assert!((var - 1.0).abs() < 4.0 * sigma, "var = {var}");
    }

    #[test]
    fn oracle_with_zero_rates_is_exact() {
        let rho = max_entangled();
        let r = oracle_compare(&rho, &ChannelSpec::none(), 1.0, 100, 1).unwrap();
        assert!(r.max_abs_deviation < 1e-15);
        assert!(r.passed());
    }

    #[test]
    fn oracle_agrees_on_max_entangled_multilocal() {
        let rho = max_entangled();
        let r = oracle_compare(&rho, &ChannelSpec::multi_local(1.0), 1.0, 20_000, 17).unwrap();
        assert!(r.passed(), "{:?}", r.disagreements);
        assert!(r.max_abs_deviation < 0.02);
    }
}
