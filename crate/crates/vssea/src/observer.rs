//! Disturbance observer estimating the model's disturbance vector together
//! with its first two time derivatives.
//!
//! The observer tracks three stacked auxiliary vectors whose error dynamics
//! are a block-companion linear system; each channel behaves like a cubic
//! with characteristic polynomial `s^3 + g0 s^2 + g1 s + g2`. Disturbances
//! that are at most quadratic in time are recovered exactly in steady state;
//! faster ones are attenuated by the observer bandwidth.

use crate::numkit::Matrix;
use thiserror::Error;

/// Observer design/configuration errors.
#[derive(Debug, Clone, Error)]
pub enum ObserverError {
    #[error("observer bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("gains (g0={g0}, g1={g1}, g2={g2}) do not give stable error dynamics")]
    UnstableGains { g0: f64, g1: f64, g2: f64 },
    #[error("input matrix must be a single column, got {rows}x{cols}")]
    NotAColumn { rows: usize, cols: usize },
    #[error("state matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Observer gains; per-channel error dynamics `s^3 + g0 s^2 + g1 s + g2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobGains {
    /// 1/s.
    pub g0: f64,
    /// 1/s^2.
    pub g1: f64,
    /// 1/s^3.
    pub g2: f64,
}

impl DobGains {
    /// Cubic stability test: all coefficients positive and `g0 g1 > g2`.
    pub fn is_stable(&self) -> bool {
        self.g0 > 0.0 && self.g1 > 0.0 && self.g2 > 0.0 && self.g0 * self.g1 > self.g2
    }

    /// Per-channel characteristic polynomial, ascending coefficients.
    pub fn char_poly(&self) -> crate::numkit::Polynomial {
        crate::numkit::Polynomial::new(&[self.g2, self.g1, self.g0, 1.0])
    }
}

/// Triple-pole gain design at bandwidth `omega`:
/// `(s + omega)^3` gives `g0 = 3w, g1 = 3w^2, g2 = w^3`.
pub fn design_gains(omega: f64) -> Result<DobGains, ObserverError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ObserverError::NonPositiveBandwidth(omega));
    }
    Ok(DobGains { g0: 3.0 * omega, g1: 3.0 * omega * omega, g2: omega * omega * omega })
}

/// Auxiliary observer state: three stacked n-vectors (12 entries for the
/// 4-state plant).
pub type DobState = Vec<f64>;

/// Extracted estimates of the disturbance vector and its derivatives,
/// in acceleration-channel units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceEstimate {
    /// Disturbance vector estimate.
    pub d: [f64; 4],
    /// First-derivative estimate.
    pub d_dot: [f64; 4],
    /// Second-derivative estimate.
    pub d_ddot: [f64; 4],
}

/// Constant matrices of the auxiliary-state dynamics
/// `da/dt = Lambda_a a + Lambda_u u + Lambda_x x`.
#[derive(Debug, Clone)]
pub struct ObserverMatrices {
    /// Channel count n (state dimension of the observed plant).
    pub n: usize,
    /// 3n x 3n block-companion dynamics matrix.
    pub lambda_a: Matrix,
    /// 3n x 1 input coupling.
    pub lambda_u: Matrix,
    /// 3n x n state coupling.
    pub lambda_x: Matrix,
}

/// Builds the auxiliary-dynamics matrices for the plant `dx/dt = Ax + Bu - D`:
///
/// `Lambda_a = [[-g0 I, I, 0], [-g1 I, 0, I], [-g2 I, 0, 0]]`,
/// `Lambda_u = [g0 B; g1 B; g2 B]`,
/// `Lambda_x = [g0(A + g0 I) - g1 I; g1(A + g0 I) - g2 I; g2(A + g0 I)]`.
pub fn observer_matrices(
    a: &Matrix,
    b: &Matrix,
    gains: &DobGains,
) -> Result<ObserverMatrices, ObserverError> {
    if !gains.is_stable() {
        return Err(ObserverError::UnstableGains { g0: gains.g0, g1: gains.g1, g2: gains.g2 });
    }
    if a.rows() != a.cols() {
        return Err(ObserverError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if b.cols() != 1 || b.rows() != a.rows() {
        return Err(ObserverError::NotAColumn { rows: b.rows(), cols: b.cols() });
    }
    let n = a.rows();
    let eye = Matrix::identity(n);
    let (g0, g1, g2) = (gains.g0, gains.g1, gains.g2);

    let mut lambda_a = Matrix::zeros(3 * n, 3 * n);
    lambda_a.set_block(0, 0, &eye.scale(-g0));
    lambda_a.set_block(0, n, &eye);
    lambda_a.set_block(n, 0, &eye.scale(-g1));
    lambda_a.set_block(n, 2 * n, &eye);
    lambda_a.set_block(2 * n, 0, &eye.scale(-g2));

    let mut lambda_u = Matrix::zeros(3 * n, 1);
    lambda_u.set_block(0, 0, &b.scale(g0));
    lambda_u.set_block(n, 0, &b.scale(g1));
    lambda_u.set_block(2 * n, 0, &b.scale(g2));

    let shifted = a.add(&eye.scale(g0));
    let mut lambda_x = Matrix::zeros(3 * n, n);
    lambda_x.set_block(0, 0, &shifted.scale(g0).sub(&eye.scale(g1)));
    lambda_x.set_block(n, 0, &shifted.scale(g1).sub(&eye.scale(g2)));
    lambda_x.set_block(2 * n, 0, &shifted.scale(g2));

    Ok(ObserverMatrices { n, lambda_a, lambda_u, lambda_x })
}

/// Auxiliary-state derivative `Lambda_a a + Lambda_u u + Lambda_x x`,
/// written into `out` (length 3n) without allocating.
pub fn observer_deriv_into(
    m: &ObserverMatrices,
    a_hat: &[f64],
    u: f64,
    x: &[f64],
    out: &mut [f64],
) {
    m.lambda_a.mul_vec_into(a_hat, out);
    for (i, slot) in out.iter_mut().enumerate() {
        *slot += m.lambda_u[(i, 0)] * u;
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += m.lambda_x[(i, j)] * xj;
        }
        *slot += acc;
    }
}

/// Allocating wrapper around [`observer_deriv_into`].
pub fn observer_deriv(m: &ObserverMatrices, a_hat: &[f64], u: f64, x: &[f64]) -> DobState {
    let mut out = vec![0.0; 3 * m.n];
    observer_deriv_into(m, a_hat, u, x, &mut out);
    out
}

/// Recovers the disturbance estimates from the auxiliary state:
/// `D_hat = a0 - g0 x`, `D_dot_hat = a1 - g1 x`, `D_ddot_hat = a2 - g2 x`.
/// With `projection` on, channels 0 and 2 are forced to zero — the
/// disturbance vector of the two-inertia model only ever populates the
/// acceleration channels 1 and 3, and projecting keeps observer transients
/// out of the position channels.
pub fn extract_estimates(
    a_hat: &[f64],
    x: &[f64],
    gains: &DobGains,
    projection: bool,
) -> DisturbanceEstimate {
    assert_eq!(x.len(), 4, "estimate extraction expects the 4-state plant");
    assert_eq!(a_hat.len(), 12, "auxiliary state must hold three stacked 4-vectors");
    let mut est = DisturbanceEstimate::default();
    for i in 0..4 {
        est.d[i] = a_hat[i] - gains.g0 * x[i];
        est.d_dot[i] = a_hat[4 + i] - gains.g1 * x[i];
        est.d_ddot[i] = a_hat[8 + i] - gains.g2 * x[i];
    }
    if projection {
        for channel in [0usize, 2] {
            est.d[channel] = 0.0;
            est.d_dot[channel] = 0.0;
            est.d_ddot[channel] = 0.0;
        }
    }
    est
}

/// Builds the auxiliary state that corresponds to exactly known disturbance
/// values: `a0 = D + g0 x`, `a1 = D_dot + g1 x`, `a2 = D_ddot + g2 x`.
/// Inverse of [`extract_estimates`]; used to seed or oracle-test observers.
pub fn auxiliary_from_truth(
    d: &[f64; 4],
    d_dot: &[f64; 4],
    d_ddot: &[f64; 4],
    x: &[f64],
    gains: &DobGains,
) -> DobState {
    assert_eq!(x.len(), 4);
    let mut a = vec![0.0; 12];
    for i in 0..4 {
        a[i] = d[i] + gains.g0 * x[i];
        a[4 + i] = d_dot[i] + gains.g1 * x[i];
        a[8 + i] = d_ddot[i] + gains.g2 * x[i];
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{rk4_step, routh_hurwitz, Lu};
    use crate::plant::{linear_matrices, PlantParams};
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn gain_design_hand_values() {
        let g = design_gains(10.0).unwrap();
        assert_eq!((g.g0, g.g1, g.g2), (30.0, 300.0, 1000.0));
        let g = design_gains(1.0).unwrap();
        assert_eq!((g.g0, g.g1, g.g2), (3.0, 3.0, 1.0));
        assert!(design_gains(0.0).is_err());
        assert!(design_gains(-5.0).is_err());
    }

    #[test]
    fn designed_gains_are_always_stable() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let omega = rng.gen_range(0.01..500.0);
            let g = design_gains(omega).unwrap();
            assert!(g.is_stable(), "omega={omega}");
            assert!(routh_hurwitz(&g.char_poly()).unwrap());
        }
    }

    #[test]
    fn stability_test_rejects_bad_gains() {
        // g0*g1 = g2 exactly: marginal, not stable.
        assert!(!DobGains { g0: 1.0, g1: 1.0, g2: 1.0 }.is_stable());
        assert!(!DobGains { g0: -3.0, g1: 3.0, g2: 1.0 }.is_stable());
        assert!(DobGains { g0: 6.0, g1: 11.0, g2: 6.0 }.is_stable());
    }

    fn default_setup(omega: f64) -> (Matrix, Matrix, DobGains, ObserverMatrices) {
        let (a, b) = linear_matrices(&PlantParams::default());
        let gains = design_gains(omega).unwrap();
        let m = observer_matrices(&a, &b, &gains).unwrap();
        (a, b, gains, m)
    }

    #[test]
    fn matrices_block_structure() {
        let (a, b, gains, m) = default_setup(10.0);
        assert_eq!(m.lambda_a.rows(), 12);
        assert_eq!(m.lambda_u.cols(), 1);
        assert_eq!(m.lambda_x.cols(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let eye = if i == j { 1.0 } else { 0.0 };
                // First block row: [-g0 I, I, 0].
                assert_eq!(m.lambda_a[(i, j)], -gains.g0 * eye);
                assert_eq!(m.lambda_a[(i, 4 + j)], eye);
                assert_eq!(m.lambda_a[(i, 8 + j)], 0.0);
                // Second block row: [-g1 I, 0, I].
                assert_eq!(m.lambda_a[(4 + i, j)], -gains.g1 * eye);
                assert_eq!(m.lambda_a[(4 + i, 4 + j)], 0.0);
                assert_eq!(m.lambda_a[(4 + i, 8 + j)], eye);
                // Third block row: [-g2 I, 0, 0].
                assert_eq!(m.lambda_a[(8 + i, j)], -gains.g2 * eye);
                assert_eq!(m.lambda_a[(8 + i, 4 + j)], 0.0);
                assert_eq!(m.lambda_a[(8 + i, 8 + j)], 0.0);
                // State coupling rows.
                let shifted = a[(i, j)] + gains.g0 * eye;
                assert!((m.lambda_x[(i, j)] - (gains.g0 * shifted - gains.g1 * eye)).abs() < 1e-12);
                assert!(
                    (m.lambda_x[(4 + i, j)] - (gains.g1 * shifted - gains.g2 * eye)).abs() < 1e-12
                );
                assert!((m.lambda_x[(8 + i, j)] - gains.g2 * shifted).abs() < 1e-12);
            }
            assert_eq!(m.lambda_u[(i, 0)], gains.g0 * b[(i, 0)]);
            assert_eq!(m.lambda_u[(4 + i, 0)], gains.g1 * b[(i, 0)]);
            assert_eq!(m.lambda_u[(8 + i, 0)], gains.g2 * b[(i, 0)]);
        }
    }

    #[test]
    fn matrices_reject_unstable_gains() {
        let (a, b) = linear_matrices(&PlantParams::default());
        let bad = DobGains { g0: 1.0, g1: 1.0, g2: 2.0 };
        assert!(matches!(
            observer_matrices(&a, &b, &bad),
            Err(ObserverError::UnstableGains { .. })
        ));
    }

    #[test]
    fn dynamics_spectrum_is_the_channel_cubic_to_the_fourth() {
        // det(lambda I - Lambda_a) sampled at several points must equal
        // (lambda^3 + g0 lambda^2 + g1 lambda + g2)^4.
        let (a, b) = linear_matrices(&PlantParams::default());
        let gain_sets = [
            DobGains { g0: 3.0, g1: 3.0, g2: 1.0 },
            design_gains(10.0).unwrap(),
            DobGains { g0: 6.0, g1: 11.0, g2: 6.0 },
        ];
        for gains in gain_sets {
            let m = observer_matrices(&a, &b, &gains).unwrap();
            for lambda in [0.5, -0.25, 1.3, 2.0] {
                let shifted = Matrix::identity(12).scale(lambda).sub(&m.lambda_a);
                let det = Lu::factor(&shifted, "spectrum sample").unwrap().det();
                let cubic = lambda * lambda * lambda
                    + gains.g0 * lambda * lambda
                    + gains.g1 * lambda
                    + gains.g2;
                let expected = cubic.powi(4);
                assert!(
                    (det - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                    "gains {gains:?} lambda {lambda}: det {det} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn deriv_of_zero_state_is_zero() {
        let (_, _, _, m) = default_setup(10.0);
        let d = observer_deriv(&m, &[0.0; 12], 0.0, &[0.0; 4]);
        assert!(d.iter().all(|v| *v == 0.0));
    }

    /// Quadratic-in-time analytic scene: x(t) polynomial of degree two,
    /// u(t) linear, and the disturbance defined as D = Ax + Bu - dx/dt so
    /// the plant equation holds identically and D has zero third derivative.
    struct PolyScene {
        a: Matrix,
        b: Matrix,
        c0: [f64; 4],
        c1: [f64; 4],
        c2: [f64; 4],
        u0: f64,
        u1: f64,
    }

    impl PolyScene {
        fn new(a: Matrix, b: Matrix, seed: u64) -> Self {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || {
                let mut v = [0.0; 4];
                for slot in &mut v {
                    *slot = rng.gen_range(-1.0..1.0);
                }
                v
            };
            let (c0, c1, c2) = (draw(), draw(), draw());
            PolyScene { a, b, c0, c1, c2, u0: 0.3, u1: -0.4 }
        }

        fn x(&self, t: f64) -> [f64; 4] {
            let mut v = [0.0; 4];
            for i in 0..4 {
                v[i] = self.c0[i] + self.c1[i] * t + self.c2[i] * t * t;
            }
            v
        }

        fn u(&self, t: f64) -> f64 {
            self.u0 + self.u1 * t
        }

        /// D and its first two derivatives from D = Ax + Bu - dx/dt.
        fn d(&self, t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
            let x = self.x(t);
            let mut dx = [0.0; 4];
            let mut ddx = [0.0; 4];
            for i in 0..4 {
                dx[i] = self.c1[i] + 2.0 * self.c2[i] * t;
                ddx[i] = 2.0 * self.c2[i];
            }
            let ax = self.a.mul_vec(&x);
            let adx = self.a.mul_vec(&dx);
            let addx = self.a.mul_vec(&ddx);
            let mut d = [0.0; 4];
            let mut d_dot = [0.0; 4];
            let mut d_ddot = [0.0; 4];
            for i in 0..4 {
                d[i] = ax[i] + self.b[(i, 0)] * self.u(t) - dx[i];
                d_dot[i] = adx[i] + self.b[(i, 0)] * self.u1 - ddx[i];
                d_ddot[i] = addx[i];
            }
            (d, d_dot, d_ddot)
        }

        fn truth_aux(&self, t: f64, gains: &DobGains) -> Vec<f64> {
            let (d, d_dot, d_ddot) = self.d(t);
            auxiliary_from_truth(&d, &d_dot, &d_ddot, &self.x(t), gains)
        }
    }

    #[test]
    fn deriv_is_exact_on_quadratic_disturbances() {
        // With the auxiliary state set to its exact value, the model
        // derivative must equal the analytic time derivative of that value.
        let (a, b) = linear_matrices(&PlantParams::default());
        let gains = design_gains(5.0).unwrap();
        let m = observer_matrices(&a, &b, &gains).unwrap();
        let scene = PolyScene::new(a, b, 41);
        let t = 0.7;
        let aux = scene.truth_aux(t, &gains);
        let got = observer_deriv(&m, &aux, scene.u(t), &scene.x(t));
        let h = 1e-6;
        let plus = scene.truth_aux(t + h, &gains);
        let minus = scene.truth_aux(t - h, &gains);
        for i in 0..12 {
            // truth_aux is quadratic in t, so the central difference is exact
            // up to rounding.
            let analytic = (plus[i] - minus[i]) / (2.0 * h);
            assert!((got[i] - analytic).abs() < 1e-7, "row {i}: {} vs {analytic}", got[i]);
        }
    }

    #[test]
    fn estimation_error_follows_its_own_linear_dynamics() {
        // Route one: integrate the observer against the analytic scene and
        // subtract the exact auxiliary value. Route two: integrate
        // de/dt = Lambda_a e from the initial error. The two must agree.
        let (a, b) = linear_matrices(&PlantParams::default());
        let gains = design_gains(5.0).unwrap();
        let m = observer_matrices(&a, &b, &gains).unwrap();
        let scene = PolyScene::new(a, b, 42);
        let h = 1e-4;
        let steps = 4000;
        let mut aux = vec![0.0; 12];
        let mut err: Vec<f64> = scene
            .truth_aux(0.0, &gains)
            .iter()
            .map(|truth| -truth)
            .collect();
        let mut f_obs = |t: f64, y: &[f64], dy: &mut [f64]| {
            observer_deriv_into(&m, y, scene.u(t), &scene.x(t), dy);
        };
        let mut f_err = |_t: f64, y: &[f64], dy: &mut [f64]| {
            m.lambda_a.mul_vec_into(y, dy);
        };
        for step in 0..steps {
            let t = step as f64 * h;
            aux = rk4_step(&mut f_obs, t, &aux, h).unwrap();
            err = rk4_step(&mut f_err, t, &err, h).unwrap();
        }
        let t_end = steps as f64 * h;
        let truth = scene.truth_aux(t_end, &gains);
        for i in 0..12 {
            let via_observer = aux[i] - truth[i];
            assert!(
                (via_observer - err[i]).abs() < 1e-10,
                "row {i}: {via_observer} vs {}",
                err[i]
            );
        }
    }

    #[test]
    fn extraction_is_the_algebraic_inverse() {
        let gains = design_gains(7.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let mut draw = || {
            let mut v = [0.0; 4];
            for slot in &mut v {
                *slot = rng.gen_range(-2.0..2.0);
            }
            v
        };
        let (d, d_dot, d_ddot) = (draw(), draw(), draw());
        let x = draw();
        let aux = auxiliary_from_truth(&d, &d_dot, &d_ddot, &x, &gains);
        let est = extract_estimates(&aux, &x, &gains, false);
        for i in 0..4 {
            assert!((est.d[i] - d[i]).abs() < 1e-12);
            assert!((est.d_dot[i] - d_dot[i]).abs() < 1e-12);
            assert!((est.d_ddot[i] - d_ddot[i]).abs() < 1e-12);
        }
        // Projection zeroes the position channels regardless of content.
        let projected = extract_estimates(&aux, &x, &gains, true);
        assert_eq!(projected.d[0], 0.0);
        assert_eq!(projected.d[2], 0.0);
        assert_eq!(projected.d_dot[0], 0.0);
        assert_eq!(projected.d_ddot[2], 0.0);
        assert_eq!(projected.d[1], est.d[1]);
        assert_eq!(projected.d[3], est.d[3]);
    }

    #[test]
    fn zero_everything_gives_zero_estimate() {
        let gains = design_gains(3.0).unwrap();
        let est = extract_estimates(&[0.0; 12], &[0.0; 4], &gains, false);
        assert_eq!(est, DisturbanceEstimate::default());
    }

    #[test]
    fn constant_disturbance_converges_within_the_bandwidth_timescale() {
        // Plant driven by a constant disturbance, observer from zero:
        // after t = 1 s at 20 rad/s bandwidth the channel errors are below
        // 1e-6 of the true values.
        let p = PlantParams::default();
        let (a, b) = linear_matrices(&p);
        let gains = design_gains(20.0).unwrap();
        let m = observer_matrices(&a, &b, &gains).unwrap();
        let d_true = [0.0, 0.7, 0.0, -0.3];
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let (x, aux) = y.split_at(4);
            let (dx, daux) = dy.split_at_mut(4);
            let ax = a.mul_vec(x);
            for i in 0..4 {
                dx[i] = ax[i] - d_true[i];
            }
            observer_deriv_into(&m, aux, 0.0, x, daux);
        };
        let h = 1e-4;
        let mut y = vec![0.0; 16];
        for step in 0..10_000 {
            y = rk4_step(&mut f, step as f64 * h, &y, h).unwrap();
        }
        let est = extract_estimates(&y[4..], &y[..4], &gains, true);
        for i in [1usize, 3] {
            let rel = (est.d[i] - d_true[i]).abs() / d_true[i].abs();
            assert!(rel < 1e-6, "channel {i}: relative error {rel}");
            // Derivative estimates settle to zero for a constant disturbance.
            assert!(est.d_dot[i].abs() < 1e-5, "channel {i} rate: {}", est.d_dot[i]);
        }
        assert_eq!(est.d[0], 0.0);
        assert_eq!(est.d[2], 0.0);
    }
}
