use nalgebra::{Matrix2, Matrix2x4, Matrix4, SymmetricEigen, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::imaging::Centroid;

const PSD_TOL: f64 = 1e-9;

/// Constant-velocity track of a point: state `(x, y, vx, vy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub estimate: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    /// White-noise acceleration spectral density.
    pub process_noise: f64,
    /// Per-axis measurement variance.
    pub measurement_noise: f64,
    /// Covariance multiplier applied on frames without a measurement.
    pub miss_inflation: f64,
}

impl KalmanState {
    /// Track starting at `at` with zero velocity. Position variance starts at
    /// the measurement variance, velocity variance at `velocity_variance`.
    pub fn new(at: Centroid, q: f64, r: f64, velocity_variance: f64) -> Self {
        Self {
            estimate: Vector4::new(at.cx, at.cy, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(r, r, velocity_variance, velocity_variance)),
            process_noise: q,
            measurement_noise: r,
            miss_inflation: 1.5,
        }
    }

    pub fn position(&self) -> Centroid {
        Centroid {
            cx: self.estimate[0],
            cy: self.estimate[1],
        }
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.estimate[2], self.estimate[3])
    }

    pub fn check_psd(&self) -> Result<()> {
        check_psd(&self.covariance)
    }
}

fn check_psd(p: &Matrix4<f64>) -> Result<()> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite covariance".into()));
    }
    let scale = p.amax().max(1.0);
    if (p - p.transpose()).amax() > PSD_TOL * scale {
        return Err(Error::NumericalFailure("covariance is not symmetric".into()));
    }
    let min_eig = SymmetricEigen::new(*p).eigenvalues.min();
    if min_eig < -PSD_TOL * scale {
        return Err(Error::NumericalFailure(format!(
            "covariance has negative eigenvalue {min_eig}"
        )));
    }
    Ok(())
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discretised white-noise acceleration, per axis
/// `q·[[dt⁴/4, dt³/2], [dt³/2, dt²]]`.
fn process_covariance(q: f64, dt: f64) -> Matrix4<f64> {
    let (a, b, c) = (dt.powi(4) / 4.0, dt.powi(3) / 2.0, dt * dt);
    let mut m = Matrix4::zeros();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        m[(p, p)] = a * q;
        m[(p, v)] = b * q;
        m[(v, p)] = b * q;
        m[(v, v)] = c * q;
    }
    m
}

/// One predict step of `dt` frames followed, when a measurement is present,
/// by a position update (Joseph form). Without a measurement the predicted
/// covariance is additionally scaled by `miss_inflation`.
pub fn kalman_predict_update(
    state: &KalmanState,
    measurement: Option<Centroid>,
    dt: f64,
) -> Result<KalmanState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("kalman dt must be > 0, got {dt}")));
    }
    let f = transition(dt);
    let mut next = state.clone();
    next.estimate = f * state.estimate;
    next.covariance = f * state.covariance * f.transpose()
        + process_covariance(state.process_noise, dt);

    match measurement {
        Some(z) => {
            let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
            let r = Matrix2::identity() * state.measurement_noise;
            let s = h * next.covariance * h.transpose() + r;
            let s_inv = s
                .try_inverse()
                .ok_or_else(|| Error::NumericalFailure("singular innovation covariance".into()))?;
            let gain = next.covariance * h.transpose() * s_inv;
            let innovation = Vector2::new(z.cx, z.cy) - h * next.estimate;
            next.estimate += gain * innovation;
            let i_kh = Matrix4::identity() - gain * h;
            next.covariance =
                i_kh * next.covariance * i_kh.transpose() + gain * r * gain.transpose();
        }
        None => next.covariance *= state.miss_inflation,
    }
    next.covariance = (next.covariance + next.covariance.transpose()) * 0.5;
    check_psd(&next.covariance)?;
    Ok(next)
}
