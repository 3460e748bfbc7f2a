//! Large-scale propagation: LOS air-to-ground path loss toward the UAV,
//! Hata-family path loss toward ground users, and spatially correlated
//! shadow fading sampled along the trajectory.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance3d, Point3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavChannelParams {
    /// Carrier frequency, GHz.
    pub fc_ghz: f64,
    /// UAV altitude, meters.
    pub h_uav: f64,
}

impl Default for UavChannelParams {
    fn default() -> Self {
        Self {
            fc_ghz: 1.5,
            h_uav: 100.0,
        }
    }
}

impl UavChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc_ghz > 0.0) {
            return Err(invalid("fc_ghz", "must be positive"));
        }
        if !(40.0..=300.0).contains(&self.h_uav) {
            return Err(invalid(
                "h_uav",
                format!("{} m is outside the LOS band [40, 300] m", self.h_uav),
            ));
        }
        Ok(())
    }

    /// Distance-dependence coefficient, never below free-space 20 dB/decade.
    pub fn slope(&self) -> f64 {
        (23.9 - 1.8 * self.h_uav.log10()).max(20.0)
    }
}

/// LOS path loss in dB between a ground site and the UAV, plus shadowing.
pub fn uav_path_loss(d: f64, p: &UavChannelParams, shadow_db: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    let frequency_term = 20.0 * (40.0 * std::f64::consts::PI * p.fc_ghz / 3.0).log10();
    Ok(p.slope() * d.log10() + frequency_term + shadow_db)
}

/// `A + B·log10(d_km) + C`, the Hata-family ground path loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GueChannelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h_gbs: f64,
    pub h_gue: f64,
}

impl Default for GueChannelParams {
    fn default() -> Self {
        Self::cost231_suburban(1500.0, 35.0, 1.5)
    }
}

impl GueChannelParams {
    /// COST231-Hata coefficients for a suburban / medium-city environment.
    pub fn cost231_suburban(fc_mhz: f64, h_gbs: f64, h_gue: f64) -> Self {
        let log_f = fc_mhz.log10();
        let log_hb = h_gbs.log10();
        let mobile_correction = (1.1 * log_f - 0.7) * h_gue - (1.56 * log_f - 0.8);
        Self {
            a: 46.3 + 33.9 * log_f - 13.82 * log_hb - mobile_correction,
            b: 44.9 - 6.55 * log_hb,
            c: 0.0,
            h_gbs,
            h_gue,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(invalid("gue_channel.b", "slope must be positive"));
        }
        if !(self.h_gbs >= 0.0 && self.h_gue >= 0.0) || self.h_gbs == self.h_gue {
            return Err(invalid("gue_channel heights", "must be non-negative and distinct"));
        }
        Ok(())
    }
}

/// Ground-user path loss in dB; `d` is in meters.
pub fn gue_path_loss(d: f64, p: &GueChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(p.a + p.b * (d / 1000.0).log10() + p.c)
}

/// Shadowing standard deviation in dB at altitude `h_uav`.
pub fn shadow_sigma(h_uav: f64) -> f64 {
    4.2 * (-0.0046 * h_uav).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowingParams {
    /// dB
    pub sigma: f64,
    /// Correlation at one decorrelation distance.
    pub rho: f64,
    /// Decorrelation distance, meters.
    pub x_c: f64,
}

impl ShadowingParams {
    pub fn for_altitude(h_uav: f64, rho: f64, x_c: f64) -> Self {
        Self {
            sigma: shadow_sigma(h_uav),
            rho,
            x_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma", "must be positive"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(invalid("rho", "must lie in (0, 1]"));
        }
        if !(self.x_c > 0.0) {
            return Err(invalid("decorrelation_distance", "must be positive"));
        }
        Ok(())
    }

    /// `σ²·ρ^(Δ/X_c)`
    pub fn autocorrelation(&self, separation: f64) -> f64 {
        self.sigma * self.sigma * self.rho.powf(separation / self.x_c)
    }
}

pub fn correlation_matrix(waypoints: &[Point3], p: &ShadowingParams) -> DMatrix<f64> {
    let n = waypoints.len();
    DMatrix::from_fn(n, n, |i, j| p.autocorrelation(distance3d(&waypoints[i], &waypoints[j])))
}

const JITTER: f64 = 1e-10;

/// Lower Cholesky factor of the trajectory covariance, jittered when the
/// plain factorization fails.
pub fn shadowing_factor(waypoints: &[Point3], p: &ShadowingParams) -> Result<DMatrix<f64>> {
    let r = correlation_matrix(waypoints, p);
    if let Some(chol) = r.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let n = r.nrows();
    (r + DMatrix::identity(n, n) * JITTER)
        .cholesky()
        .map(|c| c.unpack())
        .ok_or(Error::Factorization)
}

/// Shadowing in dB for every (GBS, waypoint) pair along one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowField {
    n_gbs: usize,
    n_waypoints: usize,
    // waypoint-major
    values: Vec<f64>,
}

impl ShadowField {
    pub fn zeros(n_gbs: usize, n_waypoints: usize) -> Self {
        Self {
            n_gbs,
            n_waypoints,
            values: vec![0.0; n_gbs * n_waypoints],
        }
    }

    /// Builds a field from one row of `n_waypoints` values per GBS.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_gbs = rows.len();
        let n_waypoints = rows.first().map_or(0, Vec::len);
        let mut field = Self::zeros(n_gbs, n_waypoints);
        for (m, row) in rows.iter().enumerate() {
            if row.len() != n_waypoints {
                return Err(Error::LengthMismatch {
                    expected: n_waypoints,
                    actual: row.len(),
                });
            }
            for (s, v) in row.iter().enumerate() {
                field.values[s * n_gbs + m] = *v;
            }
        }
        Ok(field)
    }

    pub fn n_gbs(&self) -> usize {
        self.n_gbs
    }

    pub fn n_waypoints(&self) -> usize {
        self.n_waypoints
    }

    pub fn get(&self, gbs: usize, waypoint: usize) -> f64 {
        self.values[waypoint * self.n_gbs + gbs]
    }

    /// Shadowing of every GBS at one waypoint.
    pub fn at_waypoint(&self, waypoint: usize) -> &[f64] {
        &self.values[waypoint * self.n_gbs..(waypoint + 1) * self.n_gbs]
    }

    pub fn row(&self, gbs: usize) -> Vec<f64> {
        (0..self.n_waypoints).map(|s| self.get(gbs, s)).collect()
    }
}

/// Draws one independent correlated process per GBS, all sharing the
/// same Cholesky factor.
pub fn sample_correlated_shadowing<R: Rng + ?Sized>(
    waypoints: &[Point3],
    p: &ShadowingParams,
    n_gbs: usize,
    rng: &mut R,
) -> Result<ShadowField> {
    p.validate()?;
    let factor = shadowing_factor(waypoints, p)?;
    Ok(sample_with_factor(&factor, n_gbs, rng))
}

pub fn sample_with_factor<R: Rng + ?Sized>(factor: &DMatrix<f64>, n_gbs: usize, rng: &mut R) -> ShadowField {
    let n = factor.nrows();
    let mut field = ShadowField::zeros(n_gbs, n);
    for m in 0..n_gbs {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = factor * z;
        for (s, v) in x.iter().enumerate() {
            field.values[s * n_gbs + m] = *v;
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize, spacing: f64) -> Vec<Point3> {
        (0..n).map(|i| Point3::new(i as f64 * spacing, 0.0, 100.0)).collect()
    }

    #[test]
    fn uav_path_loss_examples() {
        let p = UavChannelParams::default();
        let by_hand = 20.3 * 3.0 + 20.0 * (20.0 * std::f64::consts::PI).log10();
        let pl = uav_path_loss(1000.0, &p, 0.0).unwrap();
        assert_abs_diff_eq!(pl, by_hand, epsilon = 1e-9);
        assert_abs_diff_eq!(pl, 96.864, epsilon = 1e-3);
        assert_abs_diff_eq!(uav_path_loss(1.0, &p, 0.0).unwrap(), 35.964, epsilon = 1e-3);
        assert_abs_diff_eq!(uav_path_loss(1000.0, &p, 3.0).unwrap(), pl + 3.0, epsilon = 1e-12);

        let high = UavChannelParams { h_uav: 300.0, ..p };
        assert!(23.9 - 1.8 * 300f64.log10() < 20.0);
        assert_eq!(high.slope(), 20.0);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let p = UavChannelParams::default();
        assert!(matches!(
            uav_path_loss(0.0, &p, 0.0),
            Err(Error::NonPositiveDistance(_))
        ));
        assert!(uav_path_loss(-1.0, &p, 0.0).is_err());
        assert!(gue_path_loss(0.0, &GueChannelParams::default()).is_err());
    }

    #[test]
    fn uav_params_validation() {
        assert!(UavChannelParams::default().validate().is_ok());
        assert!(UavChannelParams {
            h_uav: 30.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(UavChannelParams {
            h_uav: 301.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(UavChannelParams {
            fc_ghz: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cost231_defaults() {
        // independent evaluation of the published COST231-Hata expression at 1 km
        let f: f64 = 1500.0;
        let (hb, hm): (f64, f64) = (35.0, 1.5);
        let a_hm = (1.1 * f.log10() - 0.7) * hm - (1.56 * f.log10() - 0.8);
        let at_1km = 46.3 + 33.9 * f.log10() - 13.82 * hb.log10() - a_hm;

        let p = GueChannelParams::default();
        assert_abs_diff_eq!(gue_path_loss(1000.0, &p).unwrap(), at_1km, epsilon = 1e-9);
        assert_abs_diff_eq!(gue_path_loss(1000.0, &p).unwrap(), 132.59, epsilon = 5e-3);
        assert_abs_diff_eq!(p.b, 34.79, epsilon = 5e-3);
        assert_abs_diff_eq!(gue_path_loss(100.0, &p).unwrap(), 97.80, epsilon = 1e-2);

        let flat = GueChannelParams {
            b: 0.0,
            c: 2.0,
            ..p.clone()
        };
        for d in [10.0, 500.0, 4000.0] {
            assert_eq!(gue_path_loss(d, &flat).unwrap(), flat.a + 2.0);
        }
        assert!(flat.validate().is_err());
        assert!(p.validate().is_ok());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(shadow_sigma(0.0), 4.2);
        assert_abs_diff_eq!(shadow_sigma(100.0), 2.6514, epsilon = 1e-4);
        assert_abs_diff_eq!(shadow_sigma(300.0), 4.2 * (-1.38f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(shadow_sigma(300.0), 1.0566, epsilon = 1e-4);
    }

    #[test]
    fn correlation_examples() {
        let p = ShadowingParams {
            sigma: 1.0,
            rho: 0.82,
            x_c: 100.0,
        };
        let r = correlation_matrix(&line(3, 100.0), &p);
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(0, 1)], 0.82);
        assert_abs_diff_eq!(r[(0, 2)], 0.6724, epsilon = 1e-12);

        let p2 = ShadowingParams { sigma: 2.0, ..p };
        assert_eq!(correlation_matrix(&line(2, 50.0), &p2)[(1, 1)], 4.0);
    }

    #[test]
    fn single_waypoint_draws_scalar_gaussian() {
        let p = ShadowingParams {
            sigma: 2.5,
            rho: 0.82,
            x_c: 100.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = sample_correlated_shadowing(&line(1, 1.0), &p, 4000, &mut rng).unwrap();
        assert_eq!(f.n_waypoints(), 1);
        let xs = f.at_waypoint(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        // 3 standard errors
        assert!(mean.abs() < 3.0 * 2.5 / (4000f64).sqrt());
        assert!((var - 6.25).abs() < 3.0 * 6.25 * (2.0 / 3999.0f64).sqrt());
    }

    #[test]
    fn perfect_correlation_gives_constant_rows() {
        let p = ShadowingParams {
            sigma: 1.0,
            rho: 1.0,
            x_c: 100.0,
        };
        let pts = vec![Point3::new(5.0, 5.0, 100.0); 6];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = sample_correlated_shadowing(&pts, &p, 3, &mut rng).unwrap();
        for m in 0..3 {
            let row = f.row(m);
            for v in &row {
                assert_abs_diff_eq!(*v, row[0], epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn from_rows_round_trips_layout() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let f = ShadowField::from_rows(&rows).unwrap();
        assert_eq!(f.get(1, 0), 4.0);
        assert_eq!(f.at_waypoint(2), &[3.0, 6.0]);
        assert_eq!(f.row(0), rows[0]);
        assert!(ShadowField::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn slope_never_below_free_space(h in 1.0..1000.0f64) {
            let p = UavChannelParams { h_uav: h, fc_ghz: 1.5 };
            prop_assert!(p.slope() >= 20.0);
        }

        #[test]
        fn path_losses_increase_with_distance(d in 1.0..1e4f64, extra in 0.1..1e3f64) {
            let u = UavChannelParams::default();
            let g = GueChannelParams::default();
            prop_assert!(uav_path_loss(d + extra, &u, 0.0).unwrap() > uav_path_loss(d, &u, 0.0).unwrap());
            prop_assert!(gue_path_loss(d + extra, &g).unwrap() > gue_path_loss(d, &g).unwrap());
        }

        #[test]
        fn correlation_matrix_is_valid_covariance(
            n in 1usize..40, spacing in 0.5..50.0f64, sigma in 0.5..4.0f64, rho in 0.05..0.99f64,
        ) {
            let p = ShadowingParams { sigma, rho, x_c: 100.0 };
            let pts = line(n, spacing);
            let r = correlation_matrix(&pts, &p);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(r[(i, j)], r[(j, i)]);
                    prop_assert!(r[(i, j)] > 0.0 && r[(i, j)] <= sigma * sigma);
                }
            }
            prop_assert!(shadowing_factor(&pts, &p).is_ok());
        }
    }
}
