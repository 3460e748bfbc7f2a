//! Received power, association and ground-user rate.
//!
//! Every argmax in this module breaks ties toward the lowest GBS index.

use serde::{Deserialize, Serialize};

use crate::antenna::{best_sector_gain, ArrayConfig};
use crate::channel::{gue_path_loss, uav_path_loss, GueChannelParams, UavChannelParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::{distance3d, Point3, SectorOrientation};

/// One immutable network realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub gbs_positions: Vec<Point3>,
    pub sector_orientations: Vec<[SectorOrientation; 3]>,
    pub gue_positions: Vec<Point3>,
    pub tx_power_dbm: f64,
    pub array_config: ArrayConfig,
    pub uav_channel: UavChannelParams,
    pub gue_channel: GueChannelParams,
    /// Width and height in meters, anchored at the origin.
    pub area: [f64; 2],
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let m = self.gbs_positions.len();
        if m == 0 {
            return Err(invalid("gbs_positions", "need at least one GBS"));
        }
        if !self.gue_positions.is_empty() && m < 2 {
            return Err(invalid(
                "gbs_positions",
                "ground-user SIR needs at least one interferer (M >= 2)",
            ));
        }
        if self.sector_orientations.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: self.sector_orientations.len(),
            });
        }
        let [w, h] = self.area;
        let inside = |p: &Point3| (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y) && p.z >= 0.0;
        if !self.gbs_positions.iter().chain(&self.gue_positions).all(inside) {
            return Err(invalid("positions", "all sites must lie inside the area"));
        }
        self.array_config.validate()
    }

    pub fn n_gbs(&self) -> usize {
        self.gbs_positions.len()
    }

    pub fn n_gue(&self) -> usize {
        self.gue_positions.len()
    }

    fn gain_toward(&self, gbs: usize, rx: &Point3, beta_deg: f64) -> Result<f64> {
        best_sector_gain(
            &self.gbs_positions[gbs],
            &self.sector_orientations[gbs],
            rx,
            beta_deg,
            &self.array_config,
        )
    }
}

/// RSRP in dBm at the UAV from one GBS.
pub fn rsrp_uav(
    scenario: &Scenario,
    waypoint: &Point3,
    gbs_index: usize,
    beta_deg: f64,
    shadow_db: f64,
) -> Result<f64> {
    let gbs = &scenario.gbs_positions[gbs_index];
    let gain = scenario.gain_toward(gbs_index, waypoint, beta_deg)?;
    let loss = uav_path_loss(distance3d(gbs, waypoint), &scenario.uav_channel, shadow_db)?;
    Ok(scenario.tx_power_dbm + gain - loss)
}

/// RSRP from every GBS; `shadow_row[m]` is the shadowing toward GBS `m`.
pub fn rsrp_all(scenario: &Scenario, waypoint: &Point3, beta_deg: f64, shadow_row: &[f64]) -> Result<Vec<f64>> {
    if shadow_row.len() != scenario.n_gbs() {
        return Err(Error::LengthMismatch {
            expected: scenario.n_gbs(),
            actual: shadow_row.len(),
        });
    }
    (0..scenario.n_gbs())
        .map(|m| rsrp_uav(scenario, waypoint, m, beta_deg, shadow_row[m]))
        .collect()
}

/// First index of the maximum; `None` for an empty slice.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if *v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Strongest GBS at `waypoint` and its RSRP.
pub fn serving_cell(scenario: &Scenario, waypoint: &Point3, beta_deg: f64, shadow_row: &[f64]) -> Result<(usize, f64)> {
    let rsrp = rsrp_all(scenario, waypoint, beta_deg, shadow_row)?;
    let best = argmax(&rsrp).ok_or_else(|| invalid("gbs_positions", "empty network"))?;
    Ok((best, rsrp[best]))
}

/// Linear received power (mW) at every GUE from every GBS, `[k][m]`.
pub fn gue_received_powers(scenario: &Scenario, beta_deg: f64) -> Result<Vec<Vec<f64>>> {
    scenario
        .gue_positions
        .iter()
        .map(|gue| {
            (0..scenario.n_gbs())
                .map(|m| {
                    let gbs = &scenario.gbs_positions[m];
                    let gain = scenario.gain_toward(m, gue, beta_deg)?;
                    let loss = gue_path_loss(distance3d(gbs, gue), &scenario.gue_channel)?;
                    Ok(db_to_linear(scenario.tx_power_dbm + gain - loss))
                })
                .collect()
        })
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Signal over summed interference when `powers[server]` is the signal.
pub fn sir_from_powers(powers: &[f64], server: usize) -> f64 {
    let interference: f64 = powers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != server)
        .map(|(_, p)| p)
        .sum();
    powers[server] / interference
}

pub fn gue_sir(scenario: &Scenario, gue_index: usize, gbs_index: usize, beta_deg: f64) -> Result<f64> {
    if scenario.n_gbs() < 2 {
        return Err(invalid("gbs_positions", "SIR needs M >= 2"));
    }
    let gue = &scenario.gue_positions[gue_index];
    let powers = (0..scenario.n_gbs())
        .map(|m| {
            let gain = scenario.gain_toward(m, gue, beta_deg)?;
            let loss = gue_path_loss(distance3d(&scenario.gbs_positions[m], gue), &scenario.gue_channel)?;
            Ok(db_to_linear(scenario.tx_power_dbm + gain - loss))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sir_from_powers(&powers, gbs_index))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GueAssociation {
    /// Serving GBS of each GUE.
    pub serving: Vec<usize>,
    /// Linear SIR of each GUE toward its server.
    pub sir: Vec<f64>,
    /// Number of GUEs served by each GBS.
    pub load: Vec<usize>,
}

impl GueAssociation {
    pub fn from_powers(powers: &[Vec<f64>], n_gbs: usize) -> Self {
        let mut serving = Vec::with_capacity(powers.len());
        let mut sir = Vec::with_capacity(powers.len());
        let mut load = vec![0; n_gbs];
        for row in powers {
            let sirs: Vec<f64> = (0..row.len()).map(|m| sir_from_powers(row, m)).collect();
            let best = argmax(&sirs).expect("at least one GBS");
            serving.push(best);
            sir.push(sirs[best]);
            load[best] += 1;
        }
        Self { serving, sir, load }
    }

    /// GUEs served by GBS `m`.
    pub fn members(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == m)
            .map(|(k, _)| k)
    }

    /// Round-robin sum rate in bps/Hz: each GUE gets `log2(1 + SIR)` over its
    /// server's load.
    pub fn sum_rate(&self) -> f64 {
        self.serving
            .iter()
            .zip(&self.sir)
            .map(|(m, g)| (1.0 + g).log2() / self.load[*m] as f64)
            .sum()
    }
}

pub fn associate_gues(scenario: &Scenario, beta_deg: f64) -> Result<GueAssociation> {
    let powers = gue_received_powers(scenario, beta_deg)?;
    Ok(GueAssociation::from_powers(&powers, scenario.n_gbs()))
}

pub fn gue_sum_rate(scenario: &Scenario, beta_deg: f64) -> Result<f64> {
    Ok(associate_gues(scenario, beta_deg)?.sum_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SectorOrientation;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn scenario(gbs: Vec<Point3>, gues: Vec<Point3>) -> Scenario {
        let n = gbs.len();
        Scenario {
            gbs_positions: gbs,
            sector_orientations: vec![SectorOrientation::tri_sector(0.0); n],
            gue_positions: gues,
            tx_power_dbm: 46.0,
            array_config: ArrayConfig::default(),
            uav_channel: UavChannelParams::default(),
            gue_channel: GueChannelParams::default(),
            area: [4000.0, 4000.0],
        }
    }

    fn random_scenario(seed: u64, m: usize, k: usize) -> Scenario {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let gbs = (0..m)
            .map(|_| Point3::new(rng.random_range(0.0..4000.0), rng.random_range(0.0..4000.0), 35.0))
            .collect();
        let gues = (0..k)
            .map(|_| Point3::new(rng.random_range(0.0..4000.0), rng.random_range(0.0..4000.0), 1.5))
            .collect();
        scenario(gbs, gues)
    }

    #[test]
    fn rsrp_composition() {
        let s = scenario(
            vec![Point3::new(1000.0, 1000.0, 35.0), Point3::new(3000.0, 3000.0, 35.0)],
            vec![],
        );
        let uav = Point3::new(1400.0, 1600.0, 100.0);
        let d = distance3d(&s.gbs_positions[0], &uav);
        let gain = best_sector_gain(
            &s.gbs_positions[0],
            &s.sector_orientations[0],
            &uav,
            6.0,
            &s.array_config,
        )
        .unwrap();
        let expected = 46.0 + gain - uav_path_loss(d, &s.uav_channel, 0.0).unwrap();
        assert_abs_diff_eq!(rsrp_uav(&s, &uav, 0, 6.0, 0.0).unwrap(), expected, epsilon = 1e-12);

        // 0 dBi at 96.864 dB of loss
        assert_abs_diff_eq!(46.0 + 0.0 - 96.864, -50.864, epsilon = 1e-12);

        let shadowed = rsrp_uav(&s, &uav, 0, 6.0, 3.0).unwrap();
        assert_abs_diff_eq!(shadowed, expected - 3.0, epsilon = 1e-12);
    }

    #[test]
    fn coincident_uav_is_an_error() {
        let mut s = scenario(
            vec![Point3::new(10.0, 10.0, 100.0), Point3::new(20.0, 10.0, 35.0)],
            vec![],
        );
        s.area = [100.0, 100.0];
        assert!(matches!(
            rsrp_uav(&s, &Point3::new(10.0, 10.0, 100.0), 0, 0.0, 0.0),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn equidistant_sites_tie_to_lowest_index() {
        // mirror images about x = 2000 with mirrored boresights
        let mut s = scenario(
            vec![Point3::new(1500.0, 2000.0, 35.0), Point3::new(2500.0, 2000.0, 35.0)],
            vec![],
        );
        s.sector_orientations = vec![SectorOrientation::tri_sector(0.0), SectorOrientation::tri_sector(180.0)];
        let uav = Point3::new(2000.0, 2000.0, 100.0);
        let a = rsrp_uav(&s, &uav, 0, 4.0, 0.0).unwrap();
        let b = rsrp_uav(&s, &uav, 1, 4.0, 0.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[-1.0, -1.0, -1.0, -1.0, -1.0, -1.0]), Some(0));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn dominant_near_site_serves() {
        let s = scenario(
            vec![
                Point3::new(100.0, 100.0, 35.0),
                Point3::new(2000.0, 2000.0, 35.0),
                Point3::new(3900.0, 100.0, 35.0),
            ],
            vec![],
        );
        let (m, _) = serving_cell(&s, &Point3::new(2050.0, 2000.0, 100.0), 0.0, &[0.0; 3]).unwrap();
        assert_eq!(m, 1);
    }

    #[test]
    fn sir_examples() {
        assert_eq!(sir_from_powers(&[1.0, 1.0], 0), 1.0);
        assert_eq!(sir_from_powers(&[4.0, 1.0, 1.0], 0), 2.0);
        let scaled: Vec<f64> = [4.0, 1.0, 1.0].iter().map(|p| p * 7.5).collect();
        assert_abs_diff_eq!(sir_from_powers(&scaled, 0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sum_rate_examples() {
        let one = GueAssociation {
            serving: vec![0],
            sir: vec![1.0],
            load: vec![1, 0],
        };
        assert_eq!(one.sum_rate(), 1.0);
        let four = GueAssociation {
            serving: vec![1; 4],
            sir: vec![3.0; 4],
            load: vec![0, 4],
        };
        assert_abs_diff_eq!(four.sum_rate(), 2.0, epsilon = 1e-12);
        let empty = GueAssociation {
            serving: vec![],
            sir: vec![],
            load: vec![0, 0],
        };
        assert_eq!(empty.sum_rate(), 0.0);
    }

    #[test]
    fn single_gue_association() {
        let s = random_scenario(5, 6, 1);
        let a = associate_gues(&s, 6.0).unwrap();
        assert_eq!(a.load.iter().sum::<usize>(), 1);
        assert_eq!(a.load[a.serving[0]], 1);
    }

    #[test]
    fn mirrored_layout_splits_users() {
        let mut s = scenario(
            vec![Point3::new(1000.0, 2000.0, 35.0), Point3::new(3000.0, 2000.0, 35.0)],
            vec![Point3::new(1200.0, 2000.0, 1.5), Point3::new(2800.0, 2000.0, 1.5)],
        );
        s.sector_orientations = vec![SectorOrientation::tri_sector(0.0), SectorOrientation::tri_sector(180.0)];
        let a = associate_gues(&s, 6.0).unwrap();
        assert_eq!(a.serving, vec![0, 1]);
        assert_eq!(a.load, vec![1, 1]);
        assert_eq!(a.members(1).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn sir_needs_an_interferer() {
        let s = scenario(vec![Point3::new(10.0, 10.0, 35.0)], vec![Point3::new(50.0, 50.0, 1.5)]);
        assert!(gue_sir(&s, 0, 0, 0.0).is_err());
        assert!(s.validate().is_err());
    }

    #[test]
    fn association_matches_brute_force_sir_scan() {
        for seed in 0..5 {
            let s = random_scenario(seed, 8, 30);
            for beta in [-2.0, 6.0, 12.0] {
                let a = associate_gues(&s, beta).unwrap();
                for k in 0..s.n_gue() {
                    let sirs: Vec<f64> = (0..s.n_gbs()).map(|m| gue_sir(&s, k, m, beta).unwrap()).collect();
                    let mut best = 0;
                    for m in 1..sirs.len() {
                        if sirs[m] > sirs[best] {
                            best = m;
                        }
                    }
                    assert_eq!(a.serving[k], best);
                    assert_abs_diff_eq!(a.sir[k], sirs[best], epsilon = 1e-12 * sirs[best]);
                }
                let counted: Vec<usize> = (0..s.n_gbs()).map(|m| a.members(m).count()).collect();
                assert_eq!(counted, a.load);
                assert_eq!(a.load.iter().sum::<usize>(), s.n_gue());

                // rate recomputed from the definition
                let mut rate = 0.0;
                for m in 0..s.n_gbs() {
                    for k in a.members(m) {
                        rate += (1.0 + a.sir[k]).log2() / a.load[m] as f64;
                    }
                }
                assert_abs_diff_eq!(gue_sum_rate(&s, beta).unwrap(), rate, epsilon = 1e-9);
                assert_eq!(
                    gue_sum_rate(&s, beta).unwrap().to_bits(),
                    gue_sum_rate(&s, beta).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn serving_cell_matches_independent_scan() {
        for seed in 10..15 {
            let s = random_scenario(seed, 12, 0);
            let uav = Point3::new(2000.0, 1000.0 + seed as f64 * 100.0, 100.0);
            let shadow: Vec<f64> = (0..12).map(|m| ((m * 7 + seed as usize) % 5) as f64 - 2.0).collect();
            let (best, rsrp) = serving_cell(&s, &uav, 2.0, &shadow).unwrap();
            let mut oracle = (0, f64::NEG_INFINITY);
            for m in 0..12 {
                let r = rsrp_uav(&s, &uav, m, 2.0, shadow[m]).unwrap();
                if r > oracle.1 {
                    oracle = (m, r);
                }
            }
            assert_eq!((best, rsrp), oracle);
        }
    }

    proptest! {
        #[test]
        fn serving_cell_ignores_common_offset(seed in 0u64..500, offset in -20.0..20.0f64, beta in 0usize..8) {
            let s = random_scenario(seed, 6, 0);
            let uav = Point3::new(1000.0, 2500.0, 100.0);
            let beta = -2.0 + 2.0 * beta as f64;
            let base = serving_cell(&s, &uav, beta, &[0.0; 6]).unwrap();
            let shifted = serving_cell(&s, &uav, beta, &[offset; 6]).unwrap();
            prop_assert_eq!(base.0, shifted.0);
        }

        #[test]
        fn sum_rate_invariant_to_gue_order(seed in 0u64..200, rot in 0usize..20) {
            let s = random_scenario(seed, 5, 20);
            let mut p = s.clone();
            p.gue_positions.rotate_left(rot);
            p.gue_positions.reverse();
            let a = gue_sum_rate(&s, 4.0).unwrap();
            let b = gue_sum_rate(&p, 4.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
