use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::EnvError;

/// Radio parameters of the abstract downlink.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub bs_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
    pub ue_speed_mps: f64,
    pub ue_height_m: f64,
    /// Net gain of the link budget beyond transmit power and pathloss
    /// (array gain minus body, penetration and implementation losses).
    pub antenna_gain_db: f64,
    /// Spectral-efficiency ceiling in bit/s/Hz.
    pub se_cap: f64,
    pub shadowing_sigma_db: f64,
    /// Decorrelation distance of the shadowing process in meters; 0 draws
    /// independent shadowing every window.
    pub shadow_decorrelation_m: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 4.0,
            bandwidth_hz: 40e6,
            tx_power_dbm: 43.0,
            bs_noise_figure_db: 5.0,
            ue_noise_figure_db: 7.0,
            ue_speed_mps: 3.0,
            ue_height_m: 1.5,
            antenna_gain_db: -5.0,
            se_cap: 8.0,
            shadowing_sigma_db: 7.8,
            shadow_decorrelation_m: 50.0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let finite = [
            self.carrier_ghz,
            self.bandwidth_hz,
            self.tx_power_dbm,
            self.bs_noise_figure_db,
            self.ue_noise_figure_db,
            self.ue_speed_mps,
            self.ue_height_m,
            self.antenna_gain_db,
            self.se_cap,
            self.shadowing_sigma_db,
            self.shadow_decorrelation_m,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::Config("link parameters must be finite"));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(EnvError::Config("bandwidth must be positive"));
        }
        if self.carrier_ghz <= 0.0 {
            return Err(EnvError::Config("carrier frequency must be positive"));
        }
        if self.se_cap <= 0.0 || self.shadowing_sigma_db < 0.0 || self.shadow_decorrelation_m < 0.0 {
            return Err(EnvError::Config(
                "spectral-efficiency cap, shadowing sigma and decorrelation distance must be non-negative",
            ));
        }
        if self.ue_speed_mps < 0.0 {
            return Err(EnvError::Config("UE speed must be non-negative"));
        }
        Ok(())
    }
}

/// Urban-macro NLoS pathloss in dB (dominant term of the 3GPP UMa model).
pub fn pathloss_uma_nlos(distance_m: f64, carrier_ghz: f64, ue_height_m: f64) -> Result<f64, EnvError> {
    if !(distance_m > 0.0) {
        return Err(EnvError::InvalidInput("distance must be positive"));
    }
    Ok(13.54 + 39.08 * libm::log10(distance_m) + 20.0 * libm::log10(carrier_ghz)
        - 0.6 * (ue_height_m - 1.5))
}

/// Thermal noise over `bandwidth_hz` plus the receiver noise figure, in dBm.
pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * libm::log10(bandwidth_hz) + noise_figure_db
}

pub fn snr_db(link: &LinkConfig, distance_m: f64, shadow_db: f64) -> Result<f64, EnvError> {
    let pl = pathloss_uma_nlos(distance_m, link.carrier_ghz, link.ue_height_m)?;
    Ok(link.tx_power_dbm + link.antenna_gain_db - pl - shadow_db
        - noise_floor_dbm(link.bandwidth_hz, link.ue_noise_figure_db))
}

/// `min(B·log2(1 + SNR), B·cap)·t` in bits.
pub fn shannon_window_bits(bandwidth_hz: f64, snr_db: f64, se_cap: f64, window_s: f64) -> f64 {
    let snr = libm::pow(10.0, snr_db / 10.0);
    let se = libm::log2(1.0 + snr).min(se_cap);
    bandwidth_hz * se * window_s
}

/// Link rate in bit/s for a UE at `distance_m` with the given shadowing.
pub fn capacity_bps(link: &LinkConfig, distance_m: f64, shadow_db: f64) -> Result<f64, EnvError> {
    let snr = snr_db(link, distance_m, shadow_db)?;
    Ok(shannon_window_bits(link.bandwidth_hz, snr, link.se_cap, 1.0))
}

/// Bits deliverable to one UE within a window for a known shadowing value.
pub fn window_capacity(
    link: &LinkConfig,
    distance_m: f64,
    shadow_db: f64,
    window_s: f64,
) -> Result<f64, EnvError> {
    Ok(capacity_bps(link, distance_m, shadow_db)? * window_s)
}

/// Same as [`window_capacity`] with an independent log-normal shadowing draw.
pub fn sample_window_capacity<R: Rng + ?Sized>(
    link: &LinkConfig,
    distance_m: f64,
    window_s: f64,
    rng: &mut R,
) -> Result<f64, EnvError> {
    let shadow = shadow_draw(link.shadowing_sigma_db, rng);
    window_capacity(link, distance_m, shadow, window_s)
}

pub(crate) fn shadow_draw<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma_db)
        .expect("sigma validated non-negative")
        .sample(rng)
}

/// Gudmundson-style AR(1) update of a UE's shadowing after moving `moved_m`.
pub(crate) fn shadow_step<R: Rng + ?Sized>(link: &LinkConfig, prev_db: f64, moved_m: f64, rng: &mut R) -> f64 {
    let rho = if link.shadow_decorrelation_m > 0.0 {
        libm::exp(-moved_m / link.shadow_decorrelation_m)
    } else {
        0.0
    };
    rho * prev_db + libm::sqrt(1.0 - rho * rho) * shadow_draw(link.shadowing_sigma_db, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pathloss_reference_points() {
        let pl = |d| pathloss_uma_nlos(d, 4.0, 1.5).unwrap();
        assert!((pl(100.0) - 103.74).abs() < 0.01);
        assert!((pl(200.0) - 115.51).abs() < 0.01);
        assert!((pl(300.0) - 122.387).abs() < 0.01);
    }

    #[test]
    fn pathloss_rejects_non_positive_distance() {
        assert!(pathloss_uma_nlos(0.0, 4.0, 1.5).is_err());
        assert!(pathloss_uma_nlos(-3.0, 4.0, 1.5).is_err());
    }

    #[test]
    fn pathloss_increases_with_distance() {
        let mut last = f64::NEG_INFINITY;
        for d in (1..500).map(f64::from) {
            let pl = pathloss_uma_nlos(d, 4.0, 1.5).unwrap();
            assert!(pl > last);
            last = pl;
        }
    }

    #[test]
    fn noise_floor_40mhz() {
        assert!((noise_floor_dbm(40e6, 7.0) + 90.98).abs() < 0.01);
    }

    #[test]
    fn shannon_at_10db() {
        let bits = shannon_window_bits(40e6, 10.0, 8.0, 0.5);
        let expected = 40e6 * libm::log2(11.0) * 0.5;
        assert!((bits - expected).abs() < 1e-3);
        assert!((bits - 6.92e7).abs() < 0.01e7);
    }

    #[test]
    fn cap_binds_at_high_snr() {
        assert_eq!(shannon_window_bits(40e6, 200.0, 8.0, 0.5), 40e6 * 8.0 * 0.5);
    }

    #[test]
    fn capacity_non_increasing_in_distance_without_shadowing() {
        let link = LinkConfig::default();
        let mut last = f64::INFINITY;
        for d in (50..450).step_by(5).map(f64::from) {
            let c = window_capacity(&link, d, 0.0, 0.5).unwrap();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn shadow_process_keeps_variance() {
        let link = LinkConfig::default();
        let mut rng = crate::seeded_rng(1);
        let mut s = shadow_draw(link.shadowing_sigma_db, &mut rng);
        let n = 20000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            s = shadow_step(&link, s, 1.5, &mut rng);
            sum2 += s * s;
        }
        let sd = libm::sqrt(sum2 / f64::from(n));
        assert!((sd - 7.8).abs() < 1.0, "sd {sd}");
    }
}
