use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EnvError, TrafficKind};

/// Codec and frame parameters of one traffic class.
///
/// `min_rate_mbps`/`max_rate_mbps` bound the class-level codec rate; when a
/// class has several flows the rate is split evenly between them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub kind: TrafficKind,
    pub flows: usize,
    pub fps: f64,
    pub min_rate_mbps: f64,
    pub max_rate_mbps: f64,
    /// Standard deviation of the multiplicative frame-size jitter, as a
    /// fraction of the mean frame size.
    pub size_jitter: f64,
    /// Truncation of the jitter in standard deviations.
    pub jitter_truncation: f64,
}

impl FlowSpec {
    pub fn ar() -> Self {
        Self::with_bounds(TrafficKind::Ar, 3, 0.5, 10.0)
    }

    pub fn vr() -> Self {
        Self::with_bounds(TrafficKind::Vr, 1, 10.0, 30.0)
    }

    pub fn cg() -> Self {
        Self::with_bounds(TrafficKind::Cg, 1, 10.0, 30.0)
    }

    pub fn defaults() -> [FlowSpec; 3] {
        [Self::ar(), Self::vr(), Self::cg()]
    }

    fn with_bounds(kind: TrafficKind, flows: usize, min: f64, max: f64) -> Self {
        Self {
            kind,
            flows,
            fps: 60.0,
            min_rate_mbps: min,
            max_rate_mbps: max,
            size_jitter: 0.105,
            jitter_truncation: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.flows == 0 {
            return Err(EnvError::Config("a traffic class needs at least one flow"));
        }
        if !(self.fps > 0.0) {
            return Err(EnvError::Config("frame rate must be positive"));
        }
        if !(self.min_rate_mbps > 0.0 && self.min_rate_mbps <= self.max_rate_mbps && self.max_rate_mbps.is_finite()) {
            return Err(EnvError::Config("codec rate bounds must satisfy 0 < min <= max"));
        }
        if !(self.size_jitter >= 0.0 && self.jitter_truncation > 0.0) {
            return Err(EnvError::Config("frame-size jitter must be non-negative"));
        }
        Ok(())
    }

    pub fn check_rate(&self, rate_mbps: f64) -> Result<(), EnvError> {
        if rate_mbps >= self.min_rate_mbps && rate_mbps <= self.max_rate_mbps {
            Ok(())
        } else {
            Err(EnvError::RateOutOfBounds {
                rate: rate_mbps,
                min: self.min_rate_mbps,
                max: self.max_rate_mbps,
            })
        }
    }

    /// Mean frame size in bytes of a single flow of this class at the given
    /// class-level rate.
    pub fn mean_frame_bytes(&self, rate_mbps: f64) -> f64 {
        rate_mbps * 1e6 / (self.flows as f64) / (8.0 * self.fps)
    }
}

/// One application frame of a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub bytes: u32,
}

/// Frames of one flow over `[start, start + window)`.
///
/// Frames are periodic at `1/fps` starting at `start + phase` with
/// `phase ∈ [0, 1/fps)`; each frame size is the mean scaled by a truncated
/// Gaussian factor `1 + σ·z`, `|z| ≤ truncation`.
pub fn generate_frames<R: Rng + ?Sized>(
    spec: &FlowSpec,
    rate_mbps: f64,
    start: f64,
    window: f64,
    phase: f64,
    rng: &mut R,
) -> Result<Vec<Frame>, EnvError> {
    spec.check_rate(rate_mbps)?;
    let period = 1.0 / spec.fps;
    if !(0.0..period).contains(&phase) {
        return Err(EnvError::InvalidInput("frame phase must lie in [0, 1/fps)"));
    }
    let count = libm::round(spec.fps * window) as usize;
    let mean = spec.mean_frame_bytes(rate_mbps);
    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let factor = if spec.size_jitter > 0.0 {
            1.0 + spec.size_jitter * truncated_normal(spec.jitter_truncation, rng)
        } else {
            1.0
        };
        let bytes = libm::round(mean * factor).max(1.0) as u32;
        frames.push(Frame {
            time: start + phase + k as f64 * period,
            bytes,
        });
    }
    Ok(frames)
}

fn truncated_normal<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if libm::fabs(z) <= bound {
            return z;
        }
    }
}

/// Splits a frame into packet sizes of at most `mtu` bytes.
pub fn packetize(frame_bytes: u32, mtu: u32) -> impl Iterator<Item = u32> {
    let full = frame_bytes / mtu;
    let rest = frame_bytes % mtu;
    core::iter::repeat_n(mtu, full as usize).chain((rest > 0).then_some(rest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn frame_count_and_mean_size() {
        let spec = FlowSpec {
            flows: 1,
            ..FlowSpec::vr()
        };
        let mut rng = crate::seeded_rng(4);
        let frames = generate_frames(&spec, 10.0, 0.0, 0.5, 0.001, &mut rng).unwrap();
        assert_eq!(frames.len(), 30);
        assert!((spec.mean_frame_bytes(10.0) - 20833.33).abs() < 0.01);
        let mean = frames.iter().map(|f| f64::from(f.bytes)).sum::<f64>() / 30.0;
        // 30 draws with 10.5 % jitter: the sample mean stays within ±6 %.
        assert!((mean / 20833.33 - 1.0).abs() < 0.06);
    }

    #[test]
    fn ar_minimum_rate_frame_size() {
        let spec = FlowSpec {
            flows: 1,
            ..FlowSpec::ar()
        };
        assert!((spec.mean_frame_bytes(0.5) - 1041.67).abs() < 0.01);
        // Shared across the three AR flows by default.
        assert!((FlowSpec::ar().mean_frame_bytes(0.5) - 347.22).abs() < 0.01);
    }

    #[test]
    fn zero_jitter_gives_exact_sizes() {
        let spec = FlowSpec {
            size_jitter: 0.0,
            ..FlowSpec::cg()
        };
        let mut rng = crate::seeded_rng(1);
        let frames = generate_frames(&spec, 12.0, 1.0, 0.5, 0.0, &mut rng).unwrap();
        assert!(frames.iter().all(|f| f.bytes == 25000));
        assert_eq!(frames[0].time, 1.0);
        assert!((frames[29].time - (1.0 + 29.0 / 60.0)).abs() < 1e-12);
    }

    #[test]
    fn jitter_is_truncated() {
        let spec = FlowSpec::vr();
        let mut rng = crate::seeded_rng(2);
        for _ in 0..50 {
            for f in generate_frames(&spec, 20.0, 0.0, 0.5, 0.0, &mut rng).unwrap() {
                let ratio = f64::from(f.bytes) / spec.mean_frame_bytes(20.0);
                assert!((ratio - 1.0).abs() <= 2.0 * 0.105 + 1e-4);
            }
        }
    }

    #[test]
    fn rejects_out_of_bounds_rate() {
        let mut rng = crate::seeded_rng(1);
        assert!(matches!(
            generate_frames(&FlowSpec::vr(), 31.0, 0.0, 0.5, 0.0, &mut rng),
            Err(EnvError::RateOutOfBounds { .. })
        ));
        assert!(generate_frames(&FlowSpec::ar(), 0.4, 0.0, 0.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn packetize_splits_on_mtu() {
        assert_eq!(packetize(3100, 1500).collect::<Vec<_>>(), vec![1500, 1500, 100]);
        assert_eq!(packetize(3000, 1500).collect::<Vec<_>>(), vec![1500, 1500]);
        assert_eq!(packetize(20, 1500).collect::<Vec<_>>(), vec![20]);
    }
}
