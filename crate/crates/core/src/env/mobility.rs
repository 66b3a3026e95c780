use rand::Rng;

use super::EnvError;

/// Annulus around the base station, radii in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub inner: f64,
    pub outer: f64,
}

impl Ring {
    pub const NEAR: Ring = Ring { inner: 100.0, outer: 200.0 };
    pub const MID: Ring = Ring { inner: 200.0, outer: 300.0 };
    pub const FAR: Ring = Ring { inner: 300.0, outer: 400.0 };
    pub const ALL: [Ring; 3] = [Ring::NEAR, Ring::MID, Ring::FAR];

    pub fn new(inner: f64, outer: f64) -> Result<Self, EnvError> {
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(EnvError::Config("ring needs 0 <= inner < outer"));
        }
        Ok(Self { inner, outer })
    }

    /// Uniform point in the annulus.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let r2 = rng.random_range(self.inner * self.inner..=self.outer * self.outer);
        let r = libm::sqrt(r2);
        let theta = rng.random_range(0.0..core::f64::consts::TAU);
        (r * libm::cos(theta), r * libm::sin(theta))
    }

    fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        let r = libm::hypot(x, y);
        if r == 0.0 {
            return (self.inner.max(1.0), 0.0);
        }
        let target = r.clamp(self.inner.max(1e-3), self.outer);
        (x * target / r, y * target / r)
    }
}

/// Random-waypoint motion confined to a ring.
#[derive(Debug, Clone, PartialEq)]
pub struct UeMotion {
    pub x: f64,
    pub y: f64,
    waypoint: (f64, f64),
}

impl UeMotion {
    pub fn spawn<R: Rng + ?Sized>(ring: &Ring, rng: &mut R) -> Self {
        let (x, y) = ring.sample(rng);
        Self {
            x,
            y,
            waypoint: ring.sample(rng),
        }
    }

    pub fn distance(&self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    /// Moves for `dt` seconds at `speed` and returns the distance travelled.
    pub fn advance<R: Rng + ?Sized>(&mut self, ring: &Ring, speed: f64, dt: f64, rng: &mut R) -> f64 {
        let mut left = speed * dt;
        let total = left;
        // Bounded: each pass either finishes the move or reaches a waypoint.
        for _ in 0..64 {
            if left <= 0.0 {
                break;
            }
            let (dx, dy) = (self.waypoint.0 - self.x, self.waypoint.1 - self.y);
            let gap = libm::hypot(dx, dy);
            if gap <= left {
                self.x = self.waypoint.0;
                self.y = self.waypoint.1;
                left -= gap;
                self.waypoint = ring.sample(rng);
            } else {
                self.x += dx / gap * left;
                self.y += dy / gap * left;
                left = 0.0;
            }
        }
        let (x, y) = ring.clamp(self.x, self.y);
        self.x = x;
        self.y = y;
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rings() {
        assert!(Ring::new(200.0, 100.0).is_err());
        assert!(Ring::new(100.0, 100.0).is_err());
        assert!(Ring::new(100.0, 200.0).is_ok());
    }

    #[test]
    fn stays_inside_ring() {
        let mut rng = crate::seeded_rng(8);
        for ring in Ring::ALL {
            let mut ue = UeMotion::spawn(&ring, &mut rng);
            for _ in 0..2000 {
                let d = ue.distance();
                assert!(d >= ring.inner - 1e-9 && d <= ring.outer + 1e-9, "{d}");
                ue.advance(&ring, 3.0, 0.5, &mut rng);
            }
        }
    }

    #[test]
    fn moves_at_most_speed_times_dt() {
        let mut rng = crate::seeded_rng(9);
        let ring = Ring::FAR;
        let mut ue = UeMotion::spawn(&ring, &mut rng);
        for _ in 0..200 {
            let (x0, y0) = (ue.x, ue.y);
            ue.advance(&ring, 3.0, 0.5, &mut rng);
            assert!(libm::hypot(ue.x - x0, ue.y - y0) <= 1.5 + 1e-9);
        }
    }
}
