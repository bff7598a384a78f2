use std::fmt;

use crate::cell::CellError;
use crate::point::UnitVector;

/// Geographic coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLng {
    lat: f64,
    lng: f64,
}

impl LatLng {
    /// Validates bounds and folds `lng = -180` onto `+180`.
    pub fn new(lat: f64, lng: f64) -> Result<Self, CellError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lng) {
            return Err(CellError::LatLngOutOfRange { lat, lng });
        }
        let lng = if lng == -180.0 { 180.0 } else { lng };
        Ok(Self { lat, lng })
    }

    pub fn lat(self) -> f64 {
        self.lat
    }

    pub fn lng(self) -> f64 {
        self.lng
    }

    pub fn from_point(p: UnitVector) -> Self {
        let lat = p.z.atan2((p.x * p.x + p.y * p.y).sqrt()).to_degrees();
        let mut lng = p.y.atan2(p.x).to_degrees();
        if lng <= -180.0 {
            lng = 180.0;
        }
        Self {
            lat: lat.clamp(-90.0, 90.0),
            lng: lng.min(180.0),
        }
    }

    pub fn to_point(self) -> UnitVector {
        let (phi, theta) = (self.lat.to_radians(), self.lng.to_radians());
        let c = phi.cos();
        UnitVector::new(theta.cos() * c, theta.sin() * c, phi.sin())
    }
}

impl fmt::Display for LatLng {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat, self.lng)
    }
}
