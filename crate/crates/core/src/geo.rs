//! Spherical geometry helpers shared by extraction and analysis.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }

    /// Bit pattern key; two points share a key iff their coordinates are bit-identical.
    pub fn bits(&self) -> (u64, u64) {
        (self.lat.to_bits(), self.lon.to_bits())
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let dlat = (b.lat - a.lat).abs().to_radians();
    let dlon = (b.lon - a.lon).abs().to_radians();
    let h =
        (dlat / 2.0).sin().powi(2) + a.lat.to_radians().cos() * b.lat.to_radians().cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Mean position on the unit sphere, projected back to latitude and longitude.
///
/// Returns `None` for an empty input or when the vectors cancel out.
pub fn spherical_mean(points: &[GeoPoint]) -> Option<GeoPoint> {
    if points.is_empty() {
        return None;
    }
    let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
    for p in points {
        let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
        x += lat.cos() * lon.cos();
        y += lat.cos() * lon.sin();
        z += lat.sin();
    }
    let n = points.len() as f64;
    let (x, y, z) = (x / n, y / n, z / n);
    let norm = (x * x + y * y + z * z).sqrt();
    if norm < 1e-12 {
        return None;
    }
    Some(GeoPoint {
        lat: (z / norm).asin().to_degrees(),
        lon: y.atan2(x).to_degrees(),
    })
}

/// Even-odd containment test of a point in a ring, treating (lon, lat) as planar.
pub fn point_in_ring(p: GeoPoint, ring: &[GeoPoint]) -> bool {
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let cross_lon = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
            if p.lon < cross_lon {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orientation(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
}

fn on_segment(a: GeoPoint, b: GeoPoint, p: GeoPoint) -> bool {
    p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

pub(crate) fn segments_intersect(a: GeoPoint, b: GeoPoint, c: GeoPoint, d: GeoPoint) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundredth_of_a_degree_latitude() {
        let a = GeoPoint::new(41.8781, -87.6298);
        let b = GeoPoint::new(41.8881, -87.6298);
        let d = haversine_m(a, b);
        assert!((d - 1111.95).abs() < 0.05, "{d}");
        assert_eq!(haversine_m(a, a), 0.0);
    }

    #[test]
    fn spherical_mean_of_symmetric_pair() {
        let c = spherical_mean(&[GeoPoint::new(10.0, 20.0), GeoPoint::new(-10.0, 20.0)]).unwrap();
        assert!(c.lat.abs() < 1e-9);
        assert!((c.lon - 20.0).abs() < 1e-9);
        assert!(spherical_mean(&[]).is_none());
    }

    #[test]
    fn spherical_mean_across_antimeridian() {
        let c = spherical_mean(&[GeoPoint::new(0.0, 179.0), GeoPoint::new(0.0, -179.0)]).unwrap();
        assert!((c.lon.abs() - 180.0).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn even_odd_rule() {
        let square = [
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(0.0, 0.0),
        ];
        assert!(point_in_ring(GeoPoint::new(0.5, 0.5), &square));
        assert!(!point_in_ring(GeoPoint::new(1.5, 0.5), &square));
        assert!(!point_in_ring(GeoPoint::new(0.5, -0.1), &square));
    }

    #[test]
    fn crossing_segments() {
        let p = GeoPoint::new;
        assert!(segments_intersect(p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(1.0, 0.0)));
        assert!(!segments_intersect(p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0), p(1.0, 1.0)));
    }
}
