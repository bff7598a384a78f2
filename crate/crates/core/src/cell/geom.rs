//! Cell corners, edge planes and areas.

use super::coords::{face_uv_to_xyz, u_norm, v_norm};
use super::CellId;
use crate::point::UnitVector;
use crate::sphere::area::triangle_area;
use crate::sphere::{Location, SphericalPolygon, BOUNDARY_EPS};

/// Authalic Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0072;

/// Mean area of a cell at `level`: the sphere split evenly over `6·4^level` cells.
pub fn average_area_km2(level: u8) -> f64 {
    let sphere = 4.0 * std::f64::consts::PI * EARTH_RADIUS_KM * EARTH_RADIUS_KM;
    sphere / (6.0 * 4f64.powi(level as i32))
}

/// Precomputed geometry of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeom {
    pub id: CellId,
    /// Counterclockwise corners.
    pub vertices: [UnitVector; 4],
    /// Unit normal of edge `k` (from vertex `k` to `k+1`), pointing inward.
    pub normals: [UnitVector; 4],
    pub center: UnitVector,
    /// Angular radius of a cap around `center` that covers the cell.
    pub radius: f64,
}

impl CellGeom {
    pub fn new(id: CellId) -> Self {
        let (face, u, v) = id.uv_bounds();
        let vertices = [
            face_uv_to_xyz(face, u[0], v[0]).normalize(),
            face_uv_to_xyz(face, u[1], v[0]).normalize(),
            face_uv_to_xyz(face, u[1], v[1]).normalize(),
            face_uv_to_xyz(face, u[0], v[1]).normalize(),
        ];
        let normals = [
            v_norm(face, v[0]).normalize(),
            u_norm(face, u[1]).normalize(),
            (-v_norm(face, v[1])).normalize(),
            (-u_norm(face, u[0])).normalize(),
        ];
        let center = id.center();
        let radius = vertices
            .iter()
            .map(|&x| center.angle(x))
            .fold(0.0, f64::max)
            * (1.0 + 1e-12);
        Self {
            id,
            vertices,
            normals,
            center,
            radius,
        }
    }

    /// Area in steradians, from two spherical triangles.
    pub fn exact_area(&self) -> f64 {
        let v = &self.vertices;
        triangle_area(v[0], v[1], v[2]) + triangle_area(v[0], v[2], v[3])
    }

    /// Smallest signed distance (as a sine) from `p` to the four edge planes;
    /// positive inside.
    pub fn min_edge_dot(&self, p: UnitVector) -> f64 {
        self.normals
            .iter()
            .map(|n| n.dot(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Position of `p` relative to the closed cell, with a `BOUNDARY_EPS`
    /// band treated as the boundary.
    pub fn locate(&self, p: UnitVector) -> Location {
        if p.dot(self.center) <= 0.0 {
            return Location::Outside;
        }
        let d = self.min_edge_dot(p);
        if d > BOUNDARY_EPS {
            Location::Inside
        } else if d >= -BOUNDARY_EPS {
            Location::Boundary
        } else {
            Location::Outside
        }
    }
}

impl CellId {
    pub fn geom(self) -> CellGeom {
        CellGeom::new(self)
    }

    pub fn vertices(self) -> [UnitVector; 4] {
        self.geom().vertices
    }

    pub fn exact_area_sr(self) -> f64 {
        self.geom().exact_area()
    }

    pub fn area_km2(self) -> f64 {
        self.exact_area_sr() * EARTH_RADIUS_KM * EARTH_RADIUS_KM
    }

    /// The cell as a four-vertex counterclockwise geodesic loop.
    pub fn polygon(self) -> SphericalPolygon {
        SphericalPolygon::from_loops(vec![self.vertices().to_vec()])
            .expect("cell corners form a valid loop")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latlng::LatLng;

    #[test]
    fn area_anchors() {
        assert!((average_area_km2(0) / 8.5e7 - 1.0).abs() < 0.01);
        assert!((average_area_km2(13) / 1.27 - 1.0).abs() < 0.02);
        let cm2 = average_area_km2(30) * 1e10;
        assert!((cm2 / 0.74 - 1.0).abs() < 0.02);
    }

    #[test]
    fn faces_tile_the_sphere() {
        let total: f64 = (0..6).map(|f| CellId::from_face(f).exact_area_sr()).sum();
        let sphere = 4.0 * std::f64::consts::PI;
        assert!((total / sphere - 1.0).abs() < 1e-9);
    }

    #[test]
    fn own_center_is_inside() {
        for t in ["7d", "88c", "872a3e9c", "1", "b"] {
            let g = CellId::from_token(t).unwrap().geom();
            assert_eq!(g.locate(g.center), Location::Inside);
        }
    }

    #[test]
    fn corners_of_7d_match_reference() {
        let c = CellId::from_token("7d").unwrap();
        let expect = [
            (45.0, 180.0),
            (22.619865, 180.0),
            (21.037511, -157.380135),
            (42.709390, -157.380135),
        ];
        for (v, (lat, lng)) in c.vertices().iter().zip(expect) {
            let ll = LatLng::from_point(*v);
            assert!((ll.lat() - lat).abs() < 1e-5, "{ll}");
            assert!((ll.lng() - lng).abs() < 1e-5, "{ll}");
        }
    }
}
