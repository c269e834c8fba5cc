//! Planar rectangular reflectors derived from the scene: four walls and a
//! roof per box, the ground, and the ceiling when one is declared.

use crate::geometry::Vec3;
use crate::scene::{Material, Scene};

use super::Polarization;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetKind {
    Ground,
    Ceiling,
    Wall,
    Roof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub id: usize,
    /// Counter-clockwise seen from the side the normal points to.
    pub corners: [Vec3; 4],
    pub normal: Vec3,
    pub material: Material,
    pub kind: FacetKind,
    /// Index of the scene object this facet belongs to.
    pub owner: Option<usize>,
    edge_u: Vec3,
    edge_v: Vec3,
    inv_u2: f64,
    inv_v2: f64,
    offset: f64,
}

impl Facet {
    /// Rectangle spanned by `origin`, `origin + u`, `origin + u + v`,
    /// `origin + v`; the normal is `u × v` normalized.
    pub fn new(
        id: usize,
        origin: Vec3,
        u: Vec3,
        v: Vec3,
        material: Material,
        kind: FacetKind,
        owner: Option<usize>,
    ) -> Self {
        let normal = u.cross(v).normalized();
        Facet {
            id,
            corners: [origin, origin + u, origin + u + v, origin + v],
            normal,
            material,
            kind,
            owner,
            edge_u: u,
            edge_v: v,
            inv_u2: 1.0 / u.dot(u),
            inv_v2: 1.0 / v.dot(v),
            offset: normal.dot(origin),
        }
    }

    /// Positive on the side the normal points to.
    #[inline]
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Mirror image of `p` across the facet's plane.
    pub fn mirror(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Closed test for a point already on the plane.
    #[inline]
    pub fn contains_planar(&self, p: Vec3) -> bool {
        let d = p - self.corners[0];
        let a = d.dot(self.edge_u) * self.inv_u2;
        let b = d.dot(self.edge_v) * self.inv_v2;
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
    }

    pub fn is_horizontal(&self) -> bool {
        matches!(self.kind, FacetKind::Ground | FacetKind::Ceiling | FacetKind::Roof)
    }

    /// Walls reflect the perpendicular component, horizontal surfaces the
    /// parallel one (vertically polarized antennas).
    pub fn polarization(&self) -> Polarization {
        if self.is_horizontal() {
            Polarization::Parallel
        } else {
            Polarization::Perpendicular
        }
    }

    /// Whether the open segment `a → b`, shortened by `eps` meters at both
    /// ends, crosses the facet.
    #[inline]
    pub fn blocks(&self, a: Vec3, b: Vec3, length: f64, eps: f64) -> bool {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if (da > 0.0 && db > 0.0) || (da < 0.0 && db < 0.0) || da == db {
            return false;
        }
        let t = da / (da - db);
        let s = t * length;
        if s <= eps || s >= length - eps {
            return false;
        }
        self.contains_planar(a + (b - a) * t)
    }
}

/// Ground first, then the ceiling, then per object its −x, +x, −y, +y walls
/// and roof. Ids are positions in the returned list.
pub fn build_facets(scene: &Scene) -> Vec<Facet> {
    let mut out = Vec::with_capacity(2 + 5 * scene.objects.len());
    let b = &scene.bounds;
    let (w, l) = (b.width(), b.height());
    out.push(Facet::new(
        out.len(),
        Vec3::new(b.min[0], b.min[1], 0.0),
        Vec3::new(w, 0.0, 0.0),
        Vec3::new(0.0, l, 0.0),
        scene.ground_material,
        FacetKind::Ground,
        None,
    ));
    if let Some(h) = scene.ceiling_height {
        out.push(Facet::new(
            out.len(),
            Vec3::new(b.min[0], b.min[1], h),
            Vec3::new(0.0, l, 0.0),
            Vec3::new(w, 0.0, 0.0),
            scene.ground_material,
            FacetKind::Ceiling,
            None,
        ));
    }
    for (k, o) in scene.objects.iter().enumerate() {
        let r = o.footprint();
        let (x0, y0, x1, y1, h) = (r.min[0], r.min[1], r.max[0], r.max[1], o.height);
        let up = Vec3::new(0.0, 0.0, h);
        let dx = Vec3::new(x1 - x0, 0.0, 0.0);
        let dy = Vec3::new(0.0, y1 - y0, 0.0);
        let mut push = |origin: Vec3, u: Vec3, v: Vec3, kind: FacetKind| {
            let id = out.len();
            out.push(Facet::new(id, origin, u, v, o.material, kind, Some(k)));
        };
        // u × v must point out of the box
        push(Vec3::new(x0, y0, 0.0), up, dy, FacetKind::Wall);
        push(Vec3::new(x1, y0, 0.0), dy, up, FacetKind::Wall);
        push(Vec3::new(x0, y0, 0.0), dx, up, FacetKind::Wall);
        push(Vec3::new(x0, y1, 0.0), up, dx, FacetKind::Wall);
        push(Vec3::new(x0, y0, h), dx, dy, FacetKind::Roof);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::*;

    #[test]
    fn facet_counts() {
        let mut s = room();
        s.objects.push(obstacle("a", 0.0, 0.0, 1.0, 2.0, 1.0));
        assert_eq!(build_facets(&s).len(), 6);

        s.objects.clear();
        assert_eq!(build_facets(&s).len(), 1);

        s.objects.push(obstacle("a", 0.0, 0.0, 1.0, 2.0, 1.0));
        s.objects.push(obstacle("b", 3.0, 3.0, 1.0, 1.0, 2.0));
        s.ceiling_height = Some(3.0);
        // five per box plus ground and ceiling
        assert_eq!(build_facets(&s).len(), 2 * 5 + 2);
    }

    #[test]
    fn normals_point_out_of_boxes_and_up_from_ground() {
        let mut s = room();
        s.ceiling_height = Some(3.0);
        s.objects.push(obstacle("a", 1.0, -1.0, 1.0, 2.0, 1.5));
        let facets = build_facets(&s);
        assert_eq!(facets[0].normal, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(facets[1].normal, Vec3::new(0.0, 0.0, -1.0));
        let center = Vec3::new(1.0, -1.0, 0.75);
        for f in &facets[2..] {
            assert!((f.normal.norm() - 1.0).abs() < 1e-15);
            assert!(f.signed_distance(center) < 0.0, "facet {} faces inward", f.id);
            // corners are coplanar
            for c in f.corners {
                assert!(f.signed_distance(c).abs() < 1e-9);
            }
            assert_eq!(f.owner, Some(0));
        }
        let expected = [
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        for (f, n) in facets[2..].iter().zip(expected) {
            assert_eq!(f.normal, n);
        }
        assert!(facets[0].signed_distance(Vec3::new(0.0, 0.0, 1.0)) > 0.0);
        assert!(facets[1].signed_distance(Vec3::new(0.0, 0.0, 1.0)) > 0.0);
    }

    #[test]
    fn mirror_and_blocking() {
        let wall = Facet::new(
            0,
            Vec3::new(5.0, -10.0, 0.0),
            Vec3::new(0.0, 20.0, 0.0),
            Vec3::new(0.0, 0.0, 10.0),
            Material::Metal,
            FacetKind::Wall,
            None,
        );
        assert_eq!(wall.normal, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(wall.mirror(Vec3::new(0.0, 0.0, 1.5)), Vec3::new(10.0, 0.0, 1.5));

        let a = Vec3::new(0.0, 0.0, 1.0);
        let b = Vec3::new(10.0, 0.0, 1.0);
        assert!(wall.blocks(a, b, 10.0, 1e-9));
        // endpoints on the plane do not block
        assert!(!wall.blocks(Vec3::new(5.0, 0.0, 1.0), b, 5.0, 1e-9));
        // misses the rectangle above its top edge
        assert!(!wall.blocks(Vec3::new(0.0, 0.0, 11.0), Vec3::new(10.0, 0.0, 11.0), 10.0, 1e-9));
        // parallel to the plane
        assert!(!wall.blocks(Vec3::new(5.0, 0.0, 1.0), Vec3::new(5.0, 3.0, 1.0), 3.0, 1e-9));
    }
}
