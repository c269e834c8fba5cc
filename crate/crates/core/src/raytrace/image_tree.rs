//! Mirror-image sources of the transmitter, the receiver-independent half of
//! the image method.

use crate::geometry::Vec3;

use super::Facet;

/// Minimum distance in meters between a source and a facet plane for the
/// facet to be considered reflecting for that source.
const FRONT_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageNode {
    pub parent: Option<usize>,
    /// Facet the parent was mirrored across; `None` at the root.
    pub facet: Option<usize>,
    pub point: Vec3,
    pub depth: u32,
}

/// Image sources in depth-first order, children by ascending facet id. Node
/// 0 is the transmitter itself.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTree {
    pub nodes: Vec<ImageNode>,
    pub max_depth: u32,
}

impl ImageTree {
    pub fn root(&self) -> Vec3 {
        self.nodes[0].point
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Facet ids from the first reflection to the last, and the matching
    /// image points, for the chain ending at `node`.
    pub fn chain(&self, node: usize, facets: &mut Vec<usize>, images: &mut Vec<Vec3>) {
        facets.clear();
        images.clear();
        let mut k = node;
        while let Some(f) = self.nodes[k].facet {
            facets.push(f);
            images.push(self.nodes[k].point);
            k = self.nodes[k].parent.expect("non-root nodes have a parent");
        }
        facets.reverse();
        images.reverse();
    }
}

/// Builds every image up to `max_depth` reflections. A node is mirrored
/// across a facet only if it lies strictly in front of it (reflection happens
/// on the outer face) and the facet differs from the one that produced it.
pub fn build_image_tree(tx: Vec3, facets: &[Facet], max_depth: u32) -> ImageTree {
    let mut nodes = vec![ImageNode {
        parent: None,
        facet: None,
        point: tx,
        depth: 0,
    }];
    expand(&mut nodes, 0, facets, max_depth);
    ImageTree { nodes, max_depth }
}

fn expand(nodes: &mut Vec<ImageNode>, at: usize, facets: &[Facet], max_depth: u32) {
    let ImageNode {
        point, depth, facet, ..
    } = nodes[at];
    if depth >= max_depth {
        return;
    }
    for f in facets {
        if Some(f.id) == facet || f.signed_distance(point) <= FRONT_EPS {
            continue;
        }
        let child = nodes.len();
        nodes.push(ImageNode {
            parent: Some(at),
            facet: Some(f.id),
            point: f.mirror(point),
            depth: depth + 1,
        });
        expand(nodes, child, facets, max_depth);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raytrace::build_facets;
    use crate::scene::fixtures::*;

    #[test]
    fn depth_zero_is_root_only() {
        let mut s = room();
        s.objects.push(obstacle("a", 2.0, 2.0, 1.0, 1.0, 1.0));
        let t = build_image_tree(Vec3::new(0.0, 0.0, 2.0), &build_facets(&s), 0);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn single_facet_prunes_repeats() {
        let s = room();
        let facets = build_facets(&s);
        assert_eq!(facets.len(), 1);
        let t = build_image_tree(Vec3::new(0.0, 0.0, 2.0), &facets, 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.nodes[1].point, Vec3::new(0.0, 0.0, -2.0));
        assert_eq!(t.nodes[1].facet, Some(0));
    }

    /// Enumerates every facet sequence without consecutive repeats.
    fn sequences(n: usize, depth: u32) -> usize {
        let mut count = 0;
        let mut frontier: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..depth {
            let mut next = vec![];
            for seq in &frontier {
                for f in 0..n {
                    if seq.last() != Some(&f) {
                        let mut s = seq.clone();
                        s.push(f);
                        next.push(s);
                    }
                }
            }
            count += next.len();
            frontier = next;
        }
        count
    }

    #[test]
    fn six_facets_depth_two_bound() {
        let mut s = room();
        s.objects.push(obstacle("a", 2.0, 2.0, 1.0, 1.0, 1.0));
        let facets = build_facets(&s);
        assert_eq!(facets.len(), 6);
        assert_eq!(sequences(6, 2), 36);
        let t = build_image_tree(Vec3::new(0.0, 0.0, 2.0), &facets, 2);
        assert!(t.len() - 1 <= 36);
        assert!(t.nodes.iter().all(|n| n.depth <= 2));
        // no node mirrors across its parent's facet
        for n in &t.nodes[1..] {
            let p = &t.nodes[n.parent.unwrap()];
            assert_ne!(p.facet, n.facet);
        }
    }

    #[test]
    fn chains_follow_parents() {
        let mut s = room();
        s.ceiling_height = Some(3.0);
        let facets = build_facets(&s);
        let t = build_image_tree(Vec3::new(0.0, 0.0, 2.0), &facets, 3);
        // ground and ceiling alternate: g, gc, gcg, c, cg, cgc
        assert_eq!(t.len(), 7);
        let (mut f, mut p) = (vec![], vec![]);
        t.chain(3, &mut f, &mut p);
        assert_eq!(f, vec![0, 1, 0]);
        assert_eq!(p.last().copied(), Some(t.nodes[3].point));
        // 2 → −2 (ground) → 8 (ceiling at 3) → −8 (ground)
        assert_eq!(p, vec![Vec3::new(0.0, 0.0, -2.0), Vec3::new(0.0, 0.0, 8.0), Vec3::new(0.0, 0.0, -8.0)]);
    }
}
