//! Receiver-dependent half of the image method: unfolding image chains into
//! concrete paths and checking them for visibility.

use crate::geometry::{Rect, Vec3};
use crate::scene::{material_properties, Permittivity, Scene, TransmitterSpec};

use super::{
    build_facets, build_image_tree, path_coefficient, Facet, ImageTree, PropagationPath,
    TraceError,
};

/// Endpoint tolerance, in meters, for occlusion tests.
pub const OCCLUSION_EPS: f64 = 1e-9;

/// Geometry-only paths from the tree's root to `rx`, shortest first.
pub fn trace_paths(
    tree: &ImageTree,
    facets: &[Facet],
    rx: Vec3,
) -> Result<Vec<PropagationPath>, TraceError> {
    if facets
        .iter()
        .filter_map(|f| f.owner)
        .max()
        .is_some_and(|n| (0..=n).any(|k| inside_owner(facets, k, rx)))
    {
        return Err(TraceError::ReceiverInsideObstacle(rx));
    }
    let tx = tree.root();
    let mut chain_facets = Vec::with_capacity(tree.max_depth as usize);
    let mut images = Vec::with_capacity(tree.max_depth as usize);
    let mut found: Vec<(f64, PropagationPath)> = Vec::new();

    for node in 0..tree.len() {
        tree.chain(node, &mut chain_facets, &mut images);
        let Some(points) = unfold(facets, &chain_facets, &images, rx) else {
            continue;
        };
        let mut vertices = Vec::with_capacity(points.len() + 2);
        vertices.push(tx);
        vertices.extend(points);
        vertices.push(rx);
        if !visible(facets, &vertices) {
            continue;
        }
        let path = PropagationPath::from_geometry(vertices, chain_facets.clone());
        found.push((path.length(), path));
    }
    // stable: equal lengths keep tree order
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Closed point-in-box test using the half-spaces of the owner's facets.
fn inside_owner(facets: &[Facet], owner: usize, p: Vec3) -> bool {
    let mut any = false;
    for f in facets.iter().filter(|f| f.owner == Some(owner)) {
        any = true;
        if f.signed_distance(p) > 0.0 {
            return false;
        }
    }
    any && p.z >= 0.0
}

/// Reflection points, first to last, or `None` if some point misses its
/// facet.
fn unfold(facets: &[Facet], chain: &[usize], images: &[Vec3], rx: Vec3) -> Option<Vec<Vec3>> {
    let mut points = vec![Vec3::ZERO; chain.len()];
    let mut target = rx;
    for k in (0..chain.len()).rev() {
        let f = &facets[chain[k]];
        let image = images[k];
        let d_target = f.signed_distance(target);
        let d_image = f.signed_distance(image);
        if d_target <= 0.0 || d_image >= 0.0 {
            return None;
        }
        let t = d_target / (d_target - d_image);
        let p = target + (image - target) * t;
        if !f.contains_planar(p) {
            return None;
        }
        points[k] = p;
        target = p;
    }
    Some(points)
}

fn visible(facets: &[Facet], vertices: &[Vec3]) -> bool {
    vertices.windows(2).all(|w| {
        let len = w[0].distance(w[1]);
        len > OCCLUSION_EPS && !facets.iter().any(|f| f.blocks(w[0], w[1], len, OCCLUSION_EPS))
    })
}

/// Cached facets, image tree and material constants for one transmitter.
/// Moving the receiver only repeats path validation and coefficients.
#[derive(Clone, Debug)]
pub struct Tracer {
    transmitter: TransmitterSpec,
    facets: Vec<Facet>,
    permittivity: Vec<Permittivity>,
    tree: ImageTree,
    bounds: Rect,
}

impl Tracer {
    pub fn new(scene: &Scene, tx_id: &str) -> Result<Self, TraceError> {
        Self::with_depth(scene, tx_id, scene.max_reflections)
    }

    pub fn with_depth(scene: &Scene, tx_id: &str, max_depth: u32) -> Result<Self, TraceError> {
        let tx = scene
            .transmitter(tx_id)
            .ok_or_else(|| TraceError::UnknownTransmitter(tx_id.to_string()))?;
        Self::from_facets(tx.clone(), build_facets(scene), max_depth, scene.bounds)
    }

    pub fn from_facets(
        transmitter: TransmitterSpec,
        facets: Vec<Facet>,
        max_depth: u32,
        bounds: Rect,
    ) -> Result<Self, TraceError> {
        let permittivity = facets
            .iter()
            .map(|f| material_properties(f.material, transmitter.frequency_hz))
            .collect::<Result<Vec<_>, _>>()?;
        let tree = build_image_tree(transmitter.position, &facets, max_depth);
        Ok(Tracer {
            transmitter,
            facets,
            permittivity,
            tree,
            bounds,
        })
    }

    pub fn transmitter(&self) -> &TransmitterSpec {
        &self.transmitter
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn image_tree(&self) -> &ImageTree {
        &self.tree
    }

    pub fn wavelength(&self) -> f64 {
        super::SPEED_OF_LIGHT / self.transmitter.frequency_hz
    }

    /// Completed paths to `rx`. Takes `&self`, so one tracer can serve many
    /// threads.
    pub fn move_receiver(&self, rx: Vec3) -> Result<Vec<PropagationPath>, TraceError> {
        if !(rx.is_finite() && self.bounds.contains([rx.x, rx.y])) {
            return Err(TraceError::ReceiverOutOfBounds(rx));
        }
        let paths = trace_paths(&self.tree, &self.facets, rx)?;
        Ok(paths
            .into_iter()
            .map(|p| {
                path_coefficient(p, self.transmitter.frequency_hz, &self.facets, &self.permittivity)
            })
            .collect())
    }
}
