//! Synthetic scene renderer standing in for the VLM: Gaussian similarity
//! blobs at projected entity centers and analytic ray-traced depth.

use super::camera::{CameraModel, Extrinsics};
use super::maps::{DepthMap, MapProvenance, SimilarityMap};
use crate::env::{ScenarioConfig, WorldState};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Upright rectangular prism resting on the ground.
    Box { pos: [f64; 2], yaw: f64, half_extents: [f64; 2], height: f64 },
    /// Upright cylinder resting on the ground.
    Cylinder { pos: [f64; 2], radius: f64, height: f64 },
}

impl Shape {
    pub fn center(&self) -> [f64; 3] {
        match *self {
            Shape::Box { pos, height, .. } => [pos[0], pos[1], height * 0.5],
            Shape::Cylinder { pos, height, .. } => [pos[0], pos[1], height * 0.5],
        }
    }

    /// Bounding radius used for the blob scale.
    pub fn apparent_radius(&self) -> f64 {
        match *self {
            Shape::Box { half_extents, .. } => half_extents[0].hypot(half_extents[1]),
            Shape::Cylinder { radius, .. } => radius,
        }
    }

    /// Smallest positive ray parameter t (camera z-depth scaling, see
    /// `Extrinsics::pixel_ray`) where origin + t*dir hits the shape.
    pub fn ray_hit(&self, o: [f64; 3], d: [f64; 3]) -> Option<f64> {
        match *self {
            Shape::Box { pos, yaw, half_extents, height } => {
                // Transform into the box frame (z unchanged).
                let (s, c) = yaw.sin_cos();
                let ox = o[0] - pos[0];
                let oy = o[1] - pos[1];
                let lo = [c * ox + s * oy, -s * ox + c * oy, o[2]];
                let ld = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
                slab_hit(
                    lo,
                    ld,
                    [-half_extents[0], -half_extents[1], 0.0],
                    [half_extents[0], half_extents[1], height],
                )
            }
            Shape::Cylinder { pos, radius, height } => {
                let ox = o[0] - pos[0];
                let oy = o[1] - pos[1];
                let a = d[0] * d[0] + d[1] * d[1];
                let mut best: Option<f64> = None;
                if a > 1e-12 {
                    let b = 2.0 * (ox * d[0] + oy * d[1]);
                    let cq = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - 4.0 * a * cq;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                            if t > 1e-9 {
                                let z = o[2] + t * d[2];
                                if (0.0..=height).contains(&z) {
                                    best = Some(best.map_or(t, |b: f64| b.min(t)));
                                }
                            }
                        }
                    }
                }
                // Top cap.
                if d[2].abs() > 1e-12 {
                    let t = (height - o[2]) / d[2];
                    if t > 1e-9 {
                        let x = ox + t * d[0];
                        let y = oy + t * d[1];
                        if x * x + y * y <= radius * radius {
                            best = Some(best.map_or(t, |b: f64| b.min(t)));
                        }
                    }
                }
                best
            }
        }
    }
}

fn slab_hit(o: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let mut t0 = 1e-9f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-12 {
            if o[k] < lo[k] || o[k] > hi[k] {
                return None;
            }
        } else {
            let mut a = (lo[k] - o[k]) / d[k];
            let mut b = (hi[k] - o[k]) / d[k];
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
    }
    Some(t0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub label: String,
    pub shape: Shape,
}

/// Labeled renderable entities of a pushing scene: the object box plus one
/// cylinder per goal landmark (all landmarks share the "landmark" label).
pub fn scene_entities(state: &WorldState, config: &ScenarioConfig) -> Vec<Entity> {
    let mut out = vec![Entity {
        label: "object".into(),
        shape: Shape::Box {
            pos: state.object.pos,
            yaw: state.object.yaw,
            half_extents: config.object_half_extents,
            height: config.object_height,
        },
    }];
    for g in &state.goals {
        out.push(Entity {
            label: "landmark".into(),
            shape: Shape::Cylinder {
                pos: *g,
                radius: config.goal_radius,
                height: config.goal_height,
            },
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct RenderOut {
    /// One similarity map per entity, same order as the input slice.
    pub maps: Vec<SimilarityMap>,
    pub depth: DepthMap,
}

/// Minimum blob sigma in pixels so that the thresholded region is never
/// degenerate for visible entities.
const MIN_SIGMA_PX: f64 = 1.5;

pub fn render_synthetic(
    entities: &[Entity],
    cam: &CameraModel,
    ext: &Extrinsics,
) -> Result<RenderOut> {
    let (w, h) = (cam.width, cam.height);

    // Depth pass: nearest analytic intersection per pixel (entities and the
    // ground plane).
    let mut raw = vec![f64::INFINITY; w * h];
    for r in 0..h {
        for c in 0..w {
            let dir = ext.pixel_ray(cam, c as f64, r as f64);
            let mut t_min = f64::INFINITY;
            if dir[2] < -1e-12 {
                let t = -ext.center[2] / dir[2];
                if t > 0.0 {
                    t_min = t;
                }
            }
            for e in entities {
                if let Some(t) = e.shape.ray_hit(ext.center, dir) {
                    t_min = t_min.min(t);
                }
            }
            raw[r * w + c] = if t_min.is_finite() { t_min } else { 0.0 };
        }
    }
    let depth = DepthMap::from_raw(w, h, &raw)?;

    // Similarity pass: one Gaussian blob per entity at its projected
    // center, sigma proportional to apparent size, peak 1.0.
    let mut maps = Vec::with_capacity(entities.len());
    for e in entities {
        let mut m = SimilarityMap::zeros(w, h, MapProvenance::Synthetic);
        let p_cam = ext.world_to_cam(e.shape.center());
        if let Some([u0, v0]) = cam.project(p_cam) {
            if cam.in_bounds(u0, v0) {
                let sigma = (cam.fx * e.shape.apparent_radius() / p_cam[2]).max(MIN_SIGMA_PX);
                let cutoff = (4.0 * sigma).ceil() as i64;
                let (cu, cv) = (u0.round() as i64, v0.round() as i64);
                for r in (cv - cutoff).max(0)..=(cv + cutoff).min(h as i64 - 1) {
                    for c in (cu - cutoff).max(0)..=(cu + cutoff).min(w as i64 - 1) {
                        let du = c as f64 - u0;
                        let dv = r as f64 - v0;
                        let s = (-(du * du + dv * dv) / (2.0 * sigma * sigma)).exp();
                        m.set(r as usize, c as usize, s);
                    }
                }
            }
        }
        maps.push(m);
    }
    Ok(RenderOut { maps, depth })
}
