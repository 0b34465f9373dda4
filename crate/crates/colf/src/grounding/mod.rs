//! Execution-time perception geometry: similarity-map post-processing,
//! pinhole back-projection with depth clipping, a synthetic renderer, and
//! misalignment injection.

pub mod camera;
pub mod estimate;
pub mod maps;
pub mod render;

pub use camera::{CameraModel, Extrinsics};
pub use estimate::{
    estimate_position, DepthMode, EstimateHolder, GroundingResult, GroundingStatus,
    MisalignmentModel, MAX_HOLD,
};
pub use maps::{
    median_region_depth, merge_maps, read_grid, threshold_centroid, write_grid, DepthMap,
    MapProvenance, SimilarityMap, DEPTH_MAX, DEPTH_MIN, TAU,
};
pub use render::{render_synthetic, scene_entities, Entity, RenderOut, Shape};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CameraPreset;

    #[test]
    fn resolution_consistency_224_vs_full() {
        // Centroids computed at 224x224 and mapped back to 1280x720 agree
        // with direct full-resolution computation within 1 full-res pixel.
        let entity = Entity {
            label: "landmark".into(),
            shape: Shape::Cylinder { pos: [2.0, 0.4], radius: 0.3, height: 0.8 },
        };
        let work = CameraModel::working(CameraPreset::Sim);
        let full = CameraModel::full(CameraPreset::Sim);
        let ext_w = Extrinsics::from_robot([0.0, 0.0], 0.0, work.mount_height);
        let out_w = render_synthetic(std::slice::from_ref(&entity), &work, &ext_w).unwrap();
        let out_f = render_synthetic(std::slice::from_ref(&entity), &full, &ext_w).unwrap();
        let cw = threshold_centroid(&out_w.maps[0], TAU).unwrap().unwrap();
        let cf = threshold_centroid(&out_f.maps[0], TAU).unwrap().unwrap();
        let su = full.width as f64 / work.width as f64;
        let sv = full.height as f64 / work.height as f64;
        assert!((cw[0] * su - cf[0]).abs() < 1.0, "u {} vs {}", cw[0] * su, cf[0]);
        assert!((cw[1] * sv - cf[1]).abs() < 1.0, "v {} vs {}", cw[1] * sv, cf[1]);
    }
}
