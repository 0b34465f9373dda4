//! Planar contact geometry: minimal translation vectors between discs and an
//! oriented rectangle, and the quasi-static split of a resolution
//! displacement into object translation plus rotation.

/// Pose of the pushed rectangle.
#[derive(Debug, Clone, Copy)]
pub struct RectPose {
    pub pos: [f64; 2],
    pub yaw: f64,
    pub half_extents: [f64; 2],
}

/// Contact between a disc and the rectangle.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    /// Minimal translation vector that moves the disc out of the rectangle,
    /// world frame.
    pub mtv: [f64; 2],
    /// Penetration depth (|mtv|).
    pub depth: f64,
    /// Contact point on the rectangle boundary, world frame.
    pub point: [f64; 2],
}

pub fn rot(v: [f64; 2], yaw: f64) -> [f64; 2] {
    let (s, c) = yaw.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// MTV of a disc out of an oriented rectangle, or `None` when separated.
pub fn disc_rect_contact(center: [f64; 2], radius: f64, rect: &RectPose) -> Option<Contact> {
    // Disc center in the rectangle frame.
    let local = rot(sub(center, rect.pos), -rect.yaw);
    let hx = rect.half_extents[0];
    let hy = rect.half_extents[1];
    let closest = [local[0].clamp(-hx, hx), local[1].clamp(-hy, hy)];
    let delta = sub(local, closest);
    let dist = norm(delta);

    let (n_local, depth, point_local) = if dist > 1e-12 {
        // Center outside the rectangle.
        let pen = radius - dist;
        if pen <= 0.0 {
            return None;
        }
        ([delta[0] / dist, delta[1] / dist], pen, closest)
    } else {
        // Center inside: push along the axis with the smallest face distance.
        let dx = hx - local[0].abs();
        let dy = hy - local[1].abs();
        if dx <= dy {
            let sx = if local[0] >= 0.0 { 1.0 } else { -1.0 };
            ([sx, 0.0], radius + dx, [sx * hx, local[1]])
        } else {
            let sy = if local[1] >= 0.0 { 1.0 } else { -1.0 };
            ([0.0, sy], radius + dy, [local[0], sy * hy])
        }
    };

    let n_world = rot(n_local, rect.yaw);
    Some(Contact {
        mtv: [n_world[0] * depth, n_world[1] * depth],
        depth,
        point: add(rot(point_local, rect.yaw), rect.pos),
    })
}

/// MTV of one disc out of another (pushes disc `a`), or `None`.
pub fn disc_disc_mtv(a: [f64; 2], ra: f64, b: [f64; 2], rb: f64) -> Option<[f64; 2]> {
    let d = sub(a, b);
    let dist = norm(d);
    let pen = ra + rb - dist;
    if pen <= 0.0 {
        return None;
    }
    let n = if dist > 1e-12 { [d[0] / dist, d[1] / dist] } else { [1.0, 0.0] };
    Some([n[0] * pen, n[1] * pen])
}

/// Displacement applied to the rectangle at a contact point, decomposed into
/// translation plus rotation about its center via the lever arm.
///
/// `inv_inertia` is 1 / (per-unit-mass planar inertia), in 1/m^2.
#[derive(Debug, Clone, Copy, Default)]
pub struct RectDisplacement {
    pub translation: [f64; 2],
    pub rotation: f64,
}

pub fn apply_at_point(rect: &RectPose, d: [f64; 2], point: [f64; 2], inv_inertia: f64) -> RectDisplacement {
    let r = sub(point, rect.pos);
    let torque = r[0] * d[1] - r[1] * d[0];
    RectDisplacement { translation: d, rotation: torque * inv_inertia }
}
