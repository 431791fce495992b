use super::{LightKind, Quad, Scene, Shape};
use crate::math::{Ray, Vec3};

/// Minimum hit distance; suppresses self-intersection of spawned rays.
pub const RAY_EPSILON: f64 = 1e-4;

/// What a ray hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// A scene primitive with this material.
    Material(usize),
    /// The emitting quad of area light `i`.
    Light(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Unit normal on the side of the ray origin.
    pub normal: Vec3,
    /// Geometric normal before facing correction.
    pub geometric_normal: Vec3,
    pub surface: Surface,
}

#[inline]
fn hit_sphere(ray: &Ray, center: Vec3, radius: f64, t_max: f64) -> Option<(f64, Vec3)> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut t = -b - sq;
    if t <= RAY_EPSILON {
        t = -b + sq;
    }
    if t <= RAY_EPSILON || t >= t_max {
        return None;
    }
    let n = (ray.at(t) - center) / radius;
    Some((t, n))
}

#[inline]
fn hit_quad(ray: &Ray, q: &Quad, t_max: f64) -> Option<(f64, Vec3)> {
    let n = q.edge_u.cross(q.edge_v);
    let denom = n.dot(ray.dir);
    if denom.abs() < 1e-12 * n.length() {
        return None;
    }
    let t = n.dot(q.origin - ray.origin) / denom;
    if !(t > RAY_EPSILON && t < t_max) {
        return None;
    }
    let rel = ray.at(t) - q.origin;
    let w = n / n.length_squared();
    let a = w.dot(rel.cross(q.edge_v));
    let b = w.dot(q.edge_u.cross(rel));
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return None;
    }
    Some((t, n.normalized()))
}

#[inline]
fn hit_triangle(ray: &Ray, p0: Vec3, p1: Vec3, p2: Vec3, t_max: f64) -> Option<(f64, Vec3)> {
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let pvec = ray.dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = ray.origin - p0;
    let u = tvec.dot(pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = ray.dir.dot(qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(qvec) * inv;
    if !(t > RAY_EPSILON && t < t_max) {
        return None;
    }
    Some((t, e1.cross(e2).normalized()))
}

struct Closest {
    best: Option<(f64, Vec3, Surface)>,
    limit: f64,
}

impl Closest {
    /// Records a candidate; strict comparison keeps the earliest of equal hits.
    #[inline]
    fn offer(&mut self, found: Option<(f64, Vec3)>, surface: Surface) -> bool {
        match found {
            Some((t, n)) if t < self.limit => {
                self.limit = t;
                self.best = Some((t, n, surface));
                true
            }
            _ => false,
        }
    }
}

fn closest(scene: &Scene, ray: &Ray, t_max: f64, any: bool) -> Option<Hit> {
    let mut c = Closest {
        best: None,
        limit: t_max,
    };
    'prims: for p in &scene.primitives {
        let surface = Surface::Material(p.material_id);
        let found = match &p.shape {
            Shape::Sphere { center, radius } => c.offer(hit_sphere(ray, *center, *radius, c.limit), surface),
            Shape::Quad(q) => c.offer(hit_quad(ray, q, c.limit), surface),
            Shape::TriangleMesh { vertices, indices } => {
                let mut found = false;
                for tri in indices {
                    let h = hit_triangle(ray, vertices[tri[0]], vertices[tri[1]], vertices[tri[2]], c.limit);
                    found |= c.offer(h, surface);
                    if found && any {
                        break;
                    }
                }
                found
            }
        };
        if found && any {
            break 'prims;
        }
    }
    if !(any && c.best.is_some()) {
        for (i, l) in scene.lights.iter().enumerate() {
            if let LightKind::Area { quad, .. } = &l.kind {
                if c.offer(hit_quad(ray, quad, c.limit), Surface::Light(i)) && any {
                    break;
                }
            }
        }
    }
    c.best.map(|(t, n, surface)| {
        let normal = if n.dot(ray.dir) > 0.0 { -n } else { n };
        Hit {
            t,
            point: ray.at(t),
            normal,
            geometric_normal: n,
            surface,
        }
    })
}

/// Nearest intersection with `t > RAY_EPSILON`, including area-light quads.
pub fn intersect(scene: &Scene, ray: &Ray) -> Option<Hit> {
    closest(scene, ray, f64::INFINITY, false)
}

/// True when anything blocks the open segment `(RAY_EPSILON, distance - RAY_EPSILON)`.
pub fn occluded(scene: &Scene, ray: &Ray, distance: f64) -> bool {
    closest(scene, ray, distance - RAY_EPSILON, true).is_some()
}
