//! Planar geometry helpers for embedding fracture traces into a
//! Cartesian grid: segment clipping, segment intersection, and the
//! average normal distance of a cell to a fracture plane.

/// Axis-aligned rectangle `[x0, x0+w] x [y0, y0+h]`.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub origin: [f64; 2],
    pub size: [f64; 2],
}

impl Rect {
    pub fn max(&self) -> [f64; 2] {
        [self.origin[0] + self.size[0], self.origin[1] + self.size[1]]
    }

    pub fn area(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    /// Half-open containment with tolerance: points on the low edges are
    /// inside, points on the high edges are not. `closed_high` marks axes
    /// whose high edge should be treated as inside (domain boundary).
    pub fn contains_half_open(&self, p: [f64; 2], closed_high: [bool; 2], tol: f64) -> bool {
        let hi = self.max();
        for d in 0..2 {
            if p[d] < self.origin[d] - tol {
                return false;
            }
            let upper_ok = if closed_high[d] { p[d] <= hi[d] + tol } else { p[d] < hi[d] - tol };
            if !upper_ok {
                return false;
            }
        }
        true
    }
}

/// Liang-Barsky clip of segment a + t (b - a), t in [0, 1], against a
/// rectangle. Returns the parameter interval of the clipped piece.
pub fn clip_segment(a: [f64; 2], b: [f64; 2], rect: &Rect) -> Option<(f64, f64)> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let hi = rect.max();
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for axis in 0..2 {
        for (p, q) in [(-d[axis], a[axis] - rect.origin[axis]), (d[axis], hi[axis] - a[axis])] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    if r > t1 {
                        return None;
                    }
                    t0 = t0.max(r);
                } else {
                    if r < t0 {
                        return None;
                    }
                    t1 = t1.min(r);
                }
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Proper intersection of two segments, returned as parameters along each.
/// Parallel (including collinear) segments yield `None`.
pub fn segment_intersection(
    a0: [f64; 2],
    a1: [f64; 2],
    b0: [f64; 2],
    b1: [f64; 2],
) -> Option<(f64, f64)> {
    let da = [a1[0] - a0[0], a1[1] - a0[1]];
    let db = [b1[0] - b0[0], b1[1] - b0[1]];
    let denom = da[0] * db[1] - da[1] * db[0];
    let scale = (da[0].abs() + da[1].abs()) * (db[0].abs() + db[1].abs());
    if denom.abs() <= 1e-14 * scale.max(1e-300) {
        return None;
    }
    let diff = [b0[0] - a0[0], b0[1] - a0[1]];
    let t = (diff[0] * db[1] - diff[1] * db[0]) / denom;
    let s = (diff[0] * da[1] - diff[1] * da[0]) / denom;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&s))
        .then_some((t.clamp(0.0, 1.0), s.clamp(0.0, 1.0)))
}

pub fn point_on_segment(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub fn segment_length(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Unit normal of the vertical plane through the trace `a -> b`.
pub fn trace_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let len = segment_length(a, b);
    [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
}

/// Average of |n . (x - p)| over a rectangle, i.e. the mean normal
/// distance of the cell to the plane. The integrand is piecewise linear:
/// with g the signed distance, ∫|g| = ∫g - 2∫_{g<0} g, and the integral
/// of a linear function over a polygon is area times the centroid value.
pub fn mean_normal_distance(rect: &Rect, normal: [f64; 2], point: [f64; 2]) -> f64 {
    let g = |p: [f64; 2]| normal[0] * (p[0] - point[0]) + normal[1] * (p[1] - point[1]);
    let hi = rect.max();
    let corners = vec![
        rect.origin,
        [hi[0], rect.origin[1]],
        hi,
        [rect.origin[0], hi[1]],
    ];
    let total = rect.area() * g([0.5 * (rect.origin[0] + hi[0]), 0.5 * (rect.origin[1] + hi[1])]);
    let negative_part = clip_polygon_halfplane(&corners, &g);
    let neg_integral = match polygon_area_centroid(&negative_part) {
        Some((area, centroid)) => area * g(centroid),
        None => 0.0,
    };
    (total - 2.0 * neg_integral) / rect.area()
}

/// Sutherland-Hodgman clip of a convex polygon against g(p) <= 0.
fn clip_polygon_halfplane(poly: &[[f64; 2]], g: &dyn Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let gp = g(p);
        let gq = g(q);
        if gp <= 0.0 {
            out.push(p);
        }
        if (gp < 0.0 && gq > 0.0) || (gp > 0.0 && gq < 0.0) {
            let t = gp / (gp - gq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area_centroid(poly: &[[f64; 2]]) -> Option<(f64, [f64; 2])> {
    if poly.len() < 3 {
        return None;
    }
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let cross = p[0] * q[1] - q[0] * p[1];
        area2 += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    if area2.abs() < 1e-300 {
        return None;
    }
    let area = 0.5 * area2;
    Some((area.abs(), [cx / (3.0 * area2), cy / (3.0 * area2)]))
}

/// Average distance along a 1D interval `[0, len]` to an interior point
/// at position `s`: (s² + (len-s)²) / (2 len).
pub fn mean_split_distance(len: f64, s: f64) -> f64 {
    let s = s.clamp(0.0, len);
    (s * s + (len - s) * (len - s)) / (2.0 * len)
}
