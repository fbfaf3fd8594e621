//! Axis-aligned rectangle primitives shared by the packing domains.

/// Closed axis-aligned rectangle. Intersection tests treat shared edges as
/// non-overlapping so objects may touch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// Tolerance for contact: overlaps thinner than this are ignored.
pub const CONTACT_EPS: f64 = 1e-9;

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self { min_x, min_y, max_x, max_y }
    }

    /// Square of side `side` centered at `(x, y)`.
    pub fn square(x: f64, y: f64, side: f64) -> Self {
        let h = side / 2.0;
        Self::new(x - h, y - h, x + h, y + h)
    }

    pub fn centered(x: f64, y: f64, half_x: f64, half_y: f64) -> Self {
        Self::new(x - half_x, y - half_y, x + half_x, y + half_y)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// True when the interiors intersect.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min_x < other.max_x - CONTACT_EPS
            && other.min_x < self.max_x - CONTACT_EPS
            && self.min_y < other.max_y - CONTACT_EPS
            && other.min_y < self.max_y - CONTACT_EPS
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min_x >= self.min_x - CONTACT_EPS
            && other.max_x <= self.max_x + CONTACT_EPS
            && other.min_y >= self.min_y - CONTACT_EPS
            && other.max_y <= self.max_y + CONTACT_EPS
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x > self.min_x && x < self.max_x && y > self.min_y && y < self.max_y
    }

    /// True when the open segment from `a` to `b` passes through the interior
    /// (slab test).
    pub fn hit_by_segment(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        let lo = [self.min_x + CONTACT_EPS, self.min_y + CONTACT_EPS];
        let hi = [self.max_x - CONTACT_EPS, self.max_y - CONTACT_EPS];
        for axis in 0..2 {
            let d = b[axis] - a[axis];
            if d.abs() < 1e-15 {
                if a[axis] <= lo[axis] || a[axis] >= hi[axis] {
                    return false;
                }
            } else {
                let (mut e0, mut e1) = ((lo[axis] - a[axis]) / d, (hi[axis] - a[axis]) / d);
                if e0 > e1 {
                    std::mem::swap(&mut e0, &mut e1);
                }
                t0 = t0.max(e0);
                t1 = t1.min(e1);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        true
    }
}
