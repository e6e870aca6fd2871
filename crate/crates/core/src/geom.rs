//! Screen-space geometry. `x` grows rightward, `y` grows downward.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn length(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Axis-aligned rectangle with `min` as the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub const fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self::new(Vec2::new(x, y), Vec2::new(x + w, y + h))
    }

    /// Rectangle of the given size whose bottom edge is centered on `foot`.
    pub fn standing_at(foot: Vec2, w: f64, h: f64) -> Self {
        Self::from_xywh(foot.x - w / 2.0, foot.y - h, w, h)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    pub fn translate(&mut self, d: Vec2) {
        self.min = self.min + d;
        self.max = self.max + d;
    }

    /// Positive-area intersection; touching edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }

    pub fn set_left(&mut self, x: f64) {
        let w = self.width();
        self.min.x = x;
        self.max.x = x + w;
    }

    pub fn set_right(&mut self, x: f64) {
        let w = self.width();
        self.max.x = x;
        self.min.x = x - w;
    }

    pub fn set_top(&mut self, y: f64) {
        let h = self.height();
        self.min.y = y;
        self.max.y = y + h;
    }

    pub fn set_bottom(&mut self, y: f64) {
        let h = self.height();
        self.max.y = y;
        self.min.y = y - h;
    }

    pub fn contains_rect(&self, inner: &Rect) -> bool {
        inner.min.x >= self.min.x
            && inner.min.y >= self.min.y
            && inner.max.x <= self.max.x
            && inner.max.y <= self.max.y
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min.x <= self.max.x && self.min.y <= self.max.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_edges_do_not_overlap() {
        let a = Rect::from_xywh(0.0, 0.0, 10.0, 10.0);
        let b = Rect::from_xywh(10.0, 0.0, 10.0, 10.0);
        assert!(!a.overlaps(&b));
        let c = Rect::from_xywh(9.5, 9.5, 10.0, 10.0);
        assert!(a.overlaps(&c) && c.overlaps(&a));
    }

    #[test]
    fn standing_rect_sits_on_foot() {
        let r = Rect::standing_at(Vec2::new(100.0, 512.0), 32.0, 48.0);
        assert_eq!(r.max.y, 512.0);
        assert_eq!(r.center().x, 100.0);
        assert_eq!(r.height(), 48.0);
    }
}
