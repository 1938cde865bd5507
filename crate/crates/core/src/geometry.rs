use serde::{Deserialize, Serialize};

/// Integer pixel coordinate, origin top-left, `y` growing downward.
///
/// The same type carries absolute positions and relative vectors (hand
/// position minus an anchor); callers know which one they hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: i32,
    pub y: i32,
}

impl PixelCoord {
    pub const ZERO: PixelCoord = PixelCoord { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        PixelCoord { x, y }
    }

    pub fn is_zero(self) -> bool {
        self == Self::ZERO
    }
}

impl std::ops::Sub for PixelCoord {
    type Output = PixelCoord;

    fn sub(self, rhs: PixelCoord) -> PixelCoord {
        PixelCoord::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for PixelCoord {
    type Output = PixelCoord;

    fn add(self, rhs: PixelCoord) -> PixelCoord {
        PixelCoord::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// Axis-aligned pixel rectangle covering columns `[x, x + width)` and rows
/// `[y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub width: i32,
    pub height: i32,
}

impl From<[i32; 4]> for BoundingBox {
    fn from(v: [i32; 4]) -> Self {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [i32; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.width, b.height]
    }
}

impl BoundingBox {
    pub const fn new(x: i32, y: i32, width: i32, height: i32) -> Self {
        BoundingBox { x, y, width, height }
    }

    pub fn right(&self) -> i32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.height
    }

    pub fn area(&self) -> i64 {
        i64::from(self.width.max(0)) * i64::from(self.height.max(0))
    }

    pub fn is_empty(&self) -> bool {
        self.width <= 0 || self.height <= 0
    }

    /// Real-valued center.
    pub fn center(&self) -> (f64, f64) {
        (f64::from(self.x) + f64::from(self.width) / 2.0, f64::from(self.y) + f64::from(self.height) / 2.0)
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersection(&self, other: &BoundingBox) -> BoundingBox {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        BoundingBox::new(x0, y0, (x1 - x0).max(0), (y1 - y0).max(0))
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other).area() as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Clip to the frame rectangle `[0, width) x [0, height)`.
    pub fn clip_to(&self, width: u32, height: u32) -> BoundingBox {
        self.intersection(&BoundingBox::new(0, 0, width as i32, height as i32))
    }

    pub fn translate(&self, dx: i32, dy: i32) -> BoundingBox {
        BoundingBox::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    /// Box with the given real-valued center and size, rounded to pixels.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> BoundingBox {
        let w = width.round() as i32;
        let h = height.round() as i32;
        BoundingBox::new((cx - width / 2.0).round() as i32, (cy - height / 2.0).round() as i32, w, h)
    }
}
