use serde::{Deserialize, Serialize};

/// RGBA color with channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Color {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Default for Color {
    fn default() -> Self {
        Color::WHITE
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl Color {
    pub const WHITE: Color = Color { r: 1.0, g: 1.0, b: 1.0, a: 1.0 };
    pub const BLACK: Color = Color { r: 0.0, g: 0.0, b: 0.0, a: 1.0 };
    pub const RED: Color = Color { r: 1.0, g: 0.0, b: 0.0, a: 1.0 };

    /// Builds a color, clamping every channel into `[0, 1]` (NaN becomes 0).
    pub fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Color {
            r: clamp01(r),
            g: clamp01(g),
            b: clamp01(b),
            a: clamp01(a),
        }
    }

    pub fn rgb(r: f64, g: f64, b: f64) -> Self {
        Color::new(r, g, b, 1.0)
    }

    pub fn channels(&self) -> [f64; 4] {
        [self.r, self.g, self.b, self.a]
    }

    pub fn from_channels(c: [f64; 4]) -> Self {
        Color::new(c[0], c[1], c[2], c[3])
    }

    /// True when every channel already lies in `[0, 1]`. Deserialized values are not clamped.
    pub fn is_valid(&self) -> bool {
        self.channels().iter().all(|c| (0.0..=1.0).contains(c))
    }
}
