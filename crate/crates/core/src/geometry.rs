//! Planar geometry for the finite deployment region: uniform drops, tree-line
//! strips sampled from a finite homogeneous Poisson point process, and the
//! vegetation depth a link accumulates while crossing them.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing of `other` seen from `self`, in radians on (-pi, pi].
    pub fn bearing_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[origin.x, origin.x + width] x [origin.y, origin.y + height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub origin: Point,
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn new(origin: Point, width: f64, height: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::invalid("region.origin", "coordinates must be finite"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid("region.width", format!("must be > 0, got {width}")));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid("region.height", format!("must be > 0, got {height}")));
        }
        Ok(Region {
            origin,
            width,
            height,
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.width
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.height
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            self.origin.x + rng.random::<f64>() * self.width,
            self.origin.y + rng.random::<f64>() * self.height,
        )
    }
}

/// A row of trees modelled as an oriented rectangle `length x width` centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeLine {
    pub center: Point,
    /// Direction of the long axis, radians on `[0, pi)`.
    pub orientation: f64,
    pub length: f64,
    pub width: f64,
    pub in_leaf: bool,
}

impl TreeLine {
    pub fn new(center: Point, orientation: f64, length: f64, width: f64, in_leaf: bool) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("tree_line.center", "coordinates must be finite"));
        }
        if !(0.0..PI).contains(&orientation) {
            return Err(Error::invalid(
                "tree_line.orientation",
                format!("must lie in [0, pi), got {orientation}"),
            ));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("tree_line.length", format!("must be > 0, got {length}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid("tree_line.width", format!("must be > 0, got {width}")));
        }
        Ok(TreeLine {
            center,
            orientation,
            length,
            width,
            in_leaf,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeField {
    pub lines: Vec<TreeLine>,
    /// Intensity the field was drawn with, lines per square meter.
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    /// Independent uniform angle on `[0, pi)` per line.
    Uniform,
    /// Every line shares this angle (street-aligned rows).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeFieldParams {
    /// Lines per square meter.
    pub density: f64,
    pub line_length: f64,
    pub line_width: f64,
    pub in_leaf_probability: f64,
    pub orientation: Orientation,
}

impl TreeFieldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(Error::invalid(
                "density",
                format!("must be finite and >= 0, got {}", self.density),
            ));
        }
        if !(self.line_length.is_finite() && self.line_length > 0.0) {
            return Err(Error::invalid("line_length", format!("must be > 0, got {}", self.line_length)));
        }
        if !(self.line_width.is_finite() && self.line_width > 0.0) {
            return Err(Error::invalid("line_width", format!("must be > 0, got {}", self.line_width)));
        }
        if !(0.0..=1.0).contains(&self.in_leaf_probability) {
            return Err(Error::invalid(
                "in_leaf_probability",
                format!("must lie in [0, 1], got {}", self.in_leaf_probability),
            ));
        }
        if let Orientation::Fixed(angle) = self.orientation {
            if !(0.0..PI).contains(&angle) {
                return Err(Error::invalid("orientation", format!("must lie in [0, pi), got {angle}")));
            }
        }
        Ok(())
    }
}

/// Draws a tree-line field: a Poisson number of lines with mean `density * area`,
/// centres uniform over the region, each line in leaf independently.
pub fn sample_tree_field<R: Rng + ?Sized>(
    region: &Region,
    params: &TreeFieldParams,
    rng: &mut R,
) -> Result<TreeField> {
    params.validate()?;
    let mean = params.density * region.area();
    let count = if mean > 0.0 {
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::invalid("density", format!("poisson mean {mean}: {e}")))?;
        poisson.sample(rng) as usize
    } else {
        0
    };

    let mut lines = Vec::with_capacity(count);
    for _ in 0..count {
        let center = region.sample(rng);
        let orientation = match params.orientation {
            Orientation::Uniform => rng.random::<f64>() * PI,
            Orientation::Fixed(angle) => angle,
        };
        let in_leaf = rng.random::<f64>() < params.in_leaf_probability;
        lines.push(TreeLine {
            center,
            orientation,
            length: params.line_length,
            width: params.line_width,
            in_leaf,
        });
    }
    Ok(TreeField {
        lines,
        density: params.density,
    })
}

pub fn sample_uniform_points<R: Rng + ?Sized>(region: &Region, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n).map(|_| region.sample(rng)).collect()
}

/// Length of the part of segment `a-b` lying strictly inside the strip of `line`.
///
/// The strip is open: a segment running along its boundary, or touching it at a
/// single point, has zero chord.
pub fn segment_strip_chord(a: Point, b: Point, line: &TreeLine) -> f64 {
    let (sin, cos) = line.orientation.sin_cos();
    // Local frame: u along the line, v across it.
    let to_local = |p: Point| {
        let dx = p.x - line.center.x;
        let dy = p.y - line.center.y;
        (dx * cos + dy * sin, -dx * sin + dy * cos)
    };
    let (ua, va) = to_local(a);
    let (ub, vb) = to_local(b);
    let (du, dv) = (ub - ua, vb - va);

    let mut t_in = 0.0_f64;
    let mut t_out = 1.0_f64;
    for (start, delta, half) in [(ua, du, line.length / 2.0), (va, dv, line.width / 2.0)] {
        if delta == 0.0 {
            if start.abs() >= half {
                return 0.0;
            }
            continue;
        }
        let t0 = (-half - start) / delta;
        let t1 = (half - start) / delta;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        t_in = t_in.max(lo);
        t_out = t_out.min(hi);
        if t_out <= t_in {
            return 0.0;
        }
    }
    (t_out - t_in) * a.distance(&b)
}

/// Vegetation a link crosses, split by seasonal state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VegetationDepth {
    pub in_leaf: f64,
    pub out_of_leaf: f64,
}

impl VegetationDepth {
    pub const ZERO: VegetationDepth = VegetationDepth {
        in_leaf: 0.0,
        out_of_leaf: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.in_leaf + self.out_of_leaf
    }
}

pub fn vegetation_depth(a: Point, b: Point, field: &TreeField) -> VegetationDepth {
    field.lines.iter().fold(VegetationDepth::ZERO, |mut acc, line| {
        let chord = segment_strip_chord(a, b, line);
        if line.in_leaf {
            acc.in_leaf += chord;
        } else {
            acc.out_of_leaf += chord;
        }
        acc
    })
}

pub fn is_los(a: Point, b: Point, field: &TreeField) -> bool {
    field.lines.iter().all(|line| segment_strip_chord(a, b, line) == 0.0)
}
