//! Per-pixel field containers. All grids are row-major with `(x, y)`
//! addressing, `x` along the width.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<V> {
    width: usize,
    height: usize,
    data: Vec<V>,
}

impl<V: Clone> Grid<V> {
    pub fn new(width: usize, height: usize, data: Vec<V>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: V) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be non-zero");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &V {
        &self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: V) {
        let i = self.index(x, y);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&V) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterator over `(x, y, &value)` in row-major order.
    pub fn iter_xy(&self) -> impl Iterator<Item = (usize, usize, &V)> {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, v)| (i % w, i / w, v))
    }
}

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Depth along the optical axis with a per-pixel validity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap<T> {
    values: Grid<T>,
    valid: Grid<bool>,
}

impl<T: Real> DepthMap<T> {
    pub fn new(values: Grid<T>, valid: Grid<bool>) -> Result<Self> {
        check_dims(values.dims(), valid.dims())?;
        for (v, ok) in values.as_slice().iter().zip(valid.as_slice()) {
            if *ok && !(*v > T::zero() && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "valid depth {} is not positive and finite",
                    v.as_f64()
                )));
            }
        }
        Ok(Self { values, valid })
    }

    /// Marks non-positive and non-finite entries invalid.
    pub fn from_values(values: Grid<T>) -> Self {
        let valid = values.map(|v| *v > T::zero() && v.is_finite());
        let values = Grid {
            width: values.width,
            height: values.height,
            data: values
                .data
                .iter()
                .zip(&valid.data)
                .map(|(v, ok)| if *ok { *v } else { T::zero() })
                .collect(),
        };
        Self { values, valid }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        Ok(Self::from_values(Grid::new(width, height, values)?))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self::from_values(Grid::from_fn(width, height, &mut f))
    }

    pub fn constant(width: usize, height: usize, depth: T) -> Self {
        Self::from_values(Grid::filled(width, height, depth))
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.values.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.values.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<T> {
        if *self.valid.get(x, y) {
            Some(*self.values.get(x, y))
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }

    pub fn values(&self) -> &Grid<T> {
        &self.values
    }

    pub fn validity(&self) -> &Grid<bool> {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|v| **v).count()
    }

    pub fn valid_values(&self) -> Vec<T> {
        self.values
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .filter_map(|(v, ok)| ok.then_some(*v))
            .collect()
    }

    /// Median over valid pixels, `None` when none are valid.
    pub fn median(&self) -> Option<T> {
        median(&mut self.valid_values())
    }

    /// Multiplies every valid depth by `s > 0`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            values: self.values.map(|v| *v * s),
            valid: self.valid.clone(),
        }
    }

    /// Sets the value of a pixel; non-positive values invalidate it.
    pub fn set(&mut self, x: usize, y: usize, depth: T) {
        let ok = depth > T::zero() && depth.is_finite();
        self.values.set(x, y, if ok { depth } else { T::zero() });
        self.valid.set(x, y, ok);
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        self.values.set(x, y, T::zero());
        self.valid.set(x, y, false);
    }
}

/// Unit surface normals in camera coordinates, facing the camera.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap<T: Real> {
    vectors: Grid<Vector3<T>>,
    valid: Grid<bool>,
}

fn unit_tolerance<T: Real>() -> T {
    T::lit(1e-6)
}

impl<T: Real> NormalMap<T> {
    pub fn new(vectors: Grid<Vector3<T>>, valid: Grid<bool>) -> Result<Self> {
        check_dims(vectors.dims(), valid.dims())?;
        for (v, ok) in vectors.as_slice().iter().zip(valid.as_slice()) {
            if *ok && !((v.norm() - T::one()).abs() <= unit_tolerance()) {
                return Err(Error::invalid("normal vectors must have unit norm"));
            }
        }
        Ok(Self { vectors, valid })
    }

    /// Normalizes each vector; zero or non-finite vectors become invalid.
    pub fn from_vectors(vectors: Grid<Vector3<T>>) -> Self {
        let mut valid = Grid::filled(vectors.width(), vectors.height(), false);
        let vectors = Grid {
            width: vectors.width,
            height: vectors.height,
            data: vectors
                .data
                .iter()
                .zip(valid.data.iter_mut())
                .map(|(v, ok)| match v.try_normalize(T::lit(1e-12)) {
                    Some(n) if n.iter().all(|c| c.is_finite()) => {
                        *ok = true;
                        n
                    }
                    _ => Vector3::zeros(),
                })
                .collect(),
        };
        Self { vectors, valid }
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> Vector3<T>) -> Self {
        Self::from_vectors(Grid::from_fn(width, height, f))
    }

    pub fn constant(width: usize, height: usize, normal: Vector3<T>) -> Self {
        Self::from_vectors(Grid::filled(width, height, normal))
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.vectors.dims()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.vectors.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.vectors.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<Vector3<T>> {
        if *self.valid.get(x, y) {
            Some(*self.vectors.get(x, y))
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }

    pub fn vectors(&self) -> &Grid<Vector3<T>> {
        &self.vectors
    }

    pub fn validity(&self) -> &Grid<bool> {
        &self.valid
    }

    /// Applies a rotation to every normal.
    pub fn rotated(&self, rotation: &nalgebra::Matrix3<T>) -> Self {
        Self {
            vectors: self.vectors.map(|v| rotation * v),
            valid: self.valid.clone(),
        }
    }

    pub fn set(&mut self, x: usize, y: usize, normal: Option<Vector3<T>>) {
        match normal.and_then(|n| n.try_normalize(T::lit(1e-12))) {
            Some(n) => {
                self.vectors.set(x, y, n);
                self.valid.set(x, y, true);
            }
            None => {
                self.vectors.set(x, y, Vector3::zeros());
                self.valid.set(x, y, false);
            }
        }
    }
}

/// RGB intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRgb<T> {
    pixels: Grid<[T; 3]>,
}

impl<T: Real> ImageRgb<T> {
    pub fn new(pixels: Grid<[T; 3]>) -> Result<Self> {
        for p in pixels.as_slice() {
            if p.iter().any(|c| !(*c >= T::zero() && *c <= T::one())) {
                return Err(Error::invalid("image intensities must lie in [0, 1]"));
            }
        }
        Ok(Self { pixels })
    }

    /// Clamps every channel into `[0, 1]`; NaN becomes 0.
    pub fn from_fn_clamped(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        let pixels = Grid::from_fn(width, height, |x, y| f(x, y).map(clamp_unit));
        Self { pixels }
    }

    pub fn constant(width: usize, height: usize, value: T) -> Self {
        Self::from_fn_clamped(width, height, |_, _| [value; 3])
    }

    pub fn from_gray(gray: &Grid<T>) -> Self {
        Self::from_fn_clamped(gray.width(), gray.height(), |x, y| [*gray.get(x, y); 3])
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        *self.pixels.get(x, y)
    }

    pub fn pixels(&self) -> &Grid<[T; 3]> {
        &self.pixels
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [T; 3]) {
        self.pixels.set(x, y, rgb.map(clamp_unit));
    }

    /// Mean of the three channels.
    #[inline]
    pub fn gray(&self, x: usize, y: usize) -> T {
        let p = self.get(x, y);
        (p[0] + p[1] + p[2]) / T::lit(3.0)
    }

    /// Rec. 601 luma.
    #[inline]
    pub fn luminance(&self, x: usize, y: usize) -> T {
        let p = self.get(x, y);
        T::lit(0.299) * p[0] + T::lit(0.587) * p[1] + T::lit(0.114) * p[2]
    }

    pub fn channel(&self, c: usize) -> Grid<T> {
        self.pixels.map(|p| p[c])
    }
}

fn clamp_unit<T: Real>(v: T) -> T {
    if v >= T::zero() {
        v.min(T::one())
    } else {
        T::zero()
    }
}

/// Per-pixel weights in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask<T> {
    weights: Grid<T>,
}

impl<T: Real> Mask<T> {
    pub fn new(weights: Grid<T>) -> Result<Self> {
        if weights
            .as_slice()
            .iter()
            .any(|w| !(*w >= T::zero() && *w <= T::one()))
        {
            return Err(Error::invalid("mask weights must lie in [0, 1]"));
        }
        Ok(Self { weights })
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            weights: Grid::filled(width, height, T::one()),
        }
    }

    pub fn from_bools(flags: &Grid<bool>) -> Self {
        Self {
            weights: flags.map(|b| if *b { T::one() } else { T::zero() }),
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.weights.dims()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        *self.weights.get(x, y)
    }

    pub fn weights(&self) -> &Grid<T> {
        &self.weights
    }

    /// Element-wise product of two masks.
    pub fn intersect(&self, other: &Mask<T>) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        Ok(Self {
            weights: Grid {
                width: self.weights.width,
                height: self.weights.height,
                data: self
                    .weights
                    .data
                    .iter()
                    .zip(&other.weights.data)
                    .map(|(a, b)| *a * *b)
                    .collect(),
            },
        })
    }

    /// Sum of weights.
    pub fn support(&self) -> T {
        self.weights
            .as_slice()
            .iter()
            .fold(T::zero(), |acc, w| acc + *w)
    }

    /// Number of pixels with non-zero weight.
    pub fn count_nonzero(&self) -> usize {
        self.weights.as_slice().iter().filter(|w| **w > T::zero()).count()
    }
}

/// Median of a slice (mean of the two central values for even lengths).
/// NaNs are not expected.
pub fn median<T: Real>(values: &mut [T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) * T::lit(0.5)
    })
}
