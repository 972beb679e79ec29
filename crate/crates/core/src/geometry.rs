//! Element layouts and locally periodic sub-array construction.
//!
//! All lengths are in wavelengths. Layouts live in the `yz` plane inside an
//! aperture rectangle centred on the origin.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest element count any layout may carry (and the padded input width).
pub const MAX_ELEMENTS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub y: f64,
    pub z: f64,
}

impl Element {
    pub fn new(y: f64, z: f64) -> Self {
        Self { y, z }
    }

    pub fn distance(&self, other: &Element) -> f64 {
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dy * dy + dz * dz).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub width_y: f64,
    pub height_z: f64,
}

impl Aperture {
    pub fn new(width_y: f64, height_z: f64) -> Result<Self> {
        if !(width_y.is_finite() && height_z.is_finite() && width_y > 0.0 && height_z > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "aperture must be positive and finite, got {width_y} x {height_z}"
            )));
        }
        Ok(Self { width_y, height_z })
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.y.abs() <= self.width_y / 2.0 && e.z.abs() <= self.height_z / 2.0
    }

    pub fn clamp(&self, e: Element) -> Element {
        let (hy, hz) = (self.width_y / 2.0, self.height_z / 2.0);
        Element::new(e.y.clamp(-hy, hy), e.z.clamp(-hz, hz))
    }

    pub fn min_dimension(&self) -> f64 {
        self.width_y.min(self.height_z)
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            y_min: -self.width_y / 2.0,
            y_max: self.width_y / 2.0,
            z_min: -self.height_z / 2.0,
            z_max: self.height_z / 2.0,
        }
    }
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Rect {
    pub fn new(y_min: f64, y_max: f64, z_min: f64, z_max: f64) -> Self {
        Self {
            y_min,
            y_max,
            z_min,
            z_max,
        }
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.y >= self.y_min && e.y <= self.y_max && e.z >= self.z_min && e.z <= self.z_max
    }

    pub fn is_degenerate(&self) -> bool {
        let finite = [self.y_min, self.y_max, self.z_min, self.z_max]
            .iter()
            .all(|v| v.is_finite());
        !(finite && self.y_max > self.y_min && self.z_max > self.z_min)
    }

    pub fn within(&self, outer: &Rect) -> bool {
        self.y_min >= outer.y_min
            && self.y_max <= outer.y_max
            && self.z_min >= outer.z_min
            && self.z_max <= outer.z_max
    }

    /// True when the interiors intersect; shared edges are allowed.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.y_min < other.y_max
            && other.y_min < self.y_max
            && self.z_min < other.z_max
            && other.z_min < self.z_max
    }

    pub fn area(&self) -> f64 {
        (self.y_max - self.y_min) * (self.z_max - self.z_min)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.y_min + self.y_max) / 2.0, (self.z_min + self.z_max) / 2.0)
    }
}

/// A validated, non-empty set of element positions.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementLayout {
    aperture: Aperture,
    elements: Vec<Element>,
}

impl ElementLayout {
    pub fn new(aperture: Aperture, elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyLayout);
        }
        if elements.len() > MAX_ELEMENTS {
            return Err(Error::TooManyElements {
                count: elements.len(),
                max: MAX_ELEMENTS,
            });
        }
        for (i, e) in elements.iter().enumerate() {
            if !(e.y.is_finite() && e.z.is_finite()) {
                return Err(Error::InvalidLayout(format!("element {i} is not finite")));
            }
            if !aperture.contains(e) {
                return Err(Error::InvalidLayout(format!(
                    "element {i} at ({}, {}) lies outside the {} x {} aperture",
                    e.y, e.z, aperture.width_y, aperture.height_z
                )));
            }
        }
        Ok(Self { aperture, elements })
    }

    /// Smallest centred aperture holding every element of `elements`, but never
    /// smaller than `at_least`.
    pub fn enclosing(at_least: Aperture, elements: Vec<Element>) -> Result<Self> {
        let (mut hy, mut hz) = (at_least.width_y / 2.0, at_least.height_z / 2.0);
        for e in &elements {
            hy = hy.max(e.y.abs());
            hz = hz.max(e.z.abs());
        }
        Self::new(Aperture::new(2.0 * hy, 2.0 * hz)?, elements)
    }

    pub fn aperture(&self) -> Aperture {
        self.aperture
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Interleaved `(y0, z0, y1, z1, ...)`.
    pub fn flat_coords(&self) -> Vec<f64> {
        self.elements.iter().flat_map(|e| [e.y, e.z]).collect()
    }

    pub fn from_flat(aperture: Aperture, coords: &[f64]) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(Error::InvalidLayout("odd coordinate count".into()));
        }
        let elements = coords.chunks_exact(2).map(|c| Element::new(c[0], c[1])).collect();
        Self::new(aperture, elements)
    }

    pub fn translated(&self, dy: f64, dz: f64) -> Vec<Element> {
        self.elements
            .iter()
            .map(|e| Element::new(e.y + dy, e.z + dz))
            .collect()
    }
}

/// One periodic lattice confined to a rectangular subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubArraySpec {
    pub subdomain: Rect,
    pub period_y: f64,
    pub period_z: f64,
    /// Radians, in `[0, pi/2)`.
    pub rotation: f64,
    pub offset: (f64, f64),
}

impl SubArraySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_y > 0.0 && self.period_z > 0.0)
            || !self.period_y.is_finite()
            || !self.period_z.is_finite()
        {
            return Err(Error::InvalidConfig(format!(
                "periods must be positive, got ({}, {})",
                self.period_y, self.period_z
            )));
        }
        if self.subdomain.is_degenerate() {
            return Err(Error::InvalidConfig("degenerate subdomain".into()));
        }
        if !(0.0..FRAC_PI_2).contains(&self.rotation) {
            return Err(Error::InvalidConfig(format!(
                "rotation {} outside [0, pi/2)",
                self.rotation
            )));
        }
        if !(self.offset.0.is_finite() && self.offset.1.is_finite()) {
            return Err(Error::InvalidConfig("offset is not finite".into()));
        }
        Ok(())
    }

    fn point(&self, m: i64, n: i64) -> Element {
        let (s, c) = self.rotation.sin_cos();
        let a = m as f64 * self.period_y;
        let b = n as f64 * self.period_z;
        Element::new(c * a - s * b + self.offset.0, s * a + c * b + self.offset.1)
    }

    /// Lattice points inside the subdomain, in `(m, n)` enumeration order.
    pub fn lattice_points(&self) -> Result<Vec<Element>> {
        self.validate()?;
        let (s, c) = self.rotation.sin_cos();
        let r = &self.subdomain;
        // Lattice-frame coordinates of the subdomain corners bound (m, n).
        let corners = [
            (r.y_min, r.z_min),
            (r.y_min, r.z_max),
            (r.y_max, r.z_min),
            (r.y_max, r.z_max),
        ];
        let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (y, z) in corners {
            let (dy, dz) = (y - self.offset.0, z - self.offset.1);
            let a = c * dy + s * dz;
            let b = -s * dy + c * dz;
            a_lo = a_lo.min(a);
            a_hi = a_hi.max(a);
            b_lo = b_lo.min(b);
            b_hi = b_hi.max(b);
        }
        let m_lo = (a_lo / self.period_y).floor() as i64 - 1;
        let m_hi = (a_hi / self.period_y).ceil() as i64 + 1;
        let n_lo = (b_lo / self.period_z).floor() as i64 - 1;
        let n_hi = (b_hi / self.period_z).ceil() as i64 + 1;
        let span = (m_hi - m_lo + 1).saturating_mul(n_hi - n_lo + 1);
        if span > 64 * MAX_ELEMENTS as i64 {
            return Err(Error::TooManyElements {
                count: span as usize,
                max: MAX_ELEMENTS,
            });
        }
        let mut out = Vec::new();
        for m in m_lo..=m_hi {
            for n in n_lo..=n_hi {
                let p = self.point(m, n);
                if r.contains(&p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

/// Fills one subdomain with its lattice. `Ok(None)` means no lattice point
/// landed inside the subdomain.
pub fn generate_subarray(spec: &SubArraySpec, aperture: Aperture) -> Result<Option<ElementLayout>> {
    if !spec.subdomain.within(&aperture.bounds()) {
        return Err(Error::InvalidConfig("subdomain extends past the aperture".into()));
    }
    let points = spec.lattice_points()?;
    if points.is_empty() {
        return Ok(None);
    }
    ElementLayout::new(aperture, points).map(Some)
}

/// Union of sub-array lattices. An element closer than `seam_min_distance` to
/// an element kept from an earlier spec is dropped; the result is capped at
/// [`MAX_ELEMENTS`] in canonical order.
pub fn compose_array(specs: &[SubArraySpec], seam_min_distance: f64, aperture: Aperture) -> Result<ElementLayout> {
    if !(seam_min_distance >= 0.0) {
        return Err(Error::InvalidConfig("seam_min_distance must be >= 0".into()));
    }
    let bounds = aperture.bounds();
    for (i, a) in specs.iter().enumerate() {
        if !a.subdomain.within(&bounds) {
            return Err(Error::InvalidConfig(format!("subdomain {i} extends past the aperture")));
        }
        for b in &specs[i + 1..] {
            if a.subdomain.overlaps(&b.subdomain) {
                return Err(Error::InvalidConfig(format!("subdomain {i} overlaps a later subdomain")));
            }
        }
    }
    let mut kept: Vec<Element> = Vec::new();
    for spec in specs {
        let earlier = kept.len();
        for p in spec.lattice_points()? {
            let clash = seam_min_distance > 0.0
                && kept[..earlier]
                    .iter()
                    .any(|q| q.distance(&p) < seam_min_distance);
            if !clash {
                kept.push(p);
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyLayout);
    }
    sort_canonical(&mut kept);
    kept.truncate(MAX_ELEMENTS);
    ElementLayout::new(aperture, kept)
}

fn canonical_cmp(a: &Element, b: &Element) -> Ordering {
    a.z.total_cmp(&b.z).then(a.y.total_cmp(&b.y))
}

pub fn sort_canonical(elements: &mut [Element]) {
    elements.sort_by(canonical_cmp);
}

/// Permutation that sorts `elements` into canonical order.
pub fn canonical_permutation(elements: &[Element]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..elements.len()).collect();
    idx.sort_by(|&i, &j| canonical_cmp(&elements[i], &elements[j]));
    idx
}

/// Elements sorted lexicographically by `(z, y)`.
pub fn canonical_order(layout: &ElementLayout) -> ElementLayout {
    let mut elements = layout.elements.clone();
    sort_canonical(&mut elements);
    ElementLayout {
        aperture: layout.aperture,
        elements,
    }
}

/// Exact minimum distance over all unordered pairs.
pub fn min_pairwise_distance(layout: &ElementLayout) -> Result<f64> {
    min_distance_of(layout.elements())
}

/// [`min_pairwise_distance`] on a raw slice.
pub fn min_distance_of(elements: &[Element]) -> Result<f64> {
    if elements.len() < 2 {
        return Err(Error::TooFewElements {
            needed: 2,
            found: elements.len(),
        });
    }
    let mut sorted = elements.to_vec();
    sorted.sort_by(|a, b| a.y.total_cmp(&b.y));
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if sorted[j].y - sorted[i].y >= best {
                break;
            }
            best = best.min(sorted[i].distance(&sorted[j]));
        }
    }
    Ok(best)
}

/// Fixed-width network input: interleaved canonical coordinates padded with
/// zeros, plus a mask of real slots.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedInput {
    pub coords: Vec<f64>,
    pub mask: Vec<bool>,
}

pub fn pad_elements(elements: &[Element], n_max: usize) -> Result<PaddedInput> {
    if elements.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if elements.len() > n_max {
        return Err(Error::TooManyElements {
            count: elements.len(),
            max: n_max,
        });
    }
    let mut sorted = elements.to_vec();
    sort_canonical(&mut sorted);
    let mut coords = vec![0.0; 2 * n_max];
    for (i, e) in sorted.iter().enumerate() {
        coords[2 * i] = e.y;
        coords[2 * i + 1] = e.z;
    }
    let mut mask = vec![false; n_max];
    mask[..sorted.len()].fill(true);
    Ok(PaddedInput { coords, mask })
}

pub fn pad_to_fixed(layout: &ElementLayout, n_max: usize) -> Result<PaddedInput> {
    pad_elements(layout.elements(), n_max)
}

/// Parameters for drawing random sub-array compositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub aperture: Aperture,
    pub subdomains: Vec<Rect>,
    pub period_y_range: (f64, f64),
    pub period_z_range: (f64, f64),
    pub rotation_range: (f64, f64),
    /// Offsets are drawn as `center + R * (u * period_y, v * period_z)` with
    /// `u, v` uniform in this range (one full period by default).
    pub offset_fraction_range: (f64, f64),
    pub seam_min_distance: f64,
    pub rng_seed: u64,
}

impl GenerationConfig {
    /// Square aperture of side `side` split into four equal quadrants.
    pub fn quadrants(side: f64, rng_seed: u64) -> Self {
        Self::partitioned(side, side, 2, 2, rng_seed)
    }

    /// `width_y x height_z` aperture cut into an `n_y x n_z` grid of equal
    /// subdomains, listed row by row from the lowest `z`. Other fields take
    /// the default ranges.
    pub fn partitioned(width_y: f64, height_z: f64, n_y: usize, n_z: usize, rng_seed: u64) -> Self {
        let (wy, wz) = (width_y / n_y as f64, height_z / n_z as f64);
        let (y0, z0) = (-width_y / 2.0, -height_z / 2.0);
        let edge = |origin: f64, step: f64, i: usize, n: usize, full: f64| {
            if i == n {
                origin + full
            } else {
                origin + i as f64 * step
            }
        };
        let mut subdomains = Vec::with_capacity(n_y * n_z);
        for b in 0..n_z {
            for a in 0..n_y {
                subdomains.push(Rect::new(
                    edge(y0, wy, a, n_y, width_y),
                    edge(y0, wy, a + 1, n_y, width_y),
                    edge(z0, wz, b, n_z, height_z),
                    edge(z0, wz, b + 1, n_z, height_z),
                ));
            }
        }
        Self {
            aperture: Aperture { width_y, height_z },
            subdomains,
            period_y_range: (0.5, 1.0),
            period_z_range: (0.5, 1.0),
            rotation_range: (0.0, FRAC_PI_2),
            offset_fraction_range: (0.0, 1.0),
            seam_min_distance: 0.5,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Aperture::new(self.aperture.width_y, self.aperture.height_z)?;
        let ranges = [
            ("period_y_range", self.period_y_range),
            ("period_z_range", self.period_z_range),
            ("rotation_range", self.rotation_range),
            ("offset_fraction_range", self.offset_fraction_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!("{name} ({lo}, {hi}) is empty")));
            }
        }
        if self.period_y_range.0 <= 0.0 || self.period_z_range.0 <= 0.0 {
            return Err(Error::InvalidConfig("periods must be positive".into()));
        }
        if self.rotation_range.0 < 0.0 || self.rotation_range.1 > FRAC_PI_2 {
            return Err(Error::InvalidConfig("rotation range must lie in [0, pi/2)".into()));
        }
        if !(self.seam_min_distance >= 0.0) {
            return Err(Error::InvalidConfig("seam_min_distance must be >= 0".into()));
        }
        if self.subdomains.is_empty() {
            return Err(Error::InvalidConfig("no subdomains".into()));
        }
        let bounds = self.aperture.bounds();
        let mut area = 0.0;
        for (i, r) in self.subdomains.iter().enumerate() {
            if r.is_degenerate() || !r.within(&bounds) {
                return Err(Error::InvalidConfig(format!("subdomain {i} is degenerate or outside the aperture")));
            }
            if self.subdomains[i + 1..].iter().any(|o| o.overlaps(r)) {
                return Err(Error::InvalidConfig(format!("subdomain {i} overlaps another")));
            }
            area += r.area();
        }
        let full = self.aperture.width_y * self.aperture.height_z;
        if (area - full).abs() > 1e-9 * full {
            return Err(Error::InvalidConfig("subdomains do not tile the aperture".into()));
        }
        Ok(())
    }

    /// Draws one spec per subdomain.
    pub fn draw_specs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<SubArraySpec> {
        self.subdomains
            .iter()
            .map(|r| {
                let period_y = rng.random_range(self.period_y_range.0..self.period_y_range.1);
                let period_z = rng.random_range(self.period_z_range.0..self.period_z_range.1);
                let rotation = rng.random_range(self.rotation_range.0..self.rotation_range.1);
                let fy = rng.random_range(self.offset_fraction_range.0..self.offset_fraction_range.1);
                let fz = rng.random_range(self.offset_fraction_range.0..self.offset_fraction_range.1);
                let (s, c) = rotation.sin_cos();
                let (a, b) = (fy * period_y, fz * period_z);
                let (cy, cz) = r.center();
                SubArraySpec {
                    subdomain: *r,
                    period_y,
                    period_z,
                    rotation,
                    offset: (cy + c * a - s * b, cz + s * a + c * b),
                }
            })
            .collect()
    }
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self::quadrants(16.0, 0)
    }
}
