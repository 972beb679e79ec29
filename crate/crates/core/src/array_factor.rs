//! Array factor on the reduced `(u_y, u_z)` plane, the main-lobe/side-lobe
//! cost and pattern metrics.
//!
//! With `u = k (r_hat - r_hat_0)` the pattern of isotropic, uniformly excited
//! elements collapses to `U(u_y, u_z) = sum_n exp(j (y_n u_y + z_n u_z))`,
//! independent of the scan direction. Lengths are in wavelengths, so
//! `k = 2 pi` and every scan/observation pair maps into `|u| <= 2k`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aperture, Element, ElementLayout};

/// Wavenumber for unit wavelength.
pub const WAVENUMBER: f64 = 2.0 * PI;
/// Default grid half-width: the largest reachable `|u|`.
pub const DEFAULT_U_EXTENT: f64 = 2.0 * WAVENUMBER;
pub const DEFAULT_SAMPLES: usize = 257;
/// Magnitudes are floored here before conversion to dB.
pub const DB_FLOOR: f64 = -200.0;

/// Square, origin-centred sample lattice with a radial main-lobe mask.
///
/// Samples are stored row-major with rows along `u_z` and columns along
/// `u_y`: index `iz * n + iy`.
#[derive(Clone, Debug, PartialEq)]
pub struct UVGrid {
    u_extent: f64,
    n_samples: usize,
    main_lobe_radius: f64,
    axis: Vec<f64>,
    mask: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_extent: f64,
    pub n_samples: usize,
    pub main_lobe_radius: f64,
}

impl UVGrid {
    pub fn new(u_extent: f64, n_samples: usize, main_lobe_radius: f64) -> Result<Self> {
        if !(u_extent.is_finite() && u_extent > 0.0) {
            return Err(Error::InvalidConfig(format!("u_extent must be positive, got {u_extent}")));
        }
        if n_samples < 3 || n_samples % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be odd and >= 3, got {n_samples}"
            )));
        }
        if !(main_lobe_radius > 0.0 && main_lobe_radius < u_extent) {
            return Err(Error::InvalidConfig(format!(
                "main_lobe_radius must lie in (0, {u_extent}), got {main_lobe_radius}"
            )));
        }
        let c = (n_samples / 2) as f64;
        let step = u_extent / c;
        // (i - c) * step is exactly antisymmetric about the centre sample.
        let axis: Vec<f64> = (0..n_samples).map(|i| (i as f64 - c) * step).collect();
        let mut mask = Vec::with_capacity(n_samples * n_samples);
        for uz in &axis {
            for uy in &axis {
                mask.push((uy * uy + uz * uz).sqrt() <= main_lobe_radius);
            }
        }
        Ok(Self {
            u_extent,
            n_samples,
            main_lobe_radius,
            axis,
            mask,
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.u_extent, spec.n_samples, spec.main_lobe_radius)
    }

    /// Main-lobe radius that encloses a uniform aperture's beam out to just
    /// past its first null: `1.5 * 2 pi / A` for the smaller dimension `A`.
    pub fn default_main_lobe_radius(aperture: Aperture) -> f64 {
        1.5 * WAVENUMBER / aperture.min_dimension()
    }

    /// Full `|u| <= 2k` domain at `n_samples` per axis.
    pub fn for_aperture(aperture: Aperture, n_samples: usize) -> Result<Self> {
        Self::new(
            DEFAULT_U_EXTENT,
            n_samples,
            Self::default_main_lobe_radius(aperture),
        )
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            u_extent: self.u_extent,
            n_samples: self.n_samples,
            main_lobe_radius: self.main_lobe_radius,
        }
    }

    pub fn u_extent(&self) -> f64 {
        self.u_extent
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn main_lobe_radius(&self) -> f64 {
        self.main_lobe_radius
    }

    pub fn len(&self) -> usize {
        self.n_samples * self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample positions along either axis.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn center_index(&self) -> usize {
        self.n_samples / 2
    }

    pub fn index(&self, iz: usize, iy: usize) -> usize {
        iz * self.n_samples + iy
    }

    /// `(u_y, u_z)` of flat sample `i`.
    pub fn uv(&self, i: usize) -> (f64, f64) {
        (self.axis[i % self.n_samples], self.axis[i / self.n_samples])
    }

    pub fn main_lobe_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn main_lobe_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Complex pattern values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AFMap {
    grid: UVGrid,
    values: Vec<Complex64>,
}

impl AFMap {
    pub fn new(grid: UVGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidConfig("non-finite pattern value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &UVGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, iz: usize, iy: usize) -> Complex64 {
        self.values[self.grid.index(iz, iy)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub p: u32,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { p: 4 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidConfig("norm exponent p must be >= 1".into()));
        }
        Ok(())
    }
}

/// Split-complex `n x m` matrix, row-major.
struct CMat {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Row-major real gemm `c += alpha * a * op(b)`; `b_trans` reads `b` stored as
/// `(n x k)`.
#[allow(clippy::too_many_arguments)]
fn dgemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], b_trans: bool, c: &mut [f64]) {
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `a (m x k) * b^T` where `b` is stored `(n x k)`; `conj_b` conjugates `b`.
fn cmatmul_bt(m: usize, k: usize, n: usize, a: &CMat, b: &CMat, conj_b: bool) -> CMat {
    let mut re = vec![0.0; m * n];
    let mut im = vec![0.0; m * n];
    let s = if conj_b { -1.0 } else { 1.0 };
    dgemm(m, k, n, 1.0, &a.re, &b.re, true, &mut re);
    dgemm(m, k, n, -s, &a.im, &b.im, true, &mut re);
    dgemm(m, k, n, s, &a.re, &b.im, true, &mut im);
    dgemm(m, k, n, 1.0, &a.im, &b.re, true, &mut im);
    CMat { re, im }
}

/// Per-axis phase factors `exp(j coord_n u_i)` as an `(n_samples x N)` matrix.
fn phase_matrix(axis: &[f64], coords: impl Iterator<Item = f64> + Clone) -> CMat {
    let n = coords.clone().count();
    let mut re = Vec::with_capacity(axis.len() * n);
    let mut im = Vec::with_capacity(axis.len() * n);
    for u in axis {
        for c in coords.clone() {
            let (s, co) = (c * u).sin_cos();
            re.push(co);
            im.push(s);
        }
    }
    CMat { re, im }
}

fn evaluate_raw(elements: &[Element], grid: &UVGrid) -> (Vec<Complex64>, CMat, CMat) {
    let n = grid.n_samples;
    let count = elements.len();
    let ay = phase_matrix(grid.axis(), elements.iter().map(|e| e.y));
    let bz = phase_matrix(grid.axis(), elements.iter().map(|e| e.z));
    // U[iz][iy] = sum_n Bz[iz][n] * Ay[iy][n]
    let u = cmatmul_bt(n, count, n, &bz, &ay, false);
    let values = u.re.iter().zip(&u.im).map(|(r, i)| Complex64::new(*r, *i)).collect();
    (values, ay, bz)
}

/// Pattern of an arbitrary (possibly out-of-aperture) element set.
pub fn evaluate_elements(elements: &[Element], grid: &UVGrid) -> Result<AFMap> {
    if elements.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if !elements.iter().all(|e| e.y.is_finite() && e.z.is_finite()) {
        return Err(Error::InvalidLayout("non-finite coordinate".into()));
    }
    let (values, _, _) = evaluate_raw(elements, grid);
    AFMap::new(grid.clone(), values)
}

/// `U(i) = sum_n exp(j (y_n u_y(i) + z_n u_z(i)))` on every grid sample.
pub fn evaluate_af(layout: &ElementLayout, grid: &UVGrid) -> Result<AFMap> {
    evaluate_elements(layout.elements(), grid)
}

/// Main-lobe and side-region sums of `(|U|^2 / N^2)^p`, in fixed sample order.
fn lobe_sums(values: &[Complex64], mask: &[bool], norm: f64, p: u32) -> (f64, f64) {
    let mut main = 0.0;
    let mut side = 0.0;
    for (v, in_main) in values.iter().zip(mask) {
        let w = (v.norm_sqr() / norm).powi(p as i32);
        if *in_main {
            main += w;
        } else {
            side += w;
        }
    }
    (main, side)
}

/// `-sum_ML |U|^2p / sum_side |U|^2p`. Always negative; lower is better.
///
/// Magnitudes are normalized by the peak `|U(0, 0)|` before raising to `2p`;
/// the ratio is unchanged and large arrays cannot overflow.
pub fn true_cost(af: &AFMap, params: CostParams) -> Result<f64> {
    params.validate()?;
    let c = af.grid.center_index();
    let peak = af.at(c, c).norm_sqr();
    let norm = if peak > 0.0 { peak } else { 1.0 };
    let (main, side) = lobe_sums(&af.values, &af.grid.mask, norm, params.p);
    if side == 0.0 || !side.is_finite() {
        return Err(Error::DegeneratePattern("side-region energy is zero".into()));
    }
    Ok(-main / side)
}

/// Exact cost of a layout on `grid`.
pub fn layout_cost(layout: &ElementLayout, grid: &UVGrid, params: CostParams) -> Result<f64> {
    true_cost(&evaluate_af(layout, grid)?, params)
}

/// [`layout_cost`] on a raw element slice.
pub fn elements_cost(elements: &[Element], grid: &UVGrid, params: CostParams) -> Result<f64> {
    true_cost(&evaluate_elements(elements, grid)?, params)
}

/// Exact gradient of [`true_cost`] with respect to every element's `(y, z)`.
///
/// With `s_i = |U_i|^2 / N^2`, `A = sum_ML s^p`, `B = sum_side s^p` and
/// `ds_i/dy_n = (2/N^2) u_y(i) Im(U_i exp(-j phi_n(i)))`, the sums over samples
/// factor along the two axes and reduce to two complex matrix products.
pub fn analytic_cost_grad(elements: &[Element], grid: &UVGrid, params: CostParams) -> Result<Vec<[f64; 2]>> {
    params.validate()?;
    if elements.is_empty() {
        return Err(Error::EmptyLayout);
    }
    let n = grid.n_samples;
    let count = elements.len();
    let (values, ay, bz) = evaluate_raw(elements, grid);
    let c = grid.center_index();
    let peak = values[grid.index(c, c)].norm_sqr();
    let norm = if peak > 0.0 { peak } else { 1.0 };
    let p = params.p;
    let (main, side) = lobe_sums(&values, &grid.mask, norm, p);
    if side == 0.0 || !side.is_finite() {
        return Err(Error::DegeneratePattern("side-region energy is zero".into()));
    }
    // G_i = w_i U_i with w_i = d cost / d s_i
    let mut g = CMat {
        re: vec![0.0; n * n],
        im: vec![0.0; n * n],
    };
    let mut gy = CMat {
        re: vec![0.0; n * n],
        im: vec![0.0; n * n],
    };
    for (i, v) in values.iter().enumerate() {
        let s = v.norm_sqr() / norm;
        let ds = p as f64 * s.powi(p as i32 - 1);
        let w = if grid.mask[i] { -ds / side } else { ds * main / (side * side) };
        let uy = grid.axis[i % n];
        g.re[i] = w * v.re;
        g.im[i] = w * v.im;
        gy.re[i] = g.re[i] * uy;
        gy.im[i] = g.im[i] * uy;
    }
    // T[iz][n] = sum_iy G[iz][iy] conj(Ay[iy][n]); transpose Ay to (N x n_samples)
    let mut ay_t = CMat {
        re: vec![0.0; count * n],
        im: vec![0.0; count * n],
    };
    for iy in 0..n {
        for e in 0..count {
            ay_t.re[e * n + iy] = ay.re[iy * count + e];
            ay_t.im[e * n + iy] = ay.im[iy * count + e];
        }
    }
    let t_z = cmatmul_bt(n, n, count, &g, &ay_t, true);
    let t_y = cmatmul_bt(n, n, count, &gy, &ay_t, true);
    let scale = 2.0 / norm;
    let mut out = vec![[0.0; 2]; count];
    for iz in 0..n {
        let uz = grid.axis[iz];
        for (e, o) in out.iter_mut().enumerate() {
            let k = iz * count + e;
            // Im(conj(Bz) * T) with conj(Bz) = (br, -bi)
            let (br, bi) = (bz.re[k], -bz.im[k]);
            o[0] += br * t_y.im[k] + bi * t_y.re[k];
            o[1] += uz * (br * t_z.im[k] + bi * t_z.re[k]);
        }
    }
    for o in &mut out {
        o[0] *= scale;
        o[1] *= scale;
    }
    Ok(out)
}

/// Central differences of [`true_cost`] with step `h` on every coordinate.
pub fn finite_diff_cost_grad(
    elements: &[Element],
    grid: &UVGrid,
    params: CostParams,
    h: f64,
) -> Result<Vec<[f64; 2]>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = elements.to_vec();
    let mut out = vec![[0.0; 2]; elements.len()];
    for i in 0..elements.len() {
        for axis in 0..2 {
            let orig = probe[i];
            let bump = |e: &mut Element, d: f64| {
                if axis == 0 {
                    e.y += d
                } else {
                    e.z += d
                }
            };
            bump(&mut probe[i], h);
            let up = elements_cost(&probe, grid, params)?;
            probe[i] = orig;
            bump(&mut probe[i], -h);
            let down = elements_cost(&probe, grid, params)?;
            probe[i] = orig;
            out[i][axis] = (up - down) / (2.0 * h);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutAxis {
    Uy,
    Uz,
}

impl CutAxis {
    pub fn name(self) -> &'static str {
        match self {
            CutAxis::Uy => "u_y",
            CutAxis::Uz => "u_z",
        }
    }
}

/// dB profile through the origin along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct UCut {
    pub axis: CutAxis,
    pub u: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn to_db(magnitude: f64, reference: f64) -> f64 {
    if magnitude == 0.0 {
        return DB_FLOOR;
    }
    (20.0 * (magnitude / reference).log10()).max(DB_FLOOR)
}

/// `20 log10(|U| / max |U|)` along `axis`, floored at [`DB_FLOOR`].
pub fn u_cut(af: &AFMap, axis: CutAxis) -> Result<UCut> {
    let n = af.grid.n_samples;
    let c = af.grid.center_index();
    let mags: Vec<f64> = (0..n)
        .map(|i| match axis {
            CutAxis::Uy => af.at(c, i).norm(),
            CutAxis::Uz => af.at(i, c).norm(),
        })
        .collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegeneratePattern("cut is identically zero".into()));
    }
    Ok(UCut {
        axis,
        u: af.grid.axis.clone(),
        db: mags.iter().map(|m| to_db(*m, max)).collect(),
    })
}

/// Two largest side-lobe levels of a cut, in dB below its peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SllPeaks {
    pub first_db: Option<f64>,
    pub second_db: Option<f64>,
    /// Fewer than two distinct side lobes were found.
    pub shortfall: bool,
}

fn peak_index(db: &[f64]) -> usize {
    let c = db.len() / 2;
    let mut best = 0;
    for i in 0..db.len() {
        let better = db[i] > db[best] || (db[i] == db[best] && i.abs_diff(c) < best.abs_diff(c));
        if better {
            best = i;
        }
    }
    best
}

/// Indices of the nulls bounding the main lobe around `peak`.
fn main_lobe_bounds(db: &[f64], peak: usize) -> (usize, usize) {
    let mut lo = peak;
    while lo > 0 && db[lo - 1] <= db[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < db.len() && db[hi + 1] <= db[hi] {
        hi += 1;
    }
    (lo, hi)
}

/// Side-lobe peaks outside the first nulls around the main peak.
///
/// Only interior local maxima count (a lobe cut by the grid edge has no
/// measurable peak). Each peak is refined by a parabola through its three
/// samples. Cuts through the origin are symmetric, so a peak and its mirror
/// image at the same level are one lobe.
pub fn sll_peaks(db: &[f64]) -> SllPeaks {
    let none = SllPeaks {
        first_db: None,
        second_db: None,
        shortfall: true,
    };
    if db.len() < 3 {
        return none;
    }
    let peak = peak_index(db);
    let (lo, hi) = main_lobe_bounds(db, peak);
    let top = db[peak];
    let mut found: Vec<(usize, f64)> = Vec::new();
    for j in (1..db.len() - 1).filter(|j| *j < lo || *j > hi) {
        let (a, b, c) = (db[j - 1], db[j], db[j + 1]);
        if b > a && b >= c {
            let curv = a - 2.0 * b + c;
            let level = if curv < 0.0 {
                let delta = 0.5 * (a - c) / curv;
                b - 0.25 * (a - c) * delta
            } else {
                b
            };
            found.push((j, level - top));
        }
    }
    found.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let last = db.len() - 1;
    let mut lobes: Vec<(usize, f64)> = Vec::new();
    for (j, level) in found {
        let mirrored = lobes
            .iter()
            .any(|(k, l)| *k + j == last && (l - level).abs() <= 1e-6);
        if !mirrored {
            lobes.push((j, level));
        }
    }
    SllPeaks {
        first_db: lobes.first().map(|l| l.1),
        second_db: lobes.get(1).map(|l| l.1),
        shortfall: lobes.len() < 2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beamwidth {
    pub u_width: f64,
    /// Angular width assuming a broadside beam, `asin(u / k)` per edge.
    pub degrees: f64,
}

/// Half-power width of the main lobe by linear interpolation of the dB
/// profile between the samples bracketing each -3 dB crossing.
pub fn beamwidth_3db(cut: &UCut) -> Result<Beamwidth> {
    let db = &cut.db;
    if db.is_empty() {
        return Err(Error::NoCrossing("left"));
    }
    let peak = peak_index(db);
    let level = db[peak] - 3.0;
    let crossing = |toward: isize| -> Option<f64> {
        let mut i = peak as isize;
        loop {
            let next = i + toward;
            if next < 0 || next as usize >= db.len() {
                return None;
            }
            let (a, b) = (db[i as usize], db[next as usize]);
            if b < level {
                let t = (a - level) / (a - b);
                let (ua, ub) = (cut.u[i as usize], cut.u[next as usize]);
                return Some(ua + t * (ub - ua));
            }
            i = next;
        }
    };
    let left = crossing(-1).ok_or(Error::NoCrossing("left"))?;
    let right = crossing(1).ok_or(Error::NoCrossing("right"))?;
    let angle = |u: f64| (u / WAVENUMBER).clamp(-1.0, 1.0).asin();
    Ok(Beamwidth {
        u_width: right - left,
        degrees: (angle(right) - angle(left)).to_degrees(),
    })
}

pub const AFM_MAGIC: &[u8; 4] = b"AFM1";
const AFM_HEADER: usize = 32;
/// Upper bound on samples per axis accepted when decoding.
pub const AFM_MAX_SAMPLES: usize = 8193;

/// `AFM1` export: 32-byte header (magic, extent `f64`, samples `u64`,
/// main-lobe radius `f64`, 4 zero bytes), then `(re, im)` `f64` pairs in
/// row-major grid order. Little-endian throughout.
pub fn encode_afmap(af: &AFMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(AFM_HEADER + af.values.len() * 16);
    out.extend_from_slice(AFM_MAGIC);
    out.extend_from_slice(&af.grid.u_extent.to_le_bytes());
    out.extend_from_slice(&(af.grid.n_samples as u64).to_le_bytes());
    out.extend_from_slice(&af.grid.main_lobe_radius.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for v in &af.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_afmap(bytes: &[u8]) -> Result<AFMap> {
    if bytes.len() < AFM_HEADER {
        return Err(Error::Format("AFM1 header truncated".into()));
    }
    if &bytes[..4] != AFM_MAGIC {
        return Err(Error::Format("bad AFM1 magic".into()));
    }
    let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let extent = f(4);
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let radius = f(20);
    if n > AFM_MAX_SAMPLES as u64 {
        return Err(Error::Format(format!("{n} samples per axis exceeds {AFM_MAX_SAMPLES}")));
    }
    let n = n as usize;
    let expected = AFM_HEADER + n * n * 16;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "AFM1 body is {} bytes, expected {}",
            bytes.len() - AFM_HEADER,
            expected - AFM_HEADER
        )));
    }
    let grid = UVGrid::new(extent, n, radius).map_err(|e| Error::Format(e.to_string()))?;
    let values = bytes[AFM_HEADER..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
        .collect();
    AFMap::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_afmap(af: &AFMap, mut w: impl Write) -> Result<()> {
    w.write_all(&encode_afmap(af))?;
    Ok(())
}

pub fn read_afmap(mut r: impl Read) -> Result<AFMap> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_afmap(&buf)
}

/// CSV with header `u,db`.
pub fn write_cut_csv(cut: &UCut, mut w: impl Write) -> Result<()> {
    writeln!(w, "u,db")?;
    for (u, db) in cut.u.iter().zip(&cut.db) {
        writeln!(w, "{u},{db}")?;
    }
    Ok(())
}
