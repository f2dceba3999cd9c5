//! Scalar functions on the plane: analytic phantoms with gradients, sampled
//! grids with bilinear interpolation, and the tensor-product quadrature used
//! as the ground-truth oracle for inner products.
//!
//! Every field carries a finite effective support radius about the origin so
//! that line and ray integrals can be truncated deterministically.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::geometry::Direction;
use crate::{Error, Result};

/// Amplitude ratio treated as zero when deriving effective support radii.
const SUPPORT_CUTOFF: f64 = 1e-12;

type EvalFn = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type GradFn = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;

/// An immutable scalar function on ℝ² with an optional analytic gradient
/// and a finite effective support radius about the origin.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    support_radius: f64,
    smoothness_tag: String,
}

impl ScalarField {
    pub fn new<F>(eval: F, support_radius: f64, smoothness_tag: &str) -> Self
    where
        F: Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            eval: Arc::new(eval),
            grad: None,
            support_radius,
            smoothness_tag: smoothness_tag.to_owned(),
        }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        (self.eval)(x)
    }

    /// Analytic gradient, if one was attached.
    pub fn gradient(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Radius beyond which the field is treated as zero.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn smoothness_tag(&self) -> &str {
        &self.smoothness_tag
    }

    /// The zero field.
    pub fn zero() -> Self {
        ScalarField::new(|_| 0.0, 0.0, "zero").with_gradient(|_| [0.0, 0.0])
    }

    /// Isotropic Gaussian `amp·exp(−|x−center|²/σ²)`.
    ///
    /// With σ = 1, amp = 1 and center at the origin this is exp(−|x|²), the
    /// probe used throughout the test suite (mass π, line integrals
    /// √π·e^{−p²}).
    pub fn gaussian(center: [f64; 2], sigma: f64, amp: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gaussian".into(),
                reason: format!("sigma = {sigma}, need > 0"),
            });
        }
        if !amp.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gaussian".into(),
                reason: "amp must be finite".into(),
            });
        }
        let inv_s2 = 1.0 / (sigma * sigma);
        let c = center;
        let eval = move |x: [f64; 2]| {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            amp * (-(dx * dx + dy * dy) * inv_s2).exp()
        };
        let grad = move |x: [f64; 2]| {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            let v = amp * (-(dx * dx + dy * dy) * inv_s2).exp();
            [-2.0 * inv_s2 * dx * v, -2.0 * inv_s2 * dy * v]
        };
        let radius = center_norm(center) + sigma * (-SUPPORT_CUTOFF.ln()).sqrt();
        Ok(ScalarField::new(eval, radius, "c_infinity").with_gradient(grad))
    }

    /// Disc indicator of radius `radius` mollified with an erf profile of
    /// width `eps`: `amp/2 · erfc((r − radius)/eps)` with r = |x − center|.
    pub fn smoothed_disc(center: [f64; 2], radius: f64, eps: f64, amp: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter {
                name: "smoothed_disc".into(),
                reason: format!("radius = {radius}, need > 0"),
            });
        }
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter {
                name: "smoothed_disc".into(),
                reason: format!("eps = {eps}, need > 0"),
            });
        }
        if !amp.is_finite() {
            return Err(Error::InvalidParameter {
                name: "smoothed_disc".into(),
                reason: "amp must be finite".into(),
            });
        }
        let c = center;
        let eval = move |x: [f64; 2]| {
            let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
            0.5 * amp * libm::erfc((r - radius) / eps)
        };
        let grad = move |x: [f64; 2]| {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            let r = (dx * dx + dy * dy).sqrt();
            if r < 1e-12 {
                return [0.0, 0.0];
            }
            let z = (r - radius) / eps;
            // d/dr of amp/2·erfc(z) = −amp·e^{−z²}/(√π·eps)
            let dr = -amp * (-z * z).exp() / (std::f64::consts::PI.sqrt() * eps);
            [dr * dx / r, dr * dy / r]
        };
        // erfc falls below the support cutoff about 5.2 widths past the edge.
        let radius_eff = center_norm(center) + radius + 5.2 * eps;
        Ok(ScalarField::new(eval, radius_eff, "c1_mollified").with_gradient(grad))
    }

    /// Pointwise sum of two fields. The gradient is attached only when both
    /// operands have one; the support radius is the larger of the two.
    pub fn add(f: &ScalarField, g: &ScalarField) -> ScalarField {
        let (fe, ge) = (f.eval.clone(), g.eval.clone());
        let eval = move |x: [f64; 2]| fe(x) + ge(x);
        let radius = f.support_radius.max(g.support_radius);
        let tag = format!("sum({},{})", f.smoothness_tag, g.smoothness_tag);
        let out = ScalarField::new(eval, radius, &tag);
        match (f.grad.clone(), g.grad.clone()) {
            (Some(fg), Some(gg)) => out.with_gradient(move |x| {
                let a = fg(x);
                let b = gg(x);
                [a[0] + b[0], a[1] + b[1]]
            }),
            _ => out,
        }
    }

    /// Wraps a sampled grid as a bilinearly interpolated field (no gradient).
    pub fn from_grid(grid: GridField) -> ScalarField {
        let radius = grid.half_extent() * std::f64::consts::SQRT_2;
        let g = Arc::new(grid);
        ScalarField::new(move |x| g.value(x), radius, "grid_bilinear")
    }
}

fn center_norm(c: [f64; 2]) -> f64 {
    (c[0] * c[0] + c[1] * c[1]).sqrt()
}

/// Whether [`directional_derivative`] may fall back to central finite
/// differences when the field has no analytic gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientPolicy {
    RequireAnalytic,
    AllowFiniteDifference,
}

/// The derivative of `field` at `x` along the unit vector of `omega`:
/// cos ω·∂₁ + sin ω·∂₂.
///
/// The finite-difference fallback uses step h = 1e−5·max(1, |x|).
pub fn directional_derivative(
    field: &ScalarField,
    omega: Direction,
    x: [f64; 2],
    policy: GradientPolicy,
) -> Result<f64> {
    let w = omega.unit_vector();
    if let Some(g) = field.gradient(x) {
        return Ok(w[0] * g[0] + w[1] * g[1]);
    }
    if policy == GradientPolicy::RequireAnalytic {
        return Err(Error::MissingGradient);
    }
    let h = 1e-5 * (x[0] * x[0] + x[1] * x[1]).sqrt().max(1.0);
    let d1 = (field.value([x[0] + h, x[1]]) - field.value([x[0] - h, x[1]])) / (2.0 * h);
    let d2 = (field.value([x[0], x[1] + h]) - field.value([x[0], x[1] - h])) / (2.0 * h);
    Ok(w[0] * d1 + w[1] * d2)
}

/// Phantom names accepted by [`make_phantom`].
pub const PHANTOM_NAMES: [&str; 5] = [
    "gaussian",
    "smoothed_disc",
    "zero",
    "constant_disc_smoothed",
    "shifted_gaussian_mixture",
];

/// Builds a named analytic phantom from a key-value parameter map. Every
/// phantom has an analytic gradient. Unknown names and unknown or invalid
/// parameters are rejected.
///
/// Parameters (all optional, shown with defaults):
/// - `gaussian`: cx=0, cy=0, sigma=1, amp=1
/// - `smoothed_disc`: cx=0, cy=0, radius=1, eps=0.05·radius, amp=1
/// - `constant_disc_smoothed`: cx=0, cy=0, radius=3, eps=0.05·radius, amp=1
/// - `shifted_gaussian_mixture`: amp1=1, cx1=−0.8, cy1=0.4, sigma1=0.7,
///   amp2=0.6, cx2=0.9, cy2=−0.3, sigma2=0.5
/// - `zero`: no parameters
pub fn make_phantom(name: &str, params: &BTreeMap<String, f64>) -> Result<ScalarField> {
    let mut p = ParamReader::new(name, params);
    let field = match name {
        "gaussian" => {
            let cx = p.take("cx", 0.0);
            let cy = p.take("cy", 0.0);
            let sigma = p.take("sigma", 1.0);
            let amp = p.take("amp", 1.0);
            ScalarField::gaussian([cx, cy], sigma, amp)?
        }
        "smoothed_disc" | "constant_disc_smoothed" => {
            let default_radius = if name == "smoothed_disc" { 1.0 } else { 3.0 };
            let cx = p.take("cx", 0.0);
            let cy = p.take("cy", 0.0);
            let radius = p.take("radius", default_radius);
            let eps = p.take("eps", 0.05 * radius);
            let amp = p.take("amp", 1.0);
            ScalarField::smoothed_disc([cx, cy], radius, eps, amp)?
        }
        "zero" => ScalarField::zero(),
        "shifted_gaussian_mixture" => {
            let a1 = p.take("amp1", 1.0);
            let c1 = [p.take("cx1", -0.8), p.take("cy1", 0.4)];
            let s1 = p.take("sigma1", 0.7);
            let a2 = p.take("amp2", 0.6);
            let c2 = [p.take("cx2", 0.9), p.take("cy2", -0.3)];
            let s2 = p.take("sigma2", 0.5);
            let g1 = ScalarField::gaussian(c1, s1, a1)?;
            let g2 = ScalarField::gaussian(c2, s2, a2)?;
            let mut sum = ScalarField::add(&g1, &g2);
            sum.smoothness_tag = "c_infinity".into();
            sum
        }
        other => return Err(Error::UnknownPhantom(other.to_owned())),
    };
    p.finish()?;
    Ok(field)
}

/// Parses a compact phantom spec `name` or `name:key=val,key=val`.
pub fn phantom_from_spec(spec: &str) -> Result<ScalarField> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        for piece in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = piece
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter {
                    name: name.to_owned(),
                    reason: format!("expected key=value, got `{piece}`"),
                })?;
            let value: f64 = v.trim().parse().map_err(|_| Error::InvalidParameter {
                name: name.to_owned(),
                reason: format!("`{}` is not a number", v.trim()),
            })?;
            params.insert(k.trim().to_owned(), value);
        }
    }
    make_phantom(name, &params)
}

struct ParamReader<'a> {
    name: &'a str,
    params: &'a BTreeMap<String, f64>,
    used: Vec<&'a str>,
}

impl<'a> ParamReader<'a> {
    fn new(name: &'a str, params: &'a BTreeMap<String, f64>) -> Self {
        ParamReader {
            name,
            params,
            used: Vec::new(),
        }
    }

    fn take(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        self.params.get(key).copied().unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        for key in self.params.keys() {
            if !self.used.iter().any(|u| u == key) {
                return Err(Error::InvalidParameter {
                    name: self.name.to_owned(),
                    reason: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}

/// Tensor-product composite Simpson quadrature of `field` over the box
/// `[lo[0], hi[0]] × [lo[1], hi[1]]` with `n` intervals per axis (rounded up
/// to even). This is the oracle used to validate the pairing formulas.
pub fn integrate_2d(field: &ScalarField, lo: [f64; 2], hi: [f64; 2], n: usize) -> Result<f64> {
    if n < 16 {
        return Err(Error::InvalidConfig(format!(
            "integrate_2d needs n >= 16, got {n}"
        )));
    }
    let finite = lo.iter().chain(&hi).all(|v| v.is_finite());
    if !finite || hi[0] <= lo[0] || hi[1] <= lo[1] {
        return Err(Error::InvalidConfig("degenerate integration box".into()));
    }
    let n = n + n % 2;
    let hx = (hi[0] - lo[0]) / n as f64;
    let hy = (hi[1] - lo[1]) / n as f64;
    let w1 = |i: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for iy in 0..=n {
        let y = lo[1] + iy as f64 * hy;
        let wy = w1(iy);
        let mut row = 0.0;
        for ix in 0..=n {
            let x = lo[0] + ix as f64 * hx;
            row += w1(ix) * field.value([x, y]);
        }
        total += wy * row;
    }
    Ok(total * hx * hy / 9.0)
}

/// A scalar field sampled on a uniform grid over [−L, L]², evaluated by
/// bilinear interpolation and zero outside the extent. Storage is y-major:
/// `values[iy·n_x + ix]` with node (ix, iy) at
/// (−L + ix·2L/(n_x−1), −L + iy·2L/(n_y−1)).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    n_x: usize,
    n_y: usize,
    half_extent: f64,
    values: Vec<f64>,
}

const AFG1_MAGIC: &[u8; 4] = b"AFG1";

impl GridField {
    pub fn new(n_x: usize, n_y: usize, half_extent: f64, values: Vec<f64>) -> Result<Self> {
        if n_x < 2 || n_y < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid {n_x}x{n_y}, need at least 2 nodes per axis"
            )));
        }
        if half_extent <= 0.0 || !half_extent.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half extent = {half_extent}, need > 0"
            )));
        }
        if values.len() != n_x * n_y {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {n_x}x{n_y} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid value".into()));
        }
        Ok(GridField {
            n_x,
            n_y,
            half_extent,
            values,
        })
    }

    pub fn zeros(n_x: usize, n_y: usize, half_extent: f64) -> Result<Self> {
        GridField::new(n_x, n_y, half_extent, vec![0.0; n_x * n_y])
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n_x + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.n_x + ix] = v;
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        -self.half_extent + ix as f64 * 2.0 * self.half_extent / (self.n_x - 1) as f64
    }

    pub fn node_y(&self, iy: usize) -> f64 {
        -self.half_extent + iy as f64 * 2.0 * self.half_extent / (self.n_y - 1) as f64
    }

    /// Bilinear interpolation; exactly the stored value at grid nodes and
    /// zero outside [−L, L]².
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let l = self.half_extent;
        if x[0] < -l || x[0] > l || x[1] < -l || x[1] > l {
            return 0.0;
        }
        let fx = (x[0] + l) * (self.n_x - 1) as f64 / (2.0 * l);
        let fy = (x[1] + l) * (self.n_y - 1) as f64 / (2.0 * l);
        let ix = (fx.floor() as usize).min(self.n_x - 2);
        let iy = (fy.floor() as usize).min(self.n_y - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v00 = self.get(ix, iy);
        let v10 = self.get(ix + 1, iy);
        let v01 = self.get(ix, iy + 1);
        let v11 = self.get(ix + 1, iy + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Writes the field in the AFG1 format: magic `AFG1`, little-endian
    /// u32 n_x, u32 n_y, f64 half extent, then n_x·n_y f64 values y-major.
    pub fn write_afg1<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(AFG1_MAGIC)?;
        w.write_all(
            &u32::try_from(self.n_x)
                .map_err(|_| Error::BadFormat("grid dimension exceeds u32".into()))?
                .to_le_bytes(),
        )?;
        w.write_all(
            &u32::try_from(self.n_y)
                .map_err(|_| Error::BadFormat("grid dimension exceeds u32".into()))?
                .to_le_bytes(),
        )?;
        w.write_all(&self.half_extent.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a field written by [`GridField::write_afg1`].
    pub fn read_afg1<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != AFG1_MAGIC {
            return Err(Error::BadFormat(format!(
                "bad magic {:?}, expected AFG1",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n_x = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let n_y = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let half_extent = f64::from_le_bytes(b8);
        if n_x < 2 || n_y < 2 || n_x.saturating_mul(n_y) > (1 << 28) {
            return Err(Error::BadFormat(format!("implausible grid {n_x}x{n_y}")));
        }
        let mut values = Vec::with_capacity(n_x * n_y);
        for _ in 0..n_x * n_y {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        GridField::new(n_x, n_y, half_extent, values).map_err(|e| Error::BadFormat(e.to_string()))
    }

    pub fn save_afg1(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_afg1(std::io::BufWriter::new(f))
    }

    pub fn load_afg1(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        GridField::read_afg1(std::io::BufReader::new(f))
    }

    /// Writes an 8-bit binary PGM (P5) image of the field, min-max
    /// normalized. Row order is top-down, so the first pixel row is the
    /// y = +half_extent edge; a constant field renders as all zeros.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.n_x, self.n_y)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        let mut row = vec![0u8; self.n_x];
        for iy in (0..self.n_y).rev() {
            for (ix, px) in row.iter_mut().enumerate() {
                *px = if span > 0.0 {
                    ((self.get(ix, iy) - lo) / span * 255.0).round() as u8
                } else {
                    0
                };
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    pub fn save_pgm(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_pgm(std::io::BufWriter::new(f))
    }
}
