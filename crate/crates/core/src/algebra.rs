//! Monoidal elements and per-axis block-rotation operators.
//!
//! An element carries a content vector and an integer extent along every
//! axis. Composing `x` with `y` along axis `i` yields
//! `(x.content + R_i^{n_i} y.content, n_i + m_i)`, where `n_i` is the extent
//! of `x` along that axis. Operators are direct sums of 2×2 planar rotations,
//! so powers reduce to angle scaling and any two operators over the same
//! block partition commute.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid, Error, Result};

/// Maximum content deviation tolerated by [`check_interchange`].
pub const INTERCHANGE_TOLERANCE: f64 = 1e-9;

/// Reduces an angle into `[0, 2π)`.
#[inline]
pub fn reduce_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// The rotation angles of one axis operator, one per 2×2 block.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationAngles(Vec<f64>);

impl RotationAngles {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(invalid("rotation angle list must not be empty"));
        }
        if let Some(k) = angles.iter().position(|a| !a.is_finite()) {
            return Err(invalid(format!("rotation angle {k} is not finite")));
        }
        Ok(Self(angles))
    }

    pub fn zeros(blocks: usize) -> Result<Self> {
        Self::new(vec![0.0; blocks])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Number of 2×2 blocks.
    pub fn blocks(&self) -> usize {
        self.0.len()
    }

    /// Embedding dimension `d = 2 × blocks`.
    pub fn dim(&self) -> usize {
        2 * self.0.len()
    }

    /// Every angle multiplied by `n`, reduced mod 2π.
    pub fn scaled(&self, n: u64) -> Self {
        Self(self.0.iter().map(|&a| reduce_angle(a * n as f64)).collect())
    }
}

/// Returns the planar rotation `[[cos φ, −sin φ], [sin φ, cos φ]]`.
pub fn block_rotation(phi: f64) -> Result<[[f64; 2]; 2]> {
    if !phi.is_finite() {
        return Err(invalid("rotation angle is not finite"));
    }
    let (s, c) = phi.sin_cos();
    Ok([[c, -s], [s, c]])
}

#[inline]
fn rotate(c: f64, s: f64, x: f64, y: f64) -> (f64, f64) {
    (c * x - s * y, s * x + c * y)
}

/// Anything that can act on a content vector as the `n`-th power of an axis
/// operator. Implemented by the block-rotation [`AxisOperator`] and by the
/// general [`DenseOperator`] used to probe the interchange law.
pub trait AxisAction {
    fn dim(&self) -> usize;

    /// Computes `Rⁿ v`.
    fn apply_power(&self, n: u64, v: &[f64]) -> Result<Vec<f64>>;
}

/// A block-diagonal orthogonal operator made of `d/2` planar rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOperator {
    angles: RotationAngles,
}

impl AxisOperator {
    pub fn new(angles: RotationAngles) -> Self {
        Self { angles }
    }

    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        RotationAngles::new(angles).map(Self::new)
    }

    /// The identity operator on an even dimension `dim`.
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(invalid(format!(
                "operator dimension must be even and positive, got {dim}"
            )));
        }
        RotationAngles::zeros(dim / 2).map(Self::new)
    }

    pub fn dim(&self) -> usize {
        self.angles.dim()
    }

    pub fn angles(&self) -> &RotationAngles {
        &self.angles
    }

    /// The induced `d × d` matrix.
    pub fn to_dense(&self) -> DenseOperator {
        let d = self.dim();
        let mut data = vec![0.0; d * d];
        for (k, &phi) in self.angles.as_slice().iter().enumerate() {
            let (s, c) = phi.sin_cos();
            let r = 2 * k;
            data[r * d + r] = c;
            data[r * d + r + 1] = -s;
            data[(r + 1) * d + r] = s;
            data[(r + 1) * d + r + 1] = c;
        }
        DenseOperator { dim: d, data }
    }
}

/// `opⁿ`, computed by scaling each block angle by `n`.
pub fn operator_power(op: &AxisOperator, n: u64) -> AxisOperator {
    AxisOperator::new(op.angles.scaled(n))
}

/// Rotates each 2-dimensional block of `v` by the corresponding angle.
pub fn apply_operator(op: &AxisOperator, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != op.dim() {
        return Err(invalid(format!(
            "vector length {} does not match operator dimension {}",
            v.len(),
            op.dim()
        )));
    }
    let mut out = vec![0.0; v.len()];
    for (k, &phi) in op.angles.as_slice().iter().enumerate() {
        let (s, c) = phi.sin_cos();
        let (a, b) = rotate(c, s, v[2 * k], v[2 * k + 1]);
        out[2 * k] = a;
        out[2 * k + 1] = b;
    }
    Ok(out)
}

impl AxisAction for AxisOperator {
    fn dim(&self) -> usize {
        AxisOperator::dim(self)
    }

    fn apply_power(&self, n: u64, v: &[f64]) -> Result<Vec<f64>> {
        apply_operator(&operator_power(self, n), v)
    }
}

/// A general square matrix acting as an axis operator, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(invalid(format!(
                "dense operator needs {dim}×{dim} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// A seeded orthogonal matrix with no block structure, obtained by
    /// Gram–Schmidt orthonormalization of a Gaussian matrix.
    pub fn random_orthogonal(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dense operator dimension must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
        while cols.len() < dim {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            for q in &cols {
                let proj = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
            }
            let norm = dot(&v, &v).sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        let mut data = vec![0.0; dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                data[i * dim + j] = x;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dim != other.dim {
            return Err(invalid("dense operator dimensions differ"));
        }
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(DenseOperator { dim: d, data })
    }

    pub fn transpose(&self) -> DenseOperator {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j];
            }
        }
        DenseOperator { dim: d, data }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(invalid(format!(
                "vector length {} does not match operator dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.dim)
            .map(|row| dot(row, v))
            .collect())
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AxisAction for DenseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_power(&self, n: u64, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = v.to_vec();
        for _ in 0..n {
            out = self.apply(&out)?;
        }
        Ok(out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A content vector together with its extent along every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoidalElement {
    content: Vec<f64>,
    extents: Vec<u64>,
}

impl MonoidalElement {
    pub fn new(content: Vec<f64>, extents: Vec<u64>) -> Result<Self> {
        if content.is_empty() {
            return Err(invalid("element content must not be empty"));
        }
        if extents.is_empty() {
            return Err(invalid("element needs at least one axis"));
        }
        Ok(Self { content, extents })
    }

    /// The unit: zero content and zero extent on every axis.
    pub fn identity(dim: usize, axes: usize) -> Self {
        Self {
            content: vec![0.0; dim],
            extents: vec![0; axes],
        }
    }

    /// A single cell: extent 1 along every axis.
    pub fn cell(content: Vec<f64>, axes: usize) -> Result<Self> {
        Self::new(content, vec![1; axes])
    }

    pub fn content(&self) -> &[f64] {
        &self.content
    }

    pub fn extents(&self) -> &[u64] {
        &self.extents
    }

    pub fn dim(&self) -> usize {
        self.content.len()
    }

    pub fn is_identity(&self) -> bool {
        self.extents.iter().all(|&n| n == 0) && self.content.iter().all(|&c| c == 0.0)
    }
}

/// Composes `x` followed by `y` along `axis`.
///
/// The identity element is a two-sided unit and skips the extent check.
/// Any other pair must agree on every extent except the one along `axis`.
pub fn compose_axis(
    x: &MonoidalElement,
    y: &MonoidalElement,
    axis: usize,
    ops: &[&dyn AxisAction],
) -> Result<MonoidalElement> {
    let axes = x.extents.len();
    if y.extents.len() != axes {
        return Err(invalid(format!(
            "elements have {} and {} axes",
            axes,
            y.extents.len()
        )));
    }
    if ops.len() != axes {
        return Err(invalid(format!(
            "{} operators supplied for {} axes",
            ops.len(),
            axes
        )));
    }
    if axis >= axes {
        return Err(invalid(format!("axis {axis} out of range for {axes} axes")));
    }
    let d = x.dim();
    if y.dim() != d {
        return Err(invalid(format!(
            "content dimensions differ: {} vs {}",
            d,
            y.dim()
        )));
    }
    if let Some(op) = ops.iter().find(|op| op.dim() != d) {
        return Err(invalid(format!(
            "operator dimension {} does not match content dimension {d}",
            op.dim()
        )));
    }

    if x.is_identity() {
        return Ok(y.clone());
    }
    if y.is_identity() {
        return Ok(x.clone());
    }

    for j in (0..axes).filter(|&j| j != axis) {
        if x.extents[j] != y.extents[j] {
            return Err(Error::Composition {
                axis,
                offending_axis: j,
                left: x.extents[j],
                right: y.extents[j],
            });
        }
    }

    let shifted = ops[axis].apply_power(x.extents[axis], &y.content)?;
    let content = x.content.iter().zip(&shifted).map(|(a, b)| a + b).collect();
    let mut extents = x.extents.clone();
    extents[axis] += y.extents[axis];
    Ok(MonoidalElement { content, extents })
}

/// `Σ_t Rᵗ v_t` for a one-axis sequence.
pub fn embed_sequence<V: AsRef<[f64]>>(elements: &[V], op: &AxisOperator) -> Result<Vec<f64>> {
    if elements.is_empty() {
        return Err(invalid("cannot embed an empty sequence"));
    }
    let d = op.dim();
    let mut acc = vec![0.0; d];
    for (t, v) in elements.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != d {
            return Err(invalid(format!(
                "element {t} has length {}, expected {d}",
                v.len()
            )));
        }
        for (k, &theta) in op.angles.as_slice().iter().enumerate() {
            let (s, c) = reduce_angle(theta * t as f64).sin_cos();
            let (a, b) = rotate(c, s, v[2 * k], v[2 * k + 1]);
            acc[2 * k] += a;
            acc[2 * k + 1] += b;
        }
    }
    Ok(acc)
}

/// Outcome of an interchange-law probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterchangeReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub extents_match: bool,
    pub samples: usize,
}

/// Evaluates `(x ∘_a y) ∘_b (z ∘_a w)` against `(x ∘_b z) ∘_a (y ∘_b w)` on
/// seeded random 2×2 arrangements, with `op_a` acting on axis 0 and `op_b`
/// on axis 1.
pub fn check_interchange(
    op_a: &dyn AxisAction,
    op_b: &dyn AxisAction,
    samples: usize,
    seed: u64,
) -> Result<InterchangeReport> {
    let d = op_a.dim();
    if op_b.dim() != d {
        return Err(invalid(format!(
            "operator dimensions differ: {} vs {}",
            d,
            op_b.dim()
        )));
    }
    let ops: [&dyn AxisAction; 2] = [op_a, op_b];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = Uniform::new_inclusive(1u64, 4).expect("valid range");
    let random_content =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..d).map(|_| StandardNormal.sample(rng)).collect() };

    let mut max_deviation = 0.0f64;
    let mut extents_match = true;
    for _ in 0..samples {
        // x y
        // z w   with widths (left, right) and heights (top, bottom)
        let left = extent.sample(&mut rng);
        let right = extent.sample(&mut rng);
        let top = extent.sample(&mut rng);
        let bottom = extent.sample(&mut rng);
        let x = MonoidalElement::new(random_content(&mut rng), vec![left, top])?;
        let y = MonoidalElement::new(random_content(&mut rng), vec![right, top])?;
        let z = MonoidalElement::new(random_content(&mut rng), vec![left, bottom])?;
        let w = MonoidalElement::new(random_content(&mut rng), vec![right, bottom])?;

        let rows_first = compose_axis(
            &compose_axis(&x, &y, 0, &ops)?,
            &compose_axis(&z, &w, 0, &ops)?,
            1,
            &ops,
        )?;
        let cols_first = compose_axis(
            &compose_axis(&x, &z, 1, &ops)?,
            &compose_axis(&y, &w, 1, &ops)?,
            0,
            &ops,
        )?;
        let dev = rows_first
            .content
            .iter()
            .zip(&cols_first.content)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_deviation = max_deviation.max(dev);
        extents_match &= rows_first.extents == cols_first.extents;
    }

    Ok(InterchangeReport {
        passed: extents_match && max_deviation < INTERCHANGE_TOLERANCE,
        max_deviation,
        extents_match,
        samples,
    })
}
