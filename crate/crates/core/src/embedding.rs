//! Learnable two-axis image embedding.
//!
//! Pixel `(i, j)` contributes `p_ij · R_yⁱ R_xʲ e`. The forward pass is
//! separable: each row is first reduced against the table `R_xʲ e`
//! (an `N_y × d` intermediate), then the rows are reduced with `R_yⁱ`.
//! Block `k` of the output is the projection of the image onto the
//! oscillation with phase `j·θˣ_k + i·θʸ_k`.

use crate::algebra::{apply_operator, operator_power, reduce_angle, AxisOperator, RotationAngles};
use crate::error::{invalid, Result};

/// A row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image from `rows × cols` finite pixel values. Range checks
    /// belong to normalization; arbitrary finite values are accepted so that
    /// linear combinations of images can be formed.
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        if pixels.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} pixels for a {rows}×{cols} image, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(invalid("pixel values must be finite"));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    /// `N_y`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `N_x`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.pixels[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_normalized(&self) -> bool {
        self.pixels.iter().all(|p| (0.0..=1.0).contains(p))
    }
}

/// The trainable angle pair plus the fixed per-pixel basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEmbedder {
    theta_x: RotationAngles,
    theta_y: RotationAngles,
    basis: Vec<f64>,
}

impl ImageEmbedder {
    /// Embedder with the basis vector `(1, 0)` in every block.
    pub fn new(theta_x: RotationAngles, theta_y: RotationAngles) -> Result<Self> {
        let basis = (0..theta_x.dim())
            .map(|c| if c % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        Self::with_basis(theta_x, theta_y, basis)
    }

    pub fn with_basis(
        theta_x: RotationAngles,
        theta_y: RotationAngles,
        basis: Vec<f64>,
    ) -> Result<Self> {
        if theta_x.blocks() != theta_y.blocks() {
            return Err(invalid(format!(
                "axis angle counts differ: {} vs {}",
                theta_x.blocks(),
                theta_y.blocks()
            )));
        }
        if basis.len() != theta_x.dim() {
            return Err(invalid(format!(
                "basis vector has length {}, expected {}",
                basis.len(),
                theta_x.dim()
            )));
        }
        if basis.iter().any(|b| !b.is_finite()) {
            return Err(invalid("basis vector must be finite"));
        }
        if let Some(k) = basis
            .chunks_exact(2)
            .position(|b| b[0] == 0.0 && b[1] == 0.0)
        {
            return Err(invalid(format!("basis vector is zero in block {k}")));
        }
        Ok(Self {
            theta_x,
            theta_y,
            basis,
        })
    }

    /// Embedding dimension `d`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn blocks(&self) -> usize {
        self.theta_x.blocks()
    }

    pub fn theta_x(&self) -> &RotationAngles {
        &self.theta_x
    }

    pub fn theta_y(&self) -> &RotationAngles {
        &self.theta_y
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn operator_x(&self) -> AxisOperator {
        AxisOperator::new(self.theta_x.clone())
    }

    pub fn operator_y(&self) -> AxisOperator {
        AxisOperator::new(self.theta_y.clone())
    }
}

/// `cos(t·θ_k)` and `sin(t·θ_k)` for `t < len`, stored `t`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    blocks: usize,
    len: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PhaseTable {
    pub fn new(angles: &RotationAngles, len: usize) -> Self {
        let blocks = angles.blocks();
        let mut cos = Vec::with_capacity(len * blocks);
        let mut sin = Vec::with_capacity(len * blocks);
        for t in 0..len {
            for &theta in angles.as_slice() {
                let (s, c) = reduce_angle(t as f64 * theta).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Self {
            blocks,
            len,
            cos,
            sin,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    #[inline]
    pub fn cos(&self, t: usize, k: usize) -> f64 {
        self.cos[t * self.blocks + k]
    }

    #[inline]
    pub fn sin(&self, t: usize, k: usize) -> f64 {
        self.sin[t * self.blocks + k]
    }
}

/// Gradient of a scalar loss with respect to every rotation angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGradient {
    pub d_theta_x: Vec<f64>,
    pub d_theta_y: Vec<f64>,
}

impl AngleGradient {
    pub fn zeros(blocks: usize) -> Self {
        Self {
            d_theta_x: vec![0.0; blocks],
            d_theta_y: vec![0.0; blocks],
        }
    }

    pub fn accumulate(&mut self, other: &AngleGradient) {
        self.d_theta_x
            .iter_mut()
            .zip(&other.d_theta_x)
            .for_each(|(a, b)| *a += b);
        self.d_theta_y
            .iter_mut()
            .zip(&other.d_theta_y)
            .for_each(|(a, b)| *a += b);
    }
}

/// Precomputed tables for embedding images of one fixed size.
///
/// `x_basis[j] = R_xʲ e` and `x_basis_deriv[j] = j · J R_xʲ e`, where `J`
/// is the quarter-turn in each block (the angle derivative of a rotation).
#[derive(Debug, Clone)]
pub struct EmbeddingPlan {
    rows: usize,
    cols: usize,
    dim: usize,
    y_phase: PhaseTable,
    x_basis: Vec<f64>,
    x_basis_deriv: Vec<f64>,
}

#[inline]
fn rot(c: f64, s: f64, a: f64, b: f64) -> (f64, f64) {
    (c * a - s * b, s * a + c * b)
}

#[inline]
fn rot_t(c: f64, s: f64, a: f64, b: f64) -> (f64, f64) {
    (c * a + s * b, -s * a + c * b)
}

impl EmbeddingPlan {
    pub fn new(emb: &ImageEmbedder, rows: usize, cols: usize) -> Self {
        let dim = emb.dim();
        let blocks = emb.blocks();
        let x_phase = PhaseTable::new(emb.theta_x(), cols);
        let y_phase = PhaseTable::new(emb.theta_y(), rows);
        let mut x_basis = vec![0.0; cols * dim];
        let mut x_basis_deriv = vec![0.0; cols * dim];
        for j in 0..cols {
            for k in 0..blocks {
                let (c, s) = (x_phase.cos(j, k), x_phase.sin(j, k));
                let (a, b) = rot(c, s, emb.basis[2 * k], emb.basis[2 * k + 1]);
                x_basis[j * dim + 2 * k] = a;
                x_basis[j * dim + 2 * k + 1] = b;
                x_basis_deriv[j * dim + 2 * k] = -(j as f64) * b;
                x_basis_deriv[j * dim + 2 * k + 1] = j as f64 * a;
            }
        }
        Self {
            rows,
            cols,
            dim,
            y_phase,
            x_basis,
            x_basis_deriv,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_shape(&self, img: &Image) -> Result<()> {
        if img.rows != self.rows || img.cols != self.cols {
            return Err(invalid(format!(
                "image is {}×{}, plan expects {}×{}",
                img.rows, img.cols, self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Row pass: the `N_y × d` intermediate `Σ_j p_ij R_xʲ e`.
    fn row_pass(&self, img: &Image, table: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for (i, acc) in out.chunks_exact_mut(d).enumerate() {
            for (j, &p) in img.row(i).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let basis = &table[j * d..(j + 1) * d];
                acc.iter_mut().zip(basis).for_each(|(a, b)| *a += p * b);
            }
        }
    }

    fn column_pass(&self, rows: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for (i, row) in rows.chunks_exact(d).enumerate() {
            for k in 0..d / 2 {
                let (c, s) = (self.y_phase.cos(i, k), self.y_phase.sin(i, k));
                let (a, b) = rot(c, s, row[2 * k], row[2 * k + 1]);
                out[2 * k] += a;
                out[2 * k + 1] += b;
            }
        }
    }

    pub fn embed(&self, img: &Image) -> Result<Vec<f64>> {
        self.check_shape(img)?;
        let mut rows = vec![0.0; self.rows * self.dim];
        let mut out = vec![0.0; self.dim];
        self.row_pass(img, &self.x_basis, &mut rows);
        self.column_pass(&rows, &mut out);
        Ok(out)
    }

    /// Gradient of `upstream · embed(img)` with respect to every angle.
    pub fn gradient(&self, img: &Image, upstream: &[f64]) -> Result<AngleGradient> {
        self.check_shape(img)?;
        if upstream.len() != self.dim {
            return Err(invalid(format!(
                "upstream gradient has length {}, expected {}",
                upstream.len(),
                self.dim
            )));
        }
        let d = self.dim;
        let blocks = d / 2;
        let mut grad = AngleGradient::zeros(blocks);
        if upstream.iter().all(|&u| u == 0.0) {
            return Ok(grad);
        }
        let mut rows = vec![0.0; self.rows * d];
        let mut rows_deriv = vec![0.0; self.rows * d];
        self.row_pass(img, &self.x_basis, &mut rows);
        self.row_pass(img, &self.x_basis_deriv, &mut rows_deriv);

        for i in 0..self.rows {
            let row = &rows[i * d..(i + 1) * d];
            let row_deriv = &rows_deriv[i * d..(i + 1) * d];
            for k in 0..blocks {
                let (c, s) = (self.y_phase.cos(i, k), self.y_phase.sin(i, k));
                let (u0, u1) = (upstream[2 * k], upstream[2 * k + 1]);
                // u · R(iθʸ) r  =  (R(iθʸ)ᵀ u) · r
                let (q0, q1) = rot_t(c, s, u0, u1);
                grad.d_theta_x[k] += q0 * row_deriv[2 * k] + q1 * row_deriv[2 * k + 1];
                // ∂/∂θʸ of R(iθʸ) r is i · J R(iθʸ) r, and J = [[0, −1], [1, 0]].
                let (a, b) = rot(c, s, row[2 * k], row[2 * k + 1]);
                grad.d_theta_y[k] += i as f64 * (u1 * a - u0 * b);
            }
        }
        Ok(grad)
    }
}

/// Embeds one image with the separable two-pass scheme.
pub fn embed_image(emb: &ImageEmbedder, img: &Image) -> Vec<f64> {
    EmbeddingPlan::new(emb, img.rows, img.cols)
        .embed(img)
        .expect("plan built for this image shape")
}

/// Same sum as [`embed_image`], reducing each column with `R_y` first and
/// then combining the columns with `R_x`.
pub fn embed_image_columns_first(emb: &ImageEmbedder, img: &Image) -> Vec<f64> {
    let d = emb.dim();
    let x_phase = PhaseTable::new(emb.theta_x(), img.cols);
    let y_phase = PhaseTable::new(emb.theta_y(), img.rows);
    let mut out = vec![0.0; d];
    for j in 0..img.cols {
        let mut col = vec![0.0; d];
        for i in 0..img.rows {
            let p = img.get(i, j);
            for k in 0..d / 2 {
                let (a, b) = rot(
                    y_phase.cos(i, k),
                    y_phase.sin(i, k),
                    emb.basis[2 * k],
                    emb.basis[2 * k + 1],
                );
                col[2 * k] += p * a;
                col[2 * k + 1] += p * b;
            }
        }
        for k in 0..d / 2 {
            let (a, b) = rot(
                x_phase.cos(j, k),
                x_phase.sin(j, k),
                col[2 * k],
                col[2 * k + 1],
            );
            out[2 * k] += a;
            out[2 * k + 1] += b;
        }
    }
    out
}

/// The literal double sum `Σ_i Σ_j p_ij · R_yⁱ R_xʲ e`, one term at a time.
/// Quadratic in the pixel count times `d`; meant for small images.
pub fn embed_image_oracle(emb: &ImageEmbedder, img: &Image) -> Vec<f64> {
    let rx = emb.operator_x();
    let ry = emb.operator_y();
    let mut out = vec![0.0; emb.dim()];
    for i in 0..img.rows {
        let ry_i = operator_power(&ry, i as u64);
        for j in 0..img.cols {
            let p = img.get(i, j);
            let term = apply_operator(&operator_power(&rx, j as u64), emb.basis())
                .and_then(|v| apply_operator(&ry_i, &v))
                .expect("operators share the embedding dimension");
            out.iter_mut().zip(term).for_each(|(o, t)| *o += p * t);
        }
    }
    out
}

/// `(Σ p_ij cos(j·θˣ + i·θʸ), Σ p_ij sin(j·θˣ + i·θʸ))`.
pub fn block_feature(img: &Image, theta_x: f64, theta_y: f64) -> [f64; 2] {
    let mut acc = [0.0, 0.0];
    for i in 0..img.rows {
        for j in 0..img.cols {
            let p = img.get(i, j);
            let (s, c) = (j as f64 * theta_x + i as f64 * theta_y).sin_cos();
            acc[0] += p * c;
            acc[1] += p * s;
        }
    }
    acc
}

/// Gradient of `upstream · embed_image(emb, img)` with respect to the angles.
pub fn embedding_gradient(
    emb: &ImageEmbedder,
    img: &Image,
    upstream: &[f64],
) -> Result<AngleGradient> {
    EmbeddingPlan::new(emb, img.rows, img.cols).gradient(img, upstream)
}

/// Embeds a batch of same-sized images, sharing one set of phase tables.
pub fn batch_embed(emb: &ImageEmbedder, imgs: &[Image]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = imgs.first() else {
        return Ok(Vec::new());
    };
    if let Some(bad) = imgs
        .iter()
        .position(|im| im.rows != first.rows || im.cols != first.cols)
    {
        return Err(invalid(format!(
            "ragged batch: image {bad} is {}×{}, expected {}×{}",
            imgs[bad].rows, imgs[bad].cols, first.rows, first.cols
        )));
    }
    let plan = EmbeddingPlan::new(emb, first.rows, first.cols);
    imgs.iter().map(|im| plan.embed(im)).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn angles(v: &[f64]) -> RotationAngles {
        RotationAngles::new(v.to_vec()).unwrap()
    }

    fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
        Image::new(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.random::<f64>()).collect(),
        )
        .unwrap()
    }

    fn random_embedder(rng: &mut ChaCha8Rng, blocks: usize) -> ImageEmbedder {
        let tx = (0..blocks)
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect::<Vec<_>>();
        let ty = (0..blocks)
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect::<Vec<_>>();
        ImageEmbedder::new(angles(&tx), angles(&ty)).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn construction_checks() {
        assert!(ImageEmbedder::new(angles(&[0.1]), angles(&[0.1, 0.2])).is_err());
        assert!(ImageEmbedder::with_basis(
            angles(&[0.1, 0.2]),
            angles(&[0.1, 0.2]),
            vec![1.0, 0.0, 0.0, 0.0]
        )
        .is_err());
        assert!(ImageEmbedder::with_basis(angles(&[0.1]), angles(&[0.1]), vec![1.0]).is_err());
        let emb = ImageEmbedder::new(angles(&[0.1, 0.2]), angles(&[0.3, 0.4])).unwrap();
        assert_eq!(emb.basis(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(emb.dim(), 4);
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn phase_table_is_on_unit_circle() {
        let table = PhaseTable::new(&angles(&[0.3, 2.9, -7.0]), 40);
        for t in 0..40 {
            for k in 0..3 {
                let (c, s) = (table.cos(t, k), table.sin(t, k));
                assert!((c * c + s * s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_pixel_image_embeds_to_scaled_basis() {
        let emb = ImageEmbedder::with_basis(
            angles(&[1.0, 2.0]),
            angles(&[0.5, -0.3]),
            vec![0.3, -0.1, 0.0, 2.0],
        )
        .unwrap();
        let img = Image::new(1, 1, vec![0.7]).unwrap();
        let e = embed_image(&emb, &img);
        assert!(max_diff(&e, &[0.21, -0.07, 0.0, 1.4]) < 1e-15);
        assert!(
            max_diff(
                &embed_image_oracle(&emb, &Image::new(1, 1, vec![1.0]).unwrap()),
                emb.basis()
            ) < 1e-15
        );
    }

    #[test]
    fn zero_image_embeds_to_zero() {
        let emb = ImageEmbedder::new(angles(&[1.0, 2.0]), angles(&[0.5, -0.3])).unwrap();
        let img = Image::zeros(5, 3).unwrap();
        assert_eq!(embed_image(&emb, &img), vec![0.0; 4]);
        assert_eq!(block_feature(&img, 0.3, 0.2), [0.0, 0.0]);
    }

    #[test]
    fn half_turn_cancellation() {
        let emb = ImageEmbedder::new(angles(&[0.0]), angles(&[PI])).unwrap();
        let img = Image::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(max_diff(&embed_image_oracle(&emb, &img), &[0.0, 0.0]) < 1e-15);
        assert!(max_diff(&embed_image(&emb, &img), &[0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn separable_matches_oracle_on_3x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 3, 4);
        let emb = random_embedder(&mut rng, 2);
        assert!(max_diff(&embed_image(&emb, &img), &embed_image_oracle(&emb, &img)) < 1e-9);
    }

    #[test]
    fn oracle_matches_per_block_trig_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = random_image(&mut rng, 4, 4);
        let emb = random_embedder(&mut rng, 3);
        let oracle = embed_image_oracle(&emb, &img);
        for k in 0..3 {
            let f = block_feature(
                &img,
                emb.theta_x().as_slice()[k],
                emb.theta_y().as_slice()[k],
            );
            assert!((oracle[2 * k] - f[0]).abs() < 1e-9);
            assert!((oracle[2 * k + 1] - f[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn block_feature_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 5, 5);
        let total: f64 = img.pixels().iter().sum();
        let dc = block_feature(&img, 0.0, 0.0);
        assert!((dc[0] - total).abs() < 1e-12);
        assert_eq!(dc[1], 0.0);

        // Oracle: naive double loop with explicit cos/sin of the phase.
        let (tx, ty) = (0.4, 1.3);
        let mut c = 0.0;
        let mut s = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let phase = j as f64 * tx + i as f64 * ty;
                c += img.get(i, j) * phase.cos();
                s += img.get(i, j) * phase.sin();
            }
        }
        let f = block_feature(&img, tx, ty);
        assert!((f[0] - c).abs() < 1e-12 && (f[1] - s).abs() < 1e-12);
    }

    #[test]
    fn gradient_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let emb = random_embedder(&mut rng, 2);
        let img = random_image(&mut rng, 4, 4);
        let g = embedding_gradient(&emb, &img, &[0.0; 4]).unwrap();
        assert_eq!(g, AngleGradient::zeros(2));
        let g =
            embedding_gradient(&emb, &Image::zeros(4, 4).unwrap(), &[1.0, -2.0, 0.5, 0.3]).unwrap();
        assert!(g.d_theta_x.iter().chain(&g.d_theta_y).all(|&v| v == 0.0));
        assert!(embedding_gradient(&emb, &img, &[1.0; 3]).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let emb = random_embedder(&mut rng, 2);
        let img = random_image(&mut rng, 4, 4);
        let upstream: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = embedding_gradient(&emb, &img, &upstream).unwrap();

        let objective = |tx: &[f64], ty: &[f64]| {
            let e = ImageEmbedder::new(angles(tx), angles(ty)).unwrap();
            let out = embed_image_oracle(&e, &img);
            out.iter().zip(&upstream).map(|(a, b)| a * b).sum::<f64>()
        };
        let h = 1e-5;
        let tx = emb.theta_x().as_slice().to_vec();
        let ty = emb.theta_y().as_slice().to_vec();
        for k in 0..2 {
            let (mut p, mut m) = (tx.clone(), tx.clone());
            p[k] += h;
            m[k] -= h;
            let fd = (objective(&p, &ty) - objective(&m, &ty)) / (2.0 * h);
            assert!(
                (fd - g.d_theta_x[k]).abs() <= 1e-4 * fd.abs().max(1e-2),
                "x{k}: {fd} vs {}",
                g.d_theta_x[k]
            );
            let (mut p, mut m) = (ty.clone(), ty.clone());
            p[k] += h;
            m[k] -= h;
            let fd = (objective(&tx, &p) - objective(&tx, &m)) / (2.0 * h);
            assert!(
                (fd - g.d_theta_y[k]).abs() <= 1e-4 * fd.abs().max(1e-2),
                "y{k}: {fd} vs {}",
                g.d_theta_y[k]
            );
        }
    }

    #[test]
    fn batch_embed_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let emb = random_embedder(&mut rng, 3);
        let imgs: Vec<Image> = (0..8).map(|_| random_image(&mut rng, 6, 5)).collect();
        let out = batch_embed(&emb, &imgs).unwrap();
        for (im, e) in imgs.iter().zip(&out) {
            assert_eq!(&embed_image(&emb, im), e);
        }
        let same = batch_embed(&emb, &[imgs[0].clone(), imgs[0].clone()]).unwrap();
        assert_eq!(same[0], same[1]);
        assert_eq!(
            batch_embed(&emb, &imgs[..1]).unwrap()[0],
            embed_image(&emb, &imgs[0])
        );

        let ragged = vec![imgs[0].clone(), Image::zeros(5, 6).unwrap()];
        assert!(batch_embed(&emb, &ragged).is_err());
        assert!(batch_embed(&emb, &[]).unwrap().is_empty());
    }

    #[test]
    fn plan_rejects_wrong_shape() {
        let emb = ImageEmbedder::new(angles(&[0.1]), angles(&[0.2])).unwrap();
        let plan = EmbeddingPlan::new(&emb, 3, 3);
        assert!(plan.embed(&Image::zeros(3, 4).unwrap()).is_err());
    }
}
