use crate::algebra::{reduce_angle, RotationAngles};
use crate::embedding::{AngleGradient, EmbeddingPlan, Image, ImageEmbedder};
use crate::error::{invalid, Result};

use super::linear::{LinearGrad, LinearHead};
use super::loss::softmax_cross_entropy;
use crate::data::NUM_CLASSES;

/// Monoidal image embedding followed by a linear softmax head.
#[derive(Debug, Clone)]
pub struct MonoidalModel {
    embedder: ImageEmbedder,
    plan: EmbeddingPlan,
    rows: usize,
    cols: usize,
    pub head: LinearHead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonoidalGrad {
    pub head: LinearGrad,
    pub angles: AngleGradient,
}

impl MonoidalGrad {
    pub fn zeros(dim: usize) -> Self {
        Self {
            head: LinearGrad::zeros(dim),
            angles: AngleGradient::zeros(dim / 2),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.head.scale(s);
        self.angles
            .d_theta_x
            .iter_mut()
            .chain(&mut self.angles.d_theta_y)
            .for_each(|g| *g *= s);
    }
}

impl MonoidalModel {
    pub fn new(
        embedder: ImageEmbedder,
        head: LinearHead,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        if head.inputs() != embedder.dim() {
            return Err(invalid(format!(
                "head expects {} inputs, embedder produces {}",
                head.inputs(),
                embedder.dim()
            )));
        }
        let plan = EmbeddingPlan::new(&embedder, rows, cols);
        Ok(Self {
            embedder,
            plan,
            rows,
            cols,
            head,
        })
    }

    pub fn embedder(&self) -> &ImageEmbedder {
        &self.embedder
    }

    pub fn dim(&self) -> usize {
        self.embedder.dim()
    }

    /// Replaces both angle lists (reduced mod 2π) and refreshes the tables.
    pub fn set_angles(&mut self, theta_x: &[f64], theta_y: &[f64]) -> Result<()> {
        let tx = RotationAngles::new(theta_x.iter().map(|&a| reduce_angle(a)).collect())?;
        let ty = RotationAngles::new(theta_y.iter().map(|&a| reduce_angle(a)).collect())?;
        self.embedder = ImageEmbedder::with_basis(tx, ty, self.embedder.basis().to_vec())?;
        self.plan = EmbeddingPlan::new(&self.embedder, self.rows, self.cols);
        Ok(())
    }

    pub fn embed(&self, img: &Image) -> Result<Vec<f64>> {
        self.plan.embed(img)
    }

    pub fn logits(&self, img: &Image) -> Result<[f64; NUM_CLASSES]> {
        Ok(self.head.forward(&self.plan.embed(img)?))
    }

    /// Adds this sample's gradient to `grad` and returns its loss.
    pub fn accumulate(&self, img: &Image, label: usize, grad: &mut MonoidalGrad) -> Result<f64> {
        let e = self.plan.embed(img)?;
        let (loss, g) = softmax_cross_entropy(&self.head.forward(&e), label)?;
        self.head.accumulate(&e, &g, &mut grad.head);
        let upstream = self.head.input_gradient(&g);
        grad.angles.accumulate(&self.plan.gradient(img, &upstream)?);
        Ok(loss)
    }
}
