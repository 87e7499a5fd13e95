//! Real-valued 2D DFT features ordered from low to high frequency.
//!
//! For a real `N_y × N_x` image the complex spectrum has `N_y·N_x`
//! coefficients but only `N_y·N_x` real degrees of freedom: a frequency
//! equal to its own conjugate contributes a cosine feature, and each
//! conjugate pair contributes one cosine and one sine feature. Scaling the
//! self-conjugate features by `1/√N` and the paired ones by `√(2/N)` makes
//! the full feature map orthonormal, so it preserves energy and can be
//! inverted by its transpose.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::Image;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// One real feature: the cosine or sine projection at integer frequency
/// `(fy, fx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyDescriptor {
    pub fy: usize,
    pub fx: usize,
    pub phase: Phase,
    /// True when `(fy, fx)` is its own conjugate.
    pub self_conjugate: bool,
}

/// `min(u, n − u)`: distance of a frequency index from zero on the circle.
pub fn wrap(u: usize, n: usize) -> usize {
    u.min(n - u)
}

impl FrequencyDescriptor {
    pub fn magnitude_sq(&self, rows: usize, cols: usize) -> usize {
        let wy = wrap(self.fy, rows);
        let wx = wrap(self.fx, cols);
        wy * wy + wx * wx
    }

    fn sort_key(&self, rows: usize, cols: usize) -> (usize, usize, usize, Phase, usize, usize) {
        (
            self.magnitude_sq(rows, cols),
            wrap(self.fy, rows),
            wrap(self.fx, cols),
            self.phase,
            self.fy,
            self.fx,
        )
    }

    /// Scale that makes the basis function unit-norm.
    pub fn scale(&self, rows: usize, cols: usize) -> f64 {
        let n = (rows * cols) as f64;
        if self.self_conjugate {
            1.0 / n.sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    }
}

/// Deterministic frequency ordering for a fixed image size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumLayout {
    rows: usize,
    cols: usize,
    descriptors: Vec<FrequencyDescriptor>,
}

/// Enumerates one descriptor per real degree of freedom of an `rows × cols`
/// spectrum and sorts them by `wrap(fy)² + wrap(fx)²`, breaking ties by
/// `(wrap(fy), wrap(fx), cos before sin, fy, fx)`.
///
/// A conjugate pair is represented by its lexicographically smaller member.
pub fn build_layout(rows: usize, cols: usize) -> Result<SpectrumLayout> {
    if rows == 0 || cols == 0 {
        return Err(invalid("layout dimensions must be positive"));
    }
    let mut descriptors = Vec::with_capacity(rows * cols);
    for fy in 0..rows {
        for fx in 0..cols {
            let conj = ((rows - fy) % rows, (cols - fx) % cols);
            match (fy, fx).cmp(&conj) {
                Ordering::Equal => descriptors.push(FrequencyDescriptor {
                    fy,
                    fx,
                    phase: Phase::Cos,
                    self_conjugate: true,
                }),
                Ordering::Less => {
                    for phase in [Phase::Cos, Phase::Sin] {
                        descriptors.push(FrequencyDescriptor {
                            fy,
                            fx,
                            phase,
                            self_conjugate: false,
                        });
                    }
                }
                Ordering::Greater => {}
            }
        }
    }
    descriptors.sort_by_key(|d| d.sort_key(rows, cols));
    Ok(SpectrumLayout {
        rows,
        cols,
        descriptors,
    })
}

impl SpectrumLayout {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// True when this layout covers every degree of freedom.
    pub fn is_full(&self) -> bool {
        self.descriptors.len() == self.rows * self.cols
    }

    pub fn descriptors(&self) -> &[FrequencyDescriptor] {
        &self.descriptors
    }

    /// The first `d` descriptors.
    pub fn prefix(&self, d: usize) -> Result<SpectrumLayout> {
        if d > self.descriptors.len() {
            return Err(invalid(format!(
                "cannot keep {d} features out of {}",
                self.descriptors.len()
            )));
        }
        Ok(SpectrumLayout {
            rows: self.rows,
            cols: self.cols,
            descriptors: self.descriptors[..d].to_vec(),
        })
    }

    /// Value of the unit-norm basis function of `desc` at pixel `(i, j)`.
    pub fn basis_value(&self, desc: &FrequencyDescriptor, i: usize, j: usize) -> f64 {
        let angle = phase_angle(desc.fy * i, self.rows) + phase_angle(desc.fx * j, self.cols);
        let trig = match desc.phase {
            Phase::Cos => angle.cos(),
            Phase::Sin => angle.sin(),
        };
        desc.scale(self.rows, self.cols) * trig
    }

    /// Inverts a full-layout feature vector back into pixels.
    pub fn reconstruct(&self, values: &[f64]) -> Result<Image> {
        if !self.is_full() || values.len() != self.len() {
            return Err(invalid(
                "reconstruction needs every feature of a full layout",
            ));
        }
        let featurizer = DftFeaturizer::new(Arc::new(self.clone()));
        let mut pixels = vec![0.0; self.rows * self.cols];
        for (idx, (&v, desc)) in values.iter().zip(&self.descriptors).enumerate() {
            let (cy, sy) = (&featurizer.cos_y[desc.fy], &featurizer.sin_y[desc.fy]);
            let (cx, sx) = (&featurizer.cos_x[desc.fx], &featurizer.sin_x[desc.fx]);
            let w = v * featurizer.scales[idx];
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let t = match desc.phase {
                        Phase::Cos => cy[i] * cx[j] - sy[i] * sx[j],
                        Phase::Sin => sy[i] * cx[j] + cy[i] * sx[j],
                    };
                    pixels[i * self.cols + j] += w * t;
                }
            }
        }
        Image::new(self.rows, self.cols, pixels)
    }
}

/// `2π · (m mod n) / n`, reduced exactly in integers first.
fn phase_angle(m: usize, n: usize) -> f64 {
    TAU * (m % n) as f64 / n as f64
}

fn trig_table(freq: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|t| phase_angle(freq * t, n).sin_cos())
        .map(|(s, c)| (c, s))
        .unzip()
}

/// Feature values together with the layout that names them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Arc<SpectrumLayout>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Keeps the first `d` features in layout order.
pub fn truncate(features: &FeatureVector, d: usize) -> Result<FeatureVector> {
    if d > features.values.len() {
        return Err(invalid(format!(
            "cannot keep {d} features out of {}",
            features.values.len()
        )));
    }
    Ok(FeatureVector {
        values: features.values[..d].to_vec(),
        layout: Arc::new(features.layout.prefix(d)?),
    })
}

/// Separable feature extractor with precomputed trigonometric tables.
#[derive(Debug, Clone)]
pub struct DftFeaturizer {
    layout: Arc<SpectrumLayout>,
    cos_x: Vec<Vec<f64>>,
    sin_x: Vec<Vec<f64>>,
    cos_y: Vec<Vec<f64>>,
    sin_y: Vec<Vec<f64>>,
    scales: Vec<f64>,
    /// Distinct horizontal frequencies used by the layout.
    used_fx: Vec<usize>,
}

impl DftFeaturizer {
    pub fn new(layout: Arc<SpectrumLayout>) -> Self {
        let (rows, cols) = (layout.rows, layout.cols);
        let (cos_x, sin_x): (Vec<_>, Vec<_>) = (0..cols).map(|f| trig_table(f, cols)).unzip();
        let (cos_y, sin_y): (Vec<_>, Vec<_>) = (0..rows).map(|f| trig_table(f, rows)).unzip();
        let scales = layout
            .descriptors
            .iter()
            .map(|d| d.scale(rows, cols))
            .collect();
        let mut used_fx: Vec<usize> = layout.descriptors.iter().map(|d| d.fx).collect();
        used_fx.sort_unstable();
        used_fx.dedup();
        Self {
            layout,
            cos_x,
            sin_x,
            cos_y,
            sin_y,
            scales,
            used_fx,
        }
    }

    pub fn layout(&self) -> &Arc<SpectrumLayout> {
        &self.layout
    }

    /// Row pass over the horizontal frequencies, then one column reduction
    /// per descriptor.
    pub fn features(&self, img: &Image) -> Result<Vec<f64>> {
        let (rows, cols) = (self.layout.rows, self.layout.cols);
        if img.rows() != rows || img.cols() != cols {
            return Err(invalid(format!(
                "image is {}×{}, layout expects {rows}×{cols}",
                img.rows(),
                img.cols()
            )));
        }
        // row_cos[fx][i] = Σ_j p_ij cos(2π fx j / N_x), likewise for sin.
        let mut row_cos = vec![Vec::new(); cols];
        let mut row_sin = vec![Vec::new(); cols];
        for &fx in &self.used_fx {
            let (cx, sx) = (&self.cos_x[fx], &self.sin_x[fx]);
            let mut rc = vec![0.0; rows];
            let mut rs = vec![0.0; rows];
            for i in 0..rows {
                let row = img.row(i);
                let mut c = 0.0;
                let mut s = 0.0;
                for j in 0..cols {
                    c += row[j] * cx[j];
                    s += row[j] * sx[j];
                }
                rc[i] = c;
                rs[i] = s;
            }
            row_cos[fx] = rc;
            row_sin[fx] = rs;
        }
        let values = self
            .layout
            .descriptors
            .iter()
            .zip(&self.scales)
            .map(|(desc, &scale)| {
                let (cy, sy) = (&self.cos_y[desc.fy], &self.sin_y[desc.fy]);
                let (rc, rs) = (&row_cos[desc.fx], &row_sin[desc.fx]);
                let acc: f64 = (0..rows)
                    .map(|i| match desc.phase {
                        // cos(a + b) = cos a cos b − sin a sin b
                        Phase::Cos => cy[i] * rc[i] - sy[i] * rs[i],
                        // sin(a + b) = sin a cos b + cos a sin b
                        Phase::Sin => sy[i] * rc[i] + cy[i] * rs[i],
                    })
                    .sum();
                scale * acc
            })
            .collect();
        Ok(values)
    }

    pub fn feature_vector(&self, img: &Image) -> Result<FeatureVector> {
        Ok(FeatureVector {
            values: self.features(img)?,
            layout: Arc::clone(&self.layout),
        })
    }
}

/// Computes every feature named by `layout` for `img`.
pub fn dft2d_features(img: &Image, layout: &SpectrumLayout) -> Result<FeatureVector> {
    DftFeaturizer::new(Arc::new(layout.clone())).feature_vector(img)
}
