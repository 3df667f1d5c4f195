//! Dense MLP with tanh hidden layers, manual backpropagation, orthogonal
//! initialization, and adaptive-moment gradient descent. Everything is f64
//! and single-threaded, so parameter trajectories are bit-reproducible.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One standard normal draw (Box-Muller).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Gaussian matrix with orthonormalized rows or columns (whichever fit),
/// scaled by `gain`.
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Array2<f64> {
    let mut g = Array2::from_shape_fn((rows, cols), |_| standard_normal(rng));
    let transpose = rows < cols;
    let mut m = if transpose { g.t().to_owned() } else { g.clone() };
    // Modified Gram-Schmidt over columns.
    let (r, c) = m.dim();
    for j in 0..c {
        for k in 0..j {
            let dot = (0..r).map(|i| m[[i, j]] * m[[i, k]]).sum::<f64>();
            for i in 0..r {
                m[[i, j]] -= dot * m[[i, k]];
            }
        }
        let norm = (0..r).map(|i| m[[i, j]] * m[[i, j]]).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for i in 0..r {
                m[[i, j]] /= norm;
            }
        }
    }
    g = if transpose { m.t().to_owned() } else { m };
    g * gain
}

/// One dense layer; weights are (inputs x outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Per-layer gradients, matching [`Dense`] shapes.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

/// MLP with tanh on hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Cached activations of one forward pass: the input followed by each
/// layer's post-activation output.
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("nonempty")
    }
}

impl Mlp {
    /// Build from layer sizes with orthogonal weights: gain sqrt(2) on hidden
    /// layers, `head_gain` on the output layer, zero biases.
    pub fn orthogonal_init(sizes: &[usize], head_gain: f64, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for i in 0..sizes.len() - 1 {
            let last = i == sizes.len() - 2;
            let gain = if last { head_gain } else { 2.0f64.sqrt() };
            layers.push(Dense {
                w: orthogonal(sizes[i], sizes[i + 1], gain, rng),
                b: Array1::zeros(sizes[i + 1]),
            });
        }
        Mlp { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.nrows()];
        s.extend(self.layers.iter().map(|l| l.w.ncols()));
        s
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_cache(x).activations.pop().expect("nonempty")
    }

    pub fn forward_cache(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.w) + &layer.b;
            if i + 1 < self.layers.len() {
                z.mapv_inplace(f64::tanh);
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Backpropagate `dout` (gradient w.r.t. the linear output) through the
    /// cached pass; returns per-layer gradients.
    pub fn backward(&self, cache: &ForwardCache, dout: Array2<f64>) -> Vec<LayerGrads> {
        let n = self.layers.len();
        let mut grads: Vec<Option<LayerGrads>> = (0..n).map(|_| None).collect();
        let mut dz = dout;
        for l in (0..n).rev() {
            let a_prev = &cache.activations[l];
            let dw = a_prev.t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            if l > 0 {
                let da = dz.dot(&self.layers[l].w.t());
                // d tanh(z) = 1 - tanh(z)^2, with tanh(z) cached as the activation.
                let a = &cache.activations[l];
                dz = da * a.mapv(|v| 1.0 - v * v);
            }
            grads[l] = Some(LayerGrads { dw, db });
        }
        grads.into_iter().map(|g| g.expect("filled")).collect()
    }

    /// All parameters flattened (per layer: row-major weights, then biases).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = flat[i];
                i += 1;
            }
            for b in l.b.iter_mut() {
                *b = flat[i];
                i += 1;
            }
        }
        assert_eq!(i, flat.len());
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }
}

/// Adaptive-moment estimation over an [`Mlp`]'s parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros = |l: &Dense| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.dim()));
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: net.layers.iter().map(zeros).collect(),
            v: net.layers.iter().map(zeros).collect(),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &[LayerGrads]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (l, g)) in net.layers.iter_mut().zip(grads).enumerate() {
            let (mw, mb) = &mut self.m[i];
            let (vw, vb) = &mut self.v[i];
            mw.zip_mut_with(&g.dw, |m, &gr| *m = self.beta1 * *m + (1.0 - self.beta1) * gr);
            vw.zip_mut_with(&g.dw, |v, &gr| *v = self.beta2 * *v + (1.0 - self.beta2) * gr * gr);
            mb.zip_mut_with(&g.db, |m, &gr| *m = self.beta1 * *m + (1.0 - self.beta1) * gr);
            vb.zip_mut_with(&g.db, |v, &gr| *v = self.beta2 * *v + (1.0 - self.beta2) * gr * gr);
            ndarray::Zip::from(&mut l.w).and(&*mw).and(&*vw).for_each(|p, &m, &v| {
                *p -= self.lr * (m / bc1) / ((v / bc2).sqrt() + self.eps);
            });
            ndarray::Zip::from(&mut l.b).and(&*mb).and(&*vb).for_each(|p, &m, &v| {
                *p -= self.lr * (m / bc1) / ((v / bc2).sqrt() + self.eps);
            });
        }
    }
}

/// Serialized network: layer sizes header plus row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpBlob {
    pub sizes: Vec<usize>,
    pub layers: Vec<LayerBlob>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerBlob {
    pub rows: usize,
    pub cols: usize,
    /// Row-major weights, rows x cols.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl From<&Mlp> for MlpBlob {
    fn from(net: &Mlp) -> Self {
        MlpBlob {
            sizes: net.sizes(),
            layers: net
                .layers
                .iter()
                .map(|l| LayerBlob {
                    rows: l.w.nrows(),
                    cols: l.w.ncols(),
                    w: l.w.iter().copied().collect(),
                    b: l.b.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&MlpBlob> for Mlp {
    type Error = String;

    fn try_from(blob: &MlpBlob) -> Result<Self, String> {
        let mut layers = Vec::with_capacity(blob.layers.len());
        for l in &blob.layers {
            let w = Array2::from_shape_vec((l.rows, l.cols), l.w.clone())
                .map_err(|e| format!("bad weight shape: {e}"))?;
            if l.b.len() != l.cols {
                return Err("bias length does not match layer width".to_string());
            }
            layers.push(Dense { w, b: Array1::from_vec(l.b.clone()) });
        }
        if layers.is_empty() {
            return Err("empty network".to_string());
        }
        Ok(Mlp { layers })
    }
}
