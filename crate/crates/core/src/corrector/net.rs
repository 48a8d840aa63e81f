//! The neural half of the hybrid stepper: latent operator, dynamic scaling
//! net, spectral normalisation and Lipschitz accounting.
//!
//! Parameters live in a flat, canonically ordered tensor list so the
//! training tape, the optimizer and the checkpoint format all agree on
//! addressing. The latent operator is
//!
//! ```text
//! encoder  (4K+1 → 128 → … → 2K, GELU on hidden layers)
//! mixing   (dense complex K×K map over the latent slots)
//! decoder  (2K → 128 → … → 2K, GELU on hidden layers, zero-init output)
//! ```
//!
//! and the scaling net is an 8-feature MLP 8→64→32→1 with GELU, layer
//! normalisation and a softplus output. Complex data crosses the real
//! layers as interleaved (Re, Im) pairs.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::rng::SplitMix64;
use crate::spectral::SpectralField;

/// Maximum slope of GELU (attained near x = √2); softplus is 1-Lipschitz.
pub const GELU_LIPSCHITZ: f64 = 1.128_904_145_185_155;

/// Designed latent-domain radius: the dynamic scaling keeps restricted
/// states inside this ball, and the bilinear mixing heads' Lipschitz
/// contribution is accounted on it.
pub const QUAD_INPUT_BOUND: f64 = 1.0;

/// Hermitian synthesis of K positive-band latent slots onto a length-4N
/// spectrum (no circular aliasing for quadratic products of bands ≤ K).
pub fn herm_synth(y: &[Complex64]) -> Vec<Complex64> {
    let k = y.len();
    let n = 4 * k;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in y.iter().enumerate() {
        out[j + 1] = v;
        out[n - 1 - j] = v.conj();
    }
    out
}

/// One bilinear mixing head with separate slot inputs.
pub fn quad_head_xy(
    x: &[Complex64],
    y: &[Complex64],
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
) -> Vec<Complex64> {
    let k = x.len();
    let fa: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(a.0[i], a.1[i]) * x[i])
        .collect();
    let fb: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(b.0[i], b.1[i]) * y[i])
        .collect();
    let mut wa = herm_synth(&fa);
    let mut wb = herm_synth(&fb);
    crate::spectral::tape_fft(&mut wa, true);
    crate::spectral::tape_fft(&mut wb, true);
    let mut prod: Vec<Complex64> = wa.iter().zip(&wb).map(|(p, q)| p * q).collect();
    crate::spectral::tape_fft(&mut prod, false);
    (0..k).map(|j| prod[j + 1]).collect()
}

/// One bilinear mixing head: filter, synthesise, multiply pointwise in the
/// conjugate domain, transform back, read the positive bands.
pub fn quad_head(
    z: &[Complex64],
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
) -> Vec<Complex64> {
    quad_head_xy(z, z, a, b)
}

/// Tight operator norm of the bilinear form behind a head, by alternating
/// materialisation: fixing one slot makes the head a real-linear map of
/// the other, whose spectral norm power iteration provides; alternating a
/// few rounds converges to the bilinear norm.
pub fn bilinear_head_norm(k: usize, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let mut y: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(1.0, 0.3 + i as f64 * 0.01))
        .collect();
    normalize_c(&mut y);
    let mut norm = 0.0;
    for round in 0..6 {
        // materialise the real-linear map of the free slot
        let first_free = round % 2 == 0;
        let mut mat = Tensor::zeros(2 * k, 2 * k);
        for j in 0..2 * k {
            let mut basis_vec = vec![Complex64::new(0.0, 0.0); k];
            if j % 2 == 0 {
                basis_vec[j / 2] = Complex64::new(1.0, 0.0);
            } else {
                basis_vec[j / 2] = Complex64::new(0.0, 1.0);
            }
            let out = if first_free {
                quad_head_xy(&basis_vec, &y, a, b)
            } else {
                quad_head_xy(&y, &basis_vec, a, b)
            };
            for (i, v) in out.iter().enumerate() {
                mat.data[(2 * i) * 2 * k + j] = v.re;
                mat.data[(2 * i + 1) * 2 * k + j] = v.im;
            }
        }
        norm = spectral_norm_estimate(&mat);
        // update the fixed slot to the maximising direction of the free map:
        // approximate with one power pass through the adjoint
        let probe = if first_free {
            quad_head_xy(&y, &y, a, b)
        } else {
            quad_head_xy(&y, &y, a, b)
        };
        let mut ny: Vec<Complex64> = probe;
        if normalize_c(&mut ny) > 0.0 {
            y = ny;
        }
    }
    norm
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn gelu_derivative(x: f64) -> f64 {
    let phi_big = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let phi_small = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    phi_big + x * phi_small
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn softplus_derivative(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub const LAYER_NORM_EPS: f64 = 1e-6;

/// Version tag of the scale-feature extraction; stored in checkpoints.
pub const FEATURE_VERSION: u32 = 1;
pub const N_SCALE_FEATURES: usize = 8;

/// Dense-tensor shape descriptor in the canonical parameter layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `y = W x` for a row-major `rows × cols` matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            y[r] = row.iter().zip(x).map(|(w, v)| w * v).sum();
        }
        y
    }

    /// `y = Wᵀ x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (yc, w) in y.iter_mut().zip(row) {
                *yc += w * x[r];
            }
        }
        y
    }
}

/// Architecture of the corrector networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub latent_dim: usize,
    pub hidden: usize,
    /// Hidden (GELU) layers in the encoder; the encoder has
    /// `enc_hidden + 1` weight matrices.
    pub enc_hidden: usize,
    /// Hidden (GELU) layers in the decoder; `dec_hidden + 1` matrices.
    pub dec_hidden: usize,
    /// Bilinear heads of the Fourier-mixing layer: each head synthesises
    /// the K latent slots onto a conjugate (physical) domain, applies a
    /// learned per-mode filter pair, multiplies pointwise, and transforms
    /// back. This is the branch that lets the mixing layer express the
    /// mode-coupling (convolution) structure of resonance defects.
    pub quad_heads: usize,
}

impl Architecture {
    pub fn new(latent_dim: usize) -> Self {
        Self {
            latent_dim,
            hidden: 128,
            enc_hidden: 3,
            dec_hidden: 3,
            quad_heads: 4,
        }
    }

    pub fn with_depth(latent_dim: usize, enc_hidden: usize, dec_hidden: usize) -> Self {
        Self {
            latent_dim,
            hidden: 128,
            enc_hidden,
            dec_hidden,
            quad_heads: 4,
        }
    }

    pub fn input_width(&self) -> usize {
        4 * self.latent_dim + 1
    }

    pub fn output_width(&self) -> usize {
        2 * self.latent_dim
    }

    fn enc_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut prev = self.input_width();
        for _ in 0..self.enc_hidden {
            dims.push((self.hidden, prev));
            prev = self.hidden;
        }
        dims.push((self.output_width(), prev));
        dims
    }

    fn dec_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut prev = self.output_width();
        for _ in 0..self.dec_hidden {
            dims.push((self.hidden, prev));
            prev = self.hidden;
        }
        dims.push((self.output_width(), prev));
        dims
    }

    /// Weight matrices entering the latent-operator Lipschitz product.
    pub fn latent_matrix_count(&self) -> usize {
        self.enc_hidden + 1 + 1 + self.dec_hidden + 1
    }

    /// GELU applications inside the latent operator.
    pub fn latent_gelu_count(&self) -> usize {
        self.enc_hidden + self.dec_hidden
    }
}

const SCALE_DIMS: [(usize, usize); 3] = [(64, N_SCALE_FEATURES), (32, 64), (1, 32)];

/// Roles in the canonical tensor layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorRole {
    EncWeight(usize),
    EncBias(usize),
    MixRe,
    MixIm,
    /// Per-mode filter pair of a bilinear mixing head (complex K-vectors).
    QuadARe(usize),
    QuadAIm(usize),
    QuadBRe(usize),
    QuadBIm(usize),
    DecWeight(usize),
    DecBias(usize),
    ScaleWeight(usize),
    ScaleBias(usize),
    ScaleLnGain(usize),
    ScaleLnBias(usize),
}

fn layout(arch: &Architecture) -> Vec<(TensorRole, usize, usize)> {
    let mut out = Vec::new();
    for (i, &(r, c)) in arch.enc_dims().iter().enumerate() {
        out.push((TensorRole::EncWeight(i), r, c));
        out.push((TensorRole::EncBias(i), r, 1));
    }
    let k = arch.latent_dim;
    out.push((TensorRole::MixRe, k, k));
    out.push((TensorRole::MixIm, k, k));
    for m in 0..arch.quad_heads {
        out.push((TensorRole::QuadARe(m), k, 1));
        out.push((TensorRole::QuadAIm(m), k, 1));
        out.push((TensorRole::QuadBRe(m), k, 1));
        out.push((TensorRole::QuadBIm(m), k, 1));
    }
    for (i, &(r, c)) in arch.dec_dims().iter().enumerate() {
        out.push((TensorRole::DecWeight(i), r, c));
        out.push((TensorRole::DecBias(i), r, 1));
    }
    for (i, &(r, c)) in SCALE_DIMS.iter().enumerate() {
        out.push((TensorRole::ScaleWeight(i), r, c));
        out.push((TensorRole::ScaleBias(i), r, 1));
        if i < 2 {
            out.push((TensorRole::ScaleLnGain(i), r, 1));
            out.push((TensorRole::ScaleLnBias(i), r, 1));
        }
    }
    out
}

/// Weights of the latent operator and scaling net, plus spectral-norm caps.
#[derive(Clone, Debug)]
pub struct CorrectorParams {
    arch: Architecture,
    tensors: Vec<Tensor>,
    roles: Vec<(TensorRole, usize, usize)>,
    pub w_max: f64,
    /// Spectral norms recorded by the last [`spectral_normalize`] pass,
    /// in normalisation order (latent dense, mixing, scaling dense).
    pub layer_norms: Vec<f64>,
}

impl CorrectorParams {
    /// Zero-initialised parameters: the corrector is exactly the zero map
    /// and the scaling net outputs `softplus(0) = ln 2`.
    pub fn zeros(arch: Architecture, w_max: f64) -> Self {
        let roles = layout(&arch);
        let tensors = roles
            .iter()
            .map(|&(_, r, c)| Tensor::zeros(r, c))
            .collect();
        Self {
            arch,
            tensors,
            roles,
            w_max,
            layer_norms: Vec::new(),
        }
    }

    /// Structured init. The decoder output layer and the scaling-net
    /// output layer stay zero so the untrained corrector is the zero map
    /// and λ starts at ln 2 (safe start). A depth-0 encoder initialises as
    /// the state-branch selector, so the mixing layer sees the latent band
    /// coefficients from the first gradient step; deeper encoders use a
    /// variance-scaled symmetric draw. Layer-norm gains start at one, the
    /// mixing layer near the identity.
    pub fn init(arch: Architecture, w_max: f64, seed: u64) -> Self {
        let mut p = Self::zeros(arch, w_max);
        let mut rng = SplitMix64::keyed(seed, 0xC0FFEE);
        let dec_out = TensorRole::DecWeight(arch.dec_hidden);
        for i in 0..p.tensors.len() {
            let (role, rows, cols) = p.roles[i];
            match role {
                TensorRole::EncWeight(0) if arch.enc_hidden == 0 => {
                    // selector of the u_c block (coordinates 2K..4K)
                    let k2 = 2 * arch.latent_dim;
                    for r in 0..rows {
                        for c in 0..cols {
                            let base = if c == r + k2 { 1.0 } else { 0.0 };
                            p.tensors[i].data[r * cols + c] =
                                base + 0.005 * rng.next_range(-1.0, 1.0);
                        }
                    }
                }
                TensorRole::EncWeight(_) | TensorRole::DecWeight(_) | TensorRole::ScaleWeight(_) => {
                    if role == dec_out || role == TensorRole::ScaleWeight(2) {
                        continue; // zero-init outputs
                    }
                    let sigma = 0.5 / (cols as f64).sqrt();
                    let a = sigma * 3f64.sqrt();
                    for v in p.tensors[i].data.iter_mut() {
                        *v = rng.next_range(-a, a);
                    }
                }
                TensorRole::MixRe => {
                    for r in 0..rows {
                        for c in 0..cols {
                            let noise = 0.02 * rng.next_range(-1.0, 1.0);
                            p.tensors[i].data[r * cols + c] =
                                if r == c { 1.0 + noise } else { noise };
                        }
                    }
                }
                TensorRole::MixIm => {
                    for v in p.tensors[i].data.iter_mut() {
                        *v = 0.02 * rng.next_range(-1.0, 1.0);
                    }
                }
                TensorRole::QuadARe(_) | TensorRole::QuadAIm(_) => {
                    for v in p.tensors[i].data.iter_mut() {
                        *v = 0.3 * rng.next_range(-1.0, 1.0);
                    }
                }
                TensorRole::ScaleLnGain(_) => {
                    for v in p.tensors[i].data.iter_mut() {
                        *v = 1.0;
                    }
                }
                _ => {}
            }
        }
        p
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn n_tensors(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut Tensor {
        &mut self.tensors[idx]
    }

    pub fn tensor_infos(&self) -> Vec<TensorInfo> {
        self.roles
            .iter()
            .map(|&(role, rows, cols)| TensorInfo {
                name: format!("{role:?}"),
                rows,
                cols,
            })
            .collect()
    }

    pub fn index_of(&self, role: TensorRole) -> usize {
        self.roles
            .iter()
            .position(|&(r, _, _)| r == role)
            .expect("role present in layout")
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn total_len(&self) -> usize {
        self.parameter_count()
    }

    /// Copy all parameters into one flat vector (canonical order).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for t in &self.tensors {
            out.extend_from_slice(&t.data);
        }
        out
    }

    /// Overwrite all parameters from a flat vector (canonical order).
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.total_len() {
            return Err(CoreError::Dimension {
                expected: self.total_len(),
                got: flat.len(),
            });
        }
        let mut off = 0;
        for t in self.tensors.iter_mut() {
            let len = t.data.len();
            t.data.copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        Ok(())
    }

    fn enc_layer(&self, i: usize) -> (&Tensor, &Tensor) {
        (
            &self.tensors[self.index_of(TensorRole::EncWeight(i))],
            &self.tensors[self.index_of(TensorRole::EncBias(i))],
        )
    }

    fn dec_layer(&self, i: usize) -> (&Tensor, &Tensor) {
        (
            &self.tensors[self.index_of(TensorRole::DecWeight(i))],
            &self.tensors[self.index_of(TensorRole::DecBias(i))],
        )
    }

    fn mixing(&self) -> (&Tensor, &Tensor) {
        (
            &self.tensors[self.index_of(TensorRole::MixRe)],
            &self.tensors[self.index_of(TensorRole::MixIm)],
        )
    }

    /// Encoder stage alone: the complex latent vector entering the
    /// mixing layer.
    pub fn encoder_latent(
        &self,
        r_c: &[Complex64],
        u_c: &[Complex64],
        tau: f64,
    ) -> Result<Vec<Complex64>> {
        let k = self.arch.latent_dim;
        if r_c.len() != k || u_c.len() != k {
            return Err(CoreError::Dimension {
                expected: k,
                got: r_c.len().max(u_c.len()),
            });
        }
        let mut x = Vec::with_capacity(self.arch.input_width());
        for z in r_c {
            x.push(z.re);
            x.push(z.im);
        }
        for z in u_c {
            x.push(z.re);
            x.push(z.im);
        }
        x.push(tau);
        for i in 0..=self.arch.enc_hidden {
            let (w, b) = self.enc_layer(i);
            let mut y = w.matvec(&x);
            for (v, bi) in y.iter_mut().zip(&b.data) {
                *v += bi;
            }
            if i < self.arch.enc_hidden {
                for v in y.iter_mut() {
                    *v = gelu(*v);
                }
            }
            x = y;
        }
        Ok((0..k)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect())
    }

    /// Latent operator forward pass `(r_c, u_c, τ) ↦ e_c`.
    pub fn latent_forward(
        &self,
        r_c: &[Complex64],
        u_c: &[Complex64],
        tau: f64,
    ) -> Result<Vec<Complex64>> {
        let k = self.arch.latent_dim;
        if r_c.len() != k || u_c.len() != k {
            return Err(CoreError::Dimension {
                expected: k,
                got: r_c.len().max(u_c.len()),
            });
        }
        let mut x = Vec::with_capacity(self.arch.input_width());
        for z in r_c {
            x.push(z.re);
            x.push(z.im);
        }
        for z in u_c {
            x.push(z.re);
            x.push(z.im);
        }
        x.push(tau);

        for i in 0..=self.arch.enc_hidden {
            let (w, b) = self.enc_layer(i);
            let mut y = w.matvec(&x);
            for (v, bi) in y.iter_mut().zip(&b.data) {
                *v += bi;
            }
            if i < self.arch.enc_hidden {
                for v in y.iter_mut() {
                    *v = gelu(*v);
                }
            }
            x = y;
        }

        // Fourier mixing over the K latent slots: dense complex map plus
        // bilinear heads acting in the conjugate domain
        let z: Vec<Complex64> = (0..k)
            .map(|c| Complex64::new(x[2 * c], x[2 * c + 1]))
            .collect();
        let (mre, mim) = self.mixing();
        let mut acc: Vec<Complex64> = (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| Complex64::new(mre.data[r * k + c], mim.data[r * k + c]) * z[c])
                    .sum()
            })
            .collect();
        for m in 0..self.arch.quad_heads {
            let are = &self.tensors[self.index_of(TensorRole::QuadARe(m))].data;
            let aim = &self.tensors[self.index_of(TensorRole::QuadAIm(m))].data;
            let bre = &self.tensors[self.index_of(TensorRole::QuadBRe(m))].data;
            let bim = &self.tensors[self.index_of(TensorRole::QuadBIm(m))].data;
            let head = quad_head(&z, (are, aim), (bre, bim));
            for (t, h) in acc.iter_mut().zip(head) {
                *t += h;
            }
        }
        let mut mixed = vec![0.0; 2 * k];
        for (r, v) in acc.iter().enumerate() {
            mixed[2 * r] = v.re;
            mixed[2 * r + 1] = v.im;
        }
        x = mixed;

        for i in 0..=self.arch.dec_hidden {
            let (w, b) = self.dec_layer(i);
            let mut y = w.matvec(&x);
            for (v, bi) in y.iter_mut().zip(&b.data) {
                *v += bi;
            }
            if i < self.arch.dec_hidden {
                for v in y.iter_mut() {
                    *v = gelu(*v);
                }
            }
            x = y;
        }

        Ok((0..k)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect())
    }

    /// Scaling-net forward from a feature vector.
    pub fn scale_from_features(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), N_SCALE_FEATURES);
        let mut x = features.to_vec();
        for i in 0..3 {
            let w = &self.tensors[self.index_of(TensorRole::ScaleWeight(i))];
            let b = &self.tensors[self.index_of(TensorRole::ScaleBias(i))];
            let mut y = w.matvec(&x);
            for (v, bi) in y.iter_mut().zip(&b.data) {
                *v += bi;
            }
            if i < 2 {
                for v in y.iter_mut() {
                    *v = gelu(*v);
                }
                let gain = &self.tensors[self.index_of(TensorRole::ScaleLnGain(i))];
                let bias = &self.tensors[self.index_of(TensorRole::ScaleLnBias(i))];
                y = layer_norm(&y, &gain.data, &bias.data);
            }
            x = y;
        }
        softplus(x[0])
    }

    /// Dynamic scaling `λ = E_scale(u)`, strictly positive.
    pub fn scale_estimate(&self, u: &SpectralField) -> f64 {
        self.scale_from_features(&scale_features(u))
    }
}

pub fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    x.iter()
        .zip(gain.iter().zip(bias))
        .map(|(&v, (&g, &b))| g * (v - mean) * inv + b)
        .collect()
}

/// Smooth modulus, differentiable at the origin.
#[inline]
pub fn smooth_abs(re: f64, im: f64) -> f64 {
    (re * re + im * im + 1e-60).sqrt()
}

/// Phase-invariant 8-feature summary of a field: `L²` norm, `H¹` and `H⁻¹`
/// seminorms, max physical and spectral moduli, spectral centroid, mean
/// modulus and cubic modulus moment. Invariant under a global phase.
pub fn scale_features(u: &SpectralField) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.n_modes() as f64;
    let mut sum_sq = 0.0;
    let mut h1 = 0.0;
    let mut hm1 = 0.0;
    let mut centroid_num = 0.0;
    let mut m1 = 0.0;
    let mut m3 = 0.0;
    let mut max_coeff: f64 = 0.0;
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = grid.wavenumber(i) as f64;
        let a2 = c.norm_sqr();
        let a = smooth_abs(c.re, c.im);
        sum_sq += a2;
        h1 += k * k * a2;
        if k != 0.0 {
            hm1 += a2 / (k * k);
        }
        centroid_num += k.abs() * a2;
        m1 += a;
        m3 += a * a * a;
        max_coeff = max_coeff.max(a);
    }
    let phys = u.to_physical_unchecked();
    let max_phys = phys
        .iter()
        .map(|c| smooth_abs(c.re, c.im))
        .fold(0.0f64, f64::max);
    vec![
        sum_sq.sqrt(),
        h1.sqrt(),
        hm1.sqrt(),
        max_phys,
        max_coeff,
        centroid_num / (sum_sq + 1e-30),
        m1 / n,
        (m3 / n).powf(1.0 / 3.0),
    ]
}

/// Amplitude scaling `S_λ` and its inverse: forward multiplies all
/// coefficients by `1/λ`, inverse by `λ`. Composition is the identity
/// (bit-for-bit for dyadic `λ`, to an ulp otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleDirection {
    Forward,
    Inverse,
}

pub fn apply_scaling(u: &SpectralField, lam: f64, direction: ScaleDirection) -> Result<SpectralField> {
    if lam <= 0.0 || !lam.is_finite() {
        return Err(CoreError::Argument(format!("scaling λ must be positive, got {lam}")));
    }
    let factor = match direction {
        ScaleDirection::Forward => 1.0 / lam,
        ScaleDirection::Inverse => lam,
    };
    Ok(u.scaled(Complex64::new(factor, 0.0)))
}

/// Power-iteration estimate of the largest singular value of a real
/// row-major matrix. Deterministic start vector; iterates until the
/// Rayleigh estimate stabilises to `1e-12` relative (cap 400 rounds).
pub fn spectral_norm_estimate(t: &Tensor) -> f64 {
    if t.data.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..t.cols)
        .map(|i| 1.0 + 0.01 * (i as f64 / t.cols.max(1) as f64))
        .collect();
    normalize(&mut v);
    let mut sigma_prev = -1.0;
    let mut sigma = 0.0;
    for _ in 0..400 {
        let mut u = t.matvec(&v);
        let un = normalize(&mut u);
        if un == 0.0 {
            return 0.0;
        }
        v = t.matvec_t(&u);
        sigma = normalize(&mut v);
        if (sigma - sigma_prev).abs() <= 1e-12 * sigma.max(1.0) {
            break;
        }
        sigma_prev = sigma;
    }
    sigma
}

/// Spectral norm of the complex mixing matrix `Re + i·Im`.
pub fn spectral_norm_estimate_complex(re: &Tensor, im: &Tensor) -> f64 {
    let k = re.rows;
    if re.data.iter().all(|&v| v == 0.0) && im.data.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut v: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(1.0 + 0.01 * i as f64 / k.max(1) as f64, 0.3))
        .collect();
    normalize_c(&mut v);
    let matvec = |x: &[Complex64], adjoint: bool| -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for r in 0..k {
            for c in 0..k {
                let m = Complex64::new(re.data[r * k + c], im.data[r * k + c]);
                if adjoint {
                    y[c] += m.conj() * x[r];
                } else {
                    y[r] += m * x[c];
                }
            }
        }
        y
    };
    let mut sigma_prev = -1.0;
    let mut sigma = 0.0;
    for _ in 0..400 {
        let mut u = matvec(&v, false);
        if normalize_c(&mut u) == 0.0 {
            return 0.0;
        }
        v = matvec(&u, true);
        sigma = normalize_c(&mut v);
        if (sigma - sigma_prev).abs() <= 1e-12 * sigma.max(1.0) {
            break;
        }
        sigma_prev = sigma;
    }
    sigma
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

fn normalize_c(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Rescale every weight matrix whose spectral norm exceeds `w_max` down to
/// exactly `w_max`; record all norms. Idempotent to rounding.
pub fn spectral_normalize(params: &CorrectorParams) -> CorrectorParams {
    let mut out = params.clone();
    let mut norms = Vec::new();
    let roles: Vec<TensorRole> = out.roles.iter().map(|&(r, _, _)| r).collect();
    // dense latent + scaling weights
    for role in roles.iter() {
        match role {
            TensorRole::EncWeight(_) | TensorRole::DecWeight(_) | TensorRole::ScaleWeight(_) => {
                let idx = out.index_of(*role);
                let sigma = spectral_norm_estimate(out.tensor(idx));
                if sigma > out.w_max {
                    let f = out.w_max / sigma;
                    for v in out.tensor_mut(idx).data.iter_mut() {
                        *v *= f;
                    }
                    norms.push(out.w_max);
                } else {
                    norms.push(sigma);
                }
            }
            TensorRole::MixRe => {
                let re_idx = out.index_of(TensorRole::MixRe);
                let im_idx = out.index_of(TensorRole::MixIm);
                let sigma = spectral_norm_estimate_complex(out.tensor(re_idx), out.tensor(im_idx));
                if sigma > out.w_max {
                    let f = out.w_max / sigma;
                    for v in out.tensor_mut(re_idx).data.iter_mut() {
                        *v *= f;
                    }
                    for v in out.tensor_mut(im_idx).data.iter_mut() {
                        *v *= f;
                    }
                    norms.push(out.w_max);
                } else {
                    norms.push(sigma);
                }
            }
            TensorRole::QuadARe(m) => {
                // cap the head pair by its local operator norm, rescaling
                // both filters evenly
                let m = *m;
                let local = head_local_norm(&out, m);
                if local > out.w_max {
                    let f = (out.w_max / local).sqrt();
                    for role in [
                        TensorRole::QuadARe(m),
                        TensorRole::QuadAIm(m),
                        TensorRole::QuadBRe(m),
                        TensorRole::QuadBIm(m),
                    ] {
                        let idx = out.index_of(role);
                        for v in out.tensor_mut(idx).data.iter_mut() {
                            *v *= f;
                        }
                    }
                    norms.push(out.w_max);
                } else {
                    norms.push(local);
                }
            }
            _ => {}
        }
    }
    out.layer_norms = norms;
    out
}

pub fn diag_sup_norm(re: &Tensor, im: &Tensor) -> f64 {
    re.data
        .iter()
        .zip(&im.data)
        .map(|(&r, &i)| (r * r + i * i).sqrt())
        .fold(0.0, f64::max)
}

fn head_filters(params: &CorrectorParams, m: usize) -> ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
    (
        (
            params.tensor(params.index_of(TensorRole::QuadARe(m))).data.clone(),
            params.tensor(params.index_of(TensorRole::QuadAIm(m))).data.clone(),
        ),
        (
            params.tensor(params.index_of(TensorRole::QuadBRe(m))).data.clone(),
            params.tensor(params.index_of(TensorRole::QuadBIm(m))).data.clone(),
        ),
    )
}

/// Local operator norm of one head on the designed latent domain:
/// `2·‖B‖·Z` (both slots carry the input, hence the factor two).
pub fn head_local_norm(params: &CorrectorParams, m: usize) -> f64 {
    let k = params.arch.latent_dim;
    let (a, b) = head_filters(params, m);
    2.0 * bilinear_head_norm(k, (&a.0, &a.1), (&b.0, &b.1)) * QUAD_INPUT_BOUND
}

/// Operator bound of the whole mixing layer on the designed latent
/// domain: dense-map spectral norm plus the heads' local contributions.
pub fn mixing_layer_bound(params: &CorrectorParams) -> f64 {
    let mut bound = spectral_norm_estimate_complex(
        params.tensor(params.index_of(TensorRole::MixRe)),
        params.tensor(params.index_of(TensorRole::MixIm)),
    );
    for m in 0..params.arch.quad_heads {
        bound += head_local_norm(params, m);
    }
    bound
}

/// Product of the latent-operator layer spectral norms (the paper-style
/// bound, 1-Lipschitz activations assumed); the mixing layer enters
/// through [`mixing_layer_bound`].
pub fn spectral_norm_product(params: &CorrectorParams) -> f64 {
    let mut product = 1.0;
    for (role, _, _) in params.roles.iter() {
        match role {
            TensorRole::EncWeight(_) | TensorRole::DecWeight(_) => {
                product *= spectral_norm_estimate(params.tensor(params.index_of(*role)));
            }
            TensorRole::MixRe => {
                product *= mixing_layer_bound(params);
            }
            _ => {}
        }
    }
    product
}

/// Activation-corrected Lipschitz bound of the latent operator: the layer
/// spectral-norm product times `GELU_LIPSCHITZ` per GELU application.
pub fn lipschitz_bound(params: &CorrectorParams) -> f64 {
    spectral_norm_product(params) * GELU_LIPSCHITZ.powi(params.arch.latent_gelu_count() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid1D;
    use crate::testutil::rand_complex_field;
    use nalgebra::DMatrix;

    #[test]
    fn gelu_lipschitz_constant_is_tight() {
        let mut max_d: f64 = 0.0;
        let mut x = -6.0;
        while x < 6.0 {
            max_d = max_d.max(gelu_derivative(x));
            x += 1e-4;
        }
        assert!(max_d <= GELU_LIPSCHITZ + 1e-12, "sampled {max_d}");
        assert!(GELU_LIPSCHITZ - max_d < 1e-6, "constant too loose: {max_d}");
    }

    #[test]
    fn zero_params_give_zero_map_and_ln2_scale() {
        let arch = Architecture::new(8);
        let p = CorrectorParams::zeros(arch, 2.1);
        let r = vec![Complex64::new(0.3, -0.1); 8];
        let u = vec![Complex64::new(-0.2, 0.5); 8];
        let out = p.latent_forward(&r, &u, 0.01).unwrap();
        assert!(out.iter().all(|c| c.norm() == 0.0));
        assert_eq!(lipschitz_bound(&p), 0.0);

        let init = CorrectorParams::init(arch, 2.1, 3);
        let out2 = init.latent_forward(&r, &u, 0.01).unwrap();
        assert!(out2.iter().all(|c| c.norm() == 0.0), "zero-init output layer");
        let g = Grid1D::new(64).unwrap();
        let f = rand_complex_field(g, 1);
        let lam = init.scale_estimate(&f);
        assert!((lam - 2f64.ln()).abs() < 1e-12, "λ = {lam}");
        assert!(lam > 0.0);
    }

    #[test]
    fn latent_forward_deterministic() {
        let arch = Architecture::new(4);
        let mut p = CorrectorParams::init(arch, 2.1, 9);
        // activate the output layer so the map is nontrivial
        let idx = p.index_of(TensorRole::DecWeight(arch.dec_hidden));
        for (i, v) in p.tensor_mut(idx).data.iter_mut().enumerate() {
            *v = 0.01 * ((i % 13) as f64 - 6.0);
        }
        let r = vec![Complex64::new(0.2, 0.1); 4];
        let u = vec![Complex64::new(-0.4, 0.3); 4];
        let a = p.latent_forward(&r, &u, 0.05).unwrap();
        let b = p.latent_forward(&r, &u, 0.05).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|c| c.norm() > 0.0));
    }

    #[test]
    fn parameter_count_near_paper_scale() {
        let p = CorrectorParams::init(Architecture::new(32), 2.1, 1);
        let count = p.parameter_count();
        assert!(
            (80_000..160_000).contains(&count),
            "K=32 parameter count {count}"
        );
    }

    #[test]
    fn scale_features_phase_invariant() {
        let g = Grid1D::new(64).unwrap();
        let f = rand_complex_field(g, 77);
        let rotated = f.scaled(Complex64::from_polar(1.0, 1.234));
        let a = scale_features(&f);
        let b = scale_features(&rotated);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
        let arch = Architecture::new(8);
        let p = CorrectorParams::init(arch, 2.1, 3);
        assert_eq!(p.scale_estimate(&f), p.scale_estimate(&rotated));
    }

    #[test]
    fn apply_scaling_round_trip() {
        let g = Grid1D::new(32).unwrap();
        let f = rand_complex_field(g, 5);
        let id = apply_scaling(&f, 1.0, ScaleDirection::Forward).unwrap();
        assert_eq!(id.coeffs(), f.coeffs());
        let fwd = apply_scaling(&f, 2.0, ScaleDirection::Forward).unwrap();
        assert!((fwd.l2_norm() - 0.5 * f.l2_norm()).abs() < 1e-15);
        let back = apply_scaling(&fwd, 2.0, ScaleDirection::Inverse).unwrap();
        assert_eq!(back.coeffs(), f.coeffs(), "dyadic λ is exactly invertible");
        assert!(apply_scaling(&f, 0.0, ScaleDirection::Forward).is_err());
    }

    fn exact_norm(t: &Tensor) -> f64 {
        let m = DMatrix::<f64>::from_fn(t.rows, t.cols, |r, c| t.data[r * t.cols + c]);
        m.svd(false, false).singular_values.max()
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = SplitMix64::new(10);
        for trial in 0..5 {
            let (rows, cols) = [(64, 33), (33, 64), (128, 128), (16, 16), (65, 128)][trial];
            let mut t = Tensor::zeros(rows, cols);
            for v in t.data.iter_mut() {
                *v = rng.next_gaussian();
            }
            let est = spectral_norm_estimate(&t);
            let exact = exact_norm(&t);
            assert!(
                (est - exact).abs() < 1e-9 * exact,
                "trial {trial}: {est} vs {exact}"
            );
        }
    }

    #[test]
    fn normalize_caps_and_is_idempotent() {
        let arch = Architecture::new(8);
        let mut p = CorrectorParams::init(arch, 1.5, 44);
        // inflate a few layers past the cap
        for role in [TensorRole::EncWeight(0), TensorRole::DecWeight(0), TensorRole::ScaleWeight(0)] {
            let idx = p.index_of(role);
            for v in p.tensor_mut(idx).data.iter_mut() {
                *v *= 40.0;
            }
        }
        let q = spectral_normalize(&p);
        // direct SVD check of the post-condition
        for (role, _, _) in q.roles.clone() {
            match role {
                TensorRole::EncWeight(_) | TensorRole::DecWeight(_) | TensorRole::ScaleWeight(_) => {
                    let exact = exact_norm(q.tensor(q.index_of(role)));
                    assert!(exact <= 1.5 * (1.0 + 1e-8), "{role:?}: {exact}");
                }
                _ => {}
            }
        }
        assert!(!q.layer_norms.is_empty());
        assert!(q.layer_norms.iter().all(|&n| n <= 1.5 * (1.0 + 1e-8)));
        // idempotence
        let r = spectral_normalize(&q);
        for i in 0..q.n_tensors() {
            for (a, b) in q.tensor(i).data.iter().zip(&r.tensor(i).data) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
        // layers already under the cap are untouched
        let small = CorrectorParams::init(arch, 100.0, 44);
        let sn = spectral_normalize(&small);
        for i in 0..small.n_tensors() {
            assert_eq!(small.tensor(i).data, sn.tensor(i).data);
        }
    }

    #[test]
    fn diagonal_rescale_example() {
        // single layer 3·I with cap 2.1 rescales to 2.1·I
        let arch = Architecture::with_depth(4, 1, 0);
        let mut p = CorrectorParams::zeros(arch, 2.1);
        let idx = p.index_of(TensorRole::DecWeight(0));
        let t = p.tensor_mut(idx);
        let cols = t.cols;
        for r in 0..t.rows {
            t.data[r * cols + r] = 3.0;
        }
        let q = spectral_normalize(&p);
        let t = q.tensor(idx);
        for r in 0..t.rows {
            for c in 0..t.cols {
                let expect = if r == c { 2.1 } else { 0.0 };
                assert!((t.data[r * t.cols + c] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn four_layer_bound_matches_cap_product() {
        // 4 weight matrices (enc 2, mixing, dec 1): after normalisation at
        // w_max = 2.1 the norm product is at most 2.1⁴ ≈ 19.45
        let arch = Architecture::with_depth(8, 1, 0);
        let mut p = CorrectorParams::init(arch, 2.1, 5);
        let mut rng = SplitMix64::new(17);
        for i in 0..p.n_tensors() {
            let (role, _, _) = p.roles[i];
            if matches!(role, TensorRole::EncWeight(_) | TensorRole::DecWeight(_)) {
                for v in p.tensor_mut(i).data.iter_mut() {
                    *v = 3.0 * rng.next_gaussian();
                }
            }
        }
        assert_eq!(arch.latent_matrix_count(), 4);
        let q = spectral_normalize(&p);
        let product = spectral_norm_product(&q);
        assert!(product <= 2.1f64.powi(4) * (1.0 + 1e-8), "product {product}");
        assert!(product > 2.1f64.powi(3), "caps actually bind: {product}");
        // the corrected bound folds in the GELU constant per activation
        let corrected = lipschitz_bound(&q);
        let expect = product * GELU_LIPSCHITZ.powi(arch.latent_gelu_count() as i32);
        assert!((corrected - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn lipschitz_bound_dominates_sampled_quotients() {
        let arch = Architecture::new(6);
        let mut p = CorrectorParams::init(arch, 2.1, 21);
        let idx = p.index_of(TensorRole::DecWeight(arch.dec_hidden));
        let mut rng = SplitMix64::new(4);
        for v in p.tensor_mut(idx).data.iter_mut() {
            *v = 0.3 * rng.next_gaussian();
        }
        let p = spectral_normalize(&p);
        let bound = lipschitz_bound(&p);
        assert!(bound > 0.0);
        let k = 6;
        let tau = 0.01;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let draw = |rng: &mut SplitMix64| -> Vec<Complex64> {
                (0..k)
                    .map(|_| {
                        let (re, im) = rng.next_complex_gaussian();
                        Complex64::new(re, im)
                    })
                    .collect()
            };
            let r1 = draw(&mut rng);
            let u1 = draw(&mut rng);
            let mut r2 = r1.clone();
            let mut u2 = u1.clone();
            for z in r2.iter_mut().chain(u2.iter_mut()) {
                let (re, im) = rng.next_complex_gaussian();
                *z += Complex64::new(re, im) * 1e-4;
            }
            let f1 = p.latent_forward(&r1, &u1, tau).unwrap();
            let f2 = p.latent_forward(&r2, &u2, tau).unwrap();
            let dout: f64 = f1
                .iter()
                .zip(&f2)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let din: f64 = (r1.iter().zip(&r2).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                + u1.iter().zip(&u2).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
            .sqrt();
            worst = worst.max(dout / din);
        }
        assert!(
            worst <= bound * (1.0 + 1e-6),
            "sampled Lipschitz {worst} exceeds bound {bound}"
        );
    }
}
