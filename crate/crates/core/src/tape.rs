//! Reverse-mode differentiation tape over the unrolled hybrid solver.
//!
//! Nodes carry whole vectors (complex fields, real activations) or scalars;
//! each recorded operation knows its adjoint. Complex quantities follow the
//! real-pair convention: the gradient of a real loss with respect to a
//! complex value `z` is stored as `∂L/∂Re z + i ∂L/∂Im z`, under which the
//! adjoint of any complex-linear map is its conjugate transpose — in
//! particular the adjoint of the unitary forward DFT is the inverse DFT.
//!
//! Network weights stay inside [`CorrectorParams`]; parameterised ops
//! reference tensors by index and [`Tape::backward`] accumulates their
//! gradients into a matching [`ParamGrads`].

use num_complex::Complex64;

use crate::corrector::{
    gelu, gelu_derivative, smooth_abs, softplus, softplus_derivative, CorrectorParams, TrunkBasis,
    LAYER_NORM_EPS,
};
use crate::error::{CoreError, Result};
use crate::spectral::{Grid1D, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug)]
pub enum Value {
    C(Vec<Complex64>),
    R(Vec<f64>),
    S(f64),
}

impl Value {
    pub fn as_c(&self) -> &[Complex64] {
        match self {
            Value::C(v) => v,
            _ => panic!("expected complex vector value"),
        }
    }

    pub fn as_r(&self) -> &[f64] {
        match self {
            Value::R(v) => v,
            _ => panic!("expected real vector value"),
        }
    }

    pub fn as_s(&self) -> f64 {
        match self {
            Value::S(v) => *v,
            _ => panic!("expected scalar value"),
        }
    }

    fn zeros_like(&self) -> Value {
        match self {
            Value::C(v) => Value::C(vec![Complex64::new(0.0, 0.0); v.len()]),
            Value::R(v) => Value::R(vec![0.0; v.len()]),
            Value::S(_) => Value::S(0.0),
        }
    }
}

/// Gradients for every parameter tensor, в canonical layout order.
#[derive(Clone, Debug)]
pub struct ParamGrads {
    pub tensors: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros(params: &CorrectorParams) -> Self {
        Self {
            tensors: (0..params.n_tensors())
                .map(|i| vec![0.0; params.tensor(i).data.len()])
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in &self.tensors {
            out.extend_from_slice(t);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &ParamGrads, a: f64) {
        for (mine, theirs) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in mine.iter_mut().zip(theirs) {
                *x += a * y;
            }
        }
    }
}

enum Op {
    /// Constant leaf: no gradient flow.
    Leaf,
    /// z = x + a·y (complex vectors, constant a)
    Axpy { x: NodeId, y: NodeId, a: Complex64 },
    /// z = a·x
    ScaleConst { x: NodeId, a: Complex64 },
    /// z = x + c (constant shift)
    ShiftConst { x: NodeId },
    /// z_i = d_i · x_i
    Diag { x: NodeId, d: Vec<Complex64> },
    /// unitary DFT (inverse=false: physical→spectral ordering convention
    /// matches SpectralField: forward maps physical samples to coeffs)
    Dft { x: NodeId, inverse: bool },
    /// z = x ⊙ y (pointwise complex)
    CMul { x: NodeId, y: NodeId },
    /// z_m = conj(x_{σ(m)}), σ the wavenumber negation (self-adjoint)
    ConjField { x: NodeId, grid: Grid1D },
    /// restriction z = Φ* x (K from N) or prolongation z = Φ x
    Basis {
        x: NodeId,
        basis: std::sync::Arc<TrunkBasis>,
        restrict: bool,
    },
    /// complex K-vector → interleaved real 2K-vector
    Interleave { x: NodeId },
    /// interleaved real 2K-vector → complex K-vector
    Deinterleave { x: NodeId },
    /// real concat of R/S nodes plus a constant tail
    Concat { parts: Vec<NodeId>, tail: Vec<f64> },
    /// z = W x + b with parameter tensors (saves x)
    Linear { x: NodeId, w_idx: usize, b_idx: usize },
    /// complex mixing z = (Re + i·Im) x over K latent slots
    Mix { x: NodeId, re_idx: usize, im_idx: usize },
    /// elementwise complex multiply by a learned diagonal (two K-vector
    /// parameter tensors holding real and imaginary parts)
    DiagParam { x: NodeId, re_idx: usize, im_idx: usize },
    /// Hermitian synthesis of K positive bands onto a 4K spectrum
    HermSynth { x: NodeId },
    /// read the K positive bands back out of a 4K spectrum
    BandSlice { x: NodeId, k: usize },
    /// elementwise GELU (saves x)
    Gelu { x: NodeId },
    /// layer normalisation with parameter gain/bias (saves x, μ, inv)
    LayerNorm {
        x: NodeId,
        gain_idx: usize,
        bias_idx: usize,
        mean: f64,
        inv: f64,
    },
    /// z = Σ_t c_t x_t (complex linear combination across nodes)
    LinComb { xs: Vec<NodeId>, cs: Vec<Complex64> },
    /// s = Σ_i w_i |x_i|² (w ≡ 1 allowed)
    WeightedSumSq { x: NodeId, w: Option<Vec<f64>> },
    /// s = Σ_i |x_i| (smooth modulus)
    SumAbs { x: NodeId },
    /// s = Σ_i |x_i|³ (smooth modulus)
    SumAbs3 { x: NodeId },
    /// s = max_i |x_i| (smooth modulus, saves argmax)
    MaxAbs { x: NodeId, argmax: usize },
    /// s = x_s + y_s
    SAdd { x: NodeId, y: NodeId },
    /// s = x_s · y_s
    SMul { x: NodeId, y: NodeId },
    /// s = x_s / y_s
    SDiv { x: NodeId, y: NodeId },
    /// s = a·x_s + b
    SAffine { x: NodeId, a: f64 },
    /// s = sqrt(x_s)
    SSqrt { x: NodeId },
    /// s = x_s^a
    SPow { x: NodeId, a: f64 },
    /// s = softplus(x_s)
    SSoftplus { x: NodeId },
    /// s = 1/x_s
    SRecip { x: NodeId },
    /// z = s · x (real scalar node times complex vector)
    SVMul { s: NodeId, x: NodeId },
    /// sum of scalar nodes
    SSum { xs: Vec<NodeId> },
    /// pick single real component out of an R node
    Pick { x: NodeId, index: usize },
}

struct Node {
    op: Op,
    value: Value,
}

/// The differentiation tape. Records forward values; replaying adjoints in
/// reverse creation order yields gradients for every parameter tensor.
pub struct Tape<'p> {
    params: &'p CorrectorParams,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p CorrectorParams) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &CorrectorParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Value {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Value) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    // ---- leaves ----

    pub fn const_c(&mut self, v: Vec<Complex64>) -> NodeId {
        self.push(Op::Leaf, Value::C(v))
    }

    pub fn const_field(&mut self, f: &SpectralField) -> NodeId {
        self.const_c(f.coeffs().to_vec())
    }

    pub fn const_r(&mut self, v: Vec<f64>) -> NodeId {
        self.push(Op::Leaf, Value::R(v))
    }

    pub fn const_s(&mut self, v: f64) -> NodeId {
        self.push(Op::Leaf, Value::S(v))
    }

    // ---- complex vector ops ----

    pub fn axpy(&mut self, x: NodeId, a: Complex64, y: NodeId) -> NodeId {
        let v: Vec<Complex64> = self
            .value(x)
            .as_c()
            .iter()
            .zip(self.value(y).as_c())
            .map(|(&p, &q)| p + a * q)
            .collect();
        self.push(Op::Axpy { x, y, a }, Value::C(v))
    }

    pub fn add(&mut self, x: NodeId, y: NodeId) -> NodeId {
        self.axpy(x, Complex64::new(1.0, 0.0), y)
    }

    pub fn sub(&mut self, x: NodeId, y: NodeId) -> NodeId {
        self.axpy(x, Complex64::new(-1.0, 0.0), y)
    }

    pub fn scale_const(&mut self, x: NodeId, a: Complex64) -> NodeId {
        let v: Vec<Complex64> = self.value(x).as_c().iter().map(|&p| a * p).collect();
        self.push(Op::ScaleConst { x, a }, Value::C(v))
    }

    pub fn shift_const(&mut self, x: NodeId, c: &[Complex64]) -> NodeId {
        let v: Vec<Complex64> = self
            .value(x)
            .as_c()
            .iter()
            .zip(c)
            .map(|(&p, &q)| p + q)
            .collect();
        self.push(Op::ShiftConst { x }, Value::C(v))
    }

    pub fn diag(&mut self, x: NodeId, d: Vec<Complex64>) -> NodeId {
        let v: Vec<Complex64> = self
            .value(x)
            .as_c()
            .iter()
            .zip(&d)
            .map(|(&p, &q)| p * q)
            .collect();
        self.push(Op::Diag { x, d }, Value::C(v))
    }

    /// Real 0/1 (or general real) mask as a diagonal multiply.
    pub fn mask(&mut self, x: NodeId, m: &[f64]) -> NodeId {
        self.diag(x, m.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn dft(&mut self, x: NodeId, inverse: bool) -> NodeId {
        let mut data = self.value(x).as_c().to_vec();
        crate::spectral::tape_fft(&mut data, inverse);
        self.push(Op::Dft { x, inverse }, Value::C(data))
    }

    pub fn cmul(&mut self, x: NodeId, y: NodeId) -> NodeId {
        let v: Vec<Complex64> = self
            .value(x)
            .as_c()
            .iter()
            .zip(self.value(y).as_c())
            .map(|(&p, &q)| p * q)
            .collect();
        self.push(Op::CMul { x, y }, Value::C(v))
    }

    pub fn conj_field(&mut self, x: NodeId, grid: Grid1D) -> NodeId {
        let src = self.value(x).as_c();
        let n = grid.n_modes();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (i, out) in v.iter_mut().enumerate() {
            let k = grid.wavenumber(i);
            let nk = if k == -(n as i64) / 2 { k } else { -k };
            *out = src[grid.index_of(nk)].conj();
        }
        self.push(Op::ConjField { x, grid }, Value::C(v))
    }

    pub fn restrict(&mut self, x: NodeId, basis: std::sync::Arc<TrunkBasis>) -> NodeId {
        let coeffs = self.value(x).as_c();
        let k = basis.latent_dim();
        let v: Vec<Complex64> = (0..k)
            .map(|j| {
                basis
                    .column(j)
                    .iter()
                    .zip(coeffs)
                    .map(|(p, u)| p.conj() * u)
                    .sum()
            })
            .collect();
        self.push(
            Op::Basis {
                x,
                basis,
                restrict: true,
            },
            Value::C(v),
        )
    }

    pub fn prolong(&mut self, x: NodeId, basis: std::sync::Arc<TrunkBasis>) -> NodeId {
        let latent = self.value(x).as_c();
        let n = basis.grid().n_modes();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (j, &z) in latent.iter().enumerate() {
            for (out, p) in v.iter_mut().zip(basis.column(j)) {
                *out += p * z;
            }
        }
        self.push(
            Op::Basis {
                x,
                basis,
                restrict: false,
            },
            Value::C(v),
        )
    }

    pub fn interleave(&mut self, x: NodeId) -> NodeId {
        let src = self.value(x).as_c();
        let mut v = Vec::with_capacity(2 * src.len());
        for z in src {
            v.push(z.re);
            v.push(z.im);
        }
        self.push(Op::Interleave { x }, Value::R(v))
    }

    pub fn deinterleave(&mut self, x: NodeId) -> NodeId {
        let src = self.value(x).as_r();
        let v: Vec<Complex64> = src
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        self.push(Op::Deinterleave { x }, Value::C(v))
    }

    /// Concatenate real/scalar nodes, then a constant tail.
    pub fn concat(&mut self, parts: Vec<NodeId>, tail: Vec<f64>) -> NodeId {
        let mut v = Vec::new();
        for &p in &parts {
            match self.value(p) {
                Value::R(r) => v.extend_from_slice(r),
                Value::S(s) => v.push(*s),
                Value::C(_) => panic!("concat expects real or scalar parts"),
            }
        }
        v.extend_from_slice(&tail);
        self.push(Op::Concat { parts, tail }, Value::R(v))
    }

    // ---- parameterised ops ----

    pub fn linear(&mut self, x: NodeId, w_idx: usize, b_idx: usize) -> NodeId {
        let w = self.params.tensor(w_idx);
        let b = self.params.tensor(b_idx);
        let mut y = w.matvec(self.value(x).as_r());
        for (v, bi) in y.iter_mut().zip(&b.data) {
            *v += bi;
        }
        self.push(Op::Linear { x, w_idx, b_idx }, Value::R(y))
    }

    pub fn mix(&mut self, x: NodeId, re_idx: usize, im_idx: usize) -> NodeId {
        let re = self.params.tensor(re_idx);
        let im = self.params.tensor(im_idx);
        let k = re.rows;
        let src = self.value(x).as_c();
        let mut v = vec![Complex64::new(0.0, 0.0); k];
        for r in 0..k {
            for c in 0..k {
                let m = Complex64::new(re.data[r * k + c], im.data[r * k + c]);
                v[r] += m * src[c];
            }
        }
        self.push(Op::Mix { x, re_idx, im_idx }, Value::C(v))
    }

    pub fn diag_param(&mut self, x: NodeId, re_idx: usize, im_idx: usize) -> NodeId {
        let re = &self.params.tensor(re_idx).data;
        let im = &self.params.tensor(im_idx).data;
        let v: Vec<Complex64> = self
            .value(x)
            .as_c()
            .iter()
            .enumerate()
            .map(|(i, &z)| Complex64::new(re[i], im[i]) * z)
            .collect();
        self.push(Op::DiagParam { x, re_idx, im_idx }, Value::C(v))
    }

    pub fn herm_synth(&mut self, x: NodeId) -> NodeId {
        let v = crate::corrector::herm_synth(self.value(x).as_c());
        self.push(Op::HermSynth { x }, Value::C(v))
    }

    pub fn band_slice(&mut self, x: NodeId, k: usize) -> NodeId {
        let src = self.value(x).as_c();
        let v: Vec<Complex64> = (0..k).map(|j| src[j + 1]).collect();
        self.push(Op::BandSlice { x, k }, Value::C(v))
    }

    pub fn gelu_node(&mut self, x: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(x).as_r().iter().map(|&a| gelu(a)).collect();
        self.push(Op::Gelu { x }, Value::R(v))
    }

    pub fn layer_norm_node(&mut self, x: NodeId, gain_idx: usize, bias_idx: usize) -> NodeId {
        let src = self.value(x).as_r();
        let n = src.len() as f64;
        let mean = src.iter().sum::<f64>() / n;
        let var = src.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        let gain = &self.params.tensor(gain_idx).data;
        let bias = &self.params.tensor(bias_idx).data;
        let v: Vec<f64> = src
            .iter()
            .zip(gain.iter().zip(bias))
            .map(|(&s, (&g, &b))| g * (s - mean) * inv + b)
            .collect();
        self.push(
            Op::LayerNorm {
                x,
                gain_idx,
                bias_idx,
                mean,
                inv,
            },
            Value::R(v),
        )
    }

    pub fn lincomb(&mut self, xs: Vec<NodeId>, cs: Vec<Complex64>) -> NodeId {
        let n = self.value(xs[0]).as_c().len();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (&x, &c) in xs.iter().zip(&cs) {
            for (out, &s) in v.iter_mut().zip(self.value(x).as_c()) {
                *out += c * s;
            }
        }
        self.push(Op::LinComb { xs, cs }, Value::C(v))
    }

    // ---- reductions and scalar ops ----

    pub fn weighted_sumsq(&mut self, x: NodeId, w: Option<Vec<f64>>) -> NodeId {
        let s: f64 = match &w {
            Some(weights) => self
                .value(x)
                .as_c()
                .iter()
                .zip(weights)
                .map(|(z, &wi)| wi * z.norm_sqr())
                .sum(),
            None => self.value(x).as_c().iter().map(|z| z.norm_sqr()).sum(),
        };
        self.push(Op::WeightedSumSq { x, w }, Value::S(s))
    }

    pub fn sum_abs(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self
            .value(x)
            .as_c()
            .iter()
            .map(|z| smooth_abs(z.re, z.im))
            .sum();
        self.push(Op::SumAbs { x }, Value::S(s))
    }

    pub fn sum_abs3(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self
            .value(x)
            .as_c()
            .iter()
            .map(|z| smooth_abs(z.re, z.im).powi(3))
            .sum();
        self.push(Op::SumAbs3 { x }, Value::S(s))
    }

    pub fn max_abs(&mut self, x: NodeId) -> NodeId {
        let vals = self.value(x).as_c();
        let mut argmax = 0;
        let mut best = -1.0;
        for (i, z) in vals.iter().enumerate() {
            let a = smooth_abs(z.re, z.im);
            if a > best {
                best = a;
                argmax = i;
            }
        }
        self.push(Op::MaxAbs { x, argmax }, Value::S(best))
    }

    pub fn s_add(&mut self, x: NodeId, y: NodeId) -> NodeId {
        let v = self.value(x).as_s() + self.value(y).as_s();
        self.push(Op::SAdd { x, y }, Value::S(v))
    }

    pub fn s_mul(&mut self, x: NodeId, y: NodeId) -> NodeId {
        let v = self.value(x).as_s() * self.value(y).as_s();
        self.push(Op::SMul { x, y }, Value::S(v))
    }

    pub fn s_div(&mut self, x: NodeId, y: NodeId) -> NodeId {
        let v = self.value(x).as_s() / self.value(y).as_s();
        self.push(Op::SDiv { x, y }, Value::S(v))
    }

    pub fn s_affine(&mut self, x: NodeId, a: f64, b: f64) -> NodeId {
        let v = a * self.value(x).as_s() + b;
        self.push(Op::SAffine { x, a }, Value::S(v))
    }

    pub fn s_sqrt(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).as_s().sqrt();
        self.push(Op::SSqrt { x }, Value::S(v))
    }

    pub fn s_pow(&mut self, x: NodeId, a: f64) -> NodeId {
        let v = self.value(x).as_s().powf(a);
        self.push(Op::SPow { x, a }, Value::S(v))
    }

    pub fn s_softplus(&mut self, x: NodeId) -> NodeId {
        let v = softplus(self.value(x).as_s());
        self.push(Op::SSoftplus { x }, Value::S(v))
    }

    pub fn s_recip(&mut self, x: NodeId) -> NodeId {
        let v = 1.0 / self.value(x).as_s();
        self.push(Op::SRecip { x }, Value::S(v))
    }

    pub fn sv_mul(&mut self, s: NodeId, x: NodeId) -> NodeId {
        let sv = self.value(s).as_s();
        let v: Vec<Complex64> = self.value(x).as_c().iter().map(|&z| sv * z).collect();
        self.push(Op::SVMul { s, x }, Value::C(v))
    }

    pub fn s_sum(&mut self, xs: Vec<NodeId>) -> NodeId {
        let v: f64 = xs.iter().map(|&x| self.value(x).as_s()).sum();
        self.push(Op::SSum { xs }, Value::S(v))
    }

    pub fn pick(&mut self, x: NodeId, index: usize) -> NodeId {
        let v = self.value(x).as_r()[index];
        self.push(Op::Pick { x, index }, Value::S(v))
    }

    /// Reverse pass from a scalar loss node; returns parameter gradients.
    pub fn backward(&self, loss: NodeId) -> Result<ParamGrads> {
        Ok(self.backward_with_inputs(loss, &[])?.0)
    }

    /// Reverse pass that additionally returns the gradients accumulated at
    /// the requested (leaf) nodes — the adjoint test surface.
    pub fn backward_with_inputs(
        &self,
        loss: NodeId,
        inputs: &[NodeId],
    ) -> Result<(ParamGrads, Vec<Value>)> {
        if !matches!(self.value(loss), Value::S(_)) {
            return Err(CoreError::Consistency(
                "backward requires a scalar loss node".into(),
            ));
        }
        let mut grads: Vec<Option<Value>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Value::S(1.0));
        let mut pgrads = ParamGrads::zeros(self.params);

        let keep: std::collections::HashSet<usize> = inputs.iter().map(|n| n.0).collect();
        let mut kept: std::collections::HashMap<usize, Value> = std::collections::HashMap::new();

        for idx in (0..self.nodes.len()).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            if keep.contains(&idx) {
                kept.insert(idx, g.clone());
            }
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Axpy { x, y, a } => {
                    let gc = g.as_c_owned();
                    add_c(&mut grads, *x, &gc);
                    let ay: Vec<Complex64> = gc.iter().map(|&z| a.conj() * z).collect();
                    add_c(&mut grads, *y, &ay);
                }
                Op::ScaleConst { x, a } => {
                    let gc: Vec<Complex64> =
                        g.as_c_owned().iter().map(|&z| a.conj() * z).collect();
                    add_c(&mut grads, *x, &gc);
                }
                Op::ShiftConst { x } => {
                    add_c(&mut grads, *x, &g.as_c_owned());
                }
                Op::Diag { x, d } => {
                    let gc: Vec<Complex64> = g
                        .as_c_owned()
                        .iter()
                        .zip(d)
                        .map(|(&z, &di)| di.conj() * z)
                        .collect();
                    add_c(&mut grads, *x, &gc);
                }
                Op::Dft { x, inverse } => {
                    let mut gc = g.as_c_owned();
                    crate::spectral::tape_fft(&mut gc, !*inverse);
                    add_c(&mut grads, *x, &gc);
                }
                Op::CMul { x, y } => {
                    let gc = g.as_c_owned();
                    let xv = self.value(*x).as_c();
                    let yv = self.value(*y).as_c();
                    let gx: Vec<Complex64> =
                        gc.iter().zip(yv).map(|(&z, &b)| z * b.conj()).collect();
                    let gy: Vec<Complex64> =
                        gc.iter().zip(xv).map(|(&z, &a)| z * a.conj()).collect();
                    add_c(&mut grads, *x, &gx);
                    add_c(&mut grads, *y, &gy);
                }
                Op::ConjField { x, grid } => {
                    let gc = g.as_c_owned();
                    let n = grid.n_modes();
                    let mut gx = vec![Complex64::new(0.0, 0.0); n];
                    for (i, out) in gx.iter_mut().enumerate() {
                        let k = grid.wavenumber(i);
                        let nk = if k == -(n as i64) / 2 { k } else { -k };
                        *out = gc[grid.index_of(nk)].conj();
                    }
                    add_c(&mut grads, *x, &gx);
                }
                Op::Basis { x, basis, restrict } => {
                    let gc = g.as_c_owned();
                    if *restrict {
                        // adjoint of Φ* is Φ
                        let n = basis.grid().n_modes();
                        let mut gx = vec![Complex64::new(0.0, 0.0); n];
                        for (j, &z) in gc.iter().enumerate() {
                            for (out, p) in gx.iter_mut().zip(basis.column(j)) {
                                *out += p * z;
                            }
                        }
                        add_c(&mut grads, *x, &gx);
                    } else {
                        // adjoint of Φ is Φ*
                        let k = basis.latent_dim();
                        let gx: Vec<Complex64> = (0..k)
                            .map(|j| {
                                basis
                                    .column(j)
                                    .iter()
                                    .zip(&gc)
                                    .map(|(p, z)| p.conj() * z)
                                    .sum()
                            })
                            .collect();
                        add_c(&mut grads, *x, &gx);
                    }
                }
                Op::Interleave { x } => {
                    let gr = g.as_r_owned();
                    let gx: Vec<Complex64> = gr
                        .chunks_exact(2)
                        .map(|p| Complex64::new(p[0], p[1]))
                        .collect();
                    add_c(&mut grads, *x, &gx);
                }
                Op::Deinterleave { x } => {
                    let gc = g.as_c_owned();
                    let mut gx = Vec::with_capacity(2 * gc.len());
                    for z in gc {
                        gx.push(z.re);
                        gx.push(z.im);
                    }
                    add_r(&mut grads, *x, &gx);
                }
                Op::Concat { parts, tail } => {
                    let gr = g.as_r_owned();
                    let mut off = 0;
                    for &p in parts {
                        match self.value(p) {
                            Value::R(r) => {
                                add_r(&mut grads, p, &gr[off..off + r.len()]);
                                off += r.len();
                            }
                            Value::S(_) => {
                                add_s(&mut grads, p, gr[off]);
                                off += 1;
                            }
                            Value::C(_) => unreachable!(),
                        }
                    }
                    let _ = tail;
                }
                Op::Linear { x, w_idx, b_idx } => {
                    let gr = g.as_r_owned();
                    let w = self.params.tensor(*w_idx);
                    let xv = self.value(*x).as_r();
                    add_r(&mut grads, *x, &w.matvec_t(&gr));
                    let gw = &mut pgrads.tensors[*w_idx];
                    for r in 0..w.rows {
                        let row = &mut gw[r * w.cols..(r + 1) * w.cols];
                        for (slot, &xc) in row.iter_mut().zip(xv) {
                            *slot += gr[r] * xc;
                        }
                    }
                    let gb = &mut pgrads.tensors[*b_idx];
                    for (slot, &gi) in gb.iter_mut().zip(&gr) {
                        *slot += gi;
                    }
                }
                Op::Mix { x, re_idx, im_idx } => {
                    let gc = g.as_c_owned();
                    let re = self.params.tensor(*re_idx);
                    let im = self.params.tensor(*im_idx);
                    let k = re.rows;
                    let xv = self.value(*x).as_c();
                    let mut gx = vec![Complex64::new(0.0, 0.0); k];
                    for r in 0..k {
                        for c in 0..k {
                            let m = Complex64::new(re.data[r * k + c], im.data[r * k + c]);
                            gx[c] += m.conj() * gc[r];
                        }
                    }
                    add_c(&mut grads, *x, &gx);
                    // g_M = g_z · x^H
                    for r in 0..k {
                        for c in 0..k {
                            let gm = gc[r] * xv[c].conj();
                            pgrads.tensors[*re_idx][r * k + c] += gm.re;
                            pgrads.tensors[*im_idx][r * k + c] += gm.im;
                        }
                    }
                }
                Op::DiagParam { x, re_idx, im_idx } => {
                    let gc = g.as_c_owned();
                    let re = &self.params.tensor(*re_idx).data;
                    let im = &self.params.tensor(*im_idx).data;
                    let xv = self.value(*x).as_c();
                    let gx: Vec<Complex64> = gc
                        .iter()
                        .enumerate()
                        .map(|(i, &z)| Complex64::new(re[i], im[i]).conj() * z)
                        .collect();
                    add_c(&mut grads, *x, &gx);
                    for i in 0..gc.len() {
                        let gm = gc[i] * xv[i].conj();
                        pgrads.tensors[*re_idx][i] += gm.re;
                        pgrads.tensors[*im_idx][i] += gm.im;
                    }
                }
                Op::HermSynth { x } => {
                    let gc = g.as_c_owned();
                    let k = self.value(*x).as_c().len();
                    let n = gc.len();
                    let gx: Vec<Complex64> = (0..k)
                        .map(|j| gc[j + 1] + gc[n - 1 - j].conj())
                        .collect();
                    add_c(&mut grads, *x, &gx);
                }
                Op::BandSlice { x, k } => {
                    let gc = g.as_c_owned();
                    let n = self.value(*x).as_c().len();
                    let mut gx = vec![Complex64::new(0.0, 0.0); n];
                    for j in 0..*k {
                        gx[j + 1] = gc[j];
                    }
                    add_c(&mut grads, *x, &gx);
                }
                Op::Gelu { x } => {
                    let gr = g.as_r_owned();
                    let xv = self.value(*x).as_r();
                    let gx: Vec<f64> = gr
                        .iter()
                        .zip(xv)
                        .map(|(&gi, &xi)| gi * gelu_derivative(xi))
                        .collect();
                    add_r(&mut grads, *x, &gx);
                }
                Op::LayerNorm {
                    x,
                    gain_idx,
                    bias_idx,
                    mean,
                    inv,
                } => {
                    let gr = g.as_r_owned();
                    let xv = self.value(*x).as_r();
                    let n = xv.len() as f64;
                    let gain = &self.params.tensor(*gain_idx).data;
                    let xhat: Vec<f64> = xv.iter().map(|&v| (v - mean) * inv).collect();
                    // parameter grads
                    {
                        let gg = &mut pgrads.tensors[*gain_idx];
                        for ((slot, &gi), &xh) in gg.iter_mut().zip(&gr).zip(&xhat) {
                            *slot += gi * xh;
                        }
                        let gb = &mut pgrads.tensors[*bias_idx];
                        for (slot, &gi) in gb.iter_mut().zip(&gr) {
                            *slot += gi;
                        }
                    }
                    // input grad
                    let h: Vec<f64> = gr.iter().zip(gain).map(|(&gi, &ga)| gi * ga).collect();
                    let mean_h = h.iter().sum::<f64>() / n;
                    let mean_hx = h.iter().zip(&xhat).map(|(&a, &b)| a * b).sum::<f64>() / n;
                    let gx: Vec<f64> = h
                        .iter()
                        .zip(&xhat)
                        .map(|(&hi, &xh)| inv * (hi - mean_h - xh * mean_hx))
                        .collect();
                    add_r(&mut grads, *x, &gx);
                }
                Op::LinComb { xs, cs } => {
                    let gc = g.as_c_owned();
                    for (&x, &c) in xs.iter().zip(cs) {
                        let gx: Vec<Complex64> = gc.iter().map(|&z| c.conj() * z).collect();
                        add_c(&mut grads, x, &gx);
                    }
                }
                Op::WeightedSumSq { x, w } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_c();
                    let gx: Vec<Complex64> = match w {
                        Some(weights) => xv
                            .iter()
                            .zip(weights)
                            .map(|(&z, &wi)| 2.0 * gs * wi * z)
                            .collect(),
                        None => xv.iter().map(|&z| 2.0 * gs * z).collect(),
                    };
                    add_c(&mut grads, *x, &gx);
                }
                Op::SumAbs { x } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_c();
                    let gx: Vec<Complex64> = xv
                        .iter()
                        .map(|&z| z * (gs / smooth_abs(z.re, z.im)))
                        .collect();
                    add_c(&mut grads, *x, &gx);
                }
                Op::SumAbs3 { x } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_c();
                    let gx: Vec<Complex64> = xv
                        .iter()
                        .map(|&z| z * (3.0 * gs * smooth_abs(z.re, z.im)))
                        .collect();
                    add_c(&mut grads, *x, &gx);
                }
                Op::MaxAbs { x, argmax } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_c();
                    let mut gx = vec![Complex64::new(0.0, 0.0); xv.len()];
                    let z = xv[*argmax];
                    gx[*argmax] = z * (gs / smooth_abs(z.re, z.im));
                    add_c(&mut grads, *x, &gx);
                }
                Op::SAdd { x, y } => {
                    let gs = g.as_s();
                    add_s(&mut grads, *x, gs);
                    add_s(&mut grads, *y, gs);
                }
                Op::SMul { x, y } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_s();
                    let yv = self.value(*y).as_s();
                    add_s(&mut grads, *x, gs * yv);
                    add_s(&mut grads, *y, gs * xv);
                }
                Op::SDiv { x, y } => {
                    let gs = g.as_s();
                    let xv = self.value(*x).as_s();
                    let yv = self.value(*y).as_s();
                    add_s(&mut grads, *x, gs / yv);
                    add_s(&mut grads, *y, -gs * xv / (yv * yv));
                }
                Op::SAffine { x, a } => {
                    add_s(&mut grads, *x, g.as_s() * a);
                }
                Op::SSqrt { x } => {
                    let xv = self.value(*x).as_s();
                    add_s(&mut grads, *x, g.as_s() * 0.5 / xv.sqrt().max(1e-150));
                }
                Op::SPow { x, a } => {
                    let xv = self.value(*x).as_s();
                    add_s(&mut grads, *x, g.as_s() * a * xv.powf(a - 1.0));
                }
                Op::SSoftplus { x } => {
                    let xv = self.value(*x).as_s();
                    add_s(&mut grads, *x, g.as_s() * softplus_derivative(xv));
                }
                Op::SRecip { x } => {
                    let xv = self.value(*x).as_s();
                    add_s(&mut grads, *x, -g.as_s() / (xv * xv));
                }
                Op::SVMul { s, x } => {
                    let gc = g.as_c_owned();
                    let sv = self.value(*s).as_s();
                    let xv = self.value(*x).as_c();
                    let gx: Vec<Complex64> = gc.iter().map(|&z| sv * z).collect();
                    add_c(&mut grads, *x, &gx);
                    let gs: f64 = gc.iter().zip(xv).map(|(&z, &v)| (z.conj() * v).re).sum();
                    add_s(&mut grads, *s, gs);
                }
                Op::SSum { xs } => {
                    let gs = g.as_s();
                    for &x in xs {
                        add_s(&mut grads, x, gs);
                    }
                }
                Op::Pick { x, index } => {
                    let len = self.value(*x).as_r().len();
                    let mut gx = vec![0.0; len];
                    gx[*index] = g.as_s();
                    add_r(&mut grads, *x, &gx);
                }
            }
        }
        let input_grads = inputs
            .iter()
            .map(|n| {
                kept.remove(&n.0)
                    .unwrap_or_else(|| self.value(*n).zeros_like())
            })
            .collect();
        Ok((pgrads, input_grads))
    }
}

impl Value {
    fn as_c_owned(&self) -> Vec<Complex64> {
        self.as_c().to_vec()
    }

    fn as_r_owned(&self) -> Vec<f64> {
        self.as_r().to_vec()
    }
}

fn ensure<'a>(grads: &'a mut [Option<Value>], id: NodeId, template: &Value) -> &'a mut Value {
    if grads[id.0].is_none() {
        grads[id.0] = Some(template.zeros_like());
    }
    grads[id.0].as_mut().unwrap()
}

fn add_c(grads: &mut [Option<Value>], id: NodeId, inc: &[Complex64]) {
    let template = Value::C(vec![Complex64::new(0.0, 0.0); inc.len()]);
    match ensure(grads, id, &template) {
        Value::C(v) => {
            for (a, b) in v.iter_mut().zip(inc) {
                *a += b;
            }
        }
        _ => panic!("gradient shape mismatch (complex)"),
    }
}

fn add_r(grads: &mut [Option<Value>], id: NodeId, inc: &[f64]) {
    let template = Value::R(vec![0.0; inc.len()]);
    match ensure(grads, id, &template) {
        Value::R(v) => {
            for (a, b) in v.iter_mut().zip(inc) {
                *a += b;
            }
        }
        _ => panic!("gradient shape mismatch (real)"),
    }
}

fn add_s(grads: &mut [Option<Value>], id: NodeId, inc: f64) {
    let template = Value::S(0.0);
    match ensure(grads, id, &template) {
        Value::S(v) => *v += inc,
        _ => panic!("gradient shape mismatch (scalar)"),
    }
}
