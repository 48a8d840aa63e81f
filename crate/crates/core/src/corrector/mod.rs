//! Latent neural corrector: trunk basis, restriction/prolongation, dynamic
//! scaling, latent operator, spectral normalisation, Lipschitz accounting.

mod basis;
mod net;

pub use basis::{build_trunk_basis, TrunkBasis};
pub use net::{
    apply_scaling, bilinear_head_norm, diag_sup_norm, head_local_norm, herm_synth,
    mixing_layer_bound, quad_head, quad_head_xy, gelu, gelu_derivative, layer_norm, lipschitz_bound, scale_features, smooth_abs,
    softplus, softplus_derivative, spectral_norm_estimate, spectral_norm_estimate_complex,
    spectral_norm_product, spectral_normalize, Architecture, CorrectorParams, ScaleDirection,
    Tensor, TensorInfo, TensorRole, FEATURE_VERSION, GELU_LIPSCHITZ, LAYER_NORM_EPS,
    N_SCALE_FEATURES, QUAD_INPUT_BOUND,
};
