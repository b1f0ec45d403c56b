//! Dense kernels, differentiable primitives, optimisation and gradient
//! checking. All arithmetic is `f64`.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod ops;
pub mod param;
pub mod rng;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, TensorCheck};
pub use matrix::{axpy, dot, norm2, Matrix};
pub use ops::{
    concat_rows, concat_rows_backward, elementwise_add, elementwise_add_backward, l2_normalize,
    l2_normalize_backward, leaky_relu, leaky_relu_backward, linear, linear_backward, sigmoid,
    sigmoid_backward, softmax_over_group, softmax_over_group_backward, Activation, NORM_EPS,
};
pub use param::{ParamStore, Parameter};
pub use rng::{mix, mix3, rng_from, xavier_init};
