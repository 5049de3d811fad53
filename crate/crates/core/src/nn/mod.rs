//! Minimal dense-network engine: layers, losses, exact backprop and
//! plain gradient-descent updates.

mod activation;
mod gradcheck;
mod layer;
mod loss;
mod network;

pub use activation::{sigmoid, Activation, LEAKY_SLOPE};
pub use gradcheck::{compare_with_numeric, finite_diff_check, finite_diff_report, GradCheckReport, REL_FLOOR};
pub use layer::{DenseLayer, LayerGradient};
pub use loss::{bce_loss, mse_loss, BCE_EPS};
pub use network::{GradientSet, Network};

#[cfg(test)]
mod tests;
