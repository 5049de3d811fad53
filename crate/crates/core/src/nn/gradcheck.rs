//! Central-difference gradient oracle for [`Network::backward`].
//!
//! The scalar loss is [`mse_loss`] against `targets`. Parameters whose ±h
//! perturbation moves any relu-family preactivation across zero are skipped:
//! the central difference straddles a kink there and is not a valid reference.

use super::{mse_loss, GradientSet, Network};
use crate::error::Result;
use crate::par;
use crate::tensor::Tensor;

/// Relative errors are measured against `max(REL_FLOOR, |numeric|)`.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

/// Max relative error between backprop and central differences over every
/// parameter of `net`.
pub fn finite_diff_check(net: &Network, input: &Tensor, targets: &Tensor, h: f64) -> Result<f64> {
    Ok(finite_diff_report(net, input, targets, h)?.max_relative_error)
}

pub fn finite_diff_report(
    net: &Network,
    input: &Tensor,
    targets: &Tensor,
    h: f64,
) -> Result<GradCheckReport> {
    let mut work = net.clone();
    let out = work.forward(input)?;
    let (_, dloss) = mse_loss(&out, targets)?;
    let grads = work.backward(&dloss)?;
    compare_with_numeric(net, input, targets, h, &grads)
}

/// Compares a caller-supplied gradient set against central differences.
pub fn compare_with_numeric(
    net: &Network,
    input: &Tensor,
    targets: &Tensor,
    h: f64,
    analytic: &GradientSet,
) -> Result<GradCheckReport> {
    net.check_congruent(analytic)?;
    let n = net.parameter_count();
    if n == 0 {
        return Ok(GradCheckReport { max_relative_error: 0.0, checked: 0, skipped_kinks: 0 });
    }
    let (_, base_sig) = net.predict_with_signature(input)?;
    let analytic: Vec<f64> = analytic.flat().collect();

    let eval = |probe: &mut Network, i: usize, delta: f64| -> Result<(f64, bool)> {
        let p = probe.param_mut(i).expect("index in range");
        let orig = *p;
        *p = orig + delta;
        let (y, sig) = probe.predict_with_signature(input)?;
        *probe.param_mut(i).expect("index in range") = orig;
        Ok((mse_loss(&y, targets)?.0, sig == base_sig))
    };

    let per_param = par::map_indexed(n, |i| -> Result<Option<f64>> {
        let mut probe = net.clone();
        let (up, same_up) = eval(&mut probe, i, h)?;
        let (down, same_down) = eval(&mut probe, i, -h)?;
        if !(same_up && same_down) {
            return Ok(None);
        }
        let numeric = (up - down) / (2.0 * h);
        Ok(Some((analytic[i] - numeric).abs() / numeric.abs().max(REL_FLOOR)))
    });

    let mut report = GradCheckReport { max_relative_error: 0.0, checked: 0, skipped_kinks: 0 };
    for r in per_param {
        match r? {
            Some(e) => {
                report.checked += 1;
                report.max_relative_error = report.max_relative_error.max(e);
            }
            None => report.skipped_kinks += 1,
        }
    }
    Ok(report)
}
