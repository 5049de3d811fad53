use crate::error::{FscoError, Result};
use crate::tensor::Tensor;

/// Predictions are clamped into `[EPS, 1 − EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;

/// Mean binary cross-entropy over the batch and its gradient with respect to
/// the predictions.
pub fn bce_loss(predictions: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    check_pair(predictions, targets)?;
    if let Some(t) = targets.data().iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(FscoError::Argument(format!("BCE target {t} is not 0 or 1")));
    }
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(predictions.len());
    for (&p, &t) in predictions.data().iter().zip(targets.data()) {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.push((-t / p + (1.0 - t) / (1.0 - p)) / n);
    }
    Ok((loss / n, Tensor::new(predictions.shape().to_vec(), grad)?))
}

/// Mean over the batch of the summed squared error per row.
pub fn mse_loss(predictions: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    check_pair(predictions, targets)?;
    let batch = predictions.rows().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(predictions.len());
    for (&p, &t) in predictions.data().iter().zip(targets.data()) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / batch);
    }
    Ok((loss / batch, Tensor::new(predictions.shape().to_vec(), grad)?))
}

fn check_pair(predictions: &Tensor, targets: &Tensor) -> Result<()> {
    if predictions.shape() != targets.shape() {
        return Err(FscoError::Dimension(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Tensor {
        Tensor::matrix(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn bce_half_is_ln2() {
        let (l, _) = bce_loss(&col(&[0.5]), &col(&[1.0])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_near_certain_is_near_zero() {
        let (l, _) = bce_loss(&col(&[1.0 - BCE_EPS]), &col(&[1.0])).unwrap();
        assert!(l < 1e-6);
        // exact 0 and 1 are clamped rather than producing infinities
        let (l, g) = bce_loss(&col(&[0.0, 1.0]), &col(&[1.0, 0.0])).unwrap();
        assert!(l.is_finite() && g.is_finite());
    }

    #[test]
    fn bce_two_sample_value() {
        // -(ln 0.8 + ln 0.7) / 2
        let (l, _) = bce_loss(&col(&[0.8, 0.3]), &col(&[1.0, 0.0])).unwrap();
        assert!((l - 0.289_909_247_626_471_1).abs() < 1e-12, "{l}");
    }

    #[test]
    fn bce_rejects_soft_targets() {
        assert!(matches!(
            bce_loss(&col(&[0.5]), &col(&[0.3])),
            Err(FscoError::Argument(_))
        ));
    }

    #[test]
    fn bce_gradient_matches_finite_difference() {
        let p = [0.13, 0.5, 0.77, 0.91];
        let t = [1.0, 0.0, 1.0, 0.0];
        let (_, g) = bce_loss(&col(&p), &col(&t)).unwrap();
        let h = 1e-6;
        for i in 0..p.len() {
            let mut up = p;
            let mut dn = p;
            up[i] += h;
            dn[i] -= h;
            let fd = (bce_loss(&col(&up), &col(&t)).unwrap().0
                - bce_loss(&col(&dn), &col(&t)).unwrap().0)
                / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-6, "{i}: {fd} vs {}", g.data()[i]);
        }
    }

    #[test]
    fn mse_one_parameter_case() {
        let (l, g) = mse_loss(&col(&[2.0]), &col(&[0.0])).unwrap();
        assert_eq!(l, 4.0);
        assert_eq!(g.data(), &[4.0]);
    }
}
