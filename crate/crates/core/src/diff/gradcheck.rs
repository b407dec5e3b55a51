use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::Result;

/// Compares the reverse-mode gradient of a scalar function against central
/// finite differences with the given `step`.
///
/// Returns `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`.
pub fn grad_check<F>(f: F, x: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let xv = tape.param(x.clone());
    let loss = f(&mut tape, xv)?;
    tape.backward(loss)?;
    let analytic = tape.grad(xv).cloned().expect("leaf gradient populated");

    let eval = |probe: &Tensor| -> Result<f64> {
        let mut t = Tape::new();
        let v = t.constant(probe.clone());
        let out = f(&mut t, v)?;
        Ok(t.value(out).item())
    };

    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let plus = eval(&probe)?;
        probe.data_mut()[i] = orig - step;
        let minus = eval(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic.data()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let x = Tensor::scalar(3.0);
        let err = grad_check(
            |t, v| {
                let sq = t.mul(v, v)?;
                Ok(t.sum(sq))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn relu_far_from_kink() {
        let x = Tensor::from_rows(&[vec![2.0, -3.0, 0.7]]).unwrap();
        let err = grad_check(
            |t, v| {
                let r = t.relu(v);
                Ok(t.sum(r))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn softmax_log_composite() {
        let x = Tensor::from_rows(&[vec![0.2, -1.0, 0.5], vec![1.5, 0.3, -0.4]]).unwrap();
        let w = std::sync::Arc::new(
            Tensor::from_rows(&[vec![1.0, 0.5, -2.0], vec![0.3, -1.0, 0.9]]).unwrap(),
        );
        let err = grad_check(
            |t, v| {
                let s = t.row_softmax(v);
                let l = t.log_guarded(s);
                let m = t.mul_const(l, w.clone())?;
                Ok(t.sum(m))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-5, "{err}");
    }
}
