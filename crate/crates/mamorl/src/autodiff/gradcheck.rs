//! Central finite-difference verification of analytic gradients.

use super::{Tape, Tensor};
use crate::error::{Error, Result};

/// Compare the backward-pass gradient of a scalar-valued graph against
/// central finite differences, coordinate by coordinate of `x`.
///
/// `build` must rebuild the same graph deterministically each call (it is
/// re-run with perturbed values of `x`). Returns
/// `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`.
pub fn finite_difference_check<F>(build: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&Tape) -> Result<Tensor>,
{
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Config(format!(
            "finite-difference eps must lie in (0, 1e-3], got {eps}"
        )));
    }
    let tape = Tape::new();
    let loss = build(&tape)?;
    if loss.len() != 1 {
        return Err(Error::NonScalarLoss(loss.shape().to_vec()));
    }
    x.zero_grad();
    tape.backward(&loss)?;
    let analytic = x.grad_vec();

    let mut max_err: f64 = 0.0;
    for i in 0..x.len() {
        x.nudge_value(i, eps);
        let up = build(&Tape::new())?.item();
        x.nudge_value(i, -2.0 * eps);
        let down = build(&Tape::new())?.item();
        x.nudge_value(i, eps);
        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / f64::max(1.0, analytic[i].abs());
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact_to_rounding() {
        let x = Tensor::param(vec![2], vec![1.0, 2.0], "x");
        let err = finite_difference_check(
            |tape| {
                let sq = tape.mul(&x, &x)?;
                Ok(tape.sum(&sq))
            },
            &x,
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-8, "quadratic fd error {err}");
    }

    #[test]
    fn rejects_out_of_range_eps() {
        let x = Tensor::param(vec![1], vec![1.0], "x");
        let res = finite_difference_check(|tape| Ok(tape.sum(&x)), &x, 1e-2);
        assert!(res.is_err());
    }
}
