//! Finite-difference gradient checking.
//!
//! The numeric side only ever evaluates forward passes, so it is independent
//! of the backward rules it verifies. Checks run at `f64`, where central
//! differences with h = 1e-5 * max(1, |x|) leave plenty of headroom under a
//! 1e-4 relative tolerance.

use crate::error::Result;
use crate::graph::backward;
use crate::tensor::Tensor;

/// Worst observed deviation for one checked tensor.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_input: usize,
    pub worst_element: usize,
    pub analytic: f64,
    pub numeric: f64,
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1.0)
}

/// Compare analytic gradients of `f` against central finite differences for
/// every input marked `requires_grad`. `f` must be a pure function of the
/// input values (rebuilt tape per call) returning a scalar loss.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], f: F) -> Result<GradCheckReport>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    // Analytic pass.
    for t in inputs {
        if t.requires_grad() {
            t.zero_grad();
        }
    }
    let loss = f(inputs)?;
    backward(&loss)?;
    let analytic: Vec<Option<Vec<f64>>> = inputs
        .iter()
        .map(|t| if t.requires_grad() { t.grad() } else { None })
        .collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_input: 0,
        worst_element: 0,
        analytic: 0.0,
        numeric: 0.0,
    };

    for (ti, t) in inputs.iter().enumerate() {
        let Some(grad) = analytic[ti].as_ref() else {
            continue;
        };
        for ei in 0..t.len() {
            let x0 = t.data()[ei];
            let h = 1e-5 * x0.abs().max(1.0);
            t.data_mut()[ei] = x0 + h;
            let up = f(inputs)?.item();
            t.data_mut()[ei] = x0 - h;
            let down = f(inputs)?.item();
            t.data_mut()[ei] = x0;
            let numeric = (up - down) / (2.0 * h);
            let err = rel_err(grad[ei], numeric);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_input = ti;
                report.worst_element = ei;
                report.analytic = grad[ei];
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Panic unless every analytic gradient matches finite differences within
/// `tol` relative error.
pub fn assert_gradients<F>(inputs: &[Tensor<f64>], f: F, tol: f64, what: &str)
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    let report = check_gradients(inputs, f).unwrap_or_else(|e| panic!("{what}: {e}"));
    assert!(
        report.max_rel_err < tol,
        "{what}: gradient mismatch at input {} element {}: analytic {} vs numeric {} (rel err {:.3e} >= {tol})",
        report.worst_input,
        report.worst_element,
        report.analytic,
        report.numeric,
        report.max_rel_err
    );
}

/// Random-projection loss: sum(out * r) with fixed weights, reducing any
/// op output to a scalar without masking gradient structure.
pub fn projection_loss(out: &Tensor<f64>, weights: &Tensor<f64>) -> Result<Tensor<f64>> {
    Ok(crate::ops::sum(&crate::ops::mul(out, weights)?))
}
