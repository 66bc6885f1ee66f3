use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Adam optimizer state: per-parameter first/second moment buffers plus the
/// shared step counter used for bias correction. Parameters must be passed
/// to `step` in the same order every time; moment buffers are allocated on
/// first use.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar = f32> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T) -> Self {
        Adam {
            lr,
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Apply one bias-corrected update in place, reading each parameter's
    /// accumulated gradient (a missing gradient buffer counts as zero).
    pub fn step(&mut self, params: &[Tensor<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.v = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        }
        if self.m.len() != params.len() {
            return shape_err(
                "adam_step",
                format!("optimizer tracks {} parameters, got {}", self.m.len(), params.len()),
            );
        }
        self.t += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        for (idx, p) in params.iter().enumerate() {
            if self.m[idx].len() != p.len() {
                return shape_err(
                    "adam_step",
                    format!("parameter {idx} has {} values, moment buffer has {}", p.len(), self.m[idx].len()),
                );
            }
            let grad = p.grad();
            let g = match grad.as_deref() {
                Some(g) => g,
                None => continue, // zero gradient: moments decay toward zero, update stays zero
            };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let mut data = p.data_mut();
            for i in 0..data.len() {
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] = data[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    /// Snapshot of the moment buffers, aligned with the parameter order.
    pub fn moments(&self) -> (&[Vec<T>], &[Vec<T>]) {
        (&self.m, &self.v)
    }

    /// Restore a snapshot taken with `moments` (used by checkpoint loading).
    pub fn restore(&mut self, t: u64, m: Vec<Vec<T>>, v: Vec<Vec<T>>) {
        self.t = t;
        self.m = m;
        self.v = v;
    }
}
