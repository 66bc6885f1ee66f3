use crate::error::{arg_err, Result};
use crate::ops::Mode;
use crate::rng::counter_uniform;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Inverted dropout. In train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); eval mode is the identity.
///
/// The mask is keyed by (seed, step, salt, element index) through a
/// counter-based generator, so it does not depend on thread count or on how
/// many random numbers other ops consumed. `salt` distinguishes dropout
/// sites within one network.
pub fn dropout<T: Scalar>(input: &Tensor<T>, rate: f64, mode: Mode, salt: u64) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&rate) {
        return arg_err("dropout", format!("rate must be in [0, 1), got {rate}"));
    }
    let (seed, step) = match mode {
        Mode::Eval => return Ok(input.clone()),
        Mode::Train { seed, step } => (seed, step),
    };
    if rate == 0.0 {
        return Ok(input.clone());
    }

    let scale = T::from_f64(1.0 / (1.0 - rate));
    let factors: Vec<T> = (0..input.len() as u64)
        .map(|i| {
            if counter_uniform(seed, step, salt, i) >= rate {
                scale
            } else {
                T::zero()
            }
        })
        .collect();
    let data: Vec<T> = input.data().iter().zip(&factors).map(|(x, f)| *x * *f).collect();
    Ok(Tensor::from_op(
        input.shape().to_vec(),
        data,
        vec![input.clone()],
        Box::new(move |args| {
            let dx = args.needs[0].then(|| {
                args.out_grad.iter().zip(&factors).map(|(g, f)| *g * *f).collect()
            });
            vec![dx]
        }),
    ))
}
