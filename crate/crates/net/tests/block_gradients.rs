//! Finite-difference gradient checks through whole blocks (f64), plus the
//! gradient-flow invariant: every trainable tensor of every block receives a
//! nonzero gradient on random input.

use vxae_net::{block_forward, init_block, squeeze_excite, BlockParams, BlockSpec};
use vxae_tensor::gradcheck::{assert_gradients, projection_loss};
use vxae_tensor::rng::SplitMix64;
use vxae_tensor::{backward, Mode, Tensor};

const TOL: f64 = 1e-4;

fn random_tensor(shape: &[usize], rng: &mut SplitMix64, requires_grad: bool) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    if requires_grad {
        Tensor::param(shape, data).unwrap()
    } else {
        Tensor::from_vec(shape, data).unwrap()
    }
}

fn trainable_tensors(params: &BlockParams<f64>) -> Vec<(String, Tensor<f64>)> {
    let mut out = Vec::new();
    vxae_net::visit_block_tensors(params, "p", &mut |name, t, trainable| {
        if trainable {
            out.push((name, t.clone()));
        }
    });
    out
}

fn check_block(spec: &BlockSpec, extent: usize, mode: Mode, what: &str, rng: &mut SplitMix64) {
    let params = init_block::<f64>(spec, rng, true);
    let x = random_tensor(&[2, spec.c_in, extent, extent, extent], rng, true);
    let y0 = block_forward(spec, &params, &x, mode, 3, true).unwrap();
    let r = random_tensor(y0.shape(), rng, false);

    let mut inputs = vec![x.clone()];
    inputs.extend(trainable_tensors(&params).into_iter().map(|(_, t)| t));
    assert_gradients(
        &inputs,
        |_| projection_loss(&block_forward(spec, &params, &x, mode, 3, true).expect("forward"), &r),
        TOL,
        what,
    );
}

#[test]
fn mbconv_gradients_train_mode() {
    let mut rng = SplitMix64::new(201);
    for (i, &(cin, cout, stride, extent)) in [
        (2usize, 2usize, 1usize, 4usize), // residual skip active
        (2, 3, 1, 4),
        (3, 2, 2, 6),
        (2, 4, 2, 4),
        (4, 4, 1, 5),
    ]
    .iter()
    .enumerate()
    {
        let mut spec = BlockSpec::mbconv(cin, cout, 3, stride);
        spec.expand = 2;
        check_block(&spec, extent, Mode::train(7, i as u64), &format!("mbconv case {i}"), &mut rng);
    }
}

#[test]
fn mbconv_transpose_gradients_train_mode() {
    let mut rng = SplitMix64::new(202);
    for (i, &(cin, cout, kernel, stride, extent)) in [
        (2usize, 2usize, 3usize, 1usize, 4usize),
        (3, 2, 4, 2, 3),
        (2, 3, 4, 2, 3),
        (4, 2, 3, 1, 4),
        (2, 2, 2, 2, 3),
    ]
    .iter()
    .enumerate()
    {
        let mut spec = BlockSpec::mbconv_transpose(cin, cout, kernel, stride);
        spec.expand = 2;
        check_block(&spec, extent, Mode::train(8, i as u64), &format!("mbconv_t case {i}"), &mut rng);
    }
}

#[test]
fn mbconv_gradients_eval_mode() {
    let mut rng = SplitMix64::new(203);
    let spec = BlockSpec::mbconv(2, 2, 3, 1);
    check_block(&spec, 4, Mode::Eval, "mbconv eval", &mut rng);
}

#[test]
fn plain_block_gradients() {
    let mut rng = SplitMix64::new(204);
    for (i, spec) in [
        BlockSpec::conv3d(2, 3, 3, 1),
        BlockSpec::conv3d_transpose(3, 2, 2, 2),
        BlockSpec::dense(16, 8),
        BlockSpec::dropout(0.3),
        BlockSpec::max_pool(2, 2),
    ]
    .iter()
    .enumerate()
    {
        let params = init_block::<f64>(spec, &mut rng, true);
        let mode = Mode::train(5, i as u64);
        let x = match spec.kind {
            vxae_net::BlockKind::Dense => random_tensor(&[2, 16], &mut rng, true),
            _ => random_tensor(&[2, spec.c_in.max(2), 4, 4, 4], &mut rng, true),
        };
        let mut spec = spec.clone();
        if !matches!(spec.kind, vxae_net::BlockKind::Dense) {
            spec.c_in = spec.c_in.max(2);
        }
        let y0 = block_forward(&spec, &params, &x, mode, 0, true).unwrap();
        let r = random_tensor(y0.shape(), &mut rng, false);
        let mut inputs = vec![x.clone()];
        inputs.extend(trainable_tensors(&params).into_iter().map(|(_, t)| t));
        assert_gradients(
            &inputs,
            |_| projection_loss(&block_forward(&spec, &params, &x, mode, 0, true).expect("forward"), &r),
            TOL,
            &format!("plain block case {i}"),
        );
    }
}

#[test]
fn squeeze_excite_gradients() {
    let mut rng = SplitMix64::new(205);
    for i in 0..3 {
        let spec = BlockSpec::mbconv(3, 3, 3, 1);
        let BlockParams::MbConv(p) = init_block::<f64>(&spec, &mut rng, true) else {
            panic!();
        };
        let channels = spec.expanded_channels();
        let x = random_tensor(&[2, channels, 3, 3, 3], &mut rng, true);
        let r = random_tensor(&[2, channels, 3, 3, 3], &mut rng, false);
        let inputs = vec![x.clone(), p.se.w1.clone(), p.se.b1.clone(), p.se.w2.clone(), p.se.b2.clone()];
        assert_gradients(
            &inputs,
            |_| projection_loss(&squeeze_excite(&x, &p.se).expect("se forward"), &r),
            TOL,
            &format!("squeeze_excite case {i}"),
        );
    }
}

#[test]
fn gradients_reach_every_block_parameter() {
    let mut rng = SplitMix64::new(206);
    for spec in [
        BlockSpec::mbconv(2, 3, 3, 2),
        BlockSpec::mbconv_transpose(3, 2, 4, 2),
        BlockSpec::conv3d(2, 2, 3, 1),
        BlockSpec::conv3d_transpose(2, 2, 2, 2),
        BlockSpec::dense(8, 4),
    ] {
        let params = init_block::<f64>(&spec, &mut rng, true);
        let x = match spec.kind {
            vxae_net::BlockKind::Dense => random_tensor(&[3, 8], &mut rng, true),
            _ => random_tensor(&[3, spec.c_in, 6, 6, 6], &mut rng, true),
        };
        for (_, t) in trainable_tensors(&params) {
            t.zero_grad();
        }
        let y = block_forward(&spec, &params, &x, Mode::train(3, 0), 1, true).unwrap();
        let r = random_tensor(y.shape(), &mut rng, false);
        let loss = projection_loss(&y, &r).unwrap();
        backward(&loss).unwrap();
        for (name, t) in trainable_tensors(&params) {
            let g = t.grad().expect("grad allocated");
            assert!(
                g.iter().any(|&v| v != 0.0),
                "{}: parameter {name} received an all-zero gradient",
                spec.kind.as_str()
            );
        }
    }
}
