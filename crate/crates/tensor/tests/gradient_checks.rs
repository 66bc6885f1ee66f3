//! Central finite-difference gradient checks for every differentiable op,
//! run at f64 on several random small shapes each.

use vxae_tensor::gradcheck::{assert_gradients, projection_loss};
use vxae_tensor::ops;
use vxae_tensor::rng::SplitMix64;
use vxae_tensor::{Mode, Tensor};

const TOL: f64 = 1e-4;

fn random_param(shape: &[usize], rng: &mut SplitMix64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    Tensor::param(shape, data).unwrap()
}

fn random_const(shape: &[usize], rng: &mut SplitMix64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    Tensor::from_vec(shape, data).unwrap()
}

#[test]
fn conv3d_gradients() {
    let mut rng = SplitMix64::new(101);
    for (i, &(cin, cout, d, k, s, p)) in [
        (1usize, 1usize, 4usize, 3usize, 1usize, 1usize),
        (2, 3, 5, 3, 2, 1),
        (3, 2, 6, 3, 1, 0),
        (2, 2, 4, 1, 1, 0),
        (1, 4, 6, 5, 2, 2),
    ]
    .iter()
    .enumerate()
    {
        let x = random_param(&[2, cin, d, d, d], &mut rng);
        let w = random_param(&[cout, cin, k, k, k], &mut rng);
        let b = random_param(&[cout], &mut rng);
        let y0 = ops::conv3d(&x, &w, Some(&b), s, p).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x, w, b],
            |t| projection_loss(&ops::conv3d(&t[0], &t[1], Some(&t[2]), s, p)?, &r),
            TOL,
            &format!("conv3d case {i}"),
        );
    }
}

#[test]
fn conv3d_transpose_gradients() {
    let mut rng = SplitMix64::new(102);
    for (i, &(cin, cout, d, k, s, p)) in [
        (1usize, 1usize, 3usize, 3usize, 1usize, 1usize),
        (2, 2, 3, 4, 2, 1),
        (3, 1, 4, 2, 2, 0),
        (2, 3, 3, 3, 2, 1),
        (1, 2, 5, 3, 1, 0),
    ]
    .iter()
    .enumerate()
    {
        let x = random_param(&[2, cin, d, d, d], &mut rng);
        let w = random_param(&[cin, cout, k, k, k], &mut rng);
        let b = random_param(&[cout], &mut rng);
        let y0 = ops::conv3d_transpose(&x, &w, Some(&b), s, p).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x, w, b],
            |t| projection_loss(&ops::conv3d_transpose(&t[0], &t[1], Some(&t[2]), s, p)?, &r),
            TOL,
            &format!("conv3d_transpose case {i}"),
        );
    }
}

#[test]
fn depthwise_conv3d_gradients() {
    let mut rng = SplitMix64::new(103);
    for (i, &(c, d, k, s, p)) in [
        (1usize, 4usize, 3usize, 1usize, 1usize),
        (3, 5, 3, 2, 1),
        (2, 6, 3, 1, 0),
        (4, 4, 1, 1, 0),
        (2, 6, 5, 2, 2),
    ]
    .iter()
    .enumerate()
    {
        let x = random_param(&[2, c, d, d, d], &mut rng);
        let w = random_param(&[c, 1, k, k, k], &mut rng);
        let y0 = ops::depthwise_conv3d(&x, &w, s, p).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x, w],
            |t| projection_loss(&ops::depthwise_conv3d(&t[0], &t[1], s, p)?, &r),
            TOL,
            &format!("depthwise_conv3d case {i}"),
        );
    }
}

#[test]
fn depthwise_conv3d_transpose_gradients() {
    let mut rng = SplitMix64::new(104);
    for (i, &(c, d, k, s, p)) in [
        (1usize, 3usize, 3usize, 1usize, 1usize),
        (2, 3, 4, 2, 1),
        (3, 4, 2, 2, 0),
        (2, 3, 3, 2, 1),
        (1, 5, 3, 1, 0),
    ]
    .iter()
    .enumerate()
    {
        let x = random_param(&[2, c, d, d, d], &mut rng);
        let w = random_param(&[c, 1, k, k, k], &mut rng);
        let y0 = ops::depthwise_conv3d_transpose(&x, &w, s, p).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x, w],
            |t| projection_loss(&ops::depthwise_conv3d_transpose(&t[0], &t[1], s, p)?, &r),
            TOL,
            &format!("depthwise_conv3d_transpose case {i}"),
        );
    }
}

#[test]
fn pointwise_conv3d_gradients() {
    let mut rng = SplitMix64::new(105);
    for (i, &(cin, cout, d)) in [(1usize, 1usize, 3usize), (2, 4, 4), (4, 2, 3), (3, 3, 5), (2, 2, 6)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[2, cin, d, d, d], &mut rng);
        let w = random_param(&[cout, cin, 1, 1, 1], &mut rng);
        let y0 = ops::pointwise_conv3d(&x, &w).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x, w],
            |t| projection_loss(&ops::pointwise_conv3d(&t[0], &t[1])?, &r),
            TOL,
            &format!("pointwise case {i}"),
        );
    }
}

#[test]
fn silu_gradients_including_origin() {
    let mut rng = SplitMix64::new(106);
    for i in 0..5 {
        let x = random_param(&[3, 7], &mut rng);
        let r = random_const(&[3, 7], &mut rng);
        assert_gradients(
            &[x],
            |t| projection_loss(&ops::silu(&t[0]), &r),
            TOL,
            &format!("silu case {i}"),
        );
    }
    // d/dx silu at 0 is exactly 0.5.
    let x = Tensor::<f64>::param(&[1], vec![0.0]).unwrap();
    let y = ops::silu(&x);
    let loss = ops::sum(&y);
    vxae_tensor::backward(&loss).unwrap();
    assert!((x.grad().unwrap()[0] - 0.5).abs() < 1e-12);
}

#[test]
fn sigmoid_gradients() {
    let mut rng = SplitMix64::new(107);
    for i in 0..5 {
        let x = random_param(&[2, 9], &mut rng);
        let r = random_const(&[2, 9], &mut rng);
        assert_gradients(
            &[x],
            |t| projection_loss(&ops::sigmoid(&t[0]), &r),
            TOL,
            &format!("sigmoid case {i}"),
        );
    }
}

#[test]
fn batch_norm_gradients_train_mode() {
    let mut rng = SplitMix64::new(108);
    for (i, &(n, c, d)) in [(2usize, 1usize, 3usize), (2, 3, 3), (4, 2, 2), (1, 2, 5), (3, 4, 2)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[n, c, d, d, d], &mut rng);
        let g = random_param(&[c], &mut rng);
        let b = random_param(&[c], &mut rng);
        let rm = Tensor::zeros(&[c]);
        let rv = Tensor::full(&[c], 1.0);
        let r = random_const(&[n, c, d, d, d], &mut rng);
        assert_gradients(
            &[x, g, b],
            |t| {
                projection_loss(
                    &ops::batch_norm(&t[0], &t[1], &t[2], &rm, &rv, Mode::train(0, 0), 0.1, 1e-5)?,
                    &r,
                )
            },
            TOL,
            &format!("batch_norm train case {i}"),
        );
    }
}

#[test]
fn batch_norm_gradients_eval_mode() {
    let mut rng = SplitMix64::new(109);
    for (i, &(n, c, d)) in [(1usize, 2usize, 3usize), (2, 3, 2), (2, 1, 4), (1, 4, 3), (2, 2, 3)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[n, c, d, d, d], &mut rng);
        let g = random_param(&[c], &mut rng);
        let b = random_param(&[c], &mut rng);
        let rm = random_const(&[c], &mut rng);
        let rv_data: Vec<f64> = (0..c).map(|_| 0.5 + rng.next_f64()).collect();
        let rv = Tensor::from_vec(&[c], rv_data).unwrap();
        let r = random_const(&[n, c, d, d, d], &mut rng);
        assert_gradients(
            &[x, g, b],
            |t| {
                projection_loss(
                    &ops::batch_norm(&t[0], &t[1], &t[2], &rm, &rv, Mode::Eval, 0.1, 1e-5)?,
                    &r,
                )
            },
            TOL,
            &format!("batch_norm eval case {i}"),
        );
    }
}

#[test]
fn max_pool_gradients() {
    let mut rng = SplitMix64::new(110);
    for (i, &(c, d, k, s)) in [
        (1usize, 4usize, 2usize, 2usize),
        (2, 6, 2, 2),
        (3, 5, 3, 1),
        (1, 6, 3, 3),
        (2, 4, 2, 1),
    ]
    .iter()
    .enumerate()
    {
        let x = random_param(&[2, c, d, d, d], &mut rng);
        let y0 = ops::max_pool3d(&x, k, s).unwrap();
        let r = random_const(y0.shape(), &mut rng);
        assert_gradients(
            &[x],
            |t| projection_loss(&ops::max_pool3d(&t[0], k, s)?, &r),
            TOL,
            &format!("max_pool case {i}"),
        );
    }
}

#[test]
fn global_avg_pool_gradients() {
    let mut rng = SplitMix64::new(111);
    for (i, &(n, c, d)) in [(1usize, 1usize, 3usize), (2, 3, 4), (3, 2, 2), (1, 4, 5), (2, 2, 6)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[n, c, d, d, d], &mut rng);
        let r = random_const(&[n, c], &mut rng);
        assert_gradients(
            &[x],
            |t| projection_loss(&ops::global_avg_pool3d(&t[0])?, &r),
            TOL,
            &format!("global_avg_pool case {i}"),
        );
    }
}

#[test]
fn dense_gradients() {
    let mut rng = SplitMix64::new(112);
    for (i, &(n, f, g)) in [(1usize, 4usize, 3usize), (3, 8, 2), (2, 16, 16), (4, 2, 7), (2, 10, 1)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[n, f], &mut rng);
        let w = random_param(&[f, g], &mut rng);
        let b = random_param(&[g], &mut rng);
        let r = random_const(&[n, g], &mut rng);
        assert_gradients(
            &[x, w, b],
            |t| projection_loss(&ops::dense(&t[0], &t[1], &t[2])?, &r),
            TOL,
            &format!("dense case {i}"),
        );
    }
}

#[test]
fn dropout_gradients_fixed_mask() {
    let mut rng = SplitMix64::new(113);
    for (i, &rate) in [0.0, 0.2, 0.5, 0.8, 0.35].iter().enumerate() {
        let x = random_param(&[4, 16], &mut rng);
        let r = random_const(&[4, 16], &mut rng);
        let mode = Mode::train(55, i as u64);
        assert_gradients(
            &[x],
            |t| projection_loss(&ops::dropout(&t[0], rate, mode, 9)?, &r),
            TOL,
            &format!("dropout case {i}"),
        );
    }
}

#[test]
fn mse_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(114);
    for i in 0..5 {
        let p = random_param(&[3, 5], &mut rng);
        let t = random_const(&[3, 5], &mut rng);
        assert_gradients(
            &[p],
            |inp| ops::mse_loss(&inp[0], &t),
            TOL,
            &format!("mse case {i}"),
        );
    }
}

#[test]
fn elementwise_and_reshape_gradients() {
    let mut rng = SplitMix64::new(115);
    for i in 0..5 {
        let a = random_param(&[2, 6], &mut rng);
        let b = random_param(&[2, 6], &mut rng);
        let r = random_const(&[12], &mut rng);
        assert_gradients(
            &[a, b],
            |t| {
                let s = ops::add(&t[0], &t[1])?;
                let m = ops::mul(&s, &t[0])?;
                let flat = ops::reshape(&m, &[12])?;
                projection_loss(&flat, &r)
            },
            TOL,
            &format!("elementwise case {i}"),
        );
    }
}

#[test]
fn scale_channels_gradients() {
    let mut rng = SplitMix64::new(116);
    for (i, &(n, c, d)) in [(1usize, 2usize, 3usize), (2, 3, 2), (2, 1, 4), (1, 4, 2), (3, 2, 3)]
        .iter()
        .enumerate()
    {
        let x = random_param(&[n, c, d, d, d], &mut rng);
        let g = random_param(&[n, c], &mut rng);
        let r = random_const(&[n, c, d, d, d], &mut rng);
        assert_gradients(
            &[x, g],
            |t| projection_loss(&ops::scale_channels(&t[0], &t[1])?, &r),
            TOL,
            &format!("scale_channels case {i}"),
        );
    }
}
