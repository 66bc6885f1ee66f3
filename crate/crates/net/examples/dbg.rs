use vxae_net::*;
use vxae_tensor::{backward, ops, Adam, Mode, Tensor};
use vxae_tensor::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(77);
    let dim = 16;
    let data: Vec<f32> = (0..4 * dim * dim * dim).map(|_| (rng.next_f64() < 0.35) as u8 as f32).collect();
    let x = Tensor::from_vec(&[4, 1, dim, dim, dim], data).unwrap();

    let model = Model::new(build_baseline(16).unwrap(), 5).unwrap();
    let params = model.parameters();
    let named: Vec<(String, _, bool)> = model.named_tensors();
    let mut opt = Adam::new(1e-2);
    for step in 0..20u64 {
        model.zero_grads();
        let (recon, latent) = model.forward(&x, Mode::train(11, step)).unwrap();
        let loss = ops::mse_loss(&recon, &x).unwrap();
        backward(&loss).unwrap();
        if step == 0 || step == 19 {
            let r = recon.to_vec();
            let mean: f32 = r.iter().sum::<f32>() / r.len() as f32;
            let mn = r.iter().cloned().fold(f32::INFINITY, f32::min);
            let mx = r.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let l = latent.to_vec();
            let lstd = {
                let m: f32 = l.iter().sum::<f32>() / l.len() as f32;
                (l.iter().map(|v| (v - m).powi(2)).sum::<f32>() / l.len() as f32).sqrt()
            };
            println!("step {step}: loss {:.5} recon mean {mean:.4} [{mn:.4},{mx:.4}] latent std {lstd:.5}", loss.item());
            for (name, t, trainable) in &named {
                if !trainable || !name.contains("weight") { continue; }
                let g = t.grad().unwrap();
                let gn: f32 = (g.iter().map(|v| v * v).sum::<f32>() / g.len() as f32).sqrt();
                let d = t.data();
                let wn: f32 = (d.iter().map(|v| v * v).sum::<f32>() / d.len() as f32).sqrt();
                if name.starts_with("enc.0.") || name.starts_with("enc.15") || name.starts_with("dec.2.") || name.starts_with("dec.18") || name.starts_with("enc.8.") {
                    println!("  {name}: |w|rms {wn:.4} |g|rms {gn:.3e}");
                }
            }
        }
        opt.step(&params).unwrap();
    }
}
