use sparrownet::metrics::roc_and_auc;
use sparrownet::neural::{gru_step, GruParams, NetworkConfig};
use sparrownet::pipeline::*;
use sparrownet::rng::{Prng, RandomSource};
use sparrownet::tensor::Tensor;

fn torus(d: f64, size: f64) -> f64 {
    let d = d.rem_euclid(size);
    if d > size / 2.0 { d - size } else { d }
}

#[allow(clippy::too_many_arguments)]
fn gen(n: usize, t: usize, h: usize, w: usize, rate: f64, noise: f64, seed: u64,
       blob_sigma: f64, bg_amp: f64, amp_lo: f64, amp_hi: f64, f_lo: f64, f_hi: f64) -> Vec<SequenceSample> {
    let root = Prng::new(seed);
    (0..n).map(|i| {
        let mut rng = root.child(0x1000 + i as u64);
        let label = (rng.next_uniform() < rate) as u8;
        let cx0 = rng.next_uniform_in(0.0, w as f64);
        let cy0 = rng.next_uniform_in(0.0, h as f64);
        let ax = rng.next_uniform_in(amp_lo, amp_hi) * w as f64;
        let ay = rng.next_uniform_in(amp_lo, amp_hi) * h as f64;
        let fx = rng.next_uniform_in(f_lo, f_hi);
        let fy = rng.next_uniform_in(f_lo, f_hi);
        let px = rng.next_uniform_in(0.0, std::f64::consts::TAU);
        let py = rng.next_uniform_in(0.0, std::f64::consts::TAU);
        let (m, jx, jy) = if label == 1 {
            let m = rng.next_uniform_in(2.0, 4.0);
            let a = rng.next_uniform_in(0.0, std::f64::consts::TAU);
            (m, m * a.cos(), m * a.sin())
        } else { (0.0, 0.0, 0.0) };
        let frames = (0..t).map(|step| {
            let ph = step as f64 / t as f64 * std::f64::consts::TAU;
            let mut cx = cx0 + ax * (fx * ph + px).sin();
            let mut cy = cy0 + ay * (fy * ph + py).sin();
            if label == 1 && step >= t / 2 { cx += jx; cy += jy; }
            let mut data = Vec::with_capacity(h * w);
            for r in 0..h {
                for c in 0..w {
                    let dx = torus(c as f64 - cx, w as f64);
                    let dy = torus(r as f64 - cy, h as f64);
                    let tri = |u: f64| {
                        let f = (u).rem_euclid(1.0);
                        2.0 * (2.0 * f - 1.0).abs() - 1.0
                    };
                    let sigma = blob_sigma * (1.0 + 0.45 * tri(cy / h as f64));
                    let blob = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                    let glow = 1.0 + bg_amp * tri(cx / w as f64);
                    data.push(blob * glow + noise * rng.next_normal());
                }
            }
            Tensor::new(vec![h, w, 1], data).unwrap()
        }).collect();
        SequenceSample { frames, label, anomaly_magnitude: m }
    }).collect()
}

// Hand-built 4-unit rectifier GRU over 2-dim features.
// Units 0/1: rectify channel-0 shifts (down / up); units 2/3: channel 1.
fn hand_gru(scale: f64) -> GruParams {
    let hidden = 4;
    let input = 2;
    let mut p = GruParams::zeros(input, hidden);
    // Update gate: moderate rates, biased slow.
    for u in 0..hidden {
        p.b_update.data_mut()[u] = -1.5; // z ~ 0.18 leak
    }
    // Reset gate open (bias +3 -> r ~ 1).
    for u in 0..hidden {
        p.b_reset.data_mut()[u] = 3.0;
    }
    // Candidate: h' = tanh(w_h * h_self + w_x * x_c + b); rest near +1.
    // w matrix layout [hidden, hidden+input]: columns 0..4 = h, 4..6 = x.
    let w = p.w_candidate.data_mut();
    let cols = hidden + input;
    let params = [
        (0usize, 0usize, -scale), // unit0: drops of channel0 pull tanh down
        (1, 0, scale),            // unit1: rises of channel0
        (2, 1, -scale),
        (3, 1, scale),
    ];
    for &(u, ch, wx) in &params {
        w[u * cols + hidden + ch] = wx;
        w[u * cols + u] = 1.0; // self-coupling keeps the latch
    }
    for u in 0..hidden {
        p.b_candidate.data_mut()[u] = 2.0; // rest at tanh(+3) with self-coupling
    }
    p
}

fn main() {
    let samples = gen(200, 16, 8, 8, 0.5, 0.02, 0, 1.2, 0.6, 0.25, 0.3, 0.35, 0.5);
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let mut net_cfg = NetworkConfig::desk_scale();
    net_cfg.freeze_extractor = true;
    let norm = Normalizer::fit(&samples).unwrap();
    let normed = norm.apply(&samples).unwrap();
    let template = network_template(&net_cfg, 0).unwrap();

    // Feature stats first.
    let feats: Vec<Vec<[f64; 2]>> = normed.iter().map(|s| {
        s.frames.iter().map(|fr| {
            let v = template.frame_features(fr).unwrap();
            [v.data()[0], v.data()[1]]
        }).collect()
    }).collect();
    let all: Vec<f64> = feats.iter().flatten().map(|v| v[0]).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let std = (all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / all.len() as f64).sqrt();
    println!("feature ch0: mean {mean:.3} std {std:.3}");

    for scale in [0.5, 1.0, 2.0, 3.0] {
        let gru = hand_gru(scale);
        // Standardize features before the GRU using global stats.
        let scores: Vec<f64> = feats.iter().map(|seq| {
            let mut h = Tensor::zeros(vec![4]);
            for f in seq {
                let x = Tensor::vector(vec![(f[0] - mean) / std, (f[1] - mean) / std]);
                h = gru_step(&x, &h, &gru).unwrap();
            }
            // Head: sum of rectifier responses (units deviate from rest).
            -(h.data()[0] + h.data()[1] + h.data()[2] + h.data()[3])
        }).collect();
        let (_, auc) = roc_and_auc(&scores, &labels).unwrap();
        println!("hand-built rectifier scale {scale}: AUC {:.3}", auc.max(1.0 - auc));
    }
}
