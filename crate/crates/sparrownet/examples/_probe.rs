use sparrownet::neural::{CodecScope, NetworkConfig, ParamCodec};
use sparrownet::pipeline::*;
use sparrownet::rng::{Prng, RandomSource};
use sparrownet::ssa::SsaConfig;
use sparrownet::tensor::Tensor;
use std::time::Instant;

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
        let gain = rng.next_uniform_in(1.0 - bg_amp, 1.0 + bg_amp);
        let radius = rng.next_uniform_in(amp_lo, amp_hi) * w as f64;
        let cycles = rng.next_uniform_in(f_lo, f_hi);
        let spin = rng.next_sign();
        let phase = rng.next_uniform_in(0.0, std::f64::consts::TAU);
        let (m, jx, jy) = if label == 1 {
            let m = rng.next_uniform_in(2.0, 4.0);
            let a = rng.next_uniform_in(0.0, std::f64::consts::TAU);
            (m, m * a.cos(), m * a.sin())
        } else { (0.0, 0.0, 0.0) };
        // Circular orbit: constant speed, so the afterglow tail mass is
        // steady for normal samples.
        let warmup = 24usize;
        let center = |step: i64| {
            let ph = spin * cycles * step as f64 / t as f64 * std::f64::consts::TAU + phase;
            let mut cx = cx0 + radius * ph.cos();
            let mut cy = cy0 + radius * ph.sin();
            if label == 1 && step >= (t / 2) as i64 { cx += jx; cy += jy; }
            (cx, cy)
        };
        let mut canvas = vec![0.0f64; h * w];
        let afterglow: f64 = std::env::var("GLOW").map(|s| s.parse().unwrap()).unwrap_or(0.9);
        for pre in 0..warmup {
            let (cx, cy) = center(pre as i64 - warmup as i64);
            for r in 0..h {
                for c in 0..w {
                    let dx = torus(c as f64 - cx, w as f64);
                    let dy = torus(r as f64 - cy, h as f64);
                    let blob = (-(dx * dx + dy * dy) / (2.0 * blob_sigma * blob_sigma)).exp();
                    let idx = r * w + c;
                    canvas[idx] = (afterglow * canvas[idx]).max(blob * gain);
                }
            }
        }
        let frames = (0..t).map(|step| {
            let (cx, cy) = center(step as i64);
            let mut data = Vec::with_capacity(h * w);
            for r in 0..h {
                for c in 0..w {
                    let dx = torus(c as f64 - cx, w as f64);
                    let dy = torus(r as f64 - cy, h as f64);
                    let blob = (-(dx * dx + dy * dy) / (2.0 * blob_sigma * blob_sigma)).exp();
                    let lit = blob * gain;
                    let idx = r * w + c;
                    canvas[idx] = (afterglow * canvas[idx]).max(lit);
                    data.push(canvas[idx] + noise * rng.next_normal());
                }
            }
            Tensor::new(vec![h, w, 1], data).unwrap()
        }).collect();
        SequenceSample { frames, label, anomaly_magnitude: m }
    }).collect()
}

fn main() {
    let mut net_cfg = NetworkConfig::desk_scale();
    net_cfg.freeze_extractor = true;
    let codec = ParamCodec::new(&net_cfg, CodecScope::FrozenExtractor).unwrap();
    let split = SplitSpec {
        train: std::env::var("TRAIN_FRAC").map(|s| s.parse().unwrap()).unwrap_or(0.2),
        validation: std::env::var("VAL_FRAC").map(|s| s.parse().unwrap()).unwrap_or(0.4),
        test: std::env::var("TEST_FRAC").map(|s| s.parse().unwrap()).unwrap_or(0.4),
    };

    let (noise, sigma, bg, amp_lo, amp_hi, f_lo, f_hi) = (0.02, 1.2, 0.0, 0.2, 0.3, 0.28, 0.55);
    for seed in 0..5u64 {
        let samples = gen(200, 16, 8, 8, 0.5, noise, seed, sigma, bg, amp_lo, amp_hi, f_lo, f_hi);
        let mut ssa_cfg = SsaConfig::uniform_bounds(codec.total_count(), -WEIGHT_BOUND, WEIGHT_BOUND);
        ssa_cfg.pop_size = 30;
        ssa_cfg.iter_max = 0;
        ssa_cfg.seed = seed;
        let base = train_with_ssa(&samples, &net_cfg, &ssa_cfg, &split).unwrap();
        ssa_cfg.iter_max = 300;
        let t0 = Instant::now();
        let trained = train_with_ssa(&samples, &net_cfg, &ssa_cfg, &split).unwrap();
        println!(
            "seed {seed}: base {:.3} | val1-AUC {:.3} test AUC {:.3} acc {:.3} ({:.0?})",
            base.report.auc.unwrap(),
            trained.history.last().unwrap(),
            trained.report.auc.unwrap(),
            trained.report.accuracy,
            t0.elapsed()
        );
    }
}
