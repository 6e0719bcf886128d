use sparrownet::metrics::roc_and_auc;
use sparrownet::neural::NetworkConfig;
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
        let warmup = 10usize;
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

fn stat_auc(feats: &[Vec<[f64; 2]>], labels: &[u8], f: impl Fn(&[[f64; 2]]) -> f64) -> f64 {
    let scores: Vec<f64> = feats.iter().map(|s| f(s)).collect();
    let (_, auc) = roc_and_auc(&scores, labels).unwrap();
    auc.max(1.0 - auc)
}

fn main() {
    let mut net_cfg = NetworkConfig::desk_scale();
    net_cfg.freeze_extractor = true;

    for (noise, bg, amp_lo, amp_hi, f_lo, f_hi) in [
        (0.02, 0.0, 0.2, 0.3, 0.3, 0.6),
    ] {
        let samples = gen(200, 16, 8, 8, 0.5, noise, 0, 1.2, bg, amp_lo, amp_hi, f_lo, f_hi);
        let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
        // Normalize on everything (proxy), then extract frozen features.
        let norm = Normalizer::fit(&samples).unwrap();
        let normed = norm.apply(&samples).unwrap();
        let template = network_template(&net_cfg, 0).unwrap();
        let feats: Vec<Vec<[f64; 2]>> = normed
            .iter()
            .map(|s| {
                s.frames
                    .iter()
                    .map(|fr| {
                        let v = template.frame_features(fr).unwrap();
                        [v.data()[0], v.data()[1]]
                    })
                    .collect()
            })
            .collect();

        let jump = |s: &[[f64; 2]]| -> f64 {
            s.windows(2)
                .map(|p| ((p[1][0] - p[0][0]).powi(2) + (p[1][1] - p[0][1]).powi(2)).sqrt())
                .fold(0.0, f64::max)
        };
        let half_diff = |s: &[[f64; 2]]| -> f64 {
            let h = s.len() / 2;
            let m1: f64 = s[..h].iter().map(|v| v[0]).sum::<f64>() / h as f64;
            let m2: f64 = s[h..].iter().map(|v| v[0]).sum::<f64>() / (s.len() - h) as f64;
            (m2 - m1).abs()
        };
        {
            for (i, s) in samples.iter().enumerate().take(6) {
                let masses: Vec<String> = s.frames.iter()
                    .map(|f| format!("{:5.2}", f.data().iter().sum::<f64>()))
                    .collect();
                println!("  sample {i} label {}: {}", s.label, masses.join(" "));
            }
        }
        // Diagnostics: what does normalization do to the mass channel?
        {
            let mut stds = norm.std.clone();
            stds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            println!("  pixel std: min {:.4} median {:.4} max {:.4}", stds[0], stds[stds.len()/2], stds[stds.len()-1]);
            let mass_series = |set: &[SequenceSample]| -> Vec<Vec<[f64; 2]>> {
                set.iter().map(|s| s.frames.iter().map(|f| {
                    let m: f64 = f.data().iter().sum();
                    [m, m]
                }).collect()).collect()
            };
            let raw_mass = mass_series(&samples);
            let norm_mass = mass_series(&normed);
            let ema_abs = |series: &Vec<Vec<[f64;2]>>| -> f64 {
                let scores: Vec<f64> = series.iter().map(|s| {
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for v in s { a = 0.9*a + 0.1*v[0]; b = 0.65*b + 0.35*v[0]; }
                    (a - b).abs()
                }).collect();
                let (_, auc) = roc_and_auc(&scores, &labels).unwrap();
                auc.max(1.0-auc)
            };
            let max_step = |series: &Vec<Vec<[f64;2]>>| -> f64 {
                let scores: Vec<f64> = series.iter().map(|s| {
                    s.windows(2).map(|p| (p[1][0]-p[0][0]).abs()).fold(0.0, f64::max)
                }).collect();
                let (_, auc) = roc_and_auc(&scores, &labels).unwrap();
                auc.max(1.0-auc)
            };
            println!("  mass-EMA raw {:.3} normed {:.3}; mass max-step raw {:.3} normed {:.3}",
                ema_abs(&raw_mass), ema_abs(&norm_mass), max_step(&raw_mass), max_step(&norm_mass));
        }
        let raw_jump_scores: Vec<f64> = normed
            .iter()
            .map(|s| {
                s.frames
                    .windows(2)
                    .map(|p| {
                        p[0].data()
                            .iter()
                            .zip(p[1].data())
                            .map(|(a, b)| (b - a) * (b - a))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let (_, raw_auc) = roc_and_auc(&raw_jump_scores, &labels).unwrap();
        let ema_diff = |s: &[[f64; 2]], ch: usize, za: f64, zb: f64| -> f64 {
            let mut a = 0.0;
            let mut b = 0.0;
            for v in s {
                a = (1.0 - za) * a + za * v[ch];
                b = (1.0 - zb) * b + zb * v[ch];
            }
            a - b
        };
        let emadiff0 = |s: &[[f64; 2]]| ema_diff(s, 0, 0.1, 0.35).abs();
        let emadiff1 = |s: &[[f64; 2]]| ema_diff(s, 1, 0.1, 0.35).abs();
        let emadiff_signed = |s: &[[f64; 2]]| ema_diff(s, 0, 0.1, 0.35) + ema_diff(s, 1, 0.1, 0.35);
        let mean0 = |s: &[[f64; 2]]| -> f64 { s.iter().map(|v| v[0]).sum::<f64>() / s.len() as f64 };
        let var0 = |s: &[[f64; 2]]| -> f64 {
            let m = mean0(s);
            s.iter().map(|v| (v[0] - m).powi(2)).sum::<f64>() / s.len() as f64
        };
        println!(
            "noise {noise} bg {bg} amp {amp_lo}-{amp_hi} f {f_lo}-{f_hi}: jump {:.3} half {:.3} mean {:.3} var {:.3} raw {:.3} ema|0| {:.3} ema|1| {:.3} emaS {:.3}",
            stat_auc(&feats, &labels, jump),
            stat_auc(&feats, &labels, half_diff),
            stat_auc(&feats, &labels, mean0),
            stat_auc(&feats, &labels, var0),
            raw_auc.max(1.0 - raw_auc),
            stat_auc(&feats, &labels, emadiff0),
            stat_auc(&feats, &labels, emadiff1),
            stat_auc(&feats, &labels, emadiff_signed),
        );
    }
}
