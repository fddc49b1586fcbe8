//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use kltjnd::applications::inject_noise;
use kltjnd::calibration::three_sigma_bounds;
use kltjnd::critical_point::analyze;
use kltjnd::{
    assemble_image, calibrate_theta, compression_gain, covariance, eigendecompose_sym,
    estimate_critical_point, estimate_jnd, extract_patches, fit_weibull, forward_klt, inverse_klt,
    jnd_smooth, load_image, pad_to_block_multiple, psnr, psychometric, reconstruct_cpl,
    truncate_coefficients, GrayImage, JndMap, KltKernel, NoiseConfig, PsychometricParams,
    WeibullParams,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};

const BLOCK: usize = 8;
const K: usize = 64;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fixtures() -> Vec<(String, GrayImage)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, load_image(&p).unwrap())
        })
        .collect()
}

fn fixture(name: &str) -> GrayImage {
    load_image(fixtures_dir().join(format!("{name}.png"))).unwrap()
}

/// Mixture of smooth gradients, oscillation and noise.
fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    let (fx, fy) = (rng.random_range(0.01..0.5), rng.random_range(0.01..0.5));
    let (a, b) = (rng.random_range(0.0..60.0), rng.random_range(0.0..40.0));
    let noise = rng.random_range(0.0..40.0);
    let mut samples = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = 128.0
                + a * (fx * x as f64).sin()
                + b * (fy * y as f64 + 0.3 * x as f64 * fx).cos()
                + noise * (rng.random::<f64>() - 0.5);
            samples.push(v.clamp(0.0, 255.0));
        }
    }
    GrayImage::new(w, h, samples).unwrap()
}

fn crop_at(img: &GrayImage, x0: usize, y0: usize, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| img.get(x0 + x, y0 + y)).unwrap()
}

/// Reconstruction from the first `count` components under `kernel`.
fn reconstruct_with(img: &GrayImage, kernel: &KltKernel, count: usize) -> GrayImage {
    let padded = pad_to_block_multiple(img, BLOCK);
    let patches = extract_patches(&padded.image, BLOCK).unwrap();
    let y = truncate_coefficients(&forward_klt(kernel, &patches).unwrap(), count).unwrap();
    let back = inverse_klt(kernel, &y).unwrap();
    let full = assemble_image(&back, padded.image.width(), padded.image.height(), BLOCK).unwrap();
    padded.crop(&full)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn klt_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w, h) = (rng.random_range(64..=512), rng.random_range(64..=512));
        let img = random_image(&mut rng, w, h);
        let a = analyze(&img, BLOCK).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(
            reconstruct_with(&img, &a.kernel, K).samples(),
            img.samples(),
        ));
    }
    let elapsed = start.elapsed();
    if worst < 1e-6 && elapsed < Duration::from_secs(30) {
        Ok(format!(
            "max error {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ))
    } else {
        Err(format!(
            "max error {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn kernel_orthonormality(images: &[(String, GrayImage)]) -> Outcome {
    let mut samples: Vec<GrayImage> = images.iter().map(|(_, i)| i.clone()).collect();
    for (_, img) in images {
        let (w, h) = img.dims();
        samples.push(crop_at(img, w / 4, h / 4, w / 2, h / 2));
    }
    let (mut ortho, mut recon) = (0.0f64, 0.0f64);
    for img in &samples {
        let padded = pad_to_block_multiple(img, BLOCK);
        let c = covariance(&extract_patches(&padded.image, BLOCK).unwrap()).unwrap();
        let kernel = eigendecompose_sym(&c).unwrap();
        let p = kernel.vectors();
        let gram = p.transpose() * p;
        for r in 0..K {
            for s in 0..K {
                let expect = if r == s { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[(r, s)] - expect).abs());
            }
        }
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(kernel.eigenvalues()));
        let rebuilt = p * lambda * p.transpose();
        let diff = (c.matrix() - rebuilt).abs().max();
        recon = recon.max(diff / c.trace());
    }
    let msg = format!(
        "{} covariances, |PtP-I| {ortho:.2e}, |C-PLPt|/tr {recon:.2e}",
        samples.len()
    );
    if samples.len() >= 20 && ortho < 1e-8 && recon < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn test_images(images: &[(String, GrayImage)]) -> Vec<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut all: Vec<GrayImage> = images.iter().map(|(_, i)| i.clone()).collect();
    for _ in 0..10 {
        let (w, h) = (rng.random_range(16..=200), rng.random_range(16..=200));
        all.push(random_image(&mut rng, w, h));
    }
    all
}

fn parseval(images: &[GrayImage]) -> Outcome {
    let mut worst = 0.0f64;
    for img in images {
        let a = analyze(img, BLOCK).unwrap();
        let patches = extract_patches(&a.padded.image, BLOCK).unwrap();
        let s = patches.count() as f64;
        let frob: f64 = patches.matrix().iter().map(|v| v * v).sum::<f64>() / s;
        let total: f64 = a.profile.as_ref().unwrap().energy.iter().sum();
        worst = worst.max((total - frob).abs() / frob);
    }
    let msg = format!("{} images, worst relative gap {worst:.2e}", images.len());
    if worst < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cumulative_profile(images: &[GrayImage]) -> Outcome {
    let mut worst_end = 0.0f64;
    for img in images {
        let a = analyze(img, BLOCK).unwrap();
        let p = &a.profile.as_ref().unwrap().cumulative;
        if p.windows(2).any(|w| w[1] < w[0]) {
            return Err("cumulative profile decreases".into());
        }
        worst_end = worst_end.max((p[K - 1] - 1.0).abs());
    }
    let msg = format!("{} images, worst |P_K - 1| {worst_end:.2e}", images.len());
    if worst_end < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sign_flip() -> Outcome {
    let params = WeibullParams::default();
    let mut worst = 0.0f64;
    for name in ["coffee", "brick"] {
        let full = fixture(name);
        let img = crop_at(&full, 0, 0, 256, 256);
        let a = analyze(&img, BLOCK).unwrap();
        let l = estimate_critical_point(&a.profile.as_ref().unwrap().cumulative, &params)
            .unwrap()
            .get();
        let base = reconstruct_with(&img, &a.kernel, l);
        for k in 0..K {
            let flipped = reconstruct_with(&img, &a.kernel.with_negated_column(k), l);
            worst = worst.max(max_abs_diff(base.samples(), flipped.samples()));
        }
    }
    let msg = format!("all 64 columns on 2 images, max change {worst:.2e}");
    if worst < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn uniform_profile() -> Outcome {
    // Every P_k equal, so every index carries the same prior weight.
    let params = WeibullParams::default();
    for level in [0.3, 0.5, 0.99, 0.998, 1.0] {
        let l = estimate_critical_point(&[level; K], &params)
            .map_err(|e| e.to_string())?
            .get();
        if l != 33 {
            return Err(format!("P_k = {level}: L={l}"));
        }
    }
    Ok("L=33 at every plateau level".into())
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn naive_critical_point(p: &[f64], params: &WeibullParams) -> Option<usize> {
    let WeibullParams { beta, eta } = *params;
    let f: Vec<f64> = p
        .iter()
        .map(|&x| (beta / eta) * (x / eta).powf(beta - 1.0) * (-(x / eta).powf(beta)).exp())
        .collect();
    if f.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let den = compensated_sum(f.iter().copied());
    let num = compensated_sum(f.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v));
    if den <= f64::MIN_POSITIVE || !num.is_finite() {
        return None;
    }
    Some((num / den).ceil() as usize)
}

fn stabilized_matches_naive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 100 {
        attempts += 1;
        if attempts > 100_000 {
            return Err(format!("only {checked} representable profiles"));
        }
        let params = if checked % 4 == 0 {
            WeibullParams::new(rng.random_range(2.0..2000.0), rng.random_range(0.9..1.0)).unwrap()
        } else {
            WeibullParams::default()
        };
        let decay = rng.random_range(0.05..1.5);
        let energy: Vec<f64> = (0..K)
            .map(|k| (-decay * k as f64).exp() * rng.random_range(0.2..1.0))
            .collect();
        let total: f64 = energy.iter().sum();
        let mut acc = 0.0;
        let p: Vec<f64> = energy
            .iter()
            .map(|e| {
                acc += e / total;
                acc.min(1.0)
            })
            .collect();
        let Some(expected) = naive_critical_point(&p, &params) else {
            continue;
        };
        let got = estimate_critical_point(&p, &params).unwrap().get();
        if got != expected {
            return Err(format!(
                "profile {checked}: stabilized {got}, naive {expected}"
            ));
        }
        checked += 1;
    }
    Ok(format!("{checked} profiles agree"))
}

fn table_one() -> Outcome {
    // (mu, sigma, printed bounds, filtered mean, L)
    let rows = [
        (22.0000, 4.6080, (8.1761, 35.8239), 21.7288, 22),
        (11.9667, 3.6695, (0.9580, 22.9753), 11.9667, 12),
        (24.8361, 3.8033, (13.4262, 36.2459), 25.0833, 26),
        (18.2167, 4.5829, (4.4679, 31.9654), 17.9661, 18),
    ];
    let mut worst = 0.0f64;
    for (mu, sigma, (lo, hi), mu_f, l) in rows {
        let (clo, chi) = three_sigma_bounds(mu, sigma);
        worst = worst.max((clo - lo).abs()).max((chi - hi).abs());
        let cl = kltjnd::calibration::round_up_mean(mu_f);
        if cl != l {
            return Err(format!("ceil({mu_f}) = {cl}, printed {l}"));
        }
    }
    let msg = format!("4 rows, worst bound gap {worst:.1e}, L = 22, 12, 26, 18");
    if worst <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn table_five() -> Outcome {
    // (delta bitrate %, delta psnr %, G) for both columns of every row
    let rows: [(f64, f64, f64); 40] = [
        (9.07, 2.44, 3.7141),
        (47.12, 17.46, 2.6988),
        (4.83, 1.08, 4.4883),
        (39.64, 29.68, 1.3357),
        (23.24, 4.86, 4.7857),
        (42.74, 11.30, 3.7819),
        (15.65, 3.55, 4.4047),
        (43.47, 13.89, 3.1287),
        (23.83, 4.99, 4.7740),
        (43.89, 12.51, 3.5099),
        (10.05, 2.19, 4.5872),
        (38.10, 12.62, 3.0183),
        (11.44, 3.19, 3.5839),
        (38.60, 15.07, 2.5610),
        (13.62, 4.19, 3.2484),
        (44.82, 17.93, 2.4996),
        (13.43, 4.93, 2.7213),
        (35.16, 15.98, 2.2006),
        (24.45, 5.30, 4.6149),
        (46.94, 14.29, 3.2859),
        (14.66, 5.05, 2.9033),
        (37.34, 16.35, 2.2839),
        (10.25, 3.01, 3.3996),
        (44.10, 20.35, 2.1671),
        (13.33, 3.58, 3.7282),
        (43.88, 14.37, 3.0536),
        (25.92, 4.61, 5.6230),
        (51.00, 11.93, 4.2754),
        (18.70, 3.24, 5.7735),
        (45.15, 13.19, 3.4214),
        (15.82, 4.50, 3.5121),
        (36.45, 15.75, 2.3143),
        (24.62, 5.14, 4.7868),
        (46.18, 12.35, 3.7384),
        (16.80, 3.32, 5.0552),
        (45.34, 11.78, 3.8485),
        (21.54, 3.25, 6.6243),
        (47.82, 8.98, 5.3267),
        (19.65, 4.89, 4.0204),
        (39.94, 12.24, 3.2626),
    ];
    let mut worst = (0.0f64, 0);
    for (i, (db, dp, g)) in rows.iter().enumerate() {
        let r = compression_gain(1.0, 1.0 - db / 100.0, 1.0, 1.0 - dp / 100.0)
            .map_err(|e| e.to_string())?;
        let got = r.gain.ok_or("no gain")?;
        let rel = (got - g).abs() / g;
        if rel > worst.0 {
            worst = (rel, i / 2 + 1);
        }
    }
    let msg = format!(
        "20 rows x 2 models, worst {:.2}% (I{:02})",
        worst.0 * 100.0,
        worst.1
    );
    if worst.0 <= 0.005 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn psychometric_anchors() -> Outcome {
    let params = PsychometricParams::default();
    let p0 = psychometric(0.0, &params).unwrap();
    let p1 = psychometric(1.0, &params).unwrap();
    let mut prev = p0;
    for i in 1..=10_000 {
        let p = psychometric(i as f64 * 1e-3, &params).unwrap();
        if p < prev {
            return Err(format!("decrease at x={}", i as f64 * 1e-3));
        }
        prev = p;
    }
    let msg = format!(
        "p(0)={p0:e}, p(1)-0.5={:.1e}, monotone on 1e4 points",
        p1 - 0.5
    );
    if p0.abs() < 1e-12 && (p1 - 0.5).abs() < 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn noise_calibration() -> Outcome {
    let params = WeibullParams::default();
    let mut report = Vec::new();
    let mut ok = true;
    for name in ["astronaut", "camera", "coffee", "chelsea", "rocket"] {
        let img = fixture(name);
        let start = Instant::now();
        let m = estimate_jnd(&img, &params, BLOCK).unwrap().map;
        let theta = calibrate_theta(&img, &m, 26.0, 11).map_err(|e| e.to_string())?;
        let noisy = inject_noise(&img, &m, &NoiseConfig::new(theta, 11).unwrap()).unwrap();
        let elapsed = start.elapsed();
        let achieved = psnr(&img, &noisy).unwrap();
        ok &= (achieved - 26.0).abs() <= 0.05 && elapsed < Duration::from_secs(2);
        report.push(format!(
            "{name} {achieved:.3} dB {:.2} s",
            elapsed.as_secs_f64()
        ));
    }
    if ok {
        Ok(report.join(", "))
    } else {
        Err(report.join(", "))
    }
}

fn weibull_recovery() -> Outcome {
    let (beta, eta) = (WeibullParams::DEFAULT_BETA, WeibullParams::DEFAULT_ETA);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<f64> = Weibull::new(eta, beta)
        .unwrap()
        .sample_iter(&mut rng)
        .take(1000)
        .collect();
    let fit = fit_weibull(&samples).map_err(|e| e.to_string())?;
    let (rb, re) = ((fit.beta - beta).abs() / beta, (fit.eta - eta).abs() / eta);
    let msg = format!(
        "n=1000: beta {:.2} ({:.2}%), eta {:.5} ({:.3}%)",
        fit.beta,
        rb * 100.0,
        fit.eta,
        re * 100.0
    );
    if rb < 0.05 && re < 0.001 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn block_means(img: &GrayImage) -> (Vec<f64>, usize) {
    let padded = pad_to_block_multiple(img, BLOCK).image;
    let (pw, ph) = padded.dims();
    let bx = pw / BLOCK;
    let mut means = vec![0.0; bx * (ph / BLOCK)];
    for y in 0..ph {
        for x in 0..pw {
            means[(y / BLOCK) * bx + x / BLOCK] += padded.get(x, y) / (BLOCK * BLOCK) as f64;
        }
    }
    (means, bx)
}

fn smoothing_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..20 {
        let (w, h) = (rng.random_range(8..=120), rng.random_range(8..=120));
        let img = random_image(&mut rng, w, h);
        let zero = JndMap::filled(w, h, 0.0).unwrap();
        if jnd_smooth(&img, &zero, BLOCK).unwrap() != img {
            return Err(format!("image {i}: zero map changed the image"));
        }
        let (means, bx) = block_means(&img);
        let mean_at = |x: usize, y: usize| means[(y / BLOCK) * bx + x / BLOCK];

        let huge = JndMap::filled(w, h, f64::MAX).unwrap();
        let flat = jnd_smooth(&img, &huge, BLOCK).unwrap();
        for y in 0..h {
            for x in 0..w {
                if (flat.get(x, y) - mean_at(x, y)).abs() > 1e-9 {
                    return Err(format!("image {i}: unbounded map is not the block mean"));
                }
            }
        }

        let m = JndMap::new(
            w,
            h,
            (0..w * h).map(|_| rng.random_range(0.0..20.0)).collect(),
        )
        .unwrap();
        let out = jnd_smooth(&img, &m, BLOCK).unwrap();
        for y in 0..h {
            for x in 0..w {
                let before = (img.get(x, y) - mean_at(x, y)).abs();
                let after = (out.get(x, y) - mean_at(x, y)).abs();
                if after > before + 1e-9 {
                    return Err(format!("image {i}: deviation grew at ({x},{y})"));
                }
            }
        }
    }
    Ok("zero map identity, unbounded map block mean, shrink on 20 images".into())
}

/// Mirror-tiles `img` to the requested size.
fn mirror_tile(img: &GrayImage, w: usize, h: usize) -> GrayImage {
    let (sw, sh) = img.dims();
    let fold = |v: usize, n: usize| {
        let period = 2 * n;
        let r = v % period;
        if r < n {
            r
        } else {
            period - 1 - r
        }
    };
    GrayImage::from_fn(w, h, |x, y| img.get(fold(x, sw), fold(y, sh))).unwrap()
}

fn performance() -> Outcome {
    let img = mirror_tile(&fixture("astronaut"), 1200, 800);
    let params = WeibullParams::default();
    let _ = estimate_jnd(&crop_at(&img, 0, 0, 64, 64), &params, BLOCK).unwrap();
    let mut best = Duration::MAX;
    for _ in 0..3 {
        let start = Instant::now();
        let r = estimate_jnd(&img, &params, BLOCK).unwrap();
        best = best.min(start.elapsed());
        assert_eq!(r.map.dims(), (1200, 800));
    }
    let msg = format!("1200x800 in {:.3} s", best.as_secs_f64());
    if best <= Duration::from_secs(1) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn degenerate_pipeline() -> Outcome {
    let img = GrayImage::filled(40, 24, 117.0).unwrap();
    let cpl = reconstruct_cpl(&img, &WeibullParams::default(), BLOCK).map_err(|e| e.to_string())?;
    if !cpl.fallback || cpl.critical.get() != K || cpl.cpl != img {
        return Err("library fallback not taken".into());
    }
    let r = estimate_jnd(&img, &WeibullParams::default(), BLOCK).unwrap();
    if !r.map.is_zero() {
        return Err("non-zero JND map".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("flat.png");
    kltjnd::image_io::save_image(&img, &input).unwrap();
    let out = dir.path().join("flat.pfm");
    let cpl_out = dir.path().join("flat_cpl.png");
    let bin = env!("CARGO_BIN_EXE_kltjnd");
    let jnd = Command::new(bin)
        .args([
            "jnd".as_ref(),
            input.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&jnd.stdout).trim().to_string();
    if !jnd.status.success() || !stdout.starts_with("L=64 ") {
        return Err(format!(
            "jnd exited {:?} with {stdout:?}",
            jnd.status.code()
        ));
    }
    if !JndMap::load(&out).unwrap().is_zero() {
        return Err("CLI wrote a non-zero map".into());
    }
    let status = Command::new(bin)
        .args([
            "cpl".as_ref(),
            input.as_os_str(),
            "--out".as_ref(),
            cpl_out.as_os_str(),
        ])
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() || load_image(&cpl_out).unwrap() != img {
        return Err("cpl command did not reproduce the input".into());
    }
    Ok(format!(
        "L=64, zero map, identical CPL, CLI exit 0 ({stdout})"
    ))
}

fn main() -> ExitCode {
    let images = fixtures();
    let pool = test_images(&images);
    let criteria: Vec<(&str, Check)> = vec![
        ("KLT round trip at L=K", Box::new(klt_round_trip)),
        (
            "kernel orthonormality",
            Box::new(|| kernel_orthonormality(&images)),
        ),
        ("Parseval energy identity", Box::new(|| parseval(&pool))),
        ("cumulative profile", Box::new(|| cumulative_profile(&pool))),
        ("sign-flip invariance", Box::new(sign_flip)),
        ("uniform profile gives L=33", Box::new(uniform_profile)),
        (
            "stabilized critical point",
            Box::new(stabilized_matches_naive),
        ),
        ("vote table bounds and L", Box::new(table_one)),
        ("compression gain table", Box::new(table_five)),
        ("psychometric anchors", Box::new(psychometric_anchors)),
        ("noise calibration at 26 dB", Box::new(noise_calibration)),
        ("Weibull fit recovery", Box::new(weibull_recovery)),
        ("smoothing contracts", Box::new(smoothing_contracts)),
        ("performance", Box::new(performance)),
        ("degenerate pipeline", Box::new(degenerate_pipeline)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
