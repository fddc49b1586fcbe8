use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::Args;
use kltjnd::applications::{bits_per_pixel, CodecOutput};
use kltjnd::calibration::{aggregate, read_votes, write_aggregation_table};
use kltjnd::critical_point::{analyze, reconstruct_from_analysis};
use kltjnd::image_io::{save_image, write_pfm};
use kltjnd::jnd::estimate_jnd;
use kltjnd::{
    calibrate_theta, collect_energy_thresholds, compression_gain, fit_weibull, inject_noise,
    jnd_map, jnd_smooth, jnd_to_vdp, load_image, map_rmse, normalize_map, psnr, run_codec,
    vdp_rmse, CodecAdapter, CommandCodec, GrayImage, JndError, JndMap, JpegCodec, NoiseConfig,
    ProbabilityMap, PsychometricParams, Result,
};

use crate::{exit_code, CommonArgs};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "pgm", "ppm"];

#[derive(Args)]
pub struct JndArgs {
    /// Image file, or a directory processed in batch
    pub input: PathBuf,
    /// Output PFM (or output directory in batch mode)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an 8-bit visualization of the normalized map
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Write the kernel and eigenvalues as `<prefix>_kernel.csv`, `<prefix>_kernel.pfm` and `<prefix>_eigenvalues.csv`
    #[arg(long)]
    pub dump_kernel: Option<PathBuf>,
}

#[derive(Args)]
pub struct CplArgs {
    pub input: PathBuf,
    /// 8-bit reconstruction (PNG or PGM)
    #[arg(long)]
    pub out: PathBuf,
    /// Unclamped reconstruction as PFM
    #[arg(long)]
    pub pfm: Option<PathBuf>,
}

#[derive(Args)]
pub struct InjectArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Precomputed JND map; estimated from the input when absent
    #[arg(long)]
    pub jnd: Option<PathBuf>,
    /// Search theta so the output reaches this PSNR
    #[arg(long, conflicts_with = "theta", required_unless_present = "theta")]
    pub target_psnr: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SmoothArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jnd: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompressArgs {
    pub input: PathBuf,
    /// Shell command with `{in}`, `{out}` and `{quality}` placeholders; the
    /// built-in JPEG encoder is used when absent
    #[arg(long)]
    pub codec_cmd: Option<String>,
    /// Extension of the `{out}` file handed to the codec command
    #[arg(long, default_value = "jpg")]
    pub codec_ext: String,
    #[arg(long, default_value_t = 1)]
    pub quality: u8,
    #[arg(long)]
    pub jnd: Option<PathBuf>,
    /// Keep the smoothed image here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VdpArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub jnd: Option<PathBuf>,
    /// Probability map as PFM
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Probability map as 8-bit PNG
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Subjective marking map (PFM in [0,1] or 8-bit image); prints the RMSE
    #[arg(long)]
    pub marking: Option<PathBuf>,
    /// Psychometric slope
    #[arg(long, default_value_t = PsychometricParams::DEFAULT_SLOPE)]
    pub slope: f64,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Predicted map (PFM or 8-bit image)
    pub predicted: PathBuf,
    /// Ground-truth map (PFM or 8-bit image)
    pub truth: PathBuf,
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Vote CSV, wide or long form
    pub votes: PathBuf,
    /// Directory holding the voted images, named by image_id
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Per-image aggregation table
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Fitted parameters as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct InfoArgs {
    pub input: PathBuf,
}

fn stdout_line(line: &str) {
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn io_err(path: &Path, e: io::Error) -> JndError {
    JndError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn load_or_estimate_jnd(
    common: &CommonArgs,
    img: &GrayImage,
    path: Option<&Path>,
) -> Result<JndMap> {
    match path {
        Some(p) => {
            let m = JndMap::load(p)?;
            if m.dims() != img.dims() {
                return Err(JndError::DimensionMismatch {
                    expected: format!("{}x{}", img.width(), img.height()),
                    actual: format!("{}x{}", m.width(), m.height()),
                });
            }
            Ok(m)
        }
        None => Ok(estimate_jnd(img, &common.weibull()?, common.block)?.map),
    }
}

pub fn jnd(common: &CommonArgs, args: JndArgs) -> Result<ExitCode> {
    let params = common.weibull()?;
    if args.input.is_dir() {
        return jnd_batch(common, &args);
    }
    let img = load_image(&args.input)?;
    let analysis = analyze(&img, common.block)?;
    let cpl = reconstruct_from_analysis(&img, &analysis, &params)?;
    let map = jnd_map(&img, &cpl.cpl)?;

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_output(&args.input, "_jnd.pfm"));
    map.write_pfm(&out)?;
    if let Some(png) = &args.png {
        map.save_png(png)?;
    }
    if let Some(prefix) = &args.dump_kernel {
        dump_kernel(prefix, &analysis.kernel)?;
    }
    stdout_line(&format!(
        "L={} P_L={:.8}",
        cpl.critical.get(),
        cpl.cumulative_at_critical
    ));
    Ok(ExitCode::SUCCESS)
}

fn default_output(input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    PathBuf::from(format!("{stem}{suffix}"))
}

fn dump_kernel(prefix: &Path, kernel: &kltjnd::KltKernel) -> Result<()> {
    let with_suffix = |s: &str| {
        let mut name = prefix.as_os_str().to_owned();
        name.push(s);
        PathBuf::from(name)
    };
    let p = kernel.vectors();
    let k = p.nrows();
    let mut csv = String::new();
    let mut rows = Vec::with_capacity(k * k);
    for r in 0..k {
        let row: Vec<String> = (0..k).map(|c| format!("{:.17e}", p[(r, c)])).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
        rows.extend((0..k).map(|c| p[(r, c)]));
    }
    let path = with_suffix("_kernel.csv");
    fs::write(&path, csv).map_err(|e| io_err(&path, e))?;
    write_pfm(with_suffix("_kernel.pfm"), k, k, &rows)?;
    let lambdas: String = kernel
        .eigenvalues()
        .iter()
        .map(|l| format!("{l:.17e}\n"))
        .collect();
    let path = with_suffix("_eigenvalues.csv");
    fs::write(&path, lambdas).map_err(|e| io_err(&path, e))
}

fn jnd_batch(common: &CommonArgs, args: &JndArgs) -> Result<ExitCode> {
    let params = common.weibull()?;
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("jnd_out"));
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
    let mut files: Vec<PathBuf> = fs::read_dir(&args.input)
        .map_err(|e| io_err(&args.input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.max(1))
        .build()
        .map_err(|e| JndError::InvalidParameter(e.to_string()))?;
    let done = AtomicUsize::new(0);
    let total = files.len();
    let results: Vec<(PathBuf, Result<(usize, f64)>)> = pool.install(|| {
        use rayon::prelude::*;
        files
            .par_iter()
            .map(|path| {
                let result = (|| {
                    let img = load_image(path)?;
                    let r = estimate_jnd(&img, &params, common.block)?;
                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                    r.map.write_pfm(out_dir.join(format!("{stem}_jnd.pfm")))?;
                    if args.png.is_some() {
                        r.map.save_png(out_dir.join(format!("{stem}_jnd.png")))?;
                    }
                    Ok((r.cpl.critical.get(), r.cpl.cumulative_at_critical))
                })();
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!("[{n}/{total}] {}", path.display());
                (path.clone(), result)
            })
            .collect()
    });

    let mut status = 0u8;
    for (path, result) in results {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        match result {
            Ok((l, p)) => stdout_line(&format!("{name} L={l} P_L={p:.8}")),
            Err(e) => {
                eprintln!("kltjnd: {}: {e}", path.display());
                if status == 0 {
                    status = exit_code(&e);
                }
            }
        }
    }
    Ok(ExitCode::from(status))
}

pub fn cpl(common: &CommonArgs, args: CplArgs) -> Result<ExitCode> {
    let img = load_image(&args.input)?;
    let r = kltjnd::reconstruct_cpl(&img, &common.weibull()?, common.block)?;
    save_image(&r.cpl, &args.out)?;
    if let Some(pfm) = &args.pfm {
        write_pfm(pfm, r.cpl.width(), r.cpl.height(), r.cpl.samples())?;
    }
    stdout_line(&format!(
        "L={} P_L={:.8}",
        r.critical.get(),
        r.cumulative_at_critical
    ));
    Ok(ExitCode::SUCCESS)
}

pub fn inject(common: &CommonArgs, args: InjectArgs) -> Result<ExitCode> {
    let img = load_image(&args.input)?;
    let m = load_or_estimate_jnd(common, &img, args.jnd.as_deref())?;
    let theta = match (args.target_psnr, args.theta) {
        (Some(target), _) => calibrate_theta(&img, &m, target, args.seed)?,
        (None, Some(theta)) => theta,
        (None, None) => unreachable!("clap requires one of --target-psnr/--theta"),
    };
    let mut cfg = NoiseConfig::new(theta, args.seed)?;
    cfg.target_psnr = args.target_psnr;
    let noisy = inject_noise(&img, &m, &cfg)?;
    save_image(&noisy, &args.out)?;
    let achieved = match psnr(&img, &noisy) {
        Ok(p) => format!("{p:.4}"),
        Err(JndError::IdenticalImages) => "inf".into(),
        Err(e) => return Err(e),
    };
    stdout_line("theta,psnr");
    stdout_line(&format!("{theta:.8},{achieved}"));
    Ok(ExitCode::SUCCESS)
}

pub fn smooth(common: &CommonArgs, args: SmoothArgs) -> Result<ExitCode> {
    let img = load_image(&args.input)?;
    let m = load_or_estimate_jnd(common, &img, args.jnd.as_deref())?;
    let out = jnd_smooth(&img, &m, common.block)?;
    save_image(&out, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn compress(common: &CommonArgs, args: CompressArgs) -> Result<ExitCode> {
    let img = load_image(&args.input)?;
    let m = load_or_estimate_jnd(common, &img, args.jnd.as_deref())?;
    let smoothed = jnd_smooth(&img, &m, common.block)?;
    if let Some(out) = &args.out {
        save_image(&smoothed, out)?;
    }
    let codec: Box<dyn CodecAdapter> = match &args.codec_cmd {
        Some(template) => {
            let mut c = CommandCodec::new(template.clone());
            c.output_extension = args.codec_ext.clone();
            Box::new(c)
        }
        None => Box::new(JpegCodec),
    };
    let direct = run_codec(&img, args.quality, codec.as_ref())?;
    let guided = run_codec(&smoothed, args.quality, codec.as_ref())?;
    let psnr_of = |out: &CodecOutput| match psnr(&img, &out.decoded) {
        Ok(p) => Ok(p),
        Err(JndError::IdenticalImages) => Err(JndError::Codec(
            "lossless round trip has no finite PSNR".into(),
        )),
        Err(e) => Err(e),
    };
    let (p_ori, p_jnd) = (psnr_of(&direct)?, psnr_of(&guided)?);
    let gain = compression_gain(direct.bitrate, guided.bitrate, p_ori, p_jnd)?;
    debug_assert_eq!(
        direct.bitrate,
        bits_per_pixel(direct.compressed_bytes, img.width(), img.height())
    );
    stdout_line("bitrate_ori,bitrate_jnd,psnr_ori,psnr_jnd,delta_bitrate,delta_psnr,gain");
    stdout_line(&format!(
        "{:.6},{:.6},{:.4},{:.4},{:.4},{:.4},{}",
        direct.bitrate,
        guided.bitrate,
        p_ori,
        p_jnd,
        gain.delta_bitrate,
        gain.delta_psnr,
        gain.gain.map(|g| format!("{g:.4}")).unwrap_or_default()
    ));
    Ok(ExitCode::SUCCESS)
}

pub fn vdp(common: &CommonArgs, args: VdpArgs) -> Result<ExitCode> {
    let reference = load_image(&args.reference)?;
    let distorted = load_image(&args.dist)?;
    let m = load_or_estimate_jnd(common, &reference, args.jnd.as_deref())?;
    let params = PsychometricParams::new(args.slope)?;
    let prob = jnd_to_vdp(&reference, &distorted, &m, &params)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_output(&args.dist, "_vdp.pfm"));
    prob.write_pfm(&out)?;
    if let Some(png) = &args.png {
        prob.save_png(png)?;
    }
    if let Some(marking) = &args.marking {
        let marking = ProbabilityMap::load(marking)?;
        stdout_line(&format!("{:.6}", vdp_rmse(&prob, &marking)?));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn eval(args: EvalArgs) -> Result<ExitCode> {
    let a = normalize_map(&JndMap::load(&args.predicted)?);
    let b = normalize_map(&JndMap::load(&args.truth)?);
    stdout_line(&format!("{:.6}", map_rmse(&a, &b)?));
    Ok(ExitCode::SUCCESS)
}

fn find_image(dir: &Path, id: &str) -> Option<PathBuf> {
    let direct = dir.join(id);
    if direct.is_file() {
        return Some(direct);
    }
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

pub fn calibrate(common: &CommonArgs, args: CalibrateArgs) -> Result<ExitCode> {
    let k = common.block * common.block;
    let file = fs::File::open(&args.votes).map_err(|e| io_err(&args.votes, e))?;
    let records = read_votes(file, k)?;
    let mut rows = records.iter().map(aggregate).collect::<Result<Vec<_>>>()?;

    let mut fitted = None;
    if let Some(dir) = &args.images {
        let entries = rows
            .iter()
            .map(|r| {
                find_image(dir, &r.image_id)
                    .map(|p| (p, r.critical))
                    .ok_or_else(|| JndError::InImage {
                        image_id: r.image_id.clone(),
                        source: Box::new(io_err(
                            &dir.join(&r.image_id),
                            io::Error::new(io::ErrorKind::NotFound, "no matching image"),
                        )),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let thresholds = collect_energy_thresholds(&entries, common.block)?;
        for (row, p) in rows.iter_mut().zip(&thresholds) {
            row.cumulative_at_critical = Some(*p);
        }
        fitted = Some(fit_weibull(&thresholds)?);
    }

    if let Some(table) = &args.table {
        let f = fs::File::create(table).map_err(|e| io_err(table, e))?;
        write_aggregation_table(f, &rows)?;
    }
    match fitted {
        Some(params) => {
            let json = params.to_json();
            if let Some(out) = &args.out {
                fs::write(out, format!("{json}\n")).map_err(|e| io_err(out, e))?;
            }
            stdout_line(&json);
        }
        None if args.table.is_none() => write_aggregation_table(io::stdout().lock(), &rows)?,
        None => {}
    }
    Ok(ExitCode::SUCCESS)
}

pub fn info(common: &CommonArgs, args: InfoArgs) -> Result<ExitCode> {
    let img = load_image(&args.input)?;
    let analysis = analyze(&img, common.block)?;
    let profile = analysis.profile.ok_or(JndError::DegenerateEnergy(0.0))?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "k,E,p,P");
    for k in 0..profile.energy.len() {
        let _ = writeln!(
            out,
            "{},{:.10e},{:.10e},{:.12}",
            k + 1,
            profile.energy[k],
            profile.normalized[k],
            profile.cumulative[k]
        );
    }
    Ok(ExitCode::SUCCESS)
}
