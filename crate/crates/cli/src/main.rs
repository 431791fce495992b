//! `fogsim` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fogsim::analysis::{noise_std_estimate, patch_trend, regional_contrast_stretch, Rect};
use fogsim::asm::{estimate_airlight, scalar_airlight, synthesize_asm, AsmParams};
use fogsim::camera::{expose_frame, optics_irradiance, CfaPattern, RawImage};
use fogsim::image::RgbImage;
use fogsim::io::{write_atomic, FloatImage};
use fogsim::isp::{process, AutoWhiteBalance, WhiteBalance};
use fogsim::medium::{mor_from_sigma, sigma_from_mor, sigma_from_power, FogTier};
use fogsim::pipeline::{
    lighting_variant, optics_for, read_display_image, run, JobConfig, LightingMode, OutputKind, TierSpec,
    MANIFEST_NAME,
};
use fogsim::render::{medium_for_sigma, render, DepthMap, RadianceImage};
use fogsim::scene::parse_scene;

#[derive(Parser)]
#[command(name = "fogsim", version, about = "Foggy image simulation toolkit")]
struct Cli {
    /// Job file; its sections supply defaults for every subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Path-trace a scene to spectral radiance and depth containers.
    Render(RenderArgs),
    /// Add fog to a clear image with the atmospheric scattering model.
    AsmFog(AsmArgs),
    /// Turn a radiance container into a raw sensor frame.
    Expose(ExposeArgs),
    /// Process a raw frame into an 8-bit image.
    Isp(IspArgs),
    /// Run a complete job: every lighting mode and fog tier.
    Dataset(DatasetArgs),
    /// Visibility and laser-attenuation calculators.
    #[command(subcommand)]
    Chamber(ChamberCommand),
    /// Contrast stretch, noise and trend measurements.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    spp: Option<u32>,
    #[arg(long)]
    max_bounces: Option<u32>,
    #[arg(long)]
    rr_start_bounce: Option<u32>,
    #[arg(long)]
    tile_size: Option<u32>,
    /// Replace the scene's scattering coefficient (1/m).
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long, value_parser = parse_lighting)]
    lighting: Option<LightingMode>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AsmArgs {
    /// Clear image (PPM or PNG, gamma encoded).
    #[arg(long)]
    image: PathBuf,
    /// Depth container matching the image.
    #[arg(long)]
    depth: PathBuf,
    /// Scattering coefficient (1/m) or a tier name.
    #[arg(long, value_parser = parse_tier)]
    beta: TierSpec,
    /// Fixed airlight `r,g,b` in linear units; estimated from the image if absent.
    #[arg(long, value_parser = parse_triple)]
    airlight: Option<[f64; 3]>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    patch_radius: Option<usize>,
    #[arg(long)]
    top_fraction: Option<f64>,
    #[arg(long)]
    scalar_airlight: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExposeArgs {
    #[arg(long)]
    radiance: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    frame: u32,
    /// Raw output; the metadata sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write the sensor-plane irradiance container.
    #[arg(long)]
    irradiance_out: Option<PathBuf>,
    #[arg(long)]
    f_number: Option<f64>,
    #[arg(long)]
    magnification: Option<f64>,
    /// Vertical field of view in degrees; defaults to the job scene's camera.
    #[arg(long)]
    fov: Option<f64>,
    #[arg(long)]
    psf_sigma: Option<f64>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_parser = parse_cfa)]
    cfa: Option<CfaPattern>,
    #[arg(long)]
    pixel_area: Option<f64>,
    #[arg(long)]
    exposure_time: Option<f64>,
    #[arg(long)]
    full_well: Option<f64>,
    #[arg(long)]
    conversion_gain: Option<f64>,
    #[arg(long)]
    analog_gain: Option<f64>,
    #[arg(long)]
    read_noise: Option<f64>,
    #[arg(long)]
    dark_current: Option<f64>,
    #[arg(long)]
    prnu: Option<f64>,
    #[arg(long)]
    dsnu: Option<f64>,
    #[arg(long)]
    bit_depth: Option<u32>,
    #[arg(long)]
    black_level: Option<u32>,
}

#[derive(Args)]
struct IspArgs {
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// White-balance gains `r,g,b` or `gray-world`.
    #[arg(long, value_parser = parse_wb)]
    wb: Option<WhiteBalance>,
    /// Colour matrix, nine comma-separated values in row-major order.
    #[arg(long, value_parser = parse_ccm)]
    ccm: Option<[[f64; 3]; 3]>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    spp: Option<u32>,
    /// Comma-separated sigma values or tier names.
    #[arg(long, value_delimiter = ',', value_parser = parse_tier)]
    tiers: Option<Vec<TierSpec>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_output)]
    outputs: Option<Vec<OutputKind>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_lighting)]
    lighting: Option<Vec<LightingMode>>,
}

#[derive(Subcommand)]
enum ChamberCommand {
    /// Meteorological optical range for scattering coefficients.
    Mor {
        #[arg(required = true)]
        sigma_s: Vec<f64>,
    },
    /// Scattering coefficient for a visibility in metres.
    Sigma { mor: f64 },
    /// Scattering coefficient from laser power before and after the fog.
    Laser {
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        pu: f64,
        /// Path length through the fog, metres.
        #[arg(long)]
        length: f64,
    },
    /// The job's fog tiers (or the standard ones) with their visibilities.
    Tiers,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Regional min/max contrast stretch.
    Stretch {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detrended noise std per region, optionally after a stretch.
    Noise {
        #[arg(long)]
        image: PathBuf,
        /// `x,y,width,height`; repeatable. Defaults to the job's patches.
        #[arg(long = "rect", value_parser = parse_rect)]
        rects: Vec<Rect>,
        /// Stretch with this window first.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Per-patch mean colour across fog densities as CSV.
    Trend {
        /// `sigma=path`; repeatable.
        #[arg(long = "image", value_parser = parse_series, required = true)]
        series: Vec<(f64, PathBuf)>,
        #[arg(long = "rect", value_parser = parse_rect)]
        rects: Vec<Rect>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a stretched copy of every input here.
        #[arg(long)]
        stretched_dir: Option<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let job = match &cli.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    match cli.command {
        Command::Render(a) => cmd_render(job, a),
        Command::AsmFog(a) => cmd_asm(job, a),
        Command::Expose(a) => cmd_expose(job, a),
        Command::Isp(a) => cmd_isp(job, a),
        Command::Dataset(a) => cmd_dataset(job, a),
        Command::Chamber(c) => cmd_chamber(job, c),
        Command::Analyze(c) => cmd_analyze(job, c),
    }
}

fn require_seed(flag: Option<u64>, job: &JobConfig) -> Result<u64> {
    match flag.or(job.seed) {
        Some(s) => Ok(s),
        None => bail!("--seed is required (or set `seed` in the job file)"),
    }
}

fn cmd_render(job: JobConfig, a: RenderArgs) -> Result<ExitCode> {
    let scene_path = a.scene.or(job.scene.clone()).context("--scene is required")?;
    let seed = require_seed(a.seed, &job)?;
    let mut settings = job.render;
    settings.seed = seed;
    if let Some(v) = a.spp {
        settings.samples_per_pixel = v;
    }
    if let Some(v) = a.max_bounces {
        settings.max_bounces = v;
    }
    if let Some(v) = a.rr_start_bounce {
        settings.rr_start_bounce = v;
    }
    if let Some(v) = a.tile_size {
        settings.tile_size = v;
    }
    let mode = a.lighting.or(job.lighting.first().copied()).unwrap_or(LightingMode::SkyPlusActive);
    let mut scene = lighting_variant(&parse_scene(&scene_path)?, mode)?;
    let tag = match a.sigma_s {
        Some(s) if s > 0.0 => {
            scene = scene.with_medium(medium_for_sigma(&scene.medium, s));
            FogTier::from_sigma(s)?.label()
        }
        Some(s) => {
            scene = scene.with_medium(medium_for_sigma(&scene.medium, s));
            "clear".to_string()
        }
        None => "scene".to_string(),
    };
    let (radiance, depth) = render(&scene, &settings)?;
    let dir = a.out_dir.unwrap_or(job.output_dir);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = format!("{}_{}_{}", scene.name, mode.tag(), tag);
    let rad_path = dir.join(format!("{stem}_radiance.flt"));
    let depth_path = dir.join(format!("{stem}_depth.flt"));
    radiance.to_container().write(&rad_path)?;
    depth.to_container().write(&depth_path)?;
    println!("{}", rad_path.display());
    println!("{}", depth_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_asm(job: JobConfig, a: AsmArgs) -> Result<ExitCode> {
    let beta = a.beta.resolve()?.sigma_s;
    let gamma = a.gamma.unwrap_or(job.isp.gamma);
    let clear = read_display_image(&a.image)?.decode_gamma(gamma);
    let depth = DepthMap::from_container(&FloatImage::read(&a.depth)?)?;
    let mut asm = job.asm;
    if let Some(v) = a.patch_radius {
        asm.patch_radius = v;
    }
    if let Some(v) = a.top_fraction {
        asm.top_fraction = v;
    }
    asm.scalar_airlight |= a.scalar_airlight;
    let mut airlight = match a.airlight {
        Some(v) => v,
        None => estimate_airlight(&clear, asm.patch_radius, asm.top_fraction)?,
    };
    if asm.scalar_airlight {
        airlight = scalar_airlight(airlight);
    }
    let fog = synthesize_asm(&clear, &depth, &AsmParams { beta, airlight })?;
    write_atomic(&a.out, &fog.encode_gamma(gamma).quantize().to_ppm())?;
    println!(
        "airlight {:.6} {:.6} {:.6}; wrote {}",
        airlight[0],
        airlight[1],
        airlight[2],
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_expose(job: JobConfig, a: ExposeArgs) -> Result<ExitCode> {
    let seed = require_seed(a.seed, &job)?;
    let radiance = RadianceImage::from_container(&FloatImage::read(&a.radiance)?)?;
    let mut optics = match &job.scene {
        Some(path) => optics_for(&parse_scene(path)?, &job.optics)?,
        None => job.optics,
    };
    if let Some(v) = a.f_number {
        optics.f_number = v;
    }
    if let Some(v) = a.magnification {
        optics.magnification = v;
    }
    if let Some(v) = a.fov {
        optics.vertical_fov = v;
    }
    if let Some(v) = a.psf_sigma {
        optics.psf_sigma_px = v;
    }
    let mut sensor = job.sensor;
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => { $( if a.$flag.is_some() { sensor.$field = a.$flag.clone(); } )* };
    }
    set!(preset => preset, cfa => cfa, pixel_area => pixel_area, exposure_time => exposure_time,
        full_well => full_well, conversion_gain => conversion_gain, analog_gain => analog_gain,
        read_noise => read_noise_std, dark_current => dark_current, prnu => prnu_std, dsnu => dsnu_std,
        bit_depth => bit_depth, black_level => black_level);
    let spec = sensor.build(radiance.width, radiance.height)?;
    let irradiance = optics_irradiance(&radiance, &optics)?;
    if let Some(path) = &a.irradiance_out {
        irradiance.to_container().write(path)?;
    }
    let raw = expose_frame(&irradiance, &spec, seed, a.frame)?;
    raw.write(&a.out)?;
    println!("{}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_isp(job: JobConfig, a: IspArgs) -> Result<ExitCode> {
    let mut cfg = job.isp;
    if let Some(v) = a.wb {
        cfg.wb_gains = v;
    }
    if let Some(v) = a.ccm {
        cfg.ccm = v;
    }
    if let Some(v) = a.gamma {
        cfg.gamma = v;
    }
    cfg.validate()?;
    let raw = RawImage::read(&a.raw)?;
    let rgb = process(&raw, &cfg)?;
    write_atomic(&a.out, &rgb.to_ppm())?;
    println!("{}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_dataset(mut job: JobConfig, a: DatasetArgs) -> Result<ExitCode> {
    if let Some(v) = a.scene {
        job.scene = Some(v);
    }
    if let Some(v) = a.seed {
        job.seed = Some(v);
    }
    if let Some(v) = a.output_dir {
        job.output_dir = v;
    }
    if let Some(v) = a.spp {
        job.render.samples_per_pixel = v;
    }
    if let Some(v) = a.tiers {
        job.tiers = v;
    }
    if let Some(v) = a.outputs {
        job.outputs = v.into_iter().collect();
    }
    if let Some(v) = a.lighting {
        job.lighting = v;
    }
    if job.seed.is_none() {
        bail!("--seed is required (or set `seed` in the job file)");
    }
    let manifest = run(&job)?;
    println!("{}", job.output_dir.join(MANIFEST_NAME).display());
    println!("{} files written", manifest.entries.len());
    if manifest.is_complete() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &manifest.failures {
            eprintln!("failed {}: {}", f.variant, f.message);
        }
        Ok(ExitCode::from(2))
    }
}

fn cmd_chamber(job: JobConfig, c: ChamberCommand) -> Result<ExitCode> {
    match c {
        ChamberCommand::Mor { sigma_s } => {
            for s in sigma_s {
                println!("sigma_s {s} 1/m -> MOR {} m", mor_from_sigma(s)?);
            }
        }
        ChamberCommand::Sigma { mor } => println!("MOR {mor} m -> sigma_s {} 1/m", sigma_from_mor(mor)?),
        ChamberCommand::Laser { p0, pu, length } => {
            let s = sigma_from_power(p0, pu, length)?;
            println!("sigma_s {s} 1/m (MOR {} m)", mor_from_sigma(s)?);
        }
        ChamberCommand::Tiers => {
            let tiers = if job.tiers.is_empty() { FogTier::standard() } else { job.resolved_tiers()? };
            println!("label,sigma_s,visibility_m");
            for t in tiers {
                println!("{},{},{}", t.label(), t.sigma_s, t.visibility_m);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(job: JobConfig, c: AnalyzeCommand) -> Result<ExitCode> {
    let window_or_job = |w: Option<usize>| w.unwrap_or(job.analysis.window);
    let rects_or_job = |r: Vec<Rect>| -> Result<Vec<Rect>> {
        let r = if r.is_empty() { job.analysis.patches.clone() } else { r };
        if r.is_empty() {
            bail!("no regions: pass --rect or list `analysis.patches` in the job file");
        }
        Ok(r)
    };
    match c {
        AnalyzeCommand::Stretch { image, window, out } => {
            let img = read_display_image(&image)?;
            let s = regional_contrast_stretch(&img, window_or_job(window))?;
            write_atomic(&out, &s.quantize().to_ppm())?;
            println!("{}", out.display());
        }
        AnalyzeCommand::Noise { image, rects, window } => {
            let mut img = read_display_image(&image)?;
            if let Some(w) = window {
                img = regional_contrast_stretch(&img, w)?;
            }
            println!("x,y,width,height,std_R,std_G,std_B");
            for r in rects_or_job(rects)? {
                let s = noise_std_estimate(&img, r)?;
                println!("{},{},{},{},{},{},{}", r.x, r.y, r.width, r.height, s[0], s[1], s[2]);
            }
        }
        AnalyzeCommand::Trend {
            series,
            rects,
            out,
            stretched_dir,
            window,
        } => {
            let rects = rects_or_job(rects)?;
            let images = series
                .iter()
                .map(|(s, p)| Ok((*s, read_display_image(p)?)))
                .collect::<Result<Vec<(f64, RgbImage)>>>()?;
            if let Some(dir) = &stretched_dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for ((s, img), (_, src)) in images.iter().zip(&series) {
                    let st = regional_contrast_stretch(img, window_or_job(window))?;
                    let name = format!("{}_stretched_{s}.ppm", file_stem(src));
                    write_atomic(&dir.join(name), &st.quantize().to_ppm())?;
                }
            }
            let table = patch_trend(&images, &rects)?;
            match &out {
                Some(p) => write_atomic(p, table.to_csv().as_bytes())?,
                None => print!("{}", table.to_csv()),
            }
            for (i, p) in table.patches.iter().enumerate() {
                eprintln!("patch {i}: {:?}", p.verdict);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_ccm(s: &str) -> Result<[[f64; 3]; 3], String> {
    let v = parse_floats(s, 9)?;
    Ok([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
}

fn parse_wb(s: &str) -> Result<WhiteBalance, String> {
    if s == "gray-world" {
        Ok(WhiteBalance::Auto(AutoWhiteBalance::GrayWorld))
    } else {
        parse_triple(s).map(WhiteBalance::Gains)
    }
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
        _ => Err("expected x,y,width,height".into()),
    }
}

fn parse_series(s: &str) -> Result<(f64, PathBuf), String> {
    let (sigma, path) = s.split_once('=').ok_or("expected sigma=path")?;
    let sigma = sigma.trim().parse::<f64>().map_err(|e| format!("`{sigma}`: {e}"))?;
    Ok((sigma, PathBuf::from(path)))
}

fn parse_tier(s: &str) -> Result<TierSpec, String> {
    let t = match s.parse::<f64>() {
        Ok(v) => TierSpec::Sigma(v),
        Err(_) => TierSpec::Name(s.to_string()),
    };
    t.resolve().map_err(|e| e.to_string())?;
    Ok(t)
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s)).map_err(|e| e.to_string())
}

fn parse_lighting(s: &str) -> Result<LightingMode, String> {
    parse_enum(s)
}

fn parse_output(s: &str) -> Result<OutputKind, String> {
    parse_enum(s)
}

fn parse_cfa(s: &str) -> Result<CfaPattern, String> {
    parse_enum(&s.to_uppercase())
}
