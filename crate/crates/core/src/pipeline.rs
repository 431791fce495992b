//! End-to-end composition: scene radiance through optics, sensor and ISP,
//! repeated for a clear reference and every fog tier, plus the ASM baseline
//! built from the same clear image and depth map.
//!
//! Output files are named `<scene>_<lighting>_<tier|clear>_<output>.<ext>`
//! and listed with their SHA-256 in `manifest.txt`, which is written last.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::Rect;
use crate::asm::{estimate_airlight, scalar_airlight, synthesize_asm, AsmParams, DEFAULT_PATCH_RADIUS, DEFAULT_TOP_FRACTION};
use crate::camera::{expose_frame, optics_irradiance, CfaPattern, OpticsSpec, RawImage, SensorSpec};
use crate::error::{Error, Result};
use crate::image::{Rgb8Image, RgbImage};
use crate::io::write_atomic;
use crate::isp::{process, IspConfig};
use crate::medium::FogTier;
use crate::render::{medium_for_sigma, render, DepthMap, RadianceImage, RenderSettings};
use crate::rng::hash_words;
use crate::scene::{parse_scene, LightRole, Scene};
use crate::spectrum::Spectrum;

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const FLOAT_EXT: &str = "flt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Radiance,
    Depth,
    Raw,
    Rgb,
    AsmRgb,
}

impl OutputKind {
    pub fn tag(self) -> &'static str {
        match self {
            OutputKind::Radiance => "radiance",
            OutputKind::Depth => "depth",
            OutputKind::Raw => "raw",
            OutputKind::Rgb => "rgb",
            OutputKind::AsmRgb => "asm_rgb",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputKind::Radiance | OutputKind::Depth => FLOAT_EXT,
            OutputKind::Raw => "pgm",
            OutputKind::Rgb | OutputKind::AsmRgb => "ppm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingMode {
    SkyOnly,
    SkyPlusActive,
}

impl LightingMode {
    pub fn tag(self) -> &'static str {
        match self {
            LightingMode::SkyOnly => "sky_only",
            LightingMode::SkyPlusActive => "sky_plus_active",
        }
    }
}

/// Keeps only sky lights, or all lights.
pub fn lighting_variant(scene: &Scene, mode: LightingMode) -> Result<Scene> {
    let mut out = scene.clone();
    if mode == LightingMode::SkyOnly {
        out.lights.retain(|l| l.role == LightRole::Sky);
        if out.lights.is_empty() {
            return Err(Error::Config(format!("scene `{}` has no sky-tagged light", scene.name)));
        }
    }
    Ok(out)
}

/// A fog tier given as a scattering coefficient or a standard name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TierSpec {
    Sigma(f64),
    Name(String),
}

impl TierSpec {
    pub fn resolve(&self) -> Result<FogTier> {
        match self {
            TierSpec::Sigma(s) if *s > 0.0 => FogTier::from_sigma(*s),
            TierSpec::Sigma(s) => Err(Error::invalid("tiers", format!("sigma_s {s} must be > 0"))),
            TierSpec::Name(n) => match n.as_str() {
                "heavy" => FogTier::from_sigma(FogTier::HEAVY_SIGMA),
                "thick" => FogTier::from_sigma(FogTier::THICK_SIGMA),
                "dense" => FogTier::from_sigma(FogTier::DENSE_SIGMA),
                _ => Err(Error::invalid("tiers", format!("unknown tier `{n}`"))),
            },
        }
    }
}

/// Sensor section: a preset plus optional per-field overrides. Width and
/// height always follow the scene camera.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub preset: Option<String>,
    pub cfa: Option<CfaPattern>,
    pub qe: Option<[Spectrum; 3]>,
    pub pixel_area: Option<f64>,
    pub exposure_time: Option<f64>,
    pub full_well: Option<f64>,
    pub conversion_gain: Option<f64>,
    pub analog_gain: Option<f64>,
    pub read_noise_std: Option<f64>,
    pub dark_current: Option<f64>,
    pub prnu_std: Option<f64>,
    pub dsnu_std: Option<f64>,
    pub bit_depth: Option<u32>,
    pub black_level: Option<u32>,
}

impl SensorConfig {
    pub fn build(&self, width: usize, height: usize) -> Result<SensorSpec> {
        let mut s = match self.preset.as_deref().unwrap_or("smartphone") {
            "smartphone" => SensorSpec::smartphone(width, height),
            other => return Err(Error::invalid("sensor.preset", format!("unknown preset `{other}`"))),
        };
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { s.$f = v; } )* };
        }
        apply!(cfa, qe, pixel_area, exposure_time, full_well, conversion_gain, analog_gain,
            read_noise_std, dark_current, prnu_std, dsnu_std, bit_depth, black_level);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsmConfig {
    pub patch_radius: usize,
    pub top_fraction: f64,
    /// Replace the per-channel airlight by its channel mean.
    pub scalar_airlight: bool,
}

impl Default for AsmConfig {
    fn default() -> Self {
        AsmConfig {
            patch_radius: DEFAULT_PATCH_RADIUS,
            top_fraction: DEFAULT_TOP_FRACTION,
            scalar_airlight: false,
        }
    }
}

/// Settings for the `analyze` tools. Not used by [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Side of the contrast-stretch window in pixels (odd).
    pub window: usize,
    /// Regions measured by the noise and trend tools.
    pub patches: Vec<Rect>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window: 31,
            patches: Vec::new(),
        }
    }
}

/// One job file drives a whole run. Relative paths resolve against the
/// directory of the job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub scene: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub outputs: BTreeSet<OutputKind>,
    pub lighting: Vec<LightingMode>,
    pub tiers: Vec<TierSpec>,
    pub render: RenderSettings,
    pub optics: OpticsSpec,
    pub sensor: SensorConfig,
    pub isp: IspConfig,
    pub asm: AsmConfig,
    pub analysis: AnalysisConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            scene: None,
            seed: None,
            output_dir: PathBuf::from("out"),
            outputs: [OutputKind::Rgb, OutputKind::Depth].into(),
            lighting: vec![LightingMode::SkyPlusActive],
            tiers: ["heavy", "thick", "dense"].map(|n| TierSpec::Name(n.into())).into(),
            render: RenderSettings::default(),
            optics: OpticsSpec::default(),
            sensor: SensorConfig::default(),
            isp: IspConfig::default(),
            asm: AsmConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl JobConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses a job file and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = JobConfig::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(s) = &cfg.scene {
            if s.is_relative() {
                cfg.scene = Some(base.join(s));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn resolved_tiers(&self) -> Result<Vec<FogTier>> {
        self.tiers.iter().map(TierSpec::resolve).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::invalid("outputs", "at least one output is required"));
        }
        if self.lighting.is_empty() {
            return Err(Error::invalid("lighting", "at least one lighting mode is required"));
        }
        if self.scene.is_none() {
            return Err(Error::invalid("scene", "a scene path is required"));
        }
        if self.seed.is_none() {
            return Err(Error::invalid("seed", "a seed is required"));
        }
        if self.outputs.contains(&OutputKind::AsmRgb) && self.tiers.is_empty() {
            return Err(Error::invalid("tiers", "asm_rgb needs at least one tier"));
        }
        self.resolved_tiers()?;
        self.render.validate()?;
        self.optics.validate()?;
        self.isp.validate()?;
        Ok(())
    }

    /// Render settings with the job seed applied.
    pub fn render_settings(&self) -> RenderSettings {
        RenderSettings {
            seed: self.seed.unwrap_or(self.render.seed),
            ..self.render
        }
    }
}

/// Optics spec with the field of view taken from the scene camera.
pub fn optics_for(scene: &Scene, optics: &OpticsSpec) -> Result<OpticsSpec> {
    Ok(OpticsSpec {
        vertical_fov: scene.camera()?.vertical_fov,
        ..*optics
    })
}

/// Radiance to raw frame to 8-bit RGB.
pub fn camera_chain(
    radiance: &RadianceImage,
    optics: &OpticsSpec,
    sensor: &SensorSpec,
    isp: &IspConfig,
    seed: u64,
    frame: u32,
) -> Result<(RawImage, Rgb8Image)> {
    let irradiance = optics_irradiance(radiance, optics)?;
    let raw = expose_frame(&irradiance, sensor, seed, frame)?;
    let rgb = process(&raw, isp)?;
    Ok((raw, rgb))
}

/// Frame index for the temporal sensor noise of one variant; depends only
/// on the variant's own tags so tiers stay independent of each other.
pub fn variant_frame(lighting: LightingMode, tag: &str) -> u32 {
    let words: Vec<u64> = lighting.tag().bytes().chain([b'/']).chain(tag.bytes()).map(u64::from).collect();
    hash_words(&words) as u32
}

/// Linear clear image, per-tier ASM output re-encoded with the ISP gamma.
pub fn asm_variant(clear_rgb: &Rgb8Image, depth: &DepthMap, beta: f64, gamma: f64, cfg: &AsmConfig) -> Result<Rgb8Image> {
    let linear = clear_rgb.to_unit().decode_gamma(gamma);
    let mut airlight = estimate_airlight(&linear, cfg.patch_radius, cfg.top_fraction)?;
    if cfg.scalar_airlight {
        airlight = scalar_airlight(airlight);
    }
    let fog = synthesize_asm(&linear, depth, &AsmParams { beta, airlight })?;
    Ok(fog.encode_gamma(gamma).quantize())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// `<lighting>_<tier|clear>`.
    pub variant: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<Failure>,
    pub config_snapshot: String,
}

impl Manifest {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# fogsim manifest\nseed {}\n", self.seed);
        for e in &self.entries {
            let _ = writeln!(s, "file {} sha256 {}", e.file, e.sha256);
        }
        for f in &self.failures {
            let _ = writeln!(s, "failed {} {}", f.variant, f.message.replace('\n', " "));
        }
        s.push_str("# config\n");
        s.push_str(&self.config_snapshot);
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer<'a> {
    dir: &'a Path,
    stem: String,
    outputs: &'a BTreeSet<OutputKind>,
    entries: Vec<ManifestEntry>,
}

impl Writer<'_> {
    fn name(&self, variant: &str, kind: OutputKind) -> String {
        format!("{}_{}_{}.{}", self.stem, variant, kind.tag(), kind.extension())
    }

    fn put(&mut self, name: String, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(&name), bytes)?;
        self.entries.push(ManifestEntry {
            sha256: sha256_hex(bytes),
            file: name,
        });
        Ok(())
    }

    fn emit(&mut self, variant: &str, kind: OutputKind, bytes: impl FnOnce() -> Result<Vec<u8>>) -> Result<()> {
        if self.outputs.contains(&kind) {
            let name = self.name(variant, kind);
            self.put(name, &bytes()?)?;
        }
        Ok(())
    }

    fn emit_raw(&mut self, variant: &str, raw: &RawImage) -> Result<()> {
        if self.outputs.contains(&OutputKind::Raw) {
            let name = self.name(variant, OutputKind::Raw);
            raw.write(&self.dir.join(&name))?;
            for file in [name.clone(), format!("{name}.toml")] {
                let bytes = std::fs::read(self.dir.join(&file)).map_err(|e| Error::io(self.dir.join(&file), e))?;
                self.entries.push(ManifestEntry {
                    sha256: sha256_hex(&bytes),
                    file,
                });
            }
        }
        Ok(())
    }
}

struct Clear {
    rgb: Rgb8Image,
    depth: DepthMap,
}

/// Executes a job. A failing tier is recorded in the manifest and the
/// remaining tiers still run; configuration errors abort immediately.
pub fn run(config: &JobConfig) -> Result<Manifest> {
    config.validate()?;
    let scene_path = config.scene.as_ref().expect("validated");
    let seed = config.seed.expect("validated");
    let base_scene = parse_scene(scene_path)?;
    let camera = base_scene.camera()?.clone();
    let optics = optics_for(&base_scene, &config.optics)?;
    let sensor = config.sensor.build(camera.width(), camera.height())?;
    let tiers = config.resolved_tiers()?;
    let settings = config.render_settings();
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;

    let mut w = Writer {
        dir: &config.output_dir,
        stem: base_scene.name.clone(),
        outputs: &config.outputs,
        entries: Vec::new(),
    };
    let mut failures = Vec::new();
    let needs_camera = [OutputKind::Raw, OutputKind::Rgb, OutputKind::AsmRgb]
        .iter()
        .any(|k| config.outputs.contains(k));

    for &mode in &config.lighting {
        let scene = match lighting_variant(&base_scene, mode) {
            Ok(s) => s,
            Err(e) => {
                failures.push(Failure {
                    variant: mode.tag().into(),
                    message: e.to_string(),
                });
                continue;
            }
        };

        let clear_tag = format!("{}_clear", mode.tag());
        let clear = (|| -> Result<Clear> {
            let (radiance, depth) = render(&scene.with_medium(medium_for_sigma(&scene.medium, 0.0)), &settings)?;
            w.emit(&clear_tag, OutputKind::Radiance, || Ok(radiance.to_container().to_bytes()))?;
            w.emit(&clear_tag, OutputKind::Depth, || Ok(depth.to_container().to_bytes()))?;
            let (raw, rgb) = camera_chain(&radiance, &optics, &sensor, &config.isp, seed, variant_frame(mode, "clear"))?;
            w.emit_raw(&clear_tag, &raw)?;
            w.emit(&clear_tag, OutputKind::Rgb, || Ok(rgb.to_ppm()))?;
            Ok(Clear { rgb, depth })
        })();
        let clear = match clear {
            Ok(c) => Some(c),
            Err(e) => {
                failures.push(Failure {
                    variant: clear_tag,
                    message: e.to_string(),
                });
                None
            }
        };

        for tier in &tiers {
            let tag = format!("{}_{}", mode.tag(), tier.label());
            let result = (|| -> Result<()> {
                if config.outputs.contains(&OutputKind::Radiance) || needs_camera {
                    let foggy = scene.with_medium(medium_for_sigma(&scene.medium, tier.sigma_s));
                    let (radiance, _) = render(&foggy, &settings)?;
                    w.emit(&tag, OutputKind::Radiance, || Ok(radiance.to_container().to_bytes()))?;
                    if config.outputs.contains(&OutputKind::Raw) || config.outputs.contains(&OutputKind::Rgb) {
                        let frame = variant_frame(mode, &tier.label());
                        let (raw, rgb) = camera_chain(&radiance, &optics, &sensor, &config.isp, seed, frame)?;
                        w.emit_raw(&tag, &raw)?;
                        w.emit(&tag, OutputKind::Rgb, || Ok(rgb.to_ppm()))?;
                    }
                }
                if config.outputs.contains(&OutputKind::AsmRgb) {
                    let c = clear
                        .as_ref()
                        .ok_or_else(|| Error::Config("clear variant failed; no ASM input".into()))?;
                    let asm = asm_variant(&c.rgb, &c.depth, tier.sigma_s, config.isp.gamma, &config.asm)?;
                    w.emit(&tag, OutputKind::AsmRgb, || Ok(asm.to_ppm()))?;
                }
                Ok(())
            })();
            if let Err(e) = result {
                failures.push(Failure {
                    variant: tag,
                    message: e.to_string(),
                });
            }
        }
    }

    let mut snapshot_cfg = config.clone();
    snapshot_cfg.output_dir = PathBuf::from(".");
    snapshot_cfg.scene = scene_path.file_name().map(PathBuf::from);
    let config_snapshot = toml::to_string(&snapshot_cfg).map_err(|e| Error::Config(e.to_string()))?;
    let manifest = Manifest {
        seed,
        entries: w.entries,
        failures,
        config_snapshot,
    };
    write_atomic(&config.output_dir.join(MANIFEST_NAME), manifest.to_text().as_bytes())?;
    Ok(manifest)
}

/// Reads an 8-bit or 16-bit PPM or a PNG as a gamma-encoded image.
pub fn read_display_image(path: &Path) -> Result<RgbImage> {
    let (w, h, values) = crate::io::read_rgb_unit(path)?;
    RgbImage::from_interleaved(w, h, &values, crate::image::ColorSpace::GammaEncoded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Light;
    use crate::spectrum::Spectrum;

    const SCENE: &str = r#"
[camera]
position = [0.0, 1.0, 5.0]
look_at = [0.0, 0.5, 0.0]
vertical_fov = 45.0
resolution = [8, 6]

[medium]
sigma_s = 0.0

[materials.grey]
type = "lambertian"
albedo = "flat 0.5"

[[primitives]]
shape = "sphere"
center = [0.0, 0.5, 0.0]
radius = 1.0
material = "grey"

[[lights]]
type = "environment"
radiance = "flat 0.02"

[[lights]]
type = "point"
position = [2.0, 3.0, 2.0]
intensity = "flat 5.0"
"#;

    fn job(dir: &Path) -> JobConfig {
        std::fs::write(dir.join("tiny.scene"), SCENE).unwrap();
        JobConfig {
            scene: Some(dir.join("tiny.scene")),
            seed: Some(5),
            output_dir: dir.join("out"),
            render: RenderSettings {
                samples_per_pixel: 2,
                max_bounces: 3,
                ..RenderSettings::default()
            },
            ..JobConfig::default()
        }
    }

    #[test]
    fn lighting_modes() {
        let mut s = crate::scene::parse_scene_str(SCENE, "t", Path::new(".")).unwrap();
        s.lights.push(Light::point(crate::math::Vec3::new(0.0, 1.0, 0.0), Spectrum::ONE));
        assert_eq!(lighting_variant(&s, LightingMode::SkyOnly).unwrap().lights.len(), 1);
        assert_eq!(lighting_variant(&s, LightingMode::SkyPlusActive).unwrap().lights.len(), 3);
        s.lights.remove(0);
        assert!(lighting_variant(&s, LightingMode::SkyOnly).is_err());
    }

    #[test]
    fn tier_specs() {
        assert_eq!(TierSpec::Name("dense".into()).resolve().unwrap().sigma_s, 0.02);
        assert_eq!(TierSpec::Sigma(0.2).resolve().unwrap().label(), "sigma0.2");
        assert!(TierSpec::Name("soup".into()).resolve().is_err());
        assert!(TierSpec::Sigma(0.0).resolve().is_err());
    }

    #[test]
    fn sensor_overrides() {
        let c: SensorConfig = toml::from_str("read_noise_std = 0.5\nbit_depth = 12").unwrap();
        let s = c.build(4, 2).unwrap();
        assert_eq!((s.width, s.height, s.bit_depth, s.read_noise_std), (4, 2, 12, 0.5));
        assert!(toml::from_str::<SensorConfig>("preset = \"smartphone\"\nnoise = 1").is_err());
        let bad = SensorConfig { preset: Some("dslr".into()), ..SensorConfig::default() };
        assert!(bad.build(4, 2).is_err());
    }

    #[test]
    fn standard_run_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = run(&job(dir.path())).unwrap();
        assert!(m.is_complete());
        let names: Vec<&str> = m.entries.iter().map(|e| e.file.as_str()).collect();
        assert_eq!(
            names,
            [
                "tiny_sky_plus_active_clear_depth.flt",
                "tiny_sky_plus_active_clear_rgb.ppm",
                "tiny_sky_plus_active_heavy_rgb.ppm",
                "tiny_sky_plus_active_thick_rgb.ppm",
                "tiny_sky_plus_active_dense_rgb.ppm",
            ]
        );
        for n in names {
            assert!(dir.path().join("out").join(n).exists());
        }
        let text = std::fs::read_to_string(dir.path().join("out").join(MANIFEST_NAME)).unwrap();
        assert!(text.contains("seed 5\n"));
        assert!(text.contains("[render]"));
    }

    #[test]
    fn raw_only_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = JobConfig {
            outputs: [OutputKind::Raw].into(),
            tiers: vec![TierSpec::Sigma(0.01)],
            ..job(dir.path())
        };
        let m = run(&cfg).unwrap();
        let names: Vec<&str> = m.entries.iter().map(|e| e.file.as_str()).collect();
        assert_eq!(
            names,
            [
                "tiny_sky_plus_active_clear_raw.pgm",
                "tiny_sky_plus_active_clear_raw.pgm.toml",
                "tiny_sky_plus_active_thick_raw.pgm",
                "tiny_sky_plus_active_thick_raw.pgm.toml",
            ]
        );
    }

    #[test]
    fn failing_lighting_is_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let base = job(dir.path());
        let text = SCENE.replace("type = \"environment\"\nradiance = \"flat 0.02\"", "type = \"point\"\nposition = [0.0, 4.0, 0.0]\nintensity = \"flat 1.0\"");
        std::fs::write(dir.path().join("tiny.scene"), &text).unwrap();
        let cfg = JobConfig {
            lighting: vec![LightingMode::SkyOnly, LightingMode::SkyPlusActive],
            tiers: vec![TierSpec::Sigma(0.01)],
            ..base
        };
        let m = run(&cfg).unwrap();
        assert!(!m.is_complete());
        assert_eq!(m.failures[0].variant, "sky_only");
        assert!(m.entries.iter().any(|e| e.file.contains("sky_plus_active_thick_rgb")));
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let base = job(dir.path());
        assert!(run(&JobConfig { outputs: BTreeSet::new(), ..base.clone() }).is_err());
        assert!(run(&JobConfig { seed: None, ..base.clone() }).is_err());
        assert!(run(&JobConfig { tiers: vec![TierSpec::Name("x".into())], ..base }).is_err());
        assert!(JobConfig::from_toml("sceen = \"a\"", Path::new("job.toml")).is_err());
    }

    #[test]
    fn job_file_paths_are_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("job.toml"), "scene = \"s.scene\"\nseed = 1\noutput_dir = \"o\"\noutputs = [\"rgb\", \"asm_rgb\"]\ntiers = [0.01, \"dense\"]\n").unwrap();
        let cfg = JobConfig::load(&dir.path().join("job.toml")).unwrap();
        assert_eq!(cfg.scene.clone().unwrap(), dir.path().join("s.scene"));
        assert_eq!(cfg.output_dir, dir.path().join("o"));
        assert_eq!(cfg.resolved_tiers().unwrap().len(), 2);
    }
}
