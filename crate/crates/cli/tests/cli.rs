use std::path::Path;
use std::process::{Command, Output};

const SCENE: &str = r#"
[camera]
position = [0.0, 1.0, 5.0]
look_at = [0.0, 0.6, 0.0]
vertical_fov = 40.0
resolution = [24, 16]

[medium]
sigma_s = 0.0

[materials.ground]
type = "lambertian"
albedo = "flat 0.4"

[[primitives]]
shape = "quad"
origin = [-10.0, 0.0, 10.0]
edge_u = [20.0, 0.0, 0.0]
edge_v = [0.0, 0.0, -20.0]
material = "ground"

[[primitives]]
shape = "sphere"
center = [0.0, 0.8, 0.0]
radius = 0.8
material = "ground"

[[lights]]
type = "environment"
radiance = "flat 0.05"

[[lights]]
type = "point"
position = [1.0, 3.0, 2.0]
intensity = "flat 2.0"
role = "active"
"#;

fn fogsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = fogsim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_scene(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("street.scene");
    std::fs::write(&p, SCENE).unwrap();
    p
}

#[test]
fn chamber_calculators() {
    let out = ok(&["chamber", "mor", "0.005", "0.02"]);
    assert!(out.contains("MOR 599.19"), "{out}");
    assert!(out.contains("MOR 149.79"), "{out}");
    let out = ok(&["chamber", "laser", "--p0", "1.0", "--pu", "0.5", "--length", "10"]);
    let sigma: f64 = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((sigma - 0.5f64.ln().abs() / 10.0).abs() < 1e-12);
    let out = ok(&["chamber", "tiers"]);
    assert!(out.contains("heavy,0.005") && out.contains("dense,0.02"), "{out}");
}

#[test]
fn chamber_rejects_bad_input() {
    let out = fogsim(&["chamber", "laser", "--p0", "1.0", "--pu", "2.0", "--length", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn stage_by_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scene = write_scene(d);
    let out = ok(&["render", "--scene", s(&scene), "--seed", "3", "--spp", "4", "--sigma-s", "0.05", "--out-dir", s(d)]);
    let files: Vec<&str> = out.lines().collect();
    assert_eq!(files.len(), 2);
    assert!(files[0].ends_with("street_sky_plus_active_sigma0.05_radiance.flt"));
    assert!(Path::new(files[1]).exists());

    let raw = d.join("frame.pgm");
    ok(&["expose", "--radiance", files[0], "--seed", "5", "--fov", "40", "--exposure-time", "0.02", "--out", s(&raw)]);
    assert!(d.join("frame.pgm.toml").exists());
    let meta = std::fs::read_to_string(d.join("frame.pgm.toml")).unwrap();
    assert!(meta.contains("exposure_time = 0.02"), "{meta}");

    let rgb = d.join("frame.ppm");
    ok(&["isp", "--raw", s(&raw), "--wb", "gray-world", "--gamma", "0.5", "--out", s(&rgb)]);
    assert!(std::fs::read(&rgb).unwrap().starts_with(b"P6"));

    let fog = d.join("fog.ppm");
    let out = ok(&["asm-fog", "--image", s(&rgb), "--depth", files[1], "--beta", "dense", "--out", s(&fog)]);
    assert!(out.starts_with("airlight"));
    assert!(fog.exists());

    let stretched = d.join("stretched.ppm");
    ok(&["analyze", "stretch", "--image", s(&fog), "--window", "5", "--out", s(&stretched)]);
    let out = ok(&["analyze", "noise", "--image", s(&rgb), "--rect", "0,0,8,8", "--rect", "10,4,8,8"]);
    assert_eq!(out.lines().count(), 3);

    let csv = d.join("trend.csv");
    ok(&[
        "analyze", "trend", "--image", &format!("0={}", s(&rgb)), "--image", &format!("0.02={}", s(&fog)),
        "--rect", "2,2,8,8", "--out", s(&csv), "--stretched-dir", s(&d.join("st")), "--window", "3",
    ]);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("patch_id,sigma_s,mean_R,mean_G,mean_B\n"));
    assert_eq!(table.lines().count(), 3);
    assert_eq!(std::fs::read_dir(d.join("st")).unwrap().count(), 2);
}

#[test]
fn stochastic_stages_require_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path());
    let out = fogsim(&["render", "--scene", s(&scene), "--spp", "1", "--out-dir", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn dataset_from_job_file() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path());
    let job = dir.path().join("job.toml");
    std::fs::write(
        &job,
        r#"
scene = "street.scene"
seed = 9
output_dir = "out"
outputs = ["rgb", "depth", "asm_rgb"]
lighting = ["sky_only", "sky_plus_active"]
tiers = [0.01, "dense"]

[render]
samples_per_pixel = 2
"#,
    )
    .unwrap();
    let out = ok(&["--threads", "2", "--config", s(&job), "dataset"]);
    assert!(out.contains("manifest.txt"));
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    // 2 lightings x (clear rgb + depth + 2 tiers x (rgb + asm))
    assert_eq!(manifest.lines().filter(|l| l.starts_with("file ")).count(), 12);

    let again = dir.path().join("again");
    ok(&["--config", s(&job), "dataset", "--output-dir", s(&again), "--tiers", "thick", "--outputs", "rgb"]);
    let m2 = std::fs::read_to_string(again.join("manifest.txt")).unwrap();
    assert!(m2.contains("street_sky_only_thick_rgb.ppm"));
    assert!(!m2.contains("depth"));
}

#[test]
fn dataset_with_failed_variant_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("night.scene");
    std::fs::write(&scene, SCENE.replace("type = \"environment\"\nradiance = \"flat 0.05\"", "type = \"environment\"\nradiance = \"flat 0.05\"\nrole = \"active\"")).unwrap();
    let out = fogsim(&[
        "dataset", "--scene", s(&scene), "--seed", "1", "--spp", "1", "--output-dir", s(&dir.path().join("o")),
        "--lighting", "sky_only,sky_plus_active", "--tiers", "heavy",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sky_only"));
    assert!(dir.path().join("o/manifest.txt").exists());
}
