//! TOML scene files. See `docs/formats.md` for the key-by-key schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{
    CameraPose, EnvironmentMap, Light, LightKind, LightRole, Material, Primitive, Quad, Scene, Shape,
};
use crate::error::{Error, Result};
use crate::io::FloatImage;
use crate::math::Vec3;
use crate::medium::Medium;
use crate::spectrum::{Spectrum, BANDS};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    camera: Option<CameraPose>,
    medium: Option<Medium>,
    #[serde(default)]
    materials: BTreeMap<String, MaterialDef>,
    #[serde(default)]
    primitives: Vec<PrimitiveDef>,
    #[serde(default)]
    lights: Vec<LightDef>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum MaterialDef {
    Lambertian { albedo: Spectrum },
    Emissive { radiance: Spectrum },
}

#[derive(Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
enum PrimitiveDef {
    Sphere {
        center: Vec3,
        radius: f64,
        material: String,
    },
    Quad {
        origin: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        material: String,
    },
    Mesh {
        vertices: Vec<Vec3>,
        indices: Vec<[usize; 3]>,
        material: String,
    },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum LightDef {
    Point {
        position: Vec3,
        intensity: Spectrum,
        role: Option<LightRole>,
    },
    Area {
        origin: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        radiance: Spectrum,
        role: Option<LightRole>,
    },
    Environment {
        radiance: Spectrum,
        map: Option<String>,
        role: Option<LightRole>,
    },
}

/// Reads and validates a scene file. Relative map paths resolve against the
/// file's directory; the scene name is the file stem.
pub fn parse_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scene_impl(&text, &name, base, path)
}

/// Parses scene text held in memory.
pub fn parse_scene_str(text: &str, name: &str, base_dir: &Path) -> Result<Scene> {
    parse_scene_impl(text, name, base_dir, Path::new(name))
}

fn parse_scene_impl(text: &str, name: &str, base: &Path, origin: &Path) -> Result<Scene> {
    let file: SceneFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;

    let material_names: Vec<String> = file.materials.keys().cloned().collect();
    let materials: Vec<Material> = file
        .materials
        .into_values()
        .map(|m| match m {
            MaterialDef::Lambertian { albedo } => Material::Lambertian { albedo },
            MaterialDef::Emissive { radiance } => Material::Emissive { radiance },
        })
        .collect();
    let lookup = |i: usize, m: &str| {
        material_names
            .iter()
            .position(|n| n == m)
            .ok_or_else(|| Error::invalid(format!("primitives[{i}].material"), format!("unknown material `{m}`")))
    };

    let primitives = file
        .primitives
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(match p {
                PrimitiveDef::Sphere {
                    center,
                    radius,
                    material,
                } => Primitive {
                    shape: Shape::Sphere { center, radius },
                    material_id: lookup(i, &material)?,
                },
                PrimitiveDef::Quad {
                    origin,
                    edge_u,
                    edge_v,
                    material,
                } => Primitive {
                    shape: Shape::Quad(Quad {
                        origin,
                        edge_u,
                        edge_v,
                    }),
                    material_id: lookup(i, &material)?,
                },
                PrimitiveDef::Mesh {
                    vertices,
                    indices,
                    material,
                } => Primitive {
                    shape: Shape::TriangleMesh { vertices, indices },
                    material_id: lookup(i, &material)?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let lights = file
        .lights
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            Ok(match l {
                LightDef::Point {
                    position,
                    intensity,
                    role,
                } => Light {
                    kind: LightKind::Point {
                        position,
                        intensity,
                    },
                    role: role.unwrap_or(LightRole::Active),
                },
                LightDef::Area {
                    origin,
                    edge_u,
                    edge_v,
                    radiance,
                    role,
                } => Light {
                    kind: LightKind::Area {
                        quad: Quad {
                            origin,
                            edge_u,
                            edge_v,
                        },
                        radiance,
                    },
                    role: role.unwrap_or(LightRole::Active),
                },
                LightDef::Environment { radiance, map, role } => {
                    let map = match map {
                        Some(rel) => Some(load_map(&base.join(rel), i)?),
                        None => None,
                    };
                    Light {
                        kind: LightKind::Environment { radiance, map },
                        role: role.unwrap_or(LightRole::Sky),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scene = Scene {
        name: name.to_string(),
        camera: file.camera,
        medium: file.medium.unwrap_or_default(),
        materials,
        material_names,
        primitives,
        lights,
    };
    scene.validate()?;
    Ok(scene)
}

fn load_map(path: &Path, light: usize) -> Result<EnvironmentMap> {
    let img = FloatImage::read(path)?;
    if img.bands != 1 && img.bands != BANDS {
        return Err(Error::invalid(
            format!("lights[{light}].map"),
            format!("map must have 1 or {BANDS} bands, found {}", img.bands),
        ));
    }
    let n = img.width * img.height;
    let texels = (0..n)
        .map(|p| {
            let (x, y) = (p % img.width, p / img.width);
            if img.bands == 1 {
                Spectrum::flat(img.at(0, x, y) as f64)
            } else {
                Spectrum::from_fn(|b| img.at(b, x, y) as f64)
            }
        })
        .collect();
    Ok(EnvironmentMap {
        width: img.width,
        height: img.height,
        texels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[camera]
position = [0.0, 0.0, 0.0]
look_at = [0.0, 0.0, -1.0]
vertical_fov = 40.0
resolution = [8, 6]

[materials.grey]
type = "lambertian"
albedo = "flat 0.5"

[[primitives]]
shape = "sphere"
center = [0.0, 0.0, -5.0]
radius = 1.0
material = "grey"

[[lights]]
type = "point"
position = [0.0, 3.0, 0.0]
intensity = "flat 10"
"#;

    fn parse(text: &str) -> Result<Scene> {
        parse_scene_str(text, "t", Path::new("."))
    }

    #[test]
    fn minimal_scene() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.primitives.len(), 1);
        assert_eq!(s.lights.len(), 1);
        assert_eq!(s.lights[0].role, LightRole::Active);
        assert_eq!(s.medium, Medium::vacuum());
        assert_eq!(s.camera.unwrap().resolution, (8, 6));
    }

    #[test]
    fn negative_radius_names_field() {
        let err = parse(&MINIMAL.replace("radius = 1.0", "radius = -1.0")).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = parse(&MINIMAL.replace("radius = 1.0", "radius = 1.0\ncolour = 3")).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(msg.contains("colour") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(parse(&format!("{MINIMAL}\n[extras]\nx = 1\n")).is_err());
    }

    #[test]
    fn spectrum_forms() {
        let list = (0..31).map(|i| format!("{}", i as f64 / 31.0)).collect::<Vec<_>>().join(", ");
        let s = parse(&MINIMAL.replace("\"flat 0.5\"", &format!("[{list}]"))).unwrap();
        match &s.materials[0] {
            Material::Lambertian { albedo } => assert_eq!(albedo[30], 30.0 / 31.0),
            m => panic!("{m:?}"),
        }
        assert!(parse(&MINIMAL.replace("\"flat 0.5\"", "[0.1, 0.2]")).is_err());
        assert!(parse(&MINIMAL.replace("\"flat 0.5\"", "\"grey 0.5\"")).is_err());
    }

    #[test]
    fn albedo_out_of_range() {
        let err = parse(&MINIMAL.replace("\"flat 0.5\"", "\"flat 1.5\"")).unwrap_err();
        assert!(err.to_string().contains("albedo"));
    }

    #[test]
    fn unknown_material_reference() {
        let err = parse(&MINIMAL.replace("material = \"grey\"", "material = \"gold\"")).unwrap_err();
        assert!(err.to_string().contains("primitives[0].material"));
    }

    #[test]
    fn mesh_index_range() {
        let text = format!(
            "{MINIMAL}\n[[primitives]]\nshape = \"mesh\"\nvertices = [[0,0,0],[1,0,0],[0,1,0]]\nindices = [[0,1,3]]\nmaterial = \"grey\"\n"
        );
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("indices"));
    }

    #[test]
    fn parallel_quad_edges() {
        let text = format!(
            "{MINIMAL}\n[[primitives]]\nshape = \"quad\"\norigin = [0,0,0]\nedge_u = [1,0,0]\nedge_v = [2,0,0]\nmaterial = \"grey\"\n"
        );
        assert!(parse(&text).is_err());
    }

    #[test]
    fn environment_map_from_container() {
        let dir = tempfile::tempdir().unwrap();
        let img = FloatImage {
            kind: "environment".into(),
            width: 2,
            height: 1,
            bands: 1,
            wavelengths: None,
            data: vec![1.0, 3.0],
        };
        img.write(&dir.path().join("sky.fimg")).unwrap();
        let text = format!(
            "{MINIMAL}\n[[lights]]\ntype = \"environment\"\nradiance = \"flat 0.5\"\nmap = \"sky.fimg\"\n"
        );
        let s = parse_scene_str(&text, "t", dir.path()).unwrap();
        assert_eq!(s.lights[1].role, LightRole::Sky);
        match &s.lights[1].kind {
            LightKind::Environment { map: Some(m), .. } => assert_eq!(m.texels[1][0], 3.0),
            k => panic!("{k:?}"),
        }
    }
}
