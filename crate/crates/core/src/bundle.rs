//! On-disk configuration bundles: a directory with the points file, one
//! tube-family file per point behind a JSON manifest, and a certificate
//! JSON. Loading re-validates every structural invariant.

use crate::dyadic::{PointSet, Scale};
use crate::error::Error;
use crate::frostman::{frostman_constant, FrostmanCertificate};
use crate::incidence::NiceConfiguration;
use crate::tubes::TubeFamily;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const BUNDLE_SCHEMA: &str = "config-bundle/v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub point: (i64, i64),
    pub file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub delta_exp: u32,
    pub s: f64,
    pub m: u64,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub s: f64,
    /// Worst per-point parameter constant.
    pub c: f64,
    pub worst_point: (i64, i64),
    pub worst_cert: FrostmanCertificate,
}

/// Write a configuration bundle under `dir` (created if missing).
pub fn save_bundle(config: &NiceConfiguration, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("tubes"))?;
    let mut points_file = fs::File::create(dir.join("points.txt"))?;
    config.points().write_to(&mut points_file)?;

    let mut entries = Vec::new();
    let mut worst: Option<((i64, i64), FrostmanCertificate)> = None;
    for (idx, (point, family)) in config.families().enumerate() {
        let file = format!("tubes/p_{idx:06}.txt");
        let mut f = fs::File::create(dir.join(&file))?;
        family.write_to(&mut f)?;
        entries.push(ManifestEntry { point, file });
        let cert = frostman_constant(&family.param_point_set(), config.s)?;
        let better = match &worst {
            None => true,
            Some((_, w)) => cert.c > w.c,
        };
        if better {
            worst = Some((point, cert));
        }
    }
    let manifest = Manifest {
        schema: BUNDLE_SCHEMA.into(),
        delta_exp: config.scale().exp(),
        s: config.s,
        m: config.m,
        entries,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    let (worst_point, worst_cert) = worst.ok_or_else(|| {
        Error::InvalidConfig("bundle needs at least one tube family".into())
    })?;
    let cert = CertificateFile { s: config.s, c: config.c, worst_point, worst_cert };
    fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&cert)?)?;
    Ok(())
}

/// Load and fully validate a bundle.
pub fn load_bundle(dir: &Path) -> Result<NiceConfiguration> {
    let (config, defects) = inspect_bundle(dir)?;
    if !defects.is_empty() {
        return Err(Error::InvalidConfig(defects.join("; ")));
    }
    Ok(config)
}

/// Load a bundle, returning the configuration along with any defects found
/// instead of failing on the first one. I/O and parse errors still fail.
pub fn inspect_bundle(dir: &Path) -> Result<(NiceConfiguration, Vec<String>)> {
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.schema != BUNDLE_SCHEMA {
        return Err(Error::Parse(format!(
            "unknown bundle schema {:?}, expected {BUNDLE_SCHEMA:?}",
            manifest.schema
        )));
    }
    let points = PointSet::read_from(std::io::BufReader::new(fs::File::open(
        dir.join("points.txt"),
    )?))?;
    let mut defects = Vec::new();
    if points.scale() != Scale::new(manifest.delta_exp) {
        defects.push(format!(
            "points at scale {} but manifest says 2^-{}",
            points.scale(),
            manifest.delta_exp
        ));
    }
    let mut families: BTreeMap<(i64, i64), TubeFamily> = BTreeMap::new();
    for entry in &manifest.entries {
        let family = TubeFamily::read_from(std::io::BufReader::new(fs::File::open(
            dir.join(&entry.file),
        )?))?;
        if families.insert(entry.point, family).is_some() {
            defects.push(format!("duplicate manifest entry for {:?}", entry.point));
        }
    }
    // Certificate file is advisory on load: recomputed below.
    let declared: Option<CertificateFile> = fs::read_to_string(dir.join("certificate.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());

    let mut worst_c: f64 = 0.0;
    for family in families.values() {
        if family.is_empty() {
            defects.push("empty tube family".into());
            continue;
        }
        match frostman_constant(&family.param_point_set(), manifest.s) {
            Ok(cert) => worst_c = worst_c.max(cert.c),
            Err(e) => defects.push(format!("certification failed: {e}")),
        }
    }
    if let Some(decl) = declared {
        if (decl.c - worst_c).abs() > 1e-9 * worst_c.max(1.0) {
            defects.push(format!(
                "certificate.json declares C = {} but recomputation gives {}",
                decl.c, worst_c
            ));
        }
    }
    match NiceConfiguration::assemble(points, families, manifest.s, manifest.m) {
        Ok(config) => Ok((config, defects)),
        Err(Error::InvalidConfig(msg)) => {
            defects.push(msg);
            Err(Error::InvalidConfig(defects.join("; ")))
        }
        Err(e) => Err(e),
    }
}
