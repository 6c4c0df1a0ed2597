//! Text formats: pixel images, posterior draws, bands, curves, study files.
//!
//! Parsers take `&str` so they can be driven directly by fuzzers; writers
//! return `String`s with Rust's shortest round-trip float formatting, which
//! keeps output byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Design, PixelObservation, PolarImage, ShapeCase};
use crate::harness::{CaseId, CaseParams, ReplicationRecord, StudyConfig};
use crate::models::{NoiseFamily, NoiseModel};
use crate::sampler::{CredibleBand, PosteriorDraws, ScalarDraw};

/// Sidecar record stored next to an image CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetadata {
    #[serde(default)]
    pub case: Option<CaseId>,
    pub design: Design,
    #[serde(default)]
    pub m: Option<usize>,
    pub seed: u64,
    pub family: NoiseFamily,
    #[serde(default)]
    pub params: Option<CaseParams>,
    #[serde(default)]
    pub shape: Option<ShapeCase>,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn expect_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.len() != expected.len() || header.iter().zip(expected).any(|(h, e)| h != *e) {
        return Err(Error::Parse(format!(
            "expected header '{}', found '{}'",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field_f64(record: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let raw = record.get(i).ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", i + 1)))?;
    raw.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: '{raw}' is not a number")))
}

fn finite(v: f64, what: &str, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("line {line}: {what} must be finite")))
    }
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

pub fn parse_image_csv(text: &str) -> Result<Vec<PixelObservation>> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["omega", "r", "y"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec, i + 2);
        let omega = finite(field_f64(&rec, 0, line)?, "omega", line)?;
        let r = finite(field_f64(&rec, 1, line)?, "r", line)?;
        let y = finite(field_f64(&rec, 2, line)?, "y", line)?;
        if !(0.0..std::f64::consts::TAU).contains(&omega) {
            return Err(Error::Parse(format!("line {line}: omega {omega} outside [0, 2π)")));
        }
        if r < 0.0 {
            return Err(Error::Parse(format!("line {line}: negative radius {r}")));
        }
        out.push(PixelObservation { omega, r, y });
    }
    if out.is_empty() {
        return Err(Error::Parse("image has no pixels".into()));
    }
    Ok(out)
}

pub fn image_csv_string(image: &PolarImage) -> String {
    let mut s = String::from("omega,r,y\n");
    for p in &image.observations {
        let _ = writeln!(s, "{},{},{}", p.omega, p.r, p.y);
    }
    s
}

pub fn parse_metadata(text: &str) -> Result<ImageMetadata> {
    Ok(serde_json::from_str(text)?)
}

pub fn metadata_json(meta: &ImageMetadata) -> Result<String> {
    Ok(serde_json::to_string_pretty(meta)? + "\n")
}

/// `dir/name.csv` → `dir/name.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_image(path: &Path, image: &PolarImage, meta: Option<&ImageMetadata>) -> Result<()> {
    write_text(path, &image_csv_string(image))?;
    if let Some(meta) = meta {
        write_text(&metadata_path(path), &metadata_json(meta)?)?;
    }
    Ok(())
}

/// Reads an image and, when present, its sidecar metadata.
pub fn read_image(path: &Path) -> Result<(PolarImage, Option<ImageMetadata>)> {
    let observations = parse_image_csv(&fs::read_to_string(path)?)?;
    let meta_path = metadata_path(path);
    let meta = if meta_path.exists() { Some(parse_metadata(&fs::read_to_string(meta_path)?)?) } else { None };
    let (design, seed) = match &meta {
        Some(m) => (m.design, m.seed),
        None => (Design::CompletelyRandom { n: observations.len() }, 0),
    };
    Ok((PolarImage { observations, design, seed }, meta))
}

fn join_floats(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v}");
    }
    s
}

/// One row per retained draw, one column per grid angle (angles in the header).
pub fn draws_csv_string(draws: &PosteriorDraws) -> String {
    let mut s = join_floats(draws.grid());
    s.push('\n');
    for c in draws.curves() {
        s.push_str(&join_floats(c));
        s.push('\n');
    }
    s
}

/// Returns the grid and the curve matrix of a draws CSV.
pub fn parse_draws_csv(text: &str) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = reader(text);
    let grid = rdr
        .headers()?
        .iter()
        .map(|h| h.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse(format!("bad grid angle '{h}'"))))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("grid angles must be non-empty and increasing".into()));
    }
    let mut curves = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec, i + 2);
        if rec.len() != grid.len() {
            return Err(Error::Parse(format!("line {line}: {} values for {} angles", rec.len(), grid.len())));
        }
        curves.push((0..grid.len()).map(|j| field_f64(&rec, j, line).and_then(|v| finite(v, "radius", line))).collect::<Result<Vec<_>>>()?);
    }
    Ok((grid, curves))
}

fn noise_columns(noise: &NoiseModel) -> (&'static str, Vec<f64>) {
    match *noise {
        NoiseModel::Bernoulli { p_in, p_out } => ("p_in,p_out", vec![p_in, p_out]),
        NoiseModel::Gaussian { mean_in, sd_in, mean_out, sd_out, .. } => {
            ("mean_in,sd_in,mean_out,sd_out", vec![mean_in, sd_in, mean_out, sd_out])
        }
        NoiseModel::Poisson { rate_in, rate_out } | NoiseModel::Exponential { rate_in, rate_out } => {
            ("rate_in,rate_out", vec![rate_in, rate_out])
        }
    }
}

/// Columns `a,tau` followed by the family's noise parameters.
pub fn scalar_draws_csv_string(scalars: &[ScalarDraw]) -> String {
    let names = scalars.first().map(|d| noise_columns(&d.noise).0).unwrap_or("");
    let mut s = format!("a,tau,{names}\n");
    for d in scalars {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", opt(d.scale), opt(d.precision), join_floats(&noise_columns(&d.noise).1));
    }
    s
}

/// A row of a band CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub omega: f64,
    pub center: f64,
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn band_csv_string(band: &CredibleBand) -> String {
    let mut s = String::from("omega,center,scale,lower,upper\n");
    for (((w, c), sc), (lo, hi)) in band.grid.iter().zip(&band.center).zip(&band.scale).zip(band.lower().into_iter().zip(band.upper())) {
        let _ = writeln!(s, "{w},{c},{sc},{lo},{hi}");
    }
    s
}

pub fn parse_band_csv(text: &str) -> Result<Vec<BandRow>> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["omega", "center", "scale", "lower", "upper"])?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec, i + 2);
        let v = (0..5).map(|j| field_f64(&rec, j, line).and_then(|x| finite(x, "band value", line))).collect::<Result<Vec<_>>>()?;
        if v[2] < 0.0 || v[3] > v[4] {
            return Err(Error::Parse(format!("line {line}: band must have non-negative scale and lower ≤ upper")));
        }
        rows.push(BandRow { omega: v[0], center: v[1], scale: v[2], lower: v[3], upper: v[4] });
    }
    Ok(rows)
}

pub fn curve_csv_string(angles: &[f64], radii: &[f64]) -> String {
    let mut s = String::from("omega,radius\n");
    for (w, r) in angles.iter().zip(radii) {
        let _ = writeln!(s, "{w},{r}");
    }
    s
}

pub fn parse_curve_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["omega", "radius"])?;
    let (mut angles, mut radii) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec, i + 2);
        angles.push(finite(field_f64(&rec, 0, line)?, "omega", line)?);
        radii.push(finite(field_f64(&rec, 1, line)?, "radius", line)?);
    }
    Ok((angles, radii))
}

pub const REPLICATIONS_HEADER: &str = "replication,seed,method,lebesgue_error,status";

pub fn replications_csv_string(records: &[ReplicationRecord]) -> String {
    let mut s = format!("{REPLICATIONS_HEADER}\n");
    for r in records {
        let err = r.lebesgue_error.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.replication, r.seed, r.method, err, r.status);
    }
    s
}

pub fn parse_replications_csv(text: &str) -> Result<Vec<ReplicationRecord>> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &REPLICATIONS_HEADER.split(',').collect::<Vec<_>>())?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec, i + 2);
        let get = |j: usize| rec.get(j).ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", j + 1)));
        let replication = get(0)?.parse().map_err(|_| Error::Parse(format!("line {line}: bad replication index")))?;
        let seed = get(1)?.parse().map_err(|_| Error::Parse(format!("line {line}: bad seed")))?;
        let method = get(2)?.to_string();
        if method.is_empty() {
            return Err(Error::Parse(format!("line {line}: empty method")));
        }
        let raw = get(3)?;
        let lebesgue_error = if raw.is_empty() { None } else { Some(finite(field_f64(&rec, 3, line)?, "lebesgue_error", line)?) };
        let status = get(4)?.to_string();
        if (status == "ok") != lebesgue_error.is_some() {
            return Err(Error::Parse(format!("line {line}: status '{status}' inconsistent with error value")));
        }
        out.push(ReplicationRecord { replication, seed, method, lebesgue_error, status });
    }
    Ok(out)
}

/// JSON when the text starts with `{`, TOML otherwise.
pub fn parse_study_config(text: &str) -> Result<StudyConfig> {
    let config: StudyConfig = if text.trim_start().starts_with('{') {
        serde_json::from_str(text)?
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
    };
    config.validate()?;
    Ok(config)
}

pub fn read_study_config(path: &Path) -> Result<StudyConfig> {
    parse_study_config(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_grid;
    use crate::harness::simulate_case;
    use crate::sampler::ChainDiagnostics;

    #[test]
    fn image_round_trip() {
        let sim = simulate_case(CaseId::B1, 12, CaseId::B1.default_params(), 4).unwrap();
        let text = image_csv_string(&sim.image);
        assert_eq!(parse_image_csv(&text).unwrap(), sim.image.observations);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.csv");
        let meta = ImageMetadata {
            case: Some(CaseId::B1),
            design: sim.image.design,
            m: Some(12),
            seed: 4,
            family: NoiseFamily::Bernoulli,
            params: Some(sim.params),
            shape: Some(sim.truth),
        };
        write_image(&path, &sim.image, Some(&meta)).unwrap();
        assert!(dir.path().join("img.meta.json").exists());
        let (image, back) = read_image(&path).unwrap();
        assert_eq!(image, sim.image);
        assert_eq!(back.unwrap(), meta);
    }

    #[test]
    fn image_rejects_bad_input() {
        assert!(parse_image_csv("omega,r\n0,1\n").is_err());
        assert!(parse_image_csv("omega,r,y\n").is_err());
        assert!(parse_image_csv("omega,r,y\n7,0.1,1\n").is_err());
        assert!(parse_image_csv("omega,r,y\n1,-0.1,1\n").is_err());
        assert!(parse_image_csv("omega,r,y\n1,0.1,NaN\n").is_err());
        assert!(parse_image_csv("omega,r,y\n1,0.1\n").is_err());
        assert!(parse_image_csv("omega,r,y\n1,0.1,x\n").is_err());
    }

    #[test]
    fn draws_and_band_round_trip() {
        let grid = angle_grid(4);
        let curves = vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.2, 0.2, 0.2, 0.2]];
        let draws = PosteriorDraws::new(grid.clone(), curves.clone(), vec![], ChainDiagnostics::default()).unwrap();
        let (g, c) = parse_draws_csv(&draws_csv_string(&draws)).unwrap();
        assert_eq!(g, grid);
        assert_eq!(c, curves);
        let band = crate::sampler::uniform_credible_band(&draws, 0.95).unwrap();
        let rows = parse_band_csv(&band_csv_string(&band)).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].lower, band.lower()[2]);
        let (a, r) = parse_curve_csv(&curve_csv_string(&grid, &[0.3; 4])).unwrap();
        assert_eq!((a, r), (grid, vec![0.3; 4]));
    }

    #[test]
    fn replications_round_trip() {
        let recs = vec![
            ReplicationRecord { replication: 0, seed: 9, method: "bayes".into(), lebesgue_error: Some(0.0061), status: "ok".into() },
            ReplicationRecord { replication: 0, seed: 9, method: "mce5".into(), lebesgue_error: None, status: "insufficient_band_data".into() },
        ];
        assert_eq!(parse_replications_csv(&replications_csv_string(&recs)).unwrap(), recs);
        assert!(parse_replications_csv("replication,seed,method,lebesgue_error,status\n0,1,bayes,,ok\n").is_err());
    }

    #[test]
    fn study_config_formats() {
        let toml_cfg = parse_study_config("case = \"b1\"\nm = 20\nreplications = 2\n").unwrap();
        let json_cfg = parse_study_config(r#"{"case": "b1", "m": 20, "replications": 2}"#).unwrap();
        assert_eq!(toml_cfg, json_cfg);
        assert!(parse_study_config("case = \"b9\"").is_err());
        assert!(parse_study_config("{\"replications\": 0}").is_err());
    }
}
