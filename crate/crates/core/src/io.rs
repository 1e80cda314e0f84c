//! Text formats: XYZ and ASCII PLY point clouds, pose logs, elevation
//! profiles, and the CSV/GeoJSON outputs of the pipeline.

use std::io::{BufRead, Write};

use crate::classify::RoughnessMapCell;
use crate::error::{Error, Result};
use crate::preprocess::{Attitude, Frame, PointCloud3D};
use crate::roughness::{PatchRoughness, ProfileRoughness};
use crate::spectrum::SpectrumEstimate;
use crate::synth::TraversePatch;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {tok:?}")))
}

fn color(v: f64, line: usize) -> Result<u8> {
    if !(0.0..=255.0).contains(&v) {
        return Err(parse_err(line, format!("color component {v} outside 0..=255")));
    }
    Ok(v.round() as u8)
}

/// Reads whitespace- or comma-separated `x y z [r g b]` lines. Blank lines
/// and lines starting with `#` are skipped.
pub fn read_xyz<R: BufRead>(reader: R, frame: Frame) -> Result<PointCloud3D> {
    let mut points = Vec::new();
    let mut colors: Vec<[u8; 3]> = Vec::new();
    let mut with_color: Option<bool> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let vals = fields(trimmed).map(|t| number(t, lineno)).collect::<Result<Vec<f64>>>()?;
        let has_color = match vals.len() {
            3 => false,
            6 => true,
            k => return Err(parse_err(lineno, format!("expected 3 or 6 columns, found {k}"))),
        };
        if *with_color.get_or_insert(has_color) != has_color {
            return Err(parse_err(lineno, "mixed lines with and without color"));
        }
        points.push([vals[0], vals[1], vals[2]]);
        if has_color {
            colors.push([color(vals[3], lineno)?, color(vals[4], lineno)?, color(vals[5], lineno)?]);
        }
    }
    let cloud = PointCloud3D::new(points, frame)?;
    if with_color == Some(true) {
        cloud.with_colors(colors)
    } else {
        Ok(cloud)
    }
}

pub fn write_xyz<W: Write>(cloud: &PointCloud3D, mut out: W) -> Result<()> {
    match cloud.colors() {
        Some(colors) => {
            for (p, c) in cloud.points().iter().zip(colors) {
                writeln!(out, "{} {} {} {} {} {}", p[0], p[1], p[2], c[0], c[1], c[2])?;
            }
        }
        None => {
            for p in cloud.points() {
                writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
            }
        }
    }
    Ok(())
}

/// Reads the vertex element of an ASCII PLY file. Only `x`, `y`, `z` and the
/// optional `red`, `green`, `blue` properties are used.
pub fn read_ply<R: BufRead>(reader: R, frame: Frame) -> Result<PointCloud3D> {
    let mut lines = reader.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(parse_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, magic) = next("ply magic")?;
    if magic.trim() != "ply" {
        return Err(parse_err(n, "missing 'ply' magic"));
    }
    // Elements in header order: (name, count, property names).
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    loop {
        let (n, line) = next("end_header")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", fmt, _] => return Err(parse_err(n, format!("unsupported PLY format {fmt}; only ascii"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| parse_err(n, format!("bad element count {count:?}")))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", "list", ..] => {
                let Some(el) = elements.last_mut() else { return Err(parse_err(n, "property before element")) };
                el.2.push(String::from("<list>"));
            }
            ["property", _ty, name] => {
                let Some(el) = elements.last_mut() else { return Err(parse_err(n, "property before element")) };
                el.2.push(name.to_string());
            }
            _ => return Err(parse_err(n, format!("unrecognized header line {line:?}"))),
        }
    }
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (name, count, props) in &elements {
        if name != "vertex" {
            // Skip other elements' lines (faces etc.).
            for _ in 0..*count {
                next(name)?;
            }
            continue;
        }
        if props.iter().any(|p| p == "<list>") {
            return Err(parse_err(0, "list properties on vertex are not supported"));
        }
        let idx = |key: &str| props.iter().position(|p| p == key);
        let (Some(ix), Some(iy), Some(iz)) = (idx("x"), idx("y"), idx("z")) else {
            return Err(parse_err(0, "vertex element lacks x, y, z"));
        };
        let rgb = match (idx("red"), idx("green"), idx("blue")) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        for _ in 0..*count {
            let (n, line) = next("vertex")?;
            let vals = fields(&line).map(|t| number(t, n)).collect::<Result<Vec<f64>>>()?;
            if vals.len() != props.len() {
                return Err(parse_err(n, format!("expected {} values, found {}", props.len(), vals.len())));
            }
            points.push([vals[ix], vals[iy], vals[iz]]);
            if let Some([r, g, b]) = rgb {
                colors.push([color(vals[r], n)?, color(vals[g], n)?, color(vals[b], n)?]);
            }
        }
    }
    let cloud = PointCloud3D::new(points, frame)?;
    if colors.is_empty() || colors.len() != cloud.len() {
        Ok(cloud)
    } else {
        cloud.with_colors(colors)
    }
}

pub fn write_ply<W: Write>(cloud: &PointCloud3D, mut out: W) -> Result<()> {
    writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    if cloud.colors().is_some() {
        writeln!(out, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    writeln!(out, "end_header")?;
    write_xyz(cloud, out)
}

/// Point-cloud file format, chosen by extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" | "csv" => Some(CloudFormat::Xyz),
            "ply" => Some(CloudFormat::Ply),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Xyz => "xyz",
            CloudFormat::Ply => "ply",
        }
    }
}

pub fn read_cloud_file(path: &std::path::Path, frame: Frame) -> Result<PointCloud3D> {
    let format = CloudFormat::from_path(path)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown point-cloud extension: {}", path.display())))?;
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    match format {
        CloudFormat::Xyz => read_xyz(reader, frame),
        CloudFormat::Ply => read_ply(reader, frame),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEntry {
    pub t: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
}

impl PoseEntry {
    pub fn attitude(&self) -> Result<Attitude> {
        Attitude::from_degrees(self.roll_deg, self.pitch_deg)
    }
}

/// IMU attitude log with columns `t, roll_deg, pitch_deg`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseLog {
    entries: Vec<PoseEntry>,
}

impl PoseLog {
    pub fn new(mut entries: Vec<PoseEntry>) -> Self {
        entries.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self { entries }
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut header_seen = false;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = t.split(',').map(str::trim).collect();
            if !header_seen {
                header_seen = true;
                if cols == ["t", "roll_deg", "pitch_deg"] {
                    continue;
                }
                if cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
                    return Err(parse_err(n, format!("expected header 't, roll_deg, pitch_deg', got {t:?}")));
                }
            }
            if cols.len() != 3 {
                return Err(parse_err(n, format!("expected 3 columns, found {}", cols.len())));
            }
            let v = cols.iter().map(|c| number(c, n)).collect::<Result<Vec<f64>>>()?;
            let entry = PoseEntry { t: v[0], roll_deg: v[1], pitch_deg: v[2] };
            entry.attitude().map_err(|e| parse_err(n, e.to_string()))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,roll_deg,pitch_deg")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.t, e.roll_deg, e.pitch_deg)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[PoseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry `index` in time order.
    pub fn by_index(&self, index: usize) -> Option<&PoseEntry> {
        self.entries.get(index)
    }

    /// Entry closest in time to `t`; ties go to the earlier entry.
    pub fn nearest(&self, t: f64) -> Option<&PoseEntry> {
        let i = self.entries.partition_point(|e| e.t < t);
        let after = self.entries.get(i);
        let before = i.checked_sub(1).and_then(|j| self.entries.get(j));
        match (before, after) {
            (Some(b), Some(a)) => Some(if (t - b.t) <= (a.t - t) { b } else { a }),
            (b, a) => b.or(a),
        }
    }
}

/// Reads one elevation per line; with several columns the last one is used.
pub fn read_profile<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some(last) = fields(t).last() else { continue };
        match last.parse::<f64>() {
            Ok(v) => out.push(v),
            // A non-numeric first row is a header.
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(_) => return Err(parse_err(i + 1, format!("not a number: {last:?}"))),
        }
    }
    Ok(out)
}

pub const MAP_CSV_HEADER: &str = "patch_index,x,y,R,sigma_R,w,sigma_w,omega1,omegaL,iso_band,label,defect";

/// Roughness map, one row per patch.
pub fn write_map_csv<W: Write>(cells: &[RoughnessMapCell], mut out: W) -> Result<()> {
    writeln!(out, "{MAP_CSV_HEADER}")?;
    for c in cells {
        let r = &c.roughness;
        writeln!(
            out,
            "{},{:.4},{:.4},{:.6e},{:.6e},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            c.patch_index,
            c.x,
            c.y,
            r.r_hat,
            r.sigma_r,
            r.w_hat,
            r.sigma_w,
            r.band.omega_min(),
            r.band.omega_max(),
            c.iso.nearest,
            c.label,
            c.defect
        )?;
    }
    Ok(())
}

/// GeoJSON FeatureCollection of labeled patch footprints (local metric
/// coordinates, not WGS84).
pub fn map_geojson(cells: &[RoughnessMapCell], length: f64, width: f64) -> serde_json::Value {
    let features: Vec<serde_json::Value> = cells
        .iter()
        .map(|c| {
            let (hx, hy) = (0.5 * length, 0.5 * width);
            let ring = vec![
                [c.x - hx, c.y - hy],
                [c.x + hx, c.y - hy],
                [c.x + hx, c.y + hy],
                [c.x - hx, c.y + hy],
                [c.x - hx, c.y - hy],
            ];
            serde_json::json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": {
                    "patch_index": c.patch_index,
                    "R": c.roughness.r_hat,
                    "sigma_R": c.roughness.sigma_r,
                    "w": c.roughness.w_hat,
                    "sigma_w": c.roughness.sigma_w,
                    "omega1": c.roughness.band.omega_min(),
                    "omegaL": c.roughness.band.omega_max(),
                    "iso_band": c.iso.nearest.to_string(),
                    "label": c.label.to_string(),
                    "defect": c.defect,
                }
            })
        })
        .collect();
    serde_json::json!({ "type": "FeatureCollection", "features": features })
}

/// Per-profile `(w, ln R)` scatter of one patch followed by the patch mean.
pub fn write_scatter_csv<W: Write>(patch: &PatchRoughness, mut out: W) -> Result<()> {
    writeln!(out, "kind,w,ln_R")?;
    for (w, b) in &patch.scatter {
        writeln!(out, "profile,{w:.6},{b:.6}")?;
    }
    writeln!(out, "patch,{:.6},{:.6}", patch.w_hat, patch.b_mean)?;
    Ok(())
}

/// `omega, phi, phi_fit` rows, preceded by `#` lines holding the fit.
pub fn write_psd_csv<W: Write>(spectrum: &SpectrumEstimate, fit: Option<&ProfileRoughness>, mut out: W) -> Result<()> {
    if let Some(f) = fit {
        writeln!(out, "# R={:.6e} w={:.6} residual_rms={:.6e} bins={}", f.r, f.w, f.residual_rms, f.bins_used)?;
    }
    writeln!(
        out,
        "# omega1={:.6} omegaL={:.6} segments={} window={}",
        spectrum.band.omega_min(),
        spectrum.band.omega_max(),
        spectrum.segments,
        spectrum.window
    )?;
    writeln!(out, "omega,phi,phi_fit")?;
    for (o, p) in spectrum.pairs() {
        let fitted = fit.map(|f| f.r * o.powf(f.w)).unwrap_or(f64::NAN);
        writeln!(out, "{o:.6},{p:.6e},{fitted:.6e}")?;
    }
    Ok(())
}

pub const TRUTH_CSV_HEADER: &str = "patch_index,segment,phi0,w,defect,roll_deg,pitch_deg";

/// Ground-truth sidecar for a synthetic traverse.
pub fn write_truth_csv<W: Write>(patches: &[TraversePatch], mut out: W) -> Result<()> {
    writeln!(out, "{TRUTH_CSV_HEADER}")?;
    for p in patches {
        writeln!(
            out,
            "{},{},{:e},{},{},{},{}",
            p.index,
            p.truth.segment,
            p.truth.phi0,
            p.truth.waviness,
            p.truth.defect,
            p.attitude.roll().to_degrees(),
            p.attitude.pitch().to_degrees()
        )?;
    }
    Ok(())
}
