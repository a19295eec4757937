//! File formats.
//!
//! * QPI: one UTF-8 JSON header line
//!   `{"magic":"QPI1","width":W,"height":H,"channels":["HH","HV","VV"]}`
//!   followed by `3·W·H` complex samples as little-endian binary32 `(re, im)`
//!   pairs, channel-planar, row-major.
//! * Raster: little-endian binary32 bands, band-planar and row-major, with a
//!   JSON sidecar at `<path>.json` naming the bands.
//! * Binary PGM (P5) and PPM (P6), maxval 255.
//! * CSV with a header row.

use crate::detectors::{DetectorMap, RegionBox};
use crate::error::{invalid, Error, Result};
use crate::ggd::{GGammaParams, Histogram};
use crate::polarimetry::{scale_to_byte, PolImage, ScatteringMatrix};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

const QPI_MAGIC: &str = "QPI1";
const CHANNELS: [&str; 3] = ["HH", "HV", "VV"];

#[derive(Debug, Serialize, Deserialize)]
struct QpiHeader {
    magic: String,
    width: usize,
    height: usize,
    channels: Vec<String>,
}

fn format_err<T>(path: &Path, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::Format(format!("{}: {msg}", path.display())))
}

pub fn qpi_bytes(img: &PolImage) -> Vec<u8> {
    let header = QpiHeader {
        magic: QPI_MAGIC.into(),
        width: img.width,
        height: img.height,
        channels: CHANNELS.iter().map(|s| s.to_string()).collect(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(img.data.len() * 24);
    for ch in 0..3 {
        for s in &img.data {
            let z = [s.hh, s.hv, s.vv][ch];
            out.extend_from_slice(&(z.re as f32).to_le_bytes());
            out.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_qpi(path: &Path, img: &PolImage) -> Result<()> {
    fs::write(path, qpi_bytes(img))?;
    Ok(())
}

pub fn read_qpi(path: &Path) -> Result<PolImage> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return format_err(path, "missing QPI header line");
    }
    let header: QpiHeader = match serde_json::from_slice(&line) {
        Ok(h) => h,
        Err(e) => return format_err(path, format!("bad QPI header: {e}")),
    };
    if header.magic != QPI_MAGIC || header.channels != CHANNELS {
        return format_err(path, format!("unsupported QPI header {header:?}"));
    }
    let n = header.width.checked_mul(header.height).filter(|&n| n > 0);
    let Some(n) = n else { return format_err(path, "bad QPI dimensions") };
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != n * 24 {
        return format_err(path, format!("expected {} payload bytes, found {}", n * 24, payload.len()));
    }
    let f = |i: usize| f32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().unwrap()) as f64;
    let z = |ch: usize, p: usize| C64::new(f(2 * (ch * n + p)), f(2 * (ch * n + p) + 1));
    let data = (0..n).map(|p| ScatteringMatrix::new(z(0, p), z(1, p), z(2, p))).collect();
    PolImage::new(header.width, header.height, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub width: usize,
    pub height: usize,
    pub dtype: String,
    pub bands: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub meta: RasterMeta,
    pub bands: Vec<Vec<f32>>,
}

impl Raster {
    pub fn band(&self, name: &str) -> Option<&[f32]> {
        self.meta.bands.iter().position(|b| b == name).map(|i| self.bands[i].as_slice())
    }

    /// First band as a detector map.
    pub fn to_map(&self) -> Result<DetectorMap> {
        let data = self.bands[0].iter().map(|&v| v as f64).collect();
        DetectorMap::new(self.meta.width, self.meta.height, self.meta.bands[0].clone(), self.meta.window.unwrap_or(1), data)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Raster bytes and sidecar JSON for `bands`.
pub fn raster_bytes(width: usize, height: usize, bands: &[(&str, &[f64])], window: Option<usize>) -> Result<(Vec<u8>, Vec<u8>)> {
    if bands.is_empty() || bands.iter().any(|(_, b)| b.len() != width * height) {
        return invalid("raster bands must be non-empty and match the image size");
    }
    let meta = RasterMeta {
        width,
        height,
        dtype: "float32le".into(),
        bands: bands.iter().map(|(n, _)| n.to_string()).collect(),
        window,
    };
    let mut bin = Vec::with_capacity(bands.len() * width * height * 4);
    for (_, b) in bands {
        for &v in *b {
            bin.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut side = serde_json::to_vec_pretty(&meta)?;
    side.push(b'\n');
    Ok((bin, side))
}

pub fn write_raster(path: &Path, width: usize, height: usize, bands: &[(&str, &[f64])], window: Option<usize>) -> Result<()> {
    let (bin, side) = raster_bytes(width, height, bands, window)?;
    fs::write(path, bin)?;
    fs::write(sidecar_path(path), side)?;
    Ok(())
}

pub fn write_map(path: &Path, map: &DetectorMap) -> Result<()> {
    write_raster(path, map.width, map.height, &[(&map.detector, &map.data)], Some(map.window))
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let side = sidecar_path(path);
    let meta: RasterMeta = match serde_json::from_slice(&fs::read(&side)?) {
        Ok(m) => m,
        Err(e) => return format_err(&side, e),
    };
    if meta.dtype != "float32le" || meta.bands.is_empty() || meta.width == 0 || meta.height == 0 {
        return format_err(&side, "unsupported raster description");
    }
    let bytes = fs::read(path)?;
    let n = meta.width * meta.height;
    if bytes.len() != 4 * n * meta.bands.len() {
        return format_err(path, format!("expected {} bytes, found {}", 4 * n * meta.bands.len(), bytes.len()));
    }
    let vals: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let bands = vals.chunks(n).map(<[f32]>::to_vec).collect();
    Ok(Raster { meta, bands })
}

pub fn pnm_bytes(magic: &str, width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return invalid("PGM pixel count does not match its size");
    }
    fs::write(path, pnm_bytes("P5", width, height, pixels))?;
    Ok(())
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    if rgb.len() != width * height {
        return invalid("PPM pixel count does not match its size");
    }
    fs::write(path, pnm_bytes("P6", width, height, rgb.as_flattened()))?;
    Ok(())
}

/// Reads a binary PGM or PPM; returns `(width, height, channels, pixels)`.
pub fn read_pnm(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token();
    let channels = match magic.as_deref() {
        Some("P5") => 1,
        Some("P6") => 3,
        _ => return format_err(path, "not a binary PGM/PPM"),
    };
    let mut num = || token().and_then(|t| t.parse::<usize>().ok());
    let (Some(w), Some(h), Some(maxval)) = (num(), num(), num()) else {
        return format_err(path, "bad PNM header");
    };
    if maxval == 0 || maxval > 255 || w == 0 || h == 0 {
        return format_err(path, "unsupported PNM maxval or size");
    }
    let start = pos + 1;
    if bytes.len() != start + w * h * channels {
        return format_err(path, "PNM payload size mismatch");
    }
    Ok((w, h, channels, bytes[start..].to_vec()))
}

pub fn read_mask_pgm(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let (w, h, c, px) = read_pnm(path)?;
    if c != 1 {
        return format_err(path, "expected a PGM mask");
    }
    Ok((w, h, px.into_iter().map(|v| v > 0).collect()))
}

/// Grayscale rendering of a map: linear from 0 to its 99th percentile.
pub fn render_map(map: &DetectorMap) -> Vec<u8> {
    let clip = crate::ggd::percentile(&map.data, 99.0).unwrap_or(0.0);
    map.data.iter().map(|&v| scale_to_byte(v, clip)).collect()
}

pub fn render_mask(mask: &[bool]) -> Vec<u8> {
    mask.iter().map(|&b| if b { 255 } else { 0 }).collect()
}

pub fn histogram_csv(h: &Histogram, params: &GGammaParams) -> Result<String> {
    let emp = h.empirical_mass();
    let model = h.model_mass(params)?;
    let mut s = String::from("bin_left,bin_right,empirical_mass,model_mass\n");
    for i in 0..h.counts.len() {
        writeln!(s, "{},{},{},{}", h.edges[i], h.edges[i + 1], emp[i], model[i]).unwrap();
    }
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).or_else(|e| format_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedRegion {
    pub name: String,
    pub target: RegionBox,
    pub clutter: RegionBox,
}

/// Regions file: one `name x,y,w,h x,y,w,h` line per target (target box,
/// then clutter box). Blank lines and `#` comments are skipped.
pub fn parse_regions(text: &str) -> Result<Vec<NamedRegion>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: String| Error::InvalidArgument(format!("regions line {}: {m}", n + 1));
        if parts.len() != 3 {
            return Err(bad(format!("expected 'name target clutter', got '{line}'")));
        }
        let target = parts[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let clutter = parts[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        out.push(NamedRegion { name: parts[0].to_string(), target, clutter });
    }
    Ok(out)
}

/// One row per region, one SCR column per map.
pub fn scr_csv(maps: &[&DetectorMap], regions: &[NamedRegion]) -> Result<String> {
    let mut s = String::from("name");
    for m in maps {
        write!(s, ",scr_{}_db", m.detector).unwrap();
    }
    s.push('\n');
    for r in regions {
        s.push_str(&r.name);
        for m in maps {
            let v = crate::detectors::scr(m, &r.target, &r.clutter)?;
            write!(s, ",{v:.2}").unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}
