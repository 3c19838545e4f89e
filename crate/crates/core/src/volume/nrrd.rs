//! Reader and writer for the subset of NRRD used by segmentation masks.
//!
//! Accepted: `NRRD000x` magic, dimension 3, attached data, `raw` or `gzip`
//! encoding, element types uint8/int16/uint16/int32 in either byte order.
//! Everything else is rejected with a specific [`VolumeError`].

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::{GridGeometry, MaskVolume, VolumeWarning};
use crate::error::VolumeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Uint8,
    Int16,
    Uint16,
    Int32,
}

impl ElementType {
    pub fn size(self) -> usize {
        match self {
            ElementType::Uint8 => 1,
            ElementType::Int16 | ElementType::Uint16 => 2,
            ElementType::Int32 => 4,
        }
    }

    fn parse(s: &str) -> Result<Self, VolumeError> {
        let norm = s.trim().to_ascii_lowercase();
        Ok(match norm.as_str() {
            "uchar" | "unsigned char" | "uint8" | "uint8_t" => ElementType::Uint8,
            "short" | "short int" | "signed short" | "signed short int" | "int16"
            | "int16_t" => ElementType::Int16,
            "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => {
                ElementType::Uint16
            }
            "int" | "signed int" | "int32" | "int32_t" => ElementType::Int32,
            _ => return Err(VolumeError::UnsupportedType(s.trim().to_string())),
        })
    }

    fn decode(self, bytes: &[u8], endian: Endian) -> i64 {
        match (self, endian) {
            (ElementType::Uint8, _) => bytes[0] as i64,
            (ElementType::Int16, Endian::Little) => i16::from_le_bytes([bytes[0], bytes[1]]) as i64,
            (ElementType::Int16, Endian::Big) => i16::from_be_bytes([bytes[0], bytes[1]]) as i64,
            (ElementType::Uint16, Endian::Little) => {
                u16::from_le_bytes([bytes[0], bytes[1]]) as i64
            }
            (ElementType::Uint16, Endian::Big) => u16::from_be_bytes([bytes[0], bytes[1]]) as i64,
            (ElementType::Int32, Endian::Little) => {
                i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as i64
            }
            (ElementType::Int32, Endian::Big) => {
                i32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as i64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Raw,
    Gzip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endian {
    Little,
    Big,
}

/// Which stored values count as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LabelPolicy {
    #[default]
    NonzeroIsForeground,
    SpecificLabel(i64),
}

impl LabelPolicy {
    #[inline]
    fn accepts(self, value: i64) -> bool {
        match self {
            LabelPolicy::NonzeroIsForeground => value != 0,
            LabelPolicy::SpecificLabel(l) => value == l,
        }
    }
}

/// Parsed NRRD header. Unrecognised fields and `key:=value` pairs are kept
/// verbatim in `fields` / `key_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct NrrdHeader {
    pub version: u8,
    pub dimension: usize,
    pub sizes: Vec<usize>,
    pub element_type: ElementType,
    pub encoding: Encoding,
    pub endianness: Endian,
    pub space_directions: Option<[[f64; 3]; 3]>,
    pub spacings: Option<[f64; 3]>,
    pub space_origin: Option<[f64; 3]>,
    pub byte_skip: i64,
    pub fields: BTreeMap<String, String>,
    pub key_values: BTreeMap<String, String>,
}

impl NrrdHeader {
    /// Spacing per axis plus any warnings about how it was derived.
    pub fn spacing_mm(&self) -> ([f64; 3], Vec<VolumeWarning>) {
        let mut warnings = Vec::new();
        if let Some(dirs) = self.space_directions {
            if is_oblique(&dirs) {
                warnings.push(VolumeWarning::ObliqueGeometry { directions: dirs });
            }
            let spacing = dirs.map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
            return (spacing, warnings);
        }
        if let Some(s) = self.spacings {
            return (s, warnings);
        }
        warnings.push(VolumeWarning::MissingSpacing);
        ([1.0; 3], warnings)
    }
}

fn is_oblique(dirs: &[[f64; 3]; 3]) -> bool {
    dirs.iter().any(|v| {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let nonzero = v.iter().filter(|c| c.abs() > 1e-6 * norm).count();
        nonzero > 1
    })
}

/// Splits a file into header and payload and parses the header.
pub fn parse_header(bytes: &[u8]) -> Result<(NrrdHeader, &[u8]), VolumeError> {
    let mut pos = 0usize;
    let mut lines = Vec::new();
    let mut terminated = false;
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|e| pos + e);
        let (line_end, next) = match end {
            Some(e) => (e, e + 1),
            None => (bytes.len(), bytes.len()),
        };
        let raw = &bytes[pos..line_end];
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        pos = next;
        if raw.is_empty() {
            if lines.is_empty() {
                return Err(VolumeError::MalformedHeader("empty first line".into()));
            }
            terminated = true;
            break;
        }
        let line = std::str::from_utf8(raw)
            .map_err(|_| VolumeError::MalformedHeader("header is not valid UTF-8".into()))?;
        lines.push(line);
        if end.is_none() {
            break;
        }
    }

    let magic = lines
        .first()
        .ok_or_else(|| VolumeError::MalformedHeader("empty file".into()))?;
    let version = magic
        .strip_prefix("NRRD000")
        .and_then(|v| v.parse::<u8>().ok())
        .filter(|v| (1..=9).contains(v))
        .ok_or_else(|| VolumeError::MalformedHeader(format!("bad magic line `{magic}`")))?;

    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut key_values = BTreeMap::new();
    for line in &lines[1..] {
        if line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once(":=") {
            key_values.insert(k.to_string(), v.to_string());
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| VolumeError::MalformedHeader(format!("unparseable line `{line}`")))?;
        let key: String = k
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if fields.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(VolumeError::MalformedHeader(format!("duplicate field `{k}`")));
        }
    }

    let required = |name: &str| {
        fields
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| VolumeError::MalformedHeader(format!("missing required field `{name}`")))
    };

    let dimension: usize = required("dimension")?
        .parse()
        .map_err(|_| VolumeError::MalformedHeader("dimension is not an integer".into()))?;
    if dimension != 3 {
        return Err(VolumeError::UnsupportedDimension(dimension));
    }

    if fields.contains_key("datafile") {
        return Err(VolumeError::UnsupportedFeature(
            "detached data files are not supported".into(),
        ));
    }
    if let Some(ls) = fields.get("lineskip") {
        if ls.trim() != "0" {
            return Err(VolumeError::UnsupportedFeature(format!("line skip {ls}")));
        }
    }

    let sizes = required("sizes")?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| VolumeError::MalformedHeader("sizes must be integers".into()))?;
    if sizes.len() != dimension {
        return Err(VolumeError::MalformedHeader(format!(
            "sizes lists {} values for dimension {dimension}",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(VolumeError::MalformedHeader("sizes must be >= 1".into()));
    }

    let element_type = ElementType::parse(required("type")?)?;

    let encoding = match required("encoding")?.to_ascii_lowercase().as_str() {
        "raw" => Encoding::Raw,
        "gzip" | "gz" => Encoding::Gzip,
        other => return Err(VolumeError::UnsupportedEncoding(other.to_string())),
    };

    let endianness = match fields.get("endian").map(|s| s.to_ascii_lowercase()) {
        Some(e) if e == "little" => Endian::Little,
        Some(e) if e == "big" => Endian::Big,
        Some(e) => return Err(VolumeError::MalformedHeader(format!("bad endian `{e}`"))),
        None if element_type.size() == 1 => Endian::Little,
        None => {
            return Err(VolumeError::MalformedHeader(
                "multi-byte type requires an `endian` field".into(),
            ))
        }
    };

    let space_directions = match fields.get("spacedirections") {
        Some(s) => parse_directions(s)?,
        None => None,
    };
    let spacings = match fields.get("spacings") {
        Some(s) => parse_spacings(s)?,
        None => None,
    };
    let space_origin = fields
        .get("spaceorigin")
        .map(|s| parse_vector(s.trim()))
        .transpose()?;

    let byte_skip = match fields.get("byteskip") {
        Some(s) => s
            .trim()
            .parse::<i64>()
            .ok()
            .filter(|&b| b >= -1)
            .ok_or_else(|| VolumeError::MalformedHeader(format!("bad byte skip `{s}`")))?,
        None => 0,
    };
    if byte_skip == -1 && encoding != Encoding::Raw {
        return Err(VolumeError::UnsupportedFeature(
            "byte skip -1 is only valid for raw encoding".into(),
        ));
    }

    if !terminated && pos < bytes.len() {
        return Err(VolumeError::MalformedHeader("header not terminated".into()));
    }

    let header = NrrdHeader {
        version,
        dimension,
        sizes,
        element_type,
        encoding,
        endianness,
        space_directions,
        spacings,
        space_origin,
        byte_skip,
        fields,
        key_values,
    };
    Ok((header, &bytes[pos..]))
}

fn parse_vector(s: &str) -> Result<[f64; 3], VolumeError> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| VolumeError::MalformedHeader(format!("bad vector `{s}`")))?;
    let comps = inner
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| VolumeError::MalformedHeader(format!("bad vector `{s}`")))?;
    let v: [f64; 3] = comps
        .try_into()
        .map_err(|_| VolumeError::MalformedHeader(format!("vector `{s}` must have 3 components")))?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(VolumeError::MalformedHeader(format!("non-finite vector `{s}`")));
    }
    Ok(v)
}

fn parse_directions(s: &str) -> Result<Option<[[f64; 3]; 3]>, VolumeError> {
    let tokens: Vec<&str> = s.split_whitespace().collect();
    if tokens.len() != 3 {
        return Err(VolumeError::MalformedHeader(format!(
            "space directions needs 3 entries, got `{s}`"
        )));
    }
    if tokens.contains(&"none") {
        return Ok(None);
    }
    let mut dirs = [[0.0; 3]; 3];
    for (d, t) in dirs.iter_mut().zip(tokens) {
        *d = parse_vector(t)?;
        if d.iter().all(|&c| c == 0.0) {
            return Err(VolumeError::MalformedHeader(
                "space direction has zero length".into(),
            ));
        }
    }
    Ok(Some(dirs))
}

fn parse_spacings(s: &str) -> Result<Option<[f64; 3]>, VolumeError> {
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| VolumeError::MalformedHeader(format!("bad spacings `{s}`")))?;
    let v: [f64; 3] = vals
        .try_into()
        .map_err(|_| VolumeError::MalformedHeader(format!("spacings needs 3 values, got `{s}`")))?;
    if v.iter().any(|x| x.is_nan()) {
        return Ok(None);
    }
    if v.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(VolumeError::MalformedHeader(format!("bad spacings `{s}`")));
    }
    Ok(Some(v))
}

/// Decodes a complete NRRD byte stream into a mask.
pub fn decode_nrrd(bytes: &[u8], policy: LabelPolicy) -> Result<MaskVolume, VolumeError> {
    let (header, payload) = parse_header(bytes)?;
    let dims = [header.sizes[0], header.sizes[1], header.sizes[2]];
    let (spacing, warnings) = header.spacing_mm();
    let geometry = GridGeometry::with_origin(dims, spacing, header.space_origin.unwrap_or([0.0; 3]))?;

    let elem = header.element_type.size();
    let expected = geometry
        .len()
        .checked_mul(elem)
        .ok_or_else(|| VolumeError::MalformedHeader("payload size overflows".into()))?;

    let inflated;
    let mut data: &[u8] = match header.encoding {
        Encoding::Raw => payload,
        Encoding::Gzip => {
            let mut out = Vec::with_capacity(expected);
            MultiGzDecoder::new(payload)
                .read_to_end(&mut out)
                .map_err(VolumeError::Decompression)?;
            inflated = out;
            &inflated
        }
    };
    match header.byte_skip {
        -1 => data = &data[data.len().saturating_sub(expected)..],
        n => data = &data[(n as usize).min(data.len())..],
    }
    if data.len() < expected {
        return Err(VolumeError::TruncatedData {
            expected,
            found: data.len(),
        });
    }

    let endian = header.endianness;
    let et = header.element_type;
    let voxels: Vec<bool> = data[..expected]
        .chunks_exact(elem)
        .map(|c| policy.accepts(et.decode(c, endian)))
        .collect();

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(MaskVolume::from_voxels(geometry, voxels)?.with_warnings(warnings))
}

pub fn read_nrrd(path: impl AsRef<Path>, policy: LabelPolicy) -> Result<MaskVolume, VolumeError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| VolumeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_nrrd(&bytes, policy)
}

/// Serializes a mask as a uint8 NRRD with axis-aligned space directions.
pub fn encode_nrrd(mask: &MaskVolume, encoding: Encoding) -> Vec<u8> {
    let g = mask.geometry();
    let [nx, ny, nz] = g.dims;
    let [sx, sy, sz] = g.spacing_mm;
    let [ox, oy, oz] = g.origin_mm;
    let enc = match encoding {
        Encoding::Raw => "raw",
        Encoding::Gzip => "gzip",
    };
    let mut out = format!(
        "NRRD0004\n\
         type: uint8\n\
         dimension: 3\n\
         space: left-posterior-superior\n\
         sizes: {nx} {ny} {nz}\n\
         space directions: ({sx},0,0) (0,{sy},0) (0,0,{sz})\n\
         kinds: domain domain domain\n\
         encoding: {enc}\n\
         space origin: ({ox},{oy},{oz})\n\n"
    )
    .into_bytes();
    let payload: Vec<u8> = mask.voxels().iter().map(|&v| v as u8).collect();
    match encoding {
        Encoding::Raw => out.extend_from_slice(&payload),
        Encoding::Gzip => {
            let mut enc = GzEncoder::new(out, Compression::default());
            enc.write_all(&payload).expect("writing to a Vec cannot fail");
            out = enc.finish().expect("writing to a Vec cannot fail");
        }
    }
    out
}

pub fn write_nrrd(
    path: impl AsRef<Path>,
    mask: &MaskVolume,
    encoding: Encoding,
) -> Result<(), VolumeError> {
    let path = path.as_ref();
    fs::write(path, encode_nrrd(mask, encoding)).map_err(|source| VolumeError::Io {
        path: path.to_path_buf(),
        source,
    })
}
