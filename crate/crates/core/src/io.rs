//! File formats: RKF1 field containers, CSV tables, and model or bracket persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::serial::structure_hash;
use crate::algebra::{ConcreteStructure, Symbol};
use crate::error::{ReconError, Result};
use crate::harmonic::{estimate_regularity, spectral_profile, Field};
use crate::models::{CharacterField, Model, Sector};
use crate::paracontrolled::BracketSet;

pub const RKF_MAGIC: &[u8; 4] = b"RKF1";

/// Write through a temporary file in the target directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| ReconError::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// "RKF1", u8 d, u8 L, u32 count, then count little-endian f64 arrays of length N^d.
pub fn encode_rkf(fields: &[Field], d: usize, l: u32) -> Result<Vec<u8>> {
    let n = 1usize << (l as usize * d);
    let mut out = Vec::with_capacity(10 + fields.len() * n * 8);
    out.extend_from_slice(RKF_MAGIC);
    out.push(d as u8);
    out.push(l as u8);
    out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    for f in fields {
        if f.d != d || f.l != l {
            return Err(ReconError::GridMismatch(format!("field on (d={}, L={}) in a (d={d}, L={l}) file", f.d, f.l)));
        }
        for v in &f.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_rkf(bytes: &[u8]) -> Result<(usize, u32, Vec<Field>)> {
    if bytes.len() < 10 || &bytes[..4] != RKF_MAGIC {
        return Err(ReconError::Parse("not an RKF1 file".into()));
    }
    let d = bytes[4] as usize;
    let l = bytes[5] as u32;
    if !(1..=2).contains(&d) || l == 0 || l as usize * d > 40 {
        return Err(ReconError::Parse(format!("unsupported grid d={d}, L={l}")));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = 1usize << (l as usize * d);
    let body = &bytes[10..];
    if body.len() != count * n * 8 {
        return Err(ReconError::Parse(format!("expected {} payload bytes, found {}", count * n * 8, body.len())));
    }
    let fields = body
        .chunks_exact(n * 8)
        .map(|chunk| {
            let values = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
            Field::new(d, l, values).map_err(|e| ReconError::Parse(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((d, l, fields))
}

pub fn write_rkf(path: &Path, fields: &[Field], d: usize, l: u32) -> Result<()> {
    write_atomic(path, &encode_rkf(fields, d, l)?)
}

pub fn read_rkf(path: &Path) -> Result<(usize, u32, Vec<Field>)> {
    decode_rkf(&fs::read(path)?)
}

/// Rows (i, m_i) of the spectral profile.
pub fn profile_csv(f: &Field) -> String {
    let mut s = String::from("i,m_i\n");
    for (i, m) in spectral_profile(f) {
        s.push_str(&format!("{i},{m:e}\n"));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityRow {
    pub symbol: String,
    pub declared: f64,
    pub estimated: Option<f64>,
    pub pass: bool,
}

/// Estimate the LP exponent of each named field against its declared value.
pub fn regularity_rows(items: &[(String, f64, &Field)], window: (i32, i32), tol: f64) -> Vec<RegularityRow> {
    items
        .iter()
        .map(|(name, declared, f)| {
            let est = estimate_regularity(f, window).ok().map(|r| r.slope);
            RegularityRow {
                symbol: name.clone(),
                declared: *declared,
                estimated: est,
                pass: est.is_none_or(|e| e >= declared - tol),
            }
        })
        .collect()
}

pub fn regularity_csv(rows: &[RegularityRow]) -> String {
    let mut s = String::from("symbol,declared,estimated,pass\n");
    for r in rows {
        let est = r.estimated.map(|e| format!("{e:.6}")).unwrap_or_else(|| "insufficient-data".into());
        s.push_str(&format!("{},{:.6},{},{}\n", csv_escape(&r.symbol), r.declared, est, r.pass));
    }
    s
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelHeader {
    pub format: String,
    pub structure_hash: String,
    pub sector: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: u32,
    pub provenance: String,
    pub pi: Vec<String>,
    pub g: Vec<String>,
    pub fields: String,
}

pub const MODEL_FORMAT: &str = "reconkit-model-1";
pub const BRACKETS_FORMAT: &str = "reconkit-brackets-1";

fn rkf_sibling(header: &Path) -> PathBuf {
    header.with_extension("rkf")
}

fn rkf_name(header: &Path) -> String {
    rkf_sibling(header).file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Persist a model as a JSON header plus an RKF1 file holding Π then g, in header order.
pub fn save_model(model: &Model, header_path: &Path) -> Result<()> {
    let st = &model.structure;
    let pi_syms: Vec<&Symbol> = model.pi.keys().collect();
    let g_syms: Vec<&Symbol> = model.g.values.keys().collect();
    let header = ModelHeader {
        format: MODEL_FORMAT.into(),
        structure_hash: structure_hash(st),
        sector: match model.sector {
            Sector::T => "T".into(),
            Sector::Plus => "T+".into(),
        },
        d: model.d,
        l: model.l,
        provenance: model.provenance.clone(),
        pi: pi_syms.iter().map(|s| st.name(s)).collect(),
        g: g_syms.iter().map(|s| st.name(s)).collect(),
        fields: rkf_name(header_path),
    };
    let mut fields: Vec<Field> = model.pi.values().cloned().collect();
    fields.extend(model.g.values.values().cloned());
    write_rkf(&rkf_sibling(header_path), &fields, model.d, model.l)?;
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    write_atomic(header_path, text.as_bytes())
}

fn read_fields(header_path: &Path, name: &str, d: usize, l: u32, expected: usize) -> Result<Vec<Field>> {
    let path = header_path.parent().unwrap_or(Path::new(".")).join(name);
    let (fd, fl, fields) = read_rkf(&path)?;
    if fd != d || fl != l {
        return Err(ReconError::GridMismatch(format!("{} holds (d={fd}, L={fl}), header says (d={d}, L={l})", path.display())));
    }
    if fields.len() != expected {
        return Err(ReconError::Parse(format!("{} holds {} fields, header lists {expected}", path.display(), fields.len())));
    }
    Ok(fields)
}

pub fn load_model(header_path: &Path, structure: Arc<ConcreteStructure>) -> Result<Model> {
    let header: ModelHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    if header.format != MODEL_FORMAT {
        return Err(ReconError::Parse(format!("{} is not a model header", header_path.display())));
    }
    if header.structure_hash != structure_hash(&structure) {
        return Err(ReconError::InvalidArgument("model was saved for a different structure".into()));
    }
    let sector = match header.sector.as_str() {
        "T" => Sector::T,
        "T+" => Sector::Plus,
        other => return Err(ReconError::Parse(format!("unknown sector '{other}'"))),
    };
    let mut fields = read_fields(header_path, &header.fields, header.d, header.l, header.pi.len() + header.g.len())?;
    let g_fields = fields.split_off(header.pi.len());
    let mut pi = BTreeMap::new();
    for (name, f) in header.pi.iter().zip(fields) {
        pi.insert(structure.parse(name)?, f);
    }
    let mut g = CharacterField::new();
    for (name, f) in header.g.iter().zip(g_fields) {
        g.insert(structure.parse(name)?, f);
    }
    Model::new(structure, sector, header.d, header.l, g, pi, &header.provenance)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketHeader {
    pub format: String,
    pub structure_hash: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: u32,
    pub provenance: String,
    pub g: Vec<String>,
    pub m: Vec<String>,
    pub fields: String,
}

pub fn save_brackets(
    st: &ConcreteStructure,
    brackets: &BracketSet,
    d: usize,
    l: u32,
    header_path: &Path,
) -> Result<()> {
    let header = BracketHeader {
        format: BRACKETS_FORMAT.into(),
        structure_hash: structure_hash(st),
        d,
        l,
        provenance: brackets.provenance.clone(),
        g: brackets.g.keys().map(|s| st.name(s)).collect(),
        m: brackets.m.keys().map(|s| st.name(s)).collect(),
        fields: rkf_name(header_path),
    };
    let mut fields: Vec<Field> = brackets.g.values().cloned().collect();
    fields.extend(brackets.m.values().cloned());
    write_rkf(&rkf_sibling(header_path), &fields, d, l)?;
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    write_atomic(header_path, text.as_bytes())
}

pub fn load_brackets(header_path: &Path, st: &ConcreteStructure) -> Result<(BracketSet, usize, u32)> {
    let header: BracketHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    if header.format != BRACKETS_FORMAT {
        return Err(ReconError::Parse(format!("{} is not a bracket header", header_path.display())));
    }
    if header.structure_hash != structure_hash(st) {
        return Err(ReconError::InvalidArgument("brackets were saved for a different structure".into()));
    }
    let mut fields = read_fields(header_path, &header.fields, header.d, header.l, header.g.len() + header.m.len())?;
    let m_fields = fields.split_off(header.g.len());
    let mut set = BracketSet { provenance: header.provenance.clone(), ..Default::default() };
    for (name, f) in header.g.iter().zip(fields) {
        set.g.insert(st.parse(name)?, f);
    }
    for (name, f) in header.m.iter().zip(m_fields) {
        set.m.insert(st.parse(name)?, f);
    }
    Ok((set, header.d, header.l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rkf_round_trip() {
        let a = Field::from_fn(1, 5, |p| p[0].sin());
        let b = Field::from_fn(1, 5, |p| p[0] * 3.0);
        let bytes = encode_rkf(&[a.clone(), b.clone()], 1, 5).unwrap();
        assert_eq!(&bytes[..4], b"RKF1");
        assert_eq!(bytes.len(), 10 + 2 * 32 * 8);
        let (d, l, f) = decode_rkf(&bytes).unwrap();
        assert_eq!((d, l), (1, 5));
        assert_eq!(f, vec![a, b]);
    }

    #[test]
    fn rkf_rejects_truncation() {
        let bytes = encode_rkf(&[Field::constant(2, 3, 1.0)], 2, 3).unwrap();
        assert!(decode_rkf(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_rkf(b"RKF2\x01\x03\0\0\0\0").is_err());
    }

    #[test]
    fn csv_quotes_commas() {
        let rows = vec![RegularityRow { symbol: "a,b".into(), declared: -0.5, estimated: None, pass: true }];
        assert_eq!(regularity_csv(&rows), "symbol,declared,estimated,pass\n\"a,b\",-0.500000,insufficient-data,true\n");
    }
}
