//! Versioned binary checkpoint container with per-section integrity
//! hashes, plus typed encoders for the workbench payloads (trunk basis,
//! corrector weights, optimizer state, field sets, config snapshots).
//!
//! Layout: magic, version, section count, section table (name, offset,
//! length, CRC-64), header CRC-64, then the section payloads. Sections are
//! stored in name order so save→load→save is byte-identical.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::corrector::{Architecture, CorrectorParams, TrunkBasis};
use crate::error::{CoreError, Result};
use crate::spectral::{Grid1D, Reality, SpectralField};

const MAGIC: &[u8; 4] = b"HLRC";
pub const FORMAT_MAJOR: u16 = 1;
pub const FORMAT_MINOR: u16 = 0;

// CRC-64/ECMA-182
const CRC64_POLY: u64 = 0x42F0_E1EB_A9EA_3693;

fn crc64_table() -> [u64; 256] {
    let mut table = [0u64; 256];
    for (i, slot) in table.iter_mut().enumerate() {
        let mut crc = (i as u64) << 56;
        for _ in 0..8 {
            crc = if crc & 0x8000_0000_0000_0000 != 0 {
                (crc << 1) ^ CRC64_POLY
            } else {
                crc << 1
            };
        }
        *slot = crc;
    }
    table
}

pub fn crc64(bytes: &[u8]) -> u64 {
    thread_local! {
        static TABLE: [u64; 256] = crc64_table();
    }
    TABLE.with(|t| {
        let mut crc = 0u64;
        for &b in bytes {
            crc = (crc << 8) ^ t[(((crc >> 56) as u8) ^ b) as usize];
        }
        crc
    })
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A named-section container. Section order is canonical (by name).
#[derive(Clone, Debug, Default)]
pub struct Checkpoint {
    sections: BTreeMap<String, Vec<u8>>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.sections.insert(name.to_string(), bytes);
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.sections.get(name).map(|v| v.as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[u8]> {
        self.get(name)
            .ok_or_else(|| CoreError::Integrity(format!("missing checkpoint section `{name}`")))
    }

    pub fn section_names(&self) -> Vec<&str> {
        self.sections.keys().map(|s| s.as_str()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_bytes_versioned(FORMAT_MAJOR, FORMAT_MINOR)
    }

    pub fn to_bytes_versioned(&self, major: u16, minor: u16) -> Vec<u8> {
        let mut header = Vec::new();
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&major.to_le_bytes());
        header.extend_from_slice(&minor.to_le_bytes());
        header.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());

        // table sizes depend only on names, so compute offsets first
        let mut table_len = 0usize;
        for name in self.sections.keys() {
            table_len += 2 + name.len() + 8 + 8 + 8;
        }
        let payload_start = header.len() + table_len + 8; // + header crc
        let mut offset = payload_start as u64;
        for (name, bytes) in &self.sections {
            header.extend_from_slice(&(name.len() as u16).to_le_bytes());
            header.extend_from_slice(name.as_bytes());
            header.extend_from_slice(&offset.to_le_bytes());
            header.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
            header.extend_from_slice(&crc64(bytes).to_le_bytes());
            offset += bytes.len() as u64;
        }
        let hcrc = crc64(&header);
        header.extend_from_slice(&hcrc.to_le_bytes());
        for bytes in self.sections.values() {
            header.extend_from_slice(bytes);
        }
        header
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let fail = |msg: &str| CoreError::Integrity(msg.to_string());
        if data.len() < 12 || &data[0..4] != MAGIC {
            return Err(fail("bad magic or truncated header"));
        }
        let major = u16::from_le_bytes([data[4], data[5]]);
        let minor = u16::from_le_bytes([data[6], data[7]]);
        if major != FORMAT_MAJOR {
            return Err(CoreError::Version {
                found_major: major,
                found_minor: minor,
                supported_major: FORMAT_MAJOR,
            });
        }
        let n_sections = u32::from_le_bytes([data[8], data[9], data[10], data[11]]) as usize;
        let mut pos = 12usize;
        let mut entries = Vec::with_capacity(n_sections);
        for _ in 0..n_sections {
            if pos + 2 > data.len() {
                return Err(fail("truncated section table"));
            }
            let name_len = u16::from_le_bytes([data[pos], data[pos + 1]]) as usize;
            pos += 2;
            if pos + name_len + 24 > data.len() {
                return Err(fail("truncated section table"));
            }
            let name = String::from_utf8(data[pos..pos + name_len].to_vec())
                .map_err(|_| fail("non-utf8 section name"))?;
            pos += name_len;
            let read_u64 = |p: usize| {
                let mut b = [0u8; 8];
                b.copy_from_slice(&data[p..p + 8]);
                u64::from_le_bytes(b)
            };
            let offset = read_u64(pos) as usize;
            let length = read_u64(pos + 8) as usize;
            let crc = read_u64(pos + 16);
            pos += 24;
            entries.push((name, offset, length, crc));
        }
        if pos + 8 > data.len() {
            return Err(fail("missing header checksum"));
        }
        let stored_hcrc = {
            let mut b = [0u8; 8];
            b.copy_from_slice(&data[pos..pos + 8]);
            u64::from_le_bytes(b)
        };
        if crc64(&data[..pos]) != stored_hcrc {
            return Err(fail("header checksum mismatch"));
        }
        let mut sections = BTreeMap::new();
        for (name, offset, length, crc) in entries {
            if offset + length > data.len() {
                return Err(fail("section extends past end of file"));
            }
            let bytes = data[offset..offset + length].to_vec();
            if crc64(&bytes) != crc {
                return Err(CoreError::Integrity(format!(
                    "checksum mismatch in section `{name}`"
                )));
            }
            sections.insert(name, bytes);
        }
        Ok(Self { sections })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        f.write_all(&bytes).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut data = Vec::new();
        f.read_to_end(&mut data).map_err(|e| io_err(path, e))?;
        Self::from_bytes(&data)
    }
}

// ---- byte-level helpers ----

struct Writer(Vec<u8>);

impl Writer {
    fn new() -> Self {
        Writer(Vec::new())
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
    fn complexes(&mut self, vs: &[Complex64]) {
        self.u64(vs.len() as u64);
        for v in vs {
            self.f64(v.re);
            self.f64(v.im);
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(CoreError::Integrity("section payload truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(b))
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        b.copy_from_slice(self.take(4)?);
        Ok(u32::from_le_bytes(b))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
    fn complexes(&mut self) -> Result<Vec<Complex64>> {
        let n = self.u64()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let re = self.f64()?;
            let im = self.f64()?;
            out.push(Complex64::new(re, im));
        }
        Ok(out)
    }
}

// ---- typed payload codecs ----

pub fn encode_basis(basis: &TrunkBasis) -> Vec<u8> {
    let mut w = Writer::new();
    w.u64(basis.grid().n_modes() as u64);
    w.u64(basis.latent_dim() as u64);
    w.complexes(basis.raw_data());
    w.0
}

pub fn decode_basis(bytes: &[u8]) -> Result<TrunkBasis> {
    let mut r = Reader::new(bytes);
    let n = r.u64()? as usize;
    let k = r.u64()? as usize;
    let data = r.complexes()?;
    TrunkBasis::from_columns(data, Grid1D::new(n)?, k)
}

pub fn encode_params(params: &CorrectorParams) -> Vec<u8> {
    let mut w = Writer::new();
    let arch = params.arch();
    w.u64(arch.latent_dim as u64);
    w.u64(arch.hidden as u64);
    w.u64(arch.enc_hidden as u64);
    w.u64(arch.dec_hidden as u64);
    w.u64(arch.quad_heads as u64);
    w.f64(params.w_max);
    w.u32(crate::corrector::FEATURE_VERSION);
    w.u32(params.n_tensors() as u32);
    for i in 0..params.n_tensors() {
        let t = params.tensor(i);
        w.u64(t.rows as u64);
        w.u64(t.cols as u64);
        w.f64s(&t.data);
    }
    w.f64s(&params.layer_norms);
    w.0
}

pub fn decode_params(bytes: &[u8]) -> Result<CorrectorParams> {
    let mut r = Reader::new(bytes);
    let latent_dim = r.u64()? as usize;
    let hidden = r.u64()? as usize;
    let enc_hidden = r.u64()? as usize;
    let dec_hidden = r.u64()? as usize;
    let quad_heads = r.u64()? as usize;
    let w_max = r.f64()?;
    let feature_version = r.u32()?;
    if feature_version != crate::corrector::FEATURE_VERSION {
        return Err(CoreError::Integrity(format!(
            "feature-spec version {feature_version} differs from supported {}",
            crate::corrector::FEATURE_VERSION
        )));
    }
    let arch = Architecture {
        latent_dim,
        hidden,
        enc_hidden,
        dec_hidden,
        quad_heads,
    };
    let mut params = CorrectorParams::zeros(arch, w_max);
    let n_tensors = r.u32()? as usize;
    if n_tensors != params.n_tensors() {
        return Err(CoreError::Integrity(format!(
            "tensor count {n_tensors} does not match architecture ({})",
            params.n_tensors()
        )));
    }
    for i in 0..n_tensors {
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let data = r.f64s()?;
        let t = params.tensor_mut(i);
        if rows != t.rows || cols != t.cols || data.len() != t.data.len() {
            return Err(CoreError::Integrity(format!(
                "tensor {i} shape {rows}x{cols} does not match architecture"
            )));
        }
        t.data = data;
    }
    params.layer_norms = r.f64s()?;
    Ok(params)
}

pub fn encode_fields(fields: &[SpectralField]) -> Vec<u8> {
    let mut w = Writer::new();
    w.u64(fields.len() as u64);
    for f in fields {
        w.u64(f.grid().n_modes() as u64);
        w.u8(match f.reality() {
            Reality::RealValued => 0,
            Reality::ComplexValued => 1,
        });
        w.complexes(f.coeffs());
    }
    w.0
}

pub fn decode_fields(bytes: &[u8]) -> Result<Vec<SpectralField>> {
    let mut r = Reader::new(bytes);
    let count = r.u64()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = r.u64()? as usize;
        let reality = match r.u8()? {
            0 => Reality::RealValued,
            1 => Reality::ComplexValued,
            other => {
                return Err(CoreError::Integrity(format!(
                    "unknown reality tag {other}"
                )))
            }
        };
        let coeffs = r.complexes()?;
        out.push(SpectralField::from_coeffs(coeffs, Grid1D::new(n)?, reality)?);
    }
    Ok(out)
}

pub fn encode_optimizer(m: &[f64], v: &[f64], step: usize) -> Vec<u8> {
    let mut w = Writer::new();
    w.u64(step as u64);
    w.f64s(m);
    w.f64s(v);
    w.0
}

pub fn decode_optimizer(bytes: &[u8]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut r = Reader::new(bytes);
    let step = r.u64()? as usize;
    let m = r.f64s()?;
    let v = r.f64s()?;
    Ok((m, v, step))
}
