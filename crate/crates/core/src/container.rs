//! Self-describing binary container shared by checkpoints, window caches and
//! teacher logit caches.
//!
//! Layout (little endian):
//!
//! ```text
//! magic: 8 bytes | version: u32 | header_len: u64 | header: JSON | payload
//! ```

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub struct Container<H> {
    pub version: u32,
    pub header: H,
    pub payload: Vec<u8>,
}

pub fn encode<H: Serialize>(magic: &[u8; 8], version: u32, header: &H, payload: &[u8]) -> Vec<u8> {
    let header = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + header.len() + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(payload);
    out
}

pub fn decode<H: DeserializeOwned>(path: &Path, magic: &[u8; 8], bytes: Vec<u8>) -> Result<Container<H>> {
    if bytes.len() < 20 || &bytes[..8] != magic {
        return Err(Error::format(path, "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() < 20 + hlen {
        return Err(Error::format(path, "truncated header"));
    }
    let header: H = serde_json::from_slice(&bytes[20..20 + hlen])
        .map_err(|e| Error::format(path, format!("header: {e}")))?;
    let payload = bytes[20 + hlen..].to_vec();
    Ok(Container {
        version,
        header,
        payload,
    })
}

pub fn read<H: DeserializeOwned>(path: &Path, magic: &[u8; 8]) -> Result<Container<H>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, magic, bytes)
}

/// Writes `bytes` to `path` unless the file already holds exactly those bytes.
/// Returns whether the file was (re)written.
pub fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool> {
    if let Ok(existing) = std::fs::read(path) {
        if existing == bytes {
            return Ok(false);
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(true)
}

/// Little-endian cursor over a payload.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    pub fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f32s(&mut self, n: usize) -> Option<Vec<f32>> {
        let b = self.take(4 * n)?;
        Some(
            b.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    }

    pub fn f64s(&mut self, n: usize) -> Option<Vec<f64>> {
        let b = self.take(8 * n)?;
        Some(
            b.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    }

    pub fn bytes(&mut self, n: usize) -> Option<&'a [u8]> {
        self.take(n)
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_magic_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        let bytes = encode(b"TESTMAGC", 3, &vec!["a", "b"], &[1, 2, 3]);
        assert!(write_if_changed(&p, &bytes).unwrap());
        assert!(!write_if_changed(&p, &bytes).unwrap());
        let c: Container<Vec<String>> = read(&p, b"TESTMAGC").unwrap();
        assert_eq!(c.version, 3);
        assert_eq!(c.header, ["a", "b"]);
        assert_eq!(c.payload, [1, 2, 3]);
        assert!(read::<Vec<String>>(&p, b"OTHERMGC").is_err());
    }
}
