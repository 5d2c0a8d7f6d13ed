//! Little-endian binary container shared by the model file formats.
//!
//! Layout: 4 magic bytes, `u32` format version, payload, then a SHA-256
//! digest of everything before it. Readers verify magic, version, and
//! digest before any field is interpreted.

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        Writer { buf }
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Verifies the trailing digest and the header, and positions the
    /// cursor at the start of the payload.
    pub fn new(data: &'a [u8], magic: &[u8; 4], version: u32) -> Result<Self> {
        if data.len() < 8 + 32 {
            return Err(Error::ModelFormat("file too short".into()));
        }
        let (body, digest) = data.split_at(data.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::ModelChecksum);
        }
        if &body[..4] != magic {
            return Err(Error::ModelFormat(format!(
                "bad magic {:02x?}, expected {:02x?}",
                &body[..4],
                magic
            )));
        }
        let got = u32::from_le_bytes(body[4..8].try_into().unwrap());
        if got != version {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {got}, expected {version}"
            )));
        }
        Ok(Reader { buf: body, pos: 8 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ModelFormat("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::ModelFormat("invalid utf-8 in string field".into()))
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::ModelFormat(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
