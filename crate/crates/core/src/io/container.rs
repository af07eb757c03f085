//! Minimal single-file container: a stored (uncompressed) zip archive.
//!
//! Used to persist a transport plan as one file whose `.npy` members are
//! readable by standard Python tooling. Only what this crate writes is
//! supported on read: method 0 (stored), no zip64, no encryption.

use std::fs;
use std::path::Path;

use crate::error::{GapError, Result};

fn fmt_err(path: &Path, reason: impl Into<String>) -> GapError {
    GapError::NpyFormat { path: path.to_path_buf(), reason: reason.into() }
}

fn crc32(data: &[u8]) -> u32 {
    // IEEE 802.3 polynomial, bitwise; container members are small enough
    // that a lookup table is not worth the code.
    let mut crc = !0u32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

/// Write `entries` (name, bytes) as a stored zip at `path`.
pub fn write(path: &Path, entries: &[(&str, Vec<u8>)]) -> Result<()> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    let mut count = 0u16;
    for (name, data) in entries {
        let name = name.as_bytes();
        let offset = u32::try_from(out.len()).expect("container under 4 GiB");
        let crc = crc32(data);
        let size = u32::try_from(data.len()).expect("member under 4 GiB");

        out.extend_from_slice(&0x0403_4b50u32.to_le_bytes());
        out.extend_from_slice(&20u16.to_le_bytes()); // version needed
        out.extend_from_slice(&0u16.to_le_bytes()); // flags
        out.extend_from_slice(&0u16.to_le_bytes()); // method: stored
        out.extend_from_slice(&0u16.to_le_bytes()); // mod time
        out.extend_from_slice(&0u16.to_le_bytes()); // mod date
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes()); // compressed
        out.extend_from_slice(&size.to_le_bytes()); // uncompressed
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes()); // extra len
        out.extend_from_slice(name);
        out.extend_from_slice(data);

        central.extend_from_slice(&0x0201_4b50u32.to_le_bytes());
        central.extend_from_slice(&20u16.to_le_bytes()); // made by
        central.extend_from_slice(&20u16.to_le_bytes()); // needed
        central.extend_from_slice(&0u16.to_le_bytes());
        central.extend_from_slice(&0u16.to_le_bytes());
        central.extend_from_slice(&0u16.to_le_bytes());
        central.extend_from_slice(&0u16.to_le_bytes());
        central.extend_from_slice(&crc.to_le_bytes());
        central.extend_from_slice(&size.to_le_bytes());
        central.extend_from_slice(&size.to_le_bytes());
        central.extend_from_slice(&(name.len() as u16).to_le_bytes());
        central.extend_from_slice(&0u16.to_le_bytes()); // extra
        central.extend_from_slice(&0u16.to_le_bytes()); // comment
        central.extend_from_slice(&0u16.to_le_bytes()); // disk
        central.extend_from_slice(&0u16.to_le_bytes()); // internal attrs
        central.extend_from_slice(&0u32.to_le_bytes()); // external attrs
        central.extend_from_slice(&offset.to_le_bytes());
        central.extend_from_slice(name);
        count += 1;
    }
    let cd_offset = u32::try_from(out.len()).expect("container under 4 GiB");
    let cd_size = u32::try_from(central.len()).expect("central directory fits");
    out.extend_from_slice(&central);
    out.extend_from_slice(&0x0605_4b50u32.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // this disk
    out.extend_from_slice(&0u16.to_le_bytes()); // cd disk
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&cd_size.to_le_bytes());
    out.extend_from_slice(&cd_offset.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // comment len
    fs::write(path, out).map_err(|e| GapError::Io { path: path.to_path_buf(), source: e })
}

/// Read all members of a stored zip written by [`write`].
pub fn read(path: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let bytes =
        fs::read(path).map_err(|e| GapError::Io { path: path.to_path_buf(), source: e })?;
    // EOCD: fixed 22-byte record, search backwards to tolerate a comment.
    let eocd = bytes
        .windows(4)
        .rposition(|w| w == 0x0605_4b50u32.to_le_bytes())
        .ok_or_else(|| fmt_err(path, "no end-of-archive record"))?;
    if bytes.len() < eocd + 22 {
        return Err(fmt_err(path, "truncated end-of-archive record"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]) as usize;
    let u32_at =
        |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize;
    let count = u16_at(eocd + 10);
    let mut pos = u32_at(eocd + 16);

    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        if bytes.len() < pos + 46 || u32_at(pos) != 0x0201_4b50 {
            return Err(fmt_err(path, "bad central directory entry"));
        }
        let method = u16_at(pos + 10);
        if method != 0 {
            return Err(fmt_err(path, format!("unsupported compression method {method}")));
        }
        let crc = u32_at(pos + 16) as u32;
        let size = u32_at(pos + 24);
        let name_len = u16_at(pos + 28);
        let extra_len = u16_at(pos + 30);
        let comment_len = u16_at(pos + 32);
        let lho = u32_at(pos + 42);
        let name = std::str::from_utf8(&bytes[pos + 46..pos + 46 + name_len])
            .map_err(|_| fmt_err(path, "member name is not UTF-8"))?
            .to_string();

        if bytes.len() < lho + 30 || u32_at(lho) != 0x0403_4b50 {
            return Err(fmt_err(path, "bad local header"));
        }
        let l_name = u16_at(lho + 26);
        let l_extra = u16_at(lho + 28);
        let data_start = lho + 30 + l_name + l_extra;
        if bytes.len() < data_start + size {
            return Err(fmt_err(path, format!("member '{name}' is truncated")));
        }
        let data = bytes[data_start..data_start + size].to_vec();
        if crc32(&data) != crc {
            return Err(fmt_err(path, format!("member '{name}' fails checksum")));
        }
        entries.push((name, data));
        pos += 46 + name_len + extra_len + comment_len;
    }
    Ok(entries)
}
