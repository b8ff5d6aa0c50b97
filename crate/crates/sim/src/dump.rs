//! Portable binary dump of a channel realization.
//!
//! Layout, all integers and doubles little-endian:
//!
//! ```text
//! magic   8 bytes   "PHCOOPCH"
//! version u32       1
//! count   u32       6
//! count × { rows u64, cols u64, rows·cols × (re f64, im f64) row-major }
//! ```
//!
//! Matrices in order: user AP-IRS (`N × M_u`), user IRS-receiver (`K_I × N`,
//! row `k` is `h_k`), user direct (`K_I × M_u`), then the same three for
//! the IoT network.

use std::io::{Read, Write};
use std::path::Path;

use phasecoop_core::channel::{ChannelRealization, NetworkLinks};
use phasecoop_core::linalg::{CMat, CVec, C64};

use crate::error::HarnessError;

const MAGIC: &[u8; 8] = b"PHCOOPCH";
const VERSION: u32 = 1;

fn rows_matrix(rows: &[CVec], cols: usize) -> CMat {
    CMat::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

fn matrix_rows(m: &CMat) -> Vec<CVec> {
    (0..m.nrows()).map(|i| m.row(i).transpose()).collect()
}

fn put_matrix(out: &mut Vec<u8>, m: &CMat) {
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
}

/// Serialize to bytes.
pub fn encode(real: &ChannelRealization) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&6u32.to_le_bytes());
    for net in [&real.users, &real.devices] {
        put_matrix(&mut out, &net.ap_irs);
        put_matrix(&mut out, &rows_matrix(&net.irs_rx, net.elements()));
        put_matrix(&mut out, &rows_matrix(&net.direct, net.antennas()));
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], String> {
        if self.bytes.len() < N {
            return Err("truncated file".into());
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("split_at returned N bytes"))
    }

    fn matrix(&mut self) -> Result<CMat, String> {
        let rows = u64::from_le_bytes(self.take()?) as usize;
        let cols = u64::from_le_bytes(self.take()?) as usize;
        let len = rows.checked_mul(cols).and_then(|n| n.checked_mul(16)).ok_or("matrix dimensions overflow")?;
        if self.bytes.len() < len {
            return Err(format!("truncated {rows}x{cols} matrix"));
        }
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let re = f64::from_le_bytes(self.take()?);
                let im = f64::from_le_bytes(self.take()?);
                m[(i, j)] = C64::new(re, im);
            }
        }
        Ok(m)
    }
}

/// Parse bytes produced by [`encode`].
pub fn decode(bytes: &[u8]) -> Result<ChannelRealization, String> {
    let mut c = Cursor { bytes };
    if &c.take::<8>()? != MAGIC {
        return Err("not a channel dump (bad magic)".into());
    }
    let version = u32::from_le_bytes(c.take()?);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = u32::from_le_bytes(c.take()?);
    if count != 6 {
        return Err(format!("expected 6 matrices, found {count}"));
    }
    let mut net = || -> Result<NetworkLinks, String> {
        let ap_irs = c.matrix()?;
        let irs_rx = c.matrix()?;
        let direct = c.matrix()?;
        if irs_rx.ncols() != ap_irs.nrows() || direct.ncols() != ap_irs.ncols() || irs_rx.nrows() != direct.nrows() {
            return Err("inconsistent matrix shapes".into());
        }
        Ok(NetworkLinks { ap_irs, irs_rx: matrix_rows(&irs_rx), direct: matrix_rows(&direct) })
    };
    let users = net()?;
    let devices = net()?;
    if !c.bytes.is_empty() {
        return Err("trailing bytes".into());
    }
    Ok(ChannelRealization { users, devices })
}

pub fn write_realization(path: &Path, real: &ChannelRealization) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_owned(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&encode(real)).map_err(io)
}

pub fn read_realization(path: &Path) -> Result<ChannelRealization, HarnessError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| HarnessError::Io { path: path.to_owned(), source })?;
    decode(&bytes).map_err(|reason| HarnessError::Format { path: path.to_owned(), reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use phasecoop_core::pipeline::realization;
    use phasecoop_core::scenario::Scenario;

    fn sample() -> ChannelRealization {
        let s = Scenario { n_irs: 5, m_u: 3, k_i: 2, m_i: 4, k_ei: 3, ..Scenario::default() };
        realization(&s, 2).1
    }

    #[test]
    fn round_trip_is_exact() {
        let real = sample();
        assert_eq!(decode(&encode(&real)).unwrap(), real);
    }

    #[test]
    fn header_and_first_entry_layout() {
        let real = sample();
        let bytes = encode(&real);
        assert_eq!(&bytes[..8], b"PHCOOPCH");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 5);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 3);
        // Row-major: the second stored entry is G[0][1].
        let re = f64::from_le_bytes(bytes[48..56].try_into().unwrap());
        assert_eq!(re, real.users.ap_irs[(0, 1)].re);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
