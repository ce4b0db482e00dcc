//! Binary trace format: a 16-byte header (magic `LOFT`, u32 version, u64
//! record count) followed by 24-byte little-endian records
//! (u64 timestamp_ns, u64 flow_id, u32 size, u32 reserved = 0).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{LoftError, Result};
use crate::model::{FlowId, PacketRecord};

pub const TRACE_MAGIC: [u8; 4] = *b"LOFT";
pub const TRACE_VERSION: u32 = 1;
pub const TRACE_HEADER_BYTES: u64 = 16;
pub const TRACE_RECORD_BYTES: u64 = 24;

fn trace_err(path: &Path, reason: impl Into<String>) -> LoftError {
    LoftError::Trace {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Writes a timestamp-sorted packet stream; returns the record count.
pub fn write_trace<I>(path: &Path, packets: I) -> Result<u64>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut w = BufWriter::with_capacity(1 << 20, File::create(path)?);
    w.write_all(&TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    let mut count = 0u64;
    let mut prev = 0u64;
    let mut rec = [0u8; TRACE_RECORD_BYTES as usize];
    for p in packets {
        if p.timestamp_ns < prev {
            return Err(LoftError::OutOfOrder {
                prev_ns: prev,
                got_ns: p.timestamp_ns,
            });
        }
        prev = p.timestamp_ns;
        rec[0..8].copy_from_slice(&p.timestamp_ns.to_le_bytes());
        rec[8..16].copy_from_slice(&p.flow_id.0.to_le_bytes());
        rec[16..20].copy_from_slice(&p.size_bytes.to_le_bytes());
        w.write_all(&rec)?;
        count += 1;
    }
    let mut f = w.into_inner().map_err(|e| e.into_error())?;
    f.seek(SeekFrom::Start(8))?;
    f.write_all(&count.to_le_bytes())?;
    f.sync_all()?;
    Ok(count)
}

/// Streaming reader over a binary trace file.
#[derive(Debug)]
pub struct TraceReader {
    path: PathBuf,
    inner: BufReader<File>,
    remaining: u64,
    count: u64,
}

impl TraceReader {
    pub fn record_count(&self) -> u64 {
        self.count
    }
}

pub fn read_trace(path: &Path) -> Result<TraceReader> {
    let mut f = File::open(path)?;
    let len = f.metadata()?.len();
    if len < TRACE_HEADER_BYTES {
        return Err(trace_err(path, "truncated header"));
    }
    let mut header = [0u8; TRACE_HEADER_BYTES as usize];
    f.read_exact(&mut header)?;
    if header[0..4] != TRACE_MAGIC {
        return Err(trace_err(path, "bad magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != TRACE_VERSION {
        return Err(trace_err(path, format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let expected = count
        .checked_mul(TRACE_RECORD_BYTES)
        .and_then(|b| b.checked_add(TRACE_HEADER_BYTES));
    if expected != Some(len) {
        return Err(trace_err(
            path,
            format!("header declares {count} records but file holds {len} bytes"),
        ));
    }
    Ok(TraceReader {
        path: path.to_path_buf(),
        inner: BufReader::with_capacity(1 << 20, f),
        remaining: count,
        count,
    })
}

impl Iterator for TraceReader {
    type Item = Result<PacketRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let mut rec = [0u8; TRACE_RECORD_BYTES as usize];
        if let Err(e) = self.inner.read_exact(&mut rec) {
            self.remaining = 0;
            return Some(Err(e.into()));
        }
        let u64_at = |i: usize| u64::from_le_bytes(rec[i..i + 8].try_into().expect("8 bytes"));
        let u32_at = |i: usize| u32::from_le_bytes(rec[i..i + 4].try_into().expect("4 bytes"));
        if u32_at(20) != 0 {
            self.remaining = 0;
            return Some(Err(trace_err(&self.path, "nonzero reserved field")));
        }
        Some(Ok(PacketRecord {
            timestamp_ns: u64_at(0),
            flow_id: FlowId(u64_at(8)),
            size_bytes: u32_at(16),
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// CSV with header `ts_ns,flow_id,size`.
pub fn write_csv<I>(path: &Path, packets: I) -> Result<u64>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| trace_err(path, e.to_string()))?;
    w.write_record(["ts_ns", "flow_id", "size"])
        .map_err(|e| trace_err(path, e.to_string()))?;
    let mut n = 0;
    for p in packets {
        w.serialize((p.timestamp_ns, p.flow_id.0, p.size_bytes))
            .map_err(|e| trace_err(path, e.to_string()))?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn read_csv(path: &Path) -> Result<Vec<PacketRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| trace_err(path, e.to_string()))?;
    let headers = r.headers().map_err(|e| trace_err(path, e.to_string()))?;
    if headers != vec!["ts_ns", "flow_id", "size"] {
        return Err(trace_err(path, format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for row in r.deserialize::<(u64, u64, u32)>() {
        let (ts, flow, size) = row.map_err(|e| trace_err(path, e.to_string()))?;
        out.push(PacketRecord::new(ts, flow, size));
    }
    Ok(out)
}
