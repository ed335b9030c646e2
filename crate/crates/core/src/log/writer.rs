use std::collections::BTreeMap;
use std::io::Write;

use super::record::{meta_line, Meta, Record, StreamKey, TimestampNs};
use super::LogError;

/// Per-stream ordering state: last timestamp per stream and last frame index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamClock {
    last: BTreeMap<StreamKey, TimestampNs>,
    last_frame_idx: Option<u64>,
}

impl StreamClock {
    /// Check `record` against the clock without advancing it.
    pub fn check(&self, record: &Record) -> Result<(), LogError> {
        if let Some((stream, ts)) = record.stream_ts() {
            if let Some(&prev) = self.last.get(&stream) {
                if ts < prev {
                    return Err(LogError::MonotonicityViolation { stream, previous: prev.0, got: ts.0 });
                }
            }
        }
        if let (Record::Frame(f), Some(prev)) = (record, self.last_frame_idx) {
            if f.idx <= prev {
                return Err(LogError::FrameIndexNotIncreasing { previous: prev, got: f.idx });
            }
        }
        Ok(())
    }

    pub fn admit(&mut self, record: &Record) -> Result<(), LogError> {
        self.check(record)?;
        if let Some((stream, ts)) = record.stream_ts() {
            self.last.insert(stream, ts);
        }
        if let Record::Frame(f) = record {
            self.last_frame_idx = Some(f.idx);
        }
        Ok(())
    }

    /// Check a whole batch as if appended in order; reports the first offending index.
    pub fn check_batch(&self, records: &[Record]) -> Result<(), (usize, LogError)> {
        let mut probe = self.clone();
        for (i, r) in records.iter().enumerate() {
            probe.admit(r).map_err(|e| (i, e))?;
        }
        Ok(())
    }
}

/// Append-only writer for one session log.
///
/// The meta line is written on construction. Every append is written and
/// flushed before it is acknowledged. A single writer owns a session; callers
/// serialize concurrent producers.
#[derive(Debug)]
pub struct LogWriter<W: Write> {
    out: W,
    clock: StreamClock,
    closed: bool,
    records: usize,
}

impl<W: Write> LogWriter<W> {
    pub fn create(mut out: W, meta: &Meta) -> Result<Self, LogError> {
        let mut line = meta_line(meta)?;
        line.push('\n');
        out.write_all(line.as_bytes())?;
        out.flush()?;
        Ok(LogWriter { out, clock: StreamClock::default(), closed: false, records: 0 })
    }

    /// Resume appending to an existing log whose records have already been written.
    pub fn resume<'a>(out: W, existing: impl IntoIterator<Item = &'a Record>) -> Result<Self, LogError> {
        let mut clock = StreamClock::default();
        let mut records = 0;
        for r in existing {
            clock.admit(r)?;
            records += 1;
        }
        Ok(LogWriter { out, clock, closed: false, records })
    }

    pub fn append(&mut self, record: &Record) -> Result<(), LogError> {
        if self.closed {
            return Err(LogError::ClosedLog);
        }
        self.clock.check(record)?;
        let mut line = record.to_line()?;
        line.push('\n');
        self.out.write_all(line.as_bytes())?;
        self.out.flush()?;
        self.clock.admit(record)?;
        self.records += 1;
        Ok(())
    }

    /// Append a batch atomically with respect to ordering: nothing is written
    /// unless every record passes, and the error carries the offending index.
    pub fn append_batch(&mut self, records: &[Record]) -> Result<(), (usize, LogError)> {
        if self.closed {
            return Err((0, LogError::ClosedLog));
        }
        self.clock.check_batch(records)?;
        for (i, r) in records.iter().enumerate() {
            self.append(r).map_err(|e| (i, e))?;
        }
        Ok(())
    }

    pub fn clock(&self) -> &StreamClock {
        &self.clock
    }

    pub fn records_written(&self) -> usize {
        self.records
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn finalize(&mut self) -> Result<(), LogError> {
        if self.closed {
            return Err(LogError::ClosedLog);
        }
        self.out.flush()?;
        self.closed = true;
        Ok(())
    }

    pub fn get_ref(&self) -> &W {
        &self.out
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
