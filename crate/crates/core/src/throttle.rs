//! Bandwidth pacing for desk-scale stand-ins of slow storage.
//!
//! There is no real parallel file system at desk scale, so a directory plus
//! a paced copy stream substitutes for one: every read or write through the
//! harness sleeps enough to hold the configured bytes-per-second rate.

use std::io::{Read, Write};
use std::time::{Duration, Instant};

const CHUNK: usize = 256 * 1024;

/// Paces a byte stream to a fixed rate. `None` rate means unthrottled.
#[derive(Debug, Clone, Copy)]
pub struct Pacer {
    rate: Option<u64>,
    started: Option<Instant>,
    consumed: u64,
}

impl Pacer {
    pub fn new(bytes_per_sec: Option<u64>) -> Pacer {
        Pacer {
            rate: bytes_per_sec.filter(|r| *r > 0),
            started: None,
            consumed: 0,
        }
    }

    /// Accounts `bytes` and sleeps whatever keeps the stream at the rate.
    pub fn consume(&mut self, bytes: u64) {
        let Some(rate) = self.rate else { return };
        let started = *self.started.get_or_insert_with(Instant::now);
        self.consumed += bytes;
        let due = Duration::from_secs_f64(self.consumed as f64 / rate as f64);
        let elapsed = started.elapsed();
        if due > elapsed {
            std::thread::sleep(due - elapsed);
        }
    }
}

/// Copies `reader` into `writer` at the paced rate, returning bytes moved.
pub fn copy_paced<R: Read, W: Write>(
    reader: &mut R,
    writer: &mut W,
    pacer: &mut Pacer,
) -> std::io::Result<u64> {
    let mut buf = vec![0u8; CHUNK];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        writer.write_all(&buf[..n])?;
        pacer.consume(n as u64);
        total += n as u64;
    }
    Ok(total)
}

/// Writes a whole buffer at the paced rate.
pub fn write_paced<W: Write>(writer: &mut W, data: &[u8], pacer: &mut Pacer) -> std::io::Result<()> {
    for chunk in data.chunks(CHUNK) {
        writer.write_all(chunk)?;
        pacer.consume(chunk.len() as u64);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unthrottled_pacer_never_sleeps() {
        let mut p = Pacer::new(None);
        let start = Instant::now();
        p.consume(1 << 30);
        assert!(start.elapsed() < Duration::from_millis(50));
    }

    #[test]
    fn paced_write_takes_roughly_bytes_over_rate() {
        // 1 MiB at 4 MiB/s should take about 250 ms.
        let mut p = Pacer::new(Some(4 << 20));
        let data = vec![7u8; 1 << 20];
        let mut sink = Vec::new();
        let start = Instant::now();
        write_paced(&mut sink, &data, &mut p).unwrap();
        let elapsed = start.elapsed();
        assert!(elapsed >= Duration::from_millis(200), "{elapsed:?}");
        assert!(elapsed < Duration::from_millis(800), "{elapsed:?}");
        assert_eq!(sink.len(), data.len());
    }

    #[test]
    fn copy_paced_preserves_bytes() {
        let data: Vec<u8> = (0..100_000u32).map(|i| (i % 251) as u8).collect();
        let mut out = Vec::new();
        let n = copy_paced(&mut &data[..], &mut out, &mut Pacer::new(None)).unwrap();
        assert_eq!(n, data.len() as u64);
        assert_eq!(out, data);
    }
}
