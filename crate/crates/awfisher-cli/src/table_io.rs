//! Binary persistence for null tables.
//!
//! Layout: a 32-byte header — magic `AWNULL01`, then k, draws and seed as
//! little-endian u64 — followed by the ascending-sorted statistics as
//! little-endian f64. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use awfisher_core::{nulldist, rng, NullTable};
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 8] = *b"AWNULL01";

pub fn write_table(table: &NullTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&(table.k() as u64).to_le_bytes())?;
    w.write_all(&table.draws().to_le_bytes())?;
    w.write_all(&table.seed().to_le_bytes())?;
    for &s in table.samples() {
        w.write_all(&s.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<NullTable> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    r.read_exact(&mut header)
        .map_err(|_| bad_table(path, "file too short for header"))?;
    if header[..8] != MAGIC {
        return Err(bad_table(path, "bad magic; not a null-table file"));
    }
    let k = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let draws = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let seed = u64::from_le_bytes(header[24..32].try_into().unwrap());

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() as u64 != draws * 8 {
        return Err(bad_table(
            path,
            &format!(
                "expected {} sample bytes for {draws} draws, found {}",
                draws * 8,
                payload.len()
            ),
        ));
    }
    let samples: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    NullTable::from_sorted_samples(k as usize, seed, samples)
        .map_err(|e| bad_table(path, &e.to_string()))
}

fn bad_table(path: &Path, what: &str) -> CliError {
    CliError::Data(format!("{}: {what}", path.display()))
}

/// Builds a table with draw chunks fanned out over the current rayon pool.
/// Identical to [`NullTable::build`] for any worker count.
pub fn parallel_build(k: usize, draws: u64, seed: u64) -> Result<NullTable> {
    if k == 0 {
        return Err(CliError::Usage("number of studies must be at least 1".into()));
    }
    if draws == 0 {
        return Err(CliError::Usage("number of draws must be at least 1".into()));
    }
    let chunks: Vec<Vec<f64>> = (0..rng::chunk_count(draws))
        .into_par_iter()
        .map(|chunk| {
            let mut out = Vec::with_capacity(rng::chunk_len(draws, chunk));
            nulldist::statistic_chunk(k, draws, seed, chunk, &mut out);
            out
        })
        .collect();
    let mut samples: Vec<f64> = chunks.into_iter().flatten().collect();
    samples.sort_unstable_by(f64::total_cmp);
    Ok(NullTable::from_sorted_samples(k, seed, samples)?)
}

/// Plain-text summary used by `null inspect`.
pub fn inspect_text(table: &NullTable) -> String {
    let samples = table.samples();
    let quantile = |q: f64| samples[((samples.len() - 1) as f64 * q).floor() as usize];
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut out = String::new();
    out.push_str(&format!("k: {}\n", table.k()));
    out.push_str(&format!("draws: {}\n", table.draws()));
    out.push_str(&format!("seed: {}\n", table.seed()));
    out.push_str(&format!("min: {}\n", samples[0]));
    out.push_str(&format!("p50: {}\n", quantile(0.50)));
    out.push_str(&format!("p90: {}\n", quantile(0.90)));
    out.push_str(&format!("p99: {}\n", quantile(0.99)));
    out.push_str(&format!("p999: {}\n", quantile(0.999)));
    out.push_str(&format!("max: {}\n", table.max_sample()));
    out.push_str(&format!("mean: {mean}\n"));
    out
}
