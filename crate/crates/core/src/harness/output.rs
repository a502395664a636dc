use std::io::Write;
use std::path::Path;

use super::experiment::{sort_records, SerRecord};
use crate::error::Result;

pub const CSV_HEADER: &str = "method,snr_db,errors,symbols,ser,ci95,seed,config_digest";

/// Writes records sorted by method, then SNR. An empty set yields the header
/// alone.
pub fn write_csv_to<W: Write>(records: &[SerRecord], mut w: W) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    writeln!(w, "{CSV_HEADER}")?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in &sorted {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv(records: &[SerRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(records, std::io::BufWriter::new(file))
}

pub fn read_csv(path: &Path) -> Result<Vec<SerRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
