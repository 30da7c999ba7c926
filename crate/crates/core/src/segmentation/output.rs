//! Crown output files: a summary CSV, and JSON lines with member points for
//! passing complete crowns between processes.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::CrownRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrownRow {
    pub id: usize,
    pub apex_x: f64,
    pub apex_y: f64,
    pub apex_z: f64,
    pub height: f64,
    pub crown_radius: f64,
    pub points: usize,
}

pub fn write_crowns_csv<W: Write>(crowns: &[CrownRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, c) in crowns.iter().enumerate() {
        w.serialize(CrownRow {
            id,
            apex_x: c.apex.x,
            apex_y: c.apex.y,
            apex_z: c.apex.z,
            height: c.height,
            crown_radius: c.crown_radius,
            points: c.points.len(),
        })?;
    }
    if crowns.is_empty() {
        w.write_record(["id", "apex_x", "apex_y", "apex_z", "height", "crown_radius", "points"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_crowns_csv<R: std::io::Read>(input: R) -> Result<Vec<CrownRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_records_jsonl<W: Write>(crowns: &[CrownRecord], mut out: W) -> Result<()> {
    for c in crowns {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_jsonl<R: BufRead>(input: R) -> Result<Vec<CrownRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
