//! CSV serialization of metric reports. Undefined values are empty cells;
//! numbers use the shortest representation that parses back to the same f64.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::design::Region;
use crate::error::{BsmError, Result};
use crate::metrics::{DirectionMetric, DirectionRow, FrequencyRow, MetricsReport};

pub const FREQUENCY_HEADER: [&str; 9] = [
    "f_hz",
    "eps_ls_l",
    "eps_ls_r",
    "eps_magls_l",
    "eps_magls_r",
    "eps_mix_l",
    "eps_mix_r",
    "xi_null_l",
    "xi_null_r",
];

pub const DIRECTION_HEADER: [&str; 7] = ["az_deg", "el_deg", "metric", "ref", "rep", "abs_err", "region_tag"];

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn parse_cell(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| BsmError::Malformed(format!("not a number: {s:?}")))
}

fn parse_required(s: &str) -> Result<f64> {
    parse_cell(s)?.ok_or_else(|| BsmError::Malformed("empty required cell".into()))
}

pub fn write_frequency_csv<W: Write>(w: W, rows: &[FrequencyRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FREQUENCY_HEADER)?;
    for r in rows {
        let mut rec = vec![r.f_hz.to_string()];
        for pair in [r.eps_ls, r.eps_magls, r.eps_mix, r.xi_null] {
            rec.push(cell(pair[0]));
            rec.push(cell(pair[1]));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_direction_csv<W: Write>(w: W, rows: &[DirectionRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DIRECTION_HEADER)?;
    for r in rows {
        out.write_record([
            r.az_deg.to_string(),
            r.el_deg.to_string(),
            r.metric.tag().to_string(),
            r.reference.to_string(),
            r.reproduced.to_string(),
            r.abs_err.to_string(),
            r.region.tag().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers()?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(BsmError::Malformed(format!("unexpected CSV header {h:?}")));
    }
    Ok(())
}

pub fn read_frequency_csv<R: Read>(r: R) -> Result<Vec<FrequencyRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &FREQUENCY_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let c = |i: usize| parse_cell(&rec[i]);
            Ok(FrequencyRow {
                f_hz: parse_required(&rec[0])?,
                eps_ls: [c(1)?, c(2)?],
                eps_magls: [c(3)?, c(4)?],
                eps_mix: [c(5)?, c(6)?],
                xi_null: [c(7)?, c(8)?],
            })
        })
        .collect()
}

pub fn read_direction_csv<R: Read>(r: R) -> Result<Vec<DirectionRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &DIRECTION_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(DirectionRow {
                az_deg: parse_required(&rec[0])?,
                el_deg: parse_required(&rec[1])?,
                metric: DirectionMetric::from_tag(&rec[2])
                    .ok_or_else(|| BsmError::Malformed(format!("metric {:?}", &rec[2])))?,
                reference: parse_required(&rec[3])?,
                reproduced: parse_required(&rec[4])?,
                abs_err: parse_required(&rec[5])?,
                region: rec[6].parse::<Region>()?,
            })
        })
        .collect()
}

/// Paths of the frequency and direction files for an output prefix.
pub fn report_paths(prefix: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let p = prefix.as_ref().as_os_str().to_owned();
    let mut f = p.clone();
    f.push("_freq.csv");
    let mut d = p;
    d.push("_dir.csv");
    (PathBuf::from(f), PathBuf::from(d))
}

/// Writes `{prefix}_freq.csv` and `{prefix}_dir.csv`.
pub fn export_report_csv(report: &MetricsReport, prefix: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let (fp, dp) = report_paths(prefix);
    write_frequency_csv(std::fs::File::create(&fp)?, &report.frequency)?;
    write_direction_csv(std::fs::File::create(&dp)?, &report.directions)?;
    Ok((fp, dp))
}

pub fn import_report_csv(prefix: impl AsRef<Path>) -> Result<MetricsReport> {
    let (fp, dp) = report_paths(prefix);
    Ok(MetricsReport {
        frequency: read_frequency_csv(std::fs::File::open(fp)?)?,
        directions: read_direction_csv(std::fs::File::open(dp)?)?,
        provenance: Default::default(),
    })
}
