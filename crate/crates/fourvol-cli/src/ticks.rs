//! Tick-data ingestion and emission.
//!
//! The interchange format is CSV with header `asset_id,timestamp,price`;
//! timestamps are decimal seconds (or any consistent unit) from the window
//! start and must be strictly increasing per asset, prices strictly
//! positive (the log is taken on ingest). An optional ingest mode converts
//! RFC 3339 timestamps to seconds from the earliest one.

use std::io::Read;
use std::path::Path;

use fourvol::error::{Result, VolError};
use fourvol::grid::ObservationGrid;
use fourvol::TickSeries;

struct RawAsset {
    id: String,
    times: Vec<f64>,
    log_prices: Vec<f64>,
    last_line: u64,
}

/// Parses tick CSV into one series per asset (assets ordered by first
/// appearance). `window_t` overrides the inferred window length
/// (the largest timestamp).
pub fn parse_ticks<R: Read>(reader: R, window_t: Option<f64>, iso_times: bool) -> Result<Vec<TickSeries>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| VolError::Data(format!("cannot read CSV header: {e}")))?;
        let expected = ["asset_id", "timestamp", "price"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(VolError::Data(format!(
                "expected header `asset_id,timestamp,price`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }

    let mut assets: Vec<RawAsset> = Vec::new();
    let mut epoch: Option<f64> = None;
    for (i, row) in csv_reader.records().enumerate() {
        let line = i as u64 + 2; // header is line 1
        let row = row.map_err(|e| VolError::Data(format!("line {line}: {e}")))?;
        if row.len() != 3 {
            return Err(VolError::Data(format!("line {line}: expected 3 fields, got {}", row.len())));
        }
        let id = row[0].to_string();
        let ts = if iso_times {
            let dt = chrono::DateTime::parse_from_rfc3339(&row[1])
                .map_err(|e| VolError::Data(format!("line {line}: bad RFC 3339 timestamp: {e}")))?;
            let abs = dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 * 1e-9;
            let e = *epoch.get_or_insert(abs);
            abs - e
        } else {
            row[1]
                .parse::<f64>()
                .map_err(|_| VolError::Data(format!("line {line}: bad timestamp `{}`", &row[1])))?
        };
        let price = row[2]
            .parse::<f64>()
            .map_err(|_| VolError::Data(format!("line {line}: bad price `{}`", &row[2])))?;
        if !(price > 0.0) {
            return Err(VolError::Data(format!(
                "line {line}: non-positive price {price} for asset {id}"
            )));
        }
        let asset = match assets.iter_mut().find(|a| a.id == id) {
            Some(a) => a,
            None => {
                assets.push(RawAsset {
                    id: id.clone(),
                    times: Vec::new(),
                    log_prices: Vec::new(),
                    last_line: 0,
                });
                assets.last_mut().unwrap()
            }
        };
        if let Some(&last) = asset.times.last() {
            if ts == last {
                return Err(VolError::Data(format!(
                    "line {line}: duplicate timestamp {ts} for asset {id}"
                )));
            }
            if ts < last {
                return Err(VolError::Data(format!(
                    "line {line}: non-monotone timestamp {ts} for asset {id} (previous {last} at line {})",
                    asset.last_line
                )));
            }
        }
        asset.times.push(ts);
        asset.log_prices.push(price.ln());
        asset.last_line = line;
    }

    if assets.is_empty() {
        return Err(VolError::Data("no tick rows found".into()));
    }
    for a in &assets {
        if a.times.len() < 2 {
            return Err(VolError::Data(format!(
                "asset {} has fewer than two observations",
                a.id
            )));
        }
    }
    let t_window = match window_t {
        Some(t) => t,
        None => assets
            .iter()
            .map(|a| *a.times.last().unwrap())
            .fold(0.0f64, f64::max),
    };
    assets
        .into_iter()
        .map(|a| {
            let grid = ObservationGrid::new(a.times, t_window)?;
            TickSeries::new(a.id, grid, a.log_prices)
        })
        .collect()
}

pub fn parse_ticks_files(paths: &[std::path::PathBuf], window_t: Option<f64>, iso_times: bool) -> Result<Vec<TickSeries>> {
    let mut all = Vec::new();
    for p in paths {
        let file = std::fs::File::open(p)
            .map_err(|e| VolError::Data(format!("cannot open {}: {e}", p.display())))?;
        all.extend(parse_ticks(std::io::BufReader::new(file), window_t, iso_times)?);
    }
    if window_t.is_none() && all.len() > 1 {
        // re-align the inferred window across files
        let t = all
            .iter()
            .map(|ts| *ts.grid.times().last().unwrap())
            .fold(0.0f64, f64::max);
        all = all
            .into_iter()
            .map(|ts| {
                let grid = ObservationGrid::new(ts.grid.times().to_vec(), t)?;
                TickSeries::new(ts.asset_id, grid, ts.log_prices)
            })
            .collect::<Result<_>>()?;
    }
    Ok(all)
}

/// Writes tick series in the interchange format (prices exponentiated).
pub fn write_ticks(path: &Path, ticks: &[TickSeries]) -> Result<()> {
    let mut out = String::from("asset_id,timestamp,price\n");
    for ts in ticks {
        for (t, lp) in ts.grid.times().iter().zip(&ts.log_prices) {
            out.push_str(&format!("{},{},{}\n", ts.asset_id, t, lp.exp()));
        }
    }
    std::fs::write(path, out).map_err(|e| VolError::Data(format!("cannot write {}: {e}", path.display())))
}
