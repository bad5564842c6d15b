//! Parsing, validation and descriptive statistics of station-level results.
//!
//! Input files are delimiter-separated text with a header row; the column
//! names are mapped through [`FormatConfig`] so any export of official data
//! can be adapted without code changes.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{Read, Write};

/// Four-level region hierarchy: province / district / village / station.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionKey {
    pub province: String,
    pub district: String,
    pub village: String,
    pub station_id: String,
}

impl RegionKey {
    /// District identity; station neighborhoods are formed within this key.
    pub fn district_key(&self) -> (&str, &str) {
        (&self.province, &self.district)
    }

    pub fn village_key(&self) -> (&str, &str, &str) {
        (&self.province, &self.district, &self.village)
    }
}

impl std::fmt::Display for RegionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.province, self.district, self.village, self.station_id
        )
    }
}

/// One polling station: electorate `N`, valid votes `T`, 'Yes' votes `V`.
///
/// The derived rates are exposed as methods so they are always the exact
/// binary-floating-point rendering of the integer ratios. `vote_share` is
/// undefined for stations without valid votes; such records are kept and
/// flagged by callers rather than dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationRecord {
    pub region: RegionKey,
    pub eligible: u64,
    pub valid: u64,
    pub yes: u64,
}

impl StationRecord {
    pub fn new(region: RegionKey, eligible: u64, valid: u64, yes: u64) -> Result<Self> {
        if yes > valid || valid > eligible {
            return Err(Error::Validation {
                station: region.to_string(),
                message: format!(
                    "counts violate 0 <= V <= T <= N (N={eligible}, T={valid}, V={yes})"
                ),
            });
        }
        Ok(Self {
            region,
            eligible,
            valid,
            yes,
        })
    }

    /// Relative turnout t = T/N; undefined for an empty electorate.
    pub fn rel_turnout(&self) -> Option<f64> {
        (self.eligible > 0).then(|| self.valid as f64 / self.eligible as f64)
    }

    /// Vote share v = V/T; undefined when no valid votes were cast.
    pub fn vote_share(&self) -> Option<f64> {
        (self.valid > 0).then(|| self.yes as f64 / self.valid as f64)
    }

    /// Both rates defined: the station participates in rate statistics.
    pub fn rates(&self) -> Option<(f64, f64)> {
        Some((self.vote_share()?, self.rel_turnout()?))
    }
}

/// Column-name mapping for the input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub province: String,
    pub district: String,
    pub village: String,
    pub station: String,
    pub eligible: String,
    pub valid: String,
    pub yes: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            province: "province".into(),
            district: "district".into(),
            village: "village".into(),
            station: "station".into(),
            eligible: "eligible".into(),
            valid: "valid".into(),
            yes: "yes".into(),
        }
    }
}

/// Delimiter plus column mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatConfig {
    pub delimiter: char,
    pub columns: ColumnMap,
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self {
            delimiter: ';',
            columns: ColumnMap::default(),
        }
    }
}

/// Parse a delimiter-separated result file into validated station records.
///
/// Row order is preserved. Errors identify the offending data row (1-based,
/// header excluded).
pub fn parse_results<R: Read>(source: R, format: &FormatConfig) -> Result<Vec<StationRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing column `{name}` in header")))
    };
    let c = &format.columns;
    let idx = [
        col(&c.province)?,
        col(&c.district)?,
        col(&c.village)?,
        col(&c.station)?,
        col(&c.eligible)?,
        col(&c.valid)?,
        col(&c.yes)?,
    ];
    let width = headers.len();

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.len() != width {
            return Err(Error::Parse {
                row: row_no,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let field = |j: usize| row.get(idx[j]).unwrap_or("").trim();
        let count = |j: usize, name: &str| -> Result<u64> {
            field(j).parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("non-numeric {name} `{}`", field(j)),
            })
        };
        let region = RegionKey {
            province: field(0).to_string(),
            district: field(1).to_string(),
            village: field(2).to_string(),
            station_id: field(3).to_string(),
        };
        if !seen.insert(region.clone()) {
            return Err(Error::DuplicateKey {
                station: region.to_string(),
            });
        }
        let record = StationRecord::new(region, count(4, "electorate")?, count(5, "valid votes")?, count(6, "'Yes' votes")?)?;
        records.push(record);
    }
    Ok(records)
}

/// Serialize records back to the declared format (round-trip safe).
pub fn write_results<W: Write>(
    records: &[StationRecord],
    sink: W,
    format: &FormatConfig,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter as u8)
        .from_writer(sink);
    let c = &format.columns;
    writer.write_record([
        &c.province, &c.district, &c.village, &c.station, &c.eligible, &c.valid, &c.yes,
    ])?;
    for r in records {
        writer.write_record([
            r.region.province.as_str(),
            r.region.district.as_str(),
            r.region.village.as_str(),
            r.region.station_id.as_str(),
            &r.eligible.to_string(),
            &r.valid.to_string(),
            &r.yes.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// What the electorate-size filter removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionSummary {
    pub min_electorate: u64,
    pub excluded_stations: usize,
    /// Share of total valid votes cast at excluded stations.
    pub excluded_vote_fraction: f64,
}

/// Drop stations below the electorate threshold.
pub fn filter_stations(
    records: Vec<StationRecord>,
    min_electorate: u64,
) -> (Vec<StationRecord>, ExclusionSummary) {
    let total_votes: u64 = records.iter().map(|r| r.valid).sum();
    let (retained, excluded): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| r.eligible >= min_electorate);
    let excluded_votes: u64 = excluded.iter().map(|r| r.valid).sum();
    let summary = ExclusionSummary {
        min_electorate,
        excluded_stations: excluded.len(),
        excluded_vote_fraction: if total_votes == 0 {
            0.0
        } else {
            excluded_votes as f64 / total_votes as f64
        },
    };
    (retained, summary)
}

/// Mean and population standard deviation of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std_dev: f64,
    /// Number of records the statistic is computed over.
    pub count: usize,
}

pub(crate) fn population_moments(values: impl Iterator<Item = f64>) -> Moments {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for x in values {
        n += 1;
        sum += x;
        sum_sq += x * x;
    }
    if n == 0 {
        return Moments {
            mean: f64::NAN,
            std_dev: f64::NAN,
            count: 0,
        };
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Moments {
        mean,
        std_dev: var.sqrt(),
        count: n,
    }
}

/// Descriptive statistics of a record list.
///
/// Rate statistics skip stations where the rate is undefined; the skipped
/// counts are reported alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub station_count: usize,
    pub village_count: usize,
    pub district_count: usize,
    pub province_count: usize,
    pub eligible: Moments,
    pub valid: Moments,
    pub yes: Moments,
    pub rel_turnout: Moments,
    pub vote_share: Moments,
    pub undefined_turnout_count: usize,
    pub undefined_share_count: usize,
}

pub fn summarize(records: &[StationRecord]) -> Result<DatasetSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("summarize requires records".into()));
    }
    let mut provinces = HashSet::new();
    let mut districts = HashSet::new();
    let mut villages = HashSet::new();
    for r in records {
        provinces.insert(r.region.province.as_str());
        districts.insert(r.region.district_key());
        villages.insert(r.region.village_key());
    }
    Ok(DatasetSummary {
        station_count: records.len(),
        village_count: villages.len(),
        district_count: districts.len(),
        province_count: provinces.len(),
        eligible: population_moments(records.iter().map(|r| r.eligible as f64)),
        valid: population_moments(records.iter().map(|r| r.valid as f64)),
        yes: population_moments(records.iter().map(|r| r.yes as f64)),
        rel_turnout: population_moments(records.iter().filter_map(|r| r.rel_turnout())),
        vote_share: population_moments(records.iter().filter_map(|r| r.vote_share())),
        undefined_turnout_count: records.iter().filter(|r| r.eligible == 0).count(),
        undefined_share_count: records.iter().filter(|r| r.valid == 0).count(),
    })
}
