//! Delimited-file loading and writing of firm panels, plus the synthetic
//! panel generator.

mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{DailyRecord, FirmGroup, FirmId, FirmPanel, QuarterlyRecord};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub use synthetic::{generate_synthetic, SyntheticConfig, SEASONAL_PATTERN, TRADING_DAYS_PER_QUARTER};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// A quarterly fundamental column and whether it is divided by total assets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub scale_by_assets: bool,
}

impl FeatureColumn {
    fn new(name: &str, scale_by_assets: bool) -> Self {
        Self {
            name: name.to_string(),
            scale_by_assets,
        }
    }
}

/// Maps file columns onto record fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaConfig {
    pub firm_column: String,
    pub report_date_column: String,
    pub eps_column: String,
    pub total_assets_column: String,
    pub group_column: String,
    pub analyst_column: Option<String>,
    pub quarterly_features: Vec<FeatureColumn>,
    pub daily_firm_column: String,
    pub daily_date_column: String,
    pub daily_features: Vec<String>,
    pub delimiter: char,
    pub missing_token: String,
}

/// Accounting items that are divided by total assets. Together with eps and
/// total assets these make up the 19 quarterly inputs.
pub const SCALED_FUNDAMENTALS: [&str; 17] = [
    "revtq", "nopiq", "xoprq", "apq", "gdwlq", "rectq", "xrdq", "cogsq", "rcpq", "ceqq", "niq",
    "oiadpq", "oibdpq", "dpq", "ppentq", "piq", "txtq",
];

pub const DEFAULT_DAILY_FEATURES: [&str; 11] = [
    "ret", "prc", "vol", "shrout", "vwretd", "aux1", "aux2", "aux3", "aux4", "aux5", "aux6",
];

impl Default for SchemaConfig {
    fn default() -> Self {
        let mut quarterly = vec![
            FeatureColumn::new("epsfiq", false),
            FeatureColumn::new("atq", false),
        ];
        quarterly.extend(SCALED_FUNDAMENTALS.iter().map(|n| FeatureColumn::new(n, true)));
        Self {
            firm_column: "cusip".into(),
            report_date_column: "rdq".into(),
            eps_column: "epsfiq".into(),
            total_assets_column: "atq".into(),
            group_column: "financialfirm".into(),
            analyst_column: Some("EPS_Mean_Analyst".into()),
            quarterly_features: quarterly,
            daily_firm_column: "cusip".into(),
            daily_date_column: "date".into(),
            daily_features: DEFAULT_DAILY_FEATURES.iter().map(|s| s.to_string()).collect(),
            delimiter: ',',
            missing_token: String::new(),
        }
    }
}

impl SchemaConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, name) in [
            ("firm", &self.firm_column),
            ("report date", &self.report_date_column),
            ("eps", &self.eps_column),
            ("total assets", &self.total_assets_column),
            ("group", &self.group_column),
            ("daily firm", &self.daily_firm_column),
            ("daily date", &self.daily_date_column),
        ] {
            if name.trim().is_empty() {
                return Err(Error::Schema(format!("mandatory {what} column is unnamed")));
            }
        }
        if self.quarterly_features.is_empty() || self.daily_features.is_empty() {
            return Err(Error::Schema("feature column lists must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.quarterly_features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate quarterly feature column {:?}",
                    f.name
                )));
            }
        }
        let mut seen = HashSet::new();
        for f in &self.daily_features {
            if !seen.insert(f.as_str()) {
                return Err(Error::Schema(format!("duplicate daily feature column {f:?}")));
            }
        }
        let eps = self.eps_feature_index().ok_or_else(|| {
            Error::Schema(format!(
                "eps column {:?} must be listed among the quarterly features",
                self.eps_column
            ))
        })?;
        if self.quarterly_features[eps].scale_by_assets {
            log::debug!("eps column is scaled by total assets");
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Schema("delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    pub fn eps_feature_index(&self) -> Option<usize> {
        self.quarterly_features
            .iter()
            .position(|f| f.name == self.eps_column)
    }

    pub fn assets_feature_index(&self) -> Option<usize> {
        self.quarterly_features
            .iter()
            .position(|f| f.name == self.total_assets_column)
    }

    pub fn quarterly_feature_count(&self) -> usize {
        self.quarterly_features.len()
    }

    pub fn daily_feature_count(&self) -> usize {
        self.daily_features.len()
    }

    /// Header of the quarterly file: identifiers first, then each distinct column once.
    fn quarterly_header(&self) -> Vec<String> {
        let mut header = vec![
            self.firm_column.clone(),
            self.report_date_column.clone(),
            self.group_column.clone(),
        ];
        if let Some(a) = &self.analyst_column {
            header.push(a.clone());
        }
        for name in [&self.eps_column, &self.total_assets_column]
            .into_iter()
            .chain(self.quarterly_features.iter().map(|f| &f.name))
        {
            if !header.contains(name) {
                header.push(name.clone());
            }
        }
        header
    }

    fn daily_header(&self) -> Vec<String> {
        let mut header = vec![self.daily_firm_column.clone(), self.daily_date_column.clone()];
        header.extend(self.daily_features.iter().cloned());
        header
    }
}

struct Columns<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        Self { path, index }
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| {
            Error::Schema(format!(
                "{}: mandatory column {name:?} not found in header",
                self.path.display()
            ))
        })
    }
}

struct RowCtx<'a> {
    path: &'a Path,
    line: u64,
    record: &'a csv::StringRecord,
    missing: &'a str,
}

impl RowCtx<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }

    fn field(&self, idx: usize) -> Result<&str> {
        self.record
            .get(idx)
            .map(str::trim)
            .ok_or_else(|| self.err(format!("missing field {}", idx + 1)))
    }

    fn number(&self, idx: usize) -> Result<Option<f64>> {
        let raw = self.field(idx)?;
        if raw == self.missing || raw.is_empty() {
            return Ok(None);
        }
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(format!("cannot parse {raw:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite value {raw:?}")));
        }
        Ok(Some(v))
    }

    fn date(&self, idx: usize) -> Result<NaiveDate> {
        let raw = self.field(idx)?;
        NaiveDate::parse_from_str(raw, DATE_FORMAT)
            .map_err(|_| self.err(format!("cannot parse {raw:?} as a YYYY-MM-DD date")))
    }

    fn firm(&self, idx: usize) -> Result<FirmId> {
        FirmId::new(self.field(idx)?).map_err(|_| self.err("empty firm id".into()))
    }
}

fn reader(path: &Path, schema: &SchemaConfig) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn load_quarterly(path: &Path, schema: &SchemaConfig) -> Result<Vec<QuarterlyRecord>> {
    let mut rdr = reader(path, schema)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers);
    let firm = cols.require(&schema.firm_column)?;
    let date = cols.require(&schema.report_date_column)?;
    let eps = cols.require(&schema.eps_column)?;
    let atq = cols.require(&schema.total_assets_column)?;
    let group = cols.require(&schema.group_column)?;
    let analyst = match &schema.analyst_column {
        Some(name) => Some(cols.require(name)?),
        None => None,
    };
    let features = schema
        .quarterly_features
        .iter()
        .map(|f| cols.require(&f.name))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let ctx = RowCtx {
            path,
            line: record.position().map(|p| p.line()).unwrap_or(0),
            record: &record,
            missing: &schema.missing_token,
        };
        let group_raw = ctx.field(group)?;
        let group = FirmGroup::parse(group_raw)
            .ok_or_else(|| ctx.err(format!("unknown group label {group_raw:?}")))?;
        out.push(QuarterlyRecord {
            firm: ctx.firm(firm)?,
            report_date: ctx.date(date)?,
            eps: ctx.number(eps)?,
            total_assets: ctx.number(atq)?,
            features: features
                .iter()
                .map(|&i| ctx.number(i))
                .collect::<Result<_>>()?,
            group,
            analyst_mean_eps: match analyst {
                Some(i) => ctx.number(i)?,
                None => None,
            },
        });
    }
    Ok(out)
}

fn load_daily(path: &Path, schema: &SchemaConfig) -> Result<Vec<DailyRecord>> {
    let mut rdr = reader(path, schema)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers);
    let firm = cols.require(&schema.daily_firm_column)?;
    let date = cols.require(&schema.daily_date_column)?;
    let features = schema
        .daily_features
        .iter()
        .map(|f| cols.require(f))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let ctx = RowCtx {
            path,
            line: record.position().map(|p| p.line()).unwrap_or(0),
            record: &record,
            missing: &schema.missing_token,
        };
        out.push(DailyRecord {
            firm: ctx.firm(firm)?,
            date: ctx.date(date)?,
            features: features
                .iter()
                .map(|&i| ctx.number(i))
                .collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

/// Loads quarterly and daily files into one sorted panel per firm.
pub fn load_panels(
    quarterly_path: &Path,
    daily_path: &Path,
    schema: &SchemaConfig,
) -> Result<Vec<FirmPanel>> {
    schema.validate()?;
    let quarters = load_quarterly(quarterly_path, schema)?;
    let days = load_daily(daily_path, schema)?;

    let mut panels: BTreeMap<FirmId, FirmPanel> = BTreeMap::new();
    fn panel<'m>(panels: &'m mut BTreeMap<FirmId, FirmPanel>, firm: &FirmId) -> &'m mut FirmPanel {
        panels.entry(firm.clone()).or_insert_with(|| FirmPanel {
            firm: firm.clone(),
            quarters: Vec::new(),
            days: Vec::new(),
        })
    }
    for q in quarters {
        panel(&mut panels, &q.firm).quarters.push(q);
    }
    for d in days {
        panel(&mut panels, &d.firm).days.push(d);
    }

    let mut out = Vec::with_capacity(panels.len());
    for (_, mut panel) in panels {
        panel.quarters.sort_by_key(|q| q.report_date);
        panel.days.sort_by_key(|d| d.date);
        if let Some(pair) = panel
            .quarters
            .windows(2)
            .find(|p| p[0].report_date == p[1].report_date)
        {
            return Err(Error::DuplicateRecord {
                firm: panel.firm.to_string(),
                date: pair[0].report_date.to_string(),
            });
        }
        if let Some(pair) = panel.days.windows(2).find(|p| p[0].date == p[1].date) {
            return Err(Error::DuplicateRecord {
                firm: panel.firm.to_string(),
                date: pair[0].date.to_string(),
            });
        }
        out.push(panel);
    }
    Ok(out)
}

fn format_cell(v: Option<f64>, missing: &str) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => missing.to_string(),
    }
}

/// Writes panels in the layout `load_panels` reads back.
pub fn write_panels(
    panels: &[FirmPanel],
    schema: &SchemaConfig,
    quarterly_path: &Path,
    daily_path: &Path,
) -> Result<()> {
    schema.validate()?;
    let delimiter = schema.delimiter as u8;

    let header = schema.quarterly_header();
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(Vec::new());
    w.write_record(&header)
        .map_err(|e| csv_error(quarterly_path, e))?;
    for panel in panels {
        for q in &panel.quarters {
            let row: Vec<String> = header
                .iter()
                .map(|col| quarterly_cell(q, col, schema))
                .collect();
            w.write_record(&row).map_err(|e| csv_error(quarterly_path, e))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(quarterly_path, e.into_error()))?;
    write_atomic(quarterly_path, &bytes)?;

    let header = schema.daily_header();
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(Vec::new());
    w.write_record(&header).map_err(|e| csv_error(daily_path, e))?;
    for panel in panels {
        for d in &panel.days {
            let mut row = Vec::with_capacity(header.len());
            row.push(d.firm.to_string());
            row.push(d.date.format(DATE_FORMAT).to_string());
            row.extend(
                d.features
                    .iter()
                    .map(|v| format_cell(*v, &schema.missing_token)),
            );
            w.write_record(&row).map_err(|e| csv_error(daily_path, e))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(daily_path, e.into_error()))?;
    write_atomic(daily_path, &bytes)
}

fn quarterly_cell(q: &QuarterlyRecord, column: &str, schema: &SchemaConfig) -> String {
    let missing = schema.missing_token.as_str();
    if column == schema.firm_column {
        return q.firm.to_string();
    }
    if column == schema.report_date_column {
        return q.report_date.format(DATE_FORMAT).to_string();
    }
    if column == schema.group_column {
        return q.group.as_str().to_string();
    }
    if schema.analyst_column.as_deref() == Some(column) {
        return format_cell(q.analyst_mean_eps, missing);
    }
    if let Some(i) = schema.quarterly_features.iter().position(|f| f.name == column) {
        return format_cell(q.features[i], missing);
    }
    if column == schema.eps_column {
        return format_cell(q.eps, missing);
    }
    if column == schema.total_assets_column {
        return format_cell(q.total_assets, missing);
    }
    missing.to_string()
}
