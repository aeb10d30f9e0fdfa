//! Assembly of the weekly state panel from daily public sources.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;

use super::panel::PanelDataset;
use super::states::unit_code;
use crate::error::{Error, Result};

/// Calendar year whose ISO weeks index the panel.
pub const PANEL_YEAR: i32 = 2020;

/// Daily series per unit.
pub type DailySeries = BTreeMap<String, BTreeMap<NaiveDate, f64>>;

/// Weekly index columns per unit, keyed by ISO week.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, BTreeMap<i64, Vec<f64>>>,
}

/// Raw inputs, already parsed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeeklyInputs {
    /// Cumulative confirmed cases.
    pub cases: DailySeries,
    /// Stringency index.
    pub stringency: DailySeries,
    pub population: BTreeMap<String, f64>,
    pub indices: IndexTable,
}

/// ISO week of `date` within [`PANEL_YEAR`], if it belongs to that ISO year.
pub fn panel_week(date: NaiveDate) -> Option<i64> {
    let iw = date.iso_week();
    (iw.year() == PANEL_YEAR).then_some(iw.week() as i64)
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%y"))
        .ok()
}

/// JHU-CSSE `time_series_covid19_confirmed_US.csv`: county rows with one
/// cumulative column per day, summed to states.
pub fn parse_jhu_confirmed<R: Read>(reader: R) -> Result<DailySeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let state_col = header
        .iter()
        .position(|h| h == "Province_State")
        .ok_or_else(|| Error::parse("JHU confirmed file", "no Province_State column"))?;
    let date_cols: Vec<(usize, NaiveDate)> =
        header.iter().enumerate().filter_map(|(i, h)| parse_date(h).map(|d| (i, d))).collect();
    if date_cols.is_empty() {
        return Err(Error::parse("JHU confirmed file", "no date columns"));
    }
    let mut out = DailySeries::new();
    for rec in rdr.records() {
        let rec = rec?;
        let unit = unit_code(rec.get(state_col).unwrap_or(""));
        let series = out.entry(unit.clone()).or_default();
        for &(i, date) in &date_cols {
            let cell = rec.get(i).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|e| Error::parse(format!("JHU cases for {unit} on {date}"), e))?;
            *series.entry(date).or_insert(0.0) += v;
        }
    }
    Ok(out)
}

/// OxCGRT US file: one row per region and day, `RegionCode` like `US_NY`,
/// `Date` as `YYYYMMDD`, and a stringency column.
pub fn parse_oxcgrt<R: Read>(reader: R) -> Result<DailySeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |names: &[&str]| names.iter().find_map(|n| header.iter().position(|h| h == *n));
    let region = find(&["RegionCode"]).ok_or_else(|| Error::parse("OxCGRT file", "no RegionCode column"))?;
    let date = find(&["Date"]).ok_or_else(|| Error::parse("OxCGRT file", "no Date column"))?;
    let si = find(&["StringencyIndex", "StringencyIndex_Average", "StringencyIndex_Average_ForDisplay"])
        .ok_or_else(|| Error::parse("OxCGRT file", "no stringency column"))?;
    let jurisdiction = find(&["Jurisdiction"]);
    let mut out = DailySeries::new();
    for rec in rdr.records() {
        let rec = rec?;
        let code = rec.get(region).unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        if let Some(j) = jurisdiction {
            if rec.get(j).is_some_and(|v| !v.is_empty() && v != "STATE_TOTAL" && v != "STATE_WIDE") {
                continue;
            }
        }
        let cell = rec.get(si).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let unit = unit_code(code);
        let day = parse_date(rec.get(date).unwrap_or(""))
            .ok_or_else(|| Error::parse(format!("OxCGRT date for {unit}"), rec.get(date).unwrap_or("")))?;
        let v: f64 = cell.parse().map_err(|e| Error::parse(format!("OxCGRT stringency for {unit} on {day}"), e))?;
        out.entry(unit).or_default().insert(day, v);
    }
    Ok(out)
}

/// Population table with header `unit,population`.
pub fn parse_population<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 || header[0] != "unit" || header[1] != "population" {
        return Err(Error::parse("population table", "header must be unit,population"));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let unit = unit_code(rec.get(0).unwrap_or(""));
        let v: f64 = rec
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("population of {unit}"), e))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::validation(format!("population of {unit} must be positive, got {v}")));
        }
        out.insert(unit, v);
    }
    Ok(out)
}

/// Index file `unit,week,<columns...>` or `unit,date,<columns...>`; daily
/// rows are averaged within ISO weeks of [`PANEL_YEAR`].
pub fn parse_indices<R: Read>(reader: R) -> Result<IndexTable> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 3 || header[0] != "unit" || !(header[1] == "week" || header[1] == "date") {
        return Err(Error::parse("index file", "header must start with unit,week or unit,date"));
    }
    let daily = header[1] == "date";
    let columns = header[2..].to_vec();
    let mut sums: BTreeMap<String, BTreeMap<i64, (Vec<f64>, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let unit = unit_code(rec.get(0).unwrap_or(""));
        let key = rec.get(1).unwrap_or("").trim();
        let week = if daily {
            let day = parse_date(key).ok_or_else(|| Error::parse(format!("index date for {unit}"), key))?;
            match panel_week(day) {
                Some(w) => w,
                None => continue,
            }
        } else {
            key.parse().map_err(|e| Error::parse(format!("index week for {unit}"), e))?
        };
        let mut values = Vec::with_capacity(columns.len());
        for (k, name) in columns.iter().enumerate() {
            let cell = rec.get(k + 2).unwrap_or("").trim();
            let v: f64 = if cell.is_empty() {
                return Err(Error::validation(format!("missing {name} for unit {unit}, {} {key}", header[1])));
            } else {
                cell.parse().map_err(|e| Error::parse(format!("{name} for unit {unit}"), e))?
            };
            values.push(v);
        }
        let slot = sums.entry(unit.clone()).or_default().entry(week).or_insert((vec![0.0; columns.len()], 0));
        if !daily && slot.1 > 0 {
            return Err(Error::validation(format!("duplicate index row for unit {unit}, week {week}")));
        }
        for (s, v) in slot.0.iter_mut().zip(values) {
            *s += v;
        }
        slot.1 += 1;
    }
    let rows = sums
        .into_iter()
        .map(|(unit, weeks)| {
            let weeks = weeks.into_iter().map(|(w, (s, n))| (w, s.into_iter().map(|v| v / n as f64).collect())).collect();
            (unit, weeks)
        })
        .collect();
    Ok(IndexTable { columns, rows })
}

fn join_error(unit: &str, what: &str) -> Error {
    Error::Join(format!("unit {unit} is in the index file but missing from the {what}"))
}

/// Weekly panel over the units and weeks of the index file.
///
/// `case_rate(w)` is the growth of cumulative cases from the end of week
/// `w − 1` to the end of week `w` per 100,000 residents. Cumulative totals
/// are carried forward over days without a report and are zero before the
/// first report. Negative differences are clamped to zero and logged. `si`
/// is the mean of the daily stringency values within the week.
pub fn build_weekly_panel(inputs: &WeeklyInputs) -> Result<PanelDataset> {
    let units: Vec<String> = inputs.indices.rows.keys().cloned().collect();
    if units.is_empty() {
        return Err(Error::Empty("index file".into()));
    }
    let weeks: Vec<i64> = inputs.indices.rows[&units[0]].keys().copied().collect();
    for unit in &units {
        let w: Vec<i64> = inputs.indices.rows[unit].keys().copied().collect();
        if w != weeks {
            return Err(Error::validation(format!("unit {unit} covers different weeks than unit {}", units[0])));
        }
        if !inputs.cases.contains_key(unit) {
            return Err(join_error(unit, "case counts"));
        }
        if !inputs.stringency.contains_key(unit) {
            return Err(join_error(unit, "stringency data"));
        }
        if !inputs.population.contains_key(unit) {
            return Err(join_error(unit, "population table"));
        }
    }
    if let Some(pair) = weeks.windows(2).find(|p| p[1] != p[0] + 1) {
        return Err(Error::validation(format!(
            "index weeks are not contiguous, gap between week {} and week {}",
            pair[0], pair[1]
        )));
    }
    let first_week = weeks[0];
    let t = weeks.len();
    let mut predictor_names = vec!["si".to_string()];
    predictor_names.extend(inputs.indices.columns.iter().cloned());
    let d = predictor_names.len();

    let mut y = DMatrix::zeros(t, units.len());
    let mut xs = Vec::with_capacity(units.len());
    for (j, unit) in units.iter().enumerate() {
        let cum = weekly_cumulative(&inputs.cases[unit]);
        let si = weekly_mean(&inputs.stringency[unit]);
        let pop = inputs.population[unit];
        let mut x = DMatrix::zeros(t, d);
        for (r, &w) in weeks.iter().enumerate() {
            let now = cumulative_at(&cum, w);
            let before = cumulative_at(&cum, w - 1);
            let mut new_cases = now - before;
            if new_cases < 0.0 {
                log::warn!("unit {unit}, week {w}: cumulative cases fell by {}; clamped to 0", -new_cases);
                new_cases = 0.0;
            }
            y[(r, j)] = new_cases / pop * 1e5;
            x[(r, 0)] = *si
                .get(&w)
                .ok_or_else(|| Error::validation(format!("missing si for unit {unit}, week {w}")))?;
            for (k, v) in inputs.indices.rows[unit][&w].iter().enumerate() {
                x[(r, k + 1)] = *v;
            }
        }
        xs.push(x);
    }
    PanelDataset::new(units, first_week, predictor_names, y, xs)
}

/// Last reported cumulative value in each panel week.
fn weekly_cumulative(daily: &BTreeMap<NaiveDate, f64>) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (day, v) in daily {
        let iw = day.iso_week();
        let key = match iw.year().cmp(&PANEL_YEAR) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => iw.week() as i64,
            std::cmp::Ordering::Greater => continue,
        };
        out.insert(key, *v);
    }
    out
}

fn cumulative_at(weekly: &BTreeMap<i64, f64>, week: i64) -> f64 {
    weekly.range(..=week).next_back().map_or(0.0, |(_, v)| *v)
}

fn weekly_mean(daily: &BTreeMap<NaiveDate, f64>) -> BTreeMap<i64, f64> {
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (day, v) in daily {
        if let Some(w) = panel_week(*day) {
            let e = acc.entry(w).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(w, (s, n))| (w, s / n as f64)).collect()
}
