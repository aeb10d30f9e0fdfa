//! Long-format panel CSV: `unit,week,case_rate,<predictor columns...>`, one
//! row per `(unit, week)`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::panel::{check_value, PanelDataset};
use crate::error::{Error, Result};

const KEY_COLUMNS: [&str; 3] = ["unit", "week", "case_rate"];

pub fn load_panel_csv(path: impl AsRef<Path>) -> Result<PanelDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_panel_csv(file)
}

pub fn read_panel_csv<R: Read>(reader: R) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[..3] != KEY_COLUMNS {
        return Err(Error::validation(format!(
            "panel header must start with unit,week,case_rate; got {}",
            header.join(",")
        )));
    }
    let predictor_names = header[3..].to_vec();
    let d = predictor_names.len();

    let mut rows: BTreeMap<String, BTreeMap<i64, (f64, Vec<f64>)>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let unit = rec.get(0).unwrap_or("").to_string();
        if unit.is_empty() {
            return Err(Error::validation(format!("missing unit on data row {}", line + 1)));
        }
        let week: i64 = rec
            .get(1)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::validation(format!("missing week for unit {unit} on data row {}", line + 1)))?
            .parse()
            .map_err(|e| Error::parse(format!("week for unit {unit} on data row {}", line + 1), e))?;
        let cell = |idx: usize| -> Result<f64> {
            let name = &header[idx];
            match rec.get(idx).filter(|s| !s.is_empty()) {
                None => Err(Error::validation(format!("missing {name} for unit {unit}, week {week}"))),
                Some(s) => s.parse::<f64>().map_err(|e| Error::parse(format!("{name} for unit {unit}, week {week}"), e)),
            }
        };
        let y = cell(2)?;
        if !y.is_finite() {
            return Err(Error::validation(format!("missing case_rate for unit {unit}, week {week}")));
        }
        let mut x = Vec::with_capacity(d);
        for k in 0..d {
            let v = cell(3 + k)?;
            check_value(&predictor_names[k], v, &unit, week)?;
            x.push(v);
        }
        if rows.entry(unit.clone()).or_default().insert(week, (y, x)).is_some() {
            return Err(Error::validation(format!("duplicate row for unit {unit}, week {week}")));
        }
    }
    if rows.is_empty() {
        return Err(Error::validation("panel file has no data rows"));
    }

    let mut week_range: Option<(i64, i64)> = None;
    for (unit, weeks) in &rows {
        let first = *weeks.keys().next().expect("non-empty");
        let last = *weeks.keys().next_back().expect("non-empty");
        let mut prev = first;
        for &w in weeks.keys().skip(1) {
            if w != prev + 1 {
                return Err(Error::validation(format!(
                    "unit {unit}: weeks are not contiguous, gap between week {prev} and week {w}"
                )));
            }
            prev = w;
        }
        match week_range {
            None => week_range = Some((first, last)),
            Some(r) if r != (first, last) => {
                return Err(Error::validation(format!(
                    "unit {unit} covers weeks {first}..{last}, other units cover {}..{}",
                    r.0, r.1
                )))
            }
            _ => {}
        }
    }
    let (first_week, last_week) = week_range.expect("non-empty");
    let t = (last_week - first_week + 1) as usize;
    let units: Vec<String> = rows.keys().cloned().collect();
    let mut y = DMatrix::zeros(t, units.len());
    let mut xs = Vec::with_capacity(units.len());
    for (j, unit) in units.iter().enumerate() {
        let mut x = DMatrix::zeros(t, d);
        for (row, (_, (yv, xv))) in rows[unit].iter().enumerate() {
            y[(row, j)] = *yv;
            for k in 0..d {
                x[(row, k)] = xv[k];
            }
        }
        xs.push(x);
    }
    PanelDataset::new(units, first_week, predictor_names, y, xs)
}

pub fn write_panel_csv<W: Write>(panel: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(panel.predictor_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for (j, unit) in panel.units.iter().enumerate() {
        for t in 0..panel.num_weeks() {
            let mut rec = vec![unit.clone(), (panel.first_week + t as i64).to_string(), panel.y[(t, j)].to_string()];
            rec.extend(panel.x[j].row(t).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_panel_csv(panel: &PanelDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_panel_csv(panel, std::io::BufWriter::new(file))
}
