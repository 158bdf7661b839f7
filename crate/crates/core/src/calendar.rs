//! Decimal-year epochs and calendar boundaries.

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

fn days_in_year(year: i32) -> f64 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366.0
    } else {
        365.0
    }
}

/// `year + (day_of_year - 1) / days_in_year`, at 00:00 of `date`.
pub fn decimal_year(date: NaiveDate) -> f64 {
    date.year() as f64 + (date.ordinal0() as f64) / days_in_year(date.year())
}

/// Calendar day containing the decimal-year epoch `t`.
pub fn date_of(t: f64) -> Result<NaiveDate> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("epoch {t} is not finite")));
    }
    let year = t.floor() as i32;
    let day = ((t - year as f64) * days_in_year(year)).floor() as u32;
    NaiveDate::from_yo_opt(year, day + 1)
        .or_else(|| NaiveDate::from_ymd_opt(year, 12, 31))
        .ok_or_else(|| Error::InvalidInput(format!("epoch {t} outside the calendar")))
}

/// First day of every month whose epoch lies in `[lo, hi]`.
pub fn monthly_epochs(lo: f64, hi: f64) -> Result<Vec<f64>> {
    let start = date_of(lo)?;
    let mut year = start.year();
    let mut month = start.month();
    let mut out = Vec::new();
    loop {
        let date = NaiveDate::from_ymd_opt(year, month, 1).expect("valid first of month");
        let t = decimal_year(date);
        if t > hi {
            break;
        }
        if t >= lo {
            out.push(t);
        }
        if month == 12 {
            year += 1;
            month = 1;
        } else {
            month += 1;
        }
    }
    Ok(out)
}

/// January 1 and July 1 boundaries from the half-year containing `lo`
/// through the first boundary strictly after `hi`.
pub fn half_year_boundaries(lo: f64, hi: f64) -> Result<Vec<f64>> {
    let start = date_of(lo)?;
    let mut year = start.year();
    let mut month = if start.month() >= 7 { 7 } else { 1 };
    let mut out = Vec::new();
    loop {
        let t = decimal_year(NaiveDate::from_ymd_opt(year, month, 1).expect("valid date"));
        out.push(t);
        if t > hi {
            break;
        }
        if month == 7 {
            year += 1;
            month = 1;
        } else {
            month = 7;
        }
    }
    Ok(out)
}
