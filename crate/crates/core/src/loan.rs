//! Loan-schema conversion and a synthetic loan portfolio.
//!
//! A loan record carries an issue date, the date of the last payment, an
//! optional default date and two covariates, interest rate and
//! debt-to-income ratio (both in percent). [`to_observations`] maps each
//! record to months active and a default indicator at an observation
//! cut-off date; the covariate vector is `[debt_to_income, interest_rate]`.
//!
//! [`synthetic_loans`] produces a stand-in portfolio with interest rates in
//! 6–12%, debt-to-income ratios in 8–20% and three-year default rates rising
//! from about 6% to about 13.5% across that range. It is not real data and
//! only serves to exercise the pipeline.

use std::io::{Read, Write};

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::data::Observation;
use crate::rng::{substream, Domain};

/// Average days per month of the Gregorian calendar.
pub const DAYS_PER_MONTH: f64 = 365.2425 / 12.0;

const TERM_MONTHS: f64 = 36.0;

#[derive(Debug, Error)]
pub enum LoanError {
    #[error("line {line}: cannot parse date `{value}` (expected YYYY-MM-DD)")]
    BadDate { line: u64, value: String },
    #[error("line {line}: column `{column}` is not a number: `{value}`")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("required column `{0}` is missing")]
    MissingColumn(String),
    #[error("record {index}: {what}")]
    DateOrder { index: usize, what: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoanRecord {
    pub issue_date: NaiveDate,
    pub last_payment_date: NaiveDate,
    pub default_date: Option<NaiveDate>,
    pub interest_rate: f64,
    pub debt_to_income: f64,
}

fn months_between(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / DAYS_PER_MONTH
}

/// Months active and default indicator at `cutoff`.
///
/// A default on or before the cut-off is an event at the default date;
/// otherwise the loan is censored at the earlier of its last payment and the
/// cut-off.
pub fn to_observation(
    record: &LoanRecord,
    cutoff: NaiveDate,
    index: usize,
) -> Result<Observation, LoanError> {
    if record.issue_date > cutoff {
        return Err(LoanError::DateOrder {
            index,
            what: "issued after the cut-off",
        });
    }
    if record.last_payment_date < record.issue_date {
        return Err(LoanError::DateOrder {
            index,
            what: "last payment before issue",
        });
    }
    let z = vec![record.debt_to_income, record.interest_rate];
    match record.default_date {
        Some(d) if d < record.issue_date => Err(LoanError::DateOrder {
            index,
            what: "default before issue",
        }),
        Some(d) if d <= cutoff => Ok(Observation::new(
            months_between(record.issue_date, d),
            true,
            z,
        )),
        _ => {
            let end = record.last_payment_date.min(cutoff);
            Ok(Observation::new(
                months_between(record.issue_date, end),
                false,
                z,
            ))
        }
    }
}

pub fn to_observations(
    records: &[LoanRecord],
    cutoff: NaiveDate,
) -> Result<Vec<Observation>, LoanError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| to_observation(r, cutoff, i))
        .collect()
}

fn parse_date(line: u64, raw: &str) -> Result<NaiveDate, LoanError> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|_| LoanError::BadDate {
        line,
        value: raw.into(),
    })
}

/// Reads `issue_date,last_payment_date,default_date,interest_rate,debt_to_income`
/// (any column order; `default_date` empty when the loan did not default).
pub fn read_loans<R: Read>(reader: R) -> Result<Vec<LoanRecord>, LoanError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LoanError::MissingColumn(name.into()))
    };
    let (ci, cl, cd, cr, ct) = (
        col("issue_date")?,
        col("last_payment_date")?,
        col("default_date")?,
        col("interest_rate")?,
        col("debt_to_income")?,
    );
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| {
            rec[i].parse::<f64>().map_err(|_| LoanError::BadNumber {
                line,
                column: name.into(),
                value: rec[i].into(),
            })
        };
        out.push(LoanRecord {
            issue_date: parse_date(line, &rec[ci])?,
            last_payment_date: parse_date(line, &rec[cl])?,
            default_date: if rec[cd].is_empty() {
                None
            } else {
                Some(parse_date(line, &rec[cd])?)
            },
            interest_rate: num(cr, "interest_rate")?,
            debt_to_income: num(ct, "debt_to_income")?,
        });
    }
    Ok(out)
}

pub fn write_loans<W: Write>(
    records: &[LoanRecord],
    comments: &[String],
    mut out: W,
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(
        out,
        "issue_date,last_payment_date,default_date,interest_rate,debt_to_income"
    )?;
    for r in records {
        let d = r.default_date.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.issue_date, r.last_payment_date, d, r.interest_rate, r.debt_to_income
        )?;
    }
    Ok(())
}

/// Monthly default hazard of the synthetic portfolio.
pub fn synthetic_hazard(interest_rate: f64, debt_to_income: f64) -> f64 {
    0.002632 * (0.071 * (interest_rate - 9.0) + 0.0355 * (debt_to_income - 14.0)).exp()
}

fn add_months(date: NaiveDate, months: f64) -> NaiveDate {
    date + Days::new((months * DAYS_PER_MONTH).round() as u64)
}

/// Synthetic three-year loans issued uniformly over 2015–2018; record `i`
/// draws from substream `(seed, LOANS, 0, i)`.
pub fn synthetic_loans(n: usize, seed: u64, cutoff: NaiveDate) -> Vec<LoanRecord> {
    let start = NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date");
    (0..n)
        .map(|i| {
            let mut rng = substream(seed, Domain::LOANS, 0, i as u64);
            let interest_rate = 6.0 + 6.0 * rng.random::<f64>();
            let debt_to_income = 8.0 + 12.0 * rng.random::<f64>();
            let issue_date = start + Days::new(rng.random_range(0..4 * 365));
            let to_default = Exp::new(synthetic_hazard(interest_rate, debt_to_income))
                .expect("positive hazard")
                .sample(&mut rng);
            let horizon = TERM_MONTHS.min(months_between(issue_date, cutoff).max(0.0));
            if to_default < horizon {
                let d = add_months(issue_date, to_default);
                LoanRecord {
                    issue_date,
                    last_payment_date: d,
                    default_date: Some(d),
                    interest_rate,
                    debt_to_income,
                }
            } else {
                LoanRecord {
                    issue_date,
                    last_payment_date: add_months(issue_date, horizon),
                    default_date: None,
                    interest_rate,
                    debt_to_income,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn conversion_cases() {
        let cutoff = date(2020, 1, 1);
        let defaulted = LoanRecord {
            issue_date: date(2018, 1, 1),
            last_payment_date: date(2018, 6, 1),
            default_date: Some(date(2019, 1, 1)),
            interest_rate: 7.5,
            debt_to_income: 10.0,
        };
        let o = to_observation(&defaulted, cutoff, 0).unwrap();
        assert!(o.delta);
        assert!((o.w - 365.0 / DAYS_PER_MONTH).abs() < 1e-12);
        assert_eq!(o.z, vec![10.0, 7.5]);

        let late_default = LoanRecord {
            default_date: Some(date(2021, 1, 1)),
            last_payment_date: date(2021, 1, 1),
            ..defaulted.clone()
        };
        let o = to_observation(&late_default, cutoff, 0).unwrap();
        assert!(!o.delta);
        assert!((o.w - 730.0 / DAYS_PER_MONTH).abs() < 1e-12);

        let bad = LoanRecord {
            last_payment_date: date(2017, 1, 1),
            ..defaulted
        };
        assert!(to_observation(&bad, cutoff, 3).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = synthetic_loans(50, 1, date(2020, 1, 1));
        let mut buf = Vec::new();
        write_loans(&recs, &[], &mut buf).unwrap();
        assert_eq!(read_loans(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn synthetic_ranges_and_rates() {
        let cutoff = date(2022, 1, 1);
        let recs = synthetic_loans(20_000, 7, cutoff);
        assert!(recs
            .iter()
            .all(|r| (6.0..=12.0).contains(&r.interest_rate)
                && (8.0..=20.0).contains(&r.debt_to_income)));
        // with a late cut-off every loan runs its full term
        let rate = |lo: bool| {
            let sel: Vec<_> = recs
                .iter()
                .filter(|r| {
                    if lo {
                        r.interest_rate < 7.0 && r.debt_to_income < 10.0
                    } else {
                        r.interest_rate > 11.0 && r.debt_to_income > 18.0
                    }
                })
                .collect();
            sel.iter().filter(|r| r.default_date.is_some()).count() as f64 / sel.len() as f64
        };
        let (lo, hi) = (rate(true), rate(false));
        assert!(lo > 0.04 && lo < 0.09, "{lo}");
        assert!(hi > 0.10 && hi < 0.17, "{hi}");
        let obs = to_observations(&recs, cutoff).unwrap();
        assert!(obs.iter().all(|o| o.w <= TERM_MONTHS + 0.1));
    }
}
