//! Item-level scoring of the four questionnaire measures.

use crate::error::{invalid, Result};

/// Number of CES-D items.
pub const CESD_ITEMS: usize = 8;
/// Number of UCLA loneliness items.
pub const LONELINESS_ITEMS: usize = 3;
/// Number of anxiety items.
pub const ANXIETY_ITEMS: usize = 5;

/// CES-D column names in canonical order.
pub const CESD_COLUMNS: [&str; CESD_ITEMS] = [
    "cesd_1", "cesd_2", "cesd_3", "cesd_4", "cesd_5", "cesd_6", "cesd_7", "cesd_8",
];

/// Columns holding the positively worded items ("you were happy", "you enjoyed life").
pub const CESD_REVERSED: [&str; 2] = ["cesd_4", "cesd_6"];

/// Scores strictly above this are classified as depressed.
pub const CESD_DEPRESSED_ABOVE: u32 = 3;

/// Highest exercise response ("2.5+ hours").
pub const EXERCISE_MAX: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CesdScore {
    pub score: u32,
    pub depressed: bool,
}

fn is_reversed(column: &str) -> bool {
    CESD_REVERSED.contains(&column)
}

/// Sums the eight yes/no CES-D items in canonical column order.
pub fn score_cesd(items: &[u8]) -> Result<CesdScore> {
    if items.len() != CESD_ITEMS {
        return Err(invalid!(
            "CES-D expects {CESD_ITEMS} items, got {}",
            items.len()
        ));
    }
    let mut score = 0;
    for (i, (&value, column)) in items.iter().zip(CESD_COLUMNS).enumerate() {
        if value > 1 {
            return Err(invalid!(
                "CES-D item {} ({column}) must be 0 or 1, got {value}",
                i + 1
            ));
        }
        let contribution = if is_reversed(column) { 1 - value } else { value };
        score += u32::from(contribution);
    }
    Ok(CesdScore {
        score,
        depressed: score > CESD_DEPRESSED_ABOVE,
    })
}

fn check_ordinal(name: &str, items: &[u8], expected: usize, lo: u8, hi: u8) -> Result<()> {
    if items.len() != expected {
        return Err(invalid!(
            "{name} expects {expected} items, got {}",
            items.len()
        ));
    }
    for (i, &v) in items.iter().enumerate() {
        if !(lo..=hi).contains(&v) {
            return Err(invalid!(
                "{name} item {} must be in {lo}..={hi}, got {v}",
                i + 1
            ));
        }
    }
    Ok(())
}

/// Sum of the three loneliness items (each 1..=3).
pub fn score_loneliness(items: &[u8]) -> Result<u32> {
    check_ordinal("loneliness", items, LONELINESS_ITEMS, 1, 3)?;
    Ok(items.iter().map(|&v| u32::from(v)).sum())
}

/// Mean of the five anxiety items (each 1..=4).
pub fn score_anxiety(items: &[u8]) -> Result<f64> {
    check_ordinal("anxiety", items, ANXIETY_ITEMS, 1, 4)?;
    let total: u32 = items.iter().map(|&v| u32::from(v)).sum();
    Ok(f64::from(total) / ANXIETY_ITEMS as f64)
}

/// Result of [`impute_exercise`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedSeries {
    pub values: Vec<f64>,
    /// Positions that were filled.
    pub imputed: Vec<usize>,
    /// True when at least one leading or trailing gap was filled from a single neighbour.
    pub edge_filled: bool,
}

/// Fills gaps in a bimonthly exercise series.
///
/// Interior gaps take the mean of the nearest observed value on each side;
/// leading and trailing gaps copy the nearest observed value.
pub fn impute_exercise(series: &[Option<f64>]) -> Result<ImputedSeries> {
    let observed: Vec<usize> = series
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    if observed.is_empty() {
        return Err(invalid!("exercise series has no observed values"));
    }

    let mut values = Vec::with_capacity(series.len());
    let mut imputed = Vec::new();
    let mut edge_filled = false;
    for (i, v) in series.iter().enumerate() {
        if let Some(v) = v {
            values.push(*v);
            continue;
        }
        let before = observed.iter().rev().find(|&&j| j < i);
        let after = observed.iter().find(|&&j| j > i);
        let fill = match (before, after) {
            (Some(&b), Some(&a)) => 0.5 * (series[b].unwrap() + series[a].unwrap()),
            (Some(&j), None) | (None, Some(&j)) => {
                edge_filled = true;
                series[j].unwrap()
            }
            (None, None) => unreachable!("at least one observed value"),
        };
        values.push(fill);
        imputed.push(i);
    }
    Ok(ImputedSeries {
        values,
        imputed,
        edge_filled,
    })
}
