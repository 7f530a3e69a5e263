//! Outcome definitions, neighbour averages, and estimation samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;

/// An outcome column of the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    AvgTax,
    IncomePc,
    HomeValue,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::AvgTax => "avg_tax",
            Field::IncomePc => "income_pc",
            Field::HomeValue => "home_value",
        }
    }
}

/// How a field is turned into an outcome for a vote in year `t` at lag `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Percent change from `t` to `t + k`, as a fraction.
    Growth,
    /// Level in year `t + k`.
    Level,
}

/// Whose values enter the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Source {
    Own,
    /// Average over contiguous municipalities.
    Neighbors {
        exclude_shared_school: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub field: Field,
    pub transform: Transform,
    #[serde(default = "own")]
    pub source: Source,
}

fn own() -> Source {
    Source::Own
}

impl OutcomeSpec {
    pub fn growth(field: Field) -> Self {
        Self { field, transform: Transform::Growth, source: Source::Own }
    }

    pub fn level(field: Field) -> Self {
        Self { field, transform: Transform::Level, source: Source::Own }
    }

    pub fn of_neighbors(self, exclude_shared_school: bool) -> Self {
        Self { source: Source::Neighbors { exclude_shared_school }, ..self }
    }

    /// A short label such as `growth_home_value` or `level_avg_tax_nbr_ex`.
    pub fn label(&self) -> String {
        let t = match self.transform {
            Transform::Growth => "growth",
            Transform::Level => "level",
        };
        let s = match self.source {
            Source::Own => "",
            Source::Neighbors { exclude_shared_school: false } => "_nbr",
            Source::Neighbors { exclude_shared_school: true } => "_nbr_ex",
        };
        format!("{t}_{}{s}", self.field.name())
    }
}

/// Outcome fields of one municipality-year; `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub muni_id: u32,
    pub year: i32,
    pub avg_tax: Option<f64>,
    pub income_pc: Option<f64>,
    pub home_value: Option<f64>,
}

impl OutcomeRow {
    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::AvgTax => self.avg_tax,
            Field::IncomePc => self.income_pc,
            Field::HomeValue => self.home_value,
        }
    }
}

/// Neighbour averages of every outcome field, one row per panel row.
///
/// With `exclude_shared_school`, neighbours in the same school district are
/// left out. Municipalities without any remaining neighbour get `None`.
pub fn neighbor_outcomes(panel: &Panel, exclude_shared_school: bool) -> Vec<OutcomeRow> {
    let neighbors = panel.neighbors();
    let index = panel.index();
    panel
        .rows
        .iter()
        .map(|r| {
            let peers: Vec<_> = neighbors
                .get(&r.muni_id)
                .into_iter()
                .flatten()
                .filter_map(|&n| index.get(&(n, r.year)).map(|&i| &panel.rows[i]))
                .filter(|p| !exclude_shared_school || p.school_district_id != r.school_district_id)
                .collect();
            let mean = |f: &dyn Fn(&crate::panel::MunicipalityYear) -> f64| {
                (!peers.is_empty()).then(|| peers.iter().map(|p| f(p)).sum::<f64>() / peers.len() as f64)
            };
            OutcomeRow {
                muni_id: r.muni_id,
                year: r.year,
                avg_tax: mean(&|p| p.avg_tax),
                income_pc: mean(&|p| p.income_pc),
                home_value: mean(&|p| p.home_value),
            }
        })
        .collect()
}

fn own_outcomes(panel: &Panel) -> Vec<OutcomeRow> {
    panel
        .rows
        .iter()
        .map(|r| OutcomeRow {
            muni_id: r.muni_id,
            year: r.year,
            avg_tax: Some(r.avg_tax),
            income_pc: Some(r.income_pc),
            home_value: Some(r.home_value),
        })
        .collect()
}

/// Running variable and outcomes for the rows where every outcome exists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    /// Margins, recentred so that the cutoff is zero.
    pub x: Vec<f64>,
    /// One column per requested outcome.
    pub y: Vec<Vec<f64>>,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Observations below and at-or-above the cutoff.
    pub fn sides(&self) -> (usize, usize) {
        let right = self.x.iter().filter(|&&x| x >= 0.0).count();
        (self.x.len() - right, right)
    }
}

/// Builds the estimation sample for vote years with a usable margin.
///
/// The sample keeps rows where every outcome in `specs` is defined at `lag`.
pub fn build_sample(panel: &Panel, specs: &[OutcomeSpec], lag: u32) -> Result<Sample> {
    if specs.is_empty() {
        return Err(Error::InvalidParams("no outcome requested".into()));
    }
    if lag == 0 && specs.iter().any(|s| s.transform == Transform::Growth) {
        return Err(Error::InvalidParams("growth outcomes need a lag of at least one year".into()));
    }
    let mut tables: BTreeMap<Source, BTreeMap<(u32, i32), OutcomeRow>> = BTreeMap::new();
    for s in specs {
        tables.entry(s.source).or_insert_with(|| {
            let rows = match s.source {
                Source::Own => own_outcomes(panel),
                Source::Neighbors { exclude_shared_school } => neighbor_outcomes(panel, exclude_shared_school),
            };
            rows.into_iter().map(|r| ((r.muni_id, r.year), r)).collect()
        });
    }
    let mut sample = Sample { x: Vec::new(), y: vec![Vec::new(); specs.len()] };
    'rows: for r in &panel.rows {
        let Some(margin) = r.margin else { continue };
        let mut values = Vec::with_capacity(specs.len());
        for s in specs {
            let table = &tables[&s.source];
            let later = table.get(&(r.muni_id, r.year + lag as i32)).and_then(|o| o.get(s.field));
            let value = match s.transform {
                Transform::Level => later,
                Transform::Growth => {
                    let now = table.get(&(r.muni_id, r.year)).and_then(|o| o.get(s.field));
                    now.zip(later).map(|(a, b)| b / a - 1.0)
                }
            };
            match value {
                Some(v) => values.push(v),
                None => continue 'rows,
            }
        }
        sample.x.push(margin);
        for (col, v) in sample.y.iter_mut().zip(values) {
            col.push(v);
        }
    }
    Ok(sample)
}

/// Equal-width bin of the running variable with the mean outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub count: usize,
}

/// Binned means on each side of the cutoff for plotting; `bins` per side.
pub fn binned_scatter(x: &[f64], y: &[f64], bins: usize) -> Vec<Bin> {
    let bins = bins.max(1);
    let reach = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if reach == 0.0 {
        return Vec::new();
    }
    let width = reach / bins as f64;
    let mut acc = vec![(0.0, 0.0, 0usize); 2 * bins];
    for (&xi, &yi) in x.iter().zip(y) {
        let k = ((xi / width).floor() as i64).clamp(-(bins as i64), bins as i64 - 1);
        let slot = &mut acc[(k + bins as i64) as usize];
        slot.0 += xi;
        slot.1 += yi;
        slot.2 += 1;
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, a)| a.2 > 0)
        .map(|(i, (sx, sy, n))| {
            let lo = (i as f64 - bins as f64) * width;
            Bin { lo, hi: lo + width, mean_x: sx / n as f64, mean_y: sy / n as f64, count: n }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::MunicipalityYear;

    fn row(muni_id: u32, year: i32, margin: Option<f64>, tax: f64) -> MunicipalityYear {
        MunicipalityYear {
            muni_id,
            year,
            margin,
            win: margin.map(|m| m >= 0.0),
            avg_tax: tax,
            income_pc: 2.0 * tax,
            home_value: 3.0 * tax,
            school_district_id: "A".into(),
        }
    }

    #[test]
    fn growth_and_level_at_a_lag() {
        let panel = Panel::new(
            vec![row(1, 0, Some(0.1), 100.0), row(1, 1, None, 110.0), row(1, 2, Some(-0.2), 121.0)],
            vec![],
            None,
        )
        .unwrap();
        let s = build_sample(&panel, &[OutcomeSpec::growth(Field::AvgTax), OutcomeSpec::level(Field::HomeValue)], 1)
            .unwrap();
        // The last vote has no following year.
        assert_eq!(s.x, vec![0.1]);
        assert!((s.y[0][0] - 0.1).abs() < 1e-15);
        assert_eq!(s.y[1][0], 330.0);
        assert!(build_sample(&panel, &[OutcomeSpec::growth(Field::AvgTax)], 0).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(OutcomeSpec::growth(Field::HomeValue).label(), "growth_home_value");
        assert_eq!(OutcomeSpec::level(Field::AvgTax).of_neighbors(true).label(), "level_avg_tax_nbr_ex");
    }

    #[test]
    fn bins_cover_both_sides() {
        let x = [-0.4, -0.1, 0.0, 0.3];
        let y = [1.0, 2.0, 3.0, 4.0];
        let bins = binned_scatter(&x, &y, 2);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 4);
        assert!(bins.iter().all(|b| b.lo < b.hi));
        let at_zero = bins.iter().find(|b| b.lo == 0.0).unwrap();
        assert_eq!(at_zero.mean_y, 3.0);
    }
}
