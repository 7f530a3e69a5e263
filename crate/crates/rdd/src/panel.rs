//! Municipality-year panels, their CSV form, and referendum aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One municipality in one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MunicipalityYear {
    pub muni_id: u32,
    pub year: i32,
    /// Yes share minus one half; absent without a usable referendum.
    pub margin: Option<f64>,
    pub win: Option<bool>,
    pub avg_tax: f64,
    pub income_pc: f64,
    pub home_value: f64,
    pub school_district_id: String,
}

/// Parameters planted by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpTruth {
    /// Jump in levy growth caused by a win.
    pub kappa: f64,
    /// Response of home-value growth to levy growth.
    pub beta1: f64,
    /// Share of the levy jump passed on to each contiguous neighbour.
    pub psi: f64,
}

/// A balanced panel with its contiguity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    /// Sorted by `(muni_id, year)`.
    pub rows: Vec<MunicipalityYear>,
    /// Undirected contiguity edges, each stored once with `a < b`.
    pub adjacency: Vec<(u32, u32)>,
    pub dgp_truth: Option<DgpTruth>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Edge {
    muni_a: u32,
    muni_b: u32,
}

impl Panel {
    /// Sorts rows, normalises edges and checks the panel's invariants.
    pub fn new(
        mut rows: Vec<MunicipalityYear>,
        adjacency: Vec<(u32, u32)>,
        dgp_truth: Option<DgpTruth>,
    ) -> Result<Self> {
        rows.sort_by_key(|r| (r.muni_id, r.year));
        let mut edges = BTreeSet::new();
        for (a, b) in adjacency {
            if a == b {
                return Err(Error::InvalidPanel(format!("self-loop at municipality {a}")));
            }
            edges.insert((a.min(b), a.max(b)));
        }
        for w in rows.windows(2) {
            if (w[0].muni_id, w[0].year) == (w[1].muni_id, w[1].year) {
                return Err(Error::InvalidPanel(format!("duplicate row {} / {}", w[0].muni_id, w[0].year)));
            }
        }
        for r in &rows {
            if r.win != r.margin.map(|m| m >= 0.0) {
                return Err(Error::InvalidPanel(format!(
                    "win flag inconsistent with margin at {} / {}",
                    r.muni_id, r.year
                )));
            }
            if !(r.avg_tax > 0.0 && r.income_pc > 0.0 && r.home_value > 0.0) {
                return Err(Error::InvalidPanel(format!("non-positive outcome at {} / {}", r.muni_id, r.year)));
            }
        }
        Ok(Self { rows, adjacency: edges.into_iter().collect(), dgp_truth })
    }

    /// Symmetric neighbour lists.
    pub fn neighbors(&self) -> BTreeMap<u32, Vec<u32>> {
        let mut map: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &(a, b) in &self.adjacency {
            map.entry(a).or_default().push(b);
            map.entry(b).or_default().push(a);
        }
        for v in map.values_mut() {
            v.sort_unstable();
        }
        map
    }

    /// Index of each `(muni_id, year)` row.
    pub fn index(&self) -> BTreeMap<(u32, i32), usize> {
        self.rows.iter().enumerate().map(|(i, r)| ((r.muni_id, r.year), i)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_adjacency_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for &(muni_a, muni_b) in &self.adjacency {
            out.serialize(Edge { muni_a, muni_b })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read, A: Read>(rows: R, adjacency: A) -> Result<Self> {
        let rows =
            csv::Reader::from_reader(rows).deserialize().collect::<std::result::Result<Vec<MunicipalityYear>, _>>()?;
        let edges = csv::Reader::from_reader(adjacency)
            .deserialize()
            .map(|e| e.map(|e: Edge| (e.muni_a, e.muni_b)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(rows, edges, None)
    }
}

/// A single vote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Referendum {
    pub muni_id: u32,
    pub year: i32,
    pub margin: f64,
}

/// What a municipality-year's referenda amount to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YearOutcome {
    /// All votes passed, or all failed: the mean margin is the running variable.
    Usable { margin: f64, count: usize },
    /// Wins and losses in the same year; excluded from estimation.
    Mixed { count: usize },
}

/// Averages margins within municipality-years, discarding years in which
/// wins and losses coexist.
pub fn aggregate_referenda(votes: &[Referendum]) -> BTreeMap<(u32, i32), YearOutcome> {
    let mut groups: BTreeMap<(u32, i32), Vec<f64>> = BTreeMap::new();
    for v in votes {
        groups.entry((v.muni_id, v.year)).or_default().push(v.margin);
    }
    groups
        .into_iter()
        .map(|(key, margins)| {
            let wins = margins.iter().filter(|&&m| m >= 0.0).count();
            let count = margins.len();
            let outcome = if wins == 0 || wins == count {
                YearOutcome::Usable { margin: margins.iter().sum::<f64>() / count as f64, count }
            } else {
                YearOutcome::Mixed { count }
            };
            (key, outcome)
        })
        .collect()
}
