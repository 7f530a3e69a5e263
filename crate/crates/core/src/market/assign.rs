//! The monotone assignment of arriving types to locations.
//!
//! Every home has a location quality `q + s_j`. Pooling the districts'
//! housing measures on the location-quality axis gives a single measure `G`;
//! monotone sorting assigns type `w` to location quality `G^{-1}(F(w))`, and
//! district `j` receives the share of arrivals its housing contributes at that
//! quality level. Because all distributions are piecewise linear, the pooled
//! measure is piecewise linear too and the assignment is represented exactly
//! by a list of segments on which the location quality is affine in mass.

use crate::distribution::Distribution;
use crate::economy::Economy;
use crate::error::{Error, Result};

/// Mass tolerance for market clearing.
const MASS_TOL: f64 = 1e-12;
/// Relative distance below which two breakpoints are identified.
const BREAK_TOL: f64 = 1e-12;
/// Relative mass below which a district's share of a piece is dropped.
const SLIVER_TOL: f64 = 1e-10;

/// A district's participation in a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub district: usize,
    /// Fraction of the segment's arrivals that settle in this district.
    pub share: f64,
    /// Arrivals to the district with types below the segment.
    pub gamma_lo: f64,
}

/// A type interval on which the set of active districts is constant and the
/// location quality is affine in the population mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub w_lo: f64,
    pub w_hi: f64,
    pub mass_lo: f64,
    pub mass_hi: f64,
    pub l_lo: f64,
    pub l_hi: f64,
    /// All homes in the segment share one location quality.
    pub atom: bool,
    pub members: Vec<Member>,
}

impl Segment {
    pub fn contains_district(&self, j: usize) -> bool {
        self.members.iter().any(|m| m.district == j)
    }

    pub fn member(&self, j: usize) -> Option<&Member> {
        self.members.iter().find(|m| m.district == j)
    }

    /// `d ell / dw`, constant on the segment.
    pub fn slope(&self) -> f64 {
        if self.atom || self.w_hi <= self.w_lo {
            0.0
        } else {
            (self.l_hi - self.l_lo) / (self.w_hi - self.w_lo)
        }
    }

    fn quality_at_mass(&self, mass: f64) -> f64 {
        if self.atom || self.mass_hi <= self.mass_lo {
            return self.l_lo;
        }
        let t = ((mass - self.mass_lo) / (self.mass_hi - self.mass_lo)).clamp(0.0, 1.0);
        self.l_lo + t * (self.l_hi - self.l_lo)
    }
}

/// Lowest and highest types living in an overlap of several districts, and
/// the qualities they occupy at its ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoffs {
    /// Bottom of the lowest multi-district continuous segment (`w_*`).
    pub w_lower: Option<f64>,
    /// Top of the highest multi-district continuous segment (`w^*`).
    pub w_upper: Option<f64>,
    /// `(district, quality)` entered at `w_lower` by the district living below it.
    pub q_lower: Option<(usize, f64)>,
    /// `(district, quality)` occupied at `w_upper` by the district living above it.
    pub q_upper: Option<(usize, f64)>,
}

/// The equilibrium location allocation for given school levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub school: Vec<f64>,
    pub masses: Vec<f64>,
    pub segments: Vec<Segment>,
    pub cutoffs: Cutoffs,
    income: Distribution,
    housing: Vec<Distribution>,
}

/// Builds the allocation for expenditure profile `e`.
pub fn assign_locations(econ: &Economy, e: &[f64]) -> Result<Allocation> {
    if e.len() != econ.n() {
        return Err(Error::InvalidScenario(format!(
            "expenditure profile has {} entries for {} districts",
            e.len(),
            econ.n()
        )));
    }
    if e.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidScenario("expenditures must be nonnegative".into()));
    }
    assign_by_school_levels(econ, &econ.school_levels(e))
}

/// Builds the allocation for given school levels `s_j`.
pub fn assign_by_school_levels(econ: &Economy, school: &[f64]) -> Result<Allocation> {
    let n = econ.n();
    let masses: Vec<f64> = (0..n).map(|j| econ.district_mass(j)).collect();
    let housing: Vec<Distribution> = econ.districts.iter().map(|d| d.housing.clone()).collect();
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::MassMismatch { housing: total, population: 1.0 });
    }

    // Breakpoints of the pooled measure on the location-quality axis.
    let mut breaks: Vec<f64> = Vec::new();
    for (j, d) in housing.iter().enumerate() {
        breaks.extend(d.knots().into_iter().map(|(x, _)| x + school[j]));
    }
    breaks.sort_by(f64::total_cmp);
    // Knots that coincide up to rounding would otherwise leave slivers with
    // spurious members.
    breaks.dedup_by(|b, a| (*b - *a).abs() <= BREAK_TOL * (1.0 + a.abs()));

    // Pieces of the pooled measure: atoms and continuous stretches.
    struct Piece {
        l_lo: f64,
        l_hi: f64,
        atom: bool,
        masses: Vec<(usize, f64)>,
    }
    let mut pieces = Vec::new();
    for (i, &b) in breaks.iter().enumerate() {
        let atoms: Vec<(usize, f64)> = housing
            .iter()
            .enumerate()
            .filter(|(j, d)| matches!(d, Distribution::Atom(a) if (a + school[*j] - b).abs() <= BREAK_TOL * (1.0 + b.abs())))
            .map(|(j, _)| (j, masses[j]))
            .collect();
        if !atoms.is_empty() {
            pieces.push(Piece { l_lo: b, l_hi: b, atom: true, masses: atoms });
        }
        if let Some(&next) = breaks.get(i + 1) {
            let inside: Vec<(usize, f64)> = housing
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_atom())
                .map(|(j, d)| (j, masses[j] * (d.cdf(next - school[j]) - d.cdf(b - school[j]))))
                .filter(|&(j, m)| m > SLIVER_TOL * masses[j])
                .collect();
            if !inside.is_empty() {
                pieces.push(Piece { l_lo: b, l_hi: next, atom: false, masses: inside });
            }
        }
    }

    let placed: f64 = pieces.iter().flat_map(|p| p.masses.iter().map(|m| m.1)).sum();
    if (placed - 1.0).abs() > 1e-9 {
        return Err(Error::MassMismatch { housing: placed, population: 1.0 });
    }
    let rescale = 1.0 / placed;

    // Split pieces at the income distribution's knots so that location
    // quality is affine in type on every segment.
    let income = econ.income.clone();
    let f_knots: Vec<f64> = income.knots().into_iter().map(|(_, c)| c).collect();
    let mut segments = Vec::new();
    let mut gamma = vec![0.0; n];
    let mut mass = 0.0;
    let n_pieces = pieces.len();
    for (k, piece) in pieces.into_iter().enumerate() {
        let piece_mass: f64 = piece.masses.iter().map(|m| m.1).sum::<f64>() * rescale;
        let lo = mass;
        let hi = if k + 1 == n_pieces { 1.0 } else { (mass + piece_mass).min(1.0) };
        let members_share: Vec<(usize, f64)> =
            piece.masses.iter().map(|&(j, m)| (j, m * rescale / piece_mass)).collect();
        let template = Segment {
            w_lo: 0.0,
            w_hi: 0.0,
            mass_lo: lo,
            mass_hi: hi,
            l_lo: piece.l_lo,
            l_hi: piece.l_hi,
            atom: piece.atom,
            members: Vec::new(),
        };
        let mut cuts = vec![lo];
        cuts.extend(f_knots.iter().copied().filter(|&c| c > lo + 1e-15 && c < hi - 1e-15));
        cuts.push(hi);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let members = members_share
                .iter()
                .map(|&(j, share)| Member { district: j, share, gamma_lo: gamma[j] + share * (a - lo) })
                .collect();
            segments.push(Segment {
                w_lo: income.quantile(a),
                w_hi: income.quantile(b),
                mass_lo: a,
                mass_hi: b,
                l_lo: template.quality_at_mass(a),
                l_hi: template.quality_at_mass(b),
                atom: piece.atom,
                members,
            });
        }
        for &(j, share) in &members_share {
            gamma[j] += share * (hi - lo);
        }
        mass = hi;
    }

    let cutoffs = cutoffs(&segments, school);
    Ok(Allocation { school: school.to_vec(), masses, segments, cutoffs, income, housing })
}

fn cutoffs(segments: &[Segment], school: &[f64]) -> Cutoffs {
    let overlap = |s: &&Segment| !s.atom && s.members.len() > 1;
    let first = segments.iter().find(overlap);
    let last = segments.iter().rev().find(overlap);
    let q_lower = first.and_then(|s| {
        // The district with the lowest quality at the start of the overlap.
        s.members
            .iter()
            .map(|m| (m.district, s.l_lo - school[m.district]))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    });
    let q_upper = last.and_then(|s| {
        s.members
            .iter()
            .map(|m| (m.district, s.l_hi - school[m.district]))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    });
    Cutoffs { w_lower: first.map(|s| s.w_lo), w_upper: last.map(|s| s.w_hi), q_lower, q_upper }
}

impl Allocation {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn income(&self) -> &Distribution {
        &self.income
    }

    pub fn housing(&self, j: usize) -> &Distribution {
        &self.housing[j]
    }

    pub fn w_min(&self) -> f64 {
        self.income.lo()
    }

    pub fn w_max(&self) -> f64 {
        self.income.hi()
    }

    /// Index of the segment containing type `w` (the lower one at a boundary).
    pub fn segment_index(&self, w: f64) -> usize {
        let i = self.segments.partition_point(|s| s.w_hi < w);
        i.min(self.segments.len() - 1)
    }

    pub fn segment_at(&self, w: f64) -> &Segment {
        &self.segments[self.segment_index(w)]
    }

    /// Location quality `ell(w)` of type `w`.
    pub fn location_quality(&self, w: f64) -> f64 {
        self.segment_at(w).quality_at_mass(self.income.cdf(w))
    }

    /// Mass of arrivals with type at most `w` settling in district `j`.
    pub fn gamma(&self, j: usize, w: f64) -> f64 {
        let mass = self.income.cdf(w);
        let mut g = 0.0;
        for s in &self.segments {
            if let Some(m) = s.member(j) {
                if mass >= s.mass_hi {
                    g = m.gamma_lo + m.share * (s.mass_hi - s.mass_lo);
                } else if mass > s.mass_lo {
                    return m.gamma_lo + m.share * (mass - s.mass_lo);
                } else {
                    return g;
                }
            }
        }
        g
    }

    /// Districts active at type `w`.
    pub fn active_districts(&self, w: f64) -> Vec<usize> {
        self.segment_at(w).members.iter().map(|m| m.district).collect()
    }

    /// Quality of the home type `w` buys in district `j`, if `j` is active at `w`.
    pub fn house_choice(&self, j: usize, w: f64) -> Option<f64> {
        let seg = self.segment_at(w);
        seg.contains_district(j).then(|| {
            (seg.quality_at_mass(self.income.cdf(w)) - self.school[j]).clamp(self.housing[j].lo(), self.housing[j].hi())
        })
    }

    /// Type assigned to the home at quantile `p` of district `j`'s housing.
    pub fn type_at_quantile(&self, j: usize, p: f64) -> f64 {
        self.locate_quantile(j, p).1
    }

    /// Segment index and type of the home at quantile `p` of district `j`.
    ///
    /// At a jump of the location quality the type is shared by two segments;
    /// the one containing district `j` is returned.
    pub fn locate_quantile(&self, j: usize, p: f64) -> (usize, f64) {
        let target = p.clamp(0.0, 1.0) * self.masses[j];
        let mut last = None;
        for (k, s) in self.segments.iter().enumerate() {
            if let Some(m) = s.member(j) {
                let top = m.gamma_lo + m.share * (s.mass_hi - s.mass_lo);
                if target <= top {
                    let mass =
                        if m.share > 0.0 { s.mass_lo + (target - m.gamma_lo).max(0.0) / m.share } else { s.mass_lo };
                    let w = self.income.quantile(mass.min(s.mass_hi)).clamp(s.w_lo, s.w_hi);
                    return (k, w);
                }
                last = Some((k, s.w_hi));
            }
        }
        last.unwrap_or((self.segments.len() - 1, self.income.hi()))
    }

    /// Type assigned to quality `q` in district `j` (midpoint type for atoms).
    pub fn type_at_quality(&self, j: usize, q: f64) -> f64 {
        let p = if self.housing[j].is_atom() { 0.5 } else { self.housing[j].cdf(q) };
        self.type_at_quantile(j, p)
    }

    /// Range of types living in district `j`.
    pub fn type_range(&self, j: usize) -> (f64, f64) {
        (self.type_at_quantile(j, 0.0), self.type_at_quantile(j, 1.0))
    }

    /// Increase in location quality across every jump of `ell`, with the
    /// type at which it occurs.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        self.segments
            .windows(2)
            .filter_map(|w| {
                let d = w[1].l_lo - w[0].l_hi;
                (d > 0.0).then_some((w[0].w_hi, d))
            })
            .collect()
    }

    /// Quantile knots of district `j` where the integrand of district-level
    /// quantities may kink: housing knots and segment boundaries.
    pub fn quantile_breaks(&self, j: usize) -> Vec<f64> {
        let mut b: Vec<f64> = vec![0.0, 1.0];
        if !self.housing[j].is_atom() {
            b.extend(self.housing[j].knots().into_iter().map(|(_, c)| c));
        }
        for s in &self.segments {
            if let Some(m) = s.member(j) {
                b.push(m.gamma_lo / self.masses[j]);
                b.push((m.gamma_lo + m.share * (s.mass_hi - s.mass_lo)) / self.masses[j]);
            }
        }
        let mut b: Vec<f64> = b.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, c| (*a - *c).abs() < 1e-14);
        b
    }
}
