use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lang::{BranchSiteId, Program, SiteKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BranchOutcome {
    TrueArm,
    FalseArm,
    Entered,
    Skipped,
}

impl BranchOutcome {
    /// One-letter code used in golden files: T, F, E, S.
    pub fn code(self) -> char {
        match self {
            BranchOutcome::TrueArm => 'T',
            BranchOutcome::FalseArm => 'F',
            BranchOutcome::Entered => 'E',
            BranchOutcome::Skipped => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<BranchOutcome> {
        match c {
            'T' => Some(BranchOutcome::TrueArm),
            'F' => Some(BranchOutcome::FalseArm),
            'E' => Some(BranchOutcome::Entered),
            'S' => Some(BranchOutcome::Skipped),
            _ => None,
        }
    }
}

/// Set of (site, outcome) events observed over one or more runs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverageReport {
    hit: BTreeSet<(BranchSiteId, BranchOutcome)>,
}

impl CoverageReport {
    /// Every outcome the program's branch sites can exhibit.
    pub fn universe(program: &Program) -> CoverageReport {
        let mut hit = BTreeSet::new();
        for (id, kind) in program.branch_sites() {
            let (a, b) = match kind {
                SiteKind::While => (BranchOutcome::Entered, BranchOutcome::Skipped),
                SiteKind::If | SiteKind::IfElse => (BranchOutcome::TrueArm, BranchOutcome::FalseArm),
            };
            hit.insert((id, a));
            hit.insert((id, b));
        }
        CoverageReport { hit }
    }

    pub(crate) fn record(&mut self, site: u32, outcome: BranchOutcome) {
        self.hit.insert((BranchSiteId(site), outcome));
    }

    pub fn insert(&mut self, site: BranchSiteId, outcome: BranchOutcome) -> bool {
        self.hit.insert((site, outcome))
    }

    pub fn contains(&self, site: BranchSiteId, outcome: BranchOutcome) -> bool {
        self.hit.contains(&(site, outcome))
    }

    pub fn hits(&self) -> impl Iterator<Item = (u32, BranchOutcome)> + '_ {
        self.hit.iter().map(|(s, o)| (s.0, *o))
    }

    pub fn len(&self) -> usize {
        self.hit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hit.is_empty()
    }

    pub fn union_with(&mut self, other: &CoverageReport) {
        self.hit.extend(other.hit.iter().copied());
    }

    pub fn is_subset(&self, other: &CoverageReport) -> bool {
        self.hit.is_subset(&other.hit)
    }

    /// Events in `self` missing from `other`.
    pub fn difference_len(&self, other: &CoverageReport) -> usize {
        self.hit.difference(&other.hit).count()
    }

    pub fn is_complete_for(&self, program: &Program) -> bool {
        CoverageReport::universe(program).is_subset(self)
    }

    /// `0:T 1:E`, empty string for no events.
    pub fn to_text(&self) -> String {
        self.hit
            .iter()
            .map(|(s, o)| format!("{}:{}", s.0, o.code()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_text(text: &str) -> Option<CoverageReport> {
        let mut cov = CoverageReport::default();
        for item in text.split_whitespace() {
            let (site, code) = item.split_once(':')?;
            let mut chars = code.chars();
            let outcome = BranchOutcome::from_code(chars.next()?)?;
            if chars.next().is_some() {
                return None;
            }
            cov.insert(BranchSiteId(site.parse().ok()?), outcome);
        }
        Some(cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn universe_has_two_outcomes_per_site() {
        let p = parse("def run(): { while(frontIsClear()): move(); ifelse(markersPresent()): pickMarker() else: putMarker() }")
            .unwrap();
        assert_eq!(CoverageReport::universe(&p).to_text(), "0:E 0:S 1:T 1:F");
        let flat = parse("def run(): repeat(3): move()").unwrap();
        assert!(CoverageReport::universe(&flat).is_empty());
        assert!(CoverageReport::default().is_complete_for(&flat));
    }

    #[test]
    fn text_round_trip() {
        let c = CoverageReport::from_text("1:F 0:T 2:S").unwrap();
        assert_eq!(c.to_text(), "0:T 1:F 2:S");
        assert!(CoverageReport::from_text("0:X").is_none());
        assert!(CoverageReport::from_text("a:T").is_none());
        assert_eq!(CoverageReport::from_text("").unwrap(), CoverageReport::default());
    }
}
