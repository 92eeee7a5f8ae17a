use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::crawl::{HarvestRecord, RecordSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub forum: String,
    pub source: RecordSource,
    /// Distinct candidate handles seen from this source.
    pub collected: usize,
    pub valid: usize,
    /// Distinct raw values that could not be turned into a handle.
    pub unusable: usize,
}

impl SummaryRow {
    pub fn label(&self) -> String {
        format!("{} - {}", self.forum, self.source.label())
    }
}

/// Collected-versus-valid counts per (forum, source) with deduplicated totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestSummary {
    pub rows: Vec<SummaryRow>,
    pub collected_unique: usize,
    pub valid_unique: usize,
}

impl HarvestSummary {
    pub fn tally(records: &[HarvestRecord], valid: &[String]) -> Self {
        let valid: HashSet<&str> = valid.iter().map(String::as_str).collect();
        // (forum, source) -> (handles, unusable raw values)
        type Group<'a> = (BTreeSet<&'a str>, BTreeSet<&'a str>);
        let mut groups: BTreeMap<(String, RecordSource), Group> = BTreeMap::new();
        for r in records {
            let (handles, unusable) = groups.entry((r.forum.clone(), r.source)).or_default();
            match &r.shop_handle {
                Some(h) => {
                    handles.insert(h);
                }
                None => {
                    unusable.insert(&r.raw_value);
                }
            }
        }
        let mut all = BTreeSet::new();
        let rows = groups
            .into_iter()
            .map(|((forum, source), (handles, unusable))| {
                all.extend(handles.iter().copied());
                SummaryRow {
                    forum,
                    source,
                    collected: handles.len(),
                    valid: handles.iter().filter(|h| valid.contains(*h)).count(),
                    unusable: unusable.len(),
                }
            })
            .collect();
        HarvestSummary {
            rows,
            collected_unique: all.len(),
            valid_unique: all.iter().filter(|h| valid.contains(*h)).count(),
        }
    }

    pub fn valid_ratio(&self) -> f64 {
        if self.collected_unique == 0 {
            0.0
        } else {
            self.valid_unique as f64 / self.collected_unique as f64
        }
    }

    /// Tab-separated `source, collected, valid` table with a totals row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("source\tcollected\tvalid\n");
        for row in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}", row.label(), row.collected, row.valid);
        }
        let _ = writeln!(out, "Total (unique)\t{}\t{}", self.collected_unique, self.valid_unique);
        out
    }
}
