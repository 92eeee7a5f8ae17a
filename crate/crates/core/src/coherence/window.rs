use std::collections::HashMap;

/// Default boolean sliding window width for C_v.
pub const DEFAULT_WINDOW_WIDTH: usize = 110;

/// Boolean sliding-window occurrence counts.
///
/// Each document of length `L` contributes `max(1, L - width + 1)` windows.
/// A term occurs in a window if it appears there at least once.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    width: usize,
    total_windows: u64,
    occurrence: Vec<u64>,
    co_occurrence: HashMap<(u32, u32), u64>,
    tracked: Option<Vec<bool>>,
}

impl WindowStats {
    /// Counts occurrences of every term and co-occurrences of every pair.
    pub fn build(docs: &[Vec<u32>], vocab_size: usize, width: usize) -> Self {
        Self::count(docs, vocab_size, width, None)
    }

    /// Counts occurrences of every term but co-occurrences only among `terms`.
    pub fn build_for_terms(docs: &[Vec<u32>], vocab_size: usize, width: usize, terms: &[u32]) -> Self {
        let mut mask = vec![false; vocab_size];
        for &t in terms {
            mask[t as usize] = true;
        }
        Self::count(docs, vocab_size, width, Some(mask))
    }

    /// Slides each window one token at a time and credits a term (or pair) with
    /// the number of consecutive windows it stayed present, on exit.
    fn count(docs: &[Vec<u32>], vocab_size: usize, width: usize, tracked: Option<Vec<bool>>) -> Self {
        assert!(width >= 1, "window width must be at least 1");
        let mut stats = WindowStats {
            width,
            total_windows: 0,
            occurrence: vec![0; vocab_size],
            co_occurrence: HashMap::new(),
            tracked,
        };
        let mut in_window = vec![0u32; vocab_size];
        let mut entered = vec![0u64; vocab_size];
        let mut present: Vec<u32> = Vec::new();
        let mut slot = vec![usize::MAX; vocab_size];

        for doc in docs {
            if doc.is_empty() {
                continue;
            }
            let windows = doc.len().saturating_sub(width) + 1;
            let first = width.min(doc.len());
            for &w in &doc[..first] {
                stats.enter(w, 0, &mut in_window, &mut entered, &mut present, &mut slot);
            }
            for s in 1..windows {
                stats.enter(doc[s + width - 1], s as u64, &mut in_window, &mut entered, &mut present, &mut slot);
                stats.leave(doc[s - 1], s as u64, &mut in_window, &entered, &mut present, &mut slot);
            }
            let end = windows as u64;
            for (i, &a) in present.iter().enumerate() {
                stats.occurrence[a as usize] += end - entered[a as usize];
                if stats.is_tracked(a) {
                    for &b in &present[i + 1..] {
                        if stats.is_tracked(b) {
                            let span = end - entered[a as usize].max(entered[b as usize]);
                            *stats.co_occurrence.entry(pair(a, b)).or_default() += span;
                        }
                    }
                }
            }
            for &a in &present {
                in_window[a as usize] = 0;
                slot[a as usize] = usize::MAX;
            }
            present.clear();
            stats.total_windows += end;
        }
        stats
    }

    fn enter(
        &self,
        w: u32,
        at: u64,
        in_window: &mut [u32],
        entered: &mut [u64],
        present: &mut Vec<u32>,
        slot: &mut [usize],
    ) {
        let i = w as usize;
        in_window[i] += 1;
        if in_window[i] == 1 {
            entered[i] = at;
            slot[i] = present.len();
            present.push(w);
        }
    }

    fn leave(
        &mut self,
        w: u32,
        at: u64,
        in_window: &mut [u32],
        entered: &[u64],
        present: &mut Vec<u32>,
        slot: &mut [usize],
    ) {
        let i = w as usize;
        in_window[i] -= 1;
        if in_window[i] > 0 {
            return;
        }
        self.occurrence[i] += at - entered[i];
        let pos = slot[i];
        present.swap_remove(pos);
        slot[i] = usize::MAX;
        if let Some(&moved) = present.get(pos) {
            slot[moved as usize] = pos;
        }
        if self.is_tracked(w) {
            for &other in present.iter() {
                if self.is_tracked(other) {
                    let span = at - entered[i].max(entered[other as usize]);
                    *self.co_occurrence.entry(pair(w, other)).or_default() += span;
                }
            }
        }
    }

    fn is_tracked(&self, w: u32) -> bool {
        self.tracked.as_ref().is_none_or(|m| m[w as usize])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn vocab_size(&self) -> usize {
        self.occurrence.len()
    }

    pub fn occurrence(&self, w: u32) -> u64 {
        self.occurrence.get(w as usize).copied().unwrap_or(0)
    }

    /// Windows containing both terms; `co_occurrence(w, w)` is `occurrence(w)`.
    /// `None` when the pair was not tracked.
    pub fn co_occurrence(&self, a: u32, b: u32) -> Option<u64> {
        if a == b {
            return Some(self.occurrence(a));
        }
        if !(self.is_tracked(a) && self.is_tracked(b)) {
            return None;
        }
        Some(self.co_occurrence.get(&pair(a, b)).copied().unwrap_or(0))
    }

    pub fn tracks(&self, w: u32) -> bool {
        (w as usize) < self.occurrence.len() && self.is_tracked(w)
    }
}

fn pair(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
