/// One accepted iterate of an optimizer run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    /// Cumulative oracle calls when this iterate was accepted.
    pub fevals: u64,
    pub fhat: f64,
    /// Noiseless value, when the oracle exposes it.
    pub ftrue: Option<f64>,
}

/// Per-iteration record of a single trial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialHistory {
    rows: Vec<HistoryRow>,
    diverged: bool,
}

impl TrialHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: HistoryRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.fevals >= last.fevals, "evaluation counts must not decrease");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[HistoryRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&HistoryRow> {
        self.rows.last()
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub(crate) fn mark_diverged(&mut self) {
        self.diverged = true;
    }

    /// Last row whose cumulative evaluation count fits in `budget`.
    pub fn at_budget(&self, budget: u64) -> Option<&HistoryRow> {
        self.rows.iter().take_while(|r| r.fevals <= budget).last()
    }
}
