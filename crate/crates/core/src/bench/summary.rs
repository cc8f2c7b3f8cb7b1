//! Cross-trial quartiles on a common evaluation grid.

use crate::history::TrialHistory;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Quartiles of `values`; `None` when empty.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        q25: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    quartiles(values).map(|q| q.median)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub evals: u64,
    pub fhat: Quartiles,
    pub f: Option<Quartiles>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialSummary {
    pub label: String,
    pub rows: Vec<SummaryRow>,
    pub trials: usize,
    pub completed: usize,
    pub diverged: usize,
}

impl TrialSummary {
    /// Aggregates the non-diverged trials. The grid is the union of the
    /// evaluation counts at which any trial accepted an iterate; each trial
    /// contributes its latest iterate within each grid budget.
    pub fn from_histories(label: impl Into<String>, histories: &[TrialHistory]) -> Self {
        let completed: Vec<&TrialHistory> = histories
            .iter()
            .filter(|h| !h.diverged() && !h.is_empty())
            .collect();
        let mut grid: Vec<u64> = completed
            .iter()
            .flat_map(|h| h.rows().iter().map(|r| r.fevals))
            .collect();
        grid.sort_unstable();
        grid.dedup();

        let mut cursors = vec![0usize; completed.len()];
        let mut rows = Vec::with_capacity(grid.len());
        for &e in &grid {
            let mut fhat = Vec::with_capacity(completed.len());
            let mut f = Vec::with_capacity(completed.len());
            let mut all_true = true;
            for (h, cur) in completed.iter().zip(cursors.iter_mut()) {
                let r = h.rows();
                while *cur + 1 < r.len() && r[*cur + 1].fevals <= e {
                    *cur += 1;
                }
                if r[*cur].fevals > e {
                    continue;
                }
                fhat.push(r[*cur].fhat);
                match r[*cur].ftrue {
                    Some(v) => f.push(v),
                    None => all_true = false,
                }
            }
            let Some(fq) = quartiles(&fhat) else {
                continue;
            };
            rows.push(SummaryRow {
                evals: e,
                fhat: fq,
                f: if all_true { quartiles(&f) } else { None },
            });
        }
        Self {
            label: label.into(),
            rows,
            trials: histories.len(),
            completed: completed.len(),
            diverged: histories.iter().filter(|h| h.diverged()).count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Median noiseless value at the last grid point (noisy value when the
    /// oracle had no noiseless reads).
    pub fn final_median(&self) -> Option<f64> {
        self.rows
            .last()
            .map(|r| r.f.map(|q| q.median).unwrap_or(r.fhat.median))
    }

    /// Median at the last grid point not exceeding `budget` evaluations.
    pub fn median_at_budget(&self, budget: u64) -> Option<f64> {
        self.rows
            .iter()
            .take_while(|r| r.evals <= budget)
            .last()
            .map(|r| r.f.map(|q| q.median).unwrap_or(r.fhat.median))
    }

    /// First grid point whose median falls to `threshold` or below.
    pub fn evals_to_threshold(&self, threshold: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.f.map(|q| q.median).unwrap_or(r.fhat.median) <= threshold)
            .map(|r| r.evals)
    }

    /// `(threshold, evaluations)` for each requested threshold.
    pub fn threshold_table(&self, thresholds: &[f64]) -> Vec<(f64, Option<u64>)> {
        thresholds
            .iter()
            .map(|&t| (t, self.evals_to_threshold(t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryRow;
    use proptest::prelude::*;

    fn hist(vals: &[(u64, f64)]) -> TrialHistory {
        let mut h = TrialHistory::new();
        for (i, &(e, v)) in vals.iter().enumerate() {
            h.push(HistoryRow {
                iteration: i,
                fevals: e,
                fhat: v,
                ftrue: Some(v * 0.5),
            });
        }
        h
    }

    #[test]
    fn quantiles_interpolate() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q25, q.median, q.q75), (2.0, 3.0, 4.0));
        assert_eq!(median(&[1.0, 2.0]).unwrap(), 1.5);
        assert!(quartiles(&[]).is_none());
    }

    #[test]
    fn single_trial_reproduces_history() {
        let h = hist(&[(1, 9.0), (3, 4.0), (5, 1.0)]);
        let s = TrialSummary::from_histories("t", std::slice::from_ref(&h));
        assert_eq!(s.rows.len(), 3);
        for (row, r) in s.rows.iter().zip(h.rows()) {
            assert_eq!(row.evals, r.fevals);
            assert_eq!(row.fhat.median, r.fhat);
            assert_eq!(row.fhat.q25, r.fhat);
            assert_eq!(row.f.unwrap().median, r.ftrue.unwrap());
        }
        assert_eq!(s.final_median(), Some(0.5));
    }

    #[test]
    fn diverged_trials_are_excluded() {
        let mut bad = hist(&[(1, 1e20)]);
        bad.mark_diverged();
        let good = hist(&[(1, 2.0), (3, 1.0)]);
        let s = TrialSummary::from_histories("t", &[good, bad]);
        assert_eq!((s.trials, s.completed, s.diverged), (2, 1, 1));
        assert_eq!(s.final_median(), Some(0.5));
    }

    #[test]
    fn budgets_and_thresholds() {
        let s = TrialSummary::from_histories("t", &[hist(&[(1, 8.0), (3, 4.0), (5, 2.0)])]);
        assert_eq!(s.median_at_budget(4), Some(2.0));
        assert_eq!(s.median_at_budget(0), None);
        assert_eq!(s.evals_to_threshold(2.0), Some(3));
        assert_eq!(s.threshold_table(&[0.1]), vec![(0.1, None)]);
    }

    #[test]
    fn staggered_grids_carry_values_forward() {
        let a = hist(&[(1, 4.0), (3, 2.0)]);
        let b = hist(&[(2, 6.0), (4, 0.0)]);
        let s = TrialSummary::from_histories("t", &[a, b]);
        let evals: Vec<u64> = s.rows.iter().map(|r| r.evals).collect();
        assert_eq!(evals, vec![1, 2, 3, 4]);
        // at 1 only trial a has started
        assert_eq!(s.rows[0].fhat.median, 4.0);
        assert_eq!(s.rows[1].fhat.median, 5.0);
        assert_eq!(s.rows[3].fhat.median, 1.0);
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered(v in proptest::collection::vec(-1e6f64..1e6, 1..60)) {
            let q = quartiles(&v).unwrap();
            prop_assert!(q.q25 <= q.median && q.median <= q.q75);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= q.q25 && q.q75 <= hi);
        }
    }
}
