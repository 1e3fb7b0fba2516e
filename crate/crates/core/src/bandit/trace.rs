use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::matcore::DSubset;

use super::elim::StageState;

pub const TRACE_CSV_HEADER: &str = "step,row_subset,col_subset,reward,inst_regret,cum_regret";

/// Which side of the matrix a `d`-subset indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

/// One budget unit: an observed `d x d` submatrix, or one pull for UCB1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// One-based step index.
    pub step: u64,
    /// Index into [`RegretTrace::row_subsets`].
    pub row: u32,
    /// Index into [`RegretTrace::col_subsets`].
    pub col: u32,
    /// Realized reward of the best entry of the played submatrix.
    pub reward: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub stage: usize,
    pub side: Side,
    pub subset: DSubset,
    pub eliminator: DSubset,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub horizon: u64,
    pub row_subsets: Vec<DSubset>,
    pub col_subsets: Vec<DSubset>,
    /// Empty when step recording was disabled.
    pub steps: Vec<StepRecord>,
    pub cumulative_regret: f64,
    pub eliminations: Vec<Elimination>,
    pub stages: Vec<StageState>,
    pub observations_used: u64,
    pub completed_stages: usize,
    /// The budget ran out before the first stage finished, so nothing was
    /// ever estimated.
    pub budget_exhausted_in_first_stage: bool,
    /// Step after which only the surviving pair was played.
    pub converged_at: Option<u64>,
    pub final_rows: Vec<DSubset>,
    pub final_cols: Vec<DSubset>,
}

impl RegretTrace {
    pub(crate) fn new(horizon: u64, row_subsets: Vec<DSubset>, col_subsets: Vec<DSubset>) -> Self {
        Self {
            horizon,
            row_subsets,
            col_subsets,
            steps: Vec::new(),
            cumulative_regret: 0.0,
            eliminations: Vec::new(),
            stages: Vec::new(),
            observations_used: 0,
            completed_stages: 0,
            budget_exhausted_in_first_stage: false,
            converged_at: None,
            final_rows: Vec::new(),
            final_cols: Vec::new(),
        }
    }

    pub fn row_subset(&self, s: &StepRecord) -> &DSubset {
        &self.row_subsets[s.row as usize]
    }

    pub fn col_subset(&self, s: &StepRecord) -> &DSubset {
        &self.col_subsets[s.col as usize]
    }

    /// Running sum of step regrets, one entry per recorded step.
    pub fn cumulative_curve(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s.regret;
                Some(*acc)
            })
            .collect()
    }

    /// Whether both sides ended with a single surviving subset.
    pub fn converged(&self) -> bool {
        self.final_rows.len() == 1 && self.final_cols.len() == 1
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        let mut cum = 0.0;
        for s in &self.steps {
            cum += s.regret;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.step,
                self.row_subset(s),
                self.col_subset(s),
                s.reward,
                s.regret,
                cum
            )?;
        }
        Ok(())
    }

    /// Elimination log, one JSON object per line.
    pub fn write_eliminations_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.eliminations {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }
}
