use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::SimError;
use crate::mechanisms::{AgentId, AnswerMatrix, QuestionId};

/// Encodes a missing measurement in dataset files.
pub const MISSING: f64 = -1.0;

const DESK_SEED: u64 = 2019;

/// Response times in seconds, one row per agent and one column per service.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSDataset {
    rows: usize,
    cols: usize,
    values: Vec<Option<f64>>,
}

impl QoSDataset {
    pub fn new(rows: usize, cols: usize, values: Vec<Option<f64>>) -> Result<Self, SimError> {
        if rows == 0 || cols == 0 {
            return Err(SimError::EmptyDataset);
        }
        if values.len() != rows * cols {
            return Err(SimError::Parse(format!("expected {} values, got {}", rows * cols, values.len())));
        }
        if let Some(v) = values.iter().flatten().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(SimError::Parse(format!("invalid response time {v}")));
        }
        Ok(Self { rows, cols, values })
    }

    /// Whitespace- or comma-separated rows; `-1` marks a missing value.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cols = None;
        let mut rows = 0;
        let mut values = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            if fields.is_empty() {
                continue;
            }
            match cols {
                None => cols = Some(fields.len()),
                Some(c) if c != fields.len() => {
                    return Err(SimError::Parse(format!("line {}: {} columns, expected {c}", n + 1, fields.len())))
                }
                _ => {}
            }
            for f in fields {
                let v: f64 = f.parse().map_err(|_| SimError::Parse(format!("line {}: bad number `{f}`", n + 1)))?;
                values.push(if v == MISSING { None } else { Some(v) });
            }
            rows += 1;
        }
        Self::new(rows, cols.unwrap_or(0), values)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| match self.get(r, c) {
                    Some(v) => format!("{v}"),
                    None => "-1".into(),
                })
                .collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.cols + col]
    }

    /// Top-left `rows × cols` corner, clamped to the dataset's size.
    pub fn corner(&self, rows: usize, cols: usize) -> Self {
        let (rows, cols) = (rows.min(self.rows).max(1), cols.min(self.cols).max(1));
        let values = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| self.get(r, c)).collect();
        Self { rows, cols, values }
    }

    /// The 50 × 50 synthetic matrix used for desk-scale experiments, with
    /// about half the cells missing.
    pub fn desk() -> Self {
        Self::synthetic(50, 50, 0.5, DESK_SEED).expect("valid parameters")
    }

    /// Synthetic stand-in for a response-time matrix: each service is fast or
    /// slow, each agent sees it through multiplicative log-normal noise, and
    /// each cell is missing with probability `missing`.
    pub fn synthetic(rows: usize, cols: usize, missing: f64, seed: u64) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = LogNormal::new(0.0, 0.5).expect("valid parameters");
        let base: Vec<f64> = (0..cols)
            .map(|_| {
                if rng.random::<f64>() < 0.6 {
                    rng.random_range(0.1..0.9)
                } else {
                    rng.random_range(1.2..5.0)
                }
            })
            .collect();
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            for b in &base {
                let v = b * noise.sample(&mut rng);
                values.push((rng.random::<f64>() >= missing).then_some(v));
            }
        }
        Self::new(rows, cols, values)
    }
}

/// Agent ids `a0..`, question ids `q0..` for dataset rows and columns.
pub fn row_agent(row: usize) -> AgentId {
    AgentId(row as u32)
}

pub fn col_question(col: usize) -> QuestionId {
    QuestionId(col as u32)
}

/// Ground truth: a response time of at most `threshold` seconds is good (1),
/// anything slower is bad (0), missing cells stay unanswered.
pub fn binarize(dataset: &QoSDataset, threshold: f64) -> Result<AnswerMatrix, SimError> {
    if !(threshold > 0.0) {
        return Err(SimError::InvalidConfig(format!("threshold {threshold} must be positive")));
    }
    let agents = (0..dataset.rows()).map(row_agent).collect();
    let questions = (0..dataset.cols()).map(col_question).collect();
    let mut m = AnswerMatrix::new(agents, questions).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    for r in 0..dataset.rows() {
        for c in 0..dataset.cols() {
            if let Some(v) = dataset.get(r, c) {
                m.set(row_agent(r), col_question(c), v <= threshold)
                    .expect("ids come from the matrix");
            }
        }
    }
    Ok(m)
}
