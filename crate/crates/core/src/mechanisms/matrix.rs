use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let digits = s.strip_prefix($prefix).unwrap_or(s);
                digits
                    .parse()
                    .map($name)
                    .map_err(|_| format!(concat!("invalid ", stringify!($name), " `{}`"), s))
            }
        }
    };
}

id_type!(AgentId, "a");
id_type!(QuestionId, "q");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("agent {0} registered twice")]
    DuplicateAgent(AgentId),
    #[error("question {0} registered twice")]
    DuplicateQuestion(QuestionId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown question {0}")]
    UnknownQuestion(QuestionId),
    #[error("agent {0} already answered {1}")]
    AlreadyAnswered(AgentId, QuestionId),
    #[error("bad grid: {0}")]
    BadGrid(String),
}

/// Sparse agent × question matrix of binary reports.
///
/// A missing cell means the agent did not answer (or did not select) the
/// question. Agents and questions keep their registration order, which is
/// the iteration order of every reward computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerMatrix {
    agents: Vec<AgentId>,
    questions: Vec<QuestionId>,
    agent_index: BTreeMap<AgentId, usize>,
    question_index: BTreeMap<QuestionId, usize>,
    cells: Vec<Option<bool>>,
}

impl AnswerMatrix {
    pub fn new(agents: Vec<AgentId>, questions: Vec<QuestionId>) -> Result<Self, MatrixError> {
        let mut agent_index = BTreeMap::new();
        for (i, &a) in agents.iter().enumerate() {
            if agent_index.insert(a, i).is_some() {
                return Err(MatrixError::DuplicateAgent(a));
            }
        }
        let mut question_index = BTreeMap::new();
        for (j, &q) in questions.iter().enumerate() {
            if question_index.insert(q, j).is_some() {
                return Err(MatrixError::DuplicateQuestion(q));
            }
        }
        let cells = vec![None; agents.len() * questions.len()];
        Ok(Self { agents, questions, agent_index, question_index, cells })
    }

    /// Builds a matrix from rows of `0`, `1` and `.` (unanswered); agents are
    /// `a0..`, questions `q0..`. Whitespace is ignored.
    pub fn from_grid(rows: &[&str]) -> Result<Self, MatrixError> {
        let parsed: Vec<Vec<Option<bool>>> = rows
            .iter()
            .map(|row| {
                row.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(Some(false)),
                        '1' => Ok(Some(true)),
                        '.' => Ok(None),
                        other => Err(MatrixError::BadGrid(format!("unexpected `{other}`"))),
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let width = parsed.first().map_or(0, Vec::len);
        if parsed.iter().any(|r| r.len() != width) {
            return Err(MatrixError::BadGrid("ragged rows".into()));
        }
        let mut m = Self::new(
            (0..parsed.len() as u32).map(AgentId).collect(),
            (0..width as u32).map(QuestionId).collect(),
        )?;
        for (i, row) in parsed.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                m.cells[i * width + j] = *cell;
            }
        }
        Ok(m)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn questions(&self) -> &[QuestionId] {
        &self.questions
    }

    pub fn agent_position(&self, agent: AgentId) -> Option<usize> {
        self.agent_index.get(&agent).copied()
    }

    pub fn question_position(&self, question: QuestionId) -> Option<usize> {
        self.question_index.get(&question).copied()
    }

    pub fn set(&mut self, agent: AgentId, question: QuestionId, answer: bool) -> Result<(), MatrixError> {
        let i = self.agent_position(agent).ok_or(MatrixError::UnknownAgent(agent))?;
        let j = self.question_position(question).ok_or(MatrixError::UnknownQuestion(question))?;
        let cell = &mut self.cells[i * self.questions.len() + j];
        if cell.is_some() {
            return Err(MatrixError::AlreadyAnswered(agent, question));
        }
        *cell = Some(answer);
        Ok(())
    }

    pub fn get(&self, agent: AgentId, question: QuestionId) -> Option<bool> {
        let i = self.agent_position(agent)?;
        let j = self.question_position(question)?;
        self.at(i, j)
    }

    /// Cell by positions.
    pub fn at(&self, agent: usize, question: usize) -> Option<bool> {
        self.cells[agent * self.questions.len() + question]
    }

    pub fn answer_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.answer_count() == 0
    }

    /// `(question position, answer)` for every answer of `agent`.
    pub fn row(&self, agent: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        let width = self.questions.len();
        self.cells[agent * width..(agent + 1) * width]
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|b| (j, b)))
    }

    /// Positions of agents who answered `question`, in agent order.
    pub fn answerers(&self, question: usize) -> Vec<usize> {
        (0..self.agents.len()).filter(|&i| self.at(i, question).is_some()).collect()
    }

    /// Every answered cell as `(agent, question, answer)`.
    pub fn cells(&self) -> impl Iterator<Item = (AgentId, QuestionId, bool)> + '_ {
        (0..self.agents.len())
            .flat_map(move |i| self.row(i).map(move |(j, b)| (self.agents[i], self.questions[j], b)))
    }
}
