use super::AnswerMatrix;

/// Answer counts per agent and overall.
///
/// This is the intermediary state that lets PTSC compute every `R_i(y)` in a
/// single pass over the answers: the frequency excluding agent `i` is the
/// global count minus her own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    per_agent: Vec<[u64; 2]>,
    global: [u64; 2],
}

impl FrequencyTable {
    pub fn build(matrix: &AnswerMatrix) -> Self {
        let per_agent: Vec<[u64; 2]> = (0..matrix.agents().len())
            .map(|i| {
                matrix.row(i).fold([0u64; 2], |mut acc, (_, b)| {
                    acc[b as usize] += 1;
                    acc
                })
            })
            .collect();
        let global = per_agent
            .iter()
            .fold([0u64; 2], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
        Self { per_agent, global }
    }

    /// `(zeros, ones)` among the answers of the agent at `agent`.
    pub fn agent_counts(&self, agent: usize) -> [u64; 2] {
        self.per_agent[agent]
    }

    pub fn global_counts(&self) -> [u64; 2] {
        self.global
    }

    /// `num_i(y)` and `num_i(0) + num_i(1)`, both excluding agent `i`.
    pub fn excluding(&self, agent: usize, answer: bool) -> (u64, u64) {
        let own = self.per_agent[agent];
        let num = self.global[answer as usize] - own[answer as usize];
        let den = self.global[0] + self.global[1] - own[0] - own[1];
        (num, den)
    }
}
