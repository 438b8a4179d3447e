use std::collections::BTreeMap;

use super::{select_peers, AnswerMatrix, FrequencyTable, Mean, MechanismError, PeerMode};
use crate::gas_model::OpTally;
use crate::scalar::Scalar;

/// Answerer lists and per-question `(zeros, ones)` built in one pass.
struct Columns {
    answerers: Vec<Vec<usize>>,
    counts: Vec<[i64; 2]>,
}

impl Columns {
    fn build(matrix: &AnswerMatrix, ops: &mut OpTally) -> Self {
        let nq = matrix.questions().len();
        let mut answerers = vec![Vec::new(); nq];
        let mut counts = vec![[0i64; 2]; nq];
        for i in 0..matrix.agents().len() {
            for (q, y) in matrix.row(i) {
                answerers[q].push(i);
                counts[q][y as usize] += 1;
                ops.mem(1);
                ops.arith(1);
            }
        }
        Self { answerers, counts }
    }
}

/// Number of `peers` whose answer on `q` equals `y`.
fn count_matches(matrix: &AnswerMatrix, q: usize, y: bool, peers: &[usize], ops: &mut OpTally) -> i64 {
    peers
        .iter()
        .filter(|&&p| {
            ops.mem(1);
            ops.cmp(1);
            ops.arith(1);
            matrix.at(p, q) == Some(y)
        })
        .count() as i64
}

/// `(matches, peers)` for one cell; the all-peers case reads the column count.
fn agreement(
    matrix: &AnswerMatrix,
    cols: &Columns,
    i: usize,
    q: usize,
    y: bool,
    mode: &PeerMode,
    ops: &mut OpTally,
) -> Result<(i64, i64), MechanismError> {
    match mode {
        PeerMode::AllPeers => {
            let peers = cols.answerers[q].len() as i64 - 1;
            ops.mem(2);
            ops.arith(2);
            ops.cmp(1);
            Ok((cols.counts[q][y as usize] - 1, peers))
        }
        PeerMode::Sampled { .. } => {
            let peers = select_peers(matrix, i, q, &cols.answerers[q], mode, ops)?;
            let matches = count_matches(matrix, q, y, &peers, ops);
            Ok((matches, peers.len() as i64))
        }
    }
}

pub(super) fn oa<S: Scalar>(matrix: &AnswerMatrix, mode: &PeerMode, ops: &mut OpTally) -> Result<Vec<S>, MechanismError> {
    let cols = Columns::build(matrix, ops);
    (0..matrix.agents().len())
        .map(|i| {
            let mut mean = Mean::new();
            for (q, y) in matrix.row(i) {
                ops.mem(1);
                let (matches, peers) = agreement(matrix, &cols, i, q, y, mode, ops)?;
                if peers == 0 {
                    continue;
                }
                ops.arith(2);
                mean.push(S::ratio(matches, peers));
            }
            ops.arith(1);
            Ok(mean.finish())
        })
        .collect()
}

pub(super) fn ptsc<S: Scalar>(
    matrix: &AnswerMatrix,
    alpha: &S,
    mode: &PeerMode,
    ops: &mut OpTally,
) -> Result<Vec<S>, MechanismError> {
    let cols = Columns::build(matrix, ops);
    let table = FrequencyTable::build(matrix);
    let answers = matrix.answer_count() as u64;
    ops.mem(2 * answers);
    ops.arith(2 * answers);

    (0..matrix.agents().len())
        .map(|i| {
            // R_i(0), R_i(1) from the table
            ops.mem(4);
            ops.arith(4);
            ops.cmp(1);
            let mut mean = Mean::new();
            for (q, y) in matrix.row(i) {
                ops.mem(1);
                let (matches, peers) = agreement(matrix, &cols, i, q, y, mode, ops)?;
                if peers == 0 {
                    continue;
                }
                let (num, den) = table.excluding(i, y);
                ops.cmp(1);
                let score = if num == 0 {
                    S::zero()
                } else {
                    ops.arith(5);
                    let (num, den) = (num as i64, den as i64);
                    alpha.clone() * S::ratio(matches * den - peers * num, peers * num)
                };
                mean.push(score);
            }
            ops.arith(1);
            Ok(mean.finish())
        })
        .collect()
}

/// Cached `penalty(i, p)` as `(agreeing pairs, total pairs)`; symmetric in
/// `(i, p)`.
struct PenaltyCache {
    own: Vec<[u64; 2]>,
    answered: Vec<Vec<bool>>,
    cache: BTreeMap<(usize, usize), (i64, i64)>,
}

impl PenaltyCache {
    fn new(matrix: &AnswerMatrix, ops: &mut OpTally) -> Self {
        let table = FrequencyTable::build(matrix);
        let n = matrix.agents().len();
        let nq = matrix.questions().len();
        let mut answered = vec![vec![false; nq]; n];
        for (i, row) in answered.iter_mut().enumerate() {
            for (q, _) in matrix.row(i) {
                row[q] = true;
            }
        }
        let answers = matrix.answer_count() as u64;
        ops.mem(2 * answers);
        ops.arith(answers);
        Self { own: (0..n).map(|i| table.agent_counts(i)).collect(), answered, cache: BTreeMap::new() }
    }

    fn penalty(&mut self, matrix: &AnswerMatrix, i: usize, p: usize, ops: &mut OpTally) -> Result<(i64, i64), MechanismError> {
        let key = (i.min(p), i.max(p));
        ops.mem(1);
        if let Some(&hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let (mut common_i, mut common_p) = ([0u64; 2], [0u64; 2]);
        for (q, y) in matrix.row(i) {
            ops.cmp(1);
            ops.mem(1);
            if self.answered[p][q] {
                ops.mem(2);
                ops.arith(2);
                common_i[y as usize] += 1;
                let yp = matrix.at(p, q).expect("answered");
                common_p[yp as usize] += 1;
            }
        }
        let a = [self.own[i][0] - common_i[0], self.own[i][1] - common_i[1]];
        let b = [self.own[p][0] - common_p[0], self.own[p][1] - common_p[1]];
        ops.arith(4);
        ops.cmp(2);
        if a[0] + a[1] == 0 || b[0] + b[1] == 0 {
            return Err(MechanismError::NoNonCommonQuestions {
                agent: matrix.agents()[i],
                peer: matrix.agents()[p],
            });
        }
        ops.arith(6);
        let value = ((a[0] * b[0] + a[1] * b[1]) as i64, ((a[0] + a[1]) * (b[0] + b[1])) as i64);
        self.cache.insert(key, value);
        Ok(value)
    }
}

pub(super) fn dg<S: Scalar>(matrix: &AnswerMatrix, mode: &PeerMode, ops: &mut OpTally) -> Result<Vec<S>, MechanismError> {
    let cols = Columns::build(matrix, ops);
    let mut penalties = PenaltyCache::new(matrix, ops);
    (0..matrix.agents().len())
        .map(|i| {
            let mut mean = Mean::new();
            for (q, y) in matrix.row(i) {
                ops.mem(1);
                let peers = select_peers(matrix, i, q, &cols.answerers[q], mode, ops)?;
                if peers.is_empty() {
                    continue;
                }
                let mut sum = S::zero();
                for &p in &peers {
                    let (agree, pairs) = penalties.penalty(matrix, i, p, ops)?;
                    ops.mem(1);
                    ops.cmp(1);
                    ops.arith(2);
                    let matched = (matrix.at(p, q) == Some(y)) as i64;
                    sum = sum + S::ratio(matched * pairs - agree, pairs);
                }
                ops.arith(1);
                mean.push(sum / S::from_count(peers.len()));
            }
            ops.arith(1);
            Ok(mean.finish())
        })
        .collect()
}
