//! Unoptimized reference: every quantity is recomputed where it is used.

use super::{select_peers, AnswerMatrix, Mean, MechanismError, PeerMode};
use crate::gas_model::OpTally;
use crate::scalar::Scalar;

/// Scans the whole column for answerers of `q`.
fn scan_answerers(matrix: &AnswerMatrix, q: usize, ops: &mut OpTally) -> Vec<usize> {
    let n = matrix.agents().len() as u64;
    ops.mem(n);
    ops.cmp(n);
    matrix.answerers(q)
}

/// Shared driver: `score(i, q, y, p)` per peer, averaged per question, then
/// per agent.
fn per_peer<S, F>(matrix: &AnswerMatrix, mode: &PeerMode, ops: &mut OpTally, mut score: F) -> Result<Vec<S>, MechanismError>
where
    S: Scalar,
    F: FnMut(usize, usize, bool, usize, &mut OpTally) -> Result<S, MechanismError>,
{
    let mut out = Vec::with_capacity(matrix.agents().len());
    for i in 0..matrix.agents().len() {
        let mut mean = Mean::new();
        for (q, y) in matrix.row(i) {
            ops.mem(1);
            let answerers = scan_answerers(matrix, q, ops);
            let peers = select_peers(matrix, i, q, &answerers, mode, ops)?;
            if peers.is_empty() {
                continue;
            }
            let mut sum = S::zero();
            for &p in &peers {
                sum = sum + score(i, q, y, p, ops)?;
            }
            ops.arith(1);
            mean.push(sum / S::from_count(peers.len()));
        }
        ops.arith(1);
        out.push(mean.finish());
    }
    Ok(out)
}

fn indicator<S: Scalar>(matrix: &AnswerMatrix, p: usize, q: usize, y: bool, ops: &mut OpTally) -> S {
    ops.mem(1);
    ops.cmp(1);
    ops.arith(1);
    if matrix.at(p, q) == Some(y) {
        S::one()
    } else {
        S::zero()
    }
}

pub(super) fn oa<S: Scalar>(matrix: &AnswerMatrix, mode: &PeerMode, ops: &mut OpTally) -> Result<Vec<S>, MechanismError> {
    per_peer(matrix, mode, ops, |_, q, y, p, ops| Ok(indicator(matrix, p, q, y, ops)))
}

/// `num_i(y)` and the total, by scanning every other agent's answers.
fn count_excluding(matrix: &AnswerMatrix, i: usize, ops: &mut OpTally) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for a in (0..matrix.agents().len()).filter(|&a| a != i) {
        for (_, b) in matrix.row(a) {
            ops.mem(1);
            ops.cmp(1);
            ops.arith(1);
            counts[b as usize] += 1;
        }
    }
    counts
}

pub(super) fn ptsc<S: Scalar>(
    matrix: &AnswerMatrix,
    alpha: &S,
    mode: &PeerMode,
    ops: &mut OpTally,
) -> Result<Vec<S>, MechanismError> {
    let mut current: Option<(usize, [u64; 2])> = None;
    per_peer(matrix, mode, ops, |i, q, y, p, ops| {
        let counts = match current {
            Some((agent, counts)) if agent == i => counts,
            _ => {
                let counts = count_excluding(matrix, i, ops);
                current = Some((i, counts));
                counts
            }
        };
        let num = counts[y as usize];
        let den = counts[0] + counts[1];
        ops.cmp(1);
        if num == 0 {
            return Ok(S::zero());
        }
        let matched: S = indicator(matrix, p, q, y, ops);
        ops.arith(3);
        let inverse_freq = S::ratio(den as i64, num as i64);
        Ok(alpha.clone() * (matched * inverse_freq - S::one()))
    })
}

pub(super) fn dg<S: Scalar>(matrix: &AnswerMatrix, mode: &PeerMode, ops: &mut OpTally) -> Result<Vec<S>, MechanismError> {
    per_peer(matrix, mode, ops, |i, q, y, p, ops| {
        let only = |a: usize, b: usize, ops: &mut OpTally| -> Vec<bool> {
            matrix
                .row(a)
                .filter(|&(qq, _)| {
                    ops.mem(1);
                    ops.cmp(1);
                    matrix.at(b, qq).is_none()
                })
                .map(|(_, v)| v)
                .collect()
        };
        let mine = only(i, p, ops);
        let theirs = only(p, i, ops);
        if mine.is_empty() || theirs.is_empty() {
            return Err(MechanismError::NoNonCommonQuestions {
                agent: matrix.agents()[i],
                peer: matrix.agents()[p],
            });
        }
        let mut agree = 0i64;
        for &a in &mine {
            for &b in &theirs {
                ops.mem(2);
                ops.cmp(1);
                ops.arith(1);
                agree += (a == b) as i64;
            }
        }
        ops.arith(2);
        let penalty = S::ratio(agree, (mine.len() * theirs.len()) as i64);
        Ok(indicator::<S>(matrix, p, q, y, ops) - penalty)
    })
}
