//! Bit-packed answer commitments.
//!
//! A hash with a 256-bit output can bind a message of at most 85 bits
//! (a third of the output), and every answer needs two bits, so one
//! commitment carries at most 42 answers.
//!
//! Canonical byte layout (22 bytes, little-endian bit numbering where bit 0
//! is the least significant bit of byte 0):
//!
//! | bits      | content                                   |
//! |-----------|-------------------------------------------|
//! | 0..=84    | secret key `S`                            |
//! | 85 + 2j   | slot `j` answered flag                    |
//! | 86 + 2j   | slot `j` answer bit                       |
//! | 169..=175 | zero padding (bit 169 is the unused 85th message bit) |
//!
//! The digest is the original (pre-SHA-3) Keccak-256 of those 22 bytes.

use std::collections::BTreeSet;
use std::fmt;

use rand::{CryptoRng, Rng};
use sha3::{Digest, Keccak256};
use thiserror::Error;

use crate::mechanisms::QuestionId;

/// Output size of the hash in bits.
pub const HASH_BITS: usize = 256;
/// Largest message (and key) length the hash binds: `floor(256 / 3)`.
pub const MESSAGE_BITS: usize = HASH_BITS / 3;
/// Two bits per answer.
pub const BITS_PER_ANSWER: usize = 2;
/// Answers that fit in one commitment: `floor(85 / 2)`.
pub const MAX_ANSWERS: usize = MESSAGE_BITS / BITS_PER_ANSWER;
/// Length of the key-then-message byte layout.
pub const LAYOUT_BYTES: usize = (2 * MESSAGE_BITS).div_ceil(8);

const KEY_MASK: u128 = (1u128 << MESSAGE_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitmentError {
    #[error("{count} answers exceed the {MAX_ANSWERS}-answer capacity of one commitment")]
    TooManyAnswers { count: usize },
    #[error("question {0} is not in the slot order")]
    UnknownQuestion(QuestionId),
    #[error("question {0} appears twice")]
    DuplicateQuestion(QuestionId),
    #[error("secret key has bits set above bit {}", MESSAGE_BITS - 1)]
    KeyTooWide,
    #[error("slot {0} has an answer bit without the answered flag")]
    MalformedSlot(usize),
    #[error("nonzero bits beyond the {slots} used slots")]
    TrailingBits { slots: usize },
    #[error("layout must be {LAYOUT_BYTES} bytes, got {0}")]
    LayoutLength(usize),
}

pub fn keccak256(bytes: &[u8]) -> [u8; 32] {
    Keccak256::digest(bytes).into()
}

/// One two-bit slot of a packed vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Slot {
    pub answered: bool,
    pub answer: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedAnswerVector {
    slots: Vec<Slot>,
    question_order: Vec<QuestionId>,
}

impl PackedAnswerVector {
    /// Packs `answers` against the slot order `question_order`.
    pub fn pack(
        answers: &[(QuestionId, bool)],
        question_order: &[QuestionId],
    ) -> Result<Self, CommitmentError> {
        if answers.len() > MAX_ANSWERS {
            return Err(CommitmentError::TooManyAnswers { count: answers.len() });
        }
        if question_order.len() > MAX_ANSWERS {
            return Err(CommitmentError::TooManyAnswers { count: question_order.len() });
        }
        check_distinct(question_order)?;
        let mut slots = vec![Slot::default(); question_order.len()];
        for &(question, answer) in answers {
            let j = question_order
                .iter()
                .position(|&q| q == question)
                .ok_or(CommitmentError::UnknownQuestion(question))?;
            if slots[j].answered {
                return Err(CommitmentError::DuplicateQuestion(question));
            }
            slots[j] = Slot { answered: true, answer };
        }
        Ok(Self { slots, question_order: question_order.to_vec() })
    }

    /// Rebuilds a vector from its message bits.
    pub fn from_message(message: u128, question_order: &[QuestionId]) -> Result<Self, CommitmentError> {
        if question_order.len() > MAX_ANSWERS {
            return Err(CommitmentError::TooManyAnswers { count: question_order.len() });
        }
        check_distinct(question_order)?;
        let used = BITS_PER_ANSWER * question_order.len();
        if message >> used != 0 {
            return Err(CommitmentError::TrailingBits { slots: question_order.len() });
        }
        let slots = (0..question_order.len())
            .map(|j| {
                let answered = message >> (2 * j) & 1 == 1;
                let answer = message >> (2 * j + 1) & 1 == 1;
                if answer && !answered {
                    Err(CommitmentError::MalformedSlot(j))
                } else {
                    Ok(Slot { answered, answer })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { slots, question_order: question_order.to_vec() })
    }

    /// The message `m`: slot `j` at bits `2j` (answered) and `2j + 1` (answer).
    pub fn message(&self) -> u128 {
        self.slots.iter().enumerate().fold(0u128, |acc, (j, slot)| {
            acc | (slot.answered as u128) << (2 * j) | (slot.answer as u128) << (2 * j + 1)
        })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn question_order(&self) -> &[QuestionId] {
        &self.question_order
    }

    /// Answered `(question, bit)` pairs in slot order.
    pub fn answers(&self) -> impl Iterator<Item = (QuestionId, bool)> + '_ {
        self.question_order
            .iter()
            .zip(&self.slots)
            .filter(|(_, s)| s.answered)
            .map(|(&q, s)| (q, s.answer))
    }

    pub fn answer_count(&self) -> usize {
        self.slots.iter().filter(|s| s.answered).count()
    }

    /// Copy with the answer bit of slot `j` inverted (marks the slot answered).
    pub fn with_flipped_answer(&self, j: usize) -> Self {
        let mut out = self.clone();
        let slot = &mut out.slots[j];
        slot.answered = true;
        slot.answer = !slot.answer;
        out
    }
}

fn check_distinct(order: &[QuestionId]) -> Result<(), CommitmentError> {
    let mut seen = BTreeSet::new();
    for &q in order {
        if !seen.insert(q) {
            return Err(CommitmentError::DuplicateQuestion(q));
        }
    }
    Ok(())
}

/// The 85-bit blinding key `S`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretKey(u128);

impl SecretKey {
    pub fn from_bits(bits: u128) -> Result<Self, CommitmentError> {
        if bits & !KEY_MASK != 0 {
            return Err(CommitmentError::KeyTooWide);
        }
        Ok(Self(bits))
    }

    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random::<u128>() & KEY_MASK)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// Copy with key bit `i` inverted.
    pub fn with_flipped_bit(self, i: usize) -> Self {
        assert!(i < MESSAGE_BITS);
        Self(self.0 ^ (1u128 << i))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commitment(pub [u8; 32]);

impl Commitment {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", self.to_hex())
    }
}

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn set_bit(bytes: &mut [u8], bit: usize, value: bool) {
    if value {
        bytes[bit / 8] |= 1 << (bit % 8);
    }
}

fn get_bit(bytes: &[u8], bit: usize) -> bool {
    bytes[bit / 8] >> (bit % 8) & 1 == 1
}

/// Serializes `(S, m)` into the canonical 22-byte layout.
pub fn layout(vector: &PackedAnswerVector, key: SecretKey) -> [u8; LAYOUT_BYTES] {
    let mut bytes = [0u8; LAYOUT_BYTES];
    for i in 0..MESSAGE_BITS {
        set_bit(&mut bytes, i, key.0 >> i & 1 == 1);
    }
    let message = vector.message();
    for i in 0..BITS_PER_ANSWER * MAX_ANSWERS {
        set_bit(&mut bytes, MESSAGE_BITS + i, message >> i & 1 == 1);
    }
    bytes
}

/// Inverse of [`layout`] given the slot order the message was packed with.
pub fn parse_layout(
    bytes: &[u8],
    question_order: &[QuestionId],
) -> Result<(PackedAnswerVector, SecretKey), CommitmentError> {
    if bytes.len() != LAYOUT_BYTES {
        return Err(CommitmentError::LayoutLength(bytes.len()));
    }
    let key = (0..MESSAGE_BITS).fold(0u128, |acc, i| acc | (get_bit(bytes, i) as u128) << i);
    let message = (0..BITS_PER_ANSWER * MAX_ANSWERS)
        .fold(0u128, |acc, i| acc | (get_bit(bytes, MESSAGE_BITS + i) as u128) << i);
    if (BITS_PER_ANSWER * MAX_ANSWERS + MESSAGE_BITS..LAYOUT_BYTES * 8).any(|b| get_bit(bytes, b)) {
        return Err(CommitmentError::TrailingBits { slots: question_order.len() });
    }
    let vector = PackedAnswerVector::from_message(message, question_order)?;
    Ok((vector, SecretKey(key)))
}

pub fn commit(vector: &PackedAnswerVector, key: SecretKey) -> Commitment {
    Commitment(keccak256(&layout(vector, key)))
}

pub fn verify_reveal(commitment: &Commitment, vector: &PackedAnswerVector, key: SecretKey) -> bool {
    commit(vector, key) == *commitment
}

/// Parses a golden-vector file: one `layout_hex digest_hex` pair per line,
/// `#` comments and blank lines ignored.
pub fn parse_golden_vectors(text: &str) -> Result<Vec<(Vec<u8>, [u8; 32])>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(n, line)| {
            let mut parts = line.split_whitespace();
            let (Some(layout_hex), Some(digest_hex), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(format!("line {}: expected two hex fields", n + 1));
            };
            let layout = hex::decode(layout_hex).map_err(|e| format!("line {}: {e}", n + 1))?;
            let digest: [u8; 32] = hex::decode(digest_hex)
                .map_err(|e| format!("line {}: {e}", n + 1))?
                .try_into()
                .map_err(|_| format!("line {}: digest must be 32 bytes", n + 1))?;
            Ok((layout, digest))
        })
        .collect()
}

/// Renders golden vectors in the format read by [`parse_golden_vectors`].
pub fn write_golden_vectors(pairs: &[([u8; LAYOUT_BYTES], Commitment)]) -> String {
    pairs
        .iter()
        .map(|(layout, c)| format!("{} {}\n", hex::encode(layout), c.to_hex()))
        .collect()
}
