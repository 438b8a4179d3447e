//! Event-log wire format.
//!
//! One event per line: `block_number, event_type, party, payload_hex`.
//! Payloads are big-endian:
//!
//! | event_type         | party     | payload                                              |
//! |--------------------|-----------|------------------------------------------------------|
//! | `post_questions`   | requester | budget u128, deposit u128, count u32, question u32…  |
//! | `select_questions` | agent     | deposit u128, count u32, question u32…               |
//! | `close_selection`  | requester | empty                                                |
//! | `commit`           | agent     | batch u32, digest 32 bytes                           |
//! | `advance`          | chain     | blocks u64                                           |
//! | `reveal`           | agent     | batch u32, 22-byte key-and-answers layout            |
//! | `settle`           | requester | empty                                                |

use super::LedgerError;
use crate::commitment::{Commitment, LAYOUT_BYTES};
use crate::mechanisms::{AgentId, QuestionId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    PostQuestions { questions: Vec<QuestionId>, budget: u128, requester_deposit: u128 },
    SelectQuestions { agent: AgentId, questions: Vec<QuestionId>, deposit: u128 },
    CloseSelection,
    SubmitCommitment { agent: AgentId, batch: u32, commitment: Commitment },
    AdvanceBlocks { blocks: u64 },
    Reveal { agent: AgentId, batch: u32, layout: [u8; LAYOUT_BYTES] },
    Settle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedEvent {
    pub block: u64,
    pub event: Event,
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::PostQuestions { .. } => "post_questions",
            Event::SelectQuestions { .. } => "select_questions",
            Event::CloseSelection => "close_selection",
            Event::SubmitCommitment { .. } => "commit",
            Event::AdvanceBlocks { .. } => "advance",
            Event::Reveal { .. } => "reveal",
            Event::Settle => "settle",
        }
    }

    pub fn party(&self) -> String {
        match self {
            Event::SelectQuestions { agent, .. }
            | Event::SubmitCommitment { agent, .. }
            | Event::Reveal { agent, .. } => agent.to_string(),
            Event::AdvanceBlocks { .. } => "chain".into(),
            _ => "requester".into(),
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let ids = |out: &mut Vec<u8>, qs: &[QuestionId]| {
            out.extend_from_slice(&(qs.len() as u32).to_be_bytes());
            for q in qs {
                out.extend_from_slice(&q.0.to_be_bytes());
            }
        };
        match self {
            Event::PostQuestions { questions, budget, requester_deposit } => {
                out.extend_from_slice(&budget.to_be_bytes());
                out.extend_from_slice(&requester_deposit.to_be_bytes());
                ids(&mut out, questions);
            }
            Event::SelectQuestions { questions, deposit, .. } => {
                out.extend_from_slice(&deposit.to_be_bytes());
                ids(&mut out, questions);
            }
            Event::SubmitCommitment { batch, commitment, .. } => {
                out.extend_from_slice(&batch.to_be_bytes());
                out.extend_from_slice(&commitment.0);
            }
            Event::AdvanceBlocks { blocks } => out.extend_from_slice(&blocks.to_be_bytes()),
            Event::Reveal { batch, layout, .. } => {
                out.extend_from_slice(&batch.to_be_bytes());
                out.extend_from_slice(layout);
            }
            Event::CloseSelection | Event::Settle => {}
        }
        out
    }

    fn decode(kind: &str, party: &str, payload: &[u8]) -> Result<Self, String> {
        let mut r = Reader { bytes: payload };
        let agent = || party.parse::<AgentId>();
        let event = match kind {
            "post_questions" => {
                let budget = r.u128()?;
                let requester_deposit = r.u128()?;
                Event::PostQuestions { questions: r.ids()?, budget, requester_deposit }
            }
            "select_questions" => {
                let deposit = r.u128()?;
                Event::SelectQuestions { agent: agent()?, questions: r.ids()?, deposit }
            }
            "close_selection" => Event::CloseSelection,
            "commit" => {
                let batch = r.u32()?;
                Event::SubmitCommitment { agent: agent()?, batch, commitment: Commitment(r.array()?) }
            }
            "advance" => Event::AdvanceBlocks { blocks: r.u64()? },
            "reveal" => {
                let batch = r.u32()?;
                Event::Reveal { agent: agent()?, batch, layout: r.array()? }
            }
            "settle" => Event::Settle,
            other => return Err(format!("unknown event type `{other}`")),
        };
        if !r.bytes.is_empty() {
            return Err(format!("{} trailing payload bytes", r.bytes.len()));
        }
        if event.party() != party {
            return Err(format!("party `{party}` does not match {kind}"));
        }
        Ok(event)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], String> {
        if self.bytes.len() < N {
            return Err("payload too short".into());
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], String> {
        self.take()
    }

    fn u32(&mut self) -> Result<u32, String> {
        self.take().map(u32::from_be_bytes)
    }

    fn u64(&mut self) -> Result<u64, String> {
        self.take().map(u64::from_be_bytes)
    }

    fn u128(&mut self) -> Result<u128, String> {
        self.take().map(u128::from_be_bytes)
    }

    fn ids(&mut self) -> Result<Vec<QuestionId>, String> {
        let n = self.u32()?;
        (0..n).map(|_| self.u32().map(QuestionId)).collect()
    }
}

pub fn write_event_log(events: &[LoggedEvent]) -> String {
    events
        .iter()
        .map(|e| {
            format!(
                "{}, {}, {}, {}\n",
                e.block,
                e.event.kind(),
                e.event.party(),
                hex::encode(e.event.payload())
            )
        })
        .collect()
}

pub fn parse_event_log(text: &str) -> Result<Vec<LoggedEvent>, LedgerError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let err = |msg: String| LedgerError::Log(format!("line {}: {msg}", n + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [block, kind, party, payload] = fields[..] else {
                return Err(err("expected 4 comma-separated fields".into()));
            };
            let block = block.parse::<u64>().map_err(|e| err(e.to_string()))?;
            let payload = hex::decode(payload).map_err(|e| err(e.to_string()))?;
            let event = Event::decode(kind, party, &payload).map_err(err)?;
            Ok(LoggedEvent { block, event })
        })
        .collect()
}
