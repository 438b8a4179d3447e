//! Abstract gas accounting.
//!
//! Every simulated contract action is charged through a [`GasTable`]; nothing
//! is derived from host instruction counts. Defaults follow the pre-Berlin
//! Ethereum schedule: 21000 per transaction, 20000 for a fresh storage word,
//! 5000 for an overwrite, 200 per storage read, 30 + 6/word for Keccak, 3 per
//! memory word, 5 per arithmetic op and 3 per comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::commitment::MAX_ANSWERS;
use crate::ledger::Phase;
use crate::mechanisms::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GasError {
    #[error("unknown op kind `{0}`")]
    UnknownOpKind(String),
    #[error("gas table entry `{0}` must be a positive integer")]
    NonPositiveEntry(String),
    #[error("gas table violates write > update > read > memory ordering")]
    BadOrdering,
    #[error("gas table parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GasTable {
    pub tx_base: u64,
    pub storage_write_new_word: u64,
    pub storage_write_update_word: u64,
    pub storage_read_word: u64,
    pub hash_base: u64,
    pub hash_per_word: u64,
    pub memory_word: u64,
    pub arithmetic_op: u64,
    pub comparison_op: u64,
}

impl Default for GasTable {
    fn default() -> Self {
        Self {
            tx_base: 21_000,
            storage_write_new_word: 20_000,
            storage_write_update_word: 5_000,
            storage_read_word: 200,
            hash_base: 30,
            hash_per_word: 6,
            memory_word: 3,
            arithmetic_op: 5,
            comparison_op: 3,
        }
    }
}

const TABLE_KEYS: [&str; 9] = [
    "tx_base",
    "storage_write_new_word",
    "storage_write_update_word",
    "storage_read_word",
    "hash_base",
    "hash_per_word",
    "memory_word",
    "arithmetic_op",
    "comparison_op",
];

impl GasTable {
    fn entries_mut(&mut self) -> [&mut u64; 9] {
        [
            &mut self.tx_base,
            &mut self.storage_write_new_word,
            &mut self.storage_write_update_word,
            &mut self.storage_read_word,
            &mut self.hash_base,
            &mut self.hash_per_word,
            &mut self.memory_word,
            &mut self.arithmetic_op,
            &mut self.comparison_op,
        ]
    }

    pub fn entries(&self) -> [(&'static str, u64); 9] {
        let v = [
            self.tx_base,
            self.storage_write_new_word,
            self.storage_write_update_word,
            self.storage_read_word,
            self.hash_base,
            self.hash_per_word,
            self.memory_word,
            self.arithmetic_op,
            self.comparison_op,
        ];
        std::array::from_fn(|i| (TABLE_KEYS[i], v[i]))
    }

    pub fn validate(&self) -> Result<(), GasError> {
        if let Some((key, _)) = self.entries().iter().find(|(_, v)| *v == 0) {
            return Err(GasError::NonPositiveEntry(key.to_string()));
        }
        if self.storage_write_new_word > self.storage_write_update_word
            && self.storage_write_update_word > self.storage_read_word
            && self.storage_read_word > self.memory_word
        {
            Ok(())
        } else {
            Err(GasError::BadOrdering)
        }
    }

    /// Parses `key = integer` lines (TOML). Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, GasError> {
        let raw: BTreeMap<String, toml::Value> =
            toml::from_str(text).map_err(|e| GasError::Parse(e.to_string()))?;
        let mut table = Self::default();
        for (key, value) in raw {
            let idx = TABLE_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| GasError::UnknownOpKind(key.clone()))?;
            let v = value
                .as_integer()
                .filter(|v| *v > 0)
                .ok_or_else(|| GasError::NonPositiveEntry(key.clone()))?;
            *table.entries_mut()[idx] = v as u64;
        }
        table.validate()?;
        Ok(table)
    }

    pub fn to_config(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Gas for one op of `kind` touching `words` words.
    pub fn cost(&self, kind: OpKind, words: u64) -> u64 {
        match kind {
            OpKind::TxBase => self.tx_base,
            OpKind::StorageWriteNew => self.storage_write_new_word * words,
            OpKind::StorageWriteUpdate => self.storage_write_update_word * words,
            OpKind::StorageRead => self.storage_read_word * words,
            OpKind::Hash => self.hash_base + self.hash_per_word * words,
            OpKind::Memory => self.memory_word * words,
            OpKind::Arithmetic => self.arithmetic_op * words,
            OpKind::Comparison => self.comparison_op * words,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    TxBase,
    StorageWriteNew,
    StorageWriteUpdate,
    StorageRead,
    Hash,
    Memory,
    Arithmetic,
    Comparison,
}

impl OpKind {
    pub const ALL: [OpKind; 8] = [
        OpKind::TxBase,
        OpKind::StorageWriteNew,
        OpKind::StorageWriteUpdate,
        OpKind::StorageRead,
        OpKind::Hash,
        OpKind::Memory,
        OpKind::Arithmetic,
        OpKind::Comparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::TxBase => "tx_base",
            OpKind::StorageWriteNew => "storage_write_new_word",
            OpKind::StorageWriteUpdate => "storage_write_update_word",
            OpKind::StorageRead => "storage_read_word",
            OpKind::Hash => "hash",
            OpKind::Memory => "memory_word",
            OpKind::Arithmetic => "arithmetic_op",
            OpKind::Comparison => "comparison_op",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GasError::UnknownOpKind(s.to_string()))
    }
}

/// Who a gas charge is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Requester,
    Agent(AgentId),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Requester => f.write_str("requester"),
            Party::Agent(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for Party {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "requester" {
            Ok(Party::Requester)
        } else {
            s.parse().map(Party::Agent)
        }
    }
}

/// Counts of abstract operations performed by an off-ledger computation,
/// later priced by a [`GasTable`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpTally {
    pub storage_reads: u64,
    pub storage_writes_new: u64,
    pub storage_writes_update: u64,
    pub memory_words: u64,
    pub arithmetic: u64,
    pub comparisons: u64,
    pub hashes: u64,
    pub hash_words: u64,
}

impl OpTally {
    pub fn mem(&mut self, n: u64) {
        self.memory_words += n;
    }

    pub fn arith(&mut self, n: u64) {
        self.arithmetic += n;
    }

    pub fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }

    pub fn read(&mut self, n: u64) {
        self.storage_reads += n;
    }

    pub fn hash(&mut self, words: u64) {
        self.hashes += 1;
        self.hash_words += words;
    }

    pub fn add(&mut self, other: &OpTally) {
        self.storage_reads += other.storage_reads;
        self.storage_writes_new += other.storage_writes_new;
        self.storage_writes_update += other.storage_writes_update;
        self.memory_words += other.memory_words;
        self.arithmetic += other.arithmetic;
        self.comparisons += other.comparisons;
        self.hashes += other.hashes;
        self.hash_words += other.hash_words;
    }

    /// `(kind, words)` line items; hashes contribute one base per call.
    pub fn items(&self, table: &GasTable) -> Vec<(OpKind, u64, u64)> {
        let mut items = vec![
            (OpKind::StorageRead, self.storage_reads),
            (OpKind::StorageWriteNew, self.storage_writes_new),
            (OpKind::StorageWriteUpdate, self.storage_writes_update),
            (OpKind::Memory, self.memory_words),
            (OpKind::Arithmetic, self.arithmetic),
            (OpKind::Comparison, self.comparisons),
        ]
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .map(|(k, n)| (k, n, table.cost(k, n)))
        .collect::<Vec<_>>();
        if self.hashes > 0 {
            let gas = self.hashes * table.hash_base + self.hash_words * table.hash_per_word;
            items.push((OpKind::Hash, self.hash_words, gas));
        }
        items
    }

    pub fn gas(&self, table: &GasTable) -> u64 {
        self.items(table).iter().map(|(_, _, g)| g).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasEntry {
    pub phase: Phase,
    pub party: Party,
    pub op_kind: OpKind,
    pub words: u64,
    pub gas: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GasLedger {
    per_phase: BTreeMap<Phase, u64>,
    per_agent: BTreeMap<AgentId, u64>,
    requester: u64,
    total: u64,
    entries: Vec<GasEntry>,
}

impl GasLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, phase: Phase, party: Party, op_kind: OpKind, words: u64, gas: u64) -> u64 {
        *self.per_phase.entry(phase).or_default() += gas;
        match party {
            Party::Requester => self.requester += gas,
            Party::Agent(a) => *self.per_agent.entry(a).or_default() += gas,
        }
        self.total += gas;
        self.entries.push(GasEntry { phase, party, op_kind, words, gas });
        gas
    }

    pub fn charge(&mut self, table: &GasTable, phase: Phase, party: Party, kind: OpKind, words: u64) -> u64 {
        let gas = table.cost(kind, words);
        self.record(phase, party, kind, words, gas)
    }

    /// [`charge`](Self::charge) with the op kind given by name.
    pub fn charge_named(
        &mut self,
        table: &GasTable,
        phase: Phase,
        party: Party,
        kind: &str,
        words: u64,
    ) -> Result<u64, GasError> {
        let kind = kind.parse()?;
        Ok(self.charge(table, phase, party, kind, words))
    }

    pub fn charge_tally(&mut self, table: &GasTable, phase: Phase, party: Party, tally: &OpTally) -> u64 {
        tally
            .items(table)
            .into_iter()
            .map(|(kind, words, gas)| self.record(phase, party, kind, words, gas))
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn phase_total(&self, phase: Phase) -> u64 {
        self.per_phase.get(&phase).copied().unwrap_or(0)
    }

    pub fn agent_total(&self, agent: AgentId) -> u64 {
        self.per_agent.get(&agent).copied().unwrap_or(0)
    }

    pub fn requester_total(&self) -> u64 {
        self.requester
    }

    pub fn per_phase(&self) -> &BTreeMap<Phase, u64> {
        &self.per_phase
    }

    pub fn per_agent(&self) -> &BTreeMap<AgentId, u64> {
        &self.per_agent
    }

    pub fn entries(&self) -> &[GasEntry] {
        &self.entries
    }

    /// Checks `total = Σ per_phase = Σ per_agent + requester`.
    pub fn is_consistent(&self) -> bool {
        let by_phase: u64 = self.per_phase.values().sum();
        let by_party: u64 = self.per_agent.values().sum::<u64>() + self.requester;
        let by_entry: u64 = self.entries.iter().map(|e| e.gas).sum();
        by_phase == self.total && by_party == self.total && by_entry == self.total
    }

    /// CSV with header `phase,party,op_kind,words,gas`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,party,op_kind,words,gas\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{},{}\n", e.phase, e.party, e.op_kind, e.words, e.gas));
        }
        out
    }
}

/// Writing cost of committing `n_answers` answers.
///
/// Packed: one fresh storage word and one single-word hash per batch of up to
/// 42 answers. Unpacked: one word and one hash per answer.
pub fn cost_of_commit_scheme(n_answers: usize, packed: bool, table: &GasTable) -> u64 {
    let units = if packed { n_answers.div_ceil(MAX_ANSWERS) } else { n_answers } as u64;
    units * (table.cost(OpKind::StorageWriteNew, 1) + table.cost(OpKind::Hash, 1))
}
