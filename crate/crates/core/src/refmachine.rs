//! RM-1: the fixed reference machine every complexity value is relative to.
//!
//! A program is a bit string decoded in 3-bit groups (most significant bit
//! first). The machine has an append-only work tape whose contents at halt are
//! the output, a read-only conditional tape with a cursor, an oracle-query
//! register, and a one-bit flag.
//!
//! | code | instruction   | effect                                                        | steps        |
//! |------|---------------|---------------------------------------------------------------|--------------|
//! | 000  | `halt`        | stop                                                          | 1            |
//! | 001  | `write0`      | append 0; clear flag                                          | 1            |
//! | 010  | `write1`      | append 1; clear flag                                          | 1            |
//! | 011  | `emit`        | append every remaining program bit, then stop                 | 1 + payload  |
//! | 100  | `read-cond`   | append next conditional bit; flag := a bit was available      | 1            |
//! | 101  | `query`       | register += 1; append oracle bit at register; flag := that bit | 1           |
//! | 110  | `double`      | append a copy of the whole tape; clear flag                   | 1 + |tape|   |
//! | 111  | `branch`      | if flag is set, jump back to the previous instruction         | 1            |
//!
//! Running off the end of the instruction list halts (0 steps). Leftover bits
//! that do not fill a 3-bit group are ignored, except that `emit` takes them as
//! payload. A query past the end of the oracle is reported as
//! [`RunStatus::OracleOverflow`]. The full table is frozen in `docs/rm1.md`.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;

pub const RM1_VERSION: &str = "RM-1/1";
pub const OPCODE_WIDTH: usize = 3;

/// Length of `encode_literal("")`: the `emit` opcode.
pub const LITERAL_HEADER_LEN: usize = OPCODE_WIDTH;

/// Steps needed for `encode_literal(x)` to halt: `LIT_BUDGET_SLOPE * |x| + LIT_BUDGET_INTERCEPT`.
pub const LIT_BUDGET_SLOPE: u64 = 1;
pub const LIT_BUDGET_INTERCEPT: u64 = 1;

pub fn lit_budget(len: usize) -> u64 {
    LIT_BUDGET_SLOPE * len as u64 + LIT_BUDGET_INTERCEPT
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Halt,
    Write(bool),
    Emit(BitString),
    ReadCond,
    Query,
    Double,
    Branch,
}

impl Instr {
    pub fn opcode(&self) -> u8 {
        match self {
            Instr::Halt => 0b000,
            Instr::Write(false) => 0b001,
            Instr::Write(true) => 0b010,
            Instr::Emit(_) => 0b011,
            Instr::ReadCond => 0b100,
            Instr::Query => 0b101,
            Instr::Double => 0b110,
            Instr::Branch => 0b111,
        }
    }
}

/// A program: any bit string is a valid one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProgramCode(pub BitString);

impl ProgramCode {
    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Re-encodes an instruction list. `Emit` must be last if present.
    pub fn assemble(instrs: &[Instr]) -> ProgramCode {
        let mut bits = BitString::new();
        for ins in instrs {
            bits.extend_from(&BitString::from_uint(ins.opcode() as u64, OPCODE_WIDTH));
            if let Instr::Emit(payload) = ins {
                bits.extend_from(payload);
                break;
            }
        }
        ProgramCode(bits)
    }
}

impl From<BitString> for ProgramCode {
    fn from(b: BitString) -> Self {
        ProgramCode(b)
    }
}

pub fn decode_program(p: &ProgramCode) -> Vec<Instr> {
    let bits = p.bits().as_slice();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos + OPCODE_WIDTH <= bits.len() {
        let op = bits[pos..pos + OPCODE_WIDTH]
            .iter()
            .fold(0u8, |acc, &b| (acc << 1) | b as u8);
        pos += OPCODE_WIDTH;
        out.push(match op {
            0b000 => Instr::Halt,
            0b001 => Instr::Write(false),
            0b010 => Instr::Write(true),
            0b011 => {
                out.push(Instr::Emit(BitString::from_bits(bits[pos..].to_vec())));
                return out;
            }
            0b100 => Instr::ReadCond,
            0b101 => Instr::Query,
            0b110 => Instr::Double,
            _ => Instr::Branch,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub step_budget: u64,
    pub oracle: Option<BitString>,
    pub conditional: BitString,
}

impl MachineConfig {
    pub fn new(step_budget: u64) -> Self {
        assert!(step_budget >= 1, "step budget must be positive");
        MachineConfig {
            step_budget,
            oracle: None,
            conditional: BitString::new(),
        }
    }

    pub fn with_conditional(mut self, v: BitString) -> Self {
        self.conditional = v;
        self
    }

    pub fn with_oracle(mut self, w: BitString) -> Self {
        self.oracle = Some(w);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "output", rename_all = "snake_case")]
pub enum RunStatus {
    Halted(BitString),
    StepLimit,
    OracleOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub steps_used: u64,
    /// Largest 1-based oracle index queried, 0 if none.
    pub oracle_use: usize,
}

impl RunResult {
    pub fn output(&self) -> Option<&BitString> {
        match &self.status {
            RunStatus::Halted(out) => Some(out),
            _ => None,
        }
    }
}

pub fn run(p: &ProgramCode, cfg: &MachineConfig) -> RunResult {
    run_decoded(&decode_program(p), cfg)
}

pub fn run_decoded(prog: &[Instr], cfg: &MachineConfig) -> RunResult {
    let empty = BitString::new();
    let oracle = cfg.oracle.as_ref().unwrap_or(&empty);
    let cond = &cfg.conditional;

    let mut tape: Vec<bool> = Vec::new();
    let mut ip = 0usize;
    let mut steps = 0u64;
    let mut flag = false;
    let mut cond_pos = 0usize;
    let mut register = 0usize;
    let mut oracle_use = 0usize;

    let finish = |status, steps, oracle_use| RunResult {
        status,
        steps_used: steps,
        oracle_use,
    };

    while let Some(ins) = prog.get(ip) {
        let cost = match ins {
            Instr::Emit(payload) => 1 + payload.len() as u64,
            Instr::Double => 1 + tape.len() as u64,
            _ => 1,
        };
        if steps + cost > cfg.step_budget {
            return finish(RunStatus::StepLimit, steps, oracle_use);
        }
        steps += cost;
        match ins {
            Instr::Halt => return finish(RunStatus::Halted(tape.into()), steps, oracle_use),
            Instr::Write(b) => {
                tape.push(*b);
                flag = false;
            }
            Instr::Emit(payload) => {
                tape.extend_from_slice(payload.as_slice());
                return finish(RunStatus::Halted(tape.into()), steps, oracle_use);
            }
            Instr::ReadCond => {
                flag = cond_pos < cond.len();
                if flag {
                    tape.push(cond[cond_pos]);
                    cond_pos += 1;
                }
            }
            Instr::Query => {
                register += 1;
                oracle_use = oracle_use.max(register);
                if register > oracle.len() {
                    return finish(RunStatus::OracleOverflow, steps, oracle_use);
                }
                flag = oracle[register - 1];
                tape.push(flag);
            }
            Instr::Double => {
                tape.extend_from_within(..);
                flag = false;
            }
            Instr::Branch => {
                if flag && ip > 0 {
                    ip -= 1;
                    continue;
                }
            }
        }
        ip += 1;
    }
    finish(RunStatus::Halted(tape.into()), steps, oracle_use)
}

/// `emit` followed by the bits of `x`: `|x| + LITERAL_HEADER_LEN` bits.
pub fn encode_literal(x: &BitString) -> ProgramCode {
    ProgramCode::assemble(&[Instr::Emit(x.clone())])
}

/// `read-cond; branch`: copies the whole conditional string.
pub fn encode_copy_conditional() -> ProgramCode {
    ProgramCode::assemble(&[Instr::ReadCond, Instr::Branch])
}
