//! A second RM-1 interpreter, written against the opcode table in `docs/rm1.md`
//! and working straight on raw program bits, plus a naive shortest-program
//! search. Integration tests use it as the brute-force oracle.

#![allow(dead_code)]

#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Out(Vec<bool>),
    OutOfSteps,
    OracleOverflow,
}

pub fn interpret(program: &[bool], cond: &[bool], oracle: &[bool], budget: u64) -> (Outcome, u64) {
    let mut starts = Vec::new();
    let mut pc = 0;
    while pc + 3 <= program.len() {
        starts.push(pc);
        let op = (program[pc] as u8) << 2 | (program[pc + 1] as u8) << 1 | program[pc + 2] as u8;
        pc += 3;
        if op == 3 {
            break;
        }
    }

    let (mut out, mut used) = (Vec::new(), 0u64);
    let (mut flag, mut next_cond, mut reg) = (false, 0usize, 0usize);
    let mut i = 0usize;
    while i < starts.len() {
        let at = starts[i];
        let op = (program[at] as u8) << 2 | (program[at + 1] as u8) << 1 | program[at + 2] as u8;
        let payload = &program[at + 3..];
        let price = match op {
            3 => 1 + payload.len() as u64,
            6 => 1 + out.len() as u64,
            _ => 1,
        };
        used += price;
        if used > budget {
            return (Outcome::OutOfSteps, used - price);
        }
        match op {
            0 => return (Outcome::Out(out), used),
            1 | 2 => {
                out.push(op == 2);
                flag = false;
            }
            3 => {
                out.extend_from_slice(payload);
                return (Outcome::Out(out), used);
            }
            4 => {
                if let Some(&b) = cond.get(next_cond) {
                    out.push(b);
                    next_cond += 1;
                    flag = true;
                } else {
                    flag = false;
                }
            }
            5 => {
                reg += 1;
                let Some(&b) = oracle.get(reg - 1) else {
                    return (Outcome::OracleOverflow, used);
                };
                out.push(b);
                flag = b;
            }
            6 => {
                let copy = out.clone();
                out.extend(copy);
                flag = false;
            }
            _ => {
                if flag && i > 0 {
                    i -= 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    (Outcome::Out(out), used)
}

pub fn program(value: u64, len: usize) -> Vec<bool> {
    (0..len).rev().map(|k| value >> k & 1 == 1).collect()
}

/// `(length, shortlex-least program)` of the first program printing `target`.
pub fn naive_search(target: &[bool], cond: &[bool], oracle: &[bool], max_len: usize, steps: u64) -> Option<(usize, u64)> {
    (0..=max_len).find_map(|len| {
        (0..1u64 << len)
            .find(|&v| interpret(&program(v, len), cond, oracle, steps).0 == Outcome::Out(target.to_vec()))
            .map(|v| (len, v))
    })
}

/// `C(target | cond)` with no oracle, or `None` beyond the cap.
pub fn naive_c(target: &[bool], cond: &[bool], max_len: usize, steps: u64) -> Option<usize> {
    naive_search(target, cond, &[], max_len, steps).map(|(len, _)| len)
}
