//! Line-oriented satisfaction checks for external tools (hard-example
//! mining in the training pipeline judges candidates with this VM).
//!
//! Each input line is `{"id": .., "tokens": [..]}` or `{"id": .., "program":
//! ".."}` plus `"pairs": [{"in": grid, "out": grid}]`; each output line is
//! `{"id", "parsed", "satisfied": [bool], "score", "all", "error"?}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::lang::{parse, parse_tokens, Program, TokenSeq};
use crate::sampling::IoPair;
use crate::vm::{satisfies, ExecLimits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRequest {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub program: Option<String>,
    #[serde(default)]
    pub tokens: Option<Vec<String>>,
    pub pairs: Vec<IoPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: Option<String>,
    pub parsed: bool,
    pub satisfied: Vec<bool>,
    pub score: usize,
    pub all: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckResult {
    fn failed(id: Option<String>, error: String) -> CheckResult {
        CheckResult { id, parsed: false, satisfied: vec![], score: 0, all: false, error: Some(error) }
    }
}

fn program_of(req: &CheckRequest) -> Result<Program, String> {
    match (&req.tokens, &req.program) {
        (Some(tokens), _) => TokenSeq::from_terminals(tokens.iter().map(String::as_str))
            .and_then(|t| parse_tokens(&t))
            .map_err(|e| e.to_string()),
        (None, Some(text)) => parse(text).map_err(|e| e.to_string()),
        (None, None) => Err("request has neither `tokens` nor `program`".into()),
    }
}

pub fn check(req: &CheckRequest, limits: ExecLimits) -> CheckResult {
    match program_of(req) {
        Ok(program) => {
            let satisfied: Vec<bool> = req.pairs.iter().map(|io| satisfies(&program, io, limits)).collect();
            let score = satisfied.iter().filter(|s| **s).count();
            CheckResult { id: req.id.clone(), parsed: true, all: score == satisfied.len(), score, satisfied, error: None }
        }
        Err(e) => CheckResult::failed(req.id.clone(), e),
    }
}

/// Checks every request line; malformed lines produce an error result and
/// do not stop the batch. Returns (lines, lines with errors).
pub fn batch_check<R: BufRead, W: Write>(input: R, mut output: W, limits: ExecLimits) -> std::io::Result<(usize, usize)> {
    let (mut lines, mut errors) = (0, 0);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let result = match serde_json::from_str::<CheckRequest>(&line) {
            Ok(req) => check(&req, limits),
            Err(e) => CheckResult::failed(None, format!("line {lines}: {e}")),
        };
        errors += result.error.is_some() as usize;
        serde_json::to_writer(&mut output, &result)?;
        output.write_all(b"\n")?;
    }
    output.flush()?;
    Ok((lines, errors))
}
