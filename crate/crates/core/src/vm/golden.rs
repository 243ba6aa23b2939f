//! Golden-trace records for interpreter regression tests.
//!
//! ```text
//! [case] pick-from-three
//! program = def run(): pickMarker()
//! input = >3 . / . .
//! status = ok
//! output = >2 . / . .
//! coverage =
//! ```
//!
//! `output` is required iff `status = ok`. `limits = <steps> <conds>`
//! overrides the default budgets. Lines starting with `#` are comments.

use super::{run, CoverageReport, ExecLimits, ExecStatus};
use crate::lang::{parse, Program};
use crate::world::GridState;

#[derive(Debug, Clone)]
pub struct GoldenCase {
    pub name: String,
    pub program: Program,
    pub input: GridState,
    pub limits: ExecLimits,
    pub status: ExecStatus,
    pub output: Option<GridState>,
    pub coverage: CoverageReport,
}

#[derive(Default)]
struct Draft {
    name: String,
    line: usize,
    program: Option<Program>,
    input: Option<GridState>,
    limits: Option<ExecLimits>,
    status: Option<ExecStatus>,
    output: Option<GridState>,
    coverage: Option<CoverageReport>,
}

impl Draft {
    fn finish(self) -> Result<GoldenCase, String> {
        let name = self.name;
        let missing = |field: &str| format!("case `{name}` (line {}): missing `{field}`", self.line);
        let status = self.status.ok_or_else(|| missing("status"))?;
        if (status == ExecStatus::Ok) != self.output.is_some() {
            return Err(format!("case `{name}`: `output` must be given iff status is ok"));
        }
        Ok(GoldenCase {
            program: self.program.ok_or_else(|| missing("program"))?,
            input: self.input.ok_or_else(|| missing("input"))?,
            limits: self.limits.unwrap_or_default(),
            status,
            output: self.output,
            coverage: self.coverage.ok_or_else(|| missing("coverage"))?,
            name,
        })
    }
}

pub fn parse_golden(text: &str) -> Result<Vec<GoldenCase>, String> {
    let mut cases = Vec::new();
    let mut draft: Option<Draft> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix("[case]") {
            if let Some(d) = draft.take() {
                cases.push(d.finish()?);
            }
            draft = Some(Draft { name: name.trim().to_string(), line: lineno, ..Draft::default() });
            continue;
        }
        let d = draft.as_mut().ok_or(format!("line {lineno}: field outside a case"))?;
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or(format!("line {lineno}: expected `key = value`"))?;
        let err = |e: String| format!("line {lineno}: {e}");
        match key {
            "program" => d.program = Some(parse(value).map_err(|e| err(e.to_string()))?),
            "input" => d.input = Some(GridState::from_ascii(value).map_err(|e| err(e.to_string()))?),
            "output" => d.output = Some(GridState::from_ascii(value).map_err(|e| err(e.to_string()))?),
            "status" => {
                d.status = Some(match value {
                    "ok" => ExecStatus::Ok,
                    "crashed" => ExecStatus::Crashed,
                    "timeout" => ExecStatus::Timeout,
                    other => return Err(err(format!("unknown status `{other}`"))),
                })
            }
            "coverage" => {
                d.coverage =
                    Some(CoverageReport::from_text(value).ok_or_else(|| err("bad coverage".into()))?)
            }
            "limits" => {
                let nums: Vec<u32> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad limits".into()))?;
                let [max_steps, max_cond_evals] = nums[..] else {
                    return Err(err("limits takes two numbers".into()));
                };
                d.limits = Some(ExecLimits { max_steps, max_cond_evals });
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if let Some(d) = draft {
        cases.push(d.finish()?);
    }
    Ok(cases)
}

/// Runs one case; `Err` describes the first mismatch.
pub fn check(case: &GoldenCase) -> Result<(), String> {
    let result = run(&case.program, &case.input, case.limits);
    if result.status() != case.status {
        return Err(format!("status {:?}, expected {:?}", result.status(), case.status));
    }
    if result.output() != case.output.as_ref() {
        return Err(format!(
            "output {:?}, expected {:?}",
            result.output().map(GridState::to_ascii),
            case.output.as_ref().map(GridState::to_ascii)
        ));
    }
    if result.coverage != case.coverage {
        return Err(format!(
            "coverage `{}`, expected `{}`",
            result.coverage.to_text(),
            case.coverage.to_text()
        ));
    }
    Ok(())
}
