use std::fmt::Write;

use super::{Cond, Program, Stmt};

pub(crate) fn emit(program: &Program) -> String {
    let mut out = String::from("def run(): ");
    block(&mut out, &program.body);
    out
}

fn block(out: &mut String, body: &[Stmt]) {
    if let [single] = body {
        stmt(out, single);
        return;
    }
    out.push_str("{ ");
    for (i, s) in body.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        stmt(out, s);
    }
    out.push_str(" }");
}

fn cond(out: &mut String, c: Cond) {
    for _ in 0..c.negations {
        out.push_str("not ");
    }
    out.push_str(c.pred.name());
    out.push_str("()");
}

fn stmt(out: &mut String, s: &Stmt) {
    match s {
        Stmt::Action(a) => {
            out.push_str(a.name());
            out.push_str("()");
        }
        Stmt::While { cond: c, body } => {
            out.push_str("while(");
            cond(out, *c);
            out.push_str("): ");
            block(out, body);
        }
        Stmt::If { cond: c, body } => {
            out.push_str("if(");
            cond(out, *c);
            out.push_str("): ");
            block(out, body);
        }
        Stmt::Repeat { count, body } => {
            let _ = write!(out, "repeat({count}): ");
            block(out, body);
        }
        Stmt::IfElse { cond: c, then_body, else_body } => {
            out.push_str("ifelse(");
            cond(out, *c);
            out.push_str("): ");
            block(out, then_body);
            out.push_str(" else: ");
            block(out, else_body);
        }
    }
}
