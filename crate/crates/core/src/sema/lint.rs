//! Strict-CbC profile: code segment bodies restricted to `if`, `goto` and
//! assignment.

use crate::ast::{Expr, ExprKind, Item, Stmt};
use crate::diag::{self, Code, Diagnostic};

use super::TypedUnit;

/// Warnings for loops and calls inside code segments. Returns nothing
/// unless `strict` is set.
pub fn lint_cbc_purity(unit: &TypedUnit, strict: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !strict {
        return out;
    }
    for item in &unit.ast.items {
        if let Item::CodeSegment(f) = item {
            for s in &f.body.stmts {
                stmt(s, &f.name, &mut out);
            }
        }
    }
    diag::sort(&mut out);
    out
}

fn stmt(s: &Stmt, seg: &str, out: &mut Vec<Diagnostic>) {
    match s {
        Stmt::While { cond, body, span } => {
            out.push(Diagnostic::new(Code::StrictCbc, *span, format!("loop in code segment `{seg}`")));
            expr(cond, seg, out);
            stmt(body, seg, out);
        }
        Stmt::For { init, cond, step, body, span } => {
            out.push(Diagnostic::new(Code::StrictCbc, *span, format!("loop in code segment `{seg}`")));
            if let Some(i) = init {
                stmt(i, seg, out);
            }
            for e in cond.iter().chain(step) {
                expr(e, seg, out);
            }
            stmt(body, seg, out);
        }
        Stmt::If { cond, then, els, .. } => {
            expr(cond, seg, out);
            stmt(then, seg, out);
            if let Some(e) = els {
                stmt(e, seg, out);
            }
        }
        Stmt::Block(b) => b.stmts.iter().for_each(|s| stmt(s, seg, out)),
        Stmt::Decl(ds, _) => ds.iter().filter_map(|d| d.init.as_ref()).for_each(|e| expr(e, seg, out)),
        Stmt::Expr(e, _) => expr(e, seg, out),
        Stmt::Return(v, _) => v.iter().for_each(|e| expr(e, seg, out)),
        Stmt::Goto(g) => {
            if let crate::ast::GotoTarget::Indirect(t) = &g.target {
                expr(t, seg, out);
            }
            g.args.iter().chain(&g.env).for_each(|e| expr(e, seg, out));
        }
        Stmt::Empty(_) => {}
    }
}

fn expr(e: &Expr, seg: &str, out: &mut Vec<Diagnostic>) {
    if let ExprKind::Call(..) = e.kind {
        out.push(Diagnostic::new(Code::StrictCbc, e.span, format!("function call in code segment `{seg}`")));
    }
    for c in e.children() {
        expr(c, seg, out);
    }
}
