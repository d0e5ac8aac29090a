//! Read-only traversal helpers over statements and expressions.

use crate::ast::{Block, Expr, GotoTarget, Stmt};

/// Calls `f` on every expression (pre-order) under `b`.
pub fn walk_block_exprs<'a>(b: &'a Block, f: &mut impl FnMut(&'a Expr)) {
    for s in &b.stmts {
        walk_stmt_exprs(s, f);
    }
}

pub fn walk_stmt_exprs<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    match s {
        Stmt::Decl(ds, _) => ds.iter().filter_map(|d| d.init.as_ref()).for_each(|e| walk_expr(e, f)),
        Stmt::If { cond, then, els, .. } => {
            walk_expr(cond, f);
            walk_stmt_exprs(then, f);
            if let Some(e) = els {
                walk_stmt_exprs(e, f);
            }
        }
        Stmt::While { cond, body, .. } => {
            walk_expr(cond, f);
            walk_stmt_exprs(body, f);
        }
        Stmt::For { init, cond, step, body, .. } => {
            if let Some(i) = init {
                walk_stmt_exprs(i, f);
            }
            cond.iter().chain(step).for_each(|e| walk_expr(e, f));
            walk_stmt_exprs(body, f);
        }
        Stmt::Expr(e, _) => walk_expr(e, f),
        Stmt::Return(v, _) => v.iter().for_each(|e| walk_expr(e, f)),
        Stmt::Goto(g) => {
            if let GotoTarget::Indirect(t) = &g.target {
                walk_expr(t, f);
            }
            g.args.iter().chain(&g.env).for_each(|e| walk_expr(e, f));
        }
        Stmt::Block(b) => walk_block_exprs(b, f),
        Stmt::Empty(_) => {}
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    for c in e.children() {
        walk_expr(c, f);
    }
}
