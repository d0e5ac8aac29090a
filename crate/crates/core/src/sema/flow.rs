//! "Can complete normally" analysis. A code segment whose body can
//! complete normally has a path that exits without a goto.

use crate::ast::{Expr, ExprKind, Stmt};
use crate::diag::{Code, Diagnostic};

/// Returns whether control can fall out of `stmts`; pushes a warning for
/// the first unreachable statement of every block.
pub fn block_completes(stmts: &[Stmt], diags: &mut Vec<Diagnostic>) -> bool {
    let mut live = true;
    let mut warned = false;
    for s in stmts {
        if !live && !warned && !matches!(s, Stmt::Empty(_)) {
            diags.push(Diagnostic::new(Code::Unreachable, s.span(), "statement is unreachable"));
            warned = true;
        }
        let completes = stmt_completes(s, diags);
        live = live && completes;
    }
    live
}

pub fn stmt_completes(s: &Stmt, diags: &mut Vec<Diagnostic>) -> bool {
    match s {
        Stmt::Goto(_) | Stmt::Return(..) => false,
        Stmt::Block(b) => block_completes(&b.stmts, diags),
        Stmt::If { then, els, .. } => {
            let t = stmt_completes(then, diags);
            match els {
                Some(e) => stmt_completes(e, diags) | t,
                None => true,
            }
        }
        Stmt::While { cond, body, .. } => {
            stmt_completes(body, diags);
            !is_true_constant(cond)
        }
        Stmt::For { cond, body, .. } => {
            stmt_completes(body, diags);
            cond.as_ref().is_some_and(|c| !is_true_constant(c))
        }
        Stmt::Decl(..) | Stmt::Expr(..) | Stmt::Empty(_) => true,
    }
}

fn is_true_constant(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Int(v) | ExprKind::Char(_, v) if v != 0)
}
