//! Rewrites a function body into a tree where every call is a statement of
//! its own and every path ends in a return.

use std::collections::BTreeSet;

use crate::ast::{BinOp, Expr, ExprId, ExprKind, FuncDef, Stmt, UnOp, VarDecl};
use crate::diag::{Code, Diagnostic};
use crate::sema::{Type, TypedUnit};
use crate::span::Span;

/// Limit on tree size after tail duplication.
const MAX_NODES: usize = 20_000;

#[derive(Clone, Debug)]
pub enum Node {
    /// Call-free statement without returns.
    Simple(Stmt),
    /// `dst = callee(args)` or `callee(args)`; arguments are call-free.
    Call { dst: Option<String>, callee: String, args: Vec<Expr>, site: usize },
    If { cond: Expr, then: Vec<Node>, els: Vec<Node> },
    Return(Expr),
}

/// A converted function's variables, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct VarTable {
    pub vars: Vec<(String, Type)>,
}

impl VarTable {
    pub fn ty(&self, name: &str) -> Option<&Type> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ty(name).is_some()
    }

    /// `names` in declaration order.
    pub fn ordered(&self, names: &BTreeSet<String>) -> Vec<(String, Type)> {
        self.vars.iter().filter(|(n, _)| names.contains(n)).cloned().collect()
    }
}

pub struct Normalized {
    pub body: Vec<Node>,
    pub vars: VarTable,
    pub params: Vec<(String, Type)>,
    pub call_sites: usize,
}

pub fn unsupported(span: Span, what: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Code::CpsUnsupported, span, what)
}

pub fn ident(name: &str) -> Expr {
    Expr { id: ExprId(0), kind: ExprKind::Ident(name.to_string()), span: Span::default() }
}

pub fn int(v: i64) -> Expr {
    Expr { id: ExprId(0), kind: ExprKind::Int(v), span: Span::default() }
}

fn assign(name: &str, value: Expr) -> Stmt {
    let e = Expr {
        id: ExprId(0),
        kind: ExprKind::Assign(None, Box::new(ident(name)), Box::new(value)),
        span: Span::default(),
    };
    Stmt::Expr(e, Span::default())
}

pub fn has_call(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Call(..)) || e.children().into_iter().any(has_call)
}

fn has_side_effect(e: &Expr) -> bool {
    let own = match &e.kind {
        ExprKind::Assign(..) => true,
        ExprKind::Unary(op, _) => matches!(op, UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec),
        _ => false,
    };
    own || e.children().into_iter().any(has_side_effect)
}

pub fn idents(e: &Expr, out: &mut BTreeSet<String>) {
    if let ExprKind::Ident(n) = &e.kind {
        out.insert(n.clone());
    }
    for c in e.children() {
        idents(c, out);
    }
}

pub fn stmt_idents(s: &Stmt, out: &mut BTreeSet<String>) {
    crate::visit::walk_stmt_exprs(s, &mut |e| {
        if let ExprKind::Ident(n) = &e.kind {
            out.insert(n.clone());
        }
    });
}

pub struct Normalizer<'a> {
    pub unit: &'a TypedUnit,
    /// Functions being converted; calls may only target these.
    pub subset: &'a BTreeSet<String>,
    pub vars: VarTable,
    /// Every identifier spelled anywhere, to keep fresh names fresh.
    pub taken: BTreeSet<String>,
    next_temp: usize,
}

impl<'a> Normalizer<'a> {
    pub fn new(unit: &'a TypedUnit, subset: &'a BTreeSet<String>, taken: BTreeSet<String>) -> Self {
        Normalizer { unit, subset, vars: VarTable::default(), taken, next_temp: 0 }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        loop {
            let name = format!("{base}{}", self.next_temp);
            self.next_temp += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    pub fn function(mut self, f: &FuncDef) -> Result<Normalized, Diagnostic> {
        let info = self.unit.function(&f.name).ok_or_else(|| unsupported(f.span, format!("`{}` is not a function", f.name)))?;
        if info.ret != Type::Int {
            return Err(unsupported(f.span, format!("`{}` does not return int", f.name)));
        }
        if info.varargs {
            return Err(unsupported(f.span, format!("`{}` takes variable arguments", f.name)));
        }
        for (name, ty) in &info.params {
            if !matches!(ty, Type::Int | Type::Char) {
                return Err(unsupported(f.span, format!("parameter `{name}` of `{}` is not int or char", f.name)));
            }
            self.declare(name, ty.clone(), f.span)?;
        }
        let params = info.params.clone();
        let mut body = Vec::new();
        for s in &f.body.stmts {
            self.stmt(s, &mut body)?;
        }
        let mut body = finish(body);
        let mut sites = 0;
        number_sites(&mut body, &mut sites);
        if count_nodes(&body) > MAX_NODES {
            return Err(unsupported(f.span, format!("`{}` branches too much to split", f.name)));
        }
        Ok(Normalized { body, vars: self.vars, params, call_sites: sites })
    }

    fn declare(&mut self, name: &str, ty: Type, span: Span) -> Result<(), Diagnostic> {
        if self.vars.contains(name) {
            return Err(unsupported(span, format!("`{name}` is declared more than once")));
        }
        self.vars.vars.push((name.to_string(), ty));
        Ok(())
    }

    fn decls(&mut self, ds: &[VarDecl], out: &mut Vec<Node>) -> Result<(), Diagnostic> {
        for d in ds {
            let ty = self.unit.resolve(&d.ty).unwrap_or(Type::Void);
            if !matches!(ty, Type::Int | Type::Char) {
                return Err(unsupported(d.span, format!("local `{}` is not int or char", d.name)));
            }
            self.declare(&d.name, ty, d.span)?;
            if let Some(init) = &d.init {
                self.assign_to(&d.name, init, out)?;
            }
        }
        Ok(())
    }

    /// `name = e`, splitting out any calls in `e`.
    fn assign_to(&mut self, name: &str, e: &Expr, out: &mut Vec<Node>) -> Result<(), Diagnostic> {
        if let ExprKind::Call(f, args) = &e.kind {
            let callee = self.callee(f)?;
            let args = args.iter().map(|a| self.hoist(a, out)).collect::<Result<_, _>>()?;
            out.push(Node::Call { dst: Some(name.to_string()), callee, args, site: 0 });
            return Ok(());
        }
        let v = self.hoist(e, out)?;
        out.push(Node::Simple(assign(name, v)));
        Ok(())
    }

    fn callee(&self, f: &Expr) -> Result<String, Diagnostic> {
        match &f.kind {
            ExprKind::Ident(n) if self.subset.contains(n) => Ok(n.clone()),
            ExprKind::Ident(n) => Err(unsupported(f.span, format!("call to `{n}`, which is outside the converted functions"))),
            _ => Err(unsupported(f.span, "call through a pointer")),
        }
    }

    /// Returns a call-free copy of `e`; calls become temporaries assigned
    /// by nodes appended to `out`, innermost and leftmost first.
    fn hoist(&mut self, e: &Expr, out: &mut Vec<Node>) -> Result<Expr, Diagnostic> {
        self.check_expr(e)?;
        if !has_call(e) {
            return Ok(e.clone());
        }
        if has_side_effect(e) {
            return Err(unsupported(e.span, "side effect in an expression containing a call"));
        }
        self.hoist_inner(e, out)
    }

    fn hoist_inner(&mut self, e: &Expr, out: &mut Vec<Node>) -> Result<Expr, Diagnostic> {
        if !has_call(e) {
            return Ok(e.clone());
        }
        let mut e = e.clone();
        match &mut e.kind {
            ExprKind::Call(f, args) => {
                let callee = self.callee(f)?;
                let args = args.iter().map(|a| self.hoist_inner(a, out)).collect::<Result<_, _>>()?;
                let t = self.fresh("t");
                self.declare(&t, Type::Int, e.span)?;
                out.push(Node::Call { dst: Some(t.clone()), callee, args, site: 0 });
                return Ok(ident(&t));
            }
            ExprKind::Binary(op, _, b) if matches!(op, BinOp::And | BinOp::Or) && has_call(b) => {
                return Err(unsupported(e.span, "call on the right of `&&` or `||`"));
            }
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                **a = self.hoist_inner(a, out)?;
                **b = self.hoist_inner(b, out)?;
            }
            ExprKind::Unary(_, a) | ExprKind::Cast(_, a) | ExprKind::Member(a, _) | ExprKind::Arrow(a, _) => {
                **a = self.hoist_inner(a, out)?;
            }
            ExprKind::SizeofExpr(_) => {}
            _ => return Err(unsupported(e.span, "unsupported expression around a call")),
        }
        Ok(e)
    }

    fn check_expr(&self, e: &Expr) -> Result<(), Diagnostic> {
        match &e.kind {
            ExprKind::Unary(UnOp::AddrOf, a) => {
                if let ExprKind::Ident(n) = &a.kind {
                    if self.vars.contains(n) {
                        return Err(unsupported(e.span, format!("address of local `{n}` is taken")));
                    }
                }
            }
            ExprKind::Environment | ExprKind::ReturnCont => {
                return Err(unsupported(e.span, "environment forms cannot be converted"));
            }
            ExprKind::Call(f, _) => {
                self.callee(f)?;
            }
            _ => {}
        }
        e.children().into_iter().try_for_each(|c| self.check_expr(c))
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Node>) -> Result<(), Diagnostic> {
        match s {
            Stmt::Decl(ds, _) => self.decls(ds, out),
            Stmt::Empty(_) => Ok(()),
            Stmt::Block(b) => b.stmts.iter().try_for_each(|s| self.stmt(s, out)),
            Stmt::Return(None, span) => Err(unsupported(*span, "return without a value")),
            Stmt::Return(Some(e), _) => {
                let v = self.hoist(e, out)?;
                out.push(Node::Return(v));
                Ok(())
            }
            Stmt::Goto(g) => Err(unsupported(g.span, "goto in a converted function")),
            Stmt::Expr(e, span) => {
                self.check_expr(e)?;
                match &e.kind {
                    ExprKind::Assign(None, lhs, rhs) if has_call(rhs) => match &lhs.kind {
                        ExprKind::Ident(n) if !has_side_effect(rhs) => self.assign_to(n, rhs, out),
                        _ => Err(unsupported(*span, "call result stored through an lvalue other than a variable")),
                    },
                    ExprKind::Call(f, args) => {
                        let callee = self.callee(f)?;
                        let args = args.iter().map(|a| self.hoist(a, out)).collect::<Result<_, _>>()?;
                        out.push(Node::Call { dst: None, callee, args, site: 0 });
                        Ok(())
                    }
                    _ if has_call(e) => {
                        if let ExprKind::Assign(Some(_), lhs, rhs) = &e.kind {
                            if !has_side_effect(rhs) && !has_call(lhs) {
                                let v = self.hoist(rhs, out)?;
                                let mut e = e.clone();
                                if let ExprKind::Assign(_, _, r) = &mut e.kind {
                                    **r = v;
                                }
                                out.push(Node::Simple(Stmt::Expr(e, *span)));
                                return Ok(());
                            }
                        }
                        Err(unsupported(*span, "side effect in an expression containing a call"))
                    }
                    _ => {
                        out.push(Node::Simple(s.clone()));
                        Ok(())
                    }
                }
            }
            Stmt::If { cond, then, els, .. } => {
                let c = self.hoist(cond, out)?;
                if !stmt_has_call_or_return(then) && !els.as_deref().is_some_and(stmt_has_call_or_return) {
                    let s = Stmt::If { cond: c, then: then.clone(), els: els.clone(), span: s.span() };
                    out.push(Node::Simple(self.strip_decls(&s)?));
                    return Ok(());
                }
                let mut t = Vec::new();
                self.stmt(then, &mut t)?;
                let mut f = Vec::new();
                if let Some(e) = els {
                    self.stmt(e, &mut f)?;
                }
                out.push(Node::If { cond: c, then: t, els: f });
                Ok(())
            }
            Stmt::While { span, .. } | Stmt::For { span, .. } => {
                if stmt_has_call_or_return(s) {
                    return Err(unsupported(*span, "loop containing a call or return"));
                }
                let mut err = None;
                crate::visit::walk_stmt_exprs(s, &mut |e| {
                    if err.is_none() {
                        err = self.check_expr(e).err();
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                out.push(Node::Simple(self.strip_decls(s)?));
                Ok(())
            }
        }
    }

    /// Moves declarations out of a call-free statement: they become
    /// assignments, and the variables are declared per segment.
    fn strip_decls(&mut self, s: &Stmt) -> Result<Stmt, Diagnostic> {
        Ok(match s {
            Stmt::Decl(ds, span) => {
                let mut assigns = Vec::new();
                for d in ds {
                    let ty = self.unit.resolve(&d.ty).unwrap_or(Type::Void);
                    if !matches!(ty, Type::Int | Type::Char) {
                        return Err(unsupported(d.span, format!("local `{}` is not int or char", d.name)));
                    }
                    self.declare(&d.name, ty, d.span)?;
                    if let Some(init) = &d.init {
                        assigns.push(assign(&d.name, init.clone()));
                    }
                }
                match assigns.len() {
                    0 => Stmt::Empty(*span),
                    1 => assigns.pop().unwrap(),
                    _ => Stmt::Block(crate::ast::Block { stmts: assigns, span: *span }),
                }
            }
            Stmt::If { cond, then, els, span } => Stmt::If {
                cond: cond.clone(),
                then: Box::new(self.strip_decls(then)?),
                els: els.as_deref().map(|e| self.strip_decls(e)).transpose()?.map(Box::new),
                span: *span,
            },
            Stmt::While { cond, body, span } => {
                Stmt::While { cond: cond.clone(), body: Box::new(self.strip_decls(body)?), span: *span }
            }
            Stmt::For { init, cond, step, body, span } => {
                let init = init.as_deref().map(|i| self.strip_decls(i)).transpose()?;
                // A for header holds one expression, so a lifted declaration
                // list becomes a statement before the loop.
                let (pre, init) = match init {
                    Some(Stmt::Expr(e, sp)) => (None, Some(Box::new(Stmt::Expr(e, sp)))),
                    Some(Stmt::Empty(_)) | None => (None, None),
                    Some(other) => (Some(other), None),
                };
                let f = Stmt::For { init, cond: cond.clone(), step: step.clone(), body: Box::new(self.strip_decls(body)?), span: *span };
                match pre {
                    Some(p) => Stmt::Block(crate::ast::Block { stmts: vec![p, f], span: *span }),
                    None => f,
                }
            }
            Stmt::Block(b) => Stmt::Block(crate::ast::Block {
                stmts: b.stmts.iter().map(|s| self.strip_decls(s)).collect::<Result<_, _>>()?,
                span: b.span,
            }),
            other => other.clone(),
        })
    }
}

fn stmt_has_call_or_return(s: &Stmt) -> bool {
    let mut found = false;
    crate::visit::walk_stmt_exprs(s, &mut |e| found |= matches!(e.kind, ExprKind::Call(..)));
    found || stmt_has_return(s)
}

fn stmt_has_return(s: &Stmt) -> bool {
    match s {
        Stmt::Return(..) | Stmt::Goto(_) => true,
        Stmt::If { then, els, .. } => stmt_has_return(then) || els.as_deref().is_some_and(stmt_has_return),
        Stmt::While { body, .. } | Stmt::For { body, .. } => stmt_has_return(body),
        Stmt::Block(b) => b.stmts.iter().any(stmt_has_return),
        _ => false,
    }
}

/// Tail-duplicates the statements after a branching `if` into both arms,
/// drops code after returns, and ends every path in a return.
pub fn finish(seq: Vec<Node>) -> Vec<Node> {
    let mut out = Vec::new();
    let mut it = seq.into_iter();
    while let Some(n) = it.next() {
        match n {
            Node::Return(_) => {
                out.push(n);
                return out;
            }
            Node::If { cond, mut then, mut els } => {
                let rest: Vec<Node> = it.collect();
                then.extend(rest.iter().cloned());
                els.extend(rest);
                out.push(Node::If { cond, then: finish(then), els: finish(els) });
                return out;
            }
            other => out.push(other),
        }
    }
    out.push(Node::Return(int(0)));
    out
}

/// Numbers call sites in source order.
fn number_sites(seq: &mut [Node], next: &mut usize) {
    for n in seq {
        match n {
            Node::Call { site, .. } => {
                *site = *next;
                *next += 1;
            }
            Node::If { then, els, .. } => {
                number_sites(then, next);
                number_sites(els, next);
            }
            _ => {}
        }
    }
}

fn count_nodes(seq: &[Node]) -> usize {
    seq.iter()
        .map(|n| match n {
            Node::If { then, els, .. } => 1 + count_nodes(then) + count_nodes(els),
            _ => 1,
        })
        .sum()
}

/// Variables read by `seq` before being written, over every path.
pub fn live_in(seq: &[Node], vars: &VarTable, at_return: &BTreeSet<String>) -> BTreeSet<String> {
    let mut live = BTreeSet::new();
    for n in seq.iter().rev() {
        match n {
            Node::Return(e) => {
                live.clear();
                idents(e, &mut live);
                live.extend(at_return.iter().cloned());
            }
            Node::If { cond, then, els } => {
                live = live_in(then, vars, at_return);
                live.extend(live_in(els, vars, at_return));
                idents(cond, &mut live);
            }
            Node::Call { dst, args, .. } => {
                if let Some(d) = dst {
                    live.remove(d);
                }
                for a in args {
                    idents(a, &mut live);
                }
            }
            Node::Simple(s) => {
                if let Stmt::Expr(e, _) = s {
                    if let ExprKind::Assign(None, lhs, rhs) = &e.kind {
                        if let ExprKind::Ident(d) = &lhs.kind {
                            live.remove(d);
                            idents(rhs, &mut live);
                            continue;
                        }
                    }
                }
                stmt_idents(s, &mut live);
            }
        }
    }
    live.retain(|v| vars.contains(v));
    live
}
