//! Renders syntax trees back to CwC source text.

use std::fmt::Write;

use crate::ast::*;
use crate::parser::binop_prec;

/// C declarator syntax for `ty` wrapped around `inner` (a name or empty).
pub fn declare(ty: &TypeSpec, inner: &str) -> String {
    match ty {
        TypeSpec::Int => join("int", inner),
        TypeSpec::Char => join("char", inner),
        TypeSpec::Void => join("void", inner),
        TypeSpec::Code => join("__code", inner),
        TypeSpec::Struct(n) => join(&format!("struct {n}"), inner),
        TypeSpec::Named(n) => join(n, inner),
        TypeSpec::Pointer(t) => {
            let star = format!("*{inner}");
            match **t {
                TypeSpec::Array(..) | TypeSpec::Func(_) => declare(t, &format!("({star})")),
                _ => declare(t, &star),
            }
        }
        TypeSpec::Array(t, n) => declare(t, &format!("{inner}[{n}]")),
        TypeSpec::Func(f) => {
            let params = match &f.params {
                None => String::new(),
                Some(ps) if ps.is_empty() && !f.varargs => "void".into(),
                Some(ps) => {
                    let mut parts: Vec<String> =
                        ps.iter().map(|p| declare(&p.ty, p.name.as_deref().unwrap_or(""))).collect();
                    if f.varargs {
                        parts.push("...".into());
                    }
                    parts.join(", ")
                }
            };
            declare(&f.ret, &format!("{inner}({params})"))
        }
    }
}

fn join(base: &str, inner: &str) -> String {
    if inner.is_empty() {
        base.to_string()
    } else {
        format!("{base} {inner}")
    }
}

pub fn print_unit(unit: &TranslationUnit) -> String {
    let mut p = Printer::default();
    for (i, item) in unit.items.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.item(item);
    }
    p.out
}

pub fn print_item(item: &Item) -> String {
    let mut p = Printer::default();
    p.item(item);
    p.out
}

/// `s` printed at `indent` levels of four spaces.
pub fn print_stmt(s: &Stmt, indent: usize) -> String {
    let mut p = Printer { out: String::new(), indent };
    p.stmt(s);
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0);
    s
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Struct(s) => {
                self.line(&format!("struct {} {{", s.name));
                self.indent += 1;
                for f in &s.fields {
                    self.line(&format!("{};", declare(&f.ty, f.name.as_deref().unwrap_or(""))));
                }
                self.indent -= 1;
                self.line("};");
            }
            Item::Typedef(d) => self.line(&format!("typedef {};", declare(&d.ty, &d.name))),
            Item::Prototype(d) => self.line(&format!("{};", declare(&d.ty, &d.name))),
            Item::Var(d) => self.line(&format!("{};", var_decl(d))),
            Item::Function(f) | Item::CodeSegment(f) => {
                let fty = TypeSpec::Func(FuncSpec {
                    ret: Box::new(f.ret.clone()),
                    params: Some(f.params.clone()),
                    varargs: f.varargs,
                });
                let head = if f.implicit_int {
                    // Drop the leading `int ` to preserve the old-style spelling.
                    declare(&fty, &f.name).trim_start_matches("int ").to_string()
                } else {
                    declare(&fty, &f.name)
                };
                self.line(&format!("{head} {{"));
                self.indent += 1;
                for s in &f.body.stmts {
                    self.stmt(s);
                }
                self.indent -= 1;
                self.line("}");
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl(ds, _) => self.line(&format!("{};", decl_group(ds))),
            Stmt::Expr(e, _) => self.line(&format!("{};", print_expr(e))),
            Stmt::Return(None, _) => self.line("return;"),
            Stmt::Return(Some(e), _) => self.line(&format!("return {};", print_expr(e))),
            Stmt::Goto(g) => self.line(&goto_text(g)),
            Stmt::Empty(_) => self.line(";"),
            Stmt::Block(b) => {
                self.line("{");
                self.indent += 1;
                for s in &b.stmts {
                    self.stmt(s);
                }
                self.indent -= 1;
                self.line("}");
            }
            Stmt::If { cond, then, els, .. } => {
                self.line(&format!("if ({})", print_expr(cond)));
                self.nested(then);
                if let Some(e) = els {
                    self.line("else");
                    self.nested(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                self.line(&format!("while ({})", print_expr(cond)));
                self.nested(body);
            }
            Stmt::For { init, cond, step, body, .. } => {
                let init = match init.as_deref() {
                    None => ";".to_string(),
                    Some(Stmt::Decl(ds, _)) => format!("{};", decl_group(ds)),
                    Some(Stmt::Expr(e, _)) => format!("{};", print_expr(e)),
                    Some(_) => ";".to_string(),
                };
                let cond = cond.as_ref().map(print_expr).unwrap_or_default();
                let step = step.as_ref().map(print_expr).unwrap_or_default();
                self.line(&format!("for ({init} {cond}; {step})"));
                self.nested(body);
            }
        }
    }

    fn nested(&mut self, s: &Stmt) {
        if let Stmt::Block(_) = s {
            self.stmt(s);
        } else {
            self.indent += 1;
            self.stmt(s);
            self.indent -= 1;
        }
    }
}

fn base_of(ty: &TypeSpec) -> &TypeSpec {
    match ty {
        TypeSpec::Pointer(t) | TypeSpec::Array(t, _) => base_of(t),
        TypeSpec::Func(f) => base_of(&f.ret),
        t => t,
    }
}

/// One declaration statement; declarators sharing a base type are printed
/// as a single comma-separated list so the grouping survives re-parsing.
fn decl_group(ds: &[VarDecl]) -> String {
    let base = declare(base_of(&ds[0].ty), "");
    if ds.iter().all(|d| declare(base_of(&d.ty), "") == base) {
        let parts: Vec<String> = ds
            .iter()
            .map(|d| var_decl(d)[base.len()..].trim_start().to_string())
            .collect();
        format!("{base} {}", parts.join(", "))
    } else {
        ds.iter().map(var_decl).collect::<Vec<_>>().join("; ")
    }
}

fn var_decl(d: &VarDecl) -> String {
    match &d.init {
        Some(e) => format!("{} = {}", declare(&d.ty, &d.name), print_expr(e)),
        None => declare(&d.ty, &d.name),
    }
}

pub fn goto_text(g: &Goto) -> String {
    let target = match &g.target {
        GotoTarget::Direct(n, _) => n.clone(),
        GotoTarget::Indirect(e) => format!("({})", print_expr(e)),
    };
    let args: Vec<String> = g.args.iter().map(print_expr).collect();
    match &g.env {
        Some(env) => format!("goto {target}({}), {};", args.join(", "), print_expr(env)),
        None => format!("goto {target}({});", args.join(", ")),
    }
}

const PREC_ASSIGN: u8 = 0;
const PREC_UNARY: u8 = 20;
const PREC_POSTFIX: u8 = 21;

fn expr(out: &mut String, e: &Expr, ctx: u8) {
    let prec = match &e.kind {
        ExprKind::Assign(..) => PREC_ASSIGN,
        ExprKind::Binary(op, ..) => binop_prec(*op),
        ExprKind::Unary(UnOp::PostInc | UnOp::PostDec, _) => PREC_POSTFIX,
        ExprKind::Unary(..) | ExprKind::Cast(..) | ExprKind::SizeofExpr(_) => PREC_UNARY,
        _ => PREC_POSTFIX,
    };
    let paren = prec < ctx;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Char(text, _) | ExprKind::Str(text) => out.push_str(text),
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Environment => out.push_str("__environment"),
        ExprKind::ReturnCont => out.push_str("__return"),
        ExprKind::Binary(op, a, b) => {
            expr(out, a, prec);
            write!(out, " {} ", op.as_str()).unwrap();
            expr(out, b, prec + 1);
        }
        ExprKind::Assign(op, a, b) => {
            expr(out, a, PREC_UNARY);
            match op {
                Some(op) => write!(out, " {}= ", op.as_str()).unwrap(),
                None => out.push_str(" = "),
            }
            expr(out, b, PREC_ASSIGN);
        }
        ExprKind::Unary(op, a) => {
            let (pre, post) = match op {
                UnOp::Neg => ("-", ""),
                UnOp::Not => ("!", ""),
                UnOp::BitNot => ("~", ""),
                UnOp::Deref => ("*", ""),
                UnOp::AddrOf => ("&", ""),
                UnOp::PreInc => ("++", ""),
                UnOp::PreDec => ("--", ""),
                UnOp::PostInc => ("", "++"),
                UnOp::PostDec => ("", "--"),
            };
            out.push_str(pre);
            // Keep `- -x` and `- (-1)` from fusing into `--`.
            if matches!(op, UnOp::Neg) && matches!(&a.kind, ExprKind::Unary(UnOp::Neg | UnOp::PreDec, _) | ExprKind::Int(i64::MIN..=-1)) {
                out.push(' ');
            }
            expr(out, a, if post.is_empty() { PREC_UNARY } else { PREC_POSTFIX });
            out.push_str(post);
        }
        ExprKind::Call(f, args) => {
            expr(out, f, PREC_POSTFIX);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, PREC_ASSIGN + 1);
            }
            out.push(')');
        }
        ExprKind::Member(a, f) => {
            expr(out, a, PREC_POSTFIX);
            write!(out, ".{f}").unwrap();
        }
        ExprKind::Arrow(a, f) => {
            expr(out, a, PREC_POSTFIX);
            write!(out, "->{f}").unwrap();
        }
        ExprKind::Index(a, i) => {
            expr(out, a, PREC_POSTFIX);
            out.push('[');
            expr(out, i, PREC_ASSIGN);
            out.push(']');
        }
        ExprKind::Cast(t, a) => {
            write!(out, "({})", declare(t, "")).unwrap();
            expr(out, a, PREC_UNARY);
        }
        ExprKind::SizeofType(t) => write!(out, "sizeof({})", declare(t, "")).unwrap(),
        ExprKind::SizeofExpr(a) => {
            out.push_str("sizeof ");
            expr(out, a, PREC_UNARY);
        }
    }
    if paren {
        out.push(')');
    }
}
