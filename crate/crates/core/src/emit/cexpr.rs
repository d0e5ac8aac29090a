//! C text for types and expressions. Every compound expression is wrapped
//! in parentheses so the output never depends on C precedence.

use crate::ast::{BinOp, Expr, ExprKind, TypeSpec, UnOp};
use crate::lower::{mangle_function, mangle_global, mangle_segment, LoweredSegment, LoweredUnit, ID_OVERFLOW};
use crate::sema::{builtins, Binding, Type};

use super::Backend;

/// Declarator text for `name` of type `ty`; `name` may be empty.
pub fn c_decl(ty: &Type, name: &str) -> String {
    match ty {
        Type::Int => join("int", name),
        Type::Char => join("char", name),
        Type::Void => join("void", name),
        Type::Struct(s) => join(&format!("struct {s}"), name),
        Type::Pointer(inner) if matches!(**inner, Type::CodeSegment(_)) => join("cbc_segptr", name),
        Type::Pointer(inner) => {
            let star = format!("*{name}");
            match **inner {
                Type::Array(..) | Type::Function(_) => c_decl(inner, &format!("({star})")),
                _ => c_decl(inner, &star),
            }
        }
        Type::Array(inner, n) => c_decl(inner, &format!("{name}[{n}]")),
        Type::Function(f) => {
            let params = match &f.params {
                None => String::new(),
                Some(ps) if ps.is_empty() && !f.varargs => "void".to_string(),
                Some(ps) => {
                    let mut v: Vec<String> = ps.iter().map(|p| c_decl(p, "")).collect();
                    if f.varargs {
                        v.push("...".to_string());
                    }
                    v.join(", ")
                }
            };
            c_decl(&f.ret, &format!("{name}({params})"))
        }
        Type::CodeSegment(_) => join("cbc_seg_fn", name),
    }
}

fn join(base: &str, name: &str) -> String {
    if name.is_empty() {
        base.to_string()
    } else {
        format!("{base} {name}")
    }
}

pub(super) struct ExprCx<'a> {
    pub lu: &'a LoweredUnit,
    pub backend: Backend,
    pub seg: Option<&'a LoweredSegment>,
}

impl ExprCx<'_> {
    pub fn type_text(&self, spec: &TypeSpec) -> String {
        match self.lu.unit.resolve(spec) {
            Some(t) => c_decl(&t, ""),
            None => "int".to_string(),
        }
    }

    pub fn param_slot(&self, index: usize) -> String {
        let seg = self.seg.expect("segment parameter outside a segment");
        let slot = &seg.sig.slots[index];
        format!("CBC_SLOT({}, {})", c_decl(&slot.ty, ""), slot.word)
    }

    pub fn segment_value(&self, name: &str) -> String {
        if name == builtins::STACK_OVERFLOW {
            return "CBC_OVERFLOW_SEG".to_string();
        }
        match self.backend {
            Backend::Trampoline => format!("((cbc_segptr){})", id_const(name)),
            Backend::Direct => format!("(&{})", mangle_segment(name)),
        }
    }

    pub fn ident(&self, name: &str, binding: Option<&Binding>) -> String {
        match binding {
            Some(Binding::SegParam(i)) => self.param_slot(*i),
            Some(Binding::Global) => mangle_global(name),
            Some(Binding::Function) if self.lu.is_defined_function(name) => mangle_function(name),
            Some(Binding::Segment) => self.segment_value(name),
            Some(Binding::Builtin) if name == builtins::STACK_OVERFLOW => self.segment_value(name),
            _ => name.to_string(),
        }
    }

    pub fn expr(&self, e: &Expr) -> String {
        let unit = &self.lu.unit;
        match &e.kind {
            ExprKind::Int(v) => v.to_string(),
            ExprKind::Char(text, _) | ExprKind::Str(text) => text.clone(),
            ExprKind::Ident(name) => self.ident(name, unit.binding(e.id)),
            ExprKind::Environment => "((void *)cbc_env_self)".to_string(),
            ExprKind::ReturnCont => "CBC_RETURN_SEG".to_string(),
            ExprKind::Binary(op, a, b) => format!("({} {} {})", self.expr(a), op.as_str(), self.expr(b)),
            ExprKind::Unary(op, a) => {
                // Segment designators and segment pointers are plain values
                // in the emitted C, so `*p` and `&seg` are identities.
                let code = unit.type_of(a.id).is_code_ptr() || matches!(unit.type_of(a.id), Type::CodeSegment(_));
                let x = self.expr(a);
                match op {
                    UnOp::Deref | UnOp::AddrOf if code => x,
                    UnOp::Neg => format!("(-{x})"),
                    UnOp::Not => format!("(!{x})"),
                    UnOp::BitNot => format!("(~{x})"),
                    UnOp::Deref => format!("(*{x})"),
                    UnOp::AddrOf => format!("(&{x})"),
                    UnOp::PreInc => format!("(++{x})"),
                    UnOp::PreDec => format!("(--{x})"),
                    UnOp::PostInc => format!("({x}++)"),
                    UnOp::PostDec => format!("({x}--)"),
                }
            }
            ExprKind::Assign(op, a, b) => {
                let op = op.map_or("=".to_string(), |o: BinOp| format!("{}=", o.as_str()));
                format!("({} {op} {})", self.expr(a), self.expr(b))
            }
            ExprKind::Call(f, args) => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                let callee = match &f.kind {
                    ExprKind::Ident(_) => self.expr(f),
                    _ => format!("({})", self.expr(f)),
                };
                format!("{callee}({})", args.join(", "))
            }
            ExprKind::Member(a, f) => format!("({}.{f})", self.expr(a)),
            ExprKind::Arrow(a, f) => format!("({}->{f})", self.expr(a)),
            ExprKind::Index(a, i) => format!("({}[{}])", self.expr(a), self.expr(i)),
            ExprKind::Cast(spec, a) => format!("(({}){})", self.type_text(spec), self.expr(a)),
            ExprKind::SizeofType(spec) => format!("sizeof({})", self.type_text(spec)),
            ExprKind::SizeofExpr(a) => format!("sizeof({})", self.expr(a)),
        }
    }
}

pub fn id_const(name: &str) -> String {
    if name == builtins::STACK_OVERFLOW {
        return ID_OVERFLOW.to_string();
    }
    format!("cbc_id_{name}")
}
