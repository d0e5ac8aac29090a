use std::collections::HashMap;

use super::types::{frame_bytes, frame_layout, FnType, StructTable, Type};
use super::*;
use crate::ast::*;
use crate::diag::{self, Code, Diagnostic};

pub(super) fn resolve_spec(typedefs: &HashMap<String, Type>, spec: &TypeSpec) -> Result<Type, String> {
    Ok(match spec {
        TypeSpec::Int => Type::Int,
        TypeSpec::Char => Type::Char,
        TypeSpec::Void => Type::Void,
        TypeSpec::Code => return Err("`__code` is only valid as a code segment return marker".into()),
        TypeSpec::Struct(n) => Type::Struct(n.clone()),
        TypeSpec::Named(n) => typedefs.get(n).cloned().ok_or_else(|| format!("unknown type `{n}`"))?,
        TypeSpec::Pointer(t) => Type::ptr(resolve_spec(typedefs, t)?),
        TypeSpec::Array(t, n) => Type::Array(Box::new(resolve_spec(typedefs, t)?), *n),
        TypeSpec::Func(f) => {
            let params = match &f.params {
                None => None,
                Some(ps) => Some(ps.iter().map(|p| resolve_spec(typedefs, &p.ty)).collect::<Result<Vec<_>, _>>()?),
            };
            if *f.ret == TypeSpec::Code {
                Type::CodeSegment(params)
            } else {
                Type::Function(FnType { params, ret: Box::new(resolve_spec(typedefs, &f.ret)?), varargs: f.varargs })
            }
        }
    })
}

#[derive(Clone)]
struct Sym {
    ty: Type,
    binding: Binding,
}

enum Ctx {
    Segment(String),
    Function { name: String, ret: Type },
}

pub(super) struct Checker {
    structs: StructTable,
    typedefs: HashMap<String, Type>,
    globals: HashMap<String, Sym>,
    scopes: Vec<HashMap<String, Sym>>,
    expr_types: HashMap<u32, Type>,
    bindings: HashMap<u32, Binding>,
    gotos: HashMap<usize, GotoInfo>,
    segments: Vec<SegmentSignature>,
    defined_segments: Vec<String>,
    extern_segments: Vec<SegmentSignature>,
    functions: Vec<FunctionInfo>,
    global_vars: Vec<(String, Type)>,
    diags: Vec<Diagnostic>,
    ctx: Option<Ctx>,
    captures: bool,
}

const RESERVED_PREFIX: &str = "cbc_";

impl Checker {
    pub(super) fn run(ast: TranslationUnit) -> Result<TypedUnit, Vec<Diagnostic>> {
        let mut c = Checker {
            structs: StructTable::default(),
            typedefs: HashMap::new(),
            globals: HashMap::new(),
            scopes: Vec::new(),
            expr_types: HashMap::new(),
            bindings: HashMap::new(),
            gotos: HashMap::new(),
            segments: Vec::new(),
            defined_segments: Vec::new(),
            extern_segments: Vec::new(),
            functions: Vec::new(),
            global_vars: Vec::new(),
            diags: Vec::new(),
            ctx: None,
            captures: false,
        };
        for (name, ft) in builtins::functions() {
            c.globals.insert(name.into(), Sym { ty: Type::Function(ft), binding: Binding::Builtin });
        }
        for (name, ty) in builtins::globals() {
            c.globals.insert(name.into(), Sym { ty, binding: Binding::Builtin });
        }
        for name in builtins::segments() {
            c.globals.insert(name.into(), Sym { ty: Type::CodeSegment(Some(vec![])), binding: Binding::Builtin });
        }
        c.declare_items(&ast);
        for item in &ast.items {
            match item {
                Item::Function(f) | Item::CodeSegment(f) => c.check_body(f),
                Item::Var(d) => {
                    if let Some(init) = &d.init {
                        let ty = c.globals.get(&d.name).map(|s| s.ty.clone());
                        let ity = c.expr(init);
                        if let Some(ty) = ty {
                            c.check_assignable(&ty, &ity, init, false);
                        }
                    }
                }
                _ => {}
            }
        }
        for name in &c.defined_segments.clone() {
            c.extern_segments.retain(|s| &s.name != name);
        }
        let (errors, mut warnings): (Vec<_>, Vec<_>) = c.diags.into_iter().partition(|d| d.is_error());
        diag::sort(&mut warnings);
        if !errors.is_empty() {
            let mut all: Vec<_> = errors.into_iter().chain(warnings).collect();
            diag::sort(&mut all);
            return Err(all);
        }
        Ok(TypedUnit {
            ast,
            structs: c.structs,
            typedefs: c.typedefs,
            expr_types: c.expr_types,
            bindings: c.bindings,
            segments: c.segments,
            extern_segments: c.extern_segments,
            functions: c.functions,
            globals: c.global_vars,
            gotos: c.gotos,
            warnings,
        })
    }

    fn err(&mut self, code: Code, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(code, span, msg));
    }

    fn resolve(&mut self, spec: &TypeSpec, span: Span) -> Type {
        match resolve_spec(&self.typedefs, spec) {
            Ok(t) => t,
            Err(m) => {
                self.err(Code::Type, span, m);
                Type::Int
            }
        }
    }

    fn check_reserved(&mut self, name: &str, span: Span) {
        if name.starts_with(RESERVED_PREFIX) {
            self.err(Code::Type, span, format!("identifier `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"));
        }
    }

    fn signature(&mut self, name: &str, params: &[(String, Type)], span: Span) -> SegmentSignature {
        let tys: Vec<Type> = params.iter().map(|(_, t)| t.clone()).collect();
        let slots = match frame_layout(&self.structs, &tys) {
            Some(s) => s,
            None => {
                self.err(Code::Type, span, format!("code segment `{name}` has a parameter of incomplete type"));
                Vec::new()
            }
        };
        SegmentSignature { name: name.to_string(), params: params.to_vec(), frame_bytes: frame_bytes(&slots), slots, span }
    }

    fn declare_global(&mut self, name: &str, sym: Sym, span: Span, is_definition: bool) {
        self.check_reserved(name, span);
        if let Some(prev) = self.globals.get(name) {
            let compatible = prev.ty == sym.ty
                || matches!((&prev.ty, &sym.ty), (Type::CodeSegment(None), Type::CodeSegment(_)) | (Type::CodeSegment(_), Type::CodeSegment(None)));
            if prev.binding == Binding::Builtin && compatible {
                return;
            }
            if !compatible {
                self.err(Code::Type, span, format!("conflicting declaration of `{name}`"));
                return;
            }
            if !is_definition {
                return;
            }
        }
        self.globals.insert(name.to_string(), sym);
    }

    fn declare_items(&mut self, ast: &TranslationUnit) {
        for item in &ast.items {
            match item {
                Item::Struct(s) => {
                    let mut fields = Vec::new();
                    for f in &s.fields {
                        let ty = self.resolve(&f.ty, f.span);
                        let fname = f.name.clone().unwrap_or_default();
                        if fields.iter().any(|(n, _)| n == &fname) {
                            self.err(Code::Type, f.span, format!("duplicate field `{fname}`"));
                        }
                        fields.push((fname, ty));
                    }
                    if self.structs.get(&s.name).is_some() {
                        self.err(Code::Type, s.span, format!("redefinition of struct `{}`", s.name));
                    } else if self.structs.define(&s.name, &fields).is_none() {
                        self.err(Code::Type, s.span, format!("struct `{}` has a field of incomplete type", s.name));
                    }
                }
                Item::Typedef(d) => {
                    let ty = self.resolve(&d.ty, d.span);
                    self.typedefs.insert(d.name.clone(), ty);
                }
                Item::Prototype(d) => {
                    let ty = self.resolve(&d.ty, d.span);
                    let binding = if matches!(ty, Type::CodeSegment(_)) { Binding::Segment } else { Binding::Function };
                    if let Type::CodeSegment(Some(ps)) = &ty {
                        if !self.globals.contains_key(&d.name) {
                            let params: Vec<(String, Type)> = ps.iter().map(|t| (String::new(), t.clone())).collect();
                            let sig = self.signature(&d.name, &params, d.span);
                            self.extern_segments.push(sig);
                        }
                    }
                    self.declare_global(&d.name, Sym { ty, binding }, d.span, false);
                }
                Item::Var(d) => {
                    let ty = self.resolve(&d.ty, d.span);
                    if !self.structs.is_complete(&ty) {
                        self.err(Code::Type, d.span, format!("variable `{}` has incomplete type", d.name));
                    }
                    self.global_vars.push((d.name.clone(), ty.clone()));
                    self.declare_global(&d.name, Sym { ty, binding: Binding::Global }, d.span, true);
                }
                Item::Function(f) | Item::CodeSegment(f) => {
                    let mut params = Vec::new();
                    for p in &f.params {
                        let ty = self.resolve(&p.ty, p.span);
                        let name = p.name.clone().unwrap_or_default();
                        if !name.is_empty() && params.iter().any(|(n, _): &(String, Type)| n == &name) {
                            self.err(Code::Type, p.span, format!("duplicate parameter `{name}`"));
                        }
                        params.push((name, ty));
                    }
                    let tys: Vec<Type> = params.iter().map(|(_, t)| t.clone()).collect();
                    if self.defined_segments.contains(&f.name) || self.functions.iter().any(|g| g.name == f.name) {
                        self.err(Code::Type, f.span, format!("redefinition of `{}`", f.name));
                        continue;
                    }
                    if f.is_code_segment() {
                        let sig = self.signature(&f.name, &params, f.span);
                        self.segments.push(sig);
                        self.defined_segments.push(f.name.clone());
                        let sym = Sym { ty: Type::CodeSegment(Some(tys)), binding: Binding::Segment };
                        self.declare_global(&f.name, sym, f.span, true);
                    } else {
                        let ret = self.resolve(&f.ret, f.span);
                        for (n, t) in &params {
                            if !self.structs.is_complete(t) {
                                self.err(Code::Type, f.span, format!("parameter `{n}` has incomplete type"));
                            }
                        }
                        self.functions.push(FunctionInfo {
                            name: f.name.clone(),
                            ret: ret.clone(),
                            params,
                            varargs: f.varargs,
                            captures_env: false,
                        });
                        let ft = FnType { params: Some(tys), ret: Box::new(ret), varargs: f.varargs };
                        self.declare_global(&f.name, Sym { ty: Type::Function(ft), binding: Binding::Function }, f.span, true);
                    }
                }
            }
        }
    }

    fn lookup(&self, name: &str) -> Option<Sym> {
        self.scopes.iter().rev().find_map(|s| s.get(name)).or_else(|| self.globals.get(name)).cloned()
    }

    fn bind_local(&mut self, name: &str, sym: Sym, span: Span) {
        self.check_reserved(name, span);
        let scope = self.scopes.last_mut().expect("local scope");
        if scope.contains_key(name) {
            self.diags.push(Diagnostic::new(Code::Type, span, format!("redeclaration of `{name}`")));
        }
        scope.insert(name.to_string(), sym);
    }

    fn check_body(&mut self, f: &FuncDef) {
        self.scopes.push(HashMap::new());
        self.captures = false;
        if f.is_code_segment() {
            self.ctx = Some(Ctx::Segment(f.name.clone()));
            let sig = self.segments.iter().find(|s| s.name == f.name).cloned();
            if let Some(sig) = sig {
                for (i, (name, ty)) in sig.params.iter().enumerate() {
                    if !name.is_empty() {
                        let sym = Sym { ty: ty.clone(), binding: Binding::SegParam(i) };
                        self.bind_local(name, sym, f.params[i].span);
                    }
                }
            }
        } else {
            let info = self.functions.iter().find(|g| g.name == f.name).cloned();
            let Some(info) = info else {
                self.scopes.pop();
                return;
            };
            self.ctx = Some(Ctx::Function { name: f.name.clone(), ret: info.ret.clone() });
            for (i, (name, ty)) in info.params.iter().enumerate() {
                if !name.is_empty() {
                    self.bind_local(name, Sym { ty: ty.clone(), binding: Binding::FnParam }, f.params[i].span);
                }
            }
        }
        for s in &f.body.stmts {
            self.stmt(s);
        }
        self.scopes.pop();
        let mut flow_diags = Vec::new();
        let completes = flow::block_completes(&f.body.stmts, &mut flow_diags);
        self.diags.extend(flow_diags);
        if f.is_code_segment() && completes {
            self.err(Code::Fallthrough, f.span, format!("control reaches the end of code segment `{}` without a goto", f.name));
        }
        if let Some(Ctx::Function { name, ret }) = self.ctx.take() {
            if self.captures {
                if !matches!(ret, Type::Int | Type::Void) {
                    self.err(Code::Type, f.span, format!("environment-capturing function `{name}` must return int or void"));
                }
                if let Some(info) = self.functions.iter_mut().find(|g| g.name == name) {
                    info.captures_env = true;
                }
            }
        }
        self.ctx = None;
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl(ds, _) => {
                for d in ds {
                    let ty = self.resolve(&d.ty, d.span);
                    if matches!(ty, Type::Function(_) | Type::CodeSegment(_)) || !self.structs.is_complete(&ty) {
                        self.err(Code::Type, d.span, format!("local `{}` has incomplete or non-object type", d.name));
                    }
                    if let Some(init) = &d.init {
                        let ity = self.expr(init);
                        self.check_assignable(&ty, &ity, init, false);
                    }
                    self.bind_local(&d.name, Sym { ty, binding: Binding::Local }, d.span);
                }
            }
            Stmt::Expr(e, _) => {
                self.expr(e);
            }
            Stmt::If { cond, then, els, .. } => {
                self.condition(cond);
                self.nested(then);
                if let Some(e) = els {
                    self.nested(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                self.condition(cond);
                self.nested(body);
            }
            Stmt::For { init, cond, step, body, .. } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.condition(c);
                }
                if let Some(s) = step {
                    self.expr(s);
                }
                self.nested(body);
                self.scopes.pop();
            }
            Stmt::Return(value, span) => match &self.ctx {
                Some(Ctx::Segment(name)) => {
                    let msg = format!("return inside code segment `{name}`; code segments exit only by goto");
                    self.err(Code::RetInSeg, *span, msg);
                    if let Some(v) = value {
                        self.expr(v);
                    }
                }
                Some(Ctx::Function { ret, .. }) => {
                    let ret = ret.clone();
                    match value {
                        Some(v) => {
                            let vt = self.expr(v);
                            if ret == Type::Void {
                                self.err(Code::Type, *span, "return with a value in a void function");
                            } else {
                                self.check_assignable(&ret, &vt, v, false);
                            }
                        }
                        None if ret != Type::Void => {
                            self.err(Code::Type, *span, "return without a value in a non-void function")
                        }
                        None => {}
                    }
                }
                None => {}
            },
            Stmt::Goto(g) => self.goto(g),
            Stmt::Block(b) => {
                self.scopes.push(HashMap::new());
                for s in &b.stmts {
                    self.stmt(s);
                }
                self.scopes.pop();
            }
            Stmt::Empty(_) => {}
        }
    }

    fn nested(&mut self, s: &Stmt) {
        self.scopes.push(HashMap::new());
        self.stmt(s);
        self.scopes.pop();
    }

    fn condition(&mut self, e: &Expr) {
        let t = self.expr(e).decay();
        if !t.is_scalar() {
            self.err(Code::Type, e.span, format!("condition has non-scalar type `{t}`"));
        }
    }

    fn goto(&mut self, g: &Goto) {
        let from_segment = match &self.ctx {
            Some(Ctx::Segment(n)) => Some(n.clone()),
            _ => None,
        };
        let arg_types: Vec<Type> = g.args.iter().map(|a| self.expr(a)).collect();
        if let Some(env) = &g.env {
            let et = self.expr(env).decay();
            if !et.is_pointer() {
                self.err(Code::Type, env.span, format!("environment operand has type `{et}`, expected a pointer"));
            }
        }
        let mut target_binding = None;
        let (dest, params) = match &g.target {
            GotoTarget::Direct(name, span) => match self.lookup(name) {
                Some(Sym { ty: Type::CodeSegment(params), .. }) => (GotoDest::Segment(name.clone()), params),
                Some(Sym { ty: Type::Function(_), .. }) => {
                    self.err(Code::GotoNonSeg, *span, format!("goto target `{name}` is a C function, not a code segment"));
                    return;
                }
                Some(Sym { ty, binding }) if ty.is_code_ptr() => {
                    target_binding = Some(binding);
                    (GotoDest::Pointer, ty.code_params().cloned().flatten())
                }
                Some(Sym { ty, .. }) => {
                    self.err(Code::Type, *span, format!("goto target `{name}` has type `{ty}`, not a code segment"));
                    return;
                }
                None => {
                    // Implicitly declared, like an undeclared C function call.
                    let promoted: Vec<Type> = arg_types.iter().map(promote).collect();
                    let params: Vec<(String, Type)> = promoted.iter().map(|t| (String::new(), t.clone())).collect();
                    let sig = self.signature(name, &params, *span);
                    self.extern_segments.push(sig);
                    self.diags.push(Diagnostic::new(
                        Code::ImplicitSegment,
                        *span,
                        format!("implicit declaration of code segment `{name}`"),
                    ));
                    let sym = Sym { ty: Type::CodeSegment(Some(promoted.clone())), binding: Binding::Segment };
                    self.globals.insert(name.clone(), sym);
                    (GotoDest::Segment(name.clone()), Some(promoted))
                }
            },
            GotoTarget::Indirect(e) => {
                let t = self.expr(e);
                match t.code_params() {
                    Some(p) => (GotoDest::Pointer, p.clone()),
                    None if matches!(t, Type::Function(_)) || matches!(&t, Type::Pointer(f) if matches!(**f, Type::Function(_))) => {
                        self.err(Code::GotoNonSeg, e.span, "goto target is a C function, not a code segment");
                        return;
                    }
                    None => {
                        self.err(Code::Type, e.span, format!("goto target has type `{t}`, not a code segment"));
                        return;
                    }
                }
            }
        };
        let param_types = match params {
            None => arg_types.iter().map(promote).collect(),
            Some(ps) => {
                if ps.len() != g.args.len() {
                    self.err(
                        Code::Arity,
                        g.span,
                        format!("goto passes {} argument(s) to a segment taking {}", g.args.len(), ps.len()),
                    );
                    return;
                }
                for ((p, a), at) in ps.iter().zip(&g.args).zip(&arg_types) {
                    self.check_assignable(p, at, a, true);
                }
                ps
            }
        };
        self.gotos.insert(g.span.start, GotoInfo { from_segment, dest, param_types, arg_types, target_binding });
    }

    fn record(&mut self, e: &Expr, t: Type) -> Type {
        self.expr_types.insert(e.id.0, t.clone());
        t
    }

    fn expr(&mut self, e: &Expr) -> Type {
        let t = self.expr_inner(e);
        self.record(e, t)
    }

    fn expr_inner(&mut self, e: &Expr) -> Type {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Char(..) => Type::Int,
            ExprKind::Str(_) => Type::ptr(Type::Char),
            ExprKind::Ident(name) => match self.lookup(name) {
                Some(sym) => {
                    self.bindings.insert(e.id.0, sym.binding);
                    sym.ty
                }
                None => {
                    self.err(Code::Undef, e.span, format!("use of undeclared identifier `{name}`"));
                    Type::Int
                }
            },
            ExprKind::Environment | ExprKind::ReturnCont => {
                let what = if matches!(e.kind, ExprKind::Environment) { "__environment" } else { "__return" };
                match &self.ctx {
                    Some(Ctx::Function { ret, .. }) => {
                        let ret = ret.clone();
                        self.captures = true;
                        if matches!(e.kind, ExprKind::Environment) {
                            Type::ptr(Type::Void)
                        } else {
                            let status = if ret == Type::Void { Type::Int } else { ret };
                            Type::code_ptr(Some(vec![status]))
                        }
                    }
                    _ => {
                        self.err(Code::EnvOutsideFn, e.span, format!("`{what}` is only available inside a C function"));
                        Type::ptr(Type::Void)
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (ta, tb) = (self.expr(a).decay(), self.expr(b).decay());
                self.binary(*op, &ta, &tb, e.span)
            }
            ExprKind::Unary(op, a) => {
                let ta = self.expr(a);
                match op {
                    UnOp::Neg | UnOp::BitNot => {
                        if !ta.is_integer() {
                            self.err(Code::Type, e.span, format!("invalid operand type `{ta}`"));
                        }
                        Type::Int
                    }
                    UnOp::Not => {
                        if !ta.decay().is_scalar() {
                            self.err(Code::Type, e.span, format!("invalid operand type `{ta}`"));
                        }
                        Type::Int
                    }
                    UnOp::Deref => match ta.decay() {
                        Type::Pointer(t) if *t == Type::Void => {
                            self.err(Code::Type, e.span, "dereference of `void *`");
                            Type::Int
                        }
                        Type::Pointer(t) => *t,
                        t => {
                            self.err(Code::Type, e.span, format!("dereference of non-pointer type `{t}`"));
                            Type::Int
                        }
                    },
                    UnOp::AddrOf => {
                        if !is_lvalue(a) && !matches!(ta, Type::Function(_) | Type::CodeSegment(_)) {
                            self.err(Code::Type, e.span, "cannot take the address of an rvalue");
                        }
                        Type::ptr(ta)
                    }
                    UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => {
                        if !is_lvalue(a) || !ta.is_scalar() || ta.is_code_ptr() {
                            self.err(Code::Type, e.span, "increment/decrement needs a scalar lvalue");
                        }
                        ta
                    }
                }
            }
            ExprKind::Assign(op, lhs, rhs) => {
                let lt = self.expr(lhs);
                let rt = self.expr(rhs);
                if !is_lvalue(lhs) || matches!(lt, Type::Array(..) | Type::Function(_) | Type::CodeSegment(_)) {
                    self.err(Code::Type, lhs.span, "left side of assignment is not assignable");
                } else if let Some(op) = op {
                    let res = self.binary(*op, &lt.decay(), &rt.decay(), e.span);
                    self.check_assignable(&lt, &res, rhs, false);
                } else {
                    self.check_assignable(&lt, &rt, rhs, false);
                }
                lt
            }
            ExprKind::Call(callee, args) => {
                let ct = self.expr(callee);
                let arg_types: Vec<Type> = args.iter().map(|a| self.expr(a)).collect();
                if ct.code_params().is_some() {
                    self.err(Code::SegCall, e.span, "code segment invoked with call syntax; use goto");
                    return Type::Void;
                }
                let ft = match ct {
                    Type::Function(ft) => ft,
                    Type::Pointer(t) if matches!(*t, Type::Function(_)) => match *t {
                        Type::Function(ft) => ft,
                        _ => unreachable!(),
                    },
                    t => {
                        self.err(Code::Type, callee.span, format!("called object has type `{t}`"));
                        return Type::Int;
                    }
                };
                if let Some(ps) = &ft.params {
                    let arity_ok = if ft.varargs { args.len() >= ps.len() } else { args.len() == ps.len() };
                    if !arity_ok {
                        self.err(Code::Arity, e.span, format!("call passes {} argument(s) to a function taking {}", args.len(), ps.len()));
                    } else {
                        for ((p, a), at) in ps.iter().zip(args).zip(&arg_types) {
                            self.check_assignable(p, at, a, false);
                        }
                    }
                }
                *ft.ret
            }
            ExprKind::Member(a, field) => {
                let ta = self.expr(a);
                self.field_type(&ta, field, e.span)
            }
            ExprKind::Arrow(a, field) => match self.expr(a).decay() {
                Type::Pointer(t) => self.field_type(&t, field, e.span),
                t => {
                    self.err(Code::Type, e.span, format!("`->` applied to non-pointer type `{t}`"));
                    Type::Int
                }
            },
            ExprKind::Index(a, i) => {
                let ta = self.expr(a).decay();
                let ti = self.expr(i);
                if !ti.is_integer() {
                    self.err(Code::Type, i.span, "array index is not an integer");
                }
                match ta {
                    Type::Pointer(t) if *t != Type::Void => *t,
                    t => {
                        self.err(Code::Type, e.span, format!("subscripted value has type `{t}`"));
                        Type::Int
                    }
                }
            }
            ExprKind::Cast(spec, a) => {
                let to = self.resolve(spec, e.span);
                let from = self.expr(a).decay();
                let ok = to == Type::Void || (to.is_scalar() && from.is_scalar()) || to == from;
                if !ok {
                    self.err(Code::Type, e.span, format!("invalid cast from `{from}` to `{to}`"));
                }
                to
            }
            ExprKind::SizeofType(spec) => {
                let t = self.resolve(spec, e.span);
                if self.structs.size_of(&t).is_none() {
                    self.err(Code::Type, e.span, format!("sizeof applied to incomplete type `{t}`"));
                }
                Type::Int
            }
            ExprKind::SizeofExpr(a) => {
                self.expr(a);
                Type::Int
            }
        }
    }

    fn field_type(&mut self, t: &Type, field: &str, span: Span) -> Type {
        let Type::Struct(name) = t else {
            self.err(Code::Type, span, format!("member access on non-struct type `{t}`"));
            return Type::Int;
        };
        match self.structs.get(name).and_then(|l| l.field(field)) {
            Some(f) => f.ty.clone(),
            None => {
                self.err(Code::Type, span, format!("`struct {name}` has no field `{field}`"));
                Type::Int
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: &Type, b: &Type, span: Span) -> Type {
        use BinOp::*;
        let ok_int = a.is_integer() && b.is_integer();
        match op {
            Add if a.is_pointer() && b.is_integer() => a.clone(),
            Add if a.is_integer() && b.is_pointer() => b.clone(),
            Sub if a.is_pointer() && b.is_integer() => a.clone(),
            Sub if a.is_pointer() && b.is_pointer() => Type::Int,
            And | Or if a.is_scalar() && b.is_scalar() => Type::Int,
            Eq | Ne | Lt | Gt | Le | Ge if ok_int || (a.is_pointer() && (b.is_pointer() || b.is_integer())) || (a.is_integer() && b.is_pointer()) => Type::Int,
            _ if ok_int => Type::Int,
            _ => {
                self.err(Code::Type, span, format!("invalid operands `{a}` {} `{b}`", op.as_str()));
                Type::Int
            }
        }
    }

    fn check_assignable(&mut self, to: &Type, from: &Type, e: &Expr, strict: bool) {
        if !assignable(to, from, e, strict) {
            let what = if strict { "goto argument" } else { "value" };
            self.err(Code::Type, e.span, format!("{what} of type `{from}` is not compatible with `{to}`"));
        }
    }
}

/// Default argument promotion for unprototyped targets.
fn promote(t: &Type) -> Type {
    match t.decay() {
        Type::Char => Type::Int,
        t => t,
    }
}

fn is_lvalue(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Ident(_) | ExprKind::Arrow(..) | ExprKind::Index(..) => true,
        ExprKind::Unary(UnOp::Deref, _) => true,
        ExprKind::Member(a, _) => is_lvalue(a),
        _ => false,
    }
}

fn is_null_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(0) => true,
        ExprKind::Cast(TypeSpec::Pointer(inner), a) => **inner == TypeSpec::Void && is_null_constant(a),
        _ => false,
    }
}

fn const_value(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) | ExprKind::Char(_, v) => Some(*v),
        ExprKind::Unary(UnOp::Neg, a) => const_value(a).map(|v| -v),
        _ => None,
    }
}

fn code_params_compatible(a: &Option<Vec<Type>>, b: &Option<Vec<Type>>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Assignment compatibility. `strict` forbids implicit narrowing, for goto
/// arguments.
fn assignable(to: &Type, from: &Type, e: &Expr, strict: bool) -> bool {
    let from_d = from.decay();
    match (to, &from_d) {
        (Type::Int, Type::Int | Type::Char) => true,
        (Type::Char, Type::Char) => true,
        (Type::Char, Type::Int) => !strict || const_value(e).is_some_and(|v| (-128..=255).contains(&v)),
        (Type::Pointer(_), _) if is_null_constant(e) => true,
        (Type::Pointer(a), Type::Pointer(b)) => {
            match (&**a, &**b) {
                (Type::CodeSegment(pa), Type::CodeSegment(pb)) => code_params_compatible(pa, pb),
                (Type::CodeSegment(_), _) | (_, Type::CodeSegment(_)) => false,
                (Type::Function(_), Type::Function(_)) => a == b,
                (Type::Void, Type::Function(_)) | (Type::Function(_), Type::Void) => false,
                (Type::Void, _) | (_, Type::Void) => true,
                (x, y) => x == y,
            }
        }
        (Type::Struct(a), Type::Struct(b)) => a == b,
        _ => false,
    }
}
