//! C code generation. Both backends share the frame layout and copy plans
//! and differ only in how control reaches the next segment.

mod cexpr;

use std::fmt::Write as _;
use std::str::FromStr;

use crate::ast::{Item, Stmt, VarDecl};
use crate::lower::{
    mangle_function, mangle_global, mangle_segment, GotoTargetL, LStmt, LoweredFunction, LoweredGoto, LoweredUnit,
    ID_OVERFLOW,
};
use crate::paracopy::{ParacopyMode, Slot, SlotKind};
use crate::sema::{builtins, Type, WORD};

pub use cexpr::{c_decl, id_const};
use cexpr::ExprCx;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Trampoline,
    Direct,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Trampoline => "trampoline",
            Backend::Direct => "direct",
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trampoline" => Ok(Backend::Trampoline),
            "direct" => Ok(Backend::Direct),
            _ => Err(format!("unknown backend `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmitConfig {
    pub backend: Backend,
    pub strict_cbc: bool,
    pub paracopy_mode: ParacopyMode,
    /// Spelling used in the `#include` line.
    pub runtime_header_path: String,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig {
            backend: Backend::Trampoline,
            strict_cbc: false,
            paracopy_mode: ParacopyMode::Min,
            runtime_header_path: crate::runtime::HEADER_NAME.to_string(),
        }
    }
}

pub fn emit(lu: &LoweredUnit, cfg: &EmitConfig) -> String {
    match cfg.backend {
        Backend::Trampoline => emit_trampoline(lu, cfg),
        Backend::Direct => emit_direct(lu, cfg),
    }
}

pub fn emit_trampoline(lu: &LoweredUnit, cfg: &EmitConfig) -> String {
    Emitter::new(lu, cfg, Backend::Trampoline).unit()
}

pub fn emit_direct(lu: &LoweredUnit, cfg: &EmitConfig) -> String {
    Emitter::new(lu, cfg, Backend::Direct).unit()
}

/// Entry prologue of an environment-capturing function.
pub fn emit_env_capture(f: &LoweredFunction) -> String {
    let resumed = if f.def.ret == crate::ast::TypeSpec::Void { "return;" } else { "return cbc_env_self->status;" };
    format!(
        "    cbc_env *cbc_env_self = cbc_rt_capture_begin();\n    if (setjmp(cbc_env_self->jb))\n        {resumed}\n"
    )
}

/// Words of the emitted `cbc_frame` array.
pub fn frame_words(lu: &LoweredUnit) -> u64 {
    (lu.frame / WORD).max(1)
}

struct Emitter<'a> {
    lu: &'a LoweredUnit,
    cfg: &'a EmitConfig,
    backend: Backend,
    out: String,
    depth: usize,
    seg: Option<&'a crate::lower::LoweredSegment>,
    func: Option<&'a LoweredFunction>,
}

impl<'a> Emitter<'a> {
    fn new(lu: &'a LoweredUnit, cfg: &'a EmitConfig, backend: Backend) -> Self {
        Emitter { lu, cfg, backend, out: String::new(), depth: 0, seg: None, func: None }
    }

    fn cx(&self) -> ExprCx<'a> {
        ExprCx { lu: self.lu, backend: self.backend, seg: self.seg }
    }

    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn unit(mut self) -> String {
        let lu = self.lu;
        self.out.push_str("/* Generated by cbc. */\n");
        if self.backend == Backend::Direct {
            self.out.push_str("#define CBC_DIRECT 1\n");
        }
        let _ = writeln!(self.out, "#include \"{}\"\n", self.cfg.runtime_header_path);
        let _ = writeln!(self.out, "#define CBC_MAXFRAME {}", lu.frame);
        let _ = writeln!(self.out, "cbc_word cbc_frame[{}];\n", frame_words(lu));

        for item in &lu.unit.ast.items {
            if let Item::Struct(s) = item {
                let Some(layout) = lu.unit.structs.get(&s.name) else { continue };
                let _ = writeln!(self.out, "struct {} {{", s.name);
                for f in &layout.fields {
                    let _ = writeln!(self.out, "    {};", c_decl(&f.ty, &f.name));
                }
                self.out.push_str("};\n\n");
            }
        }

        let all_segments: Vec<(&str, u32, bool)> = lu
            .segments
            .iter()
            .map(|s| (s.name.as_str(), s.id, true))
            .chain(lu.extern_segments.iter().map(|s| (s.name.as_str(), lu.segment_id(&s.name).unwrap_or(0), false)))
            .collect();
        if self.backend == Backend::Trampoline && !all_segments.is_empty() {
            self.out.push_str("enum {\n");
            for (name, id, _) in &all_segments {
                let _ = writeln!(self.out, "    {} = {id},", id_const(name));
            }
            self.out.push_str("};\n\n");
        }
        for (name, _, defined) in &all_segments {
            let storage = if *defined { "static " } else { "" };
            let _ = writeln!(self.out, "{storage}int {}(void);", mangle_segment(name));
        }
        for f in &lu.functions {
            if f.name != "main" {
                let _ = writeln!(self.out, "static {};", self.function_head(f));
            }
        }
        for item in &lu.unit.ast.items {
            if let Item::Prototype(d) = item {
                self.extern_prototype(d);
            }
        }
        self.out.push('\n');

        let mut any_global = false;
        for item in &lu.unit.ast.items {
            if let Item::Var(d) = item {
                let ty = lu.unit.resolve(&d.ty).unwrap_or(Type::Int);
                let mut text = format!("static {}", c_decl(&ty, &mangle_global(&d.name)));
                if let Some(init) = &d.init {
                    let _ = write!(text, " = {}", self.cx().expr(init));
                }
                self.line(&format!("{text};"));
                any_global = true;
            }
        }
        if any_global {
            self.out.push('\n');
        }

        if self.backend == Backend::Trampoline {
            let _ = writeln!(self.out, "cbc_seg_fn *const cbc_seg_table[{}] = {{", lu.table_len());
            self.out.push_str("    0,\n    cbc_rt_return_seg,\n    cbc_rt_overflow_seg,\n");
            for (name, _, _) in &all_segments {
                let _ = writeln!(self.out, "    {},", mangle_segment(name));
            }
            self.out.push_str("};\n\n");
        }

        let mut segs = lu.segments.iter();
        let mut funcs = lu.functions.iter();
        for item in &lu.unit.ast.items {
            match item {
                Item::CodeSegment(_) => {
                    let s = segs.next().expect("lowered segment");
                    self.segment(s);
                }
                Item::Function(_) => {
                    let f = funcs.next().expect("lowered function");
                    self.function(f);
                }
                _ => {}
            }
        }
        self.out
    }

    fn extern_prototype(&mut self, d: &VarDecl) {
        let lu = self.lu;
        let is_builtin = builtins::functions().iter().any(|(n, _)| *n == d.name);
        let Some(ty) = lu.unit.resolve(&d.ty) else { return };
        if is_builtin || matches!(ty, Type::CodeSegment(_)) || lu.is_defined_function(&d.name) {
            return;
        }
        let _ = writeln!(self.out, "{};", c_decl(&ty, &d.name));
    }

    fn function_head(&self, f: &LoweredFunction) -> String {
        let info = self.lu.unit.function(&f.name).expect("function info");
        let mut params: Vec<String> = info.params.iter().map(|(n, t)| c_decl(t, n)).collect();
        if info.varargs {
            params.push("...".to_string());
        }
        if params.is_empty() {
            params.push("void".to_string());
        }
        c_decl(&info.ret, &format!("{}({})", mangle_function(&f.name), params.join(", ")))
    }

    fn segment(&mut self, s: &'a crate::lower::LoweredSegment) {
        self.seg = Some(s);
        self.func = None;
        let _ = writeln!(self.out, "static int {}(void)\n{{", s.mangled);
        self.depth = 1;
        self.line("CBC_PROBE_POINT();");
        self.body(&s.body);
        self.depth = 0;
        self.out.push_str("}\n\n");
        self.seg = None;
    }

    fn function(&mut self, f: &'a LoweredFunction) {
        self.seg = None;
        self.func = Some(f);
        let _ = writeln!(self.out, "{}\n{{", self.function_head(f));
        if f.captures_env {
            self.out.push_str(&emit_env_capture(f));
        }
        self.depth = 1;
        self.body(&f.body);
        if f.captures_env && crate::sema::flow::block_completes(&f.def.body.stmts, &mut Vec::new()) {
            if f.def.ret == crate::ast::TypeSpec::Void {
                self.line("cbc_rt_capture_end(cbc_env_self, 0);");
            } else {
                self.line("return cbc_rt_capture_end(cbc_env_self, 0);");
            }
        }
        self.depth = 0;
        self.out.push_str("}\n\n");
        self.func = None;
    }

    fn body(&mut self, body: &[LStmt]) {
        for s in body {
            self.lstmt(s);
        }
    }

    fn nested(&mut self, head: &str, body: &[LStmt]) {
        self.line(&format!("{head} {{"));
        self.depth += 1;
        self.body(body);
        self.depth -= 1;
        self.line("}");
    }

    fn lstmt(&mut self, s: &LStmt) {
        match s {
            LStmt::Plain(s) => self.stmt(s),
            LStmt::If { cond, then, els } => {
                let c = self.cx().expr(cond);
                self.nested(&format!("if ({c})"), then);
                if let Some(e) = els {
                    self.nested("else", e);
                }
            }
            LStmt::While { cond, body } => {
                let c = self.cx().expr(cond);
                self.nested(&format!("while ({c})"), body);
            }
            LStmt::For { init, cond, step, body } => {
                let head = self.for_head(init.as_deref(), cond.as_ref(), step.as_ref());
                self.nested(&head, body);
            }
            LStmt::Block(b) => self.nested("", b),
            LStmt::Goto(g) => self.goto(g),
        }
    }

    fn for_head(&self, init: Option<&Stmt>, cond: Option<&crate::ast::Expr>, step: Option<&crate::ast::Expr>) -> String {
        let cx = self.cx();
        let init = match init {
            Some(Stmt::Decl(ds, _)) => self.decls(ds),
            Some(Stmt::Expr(e, _)) => format!("{};", cx.expr(e)),
            _ => ";".to_string(),
        };
        let cond = cond.map(|c| cx.expr(c)).unwrap_or_default();
        let step = step.map(|c| cx.expr(c)).unwrap_or_default();
        format!("for ({init} {cond}; {step})")
    }

    fn decls(&self, ds: &[VarDecl]) -> String {
        let cx = self.cx();
        let parts: Vec<String> = ds
            .iter()
            .map(|d| {
                let ty = self.lu.unit.resolve(&d.ty).unwrap_or(Type::Int);
                let mut text = c_decl(&ty, &d.name);
                if let Some(init) = &d.init {
                    let _ = write!(text, " = {}", cx.expr(init));
                }
                text
            })
            .collect();
        parts.iter().map(|p| format!("{p};")).collect::<Vec<_>>().join(" ")
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl(ds, _) => {
                let text = self.decls(ds);
                self.line(&text);
            }
            Stmt::Expr(e, _) => {
                let text = format!("{};", self.cx().expr(e));
                self.line(&text);
            }
            Stmt::Empty(_) => self.line(";"),
            Stmt::Return(v, _) => {
                let captures = self.func.is_some_and(|f| f.captures_env);
                let v = v.as_ref().map(|e| self.cx().expr(e));
                match (captures, v) {
                    (true, Some(v)) => self.line(&format!("return cbc_rt_capture_end(cbc_env_self, {v});")),
                    (true, None) => self.line("{ cbc_rt_capture_end(cbc_env_self, 0); return; }"),
                    (false, Some(v)) => self.line(&format!("return {v};")),
                    (false, None) => self.line("return;"),
                }
            }
            Stmt::If { cond, then, els, .. } => {
                let c = self.cx().expr(cond);
                self.line(&format!("if ({c}) {{"));
                self.sub(then);
                match els {
                    Some(e) => {
                        self.line("} else {");
                        self.sub(e);
                        self.line("}");
                    }
                    None => self.line("}"),
                }
            }
            Stmt::While { cond, body, .. } => {
                let c = self.cx().expr(cond);
                self.line(&format!("while ({c}) {{"));
                self.sub(body);
                self.line("}");
            }
            Stmt::For { init, cond, step, body, .. } => {
                let head = self.for_head(init.as_deref(), cond.as_ref(), step.as_ref());
                self.line(&format!("{head} {{"));
                self.sub(body);
                self.line("}");
            }
            Stmt::Block(b) => {
                self.line("{");
                self.depth += 1;
                for s in &b.stmts {
                    self.stmt(s);
                }
                self.depth -= 1;
                self.line("}");
            }
            Stmt::Goto(_) => unreachable!("gotos are lowered"),
        }
    }

    fn sub(&mut self, s: &Stmt) {
        self.depth += 1;
        match s {
            Stmt::Block(b) => {
                for s in &b.stmts {
                    self.stmt(s);
                }
            }
            other => self.stmt(other),
        }
        self.depth -= 1;
    }

    fn goto(&mut self, g: &LoweredGoto) {
        let cx = self.cx();
        self.line("{");
        self.depth += 1;
        // Target and environment are evaluated before any argument is written.
        let next = match &g.target {
            GotoTargetL::Pointer(e) => Some(cx.expr(e)),
            GotoTargetL::PointerName(name, b) => Some(cx.ident(name, Some(b))),
            _ => None,
        };
        if let Some(n) = &next {
            self.line(&format!("cbc_segptr cbc_next = {n};"));
        }
        if let Some(env) = &g.env {
            let e = cx.expr(env);
            self.line(&format!("void *cbc_envv = {e};"));
        }
        let mut temps: Vec<Slot> = g.plan.steps.iter().map(|(d, _)| *d).filter(|d| d.kind == SlotKind::Temp).collect();
        temps.sort_by_key(|t| t.id);
        temps.dedup_by_key(|t| t.id);
        for t in &temps {
            self.line(&format!("cbc_word cbc_t{}[{}];", t.id, t.width / WORD));
        }
        for (dst, src) in &g.plan.steps {
            match src.kind {
                SlotKind::Constant | SlotKind::Expression | SlotKind::Local => {
                    let input = &g.inputs[src.id as usize];
                    let ty = c_decl(&input.ty, "");
                    let value = cx.expr(&input.expr);
                    let lhs = match dst.kind {
                        SlotKind::Param => format!("CBC_SLOT({ty}, {})", dst.id),
                        _ => format!("CBC_TEMP({ty}, cbc_t{})", dst.id),
                    };
                    self.line(&format!("{lhs} = {value};"));
                }
                SlotKind::Param | SlotKind::Temp => {
                    for k in 0..dst.width / WORD {
                        let line = format!("{} = {};", word_ref(dst, k), word_ref(src, k));
                        self.line(&line);
                    }
                }
            }
        }
        if g.env.is_some() {
            self.line("cbc_rt_pending_env = (cbc_env *)cbc_envv;");
        }
        let in_function = self.seg.is_none();
        match self.backend {
            Backend::Trampoline => {
                let id = match &g.target {
                    GotoTargetL::Segment { name, .. } => id_const(name),
                    GotoTargetL::Overflow => ID_OVERFLOW.to_string(),
                    _ => "(int)cbc_next".to_string(),
                };
                if in_function {
                    self.line("CBC_PROBE_BASE();");
                    self.line(&format!("exit(cbc_rt_drive(cbc_seg_table, {}, {id}));", self.lu.table_len()));
                } else {
                    self.line(&format!("return {id};"));
                }
            }
            Backend::Direct => {
                let call = match &g.target {
                    GotoTargetL::Segment { name, .. } => format!("{}()", mangle_segment(name)),
                    GotoTargetL::Overflow => "cbc_rt_overflow_seg()".to_string(),
                    _ => "cbc_next()".to_string(),
                };
                if in_function {
                    self.line("CBC_PROBE_BASE();");
                    self.line(&format!("(void){call};"));
                    self.line("exit(cbc_rt_halt_status());");
                } else {
                    self.line(&format!("CBC_TAILCALL({call});"));
                }
            }
        }
        self.depth -= 1;
        self.line("}");
    }
}

fn word_ref(s: &Slot, k: u64) -> String {
    match s.kind {
        SlotKind::Param => format!("cbc_frame[{}]", s.id as u64 + k),
        _ => format!("cbc_t{}[{k}]", s.id),
    }
}

#[cfg(test)]
mod tests;
