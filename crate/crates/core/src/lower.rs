//! Backend-neutral lowering: segment ids, mangled names, the shared frame
//! size, and a copy plan for every goto.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::ast::{Block, Expr, ExprKind, FuncDef, Goto, GotoTarget, Item, Stmt};
use crate::diag::{Code, Diagnostic};
use crate::paracopy::{sequentialize_with, CopyPlan, Move, MoveSet, ParacopyMode, Slot, SlotKind};
use crate::sema::builtins;
use crate::sema::types::{frame_layout, round_up};
use crate::sema::{Binding, FrameSlot, GotoDest, GotoInfo, SegmentSignature, Type, TypedUnit, WORD};

/// Table index of the halting sentinel.
pub const ID_HALT: u32 = 0;
/// Table index of the runtime segment behind `__return`.
pub const ID_RETURN: u32 = 1;
/// Table index of the runtime stack-overflow segment.
pub const ID_OVERFLOW: u32 = 2;
/// First index handed to user segments.
pub const FIRST_USER_ID: u32 = 3;

pub fn mangle_segment(name: &str) -> String {
    format!("cbc_seg_{name}")
}

pub fn mangle_global(name: &str) -> String {
    format!("cbc_g_{name}")
}

pub fn mangle_function(name: &str) -> String {
    if name == "main" {
        name.to_string()
    } else {
        format!("cbc_f_{name}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GotoTargetL {
    Segment { name: String, id: u32 },
    /// `goto cbc_stack_overflow()`.
    Overflow,
    Pointer(Expr),
    /// `goto name(..)` where `name` is a segment-pointer variable.
    PointerName(String, Binding),
}

/// A value feeding a non-frame source slot of a copy plan. The slot id is
/// the argument position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanInput {
    pub expr: Expr,
    /// Destination parameter type; the value is converted to it.
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredGoto {
    pub target: GotoTargetL,
    pub layout: Vec<FrameSlot>,
    pub plan: CopyPlan,
    pub inputs: Vec<PlanInput>,
    pub env: Option<Expr>,
    pub span: crate::span::Span,
}

impl LoweredGoto {
    pub fn frame_bytes(&self) -> u64 {
        self.layout.last().map_or(0, |s| s.word * WORD + s.width)
    }
}

/// Statement tree whose exits are lowered gotos. Subtrees without gotos are
/// kept as source statements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LStmt {
    Plain(Stmt),
    If { cond: Expr, then: Vec<LStmt>, els: Option<Vec<LStmt>> },
    While { cond: Expr, body: Vec<LStmt> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Expr>, body: Vec<LStmt> },
    Block(Vec<LStmt>),
    Goto(LoweredGoto),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredSegment {
    pub name: String,
    pub mangled: String,
    pub id: u32,
    pub sig: SegmentSignature,
    pub body: Vec<LStmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredFunction {
    pub name: String,
    pub mangled: String,
    pub def: FuncDef,
    pub captures_env: bool,
    pub body: Vec<LStmt>,
}

#[derive(Clone, Debug)]
pub struct LoweredUnit {
    pub unit: TypedUnit,
    pub segments: Vec<LoweredSegment>,
    /// Declared but not defined here; they still get table slots.
    pub extern_segments: Vec<SegmentSignature>,
    pub functions: Vec<LoweredFunction>,
    /// Largest argument area over every segment and goto site, in bytes.
    pub frame: u64,
    pub capture_points: Vec<String>,
    pub paracopy: ParacopyMode,
}

impl LoweredUnit {
    pub fn segment_id(&self, name: &str) -> Option<u32> {
        if let Some(s) = self.segments.iter().find(|s| s.name == name) {
            return Some(s.id);
        }
        let at = self.extern_segments.iter().position(|s| s.name == name)?;
        Some(FIRST_USER_ID + self.segments.len() as u32 + at as u32)
    }

    /// Table size including the reserved entries.
    pub fn table_len(&self) -> u32 {
        FIRST_USER_ID + (self.segments.len() + self.extern_segments.len()) as u32
    }

    pub fn is_defined_function(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f.name == name)
    }

    pub fn gotos(&self) -> Vec<(&str, &LoweredGoto)> {
        let mut out = Vec::new();
        for s in &self.segments {
            collect_gotos(&s.body, &s.name, &mut out);
        }
        for f in &self.functions {
            collect_gotos(&f.body, &f.name, &mut out);
        }
        out
    }
}

fn collect_gotos<'a>(body: &'a [LStmt], owner: &'a str, out: &mut Vec<(&'a str, &'a LoweredGoto)>) {
    for s in body {
        match s {
            LStmt::Plain(_) => {}
            LStmt::If { then, els, .. } => {
                collect_gotos(then, owner, out);
                if let Some(e) = els {
                    collect_gotos(e, owner, out);
                }
            }
            LStmt::While { body, .. } | LStmt::For { body, .. } | LStmt::Block(body) => collect_gotos(body, owner, out),
            LStmt::Goto(g) => out.push((owner, g)),
        }
    }
}

pub fn lower(unit: TypedUnit) -> Result<LoweredUnit, Diagnostic> {
    lower_with(unit, ParacopyMode::Min)
}

pub fn lower_with(unit: TypedUnit, mode: ParacopyMode) -> Result<LoweredUnit, Diagnostic> {
    let mut ids = HashMap::new();
    let defined: Vec<&FuncDef> = unit
        .ast
        .items
        .iter()
        .filter_map(|i| match i {
            Item::CodeSegment(f) => Some(f),
            _ => None,
        })
        .collect();
    for (i, f) in defined.iter().enumerate() {
        ids.insert(f.name.clone(), FIRST_USER_ID + i as u32);
    }
    let extern_segments: Vec<SegmentSignature> =
        unit.extern_segments.iter().filter(|s| !ids.contains_key(&s.name)).cloned().collect();
    for (i, s) in extern_segments.iter().enumerate() {
        ids.insert(s.name.clone(), FIRST_USER_ID + (defined.len() + i) as u32);
    }

    let cx = Lowerer { unit: &unit, ids: &ids, mode };
    let mut segments = Vec::new();
    let mut functions = Vec::new();
    for item in &unit.ast.items {
        match item {
            Item::CodeSegment(f) => {
                let sig = unit.segment(&f.name).cloned().ok_or_else(|| internal(&f.name, "missing signature"))?;
                let body = cx.block(&f.body, &f.name, Some(&sig))?;
                if !terminates(&body) {
                    return Err(internal(&f.name, "body can complete without a goto"));
                }
                segments.push(LoweredSegment {
                    name: f.name.clone(),
                    mangled: mangle_segment(&f.name),
                    id: ids[&f.name],
                    sig,
                    body,
                });
            }
            Item::Function(f) => {
                let info = unit.function(&f.name).ok_or_else(|| internal(&f.name, "missing function info"))?;
                functions.push(LoweredFunction {
                    name: f.name.clone(),
                    mangled: mangle_function(&f.name),
                    def: f.clone(),
                    captures_env: info.captures_env,
                    body: cx.block(&f.body, &f.name, None)?,
                });
            }
            _ => {}
        }
    }

    let mut frame = segments.iter().map(|s| s.sig.frame_bytes).chain(extern_segments.iter().map(|s| s.frame_bytes)).max().unwrap_or(0);
    let mut lu = LoweredUnit {
        capture_points: functions.iter().filter(|f| f.captures_env).map(|f| f.name.clone()).collect(),
        unit,
        segments,
        extern_segments,
        functions,
        frame: 0,
        paracopy: mode,
    };
    for (_, g) in lu.gotos() {
        frame = frame.max(g.frame_bytes());
    }
    lu.frame = frame;
    Ok(lu)
}

fn internal(owner: &str, what: &str) -> Diagnostic {
    Diagnostic::new(Code::Type, crate::span::Span::default(), format!("internal: lowering `{owner}`: {what}"))
}

/// Every path through `body` ends in a goto or an endless loop.
fn terminates(body: &[LStmt]) -> bool {
    body.iter().any(|s| match s {
        LStmt::Goto(_) => true,
        LStmt::If { then, els: Some(e), .. } => terminates(then) && terminates(e),
        LStmt::Block(b) => terminates(b),
        LStmt::Plain(s) => !crate::sema::flow::stmt_completes(s, &mut Vec::new()),
        LStmt::While { .. } | LStmt::For { .. } => !crate::sema::flow::stmt_completes(&lstmt_shape(s), &mut Vec::new()),
        _ => false,
    })
}

/// Rebuilds enough of a loop to ask the flow checker whether it completes.
fn lstmt_shape(s: &LStmt) -> Stmt {
    let sp = crate::span::Span::default();
    let empty = Box::new(Stmt::Empty(sp));
    match s {
        LStmt::While { cond, .. } => Stmt::While { cond: cond.clone(), body: empty, span: sp },
        LStmt::For { cond, .. } => Stmt::For { init: None, cond: cond.clone(), step: None, body: empty, span: sp },
        _ => Stmt::Empty(sp),
    }
}

struct Lowerer<'a> {
    unit: &'a TypedUnit,
    ids: &'a HashMap<String, u32>,
    mode: ParacopyMode,
}

impl Lowerer<'_> {
    fn block(&self, b: &Block, owner: &str, seg: Option<&SegmentSignature>) -> Result<Vec<LStmt>, Diagnostic> {
        b.stmts.iter().map(|s| self.stmt(s, owner, seg)).collect()
    }

    fn stmt(&self, s: &Stmt, owner: &str, seg: Option<&SegmentSignature>) -> Result<LStmt, Diagnostic> {
        if !has_goto(s) {
            return Ok(LStmt::Plain(s.clone()));
        }
        let sub = |s: &Stmt| -> Result<Vec<LStmt>, Diagnostic> {
            match s {
                Stmt::Block(b) => self.block(b, owner, seg),
                other => Ok(vec![self.stmt(other, owner, seg)?]),
            }
        };
        Ok(match s {
            Stmt::If { cond, then, els, .. } => LStmt::If {
                cond: cond.clone(),
                then: sub(then)?,
                els: els.as_deref().map(sub).transpose()?,
            },
            Stmt::While { cond, body, .. } => LStmt::While { cond: cond.clone(), body: sub(body)? },
            Stmt::For { init, cond, step, body, .. } => {
                LStmt::For { init: init.clone(), cond: cond.clone(), step: step.clone(), body: sub(body)? }
            }
            Stmt::Block(b) => LStmt::Block(self.block(b, owner, seg)?),
            Stmt::Goto(g) => LStmt::Goto(self.goto(g, owner, seg)?),
            _ => unreachable!("only compound statements contain gotos"),
        })
    }

    fn goto(&self, g: &Goto, owner: &str, seg: Option<&SegmentSignature>) -> Result<LoweredGoto, Diagnostic> {
        let info: &GotoInfo = self.unit.gotos.get(&g.span.start).ok_or_else(|| internal(owner, "untyped goto"))?;
        let target = match (&g.target, &info.dest) {
            (GotoTarget::Direct(name, _), GotoDest::Segment(_)) if name == builtins::STACK_OVERFLOW => {
                GotoTargetL::Overflow
            }
            (GotoTarget::Direct(name, _), GotoDest::Segment(_)) => GotoTargetL::Segment {
                name: name.clone(),
                id: *self.ids.get(name).ok_or_else(|| internal(owner, &format!("no id for segment `{name}`")))?,
            },
            (GotoTarget::Direct(name, _), GotoDest::Pointer) => GotoTargetL::PointerName(
                name.clone(),
                info.target_binding.clone().ok_or_else(|| internal(owner, "unresolved pointer target"))?,
            ),
            (GotoTarget::Indirect(e), _) => GotoTargetL::Pointer(e.clone()),
        };
        let layout = frame_layout(&self.unit.structs, &info.param_types)
            .ok_or_else(|| internal(owner, "goto argument of incomplete type"))?;
        let (ms, inputs) = build_moveset(self.unit, &g.args, &info.param_types, &layout, seg);
        if !ms.is_well_formed() {
            return Err(internal(owner, "ill-formed move set"));
        }
        Ok(LoweredGoto {
            target,
            layout,
            plan: sequentialize_with(&ms, self.mode),
            inputs,
            env: g.env.clone(),
            span: g.span,
        })
    }
}

/// Classifies each goto argument as a frame slot, local, constant or
/// computed value, and pairs it with its destination slot.
pub fn build_moveset(
    unit: &TypedUnit,
    args: &[Expr],
    params: &[Type],
    layout: &[FrameSlot],
    seg: Option<&SegmentSignature>,
) -> (MoveSet, Vec<PlanInput>) {
    let mut moves = Vec::new();
    let mut inputs = Vec::new();
    for (i, ((arg, pty), slot)) in args.iter().zip(params).zip(layout).enumerate() {
        let dst = Slot::param(slot.word as u32, slot.width);
        let same_type = unit.type_of(arg.id) == pty;
        let kind = match (&arg.kind, unit.binding(arg.id)) {
            (ExprKind::Ident(_), Some(Binding::SegParam(p))) if same_type => {
                let src = seg.and_then(|s| s.slots.get(*p)).expect("segment parameter without a slot");
                debug_assert_eq!(round_up(src.width, WORD), slot.width);
                moves.push(Move { dst, src: Slot::param(src.word as u32, src.width) });
                inputs.push(PlanInput { expr: arg.clone(), ty: pty.clone() });
                continue;
            }
            (ExprKind::Ident(_), Some(Binding::Local | Binding::FnParam | Binding::Global)) if same_type => {
                SlotKind::Local
            }
            (ExprKind::Int(_) | ExprKind::Char(..), _) => SlotKind::Constant,
            _ => SlotKind::Expression,
        };
        moves.push(Move { dst, src: Slot::new(kind, i as u32, slot.width) });
        inputs.push(PlanInput { expr: arg.clone(), ty: pty.clone() });
    }
    (MoveSet { moves }, inputs)
}

fn has_goto(s: &Stmt) -> bool {
    match s {
        Stmt::Goto(_) => true,
        Stmt::If { then, els, .. } => has_goto(then) || els.as_deref().is_some_and(has_goto),
        Stmt::While { body, .. } | Stmt::For { body, .. } => has_goto(body),
        Stmt::Block(b) => b.stmts.iter().any(has_goto),
        _ => false,
    }
}

/// Text form for `--dump-lowered`.
pub fn dump(lu: &LoweredUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "maxframe {}", lu.frame);
    for c in &lu.capture_points {
        let _ = writeln!(out, "capture {c}");
    }
    for s in &lu.segments {
        let _ = writeln!(out, "segment {} id {} frame {}", s.name, s.id, s.sig.frame_bytes);
        for ((name, ty), slot) in s.sig.params.iter().zip(&s.sig.slots) {
            let _ = writeln!(out, "  param {name}: {ty} @{}+{}", slot.word, slot.width);
        }
        dump_body(&s.body, 1, &mut out);
    }
    for s in &lu.extern_segments {
        let _ = writeln!(out, "extern segment {} id {} frame {}", s.name, lu.segment_id(&s.name).unwrap_or(0), s.frame_bytes);
    }
    for f in &lu.functions {
        let _ = writeln!(out, "function {}{}", f.name, if f.captures_env { " captures" } else { "" });
        dump_body(&f.body, 1, &mut out);
    }
    out
}

fn dump_body(body: &[LStmt], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for s in body {
        match s {
            LStmt::Plain(_) => {}
            LStmt::If { then, els, .. } => {
                let _ = writeln!(out, "{pad}if");
                dump_body(then, depth + 1, out);
                if let Some(e) = els {
                    let _ = writeln!(out, "{pad}else");
                    dump_body(e, depth + 1, out);
                }
            }
            LStmt::While { body, .. } | LStmt::For { body, .. } => {
                let _ = writeln!(out, "{pad}loop");
                dump_body(body, depth + 1, out);
            }
            LStmt::Block(b) => dump_body(b, depth, out),
            LStmt::Goto(g) => {
                let form = if g.env.is_some() { "goto-env" } else { "goto" };
                let target = match &g.target {
                    GotoTargetL::Segment { name, id } => format!("{name}#{id}"),
                    GotoTargetL::Overflow => format!("{}#{ID_OVERFLOW}", builtins::STACK_OVERFLOW),
                    GotoTargetL::Pointer(e) => format!("*({})", crate::pretty::print_expr(e)),
                    GotoTargetL::PointerName(n, _) => format!("*{n}"),
                };
                let _ = writeln!(
                    out,
                    "{pad}{form} {target} at {} frame {} copies {} temps {}",
                    g.span,
                    g.frame_bytes(),
                    g.plan.steps.len(),
                    g.plan.temps_used
                );
                for line in g.plan.dump().lines() {
                    let _ = writeln!(out, "{pad}  {line}");
                }
            }
        }
    }
}
