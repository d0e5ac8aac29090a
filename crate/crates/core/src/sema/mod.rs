//! Name resolution, typing, and the continuation rules of CbC.

mod check;
pub mod flow;
pub mod lint;
pub mod types;

use std::collections::HashMap;

use crate::ast::{TranslationUnit, TypeSpec};
use crate::diag::Diagnostic;
use crate::span::Span;
pub use types::{FrameSlot, StructLayout, StructTable, Type, WORD};

/// What an identifier expression refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    /// Parameter of the enclosing code segment, by position.
    SegParam(usize),
    FnParam,
    Local,
    Global,
    Function,
    Segment,
    /// Runtime-provided function, global, or segment.
    Builtin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSignature {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub slots: Vec<FrameSlot>,
    /// Argument bytes, a multiple of [`WORD`].
    pub frame_bytes: u64,
    pub span: Span,
}

impl SegmentSignature {
    pub fn frame_words(&self) -> u64 {
        self.frame_bytes / WORD
    }

    pub fn param_types(&self) -> Vec<Type> {
        self.params.iter().map(|(_, t)| t.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub ret: Type,
    pub params: Vec<(String, Type)>,
    pub varargs: bool,
    /// Uses `__environment` or `__return`; codegen plants a capture point.
    pub captures_env: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GotoDest {
    Segment(String),
    /// Through a segment-pointer value.
    Pointer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GotoInfo {
    /// Enclosing code segment, or `None` inside a C function.
    pub from_segment: Option<String>,
    pub dest: GotoDest,
    /// Types of the destination parameters; for unprototyped targets these
    /// are the promoted argument types.
    pub param_types: Vec<Type>,
    pub arg_types: Vec<Type>,
    /// For `goto name(..)` through a segment-pointer variable, what `name`
    /// resolved to.
    pub target_binding: Option<Binding>,
}

/// Output of [`analyze`]: the tree plus every annotation later passes need.
#[derive(Clone, Debug)]
pub struct TypedUnit {
    pub ast: TranslationUnit,
    pub structs: StructTable,
    pub typedefs: HashMap<String, Type>,
    pub expr_types: HashMap<u32, Type>,
    pub bindings: HashMap<u32, Binding>,
    /// Defined code segments, in source order.
    pub segments: Vec<SegmentSignature>,
    /// Segments referenced but not defined in this unit.
    pub extern_segments: Vec<SegmentSignature>,
    /// Defined C functions, in source order.
    pub functions: Vec<FunctionInfo>,
    pub globals: Vec<(String, Type)>,
    /// Keyed by the byte offset of the `goto` keyword.
    pub gotos: HashMap<usize, GotoInfo>,
    pub warnings: Vec<Diagnostic>,
}

impl TypedUnit {
    pub fn type_of(&self, id: crate::ast::ExprId) -> &Type {
        &self.expr_types[&id.0]
    }

    pub fn binding(&self, id: crate::ast::ExprId) -> Option<&Binding> {
        self.bindings.get(&id.0)
    }

    pub fn segment(&self, name: &str) -> Option<&SegmentSignature> {
        self.segments.iter().chain(&self.extern_segments).find(|s| s.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionInfo> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Resolves a syntactic type against this unit's typedefs.
    pub fn resolve(&self, spec: &TypeSpec) -> Option<Type> {
        check::resolve_spec(&self.typedefs, spec).ok()
    }
}

/// Runtime entry points visible to every unit.
pub mod builtins {
    use super::Type;
    use super::types::FnType;

    pub const STACK_LIMIT: &str = "cbc_stack_limit";
    pub const STACK_OVERFLOW: &str = "cbc_stack_overflow";
    pub const STACK_TOP: &str = "cbc_stack_top";
    pub const OPAQUE: &str = "cbc_opaque";

    pub fn functions() -> Vec<(&'static str, FnType)> {
        let char_ptr = || Type::ptr(Type::Char);
        let f = |params: Vec<Type>, ret: Type, varargs| FnType { params: Some(params), ret: Box::new(ret), varargs };
        vec![
            ("printf", f(vec![char_ptr()], Type::Int, true)),
            ("putchar", f(vec![Type::Int], Type::Int, false)),
            ("puts", f(vec![char_ptr()], Type::Int, false)),
            (STACK_TOP, f(vec![], char_ptr(), false)),
            (OPAQUE, f(vec![Type::Int], Type::Int, false)),
        ]
    }

    pub fn globals() -> Vec<(&'static str, Type)> {
        vec![(STACK_LIMIT, Type::ptr(Type::Char))]
    }

    pub fn segments() -> Vec<&'static str> {
        vec![STACK_OVERFLOW]
    }
}

/// Type-checks a parsed unit. On failure returns every error (warnings
/// included), sorted by position.
pub fn analyze(ast: TranslationUnit) -> Result<TypedUnit, Vec<Diagnostic>> {
    check::Checker::run(ast)
}


/// Types of the environment forms used inside one C function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvForms {
    pub captures: bool,
    pub environment: Option<Type>,
    pub return_cont: Option<Type>,
}

/// Reports how `__environment` and `__return` type inside function `name`.
/// Misuse inside code segments is reported by [`analyze`] as
/// `E-ENV-OUTSIDE-FN`.
pub fn check_env_forms(unit: &TypedUnit, name: &str) -> Option<EnvForms> {
    use crate::ast::{ExprKind, Item};
    let def = unit.ast.items.iter().find_map(|i| match i {
        Item::Function(f) if f.name == name => Some(f),
        _ => None,
    })?;
    let mut forms = EnvForms { captures: unit.function(name)?.captures_env, environment: None, return_cont: None };
    crate::visit::walk_block_exprs(&def.body, &mut |e| match e.kind {
        ExprKind::Environment => forms.environment = Some(unit.type_of(e.id).clone()),
        ExprKind::ReturnCont => forms.return_cont = Some(unit.type_of(e.id).clone()),
        _ => {}
    });
    Some(forms)
}
