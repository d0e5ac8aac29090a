//! Syntax tree for CwC translation units.
//!
//! Derived equality ignores spans and expression ids (see [`Span`]), so two
//! trees compare equal exactly when they have the same structure.

use crate::span::Span;

/// Per-unit expression identifier, assigned by the parser. Used as the key
/// for type annotations.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExprId(pub u32);

impl PartialEq for ExprId {
    fn eq(&self, _: &ExprId) -> bool {
        true
    }
}

impl Eq for ExprId {}

/// Syntactic type, as written. Typedef names stay unresolved until sema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeSpec {
    Int,
    Char,
    Void,
    /// The `__code` marker; only meaningful as the return of a `Func`.
    Code,
    Struct(String),
    Named(String),
    Pointer(Box<TypeSpec>),
    Array(Box<TypeSpec>, u64),
    Func(FuncSpec),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncSpec {
    pub ret: Box<TypeSpec>,
    /// `None` for an empty, unprototyped `()` list.
    pub params: Option<Vec<Param>>,
    pub varargs: bool,
}

impl TypeSpec {
    pub fn pointer(inner: TypeSpec) -> TypeSpec {
        TypeSpec::Pointer(Box::new(inner))
    }

    pub fn is_code_func(&self) -> bool {
        matches!(self, TypeSpec::Func(f) if *f.ret == TypeSpec::Code)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Option<String>,
    pub ty: TypeSpec,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationUnit {
    pub items: Vec<Item>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Function(FuncDef),
    CodeSegment(FuncDef),
    /// A function or code-segment declaration without a body.
    Prototype(VarDecl),
    Struct(StructDef),
    Typedef(VarDecl),
    Var(VarDecl),
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Function(f) | Item::CodeSegment(f) => f.span,
            Item::Prototype(d) | Item::Typedef(d) | Item::Var(d) => d.span,
            Item::Struct(s) => s.span,
        }
    }
}

/// Function or code-segment definition. The two share one shape; they
/// differ only in whether `ret` is `__code`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDef {
    pub name: String,
    pub ret: TypeSpec,
    pub params: Vec<Param>,
    pub varargs: bool,
    /// Declared without any type specifier (old-style implicit `int`).
    pub implicit_int: bool,
    pub body: Block,
    pub span: Span,
}

impl FuncDef {
    pub fn is_code_segment(&self) -> bool {
        self.ret == TypeSpec::Code
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<Param>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeSpec,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Decl(Vec<VarDecl>, Span),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>>, span: Span },
    While { cond: Expr, body: Box<Stmt>, span: Span },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
        span: Span,
    },
    Expr(Expr, Span),
    Return(Option<Expr>, Span),
    Goto(Goto),
    Block(Block),
    Empty(Span),
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Decl(_, s)
            | Stmt::If { span: s, .. }
            | Stmt::While { span: s, .. }
            | Stmt::For { span: s, .. }
            | Stmt::Expr(_, s)
            | Stmt::Return(_, s)
            | Stmt::Empty(s) => *s,
            Stmt::Goto(g) => g.span,
            Stmt::Block(b) => b.span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GotoTarget {
    /// `goto name(args)`.
    Direct(String, Span),
    /// `goto expr(args)` where `expr` yields a code-segment pointer.
    Indirect(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GotoForm {
    Direct,
    Indirect,
    WithEnv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goto {
    pub target: GotoTarget,
    pub args: Vec<Expr>,
    /// The trailing `, env` of a goto-with-environment.
    pub env: Option<Expr>,
    pub span: Span,
}

impl Goto {
    pub fn form(&self) -> GotoForm {
        match (&self.env, &self.target) {
            (Some(_), _) => GotoForm::WithEnv,
            (None, GotoTarget::Direct(..)) => GotoForm::Direct,
            (None, GotoTarget::Indirect(_)) => GotoForm::Indirect,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Or,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::BitAnd => "&",
            BinOp::BitXor => "^",
            BinOp::BitOr => "|",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    /// A character literal; the text keeps its quotes and escapes.
    Char(String, i64),
    /// A string literal; the text keeps its quotes and escapes.
    Str(String),
    Ident(String),
    Environment,
    ReturnCont,
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    /// `lhs = rhs` or a compound form such as `lhs += rhs`.
    Assign(Option<BinOp>, Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Member(Box<Expr>, String),
    Arrow(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Cast(TypeSpec, Box<Expr>),
    SizeofType(TypeSpec),
    SizeofExpr(Box<Expr>),
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Char(..)
            | ExprKind::Str(_)
            | ExprKind::Ident(_)
            | ExprKind::Environment
            | ExprKind::ReturnCont
            | ExprKind::SizeofType(_) => vec![],
            ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) | ExprKind::Index(a, b) => {
                vec![a, b]
            }
            ExprKind::Unary(_, a)
            | ExprKind::Member(a, _)
            | ExprKind::Arrow(a, _)
            | ExprKind::Cast(_, a)
            | ExprKind::SizeofExpr(a) => vec![a],
            ExprKind::Call(f, args) => std::iter::once(&**f).chain(args.iter()).collect(),
        }
    }
}
