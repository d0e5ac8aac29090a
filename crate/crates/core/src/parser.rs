//! Recursive-descent parser for the CwC subset.

use std::collections::HashSet;

use thiserror::Error;

use crate::ast::*;
use crate::lexer::{Keyword, Token, TokenKind};
use crate::span::Span;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: parse error: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

/// Parses a full token stream (as produced by [`crate::lexer::tokenize`]).
pub fn parse(tokens: &[Token]) -> Result<TranslationUnit, ParseError> {
    Parser::new(tokens).translation_unit()
}

/// Declarator shape before it is folded onto its base type.
struct Declarator {
    pointers: usize,
    inner: Option<Box<Declarator>>,
    name: Option<(String, Span)>,
    suffixes: Vec<Suffix>,
}

enum Suffix {
    Array(u64),
    Func(Option<Vec<Param>>, bool),
}

impl Declarator {
    fn apply(self, base: TypeSpec) -> (Option<(String, Span)>, TypeSpec) {
        let mut ty = base;
        for _ in 0..self.pointers {
            ty = TypeSpec::pointer(ty);
        }
        for suffix in self.suffixes.into_iter().rev() {
            ty = match suffix {
                Suffix::Array(n) => TypeSpec::Array(Box::new(ty), n),
                Suffix::Func(params, varargs) => {
                    TypeSpec::Func(FuncSpec { ret: Box::new(ty), params, varargs })
                }
            };
        }
        match self.inner {
            Some(inner) => inner.apply(ty),
            None => (self.name, ty),
        }
    }
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    typedefs: HashSet<String>,
    next_id: u32,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token]) -> Self {
        Parser { toks, pos: 0, typedefs: HashSet::new(), next_id: 0 }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos.min(self.toks.len() - 1)];
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        let found = match t.kind {
            TokenKind::Eof => "end of input".to_string(),
            _ => format!("`{}`", t.text),
        };
        Err(ParseError { span: t.span, expected: expected.to_string(), found })
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.peek().is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(&format!("`{p}`"))
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.peek().is_keyword(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        let t = self.peek();
        if t.kind == TokenKind::Ident {
            let t = self.bump();
            Ok((t.text.clone(), t.span))
        } else {
            self.error("identifier")
        }
    }

    fn mk(&mut self, kind: ExprKind, span: Span) -> Expr {
        let id = ExprId(self.next_id);
        self.next_id += 1;
        Expr { id, kind, span }
    }

    fn starts_type(&self, t: &Token) -> bool {
        match t.kind {
            TokenKind::Keyword(k) => matches!(
                k,
                Keyword::Int | Keyword::Char | Keyword::Void | Keyword::Struct | Keyword::Code
            ),
            TokenKind::Ident => self.typedefs.contains(&t.text),
            _ => false,
        }
    }

    // ---- declarations -------------------------------------------------

    fn translation_unit(&mut self) -> PResult<TranslationUnit> {
        let start = self.peek().span;
        let mut items = Vec::new();
        while self.peek().kind != TokenKind::Eof {
            items.extend(self.external_decl()?);
        }
        let span = items.iter().fold(Span::new(start.start, start.start, 1, 1), |s, i| s.to(i.span()));
        Ok(TranslationUnit { items, span })
    }

    fn external_decl(&mut self) -> PResult<Vec<Item>> {
        let start = self.peek().span;
        let is_typedef = self.eat_keyword(Keyword::Typedef);
        // Old-style definitions such as `f0(int i) { ... }` have no specifier.
        let implicit_int = !is_typedef
            && self.peek().kind == TokenKind::Ident
            && !self.typedefs.contains(&self.peek().text)
            && self.peek_at(1).is_punct("(");
        let (base, struct_def) = if implicit_int {
            (TypeSpec::Int, None)
        } else {
            self.decl_specifiers()?
        };
        let mut items: Vec<Item> = struct_def.into_iter().map(Item::Struct).collect();
        if self.eat_punct(";") {
            if items.is_empty() {
                return Err(ParseError {
                    span: start,
                    expected: "declarator".into(),
                    found: "`;`".into(),
                });
            }
            return Ok(items);
        }
        loop {
            let d = self.declarator(false)?;
            let (name, ty) = d.apply(base.clone());
            let (name, name_span) = match name {
                Some(n) => n,
                None => return self.error("declarator name"),
            };
            if is_typedef {
                self.typedefs.insert(name.clone());
                items.push(Item::Typedef(VarDecl { name, ty, init: None, span: start.to(self.prev_span()) }));
            } else if let TypeSpec::Func(f) = &ty {
                if self.peek().is_punct("{") && items.iter().all(|i| matches!(i, Item::Struct(_))) {
                    let params = f.params.clone().unwrap_or_default();
                    let def = FuncDef {
                        name,
                        ret: (*f.ret).clone(),
                        params,
                        varargs: f.varargs,
                        implicit_int,
                        body: self.block()?,
                        span: start.to(self.prev_span()),
                    };
                    items.push(if def.is_code_segment() {
                        Item::CodeSegment(def)
                    } else {
                        Item::Function(def)
                    });
                    return Ok(items);
                }
                items.push(Item::Prototype(VarDecl { name, ty, init: None, span: start.to(name_span).to(self.prev_span()) }));
            } else {
                let init = if self.eat_punct("=") { Some(self.assignment()?) } else { None };
                items.push(Item::Var(VarDecl { name, ty, init, span: start.to(self.prev_span()) }));
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(items)
    }

    /// Base type, possibly with an inline struct definition.
    fn decl_specifiers(&mut self) -> PResult<(TypeSpec, Option<StructDef>)> {
        let t = self.peek().clone();
        let ty = match t.kind {
            TokenKind::Keyword(Keyword::Int) => TypeSpec::Int,
            TokenKind::Keyword(Keyword::Char) => TypeSpec::Char,
            TokenKind::Keyword(Keyword::Void) => TypeSpec::Void,
            TokenKind::Keyword(Keyword::Code) => TypeSpec::Code,
            TokenKind::Keyword(Keyword::Struct) => {
                self.bump();
                let (name, _) = self.expect_ident()?;
                if self.peek().is_punct("{") {
                    self.bump();
                    let mut fields = Vec::new();
                    while !self.eat_punct("}") {
                        let (fbase, _) = self.decl_specifiers()?;
                        loop {
                            let fstart = self.peek().span;
                            let (fname, fty) = self.declarator(false)?.apply(fbase.clone());
                            let Some((fname, _)) = fname else { return self.error("field name") };
                            fields.push(Param { name: Some(fname), ty: fty, span: fstart.to(self.prev_span()) });
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                        self.expect_punct(";")?;
                    }
                    let def = StructDef { name: name.clone(), fields, span: t.span.to(self.prev_span()) };
                    return Ok((TypeSpec::Struct(name), Some(def)));
                }
                return Ok((TypeSpec::Struct(name), None));
            }
            TokenKind::Ident if self.typedefs.contains(&t.text) => TypeSpec::Named(t.text.clone()),
            _ => return self.error("type specifier"),
        };
        self.bump();
        Ok((ty, None))
    }

    fn declarator(&mut self, abstract_ok: bool) -> PResult<Declarator> {
        let mut pointers = 0;
        while self.eat_punct("*") {
            pointers += 1;
        }
        let mut inner = None;
        let mut name = None;
        if self.peek().kind == TokenKind::Ident {
            let (n, s) = self.expect_ident()?;
            name = Some((n, s));
        } else if self.peek().is_punct("(")
            && (self.peek_at(1).is_punct("*") || self.peek_at(1).is_punct("("))
        {
            self.bump();
            inner = Some(Box::new(self.declarator(abstract_ok)?));
            self.expect_punct(")")?;
        } else if !abstract_ok {
            return self.error("declarator");
        }
        let mut suffixes = Vec::new();
        loop {
            if self.eat_punct("[") {
                let t = self.peek().clone();
                if t.kind != TokenKind::IntLit {
                    return self.error("array length");
                }
                self.bump();
                let n = parse_int(&t.text).filter(|n| *n >= 0).ok_or_else(|| ParseError {
                    span: t.span,
                    expected: "array length".into(),
                    found: t.text.clone(),
                })?;
                self.expect_punct("]")?;
                suffixes.push(Suffix::Array(n as u64));
            } else if self.peek().is_punct("(") {
                self.bump();
                let (params, varargs) = self.param_list()?;
                suffixes.push(Suffix::Func(params, varargs));
            } else {
                break;
            }
        }
        Ok(Declarator { pointers, inner, name, suffixes })
    }

    /// After the opening paren; consumes the closing one.
    fn param_list(&mut self) -> PResult<(Option<Vec<Param>>, bool)> {
        if self.eat_punct(")") {
            return Ok((None, false));
        }
        if self.peek().is_keyword(Keyword::Void) && self.peek_at(1).is_punct(")") {
            self.bump();
            self.bump();
            return Ok((Some(Vec::new()), false));
        }
        let mut params = Vec::new();
        let mut varargs = false;
        loop {
            if self.eat_punct("...") {
                varargs = true;
                break;
            }
            let start = self.peek().span;
            let (base, _) = self.decl_specifiers()?;
            let (name, ty) = self.declarator(true)?.apply(base);
            params.push(Param { name: name.map(|n| n.0), ty, span: start.to(self.prev_span()) });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok((Some(params), varargs))
    }

    fn type_name(&mut self) -> PResult<TypeSpec> {
        let (base, _) = self.decl_specifiers()?;
        let (name, ty) = self.declarator(true)?.apply(base);
        if let Some((_, span)) = name {
            return Err(ParseError { span, expected: "abstract type".into(), found: "identifier".into() });
        }
        Ok(ty)
    }

    // ---- statements ---------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.peek().is_punct("}") {
            if self.peek().kind == TokenKind::Eof {
                return self.error("`}`");
            }
            stmts.push(self.statement()?);
        }
        let close = self.expect_punct("}")?;
        Ok(Block { stmts, span: open.to(close) })
    }

    fn local_decl(&mut self) -> PResult<Stmt> {
        let start = self.peek().span;
        let (base, def) = self.decl_specifiers()?;
        if let Some(def) = def {
            return Err(ParseError {
                span: def.span,
                expected: "declaration".into(),
                found: "local struct definition".into(),
            });
        }
        let mut decls = Vec::new();
        loop {
            let dstart = self.peek().span;
            let (name, ty) = self.declarator(false)?.apply(base.clone());
            let Some((name, _)) = name else { return self.error("declarator name") };
            let init = if self.eat_punct("=") { Some(self.assignment()?) } else { None };
            decls.push(VarDecl { name, ty, init, span: dstart.to(self.prev_span()) });
            if !self.eat_punct(",") {
                break;
            }
        }
        let end = self.expect_punct(";")?;
        Ok(Stmt::Decl(decls, start.to(end)))
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let t = self.peek().clone();
        if self.starts_type(&t) {
            return self.local_decl();
        }
        match t.kind {
            TokenKind::Punct if t.text == "{" => Ok(Stmt::Block(self.block()?)),
            TokenKind::Punct if t.text == ";" => {
                self.bump();
                Ok(Stmt::Empty(t.span))
            }
            TokenKind::Keyword(Keyword::If) => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expression()?;
                self.expect_punct(")")?;
                let then = Box::new(self.statement()?);
                let els = if self.eat_keyword(Keyword::Else) {
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                Ok(Stmt::If { cond, then, els, span: t.span.to(self.prev_span()) })
            }
            TokenKind::Keyword(Keyword::While) => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expression()?;
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::While { cond, body, span: t.span.to(self.prev_span()) })
            }
            TokenKind::Keyword(Keyword::For) => {
                self.bump();
                self.expect_punct("(")?;
                let init = if self.eat_punct(";") {
                    None
                } else if self.starts_type(&self.peek().clone()) {
                    Some(Box::new(self.local_decl()?))
                } else {
                    let e = self.expression()?;
                    let end = self.expect_punct(";")?;
                    let span = e.span.to(end);
                    Some(Box::new(Stmt::Expr(e, span)))
                };
                let cond = if self.peek().is_punct(";") { None } else { Some(self.expression()?) };
                self.expect_punct(";")?;
                let step = if self.peek().is_punct(")") { None } else { Some(self.expression()?) };
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::For { init, cond, step, body, span: t.span.to(self.prev_span()) })
            }
            TokenKind::Keyword(Keyword::Return) => {
                self.bump();
                let value = if self.peek().is_punct(";") { None } else { Some(self.expression()?) };
                let end = self.expect_punct(";")?;
                Ok(Stmt::Return(value, t.span.to(end)))
            }
            TokenKind::Keyword(Keyword::Goto) => self.goto_stmt(),
            _ => {
                let e = self.expression()?;
                let end = self.expect_punct(";")?;
                let span = e.span.to(end);
                Ok(Stmt::Expr(e, span))
            }
        }
    }

    fn goto_stmt(&mut self) -> PResult<Stmt> {
        let kw = self.bump().span;
        let at = self.peek().span;
        let call = self.postfix()?;
        let ExprKind::Call(callee, args) = call.kind else {
            return Err(ParseError {
                span: at,
                expected: "goto target with argument list".into(),
                found: "expression".into(),
            });
        };
        let target = match callee.kind {
            ExprKind::Ident(name) => GotoTarget::Direct(name, callee.span),
            _ => GotoTarget::Indirect(*callee),
        };
        let env = if self.eat_punct(",") { Some(self.assignment()?) } else { None };
        let end = self.expect_punct(";")?;
        Ok(Stmt::Goto(Goto { target, args, env, span: kw.to(end) }))
    }

    // ---- expressions --------------------------------------------------

    fn expression(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.binary(0)?;
        let t = self.peek().clone();
        if t.kind != TokenKind::Punct {
            return Ok(lhs);
        }
        let op = match t.text.as_str() {
            "=" => None,
            "+=" => Some(BinOp::Add),
            "-=" => Some(BinOp::Sub),
            "*=" => Some(BinOp::Mul),
            "/=" => Some(BinOp::Div),
            "%=" => Some(BinOp::Rem),
            "&=" => Some(BinOp::BitAnd),
            "|=" => Some(BinOp::BitOr),
            "^=" => Some(BinOp::BitXor),
            "<<=" => Some(BinOp::Shl),
            ">>=" => Some(BinOp::Shr),
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.assignment()?;
        let span = lhs.span.to(rhs.span);
        Ok(self.mk(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek();
            if t.kind != TokenKind::Punct {
                break;
            }
            let Some((op, prec)) = binop_of(&t.text) else { break };
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = self.mk(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let op = match (&t.kind, t.text.as_str()) {
            (TokenKind::Punct, "-") => Some(UnOp::Neg),
            (TokenKind::Punct, "!") => Some(UnOp::Not),
            (TokenKind::Punct, "~") => Some(UnOp::BitNot),
            (TokenKind::Punct, "*") => Some(UnOp::Deref),
            (TokenKind::Punct, "&") => Some(UnOp::AddrOf),
            (TokenKind::Punct, "++") => Some(UnOp::PreInc),
            (TokenKind::Punct, "--") => Some(UnOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let inner = self.unary()?;
            let span = t.span.to(inner.span);
            return Ok(self.mk(ExprKind::Unary(op, Box::new(inner)), span));
        }
        if t.is_punct("+") {
            self.bump();
            return self.unary();
        }
        if t.is_keyword(Keyword::Sizeof) {
            self.bump();
            if self.peek().is_punct("(") && self.starts_type(&self.peek_at(1).clone()) {
                self.bump();
                let ty = self.type_name()?;
                let end = self.expect_punct(")")?;
                return Ok(self.mk(ExprKind::SizeofType(ty), t.span.to(end)));
            }
            let inner = self.unary()?;
            let span = t.span.to(inner.span);
            return Ok(self.mk(ExprKind::SizeofExpr(Box::new(inner)), span));
        }
        if t.is_punct("(") && self.starts_type(&self.peek_at(1).clone()) {
            self.bump();
            let ty = self.type_name()?;
            self.expect_punct(")")?;
            let inner = self.unary()?;
            let span = t.span.to(inner.span);
            return Ok(self.mk(ExprKind::Cast(ty, Box::new(inner)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let t = self.peek().clone();
            if t.kind != TokenKind::Punct {
                break;
            }
            match t.text.as_str() {
                "(" => {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.peek().is_punct(")") {
                        loop {
                            args.push(self.assignment()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    let end = self.expect_punct(")")?;
                    let span = e.span.to(end);
                    e = self.mk(ExprKind::Call(Box::new(e), args), span);
                }
                "[" => {
                    self.bump();
                    let idx = self.expression()?;
                    let end = self.expect_punct("]")?;
                    let span = e.span.to(end);
                    e = self.mk(ExprKind::Index(Box::new(e), Box::new(idx)), span);
                }
                "." | "->" => {
                    self.bump();
                    let (field, fspan) = self.expect_ident()?;
                    let span = e.span.to(fspan);
                    let kind = if t.text == "." {
                        ExprKind::Member(Box::new(e), field)
                    } else {
                        ExprKind::Arrow(Box::new(e), field)
                    };
                    e = self.mk(kind, span);
                }
                "++" | "--" => {
                    self.bump();
                    let op = if t.text == "++" { UnOp::PostInc } else { UnOp::PostDec };
                    let span = e.span.to(t.span);
                    e = self.mk(ExprKind::Unary(op, Box::new(e)), span);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Ident => {
                self.bump();
                Ok(self.mk(ExprKind::Ident(t.text), t.span))
            }
            TokenKind::IntLit if t.text.starts_with('\'') => {
                self.bump();
                let v = char_value(&t.text).ok_or_else(|| ParseError {
                    span: t.span,
                    expected: "character literal".into(),
                    found: t.text.clone(),
                })?;
                Ok(self.mk(ExprKind::Char(t.text, v), t.span))
            }
            TokenKind::IntLit => {
                self.bump();
                let v = parse_int(&t.text).ok_or_else(|| ParseError {
                    span: t.span,
                    expected: "integer literal".into(),
                    found: t.text.clone(),
                })?;
                Ok(self.mk(ExprKind::Int(v), t.span))
            }
            TokenKind::StrLit => {
                self.bump();
                Ok(self.mk(ExprKind::Str(t.text), t.span))
            }
            TokenKind::Keyword(Keyword::Environment) => {
                self.bump();
                Ok(self.mk(ExprKind::Environment, t.span))
            }
            TokenKind::Keyword(Keyword::ReturnCont) => {
                self.bump();
                Ok(self.mk(ExprKind::ReturnCont, t.span))
            }
            TokenKind::Punct if t.text == "(" => {
                self.bump();
                let mut e = self.expression()?;
                let end = self.expect_punct(")")?;
                // Keep the parenthesised extent so child spans stay nested.
                e.span = t.span.to(end);
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

fn binop_of(p: &str) -> Option<(BinOp, u8)> {
    Some(match p {
        "||" => (BinOp::Or, 1),
        "&&" => (BinOp::And, 2),
        "|" => (BinOp::BitOr, 3),
        "^" => (BinOp::BitXor, 4),
        "&" => (BinOp::BitAnd, 5),
        "==" => (BinOp::Eq, 6),
        "!=" => (BinOp::Ne, 6),
        "<" => (BinOp::Lt, 7),
        ">" => (BinOp::Gt, 7),
        "<=" => (BinOp::Le, 7),
        ">=" => (BinOp::Ge, 7),
        "<<" => (BinOp::Shl, 8),
        ">>" => (BinOp::Shr, 8),
        "+" => (BinOp::Add, 9),
        "-" => (BinOp::Sub, 9),
        "*" => (BinOp::Mul, 10),
        "/" => (BinOp::Div, 10),
        "%" => (BinOp::Rem, 10),
        _ => return None,
    })
}

pub(crate) fn binop_prec(op: BinOp) -> u8 {
    binop_of(op.as_str()).map(|(_, p)| p).unwrap_or(0)
}

fn parse_int(text: &str) -> Option<i64> {
    let t = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()
    } else if t.len() > 1 && t.starts_with('0') {
        i64::from_str_radix(&t[1..], 8).ok()
    } else {
        t.parse().ok()
    }
}

fn char_value(text: &str) -> Option<i64> {
    let inner = text.strip_prefix('\'')?.strip_suffix('\'')?;
    let mut chars = inner.chars();
    let v = match chars.next()? {
        '\\' => match chars.next()? {
            'n' => 10,
            't' => 9,
            'r' => 13,
            '0' => 0,
            '\\' => 92,
            '\'' => 39,
            '"' => 34,
            _ => return None,
        },
        c => c as i64,
    };
    chars.next().is_none().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;

    fn unit(src: &str) -> TranslationUnit {
        parse(&tokenize(src).unwrap()).unwrap()
    }

    #[test]
    fn interface_struct_segment() {
        let u = unit(
            "struct interface1 { int i; };\n struct interface2 { int o; };\n\
             __code f(struct interface1 a) { struct interface2 b; b.o=a.i; goto g(b); }",
        );
        assert_eq!(u.items.len(), 3);
        let Item::CodeSegment(f) = &u.items[2] else { panic!("not a code segment") };
        assert_eq!(f.params.len(), 1);
        assert_eq!(f.params[0].ty, TypeSpec::Struct("interface1".into()));
        let Some(Stmt::Goto(g)) = f.body.stmts.last() else { panic!("no goto") };
        assert_eq!(g.form(), GotoForm::Direct);
        assert_eq!(g.args.len(), 1);
    }

    #[test]
    fn goto_with_environment() {
        let u = unit("__code h(char *s) { goto (*exit)(0),env; }");
        let Item::CodeSegment(h) = &u.items[0] else { panic!() };
        let Stmt::Goto(g) = &h.body.stmts[0] else { panic!() };
        assert_eq!(g.form(), GotoForm::WithEnv);
        let GotoTarget::Indirect(t) = &g.target else { panic!() };
        assert!(matches!(&t.kind, ExprKind::Unary(UnOp::Deref, e) if e.kind == ExprKind::Ident("exit".into())));
        assert!(matches!(g.args[0].kind, ExprKind::Int(0)));
        assert!(matches!(&g.env.as_ref().unwrap().kind, ExprKind::Ident(n) if n == "env"));
    }

    #[test]
    fn plain_function_and_implicit_int() {
        let u = unit("int f(){return 1;} g0(int i) { return i; }");
        let Item::Function(f) = &u.items[0] else { panic!() };
        assert!(matches!(f.body.stmts[0], Stmt::Return(Some(_), _)));
        let Item::Function(g) = &u.items[1] else { panic!() };
        assert!(g.implicit_int);
        assert_eq!(g.ret, TypeSpec::Int);
    }

    #[test]
    fn segment_pointer_declarators() {
        let u = unit("__code (*exit)(int); struct c { __code (*ret)(); int i_, k_; };");
        let Item::Var(v) = &u.items[0] else { panic!() };
        let TypeSpec::Pointer(inner) = &v.ty else { panic!() };
        assert!(inner.is_code_func());
        let Item::Struct(s) = &u.items[1] else { panic!() };
        assert_eq!(s.fields.len(), 3);
        assert!(matches!(&s.fields[0].ty, TypeSpec::Pointer(f) if matches!(&**f, TypeSpec::Func(fs) if fs.params.is_none())));
    }

    #[test]
    fn typedef_and_cast() {
        let u = unit(
            "typedef char *stack; struct s { int a; };\n\
             __code f(stack sp) { struct s *c = (struct s *)(sp -= sizeof(struct s)); goto f(sp); }",
        );
        let Item::CodeSegment(f) = &u.items[2] else { panic!() };
        assert_eq!(f.params[0].ty, TypeSpec::Named("stack".into()));
        let Stmt::Decl(d, _) = &f.body.stmts[0] else { panic!() };
        assert!(matches!(d[0].init.as_ref().unwrap().kind, ExprKind::Cast(..)));
    }

    #[test]
    fn indirect_goto_through_fields() {
        let u = unit("__code s(T self, L list) { goto list->thread->next(list->thread,list); }".replace("T self, L list", "int self, int list").as_str());
        let Item::CodeSegment(s) = &u.items[0] else { panic!() };
        let Stmt::Goto(g) = &s.body.stmts[0] else { panic!() };
        assert_eq!(g.form(), GotoForm::Indirect);
    }

    #[test]
    fn precedence() {
        let u = unit("int f(int a){ return a + 2 * 3 < 4 && !a; }");
        let Item::Function(f) = &u.items[0] else { panic!() };
        let Stmt::Return(Some(e), _) = &f.body.stmts[0] else { panic!() };
        let ExprKind::Binary(BinOp::And, l, _) = &e.kind else { panic!("{:?}", e.kind) };
        let ExprKind::Binary(BinOp::Lt, ll, _) = &l.kind else { panic!() };
        assert!(matches!(&ll.kind, ExprKind::Binary(BinOp::Add, _, r) if matches!(r.kind, ExprKind::Binary(BinOp::Mul, ..))));
    }

    #[test]
    fn errors_report_expected_and_found() {
        let e = parse(&tokenize("int f( { }").unwrap()).unwrap_err();
        assert_eq!(e.found, "`{`");
        let e = parse(&tokenize("__code f() { goto g; }").unwrap()).unwrap_err();
        assert!(e.expected.contains("goto target"));
        let e = parse(&tokenize("int x").unwrap()).unwrap_err();
        assert_eq!(e.found, "end of input");
    }
}
