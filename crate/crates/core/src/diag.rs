//! Diagnostics with stable codes, shared by every pass.

use std::fmt;

use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    Lex,
    Parse,
    RetInSeg,
    Fallthrough,
    GotoNonSeg,
    SegCall,
    EnvOutsideFn,
    Arity,
    Type,
    Undef,
    CpsUnsupported,
    Unreachable,
    ImplicitSegment,
    StrictCbc,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Lex => "E-LEX",
            Code::Parse => "E-PARSE",
            Code::RetInSeg => "E-RET-IN-SEG",
            Code::Fallthrough => "E-FALLTHROUGH",
            Code::GotoNonSeg => "E-GOTO-NONSEG",
            Code::SegCall => "E-SEG-CALL",
            Code::EnvOutsideFn => "E-ENV-OUTSIDE-FN",
            Code::Arity => "E-ARITY",
            Code::Type => "E-TYPE",
            Code::Undef => "E-UNDEF",
            Code::CpsUnsupported => "E-CPS-UNSUPPORTED",
            Code::Unreachable => "W-UNREACHABLE",
            Code::ImplicitSegment => "W-IMPLICIT-SEG",
            Code::StrictCbc => "W-STRICT-CBC",
        }
    }

    pub fn is_error(self) -> bool {
        !matches!(self, Code::Unreachable | Code::ImplicitSegment | Code::StrictCbc)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: Code,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { code, span, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.code.is_error()
    }

    /// `file:line:col: code: message`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}: {}", self.span.line, self.span.col, self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.code, self.message)
    }
}

/// Stable ordering: by position, then code, then message.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.start, a.span.end, a.code, &a.message).cmp(&(b.span.start, b.span.end, b.code, &b.message))
    });
}
