//! The whole pipeline from source text to C, plus the downstream C
//! toolchain used by tests, the benchmark and `cbc compile`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crate::diag::{Code, Diagnostic};
use crate::emit::{emit, EmitConfig};
use crate::lower::{lower_with, LoweredUnit};
use crate::sema::{lint::lint_cbc_purity, TypedUnit};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("{} error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Diagnostics(Vec<Diagnostic>),
    #[error("no C compiler found (set CBC_CC)")]
    NoCompiler,
    #[error("C compiler failed:\n{0}")]
    CompilerFailed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Lexes, parses and type-checks `src`.
pub fn analyze_source(src: &str) -> Result<TypedUnit, Vec<Diagnostic>> {
    let toks = crate::lexer::tokenize(src).map_err(|e| vec![Diagnostic::new(Code::Lex, e.span, e.message)])?;
    let ast = crate::parser::parse(&toks).map_err(|e| {
        vec![Diagnostic::new(Code::Parse, e.span, format!("expected {}, found {}", e.expected, e.found))]
    })?;
    crate::sema::analyze(ast)
}

pub struct Compiled {
    pub lowered: LoweredUnit,
    pub c_source: String,
    /// Non-fatal diagnostics, sorted.
    pub warnings: Vec<Diagnostic>,
}

/// Source to C. With `strict_cbc`, strict-profile findings are fatal.
pub fn compile_source(src: &str, cfg: &EmitConfig) -> Result<Compiled, DriverError> {
    let unit = analyze_source(src).map_err(DriverError::Diagnostics)?;
    let mut warnings = unit.warnings.clone();
    let lint = lint_cbc_purity(&unit, cfg.strict_cbc);
    if cfg.strict_cbc && !lint.is_empty() {
        warnings.extend(lint);
        crate::diag::sort(&mut warnings);
        return Err(DriverError::Diagnostics(warnings));
    }
    let lowered = lower_with(unit, cfg.paracopy_mode).map_err(|d| DriverError::Diagnostics(vec![d]))?;
    let c_source = emit(&lowered, cfg);
    crate::diag::sort(&mut warnings);
    Ok(Compiled { lowered, c_source, warnings })
}

/// The downstream C compiler: `CBC_CC` if set, else the first of `cc`,
/// `gcc`, `clang` that runs.
pub fn find_cc() -> Option<String> {
    if let Ok(cc) = std::env::var("CBC_CC") {
        if !cc.is_empty() {
            return Some(cc);
        }
    }
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(str::to_string)
}

/// Flags every emitted unit is built with. Frame slots are accessed through
/// casts, so strict aliasing must be off.
pub const BASE_CFLAGS: &[&str] = &["-std=c99", "-fno-strict-aliasing"];

/// A scratch directory holding emitted C, the runtime and built programs.
pub struct Workdir {
    pub dir: PathBuf,
    pub cc: String,
}

impl Workdir {
    pub fn new(dir: impl Into<PathBuf>, cc: String) -> std::io::Result<Workdir> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        crate::runtime::write_to(&dir)?;
        Ok(Workdir { dir, cc })
    }

    /// Writes `sources` and links them with the runtime into `exe`.
    pub fn build(&self, exe: &str, sources: &[(&str, &str)], flags: &[&str]) -> Result<PathBuf, DriverError> {
        let mut cmd = Command::new(&self.cc);
        cmd.current_dir(&self.dir).args(BASE_CFLAGS).args(flags);
        for (name, text) in sources {
            std::fs::write(self.dir.join(name), text)?;
            cmd.arg(name);
        }
        let out_path = self.dir.join(exe);
        cmd.arg(crate::runtime::SOURCE_NAME).arg("-o").arg(&out_path);
        let out = cmd.output()?;
        if !out.status.success() {
            return Err(DriverError::CompilerFailed(String::from_utf8_lossy(&out.stderr).into_owned()));
        }
        Ok(out_path)
    }
}

pub fn run(exe: &Path, env: &[(&str, &str)]) -> std::io::Result<Output> {
    let mut cmd = Command::new(exe);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output()
}

/// Reads `cbc-highwater=N cbc-native-highwater=M` from a program's stderr.
pub fn parse_highwater(stderr: &str) -> Option<(u64, u64)> {
    let line = stderr.lines().rev().find(|l| l.starts_with("cbc-highwater="))?;
    let mut vals = line.split_whitespace().filter_map(|kv| kv.split_once('=')).map(|(_, v)| v.parse::<u64>());
    Some((vals.next()?.ok()?, vals.next()?.ok()?))
}
