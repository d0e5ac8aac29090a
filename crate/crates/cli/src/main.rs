use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbc_core::diag::Diagnostic;
use cbc_core::driver::{self, DriverError};
use cbc_core::emit::{Backend, EmitConfig};
use cbc_core::paracopy::ParacopyMode;
use clap::{Parser, Subcommand};

mod bench_cmd;
mod cps_cmd;

/// Compiler for Continuation based C.
#[derive(Parser)]
#[command(name = "cbc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and type-check only.
    Check {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        strict_cbc: bool,
    },
    /// Translate to C next to the runtime and a build script.
    Compile {
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "trampoline")]
        backend: Backend,
        #[arg(long, default_value = ".")]
        emit_dir: PathBuf,
        #[arg(long)]
        strict_cbc: bool,
        #[arg(long)]
        dump_lowered: bool,
        #[arg(long, default_value = "min")]
        paracopy: ParacopyMode,
        #[arg(long)]
        dump_paracopy: bool,
    },
    /// Convert C functions into code segments.
    Cps(cps_cmd::CpsArgs),
    /// Run the conversion benchmark.
    Bench(bench_cmd::BenchArgs),
}

/// Exit statuses.
pub const EXIT_OK: u8 = 0;
pub const EXIT_DIAG: u8 = 1;
pub const EXIT_INTERNAL: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Check { inputs, strict_cbc } => check(&inputs, strict_cbc),
        Cmd::Compile { inputs, backend, emit_dir, strict_cbc, dump_lowered, paracopy, dump_paracopy } => {
            let cfg = EmitConfig { backend, strict_cbc, paracopy_mode: paracopy, ..EmitConfig::default() };
            compile(&inputs, &cfg, &emit_dir, dump_lowered, dump_paracopy)
        }
        Cmd::Cps(args) => cps_cmd::run(&args),
        Cmd::Bench(args) => bench_cmd::run(&args),
    };
    ExitCode::from(code)
}

pub fn read_input(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cbc: cannot read {}: {e}", path.display());
        EXIT_DIAG
    })
}

pub fn print_diags(file: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}", d.render(&file.display().to_string()));
    }
}

fn check(inputs: &[PathBuf], strict: bool) -> u8 {
    let mut status = EXIT_OK;
    for path in inputs {
        let src = match read_input(path) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match driver::analyze_source(&src) {
            Ok(unit) => {
                print_diags(path, &unit.warnings);
                let lint = cbc_core::sema::lint::lint_cbc_purity(&unit, strict);
                print_diags(path, &lint);
                if !lint.is_empty() {
                    status = EXIT_DIAG;
                }
            }
            Err(diags) => {
                print_diags(path, &diags);
                status = EXIT_DIAG;
            }
        }
    }
    status
}

fn compile(inputs: &[PathBuf], cfg: &EmitConfig, dir: &Path, dump_lowered: bool, dump_paracopy: bool) -> u8 {
    if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| cbc_core::runtime::write_to(dir)) {
        eprintln!("cbc: {}: {e}", dir.display());
        return EXIT_INTERNAL;
    }
    let mut status = EXIT_OK;
    let mut outputs = Vec::new();
    for path in inputs {
        let src = match read_input(path) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match driver::compile_source(&src, cfg) {
            Ok(out) => {
                print_diags(path, &out.warnings);
                if dump_lowered {
                    print!("{}", cbc_core::lower::dump(&out.lowered));
                }
                if dump_paracopy {
                    for (owner, g) in out.lowered.gotos() {
                        println!("# {owner} {}", g.span);
                        print!("{}", g.plan.dump());
                    }
                }
                let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
                let name = format!("{stem}.c");
                if let Err(e) = std::fs::write(dir.join(&name), &out.c_source) {
                    eprintln!("cbc: {}: {e}", dir.display());
                    return EXIT_INTERNAL;
                }
                outputs.push(name);
            }
            Err(DriverError::Diagnostics(d)) => {
                print_diags(path, &d);
                status = EXIT_DIAG;
            }
            Err(e) => {
                eprintln!("cbc: {e}");
                return EXIT_INTERNAL;
            }
        }
    }
    if let Err(e) = std::fs::write(dir.join("build.sh"), build_script(&outputs)) {
        eprintln!("cbc: {e}");
        return EXIT_INTERNAL;
    }
    status
}

/// One program per emitted unit, each linked with the runtime.
fn build_script(units: &[String]) -> String {
    let mut s = String::from("#!/bin/sh\nset -e\ncd \"$(dirname \"$0\")\"\nCC=${CBC_CC:-cc}\nCFLAGS=${CFLAGS:--O2}\n");
    for u in units {
        let exe = u.trim_end_matches(".c");
        s.push_str(&format!(
            "$CC {} $CFLAGS -o {exe} {u} {}\n",
            driver::BASE_CFLAGS.join(" "),
            cbc_core::runtime::SOURCE_NAME
        ));
    }
    s
}
