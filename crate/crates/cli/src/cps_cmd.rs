use std::path::PathBuf;

use cbc_core::cps::{cps_source, CpsOptions};

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum CpsOpt {
    None,
    Fuse,
}

#[derive(clap::Args)]
pub struct CpsArgs {
    pub input: PathBuf,
    /// Comma-separated functions to convert; default is all but `main`.
    #[arg(long, value_delimiter = ',')]
    pub roots: Vec<String>,
    #[arg(long = "cps-opt", value_enum, default_value = "none")]
    pub opt: CpsOpt,
    /// Output file; stdout when absent.
    #[arg(short = 'o')]
    pub output: Option<PathBuf>,
    /// Print split points to stderr.
    #[arg(long)]
    pub dump_splits: bool,
}

pub fn run(args: &CpsArgs) -> u8 {
    let src = match crate::read_input(&args.input) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let opts = CpsOptions { roots: args.roots.clone(), fuse: matches!(args.opt, CpsOpt::Fuse), fault_drop_live: None };
    let out = match cps_source(&src, &opts) {
        Ok(o) => o,
        Err(d) => {
            crate::print_diags(&args.input, &d);
            return crate::EXIT_DIAG;
        }
    };
    if args.dump_splits {
        for p in &out.split_points {
            eprintln!(
                "split {}#{} -> {} live [{}] via {} in {} cont {}",
                p.function,
                p.index,
                p.callee,
                p.live.join(", "),
                p.interface.as_deref().unwrap_or("args"),
                p.caller_segment,
                p.continuation
            );
        }
    }
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.text) {
                eprintln!("cbc: {}: {e}", path.display());
                return crate::EXIT_INTERNAL;
            }
        }
        None => print!("{}", out.text),
    }
    crate::EXIT_OK
}
