use std::path::PathBuf;

use cbc_core::bench::{run_bench, BenchConfig, Preset, Variant, DEFAULT_LOOP};
use cbc_core::emit::Backend;

#[derive(clap::Args)]
pub struct BenchArgs {
    /// Calls to `f0` per variant.
    #[arg(long = "loop", default_value_t = DEFAULT_LOOP)]
    pub loops: u64,
    #[arg(long, default_value = "fast")]
    pub preset: Preset,
    #[arg(long, default_value = "direct")]
    pub backend: Backend,
    /// Comma-separated subset of call-form, cps-straight, cps-opt.
    #[arg(long, value_delimiter = ',', default_value = "call-form,cps-straight,cps-opt")]
    pub variants: Vec<Variant>,
    /// Scratch directory for sources and binaries.
    #[arg(long, default_value = "cbc-bench")]
    pub dir: PathBuf,
    /// Record file, one line per variant; defaults to `bench.records` in the scratch directory.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

pub fn run(args: &BenchArgs) -> u8 {
    let Some(cc) = cbc_core::driver::find_cc() else {
        eprintln!("cbc: no C compiler found (set CBC_CC)");
        return crate::EXIT_INTERNAL;
    };
    if args.loops == 0 || args.loops > i32::MAX as u64 {
        eprintln!("cbc: --loop must be between 1 and {}", i32::MAX);
        return crate::EXIT_DIAG;
    }
    let cfg = BenchConfig {
        variants: args.variants.clone(),
        backend: args.backend,
        preset: args.preset,
        loops: args.loops,
        dir: args.dir.clone(),
        cc,
    };
    let report = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cbc: {e}");
            return crate::EXIT_INTERNAL;
        }
    };
    let records = report.records();
    print!("{records}");
    print!("{report}");
    let path = args.records.clone().unwrap_or_else(|| args.dir.join("bench.records"));
    if let Err(e) = std::fs::write(&path, &records) {
        eprintln!("cbc: {}: {e}", path.display());
        return crate::EXIT_INTERNAL;
    }
    if report.ok() {
        crate::EXIT_OK
    } else {
        crate::EXIT_INTERNAL
    }
}
