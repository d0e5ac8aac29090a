//! Timing harness for the f0/g0/h0 program: the original call form against
//! its converted forms, each driven by a loop around `f0(233)`.

use std::fmt;
use std::path::PathBuf;
use std::process::Command;
use std::str::FromStr;
use std::time::Instant;

use crate::cps::{cps_source, CpsOptions};
use crate::driver::{compile_source, run, DriverError, Workdir};
use crate::emit::{Backend, EmitConfig};

/// The benchmarked functions.
pub const PROGRAM: &str = include_str!("../corpus/conv1.c");
pub const ARGUMENT: i32 = 233;
pub const DEFAULT_LOOP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    CallForm,
    CpsStraight,
    CpsOpt,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::CallForm, Variant::CpsStraight, Variant::CpsOpt];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::CallForm => "call-form",
            Variant::CpsStraight => "cps-straight",
            Variant::CpsOpt => "cps-opt",
        }
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Plain,
    Omit,
    Fast,
}

impl Preset {
    pub fn flags(self) -> &'static [&'static str] {
        match self {
            Preset::Plain => &["-O2"],
            Preset::Omit => &["-O2", "-fomit-frame-pointer"],
            Preset::Fast => &["-O3", "-fomit-frame-pointer"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Plain => "plain",
            Preset::Omit => "omit",
            Preset::Fast => "fast",
        }
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [Preset::Plain, Preset::Omit, Preset::Fast]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (plain, omit, fast)"))
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    pub backend: Backend,
    pub preset: Preset,
    pub loops: u64,
    pub dir: PathBuf,
    pub cc: String,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub variant: Variant,
    pub backend: Backend,
    pub iterations: u64,
    pub result: Option<i64>,
    pub seconds: f64,
    /// Explicit stack bytes touched by one call.
    pub highwater: u64,
    /// Frame copies over every goto in the emitted unit.
    pub copies: usize,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// One `key=value` line. Everything but `seconds` is stable.
    pub fn record(&self, report: &BenchReport) -> String {
        format!(
            "variant={} backend={} cc={} preset={} flags=\"{}\" iterations={} result={} seconds={:.6} highwater={} copies={} status={}",
            self.variant.as_str(),
            self.backend.as_str(),
            report.cc,
            report.preset.as_str(),
            report.preset.flags().join(" "),
            self.iterations,
            self.result.map_or("none".to_string(), |r| r.to_string()),
            self.seconds,
            self.highwater,
            self.copies,
            if self.ok() { "ok" } else { "failed" }
        )
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cc: String,
    pub cc_version: String,
    pub preset: Preset,
    pub iterations: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn ok(&self) -> bool {
        self.rows.iter().all(BenchRow::ok)
    }

    pub fn records(&self) -> String {
        self.rows.iter().map(|r| r.record(self) + "\n").collect()
    }

    /// Whether the straight conversion ran no slower than the call form.
    pub fn cps_not_slower(&self) -> Option<bool> {
        let t = |v| self.rows.iter().find(|r| r.variant == v && r.ok()).map(|r| r.seconds);
        Some(t(Variant::CpsStraight)? <= t(Variant::CallForm)?)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        writeln!(f, "compiler: {} ({})", self.cc, self.cc_version)?;
        writeln!(f, "flags: {} ({})", self.preset.flags().join(" "), self.preset.as_str())?;
        writeln!(f, "iterations: {}", self.iterations)?;
        writeln!(f, "{:<14} {:<11} {:>10} {:>7} {:>10} {:>7}", "variant", "backend", "seconds", "result", "highwater", "copies")?;
        for r in &self.rows {
            let result = r.result.map_or("-".to_string(), |v| v.to_string());
            match &r.error {
                None => writeln!(
                    f,
                    "{:<14} {:<11} {:>10.3} {:>7} {:>10} {:>7}",
                    r.variant.as_str(),
                    r.backend.as_str(),
                    r.seconds,
                    result,
                    r.highwater,
                    r.copies
                )?,
                Some(e) => writeln!(f, "{:<14} {:<11} failed: {e}", r.variant.as_str(), r.backend.as_str())?,
            }
        }
        if let Some(b) = self.cps_not_slower() {
            writeln!(f, "cps-straight <= call-form: {}", if b { "yes" } else { "no" })?;
        }
        Ok(())
    }
}

/// The value every variant must print: `f0(233)` evaluated directly.
pub fn oracle() -> i64 {
    let h0 = |i: i64| i + 4;
    let g0 = |i: i64| h0(i + 4) + i;
    let f0 = |i: i64| {
        let k = 3 + i;
        let j = g0(i + 3);
        k + 4 + j
    };
    f0(ARGUMENT as i64)
}

/// CbC source of `variant` looping `loops` times.
pub fn variant_source(variant: Variant, loops: u64) -> Result<String, DriverError> {
    match variant {
        Variant::CallForm => Ok(format!(
            "{PROGRAM}\nint main(void) {{\n    int n;\n    int r;\n    r = 0;\n    for (n = 0; n < {loops}; n = n + 1)\n        r = f0(cbc_opaque({ARGUMENT}));\n    printf(\"%d\\n\", r);\n    return 0;\n}}\n"
        )),
        Variant::CpsStraight | Variant::CpsOpt => {
            let opts = CpsOptions { roots: vec!["f0".into()], fuse: variant == Variant::CpsOpt, fault_drop_live: None };
            let out = cps_source(PROGRAM, &opts).map_err(DriverError::Diagnostics)?;
            Ok(format!("{}{}", out.text, cps_driver(loops)))
        }
    }
}

/// Segments that re-enter `f0_e` until the count runs out, then return to
/// the C caller.
fn cps_driver(loops: u64) -> String {
    format!(
        r#"
int bench_left;

__code bench_next(int r, char *sp) {{
    bench_left = bench_left - 1;
    if (bench_left > 0) goto f0_e(cbc_opaque({ARGUMENT}), sp);
    sp = sp + sizeof(struct cont_interface);
    goto (((struct cps_main_interface *)sp)->main_ret)(r), ((struct cps_main_interface *)sp)->env;
}}

int bench_run(int n) {{
    char *sp = cbc_stack_top();
    bench_left = n;
    sp = sp - sizeof(struct cps_main_interface);
    ((struct cps_main_interface *)sp)->main_ret = __return;
    ((struct cps_main_interface *)sp)->env = __environment;
    sp = sp - sizeof(struct cont_interface);
    ((struct cont_interface *)sp)->ret = bench_next;
    goto f0_e(cbc_opaque({ARGUMENT}), sp);
}}

int main(void) {{
    printf("%d\n", bench_run({loops}));
    return 0;
}}
"#
    )
}

fn cc_version(cc: &str) -> String {
    Command::new(cc)
        .arg("--version")
        .output()
        .ok()
        .and_then(|o| String::from_utf8_lossy(&o.stdout).lines().next().map(str::to_string))
        .unwrap_or_else(|| "unknown".to_string())
}

struct Built {
    result: i64,
    highwater: u64,
    copies: usize,
}

fn build_and_run(wd: &Workdir, cfg: &BenchConfig, variant: Variant, loops: u64, tag: &str) -> Result<(Built, f64), String> {
    let src = variant_source(variant, loops).map_err(|e| e.to_string())?;
    let emit = EmitConfig { backend: cfg.backend, ..EmitConfig::default() };
    let c = compile_source(&src, &emit).map_err(|e| e.to_string())?;
    let copies = c.lowered.gotos().into_iter().map(|(_, g)| g.plan.steps.len()).sum();
    let exe = format!("{}_{}_{tag}", variant.as_str().replace('-', "_"), cfg.backend.as_str());
    let path = wd.build(&exe, &[(&format!("{exe}.c"), &c.c_source)], cfg.preset.flags()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = run(&path, &[("CBC_HIGHWATER", "1")]).map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    if !out.status.success() {
        return Err(format!("exited with {}", out.status));
    }
    let result = String::from_utf8_lossy(&out.stdout).trim().parse::<i64>().map_err(|e| format!("bad output: {e}"))?;
    let highwater = crate::driver::parse_highwater(&String::from_utf8_lossy(&out.stderr)).map_or(0, |(h, _)| h);
    Ok((Built { result, highwater, copies }, seconds))
}

/// Builds and checks every variant once, then times them one at a time.
/// A variant whose single-call result is wrong is not timed.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, DriverError> {
    let wd = Workdir::new(&cfg.dir, cfg.cc.clone())?;
    let expected = oracle();
    let mut rows = Vec::new();
    for &variant in &cfg.variants {
        let mut row = BenchRow {
            variant,
            backend: cfg.backend,
            iterations: cfg.loops,
            result: None,
            seconds: 0.0,
            highwater: 0,
            copies: 0,
            error: None,
        };
        match build_and_run(&wd, cfg, variant, 1, "gate") {
            Ok((b, _)) if b.result == expected => {
                row.highwater = b.highwater;
                row.copies = b.copies;
                row.result = Some(b.result);
            }
            Ok((b, _)) => row.error = Some(format!("computed {} instead of {expected}", b.result)),
            Err(e) => row.error = Some(e),
        }
        rows.push(row);
    }
    if rows.iter().all(BenchRow::ok) {
        for row in &mut rows {
            match build_and_run(&wd, cfg, row.variant, cfg.loops, "timed") {
                Ok((b, s)) if b.result == expected => row.seconds = s.max(f64::MIN_POSITIVE),
                Ok((b, _)) => row.error = Some(format!("computed {} instead of {expected}", b.result)),
                Err(e) => row.error = Some(e),
            }
        }
    }
    Ok(BenchReport { cc: cfg.cc.clone(), cc_version: cc_version(&cfg.cc), preset: cfg.preset, iterations: cfg.loops, rows })
}
