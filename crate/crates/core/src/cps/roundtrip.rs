//! Runs a unit before and after conversion on the same inputs.

use crate::ast::{Item, TranslationUnit};
use crate::driver::{compile_source, DriverError, Workdir};
use crate::emit::EmitConfig;
use crate::pretty::print_item;

use super::{cps_source, CpsOptions};

/// One call printed by the driver: function name and integer arguments.
pub type Sample = (String, Vec<i64>);

/// `unit` without its `main`, followed by a `main` printing each sample's
/// result on its own line.
pub fn with_driver(unit: &TranslationUnit, samples: &[Sample]) -> String {
    let mut out = String::new();
    for item in &unit.items {
        if matches!(item, Item::Function(f) if f.name == "main") {
            continue;
        }
        out.push_str(&print_item(item));
        out.push('\n');
    }
    out.push_str("int main(void) {\n");
    for (f, args) in samples {
        let args: Vec<String> = args.iter().map(i64::to_string).collect();
        out.push_str(&format!("    printf(\"%d\\n\", {f}({}));\n", args.join(", ")));
    }
    out.push_str("    return 0;\n}\n");
    out
}

/// Compiles `src` through cbc and returns the program's stdout.
pub fn run_unit(wd: &Workdir, exe: &str, src: &str, flags: &[&str]) -> Result<String, DriverError> {
    let c = compile_source(src, &EmitConfig::default())?;
    let path = wd.build(exe, &[(&format!("{exe}.c"), &c.c_source)], flags)?;
    let out = crate::driver::run(&path, &[])?;
    if !out.status.success() {
        return Err(DriverError::CompilerFailed(format!("{exe} exited with {}", out.status)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

#[derive(Debug)]
pub struct Roundtrip {
    pub before: String,
    pub after: String,
}

impl Roundtrip {
    pub fn agrees(&self) -> bool {
        self.before == self.after
    }
}

/// Converts `src` and runs both versions on `samples`.
pub fn roundtrip(wd: &Workdir, name: &str, src: &str, opts: &CpsOptions, samples: &[Sample], flags: &[&str]) -> Result<Roundtrip, DriverError> {
    let unit = crate::driver::analyze_source(src).map_err(DriverError::Diagnostics)?;
    let converted = cps_source(src, opts).map_err(DriverError::Diagnostics)?;
    let before = run_unit(wd, &format!("{name}_before"), &with_driver(&unit.ast, samples), flags)?;
    let after = run_unit(wd, &format!("{name}_after"), &with_driver(&converted.unit, samples), flags)?;
    Ok(Roundtrip { before, after })
}
