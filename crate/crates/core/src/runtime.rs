//! The C support files shipped next to every emitted unit.

pub const HEADER_NAME: &str = "cbc_rt.h";
pub const SOURCE_NAME: &str = "cbc_rt.c";

pub const HEADER: &str = include_str!("../runtime/cbc_rt.h");
pub const SOURCE: &str = include_str!("../runtime/cbc_rt.c");

/// Exit status of every runtime trap.
pub const TRAP_STATUS: i32 = 70;

/// Writes both files into `dir`.
pub fn write_to(dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(dir.join(HEADER_NAME), HEADER)?;
    std::fs::write(dir.join(SOURCE_NAME), SOURCE)
}
