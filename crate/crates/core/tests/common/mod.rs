#![allow(dead_code)]

pub mod cc;
pub mod checks;
pub mod paracopy_oracle;
pub mod progs;
