//! Checks shared by the area tests and the acceptance summary. Each returns
//! a short detail line on success.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cbc_core::cps::{cps_source, CpsOptions, CpsOutput};
use cbc_core::driver::{analyze_source, compile_source};
use cbc_core::emit::{Backend, EmitConfig};
use cbc_core::paracopy::{sequentialize, sequentialize_naive};
use cbc_core::sema::lint::lint_cbc_purity;

use super::paracopy_oracle::*;

pub type Check = Result<String, String>;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Reference programs that must check without errors.
pub const REFERENCE: &[&str] = &["interface.cbc", "hello.cbc", "scheduler.cbc", "conv1.c", "conv1_straight.cbc", "conv1_opt.cbc"];

/// Every positive corpus file.
pub fn positive_files() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cbc") || n.ends_with(".c"))
        .collect();
    v.sort();
    v
}

/// `(fixture, expected lines)` for every negative fixture.
pub fn negative_fixtures() -> Vec<(String, String)> {
    let dir = corpus_dir().join("neg");
    let mut v: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cbc"))
        .map(|n| {
            let golden = dir.join(n.replace(".cbc", ".expected"));
            (n, std::fs::read_to_string(golden).unwrap_or_default())
        })
        .collect();
    v.sort();
    v
}

/// `line:col CODE` per diagnostic, as in the golden files.
pub fn diag_lines(src: &str) -> String {
    match analyze_source(src) {
        Ok(u) => u.warnings.iter().filter(|d| d.is_error()).map(|d| format!("{}:{} {}\n", d.span.line, d.span.col, d.code.as_str())).collect(),
        Err(ds) => ds.iter().filter(|d| d.is_error()).map(|d| format!("{}:{} {}\n", d.span.line, d.span.col, d.code.as_str())).collect(),
    }
}

fn timed(limit: Duration, what: &str, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:?}, limit {limit:?}"));
    }
    Ok(format!("{detail} in {:.2}s", took.as_secs_f64()))
}

pub fn corpus_clean() -> Check {
    timed(Duration::from_secs(5), "corpus", || {
        for f in REFERENCE {
            if let Err(ds) = analyze_source(&read(f)) {
                let errs: Vec<String> = ds.iter().filter(|d| d.is_error()).map(|d| d.render(f)).collect();
                return Err(format!("{f}: {}", errs.join("; ")));
            }
        }
        let mut codes = Vec::new();
        for (name, golden) in negative_fixtures() {
            let got = diag_lines(&std::fs::read_to_string(corpus_dir().join("neg").join(&name)).unwrap());
            if got != golden {
                return Err(format!("{name}: got {got:?}, golden {golden:?}"));
            }
            if got.lines().count() != 1 {
                return Err(format!("{name}: expected exactly one diagnostic"));
            }
            codes.push(got.split_whitespace().nth(1).unwrap_or_default().to_string());
        }
        for required in ["E-RET-IN-SEG", "E-FALLTHROUGH", "E-GOTO-NONSEG", "E-SEG-CALL"] {
            if !codes.iter().any(|c| c == required) {
                return Err(format!("no fixture yields {required}"));
            }
        }
        Ok(format!("{} reference programs clean, {} fixtures match goldens", REFERENCE.len(), codes.len()))
    })
}

pub const PARACOPY_CASES: u64 = 10_000;

pub fn paracopy_random() -> Check {
    timed(Duration::from_secs(30), "paracopy", || {
        let mut mismatches = 0;
        let mut perm_checked = 0;
        for seed in 0..PARACOPY_CASES {
            let perm = seed % 4 == 0;
            let ms = random_moveset(&mut rng(seed), perm);
            if !ms.is_well_formed() {
                return Err(format!("seed {seed}: generator produced an ill-formed move set"));
            }
            for plan in [sequentialize(&ms), sequentialize_naive(&ms)] {
                let start = Store::random(&mut rng(seed.wrapping_mul(31) + 7));
                let (mut a, mut b) = (start.clone(), start);
                run_simultaneous(&ms, &mut a);
                run_plan(&plan, &mut b);
                if a.observable() != b.observable() {
                    mismatches += 1;
                }
            }
            if perm {
                let plan = sequentialize(&ms);
                let cycles = independent_cycle_count(&ms);
                if plan.temps_used != cycles {
                    return Err(format!("seed {seed}: temps_used {} but {cycles} cycle(s)", plan.temps_used));
                }
                perm_checked += 1;
            }
        }
        if mismatches > 0 {
            return Err(format!("{mismatches} mismatch(es)"));
        }
        Ok(format!("{PARACOPY_CASES} move sets, 0 mismatches, {perm_checked} permutations match cycle counts"))
    })
}

/// Text of segment `name`'s body, braces excluded.
pub fn segment_body<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let head = format!("__code {name}(");
    let mut from = 0;
    loop {
        let at = from + text[from..].find(&head)?;
        let rest = &text[at..];
        let close = rest.find(')')?;
        let after = rest[close + 1..].trim_start();
        if after.starts_with('{') {
            let open = at + close + 1 + rest[close + 1..].find('{')?;
            let mut depth = 0;
            for (i, c) in text[open..].char_indices() {
                match c {
                    '{' => depth += 1,
                    '}' => {
                        depth -= 1;
                        if depth == 0 {
                            return Some(&text[open + 1..open + i]);
                        }
                    }
                    _ => {}
                }
            }
            return None;
        }
        from = at + head.len();
    }
}

/// Calls to `callees` in each function of `src`, counted on the text.
pub fn call_sites_by_text(src: &str, funcs: &[&str]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in funcs {
        let head = format!("{f}(int");
        let at = src.find(&head).unwrap_or_else(|| panic!("no definition of {f}"));
        let open = at + src[at..].find('{').unwrap();
        let mut depth = 0;
        let mut end = open;
        for (i, c) in src[open..].char_indices() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = open + i;
                        break;
                    }
                }
                _ => {}
            }
        }
        let body = &src[open..end];
        let n = funcs
            .iter()
            .map(|g| {
                body.match_indices(g)
                    .filter(|(i, _)| {
                        let before = body[..*i].chars().last().is_none_or(|c| !c.is_alphanumeric() && c != '_');
                        before && body[i + g.len()..].trim_start().starts_with('(')
                    })
                    .count()
            })
            .sum();
        out.insert(f.to_string(), n);
    }
    out
}

/// Pushes and pops per split point, counted on the text.
pub fn stack_balanced(out: &CpsOutput) -> Check {
    let mut checked = 0;
    let mut pushes_by_seg: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &out.split_points {
        let Some(iface) = &p.interface else { continue };
        *pushes_by_seg.entry(p.caller_segment.as_str()).or_default() += 1;
        let cont = segment_body(&out.text, &p.continuation).ok_or(format!("no segment {}", p.continuation))?;
        let pop = format!("+ sizeof(struct {iface})");
        let pops = cont.matches(&pop).count();
        if pops != 1 {
            return Err(format!("{} pops {iface} {pops} time(s)", p.continuation));
        }
        if cont.matches("- sizeof(").count() > 0 && !out.split_points.iter().any(|q| q.caller_segment == p.continuation) {
            return Err(format!("{} pushes without a call", p.continuation));
        }
        checked += 1;
    }
    for f in &out.functions {
        for seg in &f.segments {
            let body = segment_body(&out.text, seg).ok_or(format!("no segment {seg}"))?;
            let pushes = body.matches("- sizeof(struct").count();
            let expected = pushes_by_seg.get(seg.as_str()).copied().unwrap_or(0);
            if pushes != expected {
                return Err(format!("{seg}: {pushes} push(es) for {expected} split point(s)"));
            }
            let overflow = body.matches("cbc_stack_overflow").count();
            if overflow != pushes {
                return Err(format!("{seg}: {pushes} push(es) but {overflow} overflow check(s)"));
            }
        }
    }
    Ok(format!("{checked} split points balanced"))
}

pub fn cps_structural() -> Check {
    let src = read("conv1.c");
    let out = cps_source(&src, &CpsOptions { roots: vec!["f0".into()], ..CpsOptions::default() })
        .map_err(|d| format!("conversion failed: {}", d.iter().map(|d| d.render("conv1.c")).collect::<Vec<_>>().join("; ")))?;
    let sites = call_sites_by_text(&src, &["f0", "g0", "h0"]);
    for (f, k) in &sites {
        let got = out.function(f).ok_or(format!("{f} not converted"))?;
        if got.segments.len() != 1 + k {
            return Err(format!("{f}: {} segments for {k} call site(s)", got.segments.len()));
        }
        for s in &got.segments {
            if segment_body(&out.text, s).is_none() {
                return Err(format!("segment {s} missing from output"));
            }
        }
    }
    let unit = analyze_source(&out.text).map_err(|d| format!("output not sema-clean: {}", d[0].render("cps")))?;
    let lint = lint_cbc_purity(&unit, true);
    if !lint.is_empty() {
        return Err(format!("strict lint: {}", lint[0].render("cps")));
    }
    let balance = stack_balanced(&out)?;
    let seg_counts: Vec<String> = sites.iter().map(|(f, k)| format!("{f}:{}", 1 + k)).collect();
    Ok(format!("segments {}, sema and strict lint clean, {balance}", seg_counts.join(" ")))
}

/// `CBC_SLOT(T, w)` occurrences: `(T, w)`.
fn slots(c: &str) -> Vec<(String, u64)> {
    let mut out = Vec::new();
    for (i, _) in c.match_indices("CBC_SLOT(") {
        let rest = &c[i + 9..];
        let Some(end) = rest.find(')') else { continue };
        let inner = &rest[..end];
        if let Some((t, w)) = inner.rsplit_once(',') {
            if let Ok(w) = w.trim().parse() {
                out.push((t.trim().to_string(), w));
            }
        }
    }
    out
}

/// Byte size of a C type spelled in emitted code, for LP64 targets.
fn c_size(ty: &str, structs: &BTreeMap<String, (u64, u64)>) -> Option<(u64, u64)> {
    if ty.ends_with('*') || ty == "cbc_segptr" || ty == "long" {
        return Some((8, 8));
    }
    match ty {
        "int" => Some((4, 4)),
        "char" => Some((1, 1)),
        _ => structs.get(ty.strip_prefix("struct ")?).copied(),
    }
}

/// `(size, align)` of each struct defined in emitted C.
fn struct_sizes(c: &str) -> BTreeMap<String, (u64, u64)> {
    let mut out = BTreeMap::new();
    let mut lines = c.lines();
    while let Some(l) = lines.next() {
        let Some(name) = l.strip_prefix("struct ").and_then(|r| r.strip_suffix(" {")) else { continue };
        let (mut size, mut align) = (0u64, 1u64);
        for f in lines.by_ref() {
            let f = f.trim();
            if f.starts_with('}') {
                break;
            }
            let decl = f.trim_end_matches(';');
            let (ty, field) = decl.rsplit_once(' ').unwrap_or((decl, ""));
            let mut ty = ty.to_string();
            let mut count = 1;
            if field.starts_with('*') {
                ty.push('*');
            }
            if let Some(open) = field.find('[') {
                count = field[open + 1..field.len() - 1].parse().unwrap_or(1);
            }
            let (s, a) = c_size(&ty, &out).unwrap_or((8, 8));
            size = size.div_ceil(a) * a + s * count;
            align = align.max(a);
        }
        out.insert(name.to_string(), (size.div_ceil(align) * align, align));
    }
    out
}

/// Checks that no slot written or read in `c` reaches past MaxFrame and
/// that the frame array holds MaxFrame bytes.
pub fn frame_scan(c: &str) -> Result<u64, String> {
    let max: u64 = c
        .lines()
        .find_map(|l| l.strip_prefix("#define CBC_MAXFRAME "))
        .ok_or("no CBC_MAXFRAME")?
        .trim()
        .parse()
        .map_err(|_| "bad CBC_MAXFRAME")?;
    let words: u64 = c
        .lines()
        .find_map(|l| l.strip_prefix("cbc_word cbc_frame[").and_then(|r| r.strip_suffix("];")))
        .ok_or("no frame array")?
        .parse()
        .map_err(|_| "bad frame array")?;
    if words * 8 < max {
        return Err(format!("frame array of {words} words holds less than {max} bytes"));
    }
    let structs = struct_sizes(c);
    for (ty, w) in slots(c) {
        let (size, _) = c_size(&ty, &structs).ok_or(format!("unknown slot type {ty}"))?;
        if w * 8 + size > max {
            return Err(format!("slot {ty} at word {w} ends past MaxFrame {max}"));
        }
    }
    for (i, _) in c.match_indices("cbc_frame[") {
        if c[..i].ends_with("cbc_word ") {
            continue;
        }
        let rest = &c[i + 10..];
        let idx = &rest[..rest.find(']').unwrap_or(0)];
        if let Ok(w) = idx.parse::<u64>() {
            if (w + 1) * 8 > max.max(8) {
                return Err(format!("frame word {w} past MaxFrame {max}"));
            }
        }
    }
    Ok(max)
}

pub fn emission_deterministic() -> Check {
    let mut units = 0;
    for f in positive_files() {
        let src = read(&f);
        for backend in [Backend::Trampoline, Backend::Direct] {
            let cfg = EmitConfig { backend, ..EmitConfig::default() };
            let a = compile_source(&src, &cfg).map_err(|e| format!("{f}: {e}"))?;
            let b = compile_source(&src, &cfg).map_err(|e| format!("{f}: {e}"))?;
            if a.c_source != b.c_source {
                return Err(format!("{f} ({backend:?}): output differs between runs"));
            }
            frame_scan(&a.c_source).map_err(|e| format!("{f} ({backend:?}): {e}"))?;
            units += 1;
        }
    }
    for fuse in [false, true] {
        let opts = CpsOptions { fuse, ..CpsOptions::default() };
        let a = cps_source(&read("conv1.c"), &opts).map_err(|_| "conv1.c does not convert")?;
        let b = cps_source(&read("conv1.c"), &opts).map_err(|_| "conv1.c does not convert")?;
        if a.text != b.text {
            return Err(format!("conversion (fuse={fuse}) differs between runs"));
        }
    }
    Ok(format!("{units} units byte-identical across runs, no slot past MaxFrame"))
}
