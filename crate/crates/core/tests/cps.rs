mod common;

use cbc_core::cps::roundtrip::{roundtrip, run_unit, with_driver, Sample};
use cbc_core::cps::{cps_source, CpsOptions, GENERAL_INTERFACE};
use cbc_core::diag::Code;
use cbc_core::driver::analyze_source;
use cbc_core::sema::lint::lint_cbc_purity;
use common::cc::scratch;
use common::checks::{read, segment_body, stack_balanced};
use common::progs::{random_program, Program};
use rand::{Rng, SeedableRng};

fn convert(src: &str, opts: &CpsOptions) -> cbc_core::cps::CpsOutput {
    cps_source(src, opts).unwrap_or_else(|d| panic!("{}", d.iter().map(|d| d.render("t")).collect::<Vec<_>>().join("\n")))
}

fn roots(r: &[&str]) -> CpsOptions {
    CpsOptions { roots: r.iter().map(|s| s.to_string()).collect(), ..CpsOptions::default() }
}

#[test]
fn straight_conversion_of_conv1() {
    let out = convert(&read("conv1.c"), &roots(&["f0"]));
    assert_eq!(out.function("f0").unwrap().segments, ["f0_e", "f0_k0"]);
    assert_eq!(out.function("g0").unwrap().segments, ["g0_e", "g0_k0"]);
    assert_eq!(out.function("h0").unwrap().segments, ["h0_e"]);
    let f0 = &out.split_points[0];
    assert_eq!((f0.function.as_str(), f0.callee.as_str()), ("f0", "g0"));
    assert_eq!(f0.live, ["k"]);
    let g0 = &out.split_points[1];
    assert_eq!(g0.live, ["i"]);
    assert!(out.function("f0").unwrap().wrapper);
    assert!(!out.function("g0").unwrap().wrapper);
    stack_balanced(&out).unwrap();
}

#[test]
fn fused_conversion_pushes_nothing_on_the_f0_path() {
    let out = convert(&read("conv1.c"), &CpsOptions { fuse: true, ..roots(&["f0"]) });
    let fused: Vec<_> = out.split_points.iter().filter(|p| p.function.starts_with("f0") || p.function.contains("_for_f0")).collect();
    assert!(!fused.is_empty());
    assert!(fused.iter().all(|p| p.interface.is_none()));
    for p in &fused {
        let body = segment_body(&out.text, &p.caller_segment).unwrap();
        assert!(!body.contains("sizeof"), "{} still pushes", p.caller_segment);
    }
    let unit = analyze_source(&out.text).unwrap();
    assert!(lint_cbc_purity(&unit, true).is_empty());
}

#[test]
fn recursion_keeps_the_stack_under_fusion() {
    let src = "int fib(int n) { if (n < 2) return n; return fib(n - 1) + fib(n - 2); }\n";
    let out = convert(src, &CpsOptions { fuse: true, ..CpsOptions::default() });
    assert_eq!(out.function("fib").unwrap().segments.len(), 3);
    assert!(out.split_points.iter().all(|p| p.interface.is_some()));
    stack_balanced(&out).unwrap();
}

#[test]
fn equal_saved_sets_share_an_interface() {
    let src = "int g(int a) { return a + 1; }\nint f(int a) { int b = g(a); int c = g(b); return b + c + a; }\nint h(int x) { return g(x) + g(x); }\n";
    let out = convert(src, &CpsOptions::default());
    let names: Vec<&str> = out.interfaces.iter().map(|i| i.name.as_str()).collect();
    assert_eq!(names[0], GENERAL_INTERFACE);
    let mut seen = names.clone();
    seen.dedup();
    assert_eq!(seen.len(), names.len());
    let sets: Vec<_> = out.interfaces.iter().map(|i| &i.saved).collect();
    for (i, a) in sets.iter().enumerate() {
        assert!(!sets[i + 1..].contains(a), "duplicate saved set {a:?}");
    }
    stack_balanced(&out).unwrap();
}

#[test]
fn unsupported_shapes_are_rejected() {
    let cases = [
        "char *f(int a) { return 0; }",
        "int f(int a, ...) { return a; }",
        "int f(char *p) { return 0; }",
        "int g(int a) { return a; }\nint f(int a) { while (a) { a = g(a); } return a; }",
        "int g(int a) { return a; }\nint f(int a) { return a && g(a); }",
        "int g(int a) { return a; }\nint f(int a) { int b; b = g(a++); return b; }",
        "int f(int a) { int *p = &a; return a; }",
        "int f(int a) { return printf(\"x\"); }",
        "__code s(int a) { goto s(a); }\nint f(int a) { goto s(a); }",
        "int f(int a) { int b = 1; { int b = 2; } return a; }",
        "int f_e; int f(int a) { return a; }",
        "int (*fp)(int); int f(int a) { return fp(a); }",
    ];
    for src in cases {
        match cps_source(src, &roots(&["f"])) {
            Ok(out) => panic!("accepted:\n{src}\n---\n{}", out.text),
            Err(ds) => assert!(ds.iter().any(|d| d.code == Code::CpsUnsupported), "{src}: {:?}", ds),
        }
    }
}

#[test]
fn main_cannot_be_a_root() {
    let err = cps_source("int main(void) { return 0; }", &roots(&["main"])).unwrap_err();
    assert_eq!(err[0].code, Code::CpsUnsupported);
}

#[test]
fn output_is_deterministic() {
    let a = convert(&read("conv1.c"), &CpsOptions::default());
    let b = convert(&read("conv1.c"), &CpsOptions::default());
    assert_eq!(a.text, b.text);
}

fn conv1_samples() -> Vec<Sample> {
    [233, 0, -5, 1000].iter().map(|&i| ("f0".to_string(), vec![i])).collect()
}

#[test]
fn conv1_round_trips_through_cc() {
    let Some(s) = scratch() else { return };
    for fuse in [false, true] {
        let r = roundtrip(&s.wd, &format!("conv1_{fuse}"), &read("conv1.c"), &CpsOptions { fuse, ..roots(&["f0"]) }, &conv1_samples(), &["-O1"]).unwrap();
        assert!(r.agrees(), "fuse={fuse}: {r:?}");
        assert!(r.after.starts_with("720\n"));
    }
}

#[test]
fn dropping_a_live_variable_is_caught() {
    let Some(s) = scratch() else { return };
    let opts = CpsOptions { fault_drop_live: Some(("f0".into(), 0)), ..roots(&["f0"]) };
    let r = roundtrip(&s.wd, "conv1_fault", &read("conv1.c"), &opts, &conv1_samples(), &["-O1"]).unwrap();
    assert!(!r.agrees(), "fault went unnoticed: {r:?}");
    // k = 236 is lost, so only 4 + j remains.
    assert!(r.after.starts_with("484\n"), "{}", r.after);
}

const PROGRAMS: usize = 1000;
const PER_UNIT: usize = 50;

/// Converts batches of random programs and compares every sample against
/// the evaluator. Batches build concurrently.
#[test]
fn random_programs_match_the_evaluator() {
    let Some(s) = scratch() else { return };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0C0);
    let mut jobs = Vec::new();
    for batch in 0..PROGRAMS / PER_UNIT {
        let mut src = String::new();
        let mut samples: Vec<Sample> = Vec::new();
        let mut expected = String::new();
        for p in 0..PER_UNIT {
            let prog: Program = random_program(&mut rng);
            let prefix = format!("p{p}_");
            src.push_str(&prog.to_c(&prefix));
            for _ in 0..3 {
                let (x, y) = (rng.gen_range(0..6), rng.gen_range(-50..50));
                samples.push((Program::name(&prefix, 0), vec![x as i64, y as i64]));
                expected.push_str(&format!("{}\n", prog.eval(0, x, y)));
            }
        }
        let fuse = batch % 2 == 1;
        let out = cps_source(&src, &CpsOptions { fuse, ..CpsOptions::default() })
            .unwrap_or_else(|d| panic!("batch {batch}: {}\n{src}", d[0].render("gen")));
        let mut sites = 0;
        for f in &out.functions {
            assert_eq!(f.segments.len(), 1 + f.call_sites, "{}", f.name);
            sites += f.call_sites;
        }
        assert!(sites > 0);
        if !fuse {
            stack_balanced(&out).unwrap_or_else(|e| panic!("batch {batch}: {e}"));
        }
        let unit = analyze_source(&out.text).unwrap_or_else(|d| panic!("batch {batch}: {}", d[0].render("cps")));
        assert!(lint_cbc_purity(&unit, true).is_empty(), "batch {batch}");
        jobs.push((batch, fuse, with_driver(&out.unit, &samples), expected));
    }
    let checked: usize = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(batch, fuse, src, expected)| {
                let wd = &s.wd;
                scope.spawn(move || {
                    let got = run_unit(wd, &format!("rand{batch}"), src, &["-O0", "-fwrapv"]).unwrap();
                    assert_eq!(&got, expected, "batch {batch} (fuse={fuse}) disagrees with the evaluator");
                    PER_UNIT
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    assert_eq!(checked, PROGRAMS);
}
