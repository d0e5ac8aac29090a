use super::*;
use crate::lower::lower;

fn lowered(src: &str) -> LoweredUnit {
    let toks = crate::lexer::tokenize(src).unwrap();
    let ast = crate::parser::parse(&toks).unwrap();
    lower(crate::sema::analyze(ast).unwrap()).unwrap()
}

const SWAP: &str = "
__code done(int a, int b) { printf(\"%d %d\\n\", a, b); goto done(a, b); }
__code swap(int a, int b) { goto done(b, a); }
";

#[test]
fn c_declarators() {
    let fp = Type::ptr(Type::Function(crate::sema::types::FnType {
        params: Some(vec![Type::Int]),
        ret: Box::new(Type::Int),
        varargs: false,
    }));
    assert_eq!(c_decl(&fp, "f"), "int (*f)(int)");
    assert_eq!(c_decl(&Type::Array(Box::new(Type::ptr(Type::Char)), 3), "v"), "char *v[3]");
    assert_eq!(c_decl(&Type::ptr(Type::Array(Box::new(Type::Int), 4)), "p"), "int (*p)[4]");
    assert_eq!(c_decl(&Type::code_ptr(None), "k"), "cbc_segptr k");
    assert_eq!(c_decl(&Type::ptr(Type::code_ptr(None)), ""), "cbc_segptr *");
}

#[test]
fn swap_uses_one_temp() {
    let lu = lowered(SWAP);
    let text = emit_trampoline(&lu, &EmitConfig::default());
    assert!(text.contains("cbc_word cbc_t0[1];"), "{text}");
    assert!(!text.contains("cbc_t1"), "{text}");
    assert!(text.contains("return cbc_id_done;"));
}

#[test]
fn direct_uses_tailcall() {
    let lu = lowered(SWAP);
    let cfg = EmitConfig { backend: Backend::Direct, ..EmitConfig::default() };
    let text = emit(&lu, &cfg);
    assert!(text.starts_with("/* Generated by cbc. */\n#define CBC_DIRECT 1\n"));
    assert!(text.contains("CBC_TAILCALL(cbc_seg_done());"));
    assert!(!text.contains("cbc_seg_table"));
}

#[test]
fn frame_declaration_matches_maxframe() {
    let lu = lowered(SWAP);
    assert_eq!(lu.frame, 16);
    let text = emit_trampoline(&lu, &EmitConfig::default());
    assert!(text.contains("cbc_word cbc_frame[2];"));
    let empty = lowered("int main() { return 0; }");
    assert_eq!(empty.frame, 0);
    assert_eq!(frame_words(&empty), 1);
}

#[test]
fn capture_prologue() {
    let lu = lowered("int main() { void *e = __environment; return 3; }");
    let f = &lu.functions[0];
    assert!(f.captures_env);
    let pro = emit_env_capture(f);
    assert!(pro.contains("setjmp(cbc_env_self->jb)"));
    let text = emit_trampoline(&lu, &EmitConfig::default());
    assert!(text.contains("return cbc_rt_capture_end(cbc_env_self, 3);"), "{text}");
}
