//! Conversion of restricted C functions into code segments that keep their
//! continuations on an explicit stack.
//!
//! A function `f` with k call sites becomes the entry segment `f_e` and one
//! continuation `f_k<i>` per site. Before a call, `f` pushes a continuation
//! interface holding the return segment and the variables live across the
//! call; `f_k<i>` pops it. A C function named `f` remains as the entry point
//! for plain C callers.

mod normalize;
pub mod roundtrip;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::ast::{ExprKind, FuncDef, Item, TranslationUnit};
use crate::diag::Diagnostic;
use crate::pretty::{print_expr, print_item, print_stmt};
use crate::sema::{Type, TypedUnit};
use crate::span::Span;

use normalize::{idents, live_in, stmt_idents, unsupported, Node, Normalized, Normalizer, VarTable};

/// Interface with an empty saved set.
pub const GENERAL_INTERFACE: &str = "cont_interface";
/// Interface pushed by the C entry point.
pub const MAIN_INTERFACE: &str = "cps_main_interface";

#[derive(Clone, Debug, Default)]
pub struct CpsOptions {
    /// Functions to convert, with everything they call. Empty means every
    /// function except `main`.
    pub roots: Vec<String>,
    /// Pass live values through goto arguments instead of pushing frames
    /// when the callee is not recursive.
    pub fuse: bool,
    /// Test hook: at `(function, site)`, forget the first saved variable.
    pub fault_drop_live: Option<(String, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContInterface {
    pub name: String,
    /// Saved variables after `ret`, as `(field, type)`.
    pub saved: Vec<(String, Type)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPoint {
    /// Function, or specialized copy, containing the call.
    pub function: String,
    pub index: usize,
    pub callee: String,
    pub live: Vec<String>,
    /// `None` when the call was fused.
    pub interface: Option<String>,
    pub caller_segment: String,
    pub continuation: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpsFunction {
    pub name: String,
    pub call_sites: usize,
    /// Entry segment first, then continuations by site.
    pub segments: Vec<String>,
    pub wrapper: bool,
}

#[derive(Clone, Debug)]
pub struct CpsOutput {
    pub unit: TranslationUnit,
    pub text: String,
    pub functions: Vec<CpsFunction>,
    pub interfaces: Vec<ContInterface>,
    pub split_points: Vec<SplitPoint>,
    /// Every generated segment in emission order.
    pub segments: Vec<String>,
}

impl CpsOutput {
    pub fn function(&self, name: &str) -> Option<&CpsFunction> {
        self.functions.iter().find(|f| f.name == name)
    }
}

struct Segment {
    name: String,
    params: Vec<(String, Type)>,
    body: Vec<String>,
}

#[derive(Clone)]
struct Version {
    prefix: String,
    func: String,
    extras: Vec<(String, Type)>,
    /// Fused copies return straight into this segment.
    cont: Option<String>,
}

struct Gen<'a> {
    fns: BTreeMap<String, (FuncDef, Normalized, BTreeSet<String>)>,
    recursive: BTreeSet<String>,
    opts: &'a CpsOptions,
    interfaces: Vec<ContInterface>,
    segments: Vec<Segment>,
    split_points: Vec<SplitPoint>,
    queue: Vec<(Version, Vec<Node>, usize, Option<String>)>,
}

pub fn cps_source(src: &str, opts: &CpsOptions) -> Result<CpsOutput, Vec<Diagnostic>> {
    let unit = crate::driver::analyze_source(src)?;
    cps_transform(&unit, opts)
}

pub fn cps_transform(unit: &TypedUnit, opts: &CpsOptions) -> Result<CpsOutput, Vec<Diagnostic>> {
    let defs: BTreeMap<&str, &FuncDef> = unit
        .ast
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Function(f) => Some((f.name.as_str(), f)),
            _ => None,
        })
        .collect();
    let roots: Vec<String> = if opts.roots.is_empty() {
        defs.keys().filter(|n| **n != "main").map(|n| n.to_string()).collect()
    } else {
        opts.roots.clone()
    };
    for r in &roots {
        if r == "main" || !defs.contains_key(r.as_str()) {
            return Err(vec![unsupported(unit.ast.span, format!("`{r}` is not a convertible function"))]);
        }
    }

    let calls = |f: &FuncDef| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        crate::visit::walk_block_exprs(&f.body, &mut |e| {
            if let ExprKind::Call(c, _) = &e.kind {
                if let ExprKind::Ident(n) = &c.kind {
                    if defs.contains_key(n.as_str()) {
                        out.insert(n.clone());
                    }
                }
            }
        });
        out
    };
    let mut subset: BTreeSet<String> = BTreeSet::new();
    let mut work = roots.clone();
    while let Some(f) = work.pop() {
        if f == "main" {
            return Err(vec![unsupported(defs["main"].span, "converted functions may not call `main`")]);
        }
        if subset.insert(f.clone()) {
            work.extend(calls(defs[f.as_str()]));
        }
    }
    let graph: BTreeMap<String, BTreeSet<String>> = subset.iter().map(|f| (f.clone(), calls(defs[f.as_str()]))).collect();
    let recursive = subset.iter().filter(|f| reaches(&graph, f, f)).cloned().collect();

    let mut top_names: BTreeSet<String> = BTreeSet::new();
    for item in &unit.ast.items {
        match item {
            Item::Function(f) | Item::CodeSegment(f) => top_names.insert(f.name.clone()),
            Item::Prototype(d) | Item::Var(d) | Item::Typedef(d) => top_names.insert(d.name.clone()),
            Item::Struct(s) => top_names.insert(s.name.clone()),
        };
    }

    let mut diags = Vec::new();
    let mut fns = BTreeMap::new();
    for name in &subset {
        let f = defs[name.as_str()];
        let mut taken = top_names.clone();
        crate::visit::walk_block_exprs(&f.body, &mut |e| idents(e, &mut taken));
        for s in &f.body.stmts {
            collect_decl_names(s, &mut taken);
        }
        for p in &f.params {
            taken.extend(p.name.clone());
        }
        match Normalizer::new(unit, &subset, taken.clone()).function(f) {
            Ok(n) => {
                fns.insert(name.clone(), (f.clone(), n, taken));
            }
            Err(d) => diags.push(d),
        }
    }
    if !diags.is_empty() {
        crate::diag::sort(&mut diags);
        return Err(diags);
    }

    let mut gen = Gen { fns, recursive, opts, interfaces: Vec::new(), segments: Vec::new(), split_points: Vec::new(), queue: Vec::new() };
    gen.interfaces.push(ContInterface { name: GENERAL_INTERFACE.to_string(), saved: Vec::new() });

    // Converted functions reachable from plain C keep a C entry point.
    let mut wrapped: BTreeSet<String> = roots.iter().cloned().collect();
    for item in &unit.ast.items {
        let mut seen = BTreeSet::new();
        match item {
            Item::Function(f) if !subset.contains(&f.name) => {
                crate::visit::walk_block_exprs(&f.body, &mut |e| idents(e, &mut seen));
            }
            Item::Var(d) => {
                if let Some(init) = &d.init {
                    idents(init, &mut seen);
                }
            }
            _ => {}
        }
        wrapped.extend(seen.into_iter().filter(|n| subset.contains(n)));
    }

    let mut functions = Vec::new();
    for name in &subset {
        let before = gen.segments.len();
        let v = Version { prefix: name.clone(), func: name.clone(), extras: Vec::new(), cont: None };
        gen.version(&v);
        let call_sites = gen.fns[name].1.call_sites;
        // Fused copies of callees are generated along the way; keep only this
        // function's own segments in its record.
        let own: Vec<String> = gen.segments[before..]
            .iter()
            .map(|s| s.name.clone())
            .filter(|s| *s == format!("{name}_e") || s.strip_prefix(&format!("{name}_k")).is_some_and(|k| k.parse::<usize>().is_ok()))
            .collect();
        functions.push(CpsFunction { name: name.clone(), call_sites, segments: own, wrapper: wrapped.contains(name) });
    }
    for name in &wrapped {
        gen.segments.push(Segment {
            name: format!("{name}_ret"),
            params: vec![("r".into(), Type::Int), ("sp".into(), Type::ptr(Type::Char))],
            body: vec![format!(
                "goto ((({m} *)sp)->main_ret)(r), (({m} *)sp)->env;",
                m = format!("struct {MAIN_INTERFACE}")
            )],
        });
    }

    let mut clashes: Vec<Diagnostic> = gen
        .segments
        .iter()
        .map(|s| &s.name)
        .chain(gen.interfaces.iter().map(|i| &i.name))
        .filter(|n| top_names.contains(*n) || n.starts_with("cbc_"))
        .map(|n| unsupported(unit.ast.span, format!("generated name `{n}` clashes with a name in the unit")))
        .collect();
    if !clashes.is_empty() {
        clashes.dedup_by(|a, b| a.message == b.message);
        return Err(clashes);
    }

    let text = assemble(unit, &gen, &subset, &wrapped);
    let unit_out = crate::lexer::tokenize(&text)
        .ok()
        .and_then(|t| crate::parser::parse(&t).ok())
        .ok_or_else(|| vec![unsupported(Span::default(), "internal: converted unit does not parse")])?;
    Ok(CpsOutput {
        unit: unit_out,
        text,
        functions,
        interfaces: gen.interfaces,
        split_points: gen.split_points,
        segments: gen.segments.iter().map(|s| s.name.clone()).collect(),
    })
}

fn reaches(graph: &BTreeMap<String, BTreeSet<String>>, from: &str, to: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut work: Vec<&str> = graph.get(from).map(|s| s.iter().map(String::as_str).collect()).unwrap_or_default();
    while let Some(n) = work.pop() {
        if n == to {
            return true;
        }
        if seen.insert(n) {
            work.extend(graph.get(n).into_iter().flatten().map(String::as_str));
        }
    }
    false
}

fn collect_decl_names(s: &crate::ast::Stmt, out: &mut BTreeSet<String>) {
    use crate::ast::Stmt;
    match s {
        Stmt::Decl(ds, _) => out.extend(ds.iter().map(|d| d.name.clone())),
        Stmt::If { then, els, .. } => {
            collect_decl_names(then, out);
            if let Some(e) = els {
                collect_decl_names(e, out);
            }
        }
        Stmt::While { body, .. } => collect_decl_names(body, out),
        Stmt::For { init, body, .. } => {
            if let Some(i) = init {
                collect_decl_names(i, out);
            }
            collect_decl_names(body, out);
        }
        Stmt::Block(b) => b.stmts.iter().for_each(|s| collect_decl_names(s, out)),
        _ => {}
    }
}

fn ty_src(ty: &Type, name: &str) -> String {
    crate::emit::c_decl(ty, name)
}

fn fresh_in(taken: &BTreeSet<String>, extra: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) || extra.contains(&name) {
        name.push('_');
    }
    name
}

/// Per-segment state while emitting statements.
struct SegCx<'v> {
    version: &'v Version,
    vars: VarTable,
    at_return: BTreeSet<String>,
    sp: String,
    used: BTreeSet<String>,
}

impl Gen<'_> {
    fn version(&mut self, v: &Version) {
        let (_, n, taken) = &self.fns[&v.func];
        let extra_names: Vec<String> = v.extras.iter().map(|(n, _)| n.clone()).collect();
        let sp = fresh_in(taken, &extra_names, "sp");
        let mut vars = n.vars.clone();
        vars.vars.extend(v.extras.iter().cloned());
        let mut params = n.params.clone();
        params.extend(v.extras.iter().cloned());
        params.push((sp.clone(), Type::ptr(Type::Char)));
        let body = n.body.clone();
        let mut cx = SegCx { version: v, vars, at_return: extra_names.into_iter().collect(), sp, used: BTreeSet::new() };
        let lines = self.seq(&body, &mut cx, 0);
        self.finish_segment(format!("{}_e", v.prefix), params, Vec::new(), lines, &cx);
        while let Some(pos) = self.queue.iter().position(|(q, ..)| q.prefix == v.prefix) {
            let (qv, rest, site, dst) = self.queue.remove(pos);
            self.continuation(&qv, rest, site, dst);
        }
    }

    fn finish_segment(&mut self, name: String, params: Vec<(String, Type)>, pre: Vec<String>, lines: Vec<String>, cx: &SegCx) {
        let declared: BTreeSet<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
        let mut body: Vec<String> = cx
            .vars
            .vars
            .iter()
            .filter(|(n, _)| cx.used.contains(n) && !declared.contains(n.as_str()) && !pre.iter().any(|p| declares(p, n)))
            .map(|(n, t)| format!("{};", ty_src(t, n)))
            .collect();
        let mut all = pre;
        all.append(&mut body);
        all.extend(lines);
        self.segments.push(Segment { name, params, body: all });
    }

    /// Emits `seq` until its first call; the rest is queued as a continuation.
    fn seq(&mut self, seq: &[Node], cx: &mut SegCx, depth: usize) -> Vec<String> {
        let pad = "    ".repeat(depth);
        let mut out = Vec::new();
        for (i, n) in seq.iter().enumerate() {
            match n {
                Node::Simple(s) => {
                    stmt_idents(s, &mut cx.used);
                    let text = print_stmt(s, depth);
                    out.extend(text.lines().map(str::to_string));
                }
                Node::Return(e) => {
                    idents(e, &mut cx.used);
                    let v = print_expr(e);
                    let sp = &cx.sp;
                    match &cx.version.cont {
                        None => out.push(format!("{pad}goto (((struct {GENERAL_INTERFACE} *){sp})->ret)({v}, {sp});")),
                        Some(k) => {
                            let mut args = vec![v];
                            args.extend(cx.version.extras.iter().map(|(n, _)| n.clone()));
                            cx.used.extend(cx.version.extras.iter().map(|(n, _)| n.clone()));
                            args.push(sp.clone());
                            out.push(format!("{pad}goto {k}({});", args.join(", ")));
                        }
                    }
                    return out;
                }
                Node::If { cond, then, els } => {
                    idents(cond, &mut cx.used);
                    out.push(format!("{pad}if ({}) {{", print_expr(cond)));
                    out.extend(self.seq(then, cx, depth + 1));
                    out.push(format!("{pad}}} else {{"));
                    out.extend(self.seq(els, cx, depth + 1));
                    out.push(format!("{pad}}}"));
                    return out;
                }
                Node::Call { dst, callee, args, site, .. } => {
                    for a in args {
                        idents(a, &mut cx.used);
                    }
                    let rest = seq[i + 1..].to_vec();
                    out.extend(self.call(cx, &pad, dst.clone(), callee, args, *site, rest));
                    return out;
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        cx: &mut SegCx,
        pad: &str,
        dst: Option<String>,
        callee: &str,
        args: &[crate::ast::Expr],
        site: usize,
        rest: Vec<Node>,
    ) -> Vec<String> {
        let v = cx.version;
        let mut live = live_in(&rest, &cx.vars, &cx.at_return);
        if let Some(d) = &dst {
            live.remove(d);
        }
        let live = cx.vars.ordered(&live);
        cx.used.extend(live.iter().map(|(n, _)| n.clone()));
        let cont = format!("{}_k{site}", v.prefix);
        let caller_segment = self.current_segment_name(v, site);
        let sp = cx.sp.clone();
        let mut arg_text: Vec<String> = args.iter().map(print_expr).collect();
        let mut out = Vec::new();
        let fuse = self.opts.fuse && !self.recursive.contains(callee);
        let interface = if fuse {
            let taken = &self.fns[callee].2;
            let mut extras = Vec::new();
            let mut names: Vec<String> = Vec::new();
            for (i, (_, t)) in live.iter().enumerate() {
                let n = fresh_in(taken, &names, &format!("fw{i}"));
                names.push(n.clone());
                extras.push((n, t.clone()));
            }
            let prefix = format!("{callee}_for_{cont}");
            arg_text.extend(live.iter().map(|(n, _)| n.clone()));
            arg_text.push(sp.clone());
            out.push(format!("{pad}goto {prefix}_e({});", arg_text.join(", ")));
            let callee_version = Version { prefix, func: callee.to_string(), extras, cont: Some(cont.clone()) };
            self.queue.push((v.clone(), rest, site, dst));
            self.version(&callee_version);
            None
        } else {
            let mut saved: Vec<(String, Type)> = live.iter().map(|(n, t)| (format!("{n}_"), t.clone())).collect();
            if self.opts.fault_drop_live.as_ref().is_some_and(|(f, s)| *f == v.prefix && *s == site) && !saved.is_empty() {
                saved.remove(0);
            }
            let iface = self.intern(&cont, saved.clone());
            let s = format!("((struct {iface} *){sp})");
            out.push(format!("{pad}{sp} = {sp} - sizeof(struct {iface});"));
            out.push(format!("{pad}if ({sp} < cbc_stack_limit) goto cbc_stack_overflow();"));
            out.push(format!("{pad}{s}->ret = {cont};"));
            for (field, _) in &saved {
                out.push(format!("{pad}{s}->{field} = {};", field.trim_end_matches('_')));
            }
            arg_text.push(sp.clone());
            out.push(format!("{pad}goto {callee}_e({});", arg_text.join(", ")));
            self.queue.push((v.clone(), rest, site, dst));
            Some(iface)
        };
        self.split_points.push(SplitPoint {
            function: v.prefix.clone(),
            index: site,
            callee: callee.to_string(),
            live: live.iter().map(|(n, _)| n.clone()).collect(),
            interface,
            caller_segment,
            continuation: cont,
        });
        out
    }

    /// Name of the segment a call at `site` is emitted into: the entry, or
    /// the continuation of the nearest preceding call on the same path.
    fn current_segment_name(&self, v: &Version, site: usize) -> String {
        let (_, n, _) = &self.fns[&v.func];
        fn find(seq: &[Node], site: usize, owner: Option<usize>) -> Option<Option<usize>> {
            let mut owner = owner;
            for node in seq {
                match node {
                    Node::Call { site: s, .. } if *s == site => return Some(owner),
                    Node::Call { site: s, .. } => owner = Some(*s),
                    Node::If { then, els, .. } => {
                        return find(then, site, owner).or_else(|| find(els, site, owner));
                    }
                    _ => {}
                }
            }
            None
        }
        match find(&n.body, site, None).flatten() {
            Some(k) => format!("{}_k{k}", v.prefix),
            None => format!("{}_e", v.prefix),
        }
    }

    fn continuation(&mut self, v: &Version, rest: Vec<Node>, site: usize, dst: Option<String>) {
        let (_, n, taken) = &self.fns[&v.func];
        let extra_names: Vec<String> = v.extras.iter().map(|(n, _)| n.clone()).collect();
        let sp = fresh_in(taken, &extra_names, "sp");
        let r = fresh_in(taken, &extra_names, "r");
        let mut vars = n.vars.clone();
        vars.vars.extend(v.extras.iter().cloned());
        let at_return: BTreeSet<String> = extra_names.iter().cloned().collect();
        let mut live = live_in(&rest, &vars, &at_return);
        if let Some(d) = &dst {
            live.remove(d);
        }
        let live = vars.ordered(&live);
        let fused = self.split_points.iter().any(|p| p.function == v.prefix && p.index == site && p.interface.is_none());
        let mut params = vec![(r.clone(), Type::Int)];
        let mut pre = Vec::new();
        if fused {
            params.extend(live.iter().cloned());
        } else {
            let iface = self
                .split_points
                .iter()
                .find(|p| p.function == v.prefix && p.index == site)
                .and_then(|p| p.interface.clone())
                .unwrap_or_else(|| GENERAL_INTERFACE.to_string());
            let saved = self.interfaces.iter().find(|i| i.name == iface).map(|i| i.saved.clone()).unwrap_or_default();
            let s = format!("((struct {iface} *){sp})");
            for (name, ty) in &live {
                let field = format!("{name}_");
                if saved.iter().any(|(f, _)| *f == field) {
                    pre.push(format!("{} = {s}->{field};", ty_src(ty, name)));
                } else {
                    pre.push(format!("{} = 0;", ty_src(ty, name)));
                }
            }
            pre.push(format!("{sp} = {sp} + sizeof(struct {iface});"));
        }
        params.push((sp.clone(), Type::ptr(Type::Char)));
        let mut cx = SegCx { version: v, vars, at_return, sp, used: BTreeSet::new() };
        let mut lines = Vec::new();
        if let Some(d) = &dst {
            cx.used.insert(d.clone());
            lines.push(format!("{d} = {r};"));
        }
        lines.extend(self.seq(&rest, &mut cx, 0));
        self.finish_segment(format!("{}_k{site}", v.prefix), params, pre, lines, &cx);
    }

    /// Shared interface for `saved`, created on first use.
    fn intern(&mut self, cont: &str, saved: Vec<(String, Type)>) -> String {
        if let Some(i) = self.interfaces.iter().find(|i| i.saved == saved) {
            return i.name.clone();
        }
        let name = format!("{cont}_interface");
        self.interfaces.push(ContInterface { name: name.clone(), saved });
        name
    }
}

fn declares(line: &str, name: &str) -> bool {
    line.split('=').next().is_some_and(|head| head.split_whitespace().last() == Some(name))
}

fn assemble(unit: &TypedUnit, gen: &Gen, subset: &BTreeSet<String>, wrapped: &BTreeSet<String>) -> String {
    let mut out = String::new();
    let mut placed = false;
    let ret_ty = "__code (*ret)(int, char *)";
    for item in &unit.ast.items {
        let converted = matches!(item, Item::Function(f) if subset.contains(&f.name));
        if converted && !placed {
            placed = true;
            for i in &gen.interfaces {
                let _ = writeln!(out, "struct {} {{\n    {ret_ty};", i.name);
                for (f, t) in &i.saved {
                    let _ = writeln!(out, "    {};", ty_src(t, f));
                }
                out.push_str("};\n\n");
            }
            if !wrapped.is_empty() {
                let _ = writeln!(
                    out,
                    "struct {MAIN_INTERFACE} {{\n    {ret_ty};\n    __code (*main_ret)(int);\n    void *env;\n}};\n"
                );
            }
            for s in &gen.segments {
                let _ = writeln!(out, "{};", segment_head(s));
            }
            out.push('\n');
            for s in &gen.segments {
                let _ = writeln!(out, "{} {{", segment_head(s));
                for l in &s.body {
                    let _ = writeln!(out, "    {l}");
                }
                out.push_str("}\n\n");
            }
        }
        match item {
            Item::Function(f) if subset.contains(&f.name) => {
                if wrapped.contains(&f.name) {
                    out.push_str(&wrapper(unit, f));
                    out.push('\n');
                }
            }
            other => {
                out.push_str(&print_item(other));
                out.push('\n');
            }
        }
    }
    out
}

fn segment_head(s: &Segment) -> String {
    let params: Vec<String> = s.params.iter().map(|(n, t)| ty_src(t, n)).collect();
    format!("__code {}({})", s.name, params.join(", "))
}

fn wrapper(unit: &TypedUnit, f: &FuncDef) -> String {
    let info = unit.function(&f.name).expect("converted function has info");
    let names: Vec<String> = info.params.iter().map(|(n, _)| n.clone()).collect();
    let sp = fresh_in(&names.iter().cloned().collect(), &[], "sp");
    let params: Vec<String> = info.params.iter().map(|(n, t)| ty_src(t, n)).collect();
    let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
    let m = format!("((struct {MAIN_INTERFACE} *){sp})");
    let mut args = names.clone();
    args.push(sp.clone());
    format!(
        "int {name}({params}) {{\n    char *{sp} = cbc_stack_top();\n    {sp} = {sp} - sizeof(struct {MAIN_INTERFACE});\n    {m}->ret = {name}_ret;\n    {m}->main_ret = __return;\n    {m}->env = __environment;\n    goto {name}_e({args});\n}}\n",
        name = f.name,
        args = args.join(", ")
    )
}
