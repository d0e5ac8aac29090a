//! Random programs in the convertible C subset, with an evaluator.
//!
//! Functions take `(int x, int y)`. Function `i` calls only functions with a
//! larger index, or itself as `f(x - 1, ..)` under `if (x > 0)`, with a
//! literal first argument whenever the callee recurses. Arithmetic wraps.

use rand::Rng;

#[derive(Clone, Debug)]
pub enum E {
    Lit(i32),
    Var(String),
    Bin(&'static str, Box<E>, Box<E>),
    Call(usize, Vec<E>),
}

#[derive(Clone, Debug)]
pub enum S {
    Decl(String, E),
    Assign(String, E),
    If(&'static str, E, E, Vec<S>, Vec<S>),
    Return(E),
}

#[derive(Clone, Debug)]
pub struct Func {
    pub recursive: bool,
    pub body: Vec<S>,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub funcs: Vec<Func>,
}

pub const MAX_DEPTH: u32 = 4;

struct G<'r, R: Rng> {
    rng: &'r mut R,
    me: usize,
    nfuncs: usize,
    recursive: Vec<bool>,
    vars: Vec<String>,
    locals: Vec<String>,
    calls: usize,
}

impl<R: Rng> G<'_, R> {
    fn expr(&mut self, depth: u32) -> E {
        let roll = self.rng.gen_range(0..10);
        if depth >= MAX_DEPTH || roll < 3 {
            return if self.rng.gen_bool(0.5) {
                E::Lit(self.rng.gen_range(-9..=9))
            } else {
                E::Var(self.vars[self.rng.gen_range(0..self.vars.len())].clone())
            };
        }
        if roll < 5 && self.calls < 3 && self.me + 1 < self.nfuncs {
            self.calls += 1;
            let callee = self.rng.gen_range(self.me + 1..self.nfuncs);
            let first = if self.recursive[callee] { E::Lit(self.rng.gen_range(0..4)) } else { self.expr(depth + 1) };
            return E::Call(callee, vec![first, self.expr(depth + 1)]);
        }
        let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
        E::Bin(op, Box::new(self.expr(depth + 1)), Box::new(self.expr(depth + 1)))
    }

    fn cond(&mut self) -> (&'static str, E, E) {
        let op = ["<", "==", ">", "!=", "<=", ">="][self.rng.gen_range(0..6)];
        (op, self.expr(2), self.expr(2))
    }

    fn branch(&mut self, nest: u32) -> Vec<S> {
        let mut out = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            out.push(self.stmt(nest, false));
        }
        if self.rng.gen_bool(0.4) {
            out.push(S::Return(self.expr(1)));
        }
        out
    }

    fn stmt(&mut self, nest: u32, top: bool) -> S {
        let roll = self.rng.gen_range(0..10);
        if top && roll < 4 {
            let name = format!("v{}", self.locals.len());
            let e = self.expr(0);
            self.locals.push(name.clone());
            self.vars.push(name.clone());
            return S::Decl(name, e);
        }
        if roll < 7 || nest >= 2 {
            if self.locals.is_empty() {
                return S::Assign("y".into(), self.expr(0));
            }
            let t = self.locals[self.rng.gen_range(0..self.locals.len())].clone();
            return S::Assign(t, self.expr(0));
        }
        let (op, a, b) = self.cond();
        let t = self.branch(nest + 1);
        let f = self.branch(nest + 1);
        S::If(op, a, b, t, f)
    }
}

pub fn random_program(rng: &mut impl Rng) -> Program {
    let nfuncs = rng.gen_range(1..=4);
    let recursive: Vec<bool> = (0..nfuncs).map(|_| rng.gen_bool(0.25)).collect();
    let mut funcs = Vec::new();
    for me in 0..nfuncs {
        let mut g = G { rng: &mut *rng, me, nfuncs, recursive: recursive.clone(), vars: vec!["x".into(), "y".into()], locals: Vec::new(), calls: 0 };
        let mut body = Vec::new();
        if recursive[me] {
            let step = g.expr(2);
            let x = || E::Var("x".into());
            let down = E::Bin("-", Box::new(x()), Box::new(E::Lit(1)));
            let rec = E::Bin("+", Box::new(E::Call(me, vec![down, step])), Box::new(E::Var("y".into())));
            body.push(S::If(">", x(), E::Lit(0), vec![S::Return(rec)], vec![]));
        }
        for _ in 0..g.rng.gen_range(1..6) {
            let s = g.stmt(0, true);
            body.push(s);
        }
        body.push(S::Return(g.expr(0)));
        funcs.push(Func { recursive: recursive[me], body });
    }
    Program { funcs }
}

impl Program {
    pub fn name(prefix: &str, i: usize) -> String {
        format!("{prefix}f{i}")
    }

    /// C text with function names `<prefix>f<i>`; callees come first.
    pub fn to_c(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (i, f) in self.funcs.iter().enumerate().rev() {
            out.push_str(&format!("int {}(int x, int y) {{\n", Self::name(prefix, i)));
            for s in &f.body {
                stmt_c(s, prefix, 1, &mut out);
            }
            out.push_str("}\n\n");
        }
        out
    }

    pub fn eval(&self, f: usize, x: i32, y: i32) -> i32 {
        let mut env = vec![("x".to_string(), x), ("y".to_string(), y)];
        self.run(&self.funcs[f].body, &mut env).unwrap_or(0)
    }

    fn run(&self, body: &[S], env: &mut Vec<(String, i32)>) -> Option<i32> {
        for s in body {
            match s {
                S::Decl(n, e) => {
                    let v = self.e(e, env);
                    env.push((n.clone(), v));
                }
                S::Assign(n, e) => {
                    let v = self.e(e, env);
                    env.iter_mut().rev().find(|(k, _)| k == n).unwrap().1 = v;
                }
                S::If(op, a, b, t, f) => {
                    let (a, b) = (self.e(a, env), self.e(b, env));
                    let taken = if cmp(op, a, b) != 0 { t } else { f };
                    if let Some(v) = self.run(taken, env) {
                        return Some(v);
                    }
                }
                S::Return(e) => return Some(self.e(e, env)),
            }
        }
        None
    }

    fn e(&self, e: &E, env: &[(String, i32)]) -> i32 {
        match e {
            E::Lit(v) => *v,
            E::Var(n) => env.iter().rev().find(|(k, _)| k == n).unwrap().1,
            E::Bin(op, a, b) => {
                let (a, b) = (self.e(a, env), self.e(b, env));
                match *op {
                    "+" => a.wrapping_add(b),
                    "-" => a.wrapping_sub(b),
                    "*" => a.wrapping_mul(b),
                    _ => unreachable!(),
                }
            }
            E::Call(f, args) => {
                let x = self.e(&args[0], env);
                let y = self.e(&args[1], env);
                self.eval(*f, x, y)
            }
        }
    }
}

fn cmp(op: &str, a: i32, b: i32) -> i32 {
    let r = match op {
        "<" => a < b,
        "==" => a == b,
        ">" => a > b,
        "!=" => a != b,
        "<=" => a <= b,
        ">=" => a >= b,
        _ => unreachable!(),
    };
    r as i32
}

fn expr_c(e: &E, prefix: &str) -> String {
    match e {
        E::Lit(v) if *v < 0 => format!("({v})"),
        E::Lit(v) => v.to_string(),
        E::Var(n) => n.clone(),
        E::Bin(op, a, b) => format!("({} {op} {})", expr_c(a, prefix), expr_c(b, prefix)),
        E::Call(f, args) => {
            let a: Vec<String> = args.iter().map(|a| expr_c(a, prefix)).collect();
            format!("{}({})", Program::name(prefix, *f), a.join(", "))
        }
    }
}

fn stmt_c(s: &S, prefix: &str, depth: usize, out: &mut String) {
    let pad = "    ".repeat(depth);
    match s {
        S::Decl(n, e) => out.push_str(&format!("{pad}int {n} = {};\n", expr_c(e, prefix))),
        S::Assign(n, e) => out.push_str(&format!("{pad}{n} = {};\n", expr_c(e, prefix))),
        S::Return(e) => out.push_str(&format!("{pad}return {};\n", expr_c(e, prefix))),
        S::If(op, a, b, t, f) => {
            out.push_str(&format!("{pad}if ({} {op} {}) {{\n", expr_c(a, prefix), expr_c(b, prefix)));
            for s in t {
                stmt_c(s, prefix, depth + 1, out);
            }
            out.push_str(&format!("{pad}}} else {{\n"));
            for s in f {
                stmt_c(s, prefix, depth + 1, out);
            }
            out.push_str(&format!("{pad}}}\n"));
        }
    }
}
