//! Per-cell definition/use analysis.
//!
//! `defined` holds every name bound at the cell's module scope. `used` holds
//! the upward-exposed names: read at module scope before the cell itself
//! binds them, plus the free names of function and lambda bodies that the
//! cell never binds at module scope (bodies may run later, so they resolve
//! against the cell's final bindings).

use alloc::collections::BTreeSet;
use alloc::string::String;

use crate::python::ast::{Expr, Param, Stmt};
use crate::python::{parse_module, strip_magics};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefUse {
    pub defined: BTreeSet<String>,
    pub used: BTreeSet<String>,
    /// The cell did not tokenize; both sets are empty.
    pub parse_failed: bool,
}

/// Analyzes one cell's source text (magics are stripped first).
pub fn defs_uses(cell_source: &str) -> DefUse {
    let src = strip_magics(cell_source);
    match parse_module(&src) {
        Ok(body) => defs_uses_of(&body),
        Err(_) => DefUse { parse_failed: true, ..DefUse::default() },
    }
}

/// Analyzes an already parsed module body.
pub fn defs_uses_of(body: &[Stmt]) -> DefUse {
    let mut w = Walker::new(Mode::Module);
    w.stmts(body);
    let mut used = w.reads;
    for name in w.deferred {
        if !w.binds.contains(&name) {
            used.insert(name);
        }
    }
    DefUse { defined: w.binds, used, parse_failed: false }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Flow-sensitive: a read counts only if nothing bound the name earlier.
    Module,
    /// Class bodies run immediately but their bindings stay in the class.
    Class,
    /// Flow-insensitive: every read is recorded and locals are subtracted at
    /// the end.
    Function,
}

struct Walker {
    mode: Mode,
    bound: BTreeSet<String>,
    binds: BTreeSet<String>,
    reads: BTreeSet<String>,
    deferred: BTreeSet<String>,
    globals: BTreeSet<String>,
}

impl Walker {
    fn new(mode: Mode) -> Self {
        Walker {
            mode,
            bound: BTreeSet::new(),
            binds: BTreeSet::new(),
            reads: BTreeSet::new(),
            deferred: BTreeSet::new(),
            globals: BTreeSet::new(),
        }
    }

    fn read(&mut self, name: &str) {
        if self.mode == Mode::Function || !self.bound.contains(name) {
            self.reads.insert(name.into());
        }
    }

    fn bind(&mut self, name: &str) {
        self.bound.insert(name.into());
        self.binds.insert(name.into());
    }

    /// Free names of a nested function body are deferred at module and class
    /// scope and folded into the reads of an enclosing function.
    fn absorb_nested(&mut self, free: BTreeSet<String>) {
        match self.mode {
            Mode::Function => self.reads.extend(free),
            Mode::Module | Mode::Class => self.deferred.extend(free),
        }
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Expr { value, .. } => self.expr(value),
            Stmt::Assign { targets, value } => {
                self.expr(value);
                for t in targets {
                    self.target(t);
                }
            }
            Stmt::AugAssign { target, value } => {
                self.expr(value);
                match target {
                    Expr::Name(n) => {
                        self.read(n);
                        self.bind(n);
                    }
                    other => self.expr(other),
                }
            }
            Stmt::AnnAssign { target, annotation, value } => {
                self.expr(annotation);
                if let Some(v) = value {
                    self.expr(v);
                    self.target(target);
                } else if !matches!(target, Expr::Name(_)) {
                    self.expr(target);
                }
            }
            Stmt::Import(aliases) => {
                for a in aliases {
                    let name = a.asname.as_deref().unwrap_or_else(|| a.name.split('.').next().unwrap_or(""));
                    self.bind(name);
                }
            }
            Stmt::ImportFrom { names, .. } => {
                for a in names.iter().filter(|a| a.name != "*") {
                    self.bind(a.asname.as_deref().unwrap_or(&a.name));
                }
            }
            Stmt::FunctionDef { name, decorators, params, returns, body } => {
                for d in decorators {
                    self.expr(d);
                }
                self.param_defaults(params);
                for p in params {
                    if let Some(a) = &p.annotation {
                        self.expr(a);
                    }
                }
                if let Some(r) = returns {
                    self.expr(r);
                }
                self.bind(name);
                let free = function_free_names(params, body);
                self.absorb_nested(free);
            }
            Stmt::ClassDef { name, decorators, bases, body } => {
                for e in decorators.iter().chain(bases) {
                    self.expr(e);
                }
                let mut inner = Walker::new(Mode::Class);
                inner.stmts(body);
                for r in &inner.reads {
                    self.read(r);
                }
                match self.mode {
                    Mode::Function => self.reads.extend(inner.deferred),
                    _ => self.deferred.extend(inner.deferred),
                }
                self.bind(name);
            }
            Stmt::For { target, iter, body, orelse } => {
                self.expr(iter);
                self.target(target);
                self.stmts(body);
                self.stmts(orelse);
            }
            Stmt::While { test, body, orelse } | Stmt::If { test, body, orelse } => {
                self.expr(test);
                self.stmts(body);
                self.stmts(orelse);
            }
            Stmt::With { items, body } => {
                for (ctx, target) in items {
                    self.expr(ctx);
                    if let Some(t) = target {
                        self.target(t);
                    }
                }
                self.stmts(body);
            }
            Stmt::Try { body, handlers, orelse, finalbody } => {
                self.stmts(body);
                for h in handlers {
                    if let Some(k) = &h.kind {
                        self.expr(k);
                    }
                    if let Some(n) = &h.name {
                        self.bind(n);
                    }
                    self.stmts(&h.body);
                }
                self.stmts(orelse);
                self.stmts(finalbody);
            }
            Stmt::Return(value) => {
                if let Some(v) = value {
                    self.expr(v);
                }
            }
            Stmt::Delete(exprs) | Stmt::Raise(exprs) | Stmt::Assert(exprs) => {
                for e in exprs {
                    self.expr(e);
                }
            }
            Stmt::Global(names) => {
                if self.mode == Mode::Function {
                    self.globals.extend(names.iter().cloned());
                }
            }
            Stmt::Pass => {}
            Stmt::Opaque(names) => {
                for n in names {
                    self.read(n);
                }
            }
        }
    }

    fn param_defaults(&mut self, params: &[Param]) {
        for p in params {
            if let Some(d) = &p.default {
                self.expr(d);
            }
        }
    }

    /// Binding position. Attribute and subscript targets mutate an existing
    /// object, so they read rather than bind.
    fn target(&mut self, t: &Expr) {
        match t {
            Expr::Name(n) => self.bind(n),
            Expr::Tuple(items) | Expr::List(items) => {
                for i in items {
                    self.target(i);
                }
            }
            Expr::Starred(inner) => self.target(inner),
            other => self.expr(other),
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Name(n) => self.read(n),
            Expr::Constant => {}
            Expr::FString(items)
            | Expr::Slice(items)
            | Expr::Op(items)
            | Expr::Tuple(items)
            | Expr::List(items)
            | Expr::Set(items)
            | Expr::Dict(items) => {
                for i in items {
                    self.expr(i);
                }
            }
            Expr::Attribute(value, _) | Expr::Starred(value) => self.expr(value),
            Expr::Subscript(value, index) => {
                self.expr(value);
                self.expr(index);
            }
            Expr::Call { func, args, keywords, .. } => {
                self.expr(func);
                for a in args.iter().chain(keywords) {
                    self.expr(a);
                }
            }
            Expr::Lambda { params, body } => {
                self.param_defaults(params);
                let body = [Stmt::Return(Some((**body).clone()))];
                let free = function_free_names(params, &body);
                self.absorb_nested(free);
            }
            Expr::Comprehension { elts, generators } => {
                // The first iterable is evaluated in the enclosing scope; the
                // rest runs in the comprehension's own scope, immediately.
                let Some(first) = generators.first() else { return };
                self.expr(&first.iter);
                let mut inner = Walker::new(Mode::Function);
                for (i, g) in generators.iter().enumerate() {
                    if i > 0 {
                        inner.expr(&g.iter);
                    }
                    inner.target(&g.target);
                    for c in &g.ifs {
                        inner.expr(c);
                    }
                }
                for e in elts {
                    inner.expr(e);
                }
                let locals = inner.binds;
                for r in inner.reads.iter().filter(|r| !locals.contains(*r)) {
                    self.read(r);
                }
                let nested: BTreeSet<String> = inner.deferred.into_iter().filter(|r| !locals.contains(r)).collect();
                self.absorb_nested(nested);
            }
            Expr::NamedExpr(name, value) => {
                self.expr(value);
                self.bind(name);
            }
        }
    }
}

/// Names a function body reads that are not local to it.
fn function_free_names(params: &[Param], body: &[Stmt]) -> BTreeSet<String> {
    let mut w = Walker::new(Mode::Function);
    for p in params {
        w.bind(&p.name);
    }
    w.stmts(body);
    let Walker { binds, reads, globals, .. } = w;
    reads
        .into_iter()
        .filter(|r| globals.contains(r) || !binds.contains(r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn check(src: &str, defined: &[&str], used: &[&str]) {
        let du = defs_uses(src);
        assert!(!du.parse_failed, "{src}");
        assert_eq!(du.defined, set(defined), "defined of {src:?}");
        assert_eq!(du.used, set(used), "used of {src:?}");
    }

    #[test]
    fn literal_assignment() {
        check("x = 1", &["x"], &[]);
    }

    #[test]
    fn calls_and_free_names() {
        check("y = x + f(z)", &["y"], &["x", "f", "z"]);
    }

    #[test]
    fn parameters_are_not_free() {
        check("def g(a):\n    return a + b", &["g"], &["b"]);
    }

    #[test]
    fn use_after_local_definition_is_not_exposed() {
        check("x = 1\nprint(x)", &["x"], &["print"]);
        check("x = x + 1", &["x"], &["x"]);
        check("x += 1", &["x"], &["x"]);
    }

    #[test]
    fn imports_bind_roots_and_aliases() {
        check(
            "import pandas as pd\nimport os.path\nfrom sklearn.svm import SVC as S, LinearSVC",
            &["pd", "os", "S", "LinearSVC"],
            &[],
        );
        check("from m import *", &[], &[]);
    }

    #[test]
    fn attribute_chains_use_only_roots() {
        check("df.a.b = np.zeros(3)", &[], &["df", "np"]);
        check("df['c'] = df['a'] * 2", &[], &["df"]);
        check("plt.plot(x.values)", &[], &["plt", "x"]);
    }

    #[test]
    fn loops_and_comprehensions() {
        check("for i, row in df.iterrows():\n    total = total + i", &["i", "row", "total"], &["df", "total"]);
        check("ys = [f(v) for v in xs if v > k]", &["ys"], &["f", "xs", "k"]);
        check("d = {k: v for k, v in items}", &["d"], &["items"]);
    }

    #[test]
    fn function_bodies_resolve_against_whole_cell() {
        check("def f():\n    return helper()\ndef helper():\n    return 1", &["f", "helper"], &[]);
        check("def f():\n    global counter\n    counter = counter + 1", &["f"], &["counter"]);
        check("def f(x):\n    y = x\n    return y + z", &["f"], &["z"]);
    }

    #[test]
    fn lambdas_and_defaults() {
        check("key = lambda r: r[col]", &["key"], &["col"]);
        check("def f(a=default):\n    pass", &["f"], &["default"]);
    }

    #[test]
    fn class_bodies() {
        check(
            "class M(Base):\n    size = n\n    def fit(self):\n        return size + other",
            &["M"],
            &["Base", "n", "size", "other"],
        );
    }

    #[test]
    fn keyword_argument_names_are_not_uses() {
        check("m = Model(alpha=a)", &["m"], &["Model", "a"]);
    }

    #[test]
    fn with_try_and_walrus() {
        check("with open(p) as fh:\n    data = fh.read()", &["fh", "data"], &["open", "p"]);
        check(
            "try:\n    import xgboost\nexcept ImportError as e:\n    print(e)",
            &["xgboost", "e"],
            &["ImportError", "print"],
        );
        check("if (n := len(a)) > 3:\n    print(n)", &["n"], &["len", "a", "print"]);
    }

    #[test]
    fn magics_contribute_nothing() {
        check("%matplotlib inline\n!pip install x\nx = 1", &["x"], &[]);
    }

    #[test]
    fn parse_failure_is_opaque() {
        let du = defs_uses("x = (1,");
        assert!(du.parse_failed);
        assert!(du.defined.is_empty() && du.used.is_empty());
    }

    #[test]
    fn unsupported_statement_uses_every_identifier() {
        check("match cmd:\n    case Point(x=0):\n        go(x)", &[], &["cmd", "Point", "x", "go"]);
    }

    #[test]
    fn defined_never_contains_keywords() {
        let du = defs_uses("if True:\n    None\nfor x in y: pass");
        assert!(du.defined.iter().all(|n| !crate::python::is_keyword(n)));
    }
}
