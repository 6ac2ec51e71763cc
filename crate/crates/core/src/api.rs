//! Canonical API tokens: fully-qualified call names after import-alias and
//! builtin resolution.
//!
//! Resolution rules, in order, for a call whose callee is an attribute chain
//! `root.a.b` (or a bare `root`):
//!
//! * `root` is an import alias → alias target + rest of the chain
//!   (`pd.read_csv` → `pandas.read_csv`, `f` from `from m import f` → `m.f`);
//! * `root` is a variable bound in the code → `*.b` (untracked receiver), or
//!   `<library>.b` when receiver tracking is on and the variable was assigned
//!   straight from a call into that library; a bare call to a user-defined
//!   name yields no token;
//! * `root` is a builtin → `__builtins__.root.a.b`;
//! * anything else (calls on call results, subscripts, literals) → `*.b`.
//!
//! Tokens are ordered by the position of the call's opening parenthesis.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::builtins::is_builtin;
use crate::python::ast::{Expr, Pos, Stmt};
use crate::python::{parse_module, strip_magics};

pub const BUILTIN_ROOT: &str = "__builtins__";
pub const UNTRACKED_ROOT: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiConfig {
    /// Library roots whose calls are kept. `builtins` keeps `__builtins__.*`.
    /// Method calls on untracked receivers (`*.m`) are always kept.
    pub allowlist: Vec<String>,
    /// One-step receiver provenance: `m = sklearn...(); m.fit()` → `sklearn.fit`.
    pub track_receivers: bool,
}

impl Default for ApiConfig {
    fn default() -> Self {
        let allowlist = ["pandas", "numpy", "scipy", "sklearn", "matplotlib", "seaborn", "keras", "builtins"];
        ApiConfig { allowlist: allowlist.iter().map(|s| s.to_string()).collect(), track_receivers: false }
    }
}

impl ApiConfig {
    pub fn keeps(&self, canonical: &str) -> bool {
        let root = canonical.split('.').next().unwrap_or("");
        match root {
            UNTRACKED_ROOT => true,
            BUILTIN_ROOT => self.allowlist.iter().any(|a| a == "builtins"),
            _ => self.allowlist.iter().any(|a| a == root),
        }
    }
}

/// Name environment threaded through the blocks of a sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportEnv {
    aliases: BTreeMap<String, String>,
    locals: BTreeSet<String>,
    provenance: BTreeMap<String, String>,
}

impl ImportEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_alias(mut self, local: &str, path: &str) -> Self {
        self.add_alias(local, path);
        self
    }

    pub fn add_alias(&mut self, local: &str, path: &str) {
        self.locals.remove(local);
        self.provenance.remove(local);
        self.aliases.insert(local.into(), path.into());
    }

    pub fn alias(&self, local: &str) -> Option<&str> {
        self.aliases.get(local).map(String::as_str)
    }

    fn bind_local(&mut self, name: &str) {
        self.aliases.remove(name);
        self.provenance.remove(name);
        self.locals.insert(name.into());
    }

    /// Applies the imports and bindings of `code` (used to carry the
    /// environment from one block to the next).
    pub fn absorb_source(&mut self, code: &str, config: &ApiConfig) {
        if let Ok(body) = parse_module(&strip_magics(code)) {
            let mut sink = Vec::new();
            Resolver { env: self, config, calls: &mut sink }.stmts(&body);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedCalls {
    pub tokens: Vec<String>,
    pub parse_failed: bool,
}

/// Canonical, allowlist-filtered API tokens of one block in call order.
/// The block's own imports and bindings are applied as they occur; `env` is
/// left untouched.
pub fn extract_api_calls(block: &str, env: &ImportEnv, config: &ApiConfig) -> ExtractedCalls {
    let mut env = env.clone();
    extract_and_absorb(block, &mut env, config)
}

/// Like [`extract_api_calls`] but leaves the block's bindings in `env`.
pub fn extract_and_absorb(block: &str, env: &mut ImportEnv, config: &ApiConfig) -> ExtractedCalls {
    let all = resolve_calls(block, env, config);
    ExtractedCalls {
        tokens: all.tokens.into_iter().filter(|t| config.keeps(t)).collect(),
        parse_failed: all.parse_failed,
    }
}

/// Canonical names of every resolvable call, before allowlist filtering.
pub fn resolve_calls(block: &str, env: &mut ImportEnv, config: &ApiConfig) -> ExtractedCalls {
    let Ok(body) = parse_module(&strip_magics(block)) else {
        return ExtractedCalls { tokens: Vec::new(), parse_failed: true };
    };
    let mut calls = Vec::new();
    Resolver { env, config, calls: &mut calls }.stmts(&body);
    calls.sort_by_key(|(pos, _)| *pos);
    ExtractedCalls { tokens: calls.into_iter().map(|(_, t)| t).collect(), parse_failed: false }
}

struct Resolver<'a> {
    env: &'a mut ImportEnv,
    config: &'a ApiConfig,
    calls: &'a mut Vec<(Pos, String)>,
}

impl Resolver<'_> {
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
                let origin = self.library_of(value);
                for t in targets {
                    self.target(t);
                    if let (Expr::Name(n), Some(lib)) = (t, &origin) {
                        if self.config.track_receivers {
                            self.env.provenance.insert(n.clone(), lib.clone());
                        }
                    }
                }
            }
            Stmt::AugAssign { target, value } => {
                self.expr(value);
                self.expr(target);
            }
            Stmt::AnnAssign { target, annotation, value } => {
                self.expr(annotation);
                if let Some(v) = value {
                    self.expr(v);
                    self.target(target);
                }
            }
            Stmt::Import(aliases) => {
                for a in aliases {
                    match &a.asname {
                        Some(local) => self.env.add_alias(local, &a.name),
                        None => {
                            let root = a.name.split('.').next().unwrap_or("");
                            self.env.add_alias(root, root);
                        }
                    }
                }
            }
            Stmt::ImportFrom { module, names } => {
                for a in names.iter().filter(|a| a.name != "*") {
                    let local = a.asname.as_deref().unwrap_or(&a.name);
                    let path = alloc::format!("{module}.{}", a.name);
                    self.env.add_alias(local, &path);
                }
            }
            Stmt::FunctionDef { name, decorators, params, returns, body } => {
                for d in decorators {
                    self.expr(d);
                }
                for p in params {
                    if let Some(d) = &p.default {
                        self.expr(d);
                    }
                    if let Some(a) = &p.annotation {
                        self.expr(a);
                    }
                }
                if let Some(r) = returns {
                    self.expr(r);
                }
                self.env.bind_local(name);
                self.stmts(body);
            }
            Stmt::ClassDef { name, decorators, bases, body } => {
                for e in decorators.iter().chain(bases) {
                    self.expr(e);
                }
                self.env.bind_local(name);
                self.stmts(body);
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
                        self.env.bind_local(n);
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
            Stmt::Global(_) | Stmt::Pass | Stmt::Opaque(_) => {}
        }
    }

    fn target(&mut self, t: &Expr) {
        match t {
            Expr::Name(n) => self.env.bind_local(n),
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
            Expr::Name(_) | Expr::Constant => {}
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
            Expr::Call { func, args, keywords, pos } => {
                if let Some(token) = self.canonical(func) {
                    self.calls.push((*pos, token));
                }
                // Receivers like `pd.read_csv(p).head()` contain calls too.
                match &**func {
                    Expr::Attribute(value, _) => self.expr(value),
                    Expr::Name(_) => {}
                    other => self.expr(other),
                }
                for a in args.iter().chain(keywords) {
                    self.expr(a);
                }
            }
            Expr::Lambda { params, body } => {
                for p in params {
                    if let Some(d) = &p.default {
                        self.expr(d);
                    }
                }
                self.expr(body);
            }
            Expr::Comprehension { elts, generators } => {
                for g in generators {
                    self.expr(&g.iter);
                    for c in &g.ifs {
                        self.expr(c);
                    }
                }
                for e in elts {
                    self.expr(e);
                }
            }
            Expr::NamedExpr(name, value) => {
                self.expr(value);
                self.env.bind_local(name);
            }
        }
    }

    fn canonical(&self, func: &Expr) -> Option<String> {
        let Some(path) = func.dotted_path() else {
            return match func {
                Expr::Attribute(_, attr) => Some(alloc::format!("{UNTRACKED_ROOT}.{attr}")),
                _ => None,
            };
        };
        let (root, rest) = path.split_first()?;
        let last = path.last()?;
        if let Some(target) = self.env.aliases.get(*root) {
            let mut out = target.clone();
            for seg in rest {
                out.push('.');
                out.push_str(seg);
            }
            return Some(out);
        }
        if self.env.locals.contains(*root) {
            if rest.is_empty() {
                return None;
            }
            if let Some(lib) = self.env.provenance.get(*root) {
                return Some(alloc::format!("{lib}.{last}"));
            }
            return Some(alloc::format!("{UNTRACKED_ROOT}.{last}"));
        }
        if is_builtin(root) {
            return Some(alloc::format!("{BUILTIN_ROOT}.{}", path.join(".")));
        }
        if rest.is_empty() {
            None
        } else {
            Some(alloc::format!("{UNTRACKED_ROOT}.{last}"))
        }
    }

    /// Library root of a direct call into an allowlisted, imported library.
    /// Only one step: a call on a tracked receiver does not propagate.
    fn library_of(&self, value: &Expr) -> Option<String> {
        let Expr::Call { func, .. } = value else { return None };
        let root = *func.dotted_path()?.first()?;
        if !self.env.aliases.contains_key(root) {
            return None;
        }
        let token = self.canonical(func)?;
        let root = token.split('.').next()?;
        (root != UNTRACKED_ROOT && root != BUILTIN_ROOT && self.config.keeps(&token)).then(|| root.into())
    }
}

/// Glob match with `*` as the only wildcard.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(src: &str) -> Vec<String> {
        extract_api_calls(src, &ImportEnv::new(), &ApiConfig::default()).tokens
    }

    #[test]
    fn alias_resolution() {
        assert_eq!(tokens("import pandas as pd\npd.read_csv('a')"), ["pandas.read_csv"]);
        let env = ImportEnv::new().with_alias("pd", "pandas");
        assert_eq!(extract_api_calls("pd.read_csv('a')", &env, &ApiConfig::default()).tokens, ["pandas.read_csv"]);
    }

    #[test]
    fn builtins_are_expanded() {
        assert_eq!(tokens("len(xs)"), ["__builtins__.len"]);
    }

    #[test]
    fn untracked_receiver_by_default() {
        assert_eq!(
            tokens("from sklearn.linear_model import LogisticRegression\nm = LogisticRegression(); m.fit(X, y)"),
            ["sklearn.linear_model.LogisticRegression", "*.fit"]
        );
    }

    #[test]
    fn tracked_receiver_inherits_library_root() {
        let config = ApiConfig { track_receivers: true, ..ApiConfig::default() };
        let src = "import pandas as pd\ndf = pd.read_csv('a')\ndf.head()\ndf = df.dropna()\ndf.head()";
        let got = extract_api_calls(src, &ImportEnv::new(), &config).tokens;
        assert_eq!(got, ["pandas.read_csv", "pandas.head", "pandas.dropna", "*.head"]);
    }

    #[test]
    fn calls_ordered_by_opening_paren() {
        assert_eq!(tokens("print(len(x))"), ["__builtins__.print", "__builtins__.len"]);
        assert_eq!(
            tokens("import pandas as pd\npd.read_csv('a').head()"),
            ["pandas.read_csv", "*.head"]
        );
    }

    #[test]
    fn unlisted_libraries_and_user_functions_are_dropped() {
        assert_eq!(tokens("import os\nos.listdir('.')"), Vec::<String>::new());
        assert_eq!(tokens("def helper():\n    pass\nhelper()"), Vec::<String>::new());
    }

    #[test]
    fn parse_failure_yields_no_tokens() {
        let got = extract_api_calls("print(", &ImportEnv::new(), &ApiConfig::default());
        assert!(got.parse_failed && got.tokens.is_empty());
    }

    #[test]
    fn glob() {
        assert!(glob_match("*.show", "matplotlib.pyplot.show"));
        assert!(glob_match("seaborn.*plot", "seaborn.countplot"));
        assert!(!glob_match("seaborn.*plot", "seaborn.set"));
        assert!(glob_match("__builtins__.print", "__builtins__.print"));
        assert!(!glob_match("*.plot", "*.plotly"));
    }
}
