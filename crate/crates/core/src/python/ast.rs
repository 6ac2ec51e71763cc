use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Token index, used to order calls by where they appear in the source.
pub type Pos = u32;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Name(String),
    Constant,
    /// f-string; holds the expressions found between braces.
    FString(Vec<Expr>),
    Attribute(Box<Expr>, String),
    Subscript(Box<Expr>, Box<Expr>),
    Slice(Vec<Expr>),
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
        keywords: Vec<Expr>,
        /// Position of the opening parenthesis.
        pos: Pos,
    },
    /// Any operator application; operands are evaluated left to right.
    Op(Vec<Expr>),
    Starred(Box<Expr>),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<Expr>),
    Lambda { params: Vec<Param>, body: Box<Expr> },
    Comprehension { elts: Vec<Expr>, generators: Vec<Generator> },
    NamedExpr(String, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
    pub annotation: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alias {
    /// Dotted module path (`import a.b`) or imported member (`from m import x`).
    pub name: String,
    pub asname: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    pub kind: Option<Expr>,
    pub name: Option<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Expr { value: Expr, suppressed: bool },
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, value: Expr },
    AnnAssign { target: Expr, annotation: Expr, value: Option<Expr> },
    Import(Vec<Alias>),
    ImportFrom { module: String, names: Vec<Alias> },
    FunctionDef {
        name: String,
        decorators: Vec<Expr>,
        params: Vec<Param>,
        returns: Option<Expr>,
        body: Vec<Stmt>,
    },
    ClassDef { name: String, decorators: Vec<Expr>, bases: Vec<Expr>, body: Vec<Stmt> },
    For { target: Expr, iter: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    If { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    With { items: Vec<(Expr, Option<Expr>)>, body: Vec<Stmt> },
    Try { body: Vec<Stmt>, handlers: Vec<Handler>, orelse: Vec<Stmt>, finalbody: Vec<Stmt> },
    Return(Option<Expr>),
    Delete(Vec<Expr>),
    Raise(Vec<Expr>),
    Assert(Vec<Expr>),
    Global(Vec<String>),
    Pass,
    /// A construct outside the supported grammar. Every identifier in it is
    /// reported as a use.
    Opaque(Vec<String>),
}

impl Expr {
    /// `a.b.c` → `Some(["a", "b", "c"])` when the expression is a pure
    /// attribute chain rooted at a name.
    pub fn dotted_path(&self) -> Option<Vec<&str>> {
        match self {
            Expr::Name(n) => Some(alloc::vec![n.as_str()]),
            Expr::Attribute(value, attr) => {
                let mut path = value.dotted_path()?;
                path.push(attr.as_str());
                Some(path)
            }
            _ => None,
        }
    }
}
