//! Backward def-use slicing of notebooks into EDA sequences.
//!
//! A sink is a cell that shows output. Its sequence is the least set of cells
//! closed under "for every name a member uses, the nearest preceding cell
//! that defines it is a member". Cells are kept whole.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::api::{glob_match, resolve_calls, ApiConfig, ImportEnv};
use crate::builtins::is_builtin;
use crate::defuse::{defs_uses_of, DefUse};
use crate::notebook::Notebook;
use crate::python::ast::Stmt;
use crate::python::{parse_module, strip_magics};
use crate::sequence::{CodeBlock, EdaSequence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkRules {
    /// Glob patterns over canonical call names that mark a cell as
    /// producing output.
    pub output_calls: Vec<String>,
}

impl Default for SinkRules {
    fn default() -> Self {
        let patterns = [
            "__builtins__.print",
            "__builtins__.display",
            "*.show",
            "*.plot",
            "*.imshow",
            "*.hist",
            "*.scatter",
            "*.bar",
            "*.barh",
            "*.boxplot",
            "*.pie",
            "seaborn.*plot",
            "seaborn.heatmap",
            "seaborn.clustermap",
        ];
        SinkRules { output_calls: patterns.iter().map(|s| s.to_string()).collect() }
    }
}

/// Per-cell facts shared by sink detection and slicing.
#[derive(Debug, Clone)]
pub struct CellFacts {
    /// `None` for markdown cells.
    pub defuse: Vec<Option<DefUse>>,
    /// Last top-level statement is an unsuppressed bare expression.
    pub trailing_expr: Vec<bool>,
    pub output_call: Vec<bool>,
    /// name → ascending indices of cells defining it.
    definers: BTreeMap<String, Vec<usize>>,
}

impl CellFacts {
    pub fn new(notebook: &Notebook, rules: &SinkRules) -> Self {
        let n = notebook.cells.len();
        let mut defuse = Vec::with_capacity(n);
        let mut trailing_expr = alloc::vec![false; n];
        let mut output_call = alloc::vec![false; n];
        let mut bodies: Vec<Option<Vec<Stmt>>> = Vec::with_capacity(n);
        for cell in &notebook.cells {
            if !cell.is_code() {
                defuse.push(None);
                bodies.push(None);
                continue;
            }
            match parse_module(&strip_magics(&cell.text())) {
                Ok(body) => {
                    defuse.push(Some(defs_uses_of(&body)));
                    bodies.push(Some(body));
                }
                Err(_) => {
                    defuse.push(Some(DefUse { parse_failed: true, ..DefUse::default() }));
                    bodies.push(None);
                }
            }
        }

        // Output-call rule runs against the notebook-wide import aliases.
        let config = ApiConfig::default();
        let mut env = ImportEnv::new();
        for cell in notebook.cells.iter().filter(|c| c.is_code()) {
            env.absorb_source(&cell.text(), &config);
        }
        for (i, cell) in notebook.cells.iter().enumerate() {
            let Some(body) = &bodies[i] else { continue };
            trailing_expr[i] = matches!(body.last(), Some(Stmt::Expr { suppressed: false, .. }));
            let mut local_env = env.clone();
            let calls = resolve_calls(&cell.text(), &mut local_env, &config);
            output_call[i] = calls
                .tokens
                .iter()
                .any(|t| rules.output_calls.iter().any(|p| glob_match(p, t)));
        }

        let mut definers: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, du) in defuse.iter().enumerate() {
            if let Some(du) = du {
                for name in &du.defined {
                    definers.entry(name.clone()).or_default().push(i);
                }
            }
        }
        CellFacts { defuse, trailing_expr, output_call, definers }
    }

    /// Nearest cell before `cell` that defines `name`.
    pub fn reaching_definition(&self, name: &str, cell: usize) -> Option<usize> {
        let cells = self.definers.get(name)?;
        let idx = cells.partition_point(|&c| c < cell);
        idx.checked_sub(1).map(|i| cells[i])
    }

    pub fn used(&self, cell: usize) -> impl Iterator<Item = &String> {
        self.defuse[cell].iter().flat_map(|du| du.used.iter())
    }
}

pub fn detect_sinks(notebook: &Notebook, rules: &SinkRules) -> BTreeSet<usize> {
    sinks_from_facts(notebook, &CellFacts::new(notebook, rules))
}

fn sinks_from_facts(notebook: &Notebook, facts: &CellFacts) -> BTreeSet<usize> {
    notebook
        .cells
        .iter()
        .enumerate()
        .filter(|(i, cell)| {
            cell.is_code() && (cell.has_stored_output || facts.trailing_expr[*i] || facts.output_call[*i])
        })
        .map(|(i, _)| i)
        .collect()
}

/// Closure of `sink` under nearest-preceding definitions, plus the names no
/// earlier cell defines.
pub fn closure(facts: &CellFacts, sink: usize) -> (BTreeSet<usize>, BTreeSet<String>) {
    let mut members = BTreeSet::from([sink]);
    let mut external = BTreeSet::new();
    let mut work = alloc::vec![sink];
    while let Some(cell) = work.pop() {
        for name in facts.used(cell) {
            match facts.reaching_definition(name, cell) {
                Some(def) => {
                    if members.insert(def) {
                        work.push(def);
                    }
                }
                None if is_builtin(name) => {}
                None => {
                    external.insert(name.clone());
                }
            }
        }
    }
    (members, external)
}

pub fn backward_slice(notebook: &Notebook, sink: usize, rules: &SinkRules) -> EdaSequence {
    let facts = CellFacts::new(notebook, rules);
    slice_from_facts(notebook, &facts, sink)
}

fn slice_from_facts(notebook: &Notebook, facts: &CellFacts, sink: usize) -> EdaSequence {
    let (members, external) = closure(facts, sink);
    let member_cells: Vec<usize> = members.into_iter().collect();
    let blocks = member_cells
        .iter()
        .enumerate()
        .map(|(ordinal, &cell)| CodeBlock {
            ordinal,
            origin_cell: cell,
            source: notebook.cells[cell].source.clone(),
            api_tokens: Vec::new(),
            eda_type: Default::default(),
            keywords: Vec::new(),
        })
        .collect();
    EdaSequence {
        id: EdaSequence::sequence_id(&notebook.id, sink),
        notebook_id: notebook.id.clone(),
        member_cells,
        blocks,
        sink_cell: sink,
        external_names: external.into_iter().collect(),
    }
}

/// One sequence per sink in sink order; slices with identical member sets
/// keep only the first.
pub fn slice_notebook(notebook: &Notebook, rules: &SinkRules) -> Vec<EdaSequence> {
    let facts = CellFacts::new(notebook, rules);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for sink in sinks_from_facts(notebook, &facts) {
        let seq = slice_from_facts(notebook, &facts, sink);
        if seen.insert(seq.member_cells.clone()) {
            out.push(seq);
        }
    }
    out
}

/// Free names of the concatenated script that are neither builtins nor
/// declared externals. Empty for an executable sequence.
pub fn executability_violations(seq: &EdaSequence) -> Vec<String> {
    let mut script = String::new();
    for block in &seq.blocks {
        let text = strip_magics(&block.text());
        // Cells that do not tokenize contribute nothing.
        if parse_module(&text).is_err() {
            continue;
        }
        script.push_str(&text);
        script.push('\n');
    }
    let Ok(body) = parse_module(&script) else {
        return alloc::vec![String::from("<script does not parse>")];
    };
    let du = defs_uses_of(&body);
    du.used
        .into_iter()
        .filter(|n| !is_builtin(n) && seq.external_names.binary_search(n).is_err())
        .collect()
}
