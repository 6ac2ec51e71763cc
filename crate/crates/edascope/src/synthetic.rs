//! Seeded generator of small EDA notebooks.
//!
//! Every cell comes from a template of a single EDA type, so blocks are
//! topic-pure. A notebook is a chain of state-changing steps with output
//! cells branching off it. Each chain step is the previous step's planted
//! successor with probability `successor_prob`, otherwise a uniform pick
//! among the steps whose prerequisites hold; output cells follow the same
//! rule against the step they branch from.

use std::path::Path;

use edascope_core::notebook::{split_lines, Cell, CellKind, Notebook};
use edascope_core::sequence::EdaType;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::write_atomic;
use crate::ipynb::{notebook_id, to_ipynb_bytes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub notebooks: usize,
    /// Code cells per notebook, inclusive, counting the loading cell.
    pub min_cells: usize,
    pub max_cells: usize,
    pub markdown_prob: f64,
    /// Chance of an output cell after each chain step.
    pub sink_prob: f64,
    pub successor_prob: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            notebooks: 200,
            min_cells: 6,
            max_cells: 12,
            markdown_prob: 0.2,
            sink_prob: 0.6,
            successor_prob: 0.7,
            rng_seed: 7,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.min_cells < 1 || self.min_cells > self.max_cells {
            return Err(Error::Usage("need 1 <= min_cells <= max_cells".into()));
        }
        if !prob(self.markdown_prob) || !prob(self.successor_prob) || !prob(self.sink_prob) {
            return Err(Error::Usage("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Program state a template can require or establish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Split,
    Model,
}

struct Template {
    name: &'static str,
    eda_type: EdaType,
    needs: &'static [Var],
    gives: &'static [Var],
    /// Shows output: never a chain step, and gets a stored output.
    sink: bool,
    code: &'static str,
    /// Planted next chain steps.
    successors: &'static [&'static str],
    /// Planted output cells after this step.
    sinks: &'static [&'static str],
}

const fn step(
    name: &'static str,
    eda_type: EdaType,
    needs: &'static [Var],
    gives: &'static [Var],
    code: &'static str,
    successors: &'static [&'static str],
    sinks: &'static [&'static str],
) -> Template {
    Template { name, eda_type, needs, gives, sink: false, code, successors, sinks }
}

const fn out(name: &'static str, eda_type: EdaType, needs: &'static [Var], code: &'static str) -> Template {
    Template { name, eda_type, needs, gives: &[], sink: true, code, successors: &[], sinks: &[] }
}

use EdaType::{Evaluation as E, Modeling as M, Preparation as P, Visualization as V};

const SPLIT: &[Var] = &[Var::Split];
const FITTED: &[Var] = &[Var::Split, Var::Model];

/// The loading cell's code is generated separately.
const LOAD: Template = step("load", P, &[], &[], "", &["fillna"], &["describe"]);

const TEMPLATES: &[Template] = &[
    step("fillna", P, &[], &[], "df = df.fillna(df.median())", &["dummies"], &["isnull"]),
    step("dropna", P, &[], &[], "df = df.dropna()\ndf = df.drop_duplicates()", &["split"], &["countplot"]),
    step("dummies", P, &[], &[], "df = pd.get_dummies(df, columns=[\"{c}\"])", &["split"], &["hist"]),
    step("astype", P, &[], &[], "df[\"{c}\"] = df[\"{c}\"].astype(\"category\")", &["drop"], &["countplot"]),
    step("drop", P, &[], &[], "df = df.drop(columns=[\"{c}\"])", &["dropna"], &["describe"]),
    step(
        "merge",
        P,
        &[],
        &[],
        "extra = pd.read_csv(\"data/extra.csv\")\ndf = pd.merge(df, extra, on=\"id\")",
        &["dropna"],
        &["heatmap"],
    ),
    step(
        "split",
        P,
        &[],
        SPLIT,
        "from sklearn.model_selection import train_test_split\nX = df.drop(columns=[\"target\"])\ny = df[\"target\"]\nX_train, X_test, y_train, y_test = train_test_split(X, y, test_size=0.2, random_state={n})",
        &["scale"],
        &["scatter"],
    ),
    step(
        "scale",
        P,
        SPLIT,
        &[],
        "from sklearn.preprocessing import StandardScaler\nscaler = StandardScaler()\nX_train = scaler.fit_transform(X_train)\nX_test = scaler.transform(X_test)",
        &["forest"],
        &["boxplot"],
    ),
    step(
        "logreg",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.linear_model import LogisticRegression\nmodel = LogisticRegression(max_iter={n}00)\nmodel.fit(X_train, y_train)",
        &["tree"],
        &["accuracy"],
    ),
    step(
        "forest",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.ensemble import RandomForestClassifier\nmodel = RandomForestClassifier(n_estimators={n}0)\nmodel.fit(X_train, y_train)",
        &["boosting"],
        &["confusion"],
    ),
    step(
        "tree",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.tree import DecisionTreeClassifier\nmodel = DecisionTreeClassifier(max_depth={n})\nmodel.fit(X_train, y_train)",
        &["knn"],
        &["report"],
    ),
    step(
        "knn",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.neighbors import KNeighborsClassifier\nmodel = KNeighborsClassifier(n_neighbors={n})\nmodel.fit(X_train, y_train)",
        &["svc"],
        &["score"],
    ),
    step(
        "svc",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.svm import SVC\nmodel = SVC(C=0.{n})\nmodel.fit(X_train, y_train)",
        &["logreg"],
        &["accuracy"],
    ),
    step(
        "boosting",
        M,
        SPLIT,
        &[Var::Model],
        "from sklearn.ensemble import GradientBoostingClassifier\nmodel = GradientBoostingClassifier(n_estimators={n}0)\nmodel.fit(X_train, y_train)",
        &["logreg"],
        &["cv"],
    ),
    out("isnull", P, &[], "df.isnull().sum()"),
    out("describe", P, &[], "df.describe()"),
    out(
        "accuracy",
        E,
        FITTED,
        "from sklearn.metrics import accuracy_score\npred = model.predict(X_test)\nprint(accuracy_score(y_test, pred))",
    ),
    out(
        "confusion",
        E,
        FITTED,
        "from sklearn.metrics import confusion_matrix\npred = model.predict(X_test)\nconfusion_matrix(y_test, pred)",
    ),
    out(
        "report",
        E,
        FITTED,
        "from sklearn.metrics import classification_report\npred = model.predict(X_test)\nprint(classification_report(y_test, pred))",
    ),
    out("score", E, FITTED, "model.score(X_test, y_test)"),
    out(
        "cv",
        E,
        FITTED,
        "from sklearn.model_selection import cross_val_score\nscores = cross_val_score(model, X, y, cv={n})\nscores.mean()",
    ),
    out("hist", V, &[], "plt.figure(figsize=(8, 4))\nsns.histplot(df[\"{c}\"])\nplt.title(\"{c}\")\nplt.show()"),
    out("countplot", V, &[], "sns.countplot(x=\"{c}\", data=df)\nplt.show()"),
    out("heatmap", V, &[], "plt.figure(figsize=(10, 8))\nsns.heatmap(df.corr(), annot=True)\nplt.show()"),
    out(
        "boxplot",
        V,
        SPLIT,
        "sns.boxplot(x=y_train, y=X_train[:, 0])\nplt.xlabel(\"target\")\nplt.ylabel(\"first feature\")\nplt.show()",
    ),
    out(
        "scatter",
        V,
        SPLIT,
        "fig, ax = plt.subplots()\nax.scatter(X[\"{c}\"], y)\nplt.legend()\nplt.show()",
    ),
    out("lineplot", V, &[], "df[\"{c}\"].plot(kind=\"line\")\nplt.ylabel(\"{c}\")\nplt.show()"),
    out(
        "importance",
        V,
        FITTED,
        "plt.bar(range(len(X.columns)), model.feature_importances_)\nplt.xlabel(\"feature\")\nplt.show()",
    ),
];

const COLUMNS: &[&str] = &["age", "income", "balance", "duration", "score", "rate", "tenure", "amount"];
const DATASETS: &[&str] = &["loans", "churn", "titanic", "housing", "credit", "sales", "wine", "diabetes"];
const LOADERS: &[(&str, &str)] = &[("read_csv", "csv"), ("read_excel", "xlsx"), ("read_json", "json")];

fn template(name: &str) -> &'static Template {
    TEMPLATES.iter().find(|t| t.name == name).expect("planted rules refer to templates")
}

/// Planted rules as (step, next steps, output cells).
pub fn planted_rules() -> Vec<(&'static str, &'static [&'static str], &'static [&'static str])> {
    std::iter::once(&LOAD).chain(TEMPLATES.iter().filter(|t| !t.sink)).map(|t| (t.name, t.successors, t.sinks)).collect()
}

/// Names of the templates, by EDA type.
pub fn templates_of(eda_type: EdaType) -> Vec<&'static str> {
    TEMPLATES.iter().filter(|t| t.eda_type == eda_type).map(|t| t.name).collect()
}

fn fill(code: &str, rng: &mut ChaCha8Rng) -> String {
    let c = COLUMNS.choose(rng).expect("non-empty");
    code.replace("{c}", c).replace("{n}", &rng.gen_range(2..10).to_string())
}

fn loading_cell(rng: &mut ChaCha8Rng) -> String {
    let (reader, ext) = LOADERS.choose(rng).expect("non-empty");
    let name = DATASETS.choose(rng).expect("non-empty");
    format!(
        "import pandas as pd\nimport numpy as np\nimport matplotlib.pyplot as plt\nimport seaborn as sns\n\ndf = pd.{reader}(\"data/{name}.{ext}\")\ndf.head()"
    )
}

fn push_cell(cells: &mut Vec<Cell>, kind: CellKind, text: &str, output: bool) {
    cells.push(Cell { index: cells.len(), kind, source: split_lines(text), has_stored_output: output });
}

/// Planted choice with probability `p` when one is ready, else uniform
/// among ready templates of the wanted kind.
fn pick(
    planted: &[&str],
    sink: bool,
    state: &[Var],
    p: f64,
    rng: &mut ChaCha8Rng,
) -> &'static Template {
    let ready = |t: &&Template| t.sink == sink && t.needs.iter().all(|v| state.contains(v));
    let preferred: Vec<&'static Template> = planted.iter().map(|n| template(n)).filter(ready).collect();
    if !preferred.is_empty() && rng.gen_bool(p) {
        return preferred.choose(rng).copied().expect("non-empty");
    }
    let open: Vec<&'static Template> = TEMPLATES.iter().filter(ready).collect();
    open.choose(rng).copied().expect("templates without prerequisites exist")
}

/// One notebook. `path` is its corpus-relative file name.
fn notebook(spec: &SyntheticSpec, path: &str, rng: &mut ChaCha8Rng) -> Notebook {
    let code_cells = rng.gen_range(spec.min_cells..=spec.max_cells);
    let mut cells = Vec::new();
    push_cell(&mut cells, CellKind::Markdown, &format!("# Analysis {path}"), false);
    push_cell(&mut cells, CellKind::Code, &loading_cell(rng), true);
    let mut state: Vec<Var> = Vec::new();
    let mut current = &LOAD;
    let mut written = 1;
    let emit = |cells: &mut Vec<Cell>, t: &Template, rng: &mut ChaCha8Rng| {
        if rng.gen_bool(spec.markdown_prob) {
            push_cell(cells, CellKind::Markdown, &format!("## {}", t.name), false);
        }
        push_cell(cells, CellKind::Code, &fill(t.code, rng), t.sink);
    };
    while written < code_cells {
        let next = pick(current.successors, false, &state, spec.successor_prob, rng);
        emit(&mut cells, next, rng);
        written += 1;
        for v in next.gives {
            if !state.contains(v) {
                state.push(*v);
            }
        }
        current = next;
        if written < code_cells && rng.gen_bool(spec.sink_prob) {
            let shown = pick(current.sinks, true, &state, spec.successor_prob, rng);
            emit(&mut cells, shown, rng);
            written += 1;
        }
    }
    Notebook { id: notebook_id(path), source_path: path.into(), cells }
}

pub fn file_name(i: usize) -> String {
    format!("nb_{i:04}.ipynb")
}

pub fn generate(spec: &SyntheticSpec) -> Result<Vec<Notebook>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    Ok((0..spec.notebooks).map(|i| notebook(spec, &file_name(i), &mut rng)).collect())
}

/// Writes the notebooks under `dir` as nbformat 4 files.
pub fn write_corpus(dir: &Path, notebooks: &[Notebook]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for nb in notebooks {
        write_atomic(&dir.join(&nb.source_path), &to_ipynb_bytes(nb))?;
    }
    Ok(())
}
