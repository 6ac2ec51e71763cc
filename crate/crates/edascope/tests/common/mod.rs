#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use edascope::ipynb::parse_notebook;
use edascope_core::notebook::Notebook;
use edascope_core::slicer::{CellFacts, SinkRules};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn load_fixture(rel: &str) -> Notebook {
    let raw = std::fs::read(fixtures().join(rel)).unwrap();
    parse_notebook(&raw, rel).unwrap().0
}

/// Every fixture notebook, by relative path.
pub fn fixture_notebooks() -> Vec<Notebook> {
    ["loan.ipynb", "corpus3/a.ipynb", "corpus3/b.ipynb", "corpus3/c.ipynb", "mixed/ok.ipynb"]
        .iter()
        .map(|p| load_fixture(p))
        .collect()
}

/// Exhaustive slice oracle: enumerates every subset of the code cells before
/// `sink`, keeps the executable ones (each used name's nearest earlier
/// definer is in the set) and returns the unique inclusion-minimal one.
/// Panics if the minimum is not unique.
pub fn oracle_slice(nb: &Notebook, sink: usize, rules: &SinkRules) -> Vec<usize> {
    let facts = CellFacts::new(nb, rules);
    let candidates: Vec<usize> = (0..sink).filter(|&i| nb.cells[i].is_code()).collect();
    assert!(candidates.len() <= 16, "too many cells for exhaustive search");

    let nearest_definer = |name: &str, before: usize| -> Option<usize> {
        (0..before).rev().find(|&j| facts.defuse[j].as_ref().is_some_and(|du| du.defined.contains(name)))
    };
    let executable = |set: &BTreeSet<usize>| {
        set.iter().all(|&m| {
            facts.defuse[m]
                .iter()
                .flat_map(|du| du.used.iter())
                .all(|name| nearest_definer(name, m).is_none_or(|d| set.contains(&d)))
        })
    };

    let mut valid: Vec<BTreeSet<usize>> = Vec::new();
    for mask in 0u32..(1 << candidates.len()) {
        let mut set: BTreeSet<usize> =
            candidates.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &c)| c).collect();
        set.insert(sink);
        if executable(&set) {
            valid.push(set);
        }
    }
    let minimal: Vec<&BTreeSet<usize>> =
        valid.iter().filter(|s| !valid.iter().any(|t| t.len() < s.len() && t.is_subset(s))).collect();
    assert_eq!(minimal.len(), 1, "inclusion-minimal slice is not unique for sink {sink}");
    minimal[0].iter().copied().collect()
}

/// Snippet and its expected canonical tokens under the default analyzer
/// configuration and an empty import environment.
pub const GOLDEN: &[(&str, &[&str])] = &[
    ("import pandas as pd\npd.read_csv(\"a\")", &["pandas.read_csv"]),
    ("len(xs)", &["__builtins__.len"]),
    (
        "from sklearn.linear_model import LogisticRegression\nm = LogisticRegression()\nm.fit(X, y)",
        &["sklearn.linear_model.LogisticRegression", "*.fit"],
    ),
    ("import numpy as np\nnp.mean(np.array([1, 2]))", &["numpy.mean", "numpy.array"]),
    ("import pandas as pd\npd.read_csv(p).head()", &["pandas.read_csv", "*.head"]),
    (
        "import matplotlib.pyplot as plt\nplt.figure(figsize=(8, 4))\nplt.show()",
        &["matplotlib.pyplot.figure", "matplotlib.pyplot.show"],
    ),
    ("import seaborn as sns\nsns.heatmap(df.corr(), annot=True)", &["seaborn.heatmap", "*.corr"]),
    ("print(len(df))", &["__builtins__.print", "__builtins__.len"]),
    ("import numpy\nnumpy.linalg.norm(v)", &["numpy.linalg.norm"]),
    ("import os.path\nos.path.join(a, b)", &[]),
    (
        "from sklearn.model_selection import train_test_split as tts\nX_tr, X_te = tts(X)",
        &["sklearn.model_selection.train_test_split"],
    ),
    ("df.groupby(\"a\").mean()", &["*.groupby", "*.mean"]),
    ("def f(x):\n    return x\nf(1)", &[]),
    ("requests.get(url)", &["*.get"]),
    ("import requests\nrequests.get(url)", &[]),
    ("foo(1)", &[]),
    ("[str(v) for v in values]", &["__builtins__.str"]),
    ("%matplotlib inline\nimport pandas as pd\npd.DataFrame()", &["pandas.DataFrame"]),
    ("\"abc\".upper()", &["*.upper"]),
    ("import pandas as pd\ndf = pd.DataFrame(d)\ndf.describe()", &["pandas.DataFrame", "*.describe"]),
    ("isinstance(x, int)", &["__builtins__.isinstance"]),
    ("display(df)", &["__builtins__.display"]),
    ("from sklearn import metrics\nmetrics.accuracy_score(y, p)", &["sklearn.metrics.accuracy_score"]),
    (
        "import pandas as pd\nwith open(p) as fh:\n    data = pd.read_json(fh)",
        &["__builtins__.open", "pandas.read_json"],
    ),
    ("import numpy as np\nsq = lambda v: np.sqrt(v)\nsq(4)", &["numpy.sqrt"]),
    (
        "for i in range(len(xs)):\n    print(i)",
        &["__builtins__.range", "__builtins__.len", "__builtins__.print"],
    ),
    ("x.values.reshape(-1, 1)", &["*.reshape"]),
    (
        "import matplotlib.pyplot as plt\nfig, ax = plt.subplots()\nax.plot(xs)",
        &["matplotlib.pyplot.subplots", "*.plot"],
    ),
];

/// Runs the golden suite; returns the snippets that did not match.
pub fn golden_failures() -> Vec<String> {
    use edascope_core::api::{extract_api_calls, ApiConfig, ImportEnv};
    let config = ApiConfig::default();
    GOLDEN
        .iter()
        .filter_map(|(code, want)| {
            let got = extract_api_calls(code, &ImportEnv::new(), &config);
            (got.parse_failed || got.tokens != *want).then(|| format!("{code:?}: got {:?}", got.tokens))
        })
        .collect()
}

/// Sliced and analyzed manifest over a generated corpus.
pub fn synthetic_manifest(spec: &edascope::synthetic::SyntheticSpec) -> edascope::manifest::Manifest {
    use edascope::corpus::Scan;
    use edascope::pipeline::{analyze, slice, Settings};
    use edascope_core::notebook::CorpusStats;

    let notebooks = edascope::synthetic::generate(spec).unwrap();
    let scan = Scan { stats: CorpusStats::compute(&notebooks), notebooks, skipped: vec![], dropped_cells: 0 };
    let mut m = edascope::manifest::Manifest::from_scan("synthetic", scan);
    let settings = Settings::default();
    slice(&mut m, &settings);
    analyze(&mut m, &settings, None).unwrap();
    m
}

/// Keeps the first `n` analyzed sequences.
pub fn truncate(m: &mut edascope::manifest::Manifest, n: usize) {
    m.sequences.truncate(n);
    m.analysis.truncate(n);
}

pub fn tfidf_snapshot(m: edascope::manifest::Manifest) -> edascope::pipeline::Snapshot {
    use edascope::pipeline::{index, train_encoder, EncoderKind, EncoderSettings, Snapshot};
    let enc = train_encoder(&m, &EncoderSettings { kind: EncoderKind::Tfidf, dim: 32, rng_seed: 0 }).unwrap();
    let (idx, _) = index(&m, &enc).unwrap();
    Snapshot::new(m, idx, enc, None).unwrap()
}
