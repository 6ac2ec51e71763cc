//! Run descriptors placing a sequence inside its notebook: one run per
//! member cell, and one run per maximal stretch of other cells.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::notebook::Notebook;
use crate::sequence::{EdaSequence, EdaType};

/// Stretches of more than this many non-member cells are folded.
pub const FOLD_THRESHOLD: usize = 3;
const PREVIEW_LINES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnaRun {
    pub in_sequence: bool,
    pub eda_type: EdaType,
    /// Half-open cell range.
    pub start: usize,
    pub end: usize,
    pub folded: bool,
    pub preview: String,
}

pub fn dna_runs(notebook: &Notebook, seq: &EdaSequence) -> Vec<DnaRun> {
    let n = notebook.cells.len();
    let mut runs = Vec::new();
    let mut cell = 0;
    while cell < n {
        if let Some(block) = seq.blocks.iter().find(|b| b.origin_cell == cell) {
            runs.push(DnaRun {
                in_sequence: true,
                eda_type: block.eda_type,
                start: cell,
                end: cell + 1,
                folded: false,
                preview: preview(&notebook.cells[cell].source),
            });
            cell += 1;
            continue;
        }
        let start = cell;
        while cell < n && !seq.member_cells.contains(&cell) {
            cell += 1;
        }
        runs.push(DnaRun {
            in_sequence: false,
            eda_type: EdaType::Unknown,
            start,
            end: cell,
            folded: cell - start > FOLD_THRESHOLD,
            preview: preview(&notebook.cells[start].source),
        });
    }
    runs
}

/// Per-cell membership flags for the detail view.
pub fn member_flags(notebook: &Notebook, seq: &EdaSequence) -> Vec<bool> {
    (0..notebook.cells.len()).map(|i| seq.member_cells.contains(&i)).collect()
}

fn preview(lines: &[String]) -> String {
    let mut out: String = lines.iter().take(PREVIEW_LINES).map(String::as_str).collect();
    while out.ends_with('\n') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::CodeBlock;
    use alloc::vec;
    use proptest::prelude::*;

    fn fixture(cells: usize, members: &[usize]) -> (Notebook, EdaSequence) {
        let sources: Vec<String> = (0..cells).map(|i| alloc::format!("x{i} = {i}\ny = 2\nz = 3\nw = 4")).collect();
        let nb = Notebook::from_code_cells("n", &sources);
        let blocks = members
            .iter()
            .enumerate()
            .map(|(ordinal, &c)| CodeBlock {
                ordinal,
                origin_cell: c,
                source: nb.cells[c].source.clone(),
                api_tokens: vec![],
                eda_type: EdaType::Modeling,
                keywords: vec![],
            })
            .collect();
        let seq = EdaSequence {
            id: "n:0000".into(),
            notebook_id: "n".into(),
            member_cells: members.to_vec(),
            blocks,
            sink_cell: *members.last().unwrap_or(&0),
            external_names: vec![],
        };
        (nb, seq)
    }

    #[test]
    fn members_and_gaps() {
        let (nb, seq) = fixture(4, &[0, 2]);
        let runs = dna_runs(&nb, &seq);
        let shape: Vec<(bool, usize, usize)> = runs.iter().map(|r| (r.in_sequence, r.start, r.end)).collect();
        assert_eq!(shape, [(true, 0, 1), (false, 1, 2), (true, 2, 3), (false, 3, 4)]);
        assert_eq!(runs[0].eda_type, EdaType::Modeling);
        assert_eq!(runs[0].preview, "x0 = 0\ny = 2\nz = 3");
        assert_eq!(member_flags(&nb, &seq), [true, false, true, false]);
    }

    #[test]
    fn long_gaps_fold() {
        let (nb, seq) = fixture(10, &[0, 7, 9]);
        let runs = dna_runs(&nb, &seq);
        let gaps: Vec<(usize, bool)> = runs.iter().filter(|r| !r.in_sequence).map(|r| (r.end - r.start, r.folded)).collect();
        assert_eq!(gaps, [(6, true), (1, false)]);
        let (nb, seq) = fixture(4, &[3]);
        assert!(!dna_runs(&nb, &seq)[0].folded);
    }

    proptest! {
        #[test]
        fn runs_tile_the_notebook(cells in 1usize..30, picks in proptest::collection::btree_set(0usize..30, 1..10)) {
            let members: Vec<usize> = picks.into_iter().filter(|&c| c < cells).collect();
            prop_assume!(!members.is_empty());
            let (nb, seq) = fixture(cells, &members);
            let runs = dna_runs(&nb, &seq);
            let mut next = 0;
            for r in &runs {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                prop_assert!(!(r.folded && r.in_sequence));
                next = r.end;
            }
            prop_assert_eq!(next, cells);
            let in_seq: Vec<usize> = runs.iter().filter(|r| r.in_sequence).map(|r| r.start).collect();
            prop_assert_eq!(in_seq, members);
        }
    }
}
