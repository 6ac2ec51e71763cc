use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// High-level EDA operation carried out by a code block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EdaType {
    Preparation,
    Modeling,
    Evaluation,
    Visualization,
    #[default]
    Unknown,
}

impl EdaType {
    /// The four operation types, in legend order.
    pub const ALL: [EdaType; 4] =
        [EdaType::Preparation, EdaType::Modeling, EdaType::Evaluation, EdaType::Visualization];

    pub fn name(self) -> &'static str {
        match self {
            EdaType::Preparation => "preparation",
            EdaType::Modeling => "modeling",
            EdaType::Evaluation => "evaluation",
            EdaType::Visualization => "visualization",
            EdaType::Unknown => "unknown",
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            EdaType::Preparation => 0,
            EdaType::Modeling => 1,
            EdaType::Evaluation => 2,
            EdaType::Visualization => 3,
            EdaType::Unknown => 255,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => EdaType::Preparation,
            1 => EdaType::Modeling,
            2 => EdaType::Evaluation,
            3 => EdaType::Visualization,
            255 => EdaType::Unknown,
            _ => return None,
        })
    }
}

impl fmt::Display for EdaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdaType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "preparation" => Ok(EdaType::Preparation),
            "modeling" => Ok(EdaType::Modeling),
            "evaluation" => Ok(EdaType::Evaluation),
            "visualization" => Ok(EdaType::Visualization),
            "unknown" => Ok(EdaType::Unknown),
            _ => Err(()),
        }
    }
}

/// One source cell inside a sliced sequence. The analyzer fills in the
/// token, type and keyword fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBlock {
    pub ordinal: usize,
    pub origin_cell: usize,
    pub source: Vec<String>,
    #[serde(default)]
    pub api_tokens: Vec<String>,
    #[serde(default)]
    pub eda_type: EdaType,
    #[serde(default)]
    pub keywords: Vec<(String, f64)>,
}

impl CodeBlock {
    pub fn text(&self) -> String {
        self.source.concat()
    }
}

/// An executable backward slice of a notebook ending at an output cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSequence {
    pub id: String,
    pub notebook_id: String,
    /// Ascending cell indices; the last one is `sink_cell`.
    pub member_cells: Vec<usize>,
    pub blocks: Vec<CodeBlock>,
    pub sink_cell: usize,
    /// Names used by the slice that no preceding cell defines.
    pub external_names: Vec<String>,
}

impl EdaSequence {
    pub fn sequence_id(notebook_id: &str, sink: usize) -> String {
        alloc::format!("{notebook_id}:{sink:04}")
    }

    /// Block sources joined into one script.
    pub fn script(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&b.text());
            if !out.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    pub fn token_blocks(&self) -> Vec<Vec<String>> {
        self.blocks.iter().map(|b| b.api_tokens.clone()).collect()
    }
}
