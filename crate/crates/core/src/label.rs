//! Class labels and capture conditions shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Architecture family a client is training. `Cnn` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "CNN")]
    Cnn,
    #[serde(rename = "RNN")]
    Rnn,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Cnn, Label::Rnn];

    /// Row/column index in confusion matrices and count arrays.
    pub fn index(self) -> usize {
        match self {
            Label::Cnn => 0,
            Label::Rnn => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Cnn
        } else {
            Label::Rnn
        }
    }

    /// Signed encoding used by the SVM: CNN = +1, RNN = -1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Cnn => 1.0,
            Label::Rnn => -1.0,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Cnn => Label::Rnn,
            Label::Rnn => Label::Cnn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Cnn => "CNN",
            Label::Rnn => "RNN",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CNN" => Ok(Label::Cnn),
            "RNN" => Ok(Label::Rnn),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    #[default]
    Ideal,
    Noisy,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Ideal => "ideal",
            Condition::Noisy => "noisy",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(Condition::Ideal),
            "noisy" => Ok(Condition::Noisy),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}
