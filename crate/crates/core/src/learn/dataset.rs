use serde::{Deserialize, Serialize};

/// Which label of a [`Sample`] a classifier predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Action,
    Person,
    Room,
    Location,
}

impl std::fmt::Display for LabelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LabelKind::Action => "action",
            LabelKind::Person => "person",
            LabelKind::Room => "room",
            LabelKind::Location => "location",
        })
    }
}

impl std::str::FromStr for LabelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "action" => Ok(LabelKind::Action),
            "person" => Ok(LabelKind::Person),
            "room" => Ok(LabelKind::Room),
            "location" => Ok(LabelKind::Location),
            _ => Err(format!("unknown label kind {s:?}")),
        }
    }
}

/// Descriptor of one Tx-Rx pair before any training-dependent step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairDescriptor {
    /// A fixed-length vector, e.g. Gabor statistics.
    Vector(Vec<f64>),
    /// Local descriptors awaiting quantization against a codebook.
    Bag(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    /// One entry per Tx-Rx pair, in pair order.
    pub pairs: Vec<PairDescriptor>,
    pub action: String,
    pub person: String,
    pub room: String,
    pub location: String,
}

impl Sample {
    pub fn label(&self, kind: LabelKind) -> &str {
        match kind {
            LabelKind::Action => &self.action,
            LabelKind::Person => &self.person,
            LabelKind::Room => &self.room,
            LabelKind::Location => &self.location,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sorted distinct label names and every sample's index into them.
    pub fn labels(&self, kind: LabelKind) -> (Vec<String>, Vec<usize>) {
        let mut names: Vec<String> = self.samples.iter().map(|s| s.label(kind).to_string()).collect();
        names.sort();
        names.dedup();
        let ids = self
            .samples
            .iter()
            .map(|s| names.binary_search_by(|n| n.as_str().cmp(s.label(kind))).unwrap_or(0))
            .collect();
        (names, ids)
    }

    pub fn n_pairs(&self) -> usize {
        self.samples.first().map_or(0, |s| s.pairs.len())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset { samples: idx.iter().map(|&i| self.samples[i].clone()).collect() }
    }
}
