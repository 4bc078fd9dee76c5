//! JSON adversary documents: `{"n": 3, "graphs": [{"name": "G1", "edges": [[1, 2]]}]}`.
//!
//! Process ids are 1-based. Self-loops may be listed but are always added on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphcore::{check_process_count, CommunicationGraph};
use crate::indist::Adversary;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub name: String,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryDocument {
    pub n: usize,
    pub graphs: Vec<GraphDocument>,
}

impl AdversaryDocument {
    pub fn from_adversary(d: &Adversary) -> Self {
        AdversaryDocument {
            n: d.n(),
            graphs: d
                .graphs()
                .iter()
                .map(|g| GraphDocument {
                    name: g.name().to_string(),
                    edges: g.edges().into_iter().map(|(a, b)| [a + 1, b + 1]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_adversary(&self) -> Result<Adversary> {
        check_process_count(self.n)?;
        let graphs = self
            .graphs
            .iter()
            .map(|g| {
                let edges = g
                    .edges
                    .iter()
                    .map(|&[a, b]| {
                        for p in [a, b] {
                            if p == 0 || p > self.n {
                                return Err(Error::ProcessOutOfRange {
                                    process: p,
                                    n: self.n,
                                });
                            }
                        }
                        Ok((a - 1, b - 1))
                    })
                    .collect::<Result<Vec<_>>>()?;
                CommunicationGraph::from_edges(g.name.clone(), self.n, &edges)
            })
            .collect::<Result<Vec<_>>>()?;
        Adversary::new(graphs)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Indented JSON with one graph per block and each edge list on one line.
    pub fn to_json(&self) -> String {
        let mut s = format!("{{\n  \"n\": {},\n  \"graphs\": [", self.n);
        for (i, g) in self.graphs.iter().enumerate() {
            let name = serde_json::to_string(&g.name).expect("strings always serialize");
            let edges: Vec<String> = g.edges.iter().map(|[a, b]| format!("[{a}, {b}]")).collect();
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            s.push_str(&format!(
                "    {{\"name\": {name}, \"edges\": [{}]}}",
                edges.join(", ")
            ));
        }
        s.push_str(if self.graphs.is_empty() {
            "]\n}\n"
        } else {
            "\n  ]\n}\n"
        });
        s
    }
}
