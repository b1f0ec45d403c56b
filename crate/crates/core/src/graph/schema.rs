use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{HidamError, Result};

/// Node type that meta-paths start and end on, and that carries labels.
pub const TARGET_NODE_TYPE: &str = "Company";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTypeDef {
    pub name: String,
    pub attributes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkTypeDef {
    pub name: String,
    pub source: String,
    pub target: String,
    pub attributes: usize,
    #[serde(default = "default_directed")]
    pub directed: bool,
}

fn default_directed() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "node_type")]
    pub node_types: Vec<NodeTypeDef>,
    #[serde(rename = "link_type")]
    pub link_types: Vec<LinkTypeDef>,
}

/// Attribute widths for the banking schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankingWidths {
    pub company: usize,
    pub person: usize,
    pub industry: usize,
    pub transfer: usize,
    pub belong: usize,
    pub updownstream: usize,
    pub control: usize,
    pub invest: usize,
}

impl Schema {
    pub fn new(node_types: Vec<NodeTypeDef>, link_types: Vec<LinkTypeDef>) -> Result<Self> {
        let s = Schema {
            node_types,
            link_types,
        };
        s.validate()?;
        Ok(s)
    }

    /// Company / Person / Industry with transfer, belong, updownstream,
    /// control (Person → Company) and invest (Company → Company).
    pub fn banking(w: BankingWidths) -> Self {
        let node = |name: &str, attributes| NodeTypeDef {
            name: name.into(),
            attributes,
        };
        let link = |name: &str, source: &str, target: &str, attributes| LinkTypeDef {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            attributes,
            directed: true,
        };
        Schema {
            node_types: vec![
                node("Company", w.company),
                node("Person", w.person),
                node("Industry", w.industry),
            ],
            link_types: vec![
                link("transfer", "Company", "Company", w.transfer),
                link("belong", "Company", "Industry", w.belong),
                link("updownstream", "Industry", "Industry", w.updownstream),
                link("control", "Person", "Company", w.control),
                link("invest", "Company", "Company", w.invest),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for n in &self.node_types {
            if !seen.insert(n.name.as_str()) {
                return Err(HidamError::Schema(format!(
                    "duplicate node type `{}`",
                    n.name
                )));
            }
        }
        let mut links = HashSet::new();
        for l in &self.link_types {
            if !links.insert(l.name.as_str()) {
                return Err(HidamError::Schema(format!(
                    "duplicate link type `{}`",
                    l.name
                )));
            }
            for end in [&l.source, &l.target] {
                if !seen.contains(end.as_str()) {
                    return Err(HidamError::Schema(format!(
                        "link type `{}` references undeclared node type `{}`",
                        l.name, end
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn node_type_index(&self, name: &str) -> Result<usize> {
        self.node_types
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| HidamError::UnknownType {
                kind: "node",
                name: name.into(),
            })
    }

    pub fn link_type_index(&self, name: &str) -> Result<usize> {
        self.link_types
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| HidamError::UnknownType {
                kind: "link",
                name: name.into(),
            })
    }

    pub fn target_type(&self) -> Result<usize> {
        self.node_type_index(TARGET_NODE_TYPE)
    }
}
