//! Problem-type taxonomy: five categories, 45 problem types in the shipped
//! table.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_TAXONOMY: &str = include_str!("../data/taxonomy.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Emotional and Mental Health Issues")]
    EmotionalAndMentalHealth,
    #[serde(rename = "Life and Work Stress")]
    LifeAndWorkStress,
    #[serde(rename = "Interpersonal Relationships")]
    InterpersonalRelationships,
    #[serde(rename = "Personal Development")]
    PersonalDevelopment,
    #[serde(rename = "Behavioral Issues")]
    BehavioralIssues,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::EmotionalAndMentalHealth,
        Category::LifeAndWorkStress,
        Category::InterpersonalRelationships,
        Category::PersonalDevelopment,
        Category::BehavioralIssues,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::EmotionalAndMentalHealth => "Emotional and Mental Health Issues",
            Category::LifeAndWorkStress => "Life and Work Stress",
            Category::InterpersonalRelationships => "Interpersonal Relationships",
            Category::PersonalDevelopment => "Personal Development",
            Category::BehavioralIssues => "Behavioral Issues",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        Self::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(text))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProblemType {
    pub category: Category,
    pub name: String,
}

impl ProblemType {
    pub fn new(category: Category, name: impl Into<String>) -> Self {
        Self { category, name: name.into() }
    }
}

impl fmt::Display for ProblemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    types: Vec<ProblemType>,
}

impl Taxonomy {
    /// The shipped 45-type table.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TAXONOMY).expect("builtin taxonomy is well formed")
    }

    /// Parses tab-separated `category<TAB>name` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut types: Vec<ProblemType> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, name) = line.split_once('\t').ok_or_else(|| Error::Taxonomy {
                line: line_no,
                reason: "expected category<TAB>name".to_string(),
            })?;
            let category = Category::parse(cat).ok_or_else(|| Error::Taxonomy {
                line: line_no,
                reason: alloc::format!("unknown category {cat:?}"),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::Taxonomy { line: line_no, reason: "empty name".to_string() });
            }
            if types.iter().any(|t| t.name.eq_ignore_ascii_case(name)) {
                return Err(Error::Taxonomy {
                    line: line_no,
                    reason: alloc::format!("duplicate problem type {name:?}"),
                });
            }
            types.push(ProblemType::new(category, name));
        }
        Ok(Self { types })
    }

    pub fn from_types(types: Vec<ProblemType>) -> Self {
        Self { types }
    }

    pub fn types(&self) -> &[ProblemType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<&ProblemType> {
        let name = name.trim();
        self.types.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn in_category(&self, category: Category) -> impl Iterator<Item = &ProblemType> {
        self.types.iter().filter(move |t| t.category == category)
    }

    /// Uniform draw over all problem types.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProblemType> {
        if self.types.is_empty() {
            return Err(Error::EmptyTaxonomy);
        }
        let idx = rng.random_range(0..self.types.len());
        Ok(self.types[idx].clone())
    }
}
