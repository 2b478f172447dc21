//! Prompt templates with `{name}` placeholders.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::backend::RoleTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        scan(&self.text, |piece| {
            if let Piece::Placeholder(name) = piece {
                if seen.insert(name) {
                    out.push(name);
                }
            }
        });
        out
    }

    /// Single pass substitution: values are inserted verbatim and never
    /// rescanned, and unknown placeholders are left as written.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.text.len());
        scan(&self.text, |piece| match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Placeholder(name) => match vars.iter().find(|(k, _)| *k == name) {
                Some((_, v)) => out.push_str(v),
                None => {
                    out.push('{');
                    out.push_str(name);
                    out.push('}');
                }
            },
        });
        out
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn scan<'a>(text: &'a str, mut emit: impl FnMut(Piece<'a>)) {
    let bytes = text.as_bytes();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_start = i + 1;
            let mut j = name_start;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j] == b'_') {
                j += 1;
            }
            if j > name_start && j < bytes.len() && bytes[j] == b'}' {
                if lit_start < i {
                    emit(Piece::Literal(&text[lit_start..i]));
                }
                emit(Piece::Placeholder(&text[name_start..j]));
                i = j + 1;
                lit_start = i;
                continue;
            }
        }
        i += 1;
    }
    if lit_start < text.len() {
        emit(Piece::Literal(&text[lit_start..]));
    }
}

/// Templates for the five generation roles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub scenario: PromptTemplate,
    pub profile: PromptTemplate,
    pub seeker: PromptTemplate,
    pub counselor: PromptTemplate,
    pub supporter: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            scenario: PromptTemplate::new(include_str!("../templates/scenario.txt")),
            profile: PromptTemplate::new(include_str!("../templates/profile.txt")),
            seeker: PromptTemplate::new(include_str!("../templates/seeker.txt")),
            counselor: PromptTemplate::new(include_str!("../templates/counselor.txt")),
            supporter: PromptTemplate::new(include_str!("../templates/supporter.txt")),
        }
    }
}

impl PromptSet {
    pub fn get(&self, role: RoleTag) -> &PromptTemplate {
        match role {
            RoleTag::Scenario => &self.scenario,
            RoleTag::Profile => &self.profile,
            RoleTag::Seeker => &self.seeker,
            RoleTag::Counselor => &self.counselor,
            RoleTag::Supporter => &self.supporter,
        }
    }

    pub fn set(&mut self, role: RoleTag, template: PromptTemplate) {
        match role {
            RoleTag::Scenario => self.scenario = template,
            RoleTag::Profile => self.profile = template,
            RoleTag::Seeker => self.seeker = template,
            RoleTag::Counselor => self.counselor = template,
            RoleTag::Supporter => self.supporter = template,
        }
    }

    /// Placeholders each role's renderer fills in.
    pub fn known_placeholders(role: RoleTag) -> &'static [&'static str] {
        match role {
            RoleTag::Scenario => &["problem_type", "example_scenario", "example_dialogue"],
            RoleTag::Profile => &["problem_type", "scenario", "profile"],
            RoleTag::Seeker => &["problem_type", "scenario", "profile", "history"],
            RoleTag::Counselor => &["history", "strategies"],
            RoleTag::Supporter => &["strategy", "history", "example_dialogue"],
        }
    }

    /// Names used in a template that its role never fills.
    pub fn unknown_placeholders(&self, role: RoleTag) -> Vec<String> {
        let known = Self::known_placeholders(role);
        self.get(role)
            .placeholders()
            .into_iter()
            .filter(|p| !known.contains(p))
            .map(String::from)
            .collect()
    }
}

/// System prompt per role.
pub fn system_prompt(role: RoleTag) -> &'static str {
    match role {
        RoleTag::Scenario => "You write realistic help-seeking scenarios.",
        RoleTag::Profile => "You write concise character profiles.",
        RoleTag::Seeker => "You are role-playing a help seeker. Stay in character.",
        RoleTag::Counselor => "You select emotional support strategies.",
        RoleTag::Supporter => "You are an emotional supporter.",
    }
}
