//! Named objectives that score decoded strings in `[0, 1]`.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::mol::{self, FragmentTable};
use crate::music::{self, MelodyTokens};

/// Scores one decoded string; `None` means the string is not a valid
/// member of the domain.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, text: &str) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Molecules,
    Music,
}

impl Task {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "molecules" => Ok(Task::Molecules),
            "music" => Ok(Task::Music),
            _ => Err(Error::Config(alloc::format!("unknown task {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Molecules => "molecules",
            Task::Music => "music",
        }
    }

    /// Objectives reported by evaluation, in column order.
    pub fn objectives(self) -> &'static [&'static str] {
        match self {
            Task::Molecules => &["druglikeness", "synthesizability", "solubility"],
            Task::Music => &["tonality", "ratio_of_steps"],
        }
    }

    pub fn of_objective(name: &str) -> Option<Task> {
        match name {
            "druglikeness" | "synthesizability" | "solubility" | "validity" => Some(Task::Molecules),
            "tonality" | "ratio_of_steps" => Some(Task::Music),
            _ => None,
        }
    }
}

/// An objective backed by a plain function.
pub struct FnObjective {
    name: &'static str,
    f: fn(&str) -> Option<f64>,
}

impl Objective for FnObjective {
    fn name(&self) -> &str {
        self.name
    }
    fn score(&self, text: &str) -> Option<f64> {
        (self.f)(text)
    }
}

fn molecule(text: &str) -> Option<mol::Molecule> {
    if text.is_empty() {
        return None;
    }
    mol::parse_smiles(text).ok()
}

pub struct Synthesizability {
    table: Arc<FragmentTable>,
}

impl Synthesizability {
    pub fn new(table: Arc<FragmentTable>) -> Self {
        Self { table }
    }
}

impl Objective for Synthesizability {
    fn name(&self) -> &str {
        "synthesizability"
    }
    fn score(&self, text: &str) -> Option<f64> {
        self.table.synthesizability(&molecule(text)?).ok()
    }
}

/// Looks an objective up by name. `synthesizability` needs a fragment
/// table; the others ignore it.
pub fn lookup(name: &str, table: Option<&Arc<FragmentTable>>) -> Result<Box<dyn Objective>> {
    let plain = |name, f| -> Result<Box<dyn Objective>> { Ok(Box::new(FnObjective { name, f })) };
    match name {
        "druglikeness" => plain("druglikeness", |t| molecule(t).map(|m| mol::druglikeness(&m))),
        "solubility" => plain("solubility", |t| molecule(t).map(|m| mol::solubility(&m))),
        "validity" => plain("validity", |t| molecule(t).map(|_| 1.0)),
        "tonality" => plain("tonality", |t| MelodyTokens::parse(t).ok().map(|m| music::tonality(&m))),
        "ratio_of_steps" => plain("ratio_of_steps", |t| MelodyTokens::parse(t).ok().map(|m| music::ratio_of_steps(&m))),
        "synthesizability" => match table {
            Some(t) => Ok(Box::new(Synthesizability::new(t.clone()))),
            None => Err(Error::Config("synthesizability needs a fragment table".to_string())),
        },
        other => Err(Error::UnknownObjective(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name() {
        let v = lookup("validity", None).unwrap();
        assert_eq!(v.score("C1=CC=CC=C1"), Some(1.0));
        assert_eq!(v.score(""), None);
        assert_eq!(v.score("C1CC"), None);
        let t = lookup("tonality", None).unwrap();
        assert_eq!(t.name(), "tonality");
        assert_eq!(t.score("29"), Some(1.0));
        assert!(matches!(lookup("beauty", None), Err(Error::UnknownObjective(_))));
        assert!(matches!(lookup("synthesizability", None), Err(Error::Config(_))));
    }
}
