//! Pass/fail check records shared by the certificate suites and the CLI.

use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// Accumulates one check per name; the first witness of a failure is kept.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Checklist {
    pub checks: Vec<Check>,
}

impl Checklist {
    pub fn new() -> Checklist {
        Checklist::default()
    }

    fn entry(&mut self, name: &str) -> &mut Check {
        if let Some(i) = self.checks.iter().position(|c| c.name == name) {
            return &mut self.checks[i];
        }
        self.checks.push(Check { name: name.to_string(), passed: true, witness: None });
        self.checks.last_mut().unwrap()
    }

    /// Registers `name` as passing unless it already failed.
    pub fn touch(&mut self, name: &str) {
        self.entry(name);
    }

    pub fn record(&mut self, name: &str, ok: bool, witness: impl FnOnce() -> String) {
        let c = self.entry(name);
        if !ok && c.passed {
            c.passed = false;
            c.witness = Some(witness());
        }
    }

    pub fn fail(&mut self, name: &str, witness: String) {
        self.record(name, false, || witness);
    }

    pub fn merge(&mut self, other: Checklist) {
        for c in other.checks {
            let e = self.entry(&c.name);
            if !c.passed && e.passed {
                e.passed = false;
                e.witness = c.witness;
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_witness_wins() {
        let mut c = Checklist::new();
        c.touch("a");
        c.record("b", false, || "one".into());
        c.record("b", false, || "two".into());
        c.record("b", true, || unreachable!());
        assert!(c.get("a").unwrap().passed);
        assert_eq!(c.get("b").unwrap().witness.as_deref(), Some("one"));
        assert!(!c.all_passed());
    }
}
