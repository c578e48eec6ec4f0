use alloc::vec::Vec;

/// One named component of a route score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTerm {
    pub name: &'static str,
    pub value: f64,
}

/// A route's score (higher is safer) with its per-term breakdown.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteScore {
    pub value: f64,
    pub terms: Vec<ScoreTerm>,
}

impl RouteScore {
    pub fn new(value: f64) -> Self {
        Self { value, terms: Vec::new() }
    }

    pub fn with_term(mut self, name: &'static str, value: f64) -> Self {
        self.terms.push(ScoreTerm { name, value });
        self
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}
