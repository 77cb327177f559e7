use serde::Serialize;

/// One verified identity or estimate.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReportItem {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
}

/// Outcome of a family of checks. Reports never abort: failures are listed with witnesses.
#[derive(Clone, Debug, Serialize, PartialEq, Default)]
pub struct Report {
    pub title: String,
    pub items: Vec<ReportItem>,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report { title: title.to_string(), items: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn item(&self, name: &str) -> Option<&ReportItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportItem> {
        self.items.iter().filter(|i| !i.passed)
    }

    /// Record a check with its list of violation witnesses; passes iff the list is empty.
    pub fn witnesses(&mut self, name: &str, witnesses: Vec<String>) {
        self.items.push(ReportItem {
            name: name.to_string(),
            passed: witnesses.is_empty(),
            value: None,
            threshold: None,
            witnesses,
        });
    }

    /// Record a scalar compared against an upper bound.
    pub fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.items.push(ReportItem {
            name: name.to_string(),
            passed: value.is_finite() && value <= bound,
            value: Some(value),
            threshold: Some(bound),
            witnesses: vec![],
        });
    }

    /// Record a scalar compared against a lower bound.
    pub fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.items.push(ReportItem {
            name: name.to_string(),
            passed: value.is_finite() && value >= bound,
            value: Some(value),
            threshold: Some(bound),
            witnesses: vec![],
        });
    }

    pub fn flag(&mut self, name: &str, passed: bool, note: Option<String>) {
        self.items.push(ReportItem {
            name: name.to_string(),
            passed,
            value: None,
            threshold: None,
            witnesses: note.into_iter().collect(),
        });
    }

    pub fn push(&mut self, item: ReportItem) {
        self.items.push(item);
    }

    pub fn extend(&mut self, prefix: &str, other: Report) {
        for mut i in other.items {
            i.name = format!("{prefix}{}", i.name);
            self.items.push(i);
        }
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self.failures().map(|i| i.name.as_str()).collect();
        if failed.is_empty() {
            format!("{}: {} checks passed", self.title, self.items.len())
        } else {
            format!("{}: {} of {} checks failed ({})", self.title, failed.len(), self.items.len(), failed.join(", "))
        }
    }
}
