//! App records: star rating, the low/not-low label, and the two analysis
//! vectors, plus the line-delimited vector file formats (9 fractional
//! digits, diffable).

use thiserror::Error;

use crate::layout::LayoutVector;
use crate::semvec::SemanticVector;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("vector file: line {line}: {msg}")]
    Parse { msg: String, line: usize },
}

/// Classification target. Class 0 is the low-rating class throughout;
/// it is also the positive class for precision/recall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Low = 0,
    NotLow = 1,
}

impl Label {
    /// Anything below three stars is low; exactly 3.0 counts as not-low.
    pub fn from_stars(stars: f64) -> Label {
        if stars < 3.0 {
            Label::Low
        } else {
            Label::NotLow
        }
    }

    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn from_class_index(i: usize) -> Label {
        match i {
            0 => Label::Low,
            _ => Label::NotLow,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.class_index())
    }
}

/// One analyzed app.
#[derive(Debug, Clone)]
pub struct AppRecord {
    pub id: String,
    pub stars: f64,
    pub label: Label,
    pub sem: SemanticVector,
    pub lay: LayoutVector,
}

/// Renders semantic vectors: a version line, then one record per line —
/// app id, label, N, and sparse `id:f:l:b` entries for nonzero slots.
pub fn render_sem_file(records: &[AppRecord]) -> String {
    let mut out = String::from("semvec v1\n");
    for r in records {
        out.push_str(&format!("{} {} {}", r.id, r.label, r.sem.len()));
        for (i, s) in r.sem.slots().iter().enumerate() {
            if s.f > 0 {
                out.push_str(&format!(" {}:{}:{:.9}:{:.9}", i + 1, s.f, s.l, s.b));
            }
        }
        out.push('\n');
    }
    out
}

/// Renders layout vectors: one record per line with sparse `id:n:d`
/// entries over the M+2 slots.
pub fn render_lay_file(records: &[AppRecord]) -> String {
    let mut out = String::from("layvec v1\n");
    for r in records {
        out.push_str(&format!("{} {} {}", r.id, r.label, r.lay.len()));
        for (i, &(n, d)) in r.lay.slots().iter().enumerate() {
            if n > 0 {
                out.push_str(&format!(" {}:{}:{:.9}", i + 1, n, d));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_rule_boundary() {
        assert_eq!(Label::from_stars(1.0), Label::Low);
        assert_eq!(Label::from_stars(2.999999), Label::Low);
        assert_eq!(Label::from_stars(3.0), Label::NotLow);
        assert_eq!(Label::from_stars(4.5), Label::NotLow);
    }

    #[test]
    fn label_class_indices() {
        assert_eq!(Label::Low.class_index(), 0);
        assert_eq!(Label::NotLow.class_index(), 1);
        assert_eq!(Label::from_class_index(0), Label::Low);
        assert_eq!(Label::from_class_index(1), Label::NotLow);
    }
}
