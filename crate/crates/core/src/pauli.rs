//! Pauli strings and empirical Pauli-error histograms.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Letters in qubit-list order; the leftmost letter belongs to the first listed qubit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(len: usize) -> Self {
        PauliString(vec![Pauli::I; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|p| *p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' | '_' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliHistogram {
    pub shots: u64,
    pub counts: BTreeMap<PauliString, u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    pauli_string: String,
    count: u64,
    probability: String,
}

impl PauliHistogram {
    pub fn record(&mut self, p: PauliString) {
        self.shots += 1;
        *self.counts.entry(p).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &PauliHistogram) {
        self.shots += other.shots;
        for (p, c) in &other.counts {
            *self.counts.entry(p.clone()).or_insert(0) += c;
        }
    }

    pub fn probability(&self, p: &PauliString) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        *self.counts.get(p).unwrap_or(&0) as f64 / self.shots as f64
    }

    /// Rows by descending count, ties broken by string order.
    pub fn sorted(&self) -> Vec<(PauliString, u64, f64)> {
        let mut rows: Vec<_> = self
            .counts
            .iter()
            .map(|(p, c)| (p.clone(), *c, *c as f64 / self.shots.max(1) as f64))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }

    /// Most frequent non-identity string.
    pub fn top_error(&self) -> Option<(PauliString, f64)> {
        self.sorted().into_iter().find(|r| !r.0.is_identity()).map(|r| (r.0, r.2))
    }

    pub fn identity_probability(&self) -> f64 {
        self.counts
            .iter()
            .filter(|(p, _)| p.is_identity())
            .map(|(_, c)| *c as f64)
            .sum::<f64>()
            / self.shots.max(1) as f64
    }

    /// Channel table for `Gate::PauliChannel`.
    pub fn table(&self) -> Vec<(PauliString, f64)> {
        self.sorted().into_iter().map(|(p, _, pr)| (p, pr)).collect()
    }

    /// Errors by descending count, then the identity row, so the first row is the dominant error.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let (id, errs): (Vec<_>, Vec<_>) = self.sorted().into_iter().partition(|r| r.0.is_identity());
        for (p, c, pr) in errs.into_iter().chain(id) {
            w.serialize(Row { pauli_string: p.to_string(), count: c, probability: format!("{pr:.8}") })
                .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<PauliHistogram> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["pauli_string", "count", "probability"] {
            return Err(Error::Parse(format!("unexpected csv header {headers:?}")));
        }
        let mut h = PauliHistogram::default();
        let mut width = None;
        for row in r.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            let p: PauliString = row.pauli_string.parse()?;
            if *width.get_or_insert(p.len()) != p.len() {
                return Err(Error::Parse("rows have different Pauli string lengths".into()));
            }
            row.probability
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad probability {:?}", row.probability)))?;
            if h.counts.insert(p, row.count).is_some() {
                return Err(Error::Parse("duplicate Pauli string".into()));
            }
            h.shots = h
                .shots
                .checked_add(row.count)
                .ok_or_else(|| Error::Parse("count overflow".into()))?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let p: PauliString = "ZIIXY".parse().unwrap();
        assert_eq!(p.to_string(), "ZIIXY");
        assert_eq!(p.weight(), 3);
        assert!("ZQ".parse::<PauliString>().is_err());
        assert!(PauliString::identity(3).is_identity());
    }

    #[test]
    fn csv_round_trip() {
        let mut h = PauliHistogram::default();
        for _ in 0..3 {
            h.record("II".parse().unwrap());
        }
        h.record("ZI".parse().unwrap());
        let text = h.to_csv();
        assert!(text.starts_with("pauli_string,count,probability\nZI,1,0.25000000\nII,3,0.75000000"));
        assert_eq!(PauliHistogram::from_csv(&text).unwrap(), h);
        assert_eq!(h.top_error().unwrap().0.to_string(), "ZI");
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(PauliHistogram::from_csv("a,b,c\n").is_err());
        assert!(PauliHistogram::from_csv("pauli_string,count,probability\nZ,1,x\n").is_err());
        assert!(PauliHistogram::from_csv("pauli_string,count,probability\nZ,1,1\nZZ,1,1\n").is_err());
    }
}
