//! Party input states and the inline state mini-language.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! list     := entry ("," entry)*
//! entry    := INDEX ":" state
//! state    := ket | amps | ensemble
//! ket      := "|" [01+-]+ ">"              one symbol per qubit, qubit 0 first
//! amps     := "[" complex ("," complex)* "]"   normalised on parse
//! ensemble := "{" weight ":" (ket | amps) (";" weight ":" (ket | amps))* "}"
//! ```
//!
//! Complex literals: `0.6`, `-0.8i`, `0.5+0.5i`, `i`, `-i`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyState {
    Pure(Vec<Complex64>),
    Ensemble(Vec<(f64, Vec<Complex64>)>),
}

impl PartyState {
    pub fn zero(n: usize) -> PartyState {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
        v[0] = Complex64::new(1.0, 0.0);
        PartyState::Pure(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            PartyState::Pure(v) => v.len(),
            PartyState::Ensemble(e) => e.first().map_or(0, |(_, v)| v.len()),
        }
    }

    pub fn members(&self) -> Vec<(f64, &[Complex64])> {
        match self {
            PartyState::Pure(v) => vec![(1.0, v.as_slice())],
            PartyState::Ensemble(e) => e.iter().map(|(w, v)| (*w, v.as_slice())).collect(),
        }
    }

    pub fn is_pure_input(&self) -> bool {
        matches!(self, PartyState::Pure(_)) || self.members().len() == 1
    }

    /// Draws an ensemble member; returns its index.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            PartyState::Pure(_) => 0,
            PartyState::Ensemble(e) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, (w, _)) in e.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i;
                    }
                }
                e.len() - 1
            }
        }
    }

    pub fn member(&self, i: usize) -> &[Complex64] {
        match self {
            PartyState::Pure(v) => v,
            PartyState::Ensemble(e) => &e[i].1,
        }
    }

    /// Dense density matrix, row-major.
    pub fn density(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
        for (w, v) in self.members() {
            for r in 0..d {
                for c in 0..d {
                    rho[r * d + c] += w * v[r] * v[c].conj();
                }
            }
        }
        rho
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let dim = 1usize << n;
        let check = |v: &[Complex64]| -> Result<()> {
            if v.len() != dim {
                return Err(Error::InvalidParameter(format!("state has {} amplitudes, expected {dim}", v.len())));
            }
            let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
            }
            Ok(())
        };
        match self {
            PartyState::Pure(v) => check(v),
            PartyState::Ensemble(e) => {
                if e.is_empty() {
                    return Err(Error::InvalidParameter("empty ensemble".into()));
                }
                let mut total = 0.0;
                for (w, v) in e {
                    if !(*w >= 0.0) {
                        return Err(Error::InvalidParameter(format!("negative ensemble weight {w}")));
                    }
                    total += w;
                    check(v)?;
                }
                if (total - 1.0).abs() > NORM_TOL {
                    return Err(Error::InvalidParameter(format!("ensemble weights sum to {total}")));
                }
                Ok(())
            }
        }
    }

    /// Applies a unitary (row-major, dim x dim) to every member.
    pub fn conjugated(&self, u: &[Complex64]) -> PartyState {
        let d = self.dim();
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            (0..d).map(|r| (0..d).map(|c| u[r * d + c] * v[c]).sum()).collect()
        };
        match self {
            PartyState::Pure(v) => PartyState::Pure(apply(v)),
            PartyState::Ensemble(e) => PartyState::Ensemble(e.iter().map(|(w, v)| (*w, apply(v))).collect()),
        }
    }

    /// Diagonal ensemble with the given spectrum in the computational basis.
    pub fn diagonal(weights: &[f64]) -> PartyState {
        let d = weights.len();
        PartyState::Ensemble(
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let mut v = vec![Complex64::new(0.0, 0.0); d];
                    v[i] = Complex64::new(1.0, 0.0);
                    (*w, v)
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartySpec {
    pub k: usize,
    pub n: usize,
    pub states: Vec<PartyState>,
}

impl PartySpec {
    pub fn new(k: usize, n: usize, states: Vec<PartyState>) -> Result<PartySpec> {
        let s = PartySpec { k, n, states };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(k: usize, n: usize, state: PartyState) -> Result<PartySpec> {
        PartySpec::new(k, n, vec![state; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.n < 1 {
            return Err(Error::InvalidParameter(format!("need k >= 2 and n >= 1, got k={}, n={}", self.k, self.n)));
        }
        if self.states.len() != self.k {
            return Err(Error::InvalidParameter(format!("{} states for {} parties", self.states.len(), self.k)));
        }
        self.states.iter().try_for_each(|s| s.validate(self.n))
    }

    pub fn all_pure(&self) -> bool {
        self.states.iter().all(PartyState::is_pure_input)
    }

    /// Parses `INDEX:state` entries; unlisted parties start in |0...0>.
    pub fn parse(k: usize, n: usize, text: &str) -> Result<PartySpec> {
        let mut states = vec![PartyState::zero(n); k];
        for (idx, st) in parse_state_list(text)? {
            if idx >= k {
                return Err(Error::Parse(format!("party index {idx} out of range for k={k}")));
            }
            states[idx] = st;
        }
        PartySpec::new(k, n, states)
    }
}

/// Parses the list form `0:|0>,1:[0.6,0.8]`.
pub fn parse_state_list(text: &str) -> Result<Vec<(usize, PartyState)>> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Ok(Vec::new());
    }
    split_top(&cleaned, ',')?
        .into_iter()
        .map(|entry| {
            let (idx, rest) = entry
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected INDEX:state, got {entry:?}")))?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("bad party index {idx:?}")))?;
            Ok((idx, parse_state(rest)?))
        })
        .collect()
}

/// Parses a single state expression.
pub fn parse_state(text: &str) -> Result<PartyState> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(body) = s.strip_prefix('{') {
        let body = body.strip_suffix('}').ok_or_else(|| Error::Parse("unterminated ensemble".into()))?;
        let mut members = Vec::new();
        for part in split_top(body, ';')? {
            let (w, v) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected weight:state, got {part:?}")))?;
            let w: f64 = w.parse().map_err(|_| Error::Parse(format!("bad weight {w:?}")))?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Parse(format!("bad weight {w}")));
            }
            members.push((w, parse_vector(v)?));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Parse(format!("ensemble weights sum to {total}")));
        }
        let dim = members[0].1.len();
        if members.iter().any(|(_, v)| v.len() != dim) {
            return Err(Error::Parse("ensemble members differ in dimension".into()));
        }
        for m in &mut members {
            m.0 /= total;
        }
        return Ok(PartyState::Ensemble(members));
    }
    Ok(PartyState::Pure(parse_vector(&s)?))
}

fn parse_vector(s: &str) -> Result<Vec<Complex64>> {
    let v = if let Some(body) = s.strip_prefix('|') {
        let body = body.strip_suffix('>').ok_or_else(|| Error::Parse(format!("unterminated ket {s:?}")))?;
        ket(body)?
    } else if let Some(body) = s.strip_prefix('[') {
        let body = body.strip_suffix(']').ok_or_else(|| Error::Parse(format!("unterminated amplitude list {s:?}")))?;
        let amps = body.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(Error::Parse(format!("{} amplitudes is not a power of two >= 2", amps.len())));
        }
        amps
    } else {
        return Err(Error::Parse(format!("unrecognised state {s:?}")));
    };
    let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 1e-12) || !norm.is_finite() {
        return Err(Error::Parse("state has zero or non-finite norm".into()));
    }
    Ok(v.into_iter().map(|a| a / norm).collect())
}

fn ket(symbols: &str) -> Result<Vec<Complex64>> {
    if symbols.is_empty() || symbols.len() > 16 {
        return Err(Error::Parse(format!("ket must have 1..=16 symbols, got {:?}", symbols)));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(1.0, 0.0)];
    // Qubit j is bit j of the basis index.
    for (j, ch) in symbols.chars().enumerate() {
        let (a0, a1) = match ch {
            '0' => (1.0, 0.0),
            '1' => (0.0, 1.0),
            '+' => (h, h),
            '-' => (h, -h),
            _ => return Err(Error::Parse(format!("bad ket symbol {ch:?}"))),
        };
        let mut next = vec![Complex64::new(0.0, 0.0); v.len() * 2];
        for (i, amp) in v.iter().enumerate() {
            next[i] = amp * a0;
            next[i | (1 << j)] = amp * a1;
        }
        v = next;
    }
    Ok(v)
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("bad complex literal {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad),
        }
    };
    let z = if let Some(body) = s.strip_suffix('i') {
        // Split at the last sign that is not the leading one or part of an exponent.
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        match split {
            Some(i) => {
                let re = body[..i].parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)?;
                Complex64::new(re, num(&body[i..])?)
            }
            None => Complex64::new(0.0, num(body)?),
        }
    } else {
        Complex64::new(s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)?, 0.0)
    };
    Ok(z)
}

/// Splits at `sep` outside brackets and braces.
fn split_top(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' | '{' => depth += 1,
            ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse("unbalanced brackets".into()));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced brackets".into()));
    }
    out.push(&s[start..]);
    if out.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("empty item in {s:?}")));
    }
    Ok(out)
}
