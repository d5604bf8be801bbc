//! Integer polynomials over generalized shape-color moments.
//!
//! Text format: one term per line, `<coeff> <p,q,a,b,c> <p,q,a,b,c> ...`,
//! factors in canonical order. The zero polynomial serializes to an empty
//! string.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Exponent tuple `(p, q, alpha, beta, gamma)` of a moment: coordinate powers
/// `p, q` and channel powers for R, G, B. Ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MomentIndex {
    pub p: u8,
    pub q: u8,
    pub alpha: u8,
    pub beta: u8,
    pub gamma: u8,
}

impl MomentIndex {
    /// The area moment (all exponents zero).
    pub const AREA: MomentIndex = MomentIndex::new(0, 0, 0, 0, 0);

    pub const fn new(p: u8, q: u8, alpha: u8, beta: u8, gamma: u8) -> Self {
        MomentIndex {
            p,
            q,
            alpha,
            beta,
            gamma,
        }
    }

    pub fn from_array(e: [u8; 5]) -> Self {
        MomentIndex::new(e[0], e[1], e[2], e[3], e[4])
    }

    pub fn as_array(&self) -> [u8; 5] {
        [self.p, self.q, self.alpha, self.beta, self.gamma]
    }

    pub fn shape_order(&self) -> u32 {
        self.p as u32 + self.q as u32
    }

    pub fn color_order(&self) -> u32 {
        self.alpha as u32 + self.beta as u32 + self.gamma as u32
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.p, self.q, self.alpha, self.beta, self.gamma
        )
    }
}

impl FromStr for MomentIndex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err(format!(
                "moment index `{s}` needs 5 comma-separated exponents"
            ));
        }
        let mut e = [0u8; 5];
        for (slot, part) in e.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| format!("bad exponent `{part}` in `{s}`"))?;
        }
        Ok(MomentIndex::from_array(e))
    }
}

/// A nonzero integer coefficient times a product of moments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonomialTerm {
    coefficient: i64,
    factors: Vec<MomentIndex>,
}

impl MonomialTerm {
    pub fn coefficient(&self) -> i64 {
        self.coefficient
    }

    /// Factors in sorted order, repeated for powers.
    pub fn factors(&self) -> &[MomentIndex] {
        &self.factors
    }
}

/// Canonical sparse polynomial: terms sorted by factor list, no duplicates,
/// no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MomentPolynomial {
    terms: Vec<MonomialTerm>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Merges like terms and sorts into canonical order.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Vec<MomentIndex>)>,
    {
        let mut merged: BTreeMap<Vec<MomentIndex>, i64> = BTreeMap::new();
        for (c, mut factors) in terms {
            if c == 0 {
                continue;
            }
            factors.sort_unstable();
            let entry = merged.entry(factors).or_insert(0);
            *entry = entry
                .checked_add(c)
                .expect("moment polynomial coefficient overflow");
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(factors, coefficient)| MonomialTerm {
                coefficient,
                factors,
            })
            .collect();
        MomentPolynomial { terms }
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every moment index referenced by any term.
    pub fn indices(&self) -> BTreeSet<MomentIndex> {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().copied())
            .collect()
    }

    /// Returns a copy with one term's coefficient replaced; used for fault
    /// injection in verification runs.
    pub fn with_coefficient(&self, term: usize, coefficient: i64) -> Self {
        let mut out = self.clone();
        if let Some(t) = out.terms.get_mut(term) {
            t.coefficient = coefficient;
        }
        out.terms.retain(|t| t.coefficient != 0);
        out
    }

    /// Evaluates the polynomial with compensated summation over terms.
    pub fn evaluate<F>(&self, lookup: F) -> Result<f64>
    where
        F: Fn(&MomentIndex) -> Option<f64>,
    {
        let mut sum = NeumaierSum::default();
        for term in &self.terms {
            let mut t = term.coefficient as f64;
            for idx in &term.factors {
                t *= lookup(idx).ok_or(Error::MissingIndex(*idx))?;
            }
            sum.add(t);
        }
        Ok(sum.value())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let coeff_text = fields.next().expect("nonempty line has a field");
            let coefficient: i64 = coeff_text
                .parse()
                .map_err(|_| err(format!("bad coefficient `{coeff_text}`")))?;
            if coefficient == 0 {
                return Err(err("zero coefficient".into()));
            }
            let factors = fields
                .map(|f| f.parse::<MomentIndex>().map_err(&err))
                .collect::<Result<Vec<_>>>()?;
            if factors.is_empty() {
                return Err(err("term has no moment factors".into()));
            }
            terms.push((coefficient, factors));
        }
        Ok(Self::from_terms(terms))
    }
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for term in &self.terms {
            write!(f, "{}", term.coefficient)?;
            for idx in &term.factors {
                write!(f, " {idx}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for MomentPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
