//! Attack success rate and the information-theoretic identities used to
//! reason about causal directions. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability table.
pub const MASS_TOL: f64 = 1e-12;

/// Binary harm outcomes, one per adversarial example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSet {
    outcomes: Vec<u8>,
}

impl IndicatorSet {
    pub fn new(outcomes: Vec<u8>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Degenerate("indicator set is empty".into()));
        }
        if let Some(bad) = outcomes.iter().find(|&&o| o > 1) {
            return Err(Error::Domain(format!("indicator {bad} is not 0 or 1")));
        }
        Ok(Self { outcomes })
    }

    pub fn from_bools(outcomes: &[bool]) -> Result<Self> {
        Self::new(outcomes.iter().map(|&b| u8::from(b)).collect())
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Mean of the harm indicators.
pub fn attack_success_rate(indicators: &IndicatorSet) -> f64 {
    let hits = indicators.outcomes.iter().map(|&o| u64::from(o)).sum::<u64>();
    hits as f64 / indicators.len() as f64
}

/// Joint distribution `P(X = x, U = u)`; rows index `x`, columns index `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    rows: usize,
    cols: usize,
    probabilities: Vec<f64>,
}

impl JointTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Degenerate("joint table is empty".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
        }
        let probabilities: Vec<f64> = rows.into_iter().flatten().collect();
        check_distribution(&probabilities)?;
        Ok(Self { rows: probabilities.len() / cols, cols, probabilities })
    }

    #[inline]
    pub fn get(&self, x: usize, u: usize) -> f64 {
        self.probabilities[x * self.cols + u]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `P(X)`.
    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.rows).map(|x| (0..self.cols).map(|u| self.get(x, u)).sum()).collect()
    }

    /// `P(U)`.
    pub fn marginal_u(&self) -> Vec<f64> {
        (0..self.cols).map(|u| (0..self.rows).map(|x| self.get(x, u)).sum()).collect()
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Degenerate("distribution is empty".into()));
    }
    if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("probability {bad} is not a finite non-negative number")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn entropy_unchecked(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// Shannon entropy in bits (`0·log 0 = 0`).
pub fn entropy(marginal: &[f64]) -> Result<f64> {
    check_distribution(marginal)?;
    Ok(entropy_unchecked(marginal.iter().copied()))
}

/// `H(X | U) = Σ_u P(u) H(X | U = u)`, bits.
pub fn conditional_entropy(table: &JointTable) -> f64 {
    let pu = table.marginal_u();
    (0..table.cols)
        .filter(|&u| pu[u] > 0.0)
        .map(|u| pu[u] * entropy_unchecked((0..table.rows).map(|x| table.get(x, u) / pu[u])))
        .sum()
}

/// `I(X; U) = H(X) − H(X | U)`, bits.
///
/// The difference can round to a few ulps below zero for (near-)independent
/// tables; those are reported as 0.
pub fn mutual_information(table: &JointTable) -> f64 {
    (entropy_unchecked(table.marginal_x()) - conditional_entropy(table)).max(0.0)
}

/// One `0`/`1` per line; blank lines are ignored.
pub fn parse_indicators(text: &str) -> Result<IndicatorSet> {
    let outcomes = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| match l.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Error::Corrupt(format!("line {}: '{other}' is not 0 or 1", n + 1))),
        })
        .collect::<Result<Vec<u8>>>()?;
    IndicatorSet::new(outcomes)
}

/// Headerless CSV grid of probabilities.
pub fn parse_joint_table(text: &str) -> Result<JointTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let rows = rdr
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Corrupt(format!("joint table: {e}")))?;
            rec.iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Corrupt(format!("'{f}' is not a number"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    JointTable::new(rows)
}
