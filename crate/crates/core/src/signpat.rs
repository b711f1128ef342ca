//! Sign vectors in `{-1, 0, +1}^p`, the sub-sign order and its cover relation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{norm_1, Tolerances};

/// A vector of signs. Ordered lexicographically with `-1 < 0 < +1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.iter().any(|e| !(-1..=1).contains(e)) {
            return Err(Error::input("sign entries must lie in {-1, 0, 1}"));
        }
        Ok(SignVector(entries))
    }

    pub fn zeros(p: usize) -> Self {
        SignVector(vec![0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Indices of nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] != 0).collect()
    }

    /// Indices of zero entries.
    pub fn cosupport(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] == 0).collect()
    }

    pub fn negated(&self) -> Self {
        SignVector(self.0.iter().map(|e| -e).collect())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| f64::from(e)).collect()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(&s, x)| f64::from(s) * x).sum()
    }

    /// All sign vectors of length `p` in lexicographic order.
    pub fn all(p: usize) -> impl Iterator<Item = SignVector> {
        let total = 3usize.pow(p as u32);
        (0..total).map(move |mut k| {
            let mut e = vec![0i8; p];
            for slot in e.iter_mut().rev() {
                *slot = (k % 3) as i8 - 1;
                k /= 3;
            }
            SignVector(e)
        })
    }

    /// All `t` with `t ⪯ self`, in lexicographic order.
    pub fn sub_signs(&self) -> Vec<SignVector> {
        let supp = self.support();
        let mut out: Vec<SignVector> = (0..1usize << supp.len())
            .map(|mask| {
                let mut e = vec![0i8; self.len()];
                for (b, &i) in supp.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        e[i] = self.0[i];
                    }
                }
                SignVector(e)
            })
            .collect();
        out.sort();
        out
    }

    /// All `t` with `self ⪯ t`, in lexicographic order.
    pub fn super_signs(&self) -> Vec<SignVector> {
        let cosupp = self.cosupport();
        let mut out: Vec<SignVector> = SignVector::all(cosupp.len())
            .map(|free| {
                let mut e = self.0.clone();
                for (k, &i) in cosupp.iter().enumerate() {
                    e[i] = free.0[k];
                }
                SignVector(e)
            })
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.0 {
            let c = match e {
                1 => '+',
                -1 => '-',
                _ => '0',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                '0' => Ok(0),
                other => Err(Error::input(format!("invalid sign character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(SignVector)
    }
}

impl Serialize for SignVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SignVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn same_len(s: &SignVector, t: &SignVector) -> Result<()> {
    if s.len() != t.len() {
        return Err(Error::input(format!(
            "sign length mismatch: {} vs {}",
            s.len(),
            t.len()
        )));
    }
    Ok(())
}

/// `s ⪯ t`: every nonzero entry of `s` is matched by `t`.
pub fn leq(s: &SignVector, t: &SignVector) -> Result<bool> {
    same_len(s, t)?;
    Ok(leq_unchecked(s, t))
}

pub(crate) fn leq_unchecked(s: &SignVector, t: &SignVector) -> bool {
    s.0.iter().zip(&t.0).all(|(&a, &b)| a == 0 || a == b)
}

/// No coordinate where both are nonzero with opposite signs.
pub fn consistent(s: &SignVector, t: &SignVector) -> Result<bool> {
    same_len(s, t)?;
    Ok(s.0.iter().zip(&t.0).all(|(&a, &b)| a == 0 || b == 0 || a == b))
}

/// Thresholded sign. The single place where reals become signs.
pub fn sign_of(v: &[f64], tol: &Tolerances) -> Result<SignVector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("cannot take the sign of a non-finite vector"));
    }
    Ok(SignVector(
        v.iter()
            .map(|&x| {
                if x > tol.sign_tol {
                    1
                } else if x < -tol.sign_tol {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    ))
}

/// `max_s ⟨s, θ⟩ = ‖θ‖₁`, attained exactly by the signs `s` with
/// `sign(θ) ⪯ s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPairing {
    pub value: f64,
    pub sign: SignVector,
}

impl DualPairing {
    pub fn attained_by(&self, s: &SignVector) -> Result<bool> {
        leq(&self.sign, s)
    }
}

pub fn dual_pairing_max(theta: &[f64], tol: &Tolerances) -> Result<DualPairing> {
    Ok(DualPairing {
        value: norm_1(theta),
        sign: sign_of(theta, tol)?,
    })
}

/// A finite set of signs with its cover relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPoset {
    /// Lexicographically sorted, deduplicated.
    pub elements: Vec<SignVector>,
    /// `(a, b)` indexes into `elements` with `elements[a]` covered by `elements[b]`.
    pub cover_edges: Vec<(usize, usize)>,
}

impl SignPoset {
    pub fn index_of(&self, s: &SignVector) -> Option<usize> {
        self.elements.binary_search(s).ok()
    }

    /// Elements with no outgoing cover edge.
    pub fn maximal(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.elements.len()];
        for &(a, _) in &self.cover_edges {
            has_out[a] = true;
        }
        (0..self.elements.len()).filter(|&i| !has_out[i]).collect()
    }

    /// Nonzero elements whose only strict lower bound in the set is zero.
    pub fn minimal_nonzero(&self) -> Vec<usize> {
        let mut lower = vec![0usize; self.elements.len()];
        for &(a, b) in &self.cover_edges {
            if !self.elements[a].is_zero() {
                lower[b] += 1;
            }
        }
        (0..self.elements.len())
            .filter(|&i| !self.elements[i].is_zero() && lower[i] == 0)
            .collect()
    }
}

/// Cover relation of `(S, ⪯)`.
pub fn poset_cover_edges(set: &[SignVector]) -> Result<SignPoset> {
    let mut elements: Vec<SignVector> = set.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if let Some(first) = elements.first() {
        let p = first.len();
        if elements.iter().any(|s| s.len() != p) {
            return Err(Error::input("poset elements have mixed lengths"));
        }
    }
    // Sorting by support size makes every strict predecessor come first.
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..elements.len()).collect();
        idx.sort_by_key(|&i| (elements[i].support().len(), i));
        idx
    };
    let n = elements.len();
    let below: Vec<Vec<usize>> = (0..n)
        .map(|b| {
            (0..n)
                .filter(|&a| a != b && leq_unchecked(&elements[a], &elements[b]))
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    for &b in &order {
        for &a in &below[b] {
            // a ⋖ b unless some strictly intermediate t exists
            let covered = !below[b]
                .iter()
                .any(|&t| t != a && leq_unchecked(&elements[a], &elements[t]));
            if covered {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    elements.shrink_to_fit();
    Ok(SignPoset {
        elements,
        cover_edges: edges,
    })
}
