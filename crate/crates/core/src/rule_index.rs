//! Canonical enumeration of the rule-body space, partitioned by body length.
//!
//! Bodies of length `l` over `n` variables are ordered by: variable subsets
//! of size `l` lexicographically (ascending index tuples), then negation
//! patterns counted in binary with the subset's lowest variable as the
//! least-significant bit. Index `(l, i)` therefore decomposes as
//! `i = subset_rank * 2^l + negation_mask`, and the total across lengths is
//! `3^n`. The table defines what each model output node means, so the same
//! bijection is used for label generation and rule decoding.

use crate::error::{Error, Result};
use crate::logic::{Body, Ternary};

/// `C(n, k)` in `u64`, exact for the widths this crate supports.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Number of bodies with exactly `l` literals over `n` variables: `C(n,l) * 2^l`.
pub fn body_count(n: usize, l: usize) -> Result<u64> {
    if l > n {
        return Err(Error::BodyLengthTooLarge { len: l, n });
    }
    Ok(binomial(n, l) << l)
}

/// Variable subset of size `l` with lexicographic rank `rank`.
fn unrank_subset(n: usize, l: usize, mut rank: u64) -> Vec<usize> {
    let mut subset = Vec::with_capacity(l);
    let mut next = 0;
    for slot in 0..l {
        for candidate in next..n {
            let with_candidate = binomial(n - 1 - candidate, l - 1 - slot);
            if rank < with_candidate {
                subset.push(candidate);
                next = candidate + 1;
                break;
            }
            rank -= with_candidate;
        }
    }
    subset
}

/// Lexicographic rank of an ascending variable subset.
fn rank_subset(n: usize, subset: &[usize]) -> u64 {
    let l = subset.len();
    let mut rank = 0;
    let mut next = 0;
    for (slot, &member) in subset.iter().enumerate() {
        for skipped in next..member {
            rank += binomial(n - 1 - skipped, l - 1 - slot);
        }
        next = member + 1;
    }
    rank
}

/// The body at position `idx` within the length-`l` table.
pub fn body_at(n: usize, l: usize, idx: u64) -> Result<Body> {
    let available = body_count(n, l)?;
    if idx >= available {
        return Err(Error::BodyIndexOutOfRange {
            index: idx,
            len: l,
            available,
        });
    }
    let negations = idx & ((1u64 << l) - 1);
    let subset = unrank_subset(n, l, idx >> l);
    let mut body = Body::EMPTY;
    for (slot, &var) in subset.iter().enumerate() {
        let entry = if negations >> slot & 1 == 1 {
            Ternary::Negative
        } else {
            Ternary::Positive
        };
        body = body.set(var, entry);
    }
    Ok(body)
}

/// Inverse of [`body_at`]: the `(length, index)` position of a body.
pub fn index_of(n: usize, body: Body) -> Result<(usize, u64)> {
    if body.width() > n {
        return Err(Error::BodyLengthTooLarge {
            len: body.width(),
            n,
        });
    }
    let mut subset = Vec::new();
    let mut negations = 0u64;
    for var in 0..n {
        match body.entry(var) {
            Ternary::Absent => {}
            Ternary::Positive => subset.push(var),
            Ternary::Negative => {
                negations |= 1 << subset.len();
                subset.push(var);
            }
        }
    }
    let l = subset.len();
    Ok((l, rank_subset(n, &subset) << l | negations))
}

/// Materialized per-length body tables for one width. Sized `3^n` in total,
/// so construction is capped at the brute-force width.
#[derive(Debug, Clone)]
pub struct RuleIndexTable {
    n: usize,
    per_length: Vec<Vec<Body>>,
}

/// Widest table we are willing to materialize (3^12 bodies).
pub const TABLE_CAP: usize = 12;

impl RuleIndexTable {
    pub fn new(n: usize) -> Result<Self> {
        if n > TABLE_CAP {
            return Err(Error::LearnCapExceeded { n, cap: TABLE_CAP });
        }
        let per_length = (0..=n)
            .map(|l| {
                (0..body_count(n, l)?)
                    .map(|idx| body_at(n, l, idx))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, per_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bodies of length `l`, in canonical order.
    pub fn bodies(&self, l: usize) -> &[Body] {
        &self.per_length[l]
    }

    pub fn body_count(&self, l: usize) -> usize {
        self.per_length[l].len()
    }

    pub fn body_at(&self, l: usize, idx: usize) -> Option<Body> {
        self.per_length.get(l).and_then(|t| t.get(idx)).copied()
    }

    pub fn index_of(&self, body: Body) -> Result<(usize, u64)> {
        index_of(self.n, body)
    }
}
