//! Uplink-IRS to downlink-IRS association.
//!
//! An end-to-end pairing of uplink surface `l` with downlink surface `m`
//! carries the bottleneck of their two sum rates, so the association
//! problem is a one-to-one assignment on an `L x M` rate matrix. Four
//! strategies are provided: deferred acceptance (the proposed scheme),
//! exhaustive search over permutations (optimal, factorial cost), a
//! one-shot greedy round, and uniform random pairing. Each reports the
//! number of signaling slots it consumed, which the end-to-end rate
//! discounts against the coherence interval.
//!
//! Ties are broken deterministically everywhere: preference lists order
//! equal rates by ascending index, and an engaged downlink surface keeps
//! its incumbent on an equal-rate challenge.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssocError {
    /// Exhaustive search requires as many downlink as uplink surfaces.
    NotSquare,
    /// Exhaustive search beyond the configured size cap.
    TooLarge { size: usize, cap: usize },
    /// Rate vectors or matrix dimensions are empty or inconsistent.
    BadDimensions,
}

impl fmt::Display for AssocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssocError::NotSquare => write!(f, "exhaustive search requires L = M"),
            AssocError::TooLarge { size, cap } => {
                write!(f, "exhaustive search over {size}! pairings exceeds cap {cap}")
            }
            AssocError::BadDimensions => write!(f, "rate matrix dimensions are invalid"),
        }
    }
}

impl core::error::Error for AssocError {}

/// Association strategy tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    GaleShapley,
    Exhaustive,
    Greedy,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GaleShapley,
        Algorithm::Exhaustive,
        Algorithm::Greedy,
        Algorithm::Random,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::GaleShapley => "gs",
            Algorithm::Exhaustive => "es",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
        }
    }
}

impl core::str::FromStr for Algorithm {
    type Err = AssocError;

    fn from_str(s: &str) -> Result<Self, AssocError> {
        match s {
            "gs" | "gale-shapley" => Ok(Algorithm::GaleShapley),
            "es" | "exhaustive" => Ok(Algorithm::Exhaustive),
            "greedy" => Ok(Algorithm::Greedy),
            "random" => Ok(Algorithm::Random),
            _ => Err(AssocError::BadDimensions),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `L x M` matrix of end-to-end rates, `at(l, m)` in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    /// Bottleneck structure: entry `(l, m)` is `min(ul_sums[l], dl_sums[m])`.
    pub fn from_link_sums(ul_sums: &[f64], dl_sums: &[f64]) -> Result<Self, AssocError> {
        if ul_sums.is_empty() || dl_sums.is_empty() {
            return Err(AssocError::BadDimensions);
        }
        let data = ul_sums
            .iter()
            .flat_map(|&ul| dl_sums.iter().map(move |&dl| ul.min(dl)))
            .collect();
        Ok(Self {
            rows: ul_sums.len(),
            cols: dl_sums.len(),
            data,
        })
    }

    /// Arbitrary entries in row-major order.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssocError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(AssocError::BadDimensions);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, l: usize, m: usize) -> f64 {
        self.data[l * self.cols + m]
    }
}

/// Preference lists derived from a rate matrix: for each uplink surface the
/// downlink indices in descending rate order, and vice versa. Equal rates
/// order by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMatrices {
    pub ur_pref: Vec<Vec<usize>>,
    pub dr_pref: Vec<Vec<usize>>,
}

pub fn build_preferences(r: &RateMatrix) -> PriorityMatrices {
    let sort_desc = |rates: &mut dyn Iterator<Item = f64>| -> Vec<usize> {
        let collected: Vec<f64> = rates.collect();
        let mut idx: Vec<usize> = (0..collected.len()).collect();
        idx.sort_by(|&a, &b| {
            collected[b]
                .total_cmp(&collected[a])
                .then(a.cmp(&b))
        });
        idx
    };
    let ur_pref = (0..r.rows())
        .map(|l| sort_desc(&mut (0..r.cols()).map(|m| r.at(l, m))))
        .collect();
    let dr_pref = (0..r.cols())
        .map(|m| sort_desc(&mut (0..r.rows()).map(|l| r.at(l, m))))
        .collect();
    PriorityMatrices { ur_pref, dr_pref }
}

/// A one-to-one (partial) pairing of uplink to downlink surfaces, plus the
/// signaling slots the producing algorithm consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    /// `pairs[l]` is the downlink surface matched to uplink `l`, if any.
    pub pairs: Vec<Option<usize>>,
    /// Raw slot count of the producing algorithm (proposals for deferred
    /// acceptance, evaluated permutations for exhaustive search, one slot
    /// per uplink surface for greedy, one for random).
    pub tau: u64,
    pub algorithm: Algorithm,
}

impl Association {
    /// Matched `(l, m)` pairs.
    pub fn matched(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs
            .iter()
            .enumerate()
            .filter_map(|(l, m)| m.map(|m| (l, m)))
    }

    /// Objective value of the pairing on a rate matrix.
    pub fn sum(&self, r: &RateMatrix) -> f64 {
        self.matched().map(|(l, m)| r.at(l, m)).sum()
    }

    /// Objective value summed in descending value order. Two pairings that
    /// select the same multiset of rates produce bitwise-identical sums
    /// here even when different rows carry the values, which makes exact
    /// optimality comparisons meaningful in floating point.
    pub fn canonical_sum(&self, r: &RateMatrix) -> f64 {
        let mut values: Vec<f64> = self.matched().map(|(l, m)| r.at(l, m)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values.iter().sum()
    }

    /// Both-ways injectivity of the pairing.
    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.pairs.len().max(64)];
        for (_, m) in self.matched() {
            if m >= seen.len() {
                seen.resize(m + 1, false);
            }
            if seen[m] {
                return false;
            }
            seen[m] = true;
        }
        true
    }

    /// Slots charged against a coherence interval of length `coherence`.
    pub fn overhead_slots(&self, coherence: u64) -> u64 {
        self.tau.min(coherence)
    }
}

/// Deferred acceptance with uplink surfaces proposing.
///
/// Every free uplink surface proposes down its preference list; a free
/// downlink surface accepts, an engaged one trades up only for a strictly
/// higher rate. Terminates after at most `L*M` proposals with a stable
/// matching; `tau` is the exact number of proposals made.
pub fn gale_shapley(prefs: &PriorityMatrices, r: &RateMatrix) -> Association {
    let l_count = r.rows();
    let m_count = r.cols();
    debug_assert_eq!(prefs.ur_pref.len(), l_count);

    let mut next_choice = vec![0usize; l_count];
    let mut partner_of_m: Vec<Option<usize>> = vec![None; m_count];
    let mut queue: VecDeque<usize> = (0..l_count).collect();
    let mut proposals = 0u64;

    while let Some(l) = queue.pop_front() {
        if next_choice[l] >= m_count {
            continue; // rejected everywhere; stays unmatched
        }
        let m = prefs.ur_pref[l][next_choice[l]];
        next_choice[l] += 1;
        proposals += 1;
        match partner_of_m[m] {
            None => partner_of_m[m] = Some(l),
            Some(incumbent) => {
                if r.at(l, m) > r.at(incumbent, m) {
                    partner_of_m[m] = Some(l);
                    queue.push_back(incumbent);
                } else {
                    queue.push_back(l);
                }
            }
        }
    }

    let mut pairs = vec![None; l_count];
    for (m, lopt) in partner_of_m.iter().enumerate() {
        if let Some(l) = lopt {
            pairs[*l] = Some(m);
        }
    }
    Association {
        pairs,
        tau: proposals,
        algorithm: Algorithm::GaleShapley,
    }
}

/// Exhaustive search over all `L!` permutations (requires `L = M <= cap`).
///
/// Permutations are enumerated in lexicographic order and a candidate
/// replaces the best only on a strictly larger sum, so the first maximal
/// permutation in lexicographic order wins. `tau` counts one slot per
/// evaluated permutation, `L!` in total.
pub fn exhaustive(r: &RateMatrix, cap: usize) -> Result<Association, AssocError> {
    let l_count = r.rows();
    if l_count != r.cols() {
        return Err(AssocError::NotSquare);
    }
    if l_count > cap {
        return Err(AssocError::TooLarge {
            size: l_count,
            cap,
        });
    }

    let mut perm: Vec<usize> = (0..l_count).collect();
    let mut best = perm.clone();
    let mut best_sum = perm_sum(r, &perm);
    let mut evaluated = 1u64;
    while next_permutation(&mut perm) {
        evaluated += 1;
        let s = perm_sum(r, &perm);
        if s > best_sum {
            best_sum = s;
            best.copy_from_slice(&perm);
        }
    }

    Association {
        pairs: best.into_iter().map(Some).collect(),
        tau: evaluated,
        algorithm: Algorithm::Exhaustive,
    }
    .pipe_ok()
}

impl Association {
    fn pipe_ok(self) -> Result<Association, AssocError> {
        Ok(self)
    }
}

fn perm_sum(r: &RateMatrix, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(l, &m)| r.at(l, m)).sum()
}

/// Lexicographic successor in place; false once the last permutation is
/// reached.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// One simultaneous round of best-rate proposals.
///
/// Every uplink surface targets its highest-rate downlink surface (ties to
/// the lower index). A surface receiving several proposals keeps one
/// uniformly at random; losers then take their best remaining choice in
/// uplink index order. `tau` is one slot per uplink surface.
pub fn greedy<R: Rng + ?Sized>(r: &RateMatrix, rng: &mut R) -> Association {
    let l_count = r.rows();
    let m_count = r.cols();
    let best_choice = |l: usize, taken: &[bool]| -> Option<usize> {
        (0..m_count)
            .filter(|&m| !taken[m])
            .max_by(|&a, &b| r.at(l, a).total_cmp(&r.at(l, b)).then(b.cmp(&a)))
    };

    let no_taken = vec![false; m_count];
    let mut proposals: Vec<Vec<usize>> = vec![Vec::new(); m_count];
    for l in 0..l_count {
        if let Some(m) = best_choice(l, &no_taken) {
            proposals[m].push(l);
        }
    }

    let mut pairs: Vec<Option<usize>> = vec![None; l_count];
    let mut taken = vec![false; m_count];
    let mut losers = Vec::new();
    for (m, cands) in proposals.iter().enumerate() {
        if cands.is_empty() {
            continue;
        }
        let winner = if cands.len() == 1 {
            cands[0]
        } else {
            cands[rng.random_range(0..cands.len())]
        };
        pairs[winner] = Some(m);
        taken[m] = true;
        losers.extend(cands.iter().copied().filter(|&l| l != winner));
    }
    losers.sort_unstable();
    for l in losers {
        if let Some(m) = best_choice(l, &taken) {
            pairs[l] = Some(m);
            taken[m] = true;
        }
    }

    Association {
        pairs,
        tau: l_count as u64,
        algorithm: Algorithm::Greedy,
    }
}

/// Uniform random partial permutation of size `min(L, M)`. `tau` is one
/// slot.
pub fn random_assoc<R: Rng + ?Sized>(l_count: usize, m_count: usize, rng: &mut R) -> Association {
    let mut ls: Vec<usize> = (0..l_count).collect();
    let mut ms: Vec<usize> = (0..m_count).collect();
    ls.shuffle(rng);
    ms.shuffle(rng);
    let mut pairs = vec![None; l_count];
    for (&l, &m) in ls.iter().zip(&ms) {
        pairs[l] = Some(m);
    }
    Association {
        pairs,
        tau: 1,
        algorithm: Algorithm::Random,
    }
}

/// Blocking-pair scan: a matching is stable when no unmatched pair
/// `(l, m)` offers a strictly higher rate to both sides than their current
/// partners (an unmatched side always prefers being matched).
pub fn is_stable(assoc: &Association, r: &RateMatrix) -> bool {
    let mut partner_of_m: Vec<Option<usize>> = vec![None; r.cols()];
    for (l, m) in assoc.matched() {
        partner_of_m[m] = Some(l);
    }
    for l in 0..r.rows() {
        for m in 0..r.cols() {
            if assoc.pairs[l] == Some(m) {
                continue;
            }
            let l_gains = match assoc.pairs[l] {
                None => true,
                Some(cur) => r.at(l, m) > r.at(l, cur),
            };
            if !l_gains {
                continue;
            }
            let m_gains = match partner_of_m[m] {
                None => true,
                Some(cur) => r.at(l, m) > r.at(cur, m),
            };
            if m_gains {
                return false;
            }
        }
    }
    true
}
