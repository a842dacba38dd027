use super::ast::QueryAst;
use super::wildcard::term_matches;

/// A contiguous token range matched by a query, plus the token positions that
/// satisfied its `Term` leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchSpan {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    /// Sorted, distinct, all within `start..=end`.
    pub witnesses: Vec<usize>,
}

impl MatchSpan {
    fn single(i: usize) -> Self {
        MatchSpan {
            start: i,
            end: i,
            witnesses: vec![i],
        }
    }

    /// Tokens strictly between the two spans; 0 when adjacent or overlapping.
    pub fn gap(&self, other: &MatchSpan) -> usize {
        if self.end < other.start {
            other.start - self.end - 1
        } else if other.end < self.start {
            self.start - other.end - 1
        } else {
            0
        }
    }

    fn shares_witness(&self, other: &MatchSpan) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.witnesses.len() && j < other.witnesses.len() {
            match self.witnesses[i].cmp(&other.witnesses[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    fn hull(&self, other: &MatchSpan) -> MatchSpan {
        let mut witnesses = Vec::with_capacity(self.witnesses.len() + other.witnesses.len());
        witnesses.extend_from_slice(&self.witnesses);
        witnesses.extend_from_slice(&other.witnesses);
        witnesses.sort_unstable();
        MatchSpan {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            witnesses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchResult {
    pub count: usize,
    /// Sorted by start, pairwise non-overlapping.
    pub spans: Vec<MatchSpan>,
}

/// Every distinct way the query can be satisfied, sorted by
/// `(start, end, witnesses)`.
///
/// The two sides of a proximity match never share a token.
pub fn candidate_spans<S: AsRef<str>>(ast: &QueryAst, tokens: &[S]) -> Vec<MatchSpan> {
    let mut spans = match ast {
        QueryAst::Term(pattern) => tokens
            .iter()
            .enumerate()
            .filter(|(_, tok)| term_matches(pattern, tok.as_ref()))
            .map(|(i, _)| MatchSpan::single(i))
            .collect(),
        QueryAst::Or(alts) => alts
            .iter()
            .flat_map(|alt| candidate_spans(alt, tokens))
            .collect(),
        QueryAst::Prox {
            distance,
            left,
            right,
        } => {
            let lhs = candidate_spans(left, tokens);
            if lhs.is_empty() {
                return lhs;
            }
            let rhs = candidate_spans(right, tokens);
            let n = *distance as usize;
            let mut out = Vec::new();
            for a in &lhs {
                // Right-hand spans starting past this bound are too far right.
                let limit = a.end.saturating_add(n + 1);
                let upto = rhs.partition_point(|b| b.start <= limit);
                for b in &rhs[..upto] {
                    if a.gap(b) <= n && !a.shares_witness(b) {
                        out.push(a.hull(b));
                    }
                }
            }
            out
        }
    };
    spans.sort_unstable();
    spans.dedup();
    spans
}

/// Leftmost-greedy selection of non-overlapping candidates, stopping after
/// `limit` picks.
fn select_greedy(candidates: Vec<MatchSpan>, limit: usize) -> Vec<MatchSpan> {
    let mut picked: Vec<MatchSpan> = Vec::new();
    for span in candidates {
        if picked.len() >= limit {
            break;
        }
        if picked.last().is_none_or(|last| span.start > last.end) {
            picked.push(span);
        }
    }
    picked
}

pub fn evaluate<S: AsRef<str>>(ast: &QueryAst, tokens: &[S]) -> MatchResult {
    let spans = select_greedy(candidate_spans(ast, tokens), usize::MAX);
    MatchResult {
        count: spans.len(),
        spans,
    }
}

/// Greedy match count, stopping once `limit` matches are found.
pub fn count_up_to<S: AsRef<str>>(ast: &QueryAst, tokens: &[S], limit: usize) -> usize {
    select_greedy(candidate_spans(ast, tokens), limit).len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("match threshold k must be at least 1")]
pub struct ZeroThreshold;

/// True iff the query matches at least `k` times.
pub fn count_at_least<S: AsRef<str>>(
    ast: &QueryAst,
    tokens: &[S],
    k: usize,
) -> Result<bool, ZeroThreshold> {
    if k == 0 {
        return Err(ZeroThreshold);
    }
    Ok(count_up_to(ast, tokens, k) >= k)
}
