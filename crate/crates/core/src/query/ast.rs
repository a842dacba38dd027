use std::fmt;

/// Parsed keyword query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryAst {
    /// Whole-token wildcard pattern; `+` stands for any (possibly empty) run
    /// of characters.
    Term(String),
    /// Order-free proximity: at most `distance` tokens between the two sides.
    Prox {
        distance: u32,
        left: Box<QueryAst>,
        right: Box<QueryAst>,
    },
    /// Any of two or more alternatives.
    Or(Vec<QueryAst>),
}

impl QueryAst {
    pub fn term(pattern: impl Into<String>) -> Self {
        QueryAst::Term(pattern.into())
    }

    pub fn prox(distance: u32, left: QueryAst, right: QueryAst) -> Self {
        QueryAst::Prox {
            distance,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn or(alternatives: Vec<QueryAst>) -> Self {
        debug_assert!(alternatives.len() >= 2);
        QueryAst::Or(alternatives)
    }

    pub fn depth(&self) -> usize {
        match self {
            QueryAst::Term(_) => 1,
            QueryAst::Prox { left, right, .. } => 1 + left.depth().max(right.depth()),
            QueryAst::Or(alts) => 1 + alts.iter().map(QueryAst::depth).max().unwrap_or(0),
        }
    }

    /// Number of `Term` leaves.
    pub fn leaf_count(&self) -> usize {
        match self {
            QueryAst::Term(_) => 1,
            QueryAst::Prox { left, right, .. } => left.leaf_count() + right.leaf_count(),
            QueryAst::Or(alts) => alts.iter().map(QueryAst::leaf_count).sum(),
        }
    }

    /// S-expression form, e.g. `(prox 4 green+ plastic+)`.
    pub fn to_sexpr(&self) -> String {
        match self {
            QueryAst::Term(p) => p.clone(),
            QueryAst::Prox {
                distance,
                left,
                right,
            } => format!("(prox {distance} {} {})", left.to_sexpr(), right.to_sexpr()),
            QueryAst::Or(alts) => {
                let inner: Vec<_> = alts.iter().map(QueryAst::to_sexpr).collect();
                format!("(or {})", inner.join(" "))
            }
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term(p) => f.write_str(p),
            _ => write!(f, "({self})"),
        }
    }
}

/// Canonical query syntax. Every composite operand of a proximity operator
/// and every nested `or` is parenthesized, so printing then parsing yields the
/// same tree.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term(p) => f.write_str(p),
            QueryAst::Prox {
                distance,
                left,
                right,
            } => {
                left.fmt_operand(f)?;
                write!(f, " {distance}d ")?;
                right.fmt_operand(f)
            }
            QueryAst::Or(alts) => {
                for (i, alt) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or ")?;
                    }
                    match alt {
                        QueryAst::Or(_) => write!(f, "({alt})")?,
                        _ => write!(f, "{alt}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
