/// Whole-token match where `+` in `pattern` stands for any (possibly empty)
/// character run. Anchored at both ends.
pub fn term_matches(pattern: &str, token: &str) -> bool {
    let p = pattern.as_bytes();
    let t = token.as_bytes();
    let (mut pi, mut ti) = (0, 0);
    // Position of the last '+' seen and the token index it was tried against.
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == b'+' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == b'+')
}
