//! Text decoders for command-line and file inputs.

use serde::Deserialize;

use crate::elliptic::{EllipticContext, C, DEFAULT_TERMS};
use crate::error::{LameError, Result};

fn bad(what: &str, s: &str) -> LameError {
    LameError::Domain(format!("cannot parse {what} from {s:?}"))
}

fn real(s: &str, what: &str, whole: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(what, whole))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(what, whole))
    }
}

/// Parse `A+Bi`, `A-Bi`, `Bi`, `A`, `i`, `-i` (also `j` and `I`).
pub fn parse_complex(s: &str) -> Result<C> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() || t.len() > 128 {
        return Err(bad("complex number", s));
    }
    let Some(body) = t.strip_suffix(['i', 'j', 'I']) else {
        return Ok(C::new(real(&t, "complex number", s)?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => real(x, "complex number", s)?,
    };
    let re = if re.is_empty() { 0.0 } else { real(re, "complex number", s)? };
    Ok(C::new(re, im))
}

/// Comma-separated level labels, e.g. `0,2,4,6`.
pub fn parse_labels(s: &str) -> Result<Vec<usize>> {
    let labels = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| bad("label list", s)))
        .collect::<Result<Vec<_>>>()?;
    if labels.is_empty() || labels.iter().any(|&l| l > 1000) {
        return Err(bad("label list", s));
    }
    let mut sorted = labels.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != labels.len() {
        return Err(LameError::Domain(format!("repeated label in {s:?}")));
    }
    Ok(labels)
}

/// `a,b,z0,z1` for the Hermite reduction check; each entry may be complex.
pub fn parse_hermite(s: &str) -> Result<[C; 4]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(bad("a,b,z0,z1", s));
    }
    let mut out = [C::new(0.0, 0.0); 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_complex(p)?;
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ContextJson {
    tau: C,
    truncation_terms: Option<usize>,
    g2: Option<C>,
    g3: Option<C>,
    eta1: Option<C>,
}

/// Rebuild an [`EllipticContext`] from its JSON form.  Only `tau` (and
/// optionally `truncation_terms`) is trusted; any `g2`, `g3`, `eta1` present
/// must agree with the recomputed values.
pub fn decode_context(json: &str) -> Result<EllipticContext> {
    let raw: ContextJson = serde_json::from_str(json).map_err(|e| LameError::Domain(format!("context JSON: {e}")))?;
    let terms = raw.truncation_terms.unwrap_or(DEFAULT_TERMS);
    if !(8..=4096).contains(&terms) {
        return Err(LameError::Domain(format!("truncation_terms {terms} out of range")));
    }
    let ctx = EllipticContext::with_terms(raw.tau, terms)?;
    for (name, given, have) in [("g2", raw.g2, ctx.g2), ("g3", raw.g3, ctx.g3), ("eta1", raw.eta1, ctx.eta1)] {
        if let Some(g) = given {
            if (g - have).norm() > 1e-9 * (1.0 + have.norm()) {
                return Err(LameError::Consistency(format!("{name} = {g} does not match tau (expected {have})")));
            }
        }
    }
    Ok(ctx)
}
