//! File-format ingestion: coefficient CSV files and short Weierstrass
//! coefficient files, plus the built-in curve table.

use lseries_core::global::{CoeffTable, CurveParams, GlobalError};

/// Curves known by name.
pub fn builtin_curve(name: &str) -> Option<CurveParams> {
    match name {
        "11a" | "11a1" => Some(CurveParams::eleven_a()),
        _ => None,
    }
}

/// Parse a coefficient file: a header line `# N=<conductor> w=<sign>`
/// followed by CSV lines `n,a_n`.  Rows may arrive in any order; gaps are
/// an error since every downstream sum is over a full initial segment.
pub fn parse_coeff_csv(text: &str) -> Result<CoeffTable, String> {
    let mut level: Option<u64> = None;
    let mut sign: Option<i8> = None;
    let mut rows: Vec<(usize, i64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some(v) = token.strip_prefix("N=") {
                    level =
                        Some(v.parse().map_err(|_| format!("line {line}: bad conductor `{v}`"))?);
                } else if let Some(v) = token.strip_prefix("w=") {
                    let w: i64 =
                        v.parse().map_err(|_| format!("line {line}: bad sign `{v}`"))?;
                    sign = Some(w as i8);
                }
            }
            continue;
        }
        let Some((n, an)) = body.split_once(',') else {
            return Err(format!("line {line}: expected `n,a_n`, got `{body}`"));
        };
        let n: usize =
            n.trim().parse().map_err(|_| format!("line {line}: bad index `{n}`"))?;
        let an: i64 =
            an.trim().parse().map_err(|_| format!("line {line}: bad coefficient `{an}`"))?;
        rows.push((n, an));
    }
    let level = level.ok_or("missing `# N=<conductor> w=<sign>` header")?;
    let sign = sign.ok_or("missing `w=<sign>` in the header")?;
    let n_max = rows.iter().map(|r| r.0).max().ok_or("no coefficient rows")?;
    let mut a = vec![None; n_max + 1];
    for (n, an) in rows {
        if n == 0 {
            return Err("coefficient rows start at n = 1".to_string());
        }
        if a[n].replace(an).is_some() {
            return Err(format!("duplicate row for n = {n}"));
        }
    }
    let mut dense = Vec::with_capacity(n_max + 1);
    dense.push(0);
    for (n, slot) in a.iter().enumerate().skip(1) {
        match slot {
            Some(v) => dense.push(*v),
            None => return Err(format!("missing row for n = {n}")),
        }
    }
    CoeffTable::from_parts(level, sign, dense).map_err(|e: GlobalError| e.to_string())
}

/// Render a table back out in the same format (used by `lp --emit-coeffs`
/// style tooling and the round-trip test).
pub fn coeff_csv(table: &CoeffTable) -> String {
    let mut out = format!("# N={} w={}\n", table.level(), table.root_number());
    for n in 1..=table.n_max() {
        out.push_str(&format!("{},{}\n", n, table.coeff(n as u64).expect("in range")));
    }
    out
}

/// Parse a curve file: one line `a1,a2,a3,a4,a6`.  The conductor and sign
/// are not derivable from the coefficients here, so they arrive as flags.
pub fn parse_curve_file(
    text: &str,
    conductor: u64,
    root_number: i8,
) -> Result<CurveParams, String> {
    let body = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or("empty curve file")?;
    let parts: Vec<&str> = body.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(format!("expected `a1,a2,a3,a4,a6`, got `{body}`"));
    }
    let mut a = [0i64; 5];
    for (slot, part) in a.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| format!("bad coefficient `{part}`"))?;
    }
    let curve = CurveParams {
        a1: a[0],
        a2: a[1],
        a3: a[2],
        a4: a[3],
        a6: a[4],
        conductor,
        root_number,
    };
    curve.validate().map_err(|e| e.to_string())?;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lseries_core::global::GlobalContext;

    #[test]
    fn coeff_csv_round_trip() {
        let table = CoeffTable::from_curve(&CurveParams::eleven_a(), 60).unwrap();
        let text = coeff_csv(&table);
        let back = parse_coeff_csv(&text).unwrap();
        assert_eq!(back.level(), 11);
        assert_eq!(back.root_number(), 1);
        assert_eq!(back.n_max(), 60);
        for n in 1..=60u64 {
            assert_eq!(back.coeff(n).unwrap(), table.coeff(n).unwrap());
        }
    }

    #[test]
    fn csv_rejects_gaps_duplicates_and_missing_header() {
        assert!(parse_coeff_csv("1,1\n2,-2\n").is_err());
        assert!(parse_coeff_csv("# N=11 w=1\n1,1\n3,-1\n").is_err());
        assert!(parse_coeff_csv("# N=11 w=1\n1,1\n2,-2\n2,-2\n").is_err());
        assert!(parse_coeff_csv("# N=11 w=1\n0,0\n").is_err());
    }

    #[test]
    fn ingested_table_drives_the_measure_layer() {
        let table = CoeffTable::from_curve(&CurveParams::eleven_a(), 400).unwrap();
        let back = parse_coeff_csv(&coeff_csv(&table)).unwrap();
        let ctx = GlobalContext::from_coeffs(back, 11, 6).unwrap();
        assert_eq!(
            ctx.alpha().reduction,
            lseries_core::global::Reduction::SplitMult
        );
    }

    #[test]
    fn curve_file_needs_five_entries() {
        assert!(parse_curve_file("0,-1,1,-10", 11, 1).is_err());
        let c = parse_curve_file("0,-1,1,-10,-20\n", 11, 1).unwrap();
        assert_eq!(c.discriminant(), -161051);
    }
}
