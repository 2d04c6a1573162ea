//! Moving-median smoothing of one CSV column, preserving every other column
//! byte for byte.

use anyhow::{anyhow, bail, Result};

use hoplab::analysis::moving_median;
use hoplab::io::fmt_sig;

pub fn smooth_csv(text: &str, column: &str, window: usize) -> Result<String> {
    if window == 0 {
        bail!("window must be >= 1");
    }
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))?;
    let names: Vec<&str> = header.split(',').collect();
    let col = names
        .iter()
        .position(|&n| n == column)
        .ok_or_else(|| anyhow!("column `{column}` not found (have: {})", header))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != names.len() {
            bail!("row {}: expected {} fields, got {}", i + 1, names.len(), fields.len());
        }
        let v: f64 = fields[col]
            .parse()
            .map_err(|_| anyhow!("row {}: `{}` in column `{column}` is not numeric", i + 1, fields[col]))?;
        values.push(v);
        rows.push(fields);
    }
    let smoothed = moving_median(&values, window);
    let mut out = String::with_capacity(text.len());
    out.push_str(header);
    out.push('\n');
    for (fields, v) in rows.iter_mut().zip(&smoothed) {
        fields[col] = fmt_sig(*v);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooths_only_the_named_column() {
        let csv = "t,chi,phase\n0,1,stance\n0.1,2,stance\n0.2,3,stance\n0.3,100,flight\n0.4,5,flight\n";
        let out = smooth_csv(csv, "chi", 3).unwrap();
        let got: Vec<&str> = out.lines().collect();
        assert_eq!(got[0], "t,chi,phase");
        assert_eq!(got[1], "0,1.5,stance");
        assert_eq!(got[4], "0.3,5,flight");
        assert_eq!(got[5], "0.4,52.5,flight");
    }

    #[test]
    fn window_one_is_numerically_identity() {
        let csv = "a,b\n1.25,0.154444847791\n-3,9.81\n";
        let out = smooth_csv(csv, "b", 1).unwrap();
        assert_eq!(out, csv);
    }

    #[test]
    fn errors_name_the_problem() {
        let csv = "a,b\n1,2\n";
        assert!(smooth_csv(csv, "c", 3).unwrap_err().to_string().contains("column `c`"));
        let bad = "a,b\n1,x\n";
        let err = smooth_csv(bad, "b", 3).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
    }
}
