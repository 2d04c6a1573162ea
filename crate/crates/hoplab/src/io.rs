//! Deterministic text output: fixed 12-significant-digit numbers and the CSV
//! schemas shared by the library and the command line tool.

use crate::engine::{EventRecord, Trajectory};

/// Format with exactly 12 significant digits. Positional notation for
/// moderate magnitudes, scientific otherwise; the mapping from value to text
/// is a pure function of the bits, so repeated runs are byte-identical.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Round to 12 significant digits once, then typeset from the digit string.
    let sci = format!("{x:.11e}");
    let (mant, exp_str) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp_str.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    if (-4..12).contains(&exp) {
        if exp >= 0 {
            let int_len = (exp + 1) as usize;
            s.push_str(&digits[..int_len]);
            let frac = digits[int_len..].trim_end_matches('0');
            if !frac.is_empty() {
                s.push('.');
                s.push_str(frac);
            }
        } else {
            s.push_str("0.");
            for _ in 0..(-exp - 1) {
                s.push('0');
            }
            s.push_str(digits.trim_end_matches('0'));
        }
    } else {
        s.push_str(&digits[..1]);
        let frac = digits[1..].trim_end_matches('0');
        if !frac.is_empty() {
            s.push('.');
            s.push_str(frac);
        }
        s.push('e');
        s.push_str(&exp.to_string());
    }
    s
}

/// Trajectory rows as CSV: `t,chi,chidot,phase`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,chi,chidot,phase\n");
    for s in &traj.samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(s.t),
            fmt_sig(s.chi),
            fmt_sig(s.chidot),
            s.phase.as_str()
        ));
    }
    out
}

/// Event rows as CSV: `kind,t,chi,chidot,hop_index`.
pub fn events_csv(events: &[EventRecord]) -> String {
    let mut out = String::from("kind,t,chi,chidot,hop_index\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.kind.as_str(),
            fmt_sig(e.t),
            fmt_sig(e.chi),
            fmt_sig(e.chidot),
            e.hop_index
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_is_stable_and_12_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.18), "0.18");
        assert_eq!(fmt_sig(-9.81), "-9.81");
        assert_eq!(fmt_sig(0.154444847791), "0.154444847791");
        // 12 significant digits of pi.
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(1.0e-7), "1e-7");
        assert_eq!(fmt_sig(1234567890123456.0), "1.23456789012e15");
    }

    #[test]
    fn fmt_sig_roundtrip_is_idempotent() {
        for &x in &[0.123456789012345, 9.81, 1.0 / 3.0, 2.4299368216426327, 1e-3, 5.5] {
            let s1 = fmt_sig(x);
            let back: f64 = s1.parse().unwrap();
            assert_eq!(fmt_sig(back), s1, "x={x}");
        }
    }
}
