use backaction_core::schemes::QUBIT_LABELS;

use crate::run::{CliError, RunRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal, exponent form for very small or large magnitudes; `-0` prints as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{x:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `# backaction-sim <version>; key=value; ...`
pub fn meta_line(pairs: &[(&str, String)]) -> String {
    let mut s = format!("# backaction-sim {VERSION}");
    for (k, v) in pairs {
        s.push_str(&format!("; {k}={v}"));
    }
    s
}

pub const RECORD_COLUMNS: [&str; 25] = [
    "scheme[-]",
    "p0[1]",
    "phase[deg]",
    "theta[deg]",
    "lambda[1]",
    "P00[1]",
    "P01[1]",
    "P10[1]",
    "P11[1]",
    "se_P00[1]",
    "se_P01[1]",
    "se_P10[1]",
    "se_P11[1]",
    "P0p[1]",
    "P1p[1]",
    "Pid0p[1]",
    "Pid1p[1]",
    "F[1]",
    "se_F[1]",
    "counts[photons]",
    "W[energy]",
    "W_tpm[energy]",
    "W_cm[energy]",
    "C_l1[1]",
    "C_U[1]",
];

/// One row per scheme result.
pub fn record_rows(r: &RunRecord) -> Vec<Vec<String>> {
    r.results
        .iter()
        .map(|s| {
            let mut row = vec![s.scheme.to_string(), num(r.p0), num(r.phase_deg), num(r.theta_deg), opt(s.lambda)];
            row.extend(QUBIT_LABELS.iter().map(|l| num(s.table.get(*l))));
            row.extend(QUBIT_LABELS.iter().map(|l| opt(s.std_err.as_ref().map(|e| e[l]))));
            row.extend((0..2).map(|j| num(s.final_marginal.get(j).copied().unwrap_or(0.0))));
            row.extend((0..2).map(|j| num(r.ideal_final[j])));
            row.push(num(s.fidelity));
            row.push(opt(s.fidelity_err));
            row.push(s.counts.map(|c| c.to_string()).unwrap_or_default());
            row.extend([r.work.unmeasured, r.work.tpm, r.work.cm, r.coherence_l1, r.cohering_power].map(num));
            row
        })
        .collect()
}

/// Comma-separated, LF line endings, metadata comment first, then the header.
pub fn to_csv(meta: &str, header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io { path: "<csv>".into(), message: e.to_string() };
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), message: e.to_string() })?;
    Ok(format!("{meta}\n{}", String::from_utf8(body).expect("csv of UTF-8 fields")))
}

pub fn emit(text: &str, path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(5.551115123125783e-17), "5.551115123125783e-17");
        assert_eq!(num(1e20), "1e20");
        for x in [0.1, 1e-300, 123.456, -7.25e-9] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let text = to_csv("# m", &["a[1]".into(), "b[deg]".into()], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(text, "# m\na[1],b[deg]\n1,\"x,y\"\n");
    }
}
