//! Plain-text reports: `key=value` blocks with `#` comment headers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::permutation::TestResult;
use crate::Result;

/// Renders a result as `key=value` lines after `# ` header comments.
/// `extra` pairs (such as timing) are appended last.
pub fn format_report(result: &TestResult, header: &[String], extra: &[(String, String)]) -> String {
    let mut out = String::new();
    for line in header {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "method={}", result.method).unwrap();
    writeln!(out, "statistic={}", result.statistic).unwrap();
    writeln!(out, "p_value={}", result.p_value).unwrap();
    for (k, v) in result.params.iter().chain(extra) {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

/// Parses a `key=value` block, skipping comments and blank lines.
pub fn parse_report(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// One permuted statistic per row, indexed by replicate.
pub fn write_permuted_csv(result: &TestResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["replicate", "statistic"])?;
    for (b, t) in result.permuted_stats.iter().flatten().enumerate() {
        w.write_record([b.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_through_parser() {
        let res = TestResult {
            method: "dw".into(),
            statistic: 61.25,
            p_value: 1.0 / 201.0,
            replicates: 200,
            permuted_stats: None,
            params: vec![("B".into(), "200".into()), ("seed".into(), "7".into())],
        };
        let text = format_report(&res, &["version 0.1.0".into()], &[("wall_time".into(), "0.5".into())]);
        assert!(text.starts_with("# version 0.1.0\n"));
        let kv = parse_report(&text);
        assert_eq!(kv["method"], "dw");
        assert_eq!(kv["p_value"].parse::<f64>().unwrap(), 1.0 / 201.0);
        assert_eq!(kv["B"], "200");
        assert_eq!(kv["wall_time"], "0.5");
    }
}
