//! Reading allocations back from the CSV that `emit_allocation` writes.

use crate::fairness::{AllocationVector, FairnessPolicy};
use crate::rate::Rate;
use crate::topology::SourceId;

use super::ParseError;

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Parse an allocation CSV: a `policy,<source>,...` header followed by one
/// row per policy. The row for `policy` is taken, or the first row when
/// `policy` is `None`. `sum:` columns are ignored; blank lines and `#`
/// comments are skipped.
pub fn parse_allocation(text: &str, policy: Option<FairnessPolicy>) -> Result<AllocationVector, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| err(1, "empty allocation file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"policy") {
        return Err(err(header_line, "header must start with `policy`"));
    }

    let mut chosen = None;
    for (no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(err(
                no,
                format!("expected {} fields, found {}", columns.len(), cells.len()),
            ));
        }
        let row_policy: FairnessPolicy = cells[0].parse().map_err(|e| err(no, format!("{e}")))?;
        if policy.is_none_or(|p| p == row_policy) {
            chosen = Some((no, cells));
            break;
        }
    }
    let (no, cells) = chosen.ok_or_else(|| {
        let wanted = policy.map_or("any policy".to_string(), |p| format!("policy {p}"));
        err(header_line, format!("no row for {wanted}"))
    })?;

    let mut pairs = Vec::new();
    for (name, value) in columns.iter().zip(&cells).skip(1) {
        if name.starts_with("sum:") {
            continue;
        }
        let rate: Rate = value.parse().map_err(|e| err(no, format!("{name}: {e}")))?;
        pairs.push((SourceId::from(*name), rate));
    }
    Ok(AllocationVector::new(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::compare_policies;
    use crate::scenario::{builtin_scenario, emit_allocation, OutputFormat};

    #[test]
    fn emitted_csv_reads_back() {
        let net = builtin_scenario("example2").unwrap().network().unwrap();
        let comparison = compare_policies(&net);
        let text = emit_allocation(&comparison, OutputFormat::Csv, true);
        for row in &comparison.rows {
            assert_eq!(parse_allocation(&text, Some(row.policy)).unwrap(), row.allocation);
        }
        assert_eq!(
            parse_allocation(&text, None).unwrap(),
            comparison.rows[0].allocation
        );
    }

    #[test]
    fn single_policy_file_with_decimals() {
        let text = "# hand edited\npolicy,S1,S2\nvc-flow,12.5,50/3\n";
        let alloc = parse_allocation(text, None).unwrap();
        assert_eq!(alloc.rate(&SourceId::from("S2")), Some(&Rate::new(50, 3)));
        assert_eq!(alloc.rate(&SourceId::from("S1")), Some(&Rate::new(25, 2)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_allocation("policy,S1\n\nsource,abc\n", None).unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_allocation("policy,S1\nsource,1\n", Some(FairnessPolicy::VcFlow)).unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_allocation("S1,S2\n", None).is_err());
    }
}
