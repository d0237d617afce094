use std::fmt::Write;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use super::Scenario;
use crate::fairness::{AllocationVector, PolicyComparison};
use crate::sim::{ProbeRow, SimulationResult};
use crate::topology::{Endpoint, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Aligned columns, rates rounded half-up to two decimals.
    Table,
    /// Comma-separated, exact rates as `p/q`.
    Csv,
    /// One JSON object per line, exact rates as `p/q` strings.
    JsonLines,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown output format `{0}` (expected table, csv or json-lines)")]
pub struct UnknownFormat(pub String);

impl FromStr for OutputFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" => Ok(OutputFormat::JsonLines),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for line in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Emit per-source rates, one row per policy. With `vc_sums`, per-VC
/// totals follow as `sum:<vc>` columns. A comparison without sources emits
/// only the header.
pub fn emit_allocation(comparison: &PolicyComparison, format: OutputFormat, vc_sums: bool) -> String {
    let mut header = vec!["policy".to_string()];
    header.extend(comparison.sources.iter().map(|s| s.to_string()));
    if vc_sums {
        header.extend(comparison.vcs.iter().map(|v| format!("sum:{v}")));
    }
    let rows: Vec<&_> = if comparison.sources.is_empty() {
        Vec::new()
    } else {
        comparison.rows.iter().collect()
    };

    if format == OutputFormat::JsonLines {
        let mut out = String::new();
        for row in rows {
            let rates: Map<String, Value> = row
                .allocation
                .iter()
                .map(|(s, r)| (s.to_string(), Value::String(r.to_fraction_string())))
                .collect();
            let mut obj = json!({ "policy": row.policy.name(), "rates": rates });
            if vc_sums {
                let sums: Map<String, Value> = row
                    .vc_sums
                    .iter()
                    .map(|(v, r)| (v.to_string(), Value::String(r.to_fraction_string())))
                    .collect();
                obj["vc_sums"] = Value::Object(sums);
            }
            let _ = writeln!(out, "{obj}");
        }
        return out;
    }

    let render = |r: &crate::rate::Rate| match format {
        OutputFormat::Table => r.to_decimal_2(),
        _ => r.to_fraction_string(),
    };
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.policy.name().to_string()];
            cells.extend(
                comparison
                    .sources
                    .iter()
                    .map(|s| row.allocation.rate(s).map(render).unwrap_or_default()),
            );
            if vc_sums {
                cells.extend(row.vc_sums.iter().map(|(_, r)| render(r)));
            }
            cells
        })
        .collect();
    match format {
        OutputFormat::Table => table(&header, &body),
        _ => csv(&header, &body),
    }
}

/// Emit the flow count and flows of every link fed by a switch.
pub fn emit_flows(network: &Network, format: OutputFormat) -> String {
    let mut out = String::new();
    let mut rows = Vec::new();
    for link in network.topology().links() {
        let Endpoint::Switch { switch, port } = &link.from else {
            continue;
        };
        let flows = network.flows_at(switch, *port);
        rows.push((link, flows));
    }
    match format {
        OutputFormat::Table => {
            for (link, flows) in rows {
                let detail: Vec<String> = flows
                    .iter()
                    .map(|f| {
                        let members: Vec<&str> = f.members.iter().map(|s| s.as_str()).collect();
                        format!("{}@{}:{}{{{}}}", f.vc, f.switch, f.in_port, members.join(","))
                    })
                    .collect();
                let _ = writeln!(out, "{}: {}  {}", link.id, flows.len(), detail.join(" "));
            }
            out = out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n");
            if !out.is_empty() {
                out.push('\n');
            }
        }
        OutputFormat::Csv => {
            out.push_str("link,flows,vc,switch,in_port,sources\n");
            for (link, flows) in rows {
                for f in &flows {
                    let members: Vec<&str> = f.members.iter().map(|s| s.as_str()).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        link.id,
                        flows.len(),
                        f.vc,
                        f.switch,
                        f.in_port,
                        members.join(";")
                    );
                }
            }
        }
        OutputFormat::JsonLines => {
            for (link, flows) in rows {
                let flows_json: Vec<Value> = flows
                    .iter()
                    .map(|f| {
                        json!({
                            "vc": f.vc.as_str(),
                            "switch": f.switch.as_str(),
                            "in_port": f.in_port,
                            "sources": f.members.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let obj = json!({ "link": link.id.as_str(), "count": flows.len(), "flows": flows_json });
                let _ = writeln!(out, "{obj}");
            }
        }
    }
    out
}

/// Serialize a scenario in the text format `parse_scenario` reads.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let topo = &scenario.topology;
    let mut out = String::new();
    for s in &topo.switches {
        let _ = writeln!(out, "switch {s}");
    }
    for l in &topo.links {
        let _ = writeln!(
            out,
            "link {} {} {} {}",
            l.id,
            l.from,
            l.to,
            l.capacity.to_fraction_string()
        );
    }
    for vc in &topo.vcs {
        let sources: Vec<&str> = vc.sources.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(
            out,
            "vc {} dst {} sources {}",
            vc.id,
            vc.destination,
            sources.join(",")
        );
    }
    for vc in &topo.vcs {
        for r in &vc.routes {
            let _ = writeln!(
                out,
                "route {} {} {} -> {}",
                vc.id, r.switch, r.in_port, r.out_port
            );
        }
    }
    for p in &scenario.params {
        match &p.source {
            Some(s) => {
                let _ = writeln!(out, "param {}.{} {}", p.key, s, p.value);
            }
            None => {
                let _ = writeln!(out, "param {} {}", p.key, p.value);
            }
        }
    }
    out
}

/// Feedback delay per merge algorithm and depth.
pub fn emit_probe(rows: &[ProbeRow], format: OutputFormat) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
    match format {
        OutputFormat::JsonLines => {
            let mut out = String::new();
            for r in rows {
                let obj = json!({
                    "algorithm": r.algorithm.name(),
                    "levels": r.levels,
                    "brm_rtt_us": r.brm_rtt_us,
                    "feedback_age_us": r.feedback_age_us,
                });
                let _ = writeln!(out, "{obj}");
            }
            out
        }
        _ => {
            let header: Vec<String> = ProbeRow::CSV_HEADER.split(',').map(str::to_string).collect();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.algorithm.name().to_string(),
                        r.levels.to_string(),
                        num(r.brm_rtt_us),
                        num(r.feedback_age_us),
                    ]
                })
                .collect();
            if format == OutputFormat::Table {
                table(&header, &body)
            } else {
                csv(&header, &body)
            }
        }
    }
}

/// Steady-state rates of a simulation, optionally beside the centralized
/// allocation they should approach. Under VP merge, per-source rates
/// measured at switch ports follow.
pub fn emit_simulation_summary(
    result: &SimulationResult,
    expected: Option<&AllocationVector>,
    format: OutputFormat,
) -> String {
    let header: Vec<String> = ["source", "rate_mbps", "amplitude", "expected_mbps", "error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    if let Some(steady) = &result.steady {
        for s in &steady.sources {
            let target = expected.and_then(|a| a.rate(&s.source)).map(|r| r.to_f64());
            let error = target.map(|t| (s.mean_rate - t) / t);
            rows.push((s, target, error));
        }
    }
    let num = |v: f64, digits: usize| format!("{v:.digits$}");
    let mut out = String::new();
    match format {
        OutputFormat::JsonLines => {
            for (s, target, error) in &rows {
                let obj = json!({
                    "source": s.source.as_str(),
                    "rate_mbps": s.mean_rate,
                    "amplitude": s.amplitude,
                    "expected_mbps": target,
                    "error": error,
                });
                let _ = writeln!(out, "{obj}");
            }
            for r in &result.vp_source_rates {
                let obj = json!({
                    "switch": r.switch.as_str(),
                    "port": r.port,
                    "source": r.source.as_str(),
                    "measured_mbps": r.rate,
                });
                let _ = writeln!(out, "{obj}");
            }
        }
        _ => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|(s, target, error)| {
                    vec![
                        s.source.to_string(),
                        num(s.mean_rate, 3),
                        num(s.amplitude, 4),
                        target.map(|t| num(t, 3)).unwrap_or_default(),
                        error.map(|e| num(e, 4)).unwrap_or_default(),
                    ]
                })
                .collect();
            let vp_header: Vec<String> = ["switch", "port", "source", "measured_mbps"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let vp_body: Vec<Vec<String>> = result
                .vp_source_rates
                .iter()
                .map(|r| {
                    vec![
                        r.switch.to_string(),
                        r.port.to_string(),
                        r.source.to_string(),
                        num(r.rate, 3),
                    ]
                })
                .collect();
            let emit = if format == OutputFormat::Table { table } else { csv };
            out.push_str(&emit(&header, &body));
            if !vp_body.is_empty() {
                out.push('\n');
                out.push_str(&emit(&vp_header, &vp_body));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{water_fill, FairnessPolicy};
    use crate::scenario::{builtin_scenario, parse_scenario};

    fn single(name: &str, policy: FairnessPolicy) -> PolicyComparison {
        let net = builtin_scenario(name).unwrap().network().unwrap();
        let (alloc, _) = water_fill(&net, policy);
        PolicyComparison::single(&net, policy, alloc)
    }

    #[test]
    fn table_rounds_to_two_decimals() {
        let out = emit_allocation(
            &single("example2", FairnessPolicy::FlowBased),
            OutputFormat::Table,
            false,
        );
        let row: Vec<&str> = out.lines().nth(1).unwrap().split_whitespace().collect();
        assert_eq!(row, vec!["flow", "16.67", "16.67", "41.67", "75.00", "16.67"]);
    }

    #[test]
    fn csv_keeps_exact_fractions() {
        let out = emit_allocation(
            &single("example2", FairnessPolicy::FlowBased),
            OutputFormat::Csv,
            false,
        );
        assert_eq!(out, "policy,S1,S2,S3,S4,SA\nflow,50/3,50/3,125/3,75,50/3\n");
    }

    #[test]
    fn json_lines_carry_fractions() {
        let out = emit_allocation(
            &single("example1", FairnessPolicy::VcFlow),
            OutputFormat::JsonLines,
            true,
        );
        let v: Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["rates"]["S1"], "75/4");
        assert_eq!(v["vc_sums"]["A"], "75");
    }

    #[test]
    fn no_sources_gives_header_only() {
        let empty = PolicyComparison {
            sources: vec![],
            vcs: vec![],
            rows: vec![],
        };
        assert_eq!(emit_allocation(&empty, OutputFormat::Csv, true), "policy\n");
        assert_eq!(emit_allocation(&empty, OutputFormat::Table, true), "policy\n");
    }

    #[test]
    fn flows_table_lists_counts() {
        let net = builtin_scenario("example1").unwrap().network().unwrap();
        let out = emit_flows(&net, OutputFormat::Table);
        assert!(out.lines().any(|l| l.starts_with("LINK3: 3")), "{out}");
    }

    #[test]
    fn builtin_scenarios_round_trip() {
        for name in crate::scenario::BUILTIN_NAMES {
            let s = builtin_scenario(name).unwrap();
            assert_eq!(parse_scenario(&emit_scenario(&s)).unwrap(), s);
        }
    }

    #[test]
    fn probe_rows_as_csv() {
        use crate::sim::MergeAlgorithm;
        let rows = [ProbeRow {
            algorithm: MergeAlgorithm::BitMark,
            levels: 2,
            brm_rtt_us: Some(7.5),
            feedback_age_us: None,
        }];
        assert_eq!(
            emit_probe(&rows, OutputFormat::Csv),
            "algorithm,levels,brm_rtt_us,feedback_age_us\nbitmark,2,7.500,\n"
        );
        assert!(emit_probe(&rows, OutputFormat::JsonLines).contains("\"feedback_age_us\":null"));
    }
}
