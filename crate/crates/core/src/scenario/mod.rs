//! Scenario files: a line-oriented description of switches, links, VCs,
//! routes and simulation parameters.
//!
//! ```text
//! # comment
//! switch <id>
//! link <id> <from> <to> <capacity_mbps>     # endpoints: sw:<id>:<port> | src:<id> | dst:<id>
//! vc <id> dst <dest> sources <src>,<src>,...
//! route <vc> <switch> <in_port> -> <out_port>
//! param <key> <value>                       # key may be suffixed .<source> for per-source values
//! ```
//!
//! Capacities and rates accept integers, decimals and fractions (`125/3`).

mod allocation;
mod builtin;
mod emit;
pub mod random;

use std::collections::BTreeSet;
use std::fmt;

use crate::rate::Rate;
use crate::topology::{
    validate_topology, DestId, Endpoint, Link, LinkId, Network, PortId, RouteEntry, SourceId, SwitchId,
    TopologyDecl, TopologyError, VcDecl, VcId,
};

pub use allocation::parse_allocation;
pub use builtin::{builtin_scenario, builtin_text, UnknownScenario, BUILTIN_NAMES};
pub use emit::{
    emit_allocation, emit_flows, emit_probe, emit_scenario, emit_simulation_summary, OutputFormat,
    UnknownFormat,
};

/// A `param` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub key: String,
    /// Source the value applies to, for per-source keys such as `pcr.S1`.
    pub source: Option<SourceId>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub topology: TopologyDecl,
    pub params: Vec<Param>,
}

impl Scenario {
    pub fn network(&self) -> Result<Network, TopologyError> {
        validate_topology(&self.topology)
    }

    /// Last value given for a global key.
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .rev()
            .find(|p| p.key == key && p.source.is_none())
            .map(|p| p.value.as_str())
    }

    /// Last value given for a per-source key.
    pub fn source_param(&self, key: &str, source: &SourceId) -> Option<&str> {
        self.params
            .iter()
            .rev()
            .find(|p| p.key == key && p.source.as_ref() == Some(source))
            .map(|p| p.value.as_str())
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<String>) {
        self.params.push(Param {
            key: key.to_string(),
            source: None,
            value: value.into(),
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    PositiveRate,
    NonNegativeRate,
    Fraction,
    Integer,
    Choice(&'static [&'static str]),
}

const PARAM_KEYS: &[(&str, ParamKind, bool)] = &[
    ("pcr", ParamKind::PositiveRate, true),
    ("icr", ParamKind::PositiveRate, true),
    ("nrm", ParamKind::Integer, true),
    ("start_ms", ParamKind::NonNegativeRate, true),
    ("duration_ms", ParamKind::NonNegativeRate, false),
    ("interval_ms", ParamKind::PositiveRate, false),
    ("window", ParamKind::Integer, false),
    ("utilization", ParamKind::Fraction, false),
    ("queue_drain_ms", ParamKind::PositiveRate, false),
    ("prop_delay_us", ParamKind::NonNegativeRate, false),
    ("packet_cells", ParamKind::Integer, false),
    ("queue_limit", ParamKind::Integer, false),
    ("seed", ParamKind::Integer, false),
    ("merge_alg", ParamKind::Choice(&["turnaround", "bitmark"]), false),
    ("merge_mode", ParamKind::Choice(&["vc", "vp"]), false),
    ("mer_update", ParamKind::Choice(&["assign", "min"]), false),
];

/// A parse failure, positioned at a 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

/// Parse scenario text. All errors found are reported, each with its line.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseErrors> {
    let mut parser = Parser::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Err(message) = parser.line(line, content) {
            parser.errors.push(ParseError { line, message });
        }
    }
    parser.resolve();
    if parser.errors.is_empty() {
        Ok(parser.scenario)
    } else {
        parser.errors.sort_by_key(|e| e.line);
        Err(ParseErrors(parser.errors))
    }
}

#[derive(Default)]
struct Parser {
    scenario: Scenario,
    errors: Vec<ParseError>,
    switch_ids: BTreeSet<SwitchId>,
    link_ids: BTreeSet<LinkId>,
    vc_ids: BTreeSet<VcId>,
    // Deferred reference checks: (line, what).
    switch_refs: Vec<(usize, SwitchId)>,
    vc_refs: Vec<(usize, VcId)>,
    source_refs: Vec<(usize, SourceId)>,
    // Route lines are attached to their VC after all VCs are known.
    routes: Vec<(usize, VcId, RouteEntry)>,
}

impl Parser {
    fn line(&mut self, line: usize, content: &str) -> Result<(), String> {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "switch" => self.switch(&tokens),
            "link" => self.link(line, &tokens),
            "vc" => self.vc(&tokens),
            "route" => self.route(line, &tokens),
            "param" => self.param(line, &tokens),
            other => Err(format!("unknown section `{other}`")),
        }
    }

    fn switch(&mut self, t: &[&str]) -> Result<(), String> {
        let [_, id] = t else {
            return Err("expected `switch <id>`".into());
        };
        let id = SwitchId::from(*id);
        if !self.switch_ids.insert(id.clone()) {
            return Err(format!("duplicate switch id `{id}`"));
        }
        self.scenario.topology.switches.push(id);
        Ok(())
    }

    fn link(&mut self, line: usize, t: &[&str]) -> Result<(), String> {
        let [_, id, from, to, cap] = t else {
            return Err("expected `link <id> <from> <to> <capacity_mbps>`".into());
        };
        let id = LinkId::from(*id);
        if self.link_ids.contains(&id) {
            return Err(format!("duplicate link id `{id}`"));
        }
        let from = self.endpoint(line, from)?;
        let to = self.endpoint(line, to)?;
        let capacity: Rate = cap.parse().map_err(|e| format!("{e}"))?;
        if !capacity.is_positive() {
            return Err(format!("link `{id}`: capacity must be > 0"));
        }
        self.link_ids.insert(id.clone());
        self.scenario.topology.links.push(Link {
            id,
            from,
            to,
            capacity,
        });
        Ok(())
    }

    fn endpoint(&mut self, line: usize, s: &str) -> Result<Endpoint, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sw", id, port] if !id.is_empty() => {
                let port: PortId = port
                    .parse()
                    .map_err(|_| format!("malformed port in endpoint `{s}`"))?;
                let switch = SwitchId::from(*id);
                self.switch_refs.push((line, switch.clone()));
                Ok(Endpoint::Switch { switch, port })
            }
            ["src", id] if !id.is_empty() => Ok(Endpoint::Source(SourceId::from(*id))),
            ["dst", id] if !id.is_empty() => Ok(Endpoint::Dest(DestId::from(*id))),
            _ => Err(format!(
                "malformed endpoint `{s}` (expected sw:<id>:<port>, src:<id> or dst:<id>)"
            )),
        }
    }

    fn vc(&mut self, t: &[&str]) -> Result<(), String> {
        let (id, dest, list) = match t {
            [_, id, "dst", dest, "sources", list] => (*id, *dest, *list),
            [_, id, "dst", _, "sources"] => return Err(format!("VC {id} has no sources")),
            _ => return Err("expected `vc <id> dst <dest> sources <src,...>`".into()),
        };
        let id = VcId::from(id);
        if !self.vc_ids.insert(id.clone()) {
            return Err(format!("duplicate VC id `{id}`"));
        }
        let sources: Vec<SourceId> = list
            .split(',')
            .filter(|s| !s.is_empty())
            .map(SourceId::from)
            .collect();
        if sources.is_empty() {
            return Err(format!("VC {id} has no sources"));
        }
        self.scenario.topology.vcs.push(VcDecl {
            id,
            destination: DestId::from(dest),
            sources,
            routes: Vec::new(),
        });
        Ok(())
    }

    fn route(&mut self, line: usize, t: &[&str]) -> Result<(), String> {
        let [_, vc, switch, in_port, "->", out_port] = t else {
            return Err("expected `route <vc> <switch> <in_port> -> <out_port>`".into());
        };
        let port = |p: &str| p.parse::<PortId>().map_err(|_| format!("malformed port `{p}`"));
        let entry = RouteEntry {
            switch: SwitchId::from(*switch),
            in_port: port(in_port)?,
            out_port: port(out_port)?,
        };
        let vc = VcId::from(*vc);
        self.switch_refs.push((line, entry.switch.clone()));
        self.vc_refs.push((line, vc.clone()));
        self.routes.push((line, vc, entry));
        Ok(())
    }

    fn param(&mut self, line: usize, t: &[&str]) -> Result<(), String> {
        let [_, key, value] = t else {
            return Err("expected `param <key> <value>`".into());
        };
        let (base, source) = match key.split_once('.') {
            Some((b, s)) if !s.is_empty() => (b, Some(SourceId::from(s))),
            Some(_) => return Err(format!("malformed parameter key `{key}`")),
            None => (*key, None),
        };
        let Some(&(_, kind, per_source)) = PARAM_KEYS.iter().find(|(k, _, _)| *k == base) else {
            return Err(format!("unknown parameter `{base}`"));
        };
        if source.is_some() && !per_source {
            return Err(format!("parameter `{base}` cannot be set per source"));
        }
        check_value(kind, value).map_err(|m| format!("parameter `{key}`: {m}"))?;
        if let Some(s) = &source {
            self.source_refs.push((line, s.clone()));
        }
        self.scenario.params.push(Param {
            key: base.to_string(),
            source,
            value: value.to_string(),
        });
        Ok(())
    }

    fn resolve(&mut self) {
        for (line, s) in std::mem::take(&mut self.switch_refs) {
            if !self.switch_ids.contains(&s) {
                self.errors.push(ParseError {
                    line,
                    message: format!("unresolved reference to switch `{s}`"),
                });
            }
        }
        for (line, v) in std::mem::take(&mut self.vc_refs) {
            if !self.vc_ids.contains(&v) {
                self.errors.push(ParseError {
                    line,
                    message: format!("unresolved reference to VC `{v}`"),
                });
            }
        }
        let declared: BTreeSet<&SourceId> = self
            .scenario
            .topology
            .vcs
            .iter()
            .flat_map(|v| v.sources.iter())
            .collect();
        for (line, s) in std::mem::take(&mut self.source_refs) {
            if !declared.contains(&s) {
                self.errors.push(ParseError {
                    line,
                    message: format!("unresolved reference to source `{s}`"),
                });
            }
        }
        for (_, vc, entry) in std::mem::take(&mut self.routes) {
            if let Some(decl) = self.scenario.topology.vcs.iter_mut().find(|d| d.id == vc) {
                decl.routes.push(entry);
            }
        }
    }
}

fn check_value(kind: ParamKind, value: &str) -> Result<(), String> {
    match kind {
        ParamKind::PositiveRate | ParamKind::NonNegativeRate | ParamKind::Fraction => {
            let r: Rate = value.parse().map_err(|e| format!("{e}"))?;
            let ok = match kind {
                ParamKind::PositiveRate => r.is_positive(),
                ParamKind::NonNegativeRate => r >= Rate::zero(),
                _ => r.is_positive() && r <= Rate::from_integer(1),
            };
            if ok {
                Ok(())
            } else {
                Err(format!("value `{value}` out of range"))
            }
        }
        ParamKind::Integer => value
            .parse::<u64>()
            .map(|_| ())
            .map_err(|_| format!("expected a non-negative integer, got `{value}`")),
        ParamKind::Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                Err(format!("expected one of {}, got `{value}`", options.join(", ")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_and_decimal_capacities() {
        let s = parse_scenario("switch 1\nswitch 2\nlink L1 sw:1:0 sw:2:0 50\nlink L2 sw:2:1 sw:1:1 125/3\n")
            .unwrap();
        assert_eq!(s.topology.links[0].capacity, Rate::from_integer(50));
        assert_eq!(s.topology.links[1].capacity, Rate::new(125, 3));
    }

    #[test]
    fn empty_source_list_reports_line() {
        let err = parse_scenario("switch a\n\nvc M dst dS1 sources\n").unwrap_err();
        assert_eq!(err.0[0].line, 3);
        assert!(err.0[0].message.contains("no sources"));
    }

    #[test]
    fn unknown_section_and_bad_rational() {
        let err = parse_scenario("bogus x\nswitch a\nlink L src:s sw:a:0 1/0\n").unwrap_err();
        assert_eq!(err.0.len(), 2);
        assert_eq!(err.0[0].line, 1);
        assert!(err.0[0].message.contains("unknown section"));
        assert_eq!(err.0[1].line, 3);
        assert!(err.0[1].message.contains("malformed rational"));
    }

    #[test]
    fn unresolved_and_duplicate_references() {
        let text = "switch a\nswitch a\nlink L src:s sw:b:0 10\nroute X a 0 -> 1\nparam pcr.nobody 10\n";
        let err = parse_scenario(text).unwrap_err();
        let lines: Vec<usize> = err.0.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
        assert!(err.0[0].message.contains("duplicate switch"));
        assert!(err.0[1].message.contains("switch `b`"));
        assert!(err.0[2].message.contains("VC `X`"));
        assert!(err.0[3].message.contains("source `nobody`"));
    }

    #[test]
    fn params_are_checked() {
        assert!(parse_scenario("param merge_alg bitmark\nparam utilization 0.9\n").is_ok());
        assert!(parse_scenario("param merge_alg sometimes\n").is_err());
        assert!(parse_scenario("param utilization 1.5\n").is_err());
        assert!(parse_scenario("param nosuch 1\n").is_err());
        assert!(parse_scenario("param duration_ms.S1 1\n").is_err());
    }

    #[test]
    fn comments_are_ignored() {
        let s = parse_scenario("# header\nswitch a # trailing\n").unwrap();
        assert_eq!(s.topology.switches, vec![SwitchId::from("a")]);
    }
}
