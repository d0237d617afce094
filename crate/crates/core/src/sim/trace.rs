use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_us: u64,
    pub entity_kind: &'static str,
    pub entity_id: String,
    pub metric: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub const HEADER: &'static str = "time_us,entity_kind,entity_id,metric,value";

    pub fn push(
        &mut self,
        time_ns: u64,
        entity_kind: &'static str,
        entity_id: impl Into<String>,
        metric: &'static str,
        value: f64,
    ) {
        self.rows.push(TraceRow {
            time_us: time_ns / 1000,
            entity_kind,
            entity_id: entity_id.into(),
            metric,
            value,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.time_us, r.entity_kind, r.entity_id, r.metric, r.value
            );
        }
        out
    }
}
