//! Result envelopes: JSON (`schema = uipt-lab/1`) or CSV with the resolved
//! configuration echoed on a leading `#` line.

use std::io::Write;

use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "uipt-lab/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A table: CSV header plus rows of typed cells. Exact values are strings.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.header.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect(),
        )
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub enum Payload {
    Value(Value),
    /// `(key, table)`: JSON puts the rows under `key`.
    Table(&'static str, Table),
    /// Table plus extra JSON fields (a summary, say); CSV gets only the rows.
    TableWith(&'static str, Table, Map<String, Value>),
}

pub struct Envelope {
    pub op: String,
    pub params: Value,
    pub payload: Payload,
}

impl Envelope {
    pub fn write(&self, format: Format, out: &mut impl Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                let mut m = Map::new();
                m.insert("schema".into(), json!(SCHEMA));
                m.insert("op".into(), json!(self.op));
                m.insert("params".into(), self.params.clone());
                match &self.payload {
                    Payload::Value(v) => {
                        m.insert("value".into(), v.clone());
                    }
                    Payload::Table(k, t) => {
                        m.insert((*k).into(), t.to_json());
                    }
                    Payload::TableWith(k, t, extra) => {
                        m.insert((*k).into(), t.to_json());
                        for (key, v) in extra {
                            m.insert(key.clone(), v.clone());
                        }
                    }
                }
                serde_json::to_writer(&mut *out, &Value::Object(m))?;
                writeln!(out)
            }
            Format::Csv => {
                let cfg = json!({"schema": SCHEMA, "op": self.op, "params": self.params});
                writeln!(out, "# {cfg}")?;
                let mut w = csv::Writer::from_writer(&mut *out);
                match &self.payload {
                    Payload::Value(v) => {
                        w.write_record(["op", "value"])?;
                        w.write_record([self.op.clone(), cell(v)])?;
                    }
                    Payload::Table(_, t) | Payload::TableWith(_, t, _) => {
                        w.write_record(&t.header)?;
                        for r in &t.rows {
                            w.write_record(r.iter().map(cell))?;
                        }
                    }
                }
                w.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Envelope {
        let mut t = Table::new(&["k", "probability"]);
        t.push(vec![json!(1), json!("1/8")]);
        t.push(vec![json!(2), json!(0.25)]);
        Envelope {
            op: "law perimeter".into(),
            params: json!({"r": 1}),
            payload: Payload::Table("pmf", t),
        }
    }

    #[test]
    fn json_envelope() {
        let mut buf = Vec::new();
        sample().write(Format::Json, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["pmf"][0]["probability"], "1/8");
        assert_eq!(v["pmf"][1]["probability"], 0.25);
    }

    #[test]
    fn csv_envelope() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(&lines[1..], ["k,probability", "1,1/8", "2,0.25"]);
    }
}
