use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::args::{Common, Emit};

/// Writes command artifacts into the output directory.
pub struct Outputs {
    dir: PathBuf,
    emit: Emit,
    timestamp: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(common: &Common) -> Result<Outputs> {
        fs::create_dir_all(&common.out)
            .with_context(|| format!("cannot create output directory {}", common.out.display()))?;
        Ok(Outputs {
            dir: common.out.clone(),
            emit: common.emit,
            timestamp: !common.no_timestamp,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Write a table produced by one of the library's CSV writers, as
    /// `<stem>.csv` or, with `--emit json`, as `<stem>.json` records.
    pub fn table<F>(&mut self, stem: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> gencluster::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        match self.emit {
            Emit::Csv => self.write(&format!("{stem}.csv"), &buf),
            Emit::Json => {
                let records = csv_to_records(&buf)?;
                let text = serde_json::to_string_pretty(&records)?;
                self.write(&format!("{stem}.json"), text.as_bytes())
            }
        }
    }

    /// Write a JSON document, stamped with `generated_at` unless disabled.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if self.timestamp {
            if let Value::Object(map) = &mut v {
                map.insert("generated_at".into(), Value::String(chrono::Utc::now().to_rfc3339()));
            }
        }
        let text = serde_json::to_string_pretty(&v)? + "\n";
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    if let Ok(i) = s.parse::<i64>() {
        return Value::Number(i.into());
    }
    if let Ok(b) = s.parse::<bool>() {
        return Value::Bool(b);
    }
    match s.parse::<f64>().ok().and_then(Number::from_f64) {
        Some(n) => Value::Number(n),
        None => Value::String(s.to_string()),
    }
}

fn csv_to_records(bytes: &[u8]) -> Result<Vec<Value>> {
    let mut reader = csv::Reader::from_reader(bytes);
    let header = reader.headers()?.clone();
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            let map: Map<String, Value> = header
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), cell(v)))
                .collect();
            Ok(Value::Object(map))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_are_typed() {
        let recs = csv_to_records(b"k,gap,ok,name,empty\n3,1.5e-1,true,x,\n").unwrap();
        assert_eq!(recs[0]["k"], Value::from(3));
        assert_eq!(recs[0]["gap"], Value::from(0.15));
        assert_eq!(recs[0]["ok"], Value::Bool(true));
        assert_eq!(recs[0]["name"], Value::from("x"));
        assert_eq!(recs[0]["empty"], Value::Null);
    }
}
