use serde_json::{Map, Value};

use crate::stats::Estimate;

/// One named column of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// A sweep result: one axis column followed by named series.
///
/// Metric series are stored as a value column `name` and a standard-error
/// column `name_se`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis: String,
    pub axis_values: Vec<f64>,
    pub columns: Vec<Column>,
    pub metadata: Vec<(String, String)>,
}

/// Significant digits in rendered output.
pub const SIG_DIGITS: usize = 12;

impl ResultTable {
    pub fn new(axis: impl Into<String>, axis_values: Vec<f64>) -> Self {
        ResultTable { axis: axis.into(), axis_values, columns: Vec::new(), metadata: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.axis_values.len()
    }

    /// Adds a plain column such as an allocation width.
    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        let name = name.into();
        assert_eq!(values.len(), self.rows(), "column {name} has the wrong length");
        self.columns.push(Column { name, values });
    }

    /// Adds `name` and `name_se`.
    pub fn add_metric(&mut self, name: impl Into<String>, values: &[Estimate]) {
        let name = name.into();
        self.add_column(format!("{name}_se"), values.iter().map(|e| e.std_error).collect());
        let se = self.columns.pop().expect("just pushed");
        self.add_column(name, values.iter().map(|e| e.mean).collect());
        self.columns.push(se);
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        if name == self.axis {
            return Some(&self.axis_values);
        }
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Metadata as `#` lines, a header, then one line per row. LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            // Keep each entry on one comment line.
            let v = v.replace(['\n', '\r'], " ");
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.axis);
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for i in 0..self.rows() {
            out.push_str(&format_value(self.axis_values[i]));
            for c in &self.columns {
                out.push(',');
                out.push_str(&format_value(c.values[i]));
            }
            out.push('\n');
        }
        out
    }

    /// `{"metadata": {...}, "columns": {axis: [...], name: [...], ...}}`.
    pub fn to_json(&self) -> String {
        let mut meta = Map::new();
        for (k, v) in &self.metadata {
            meta.insert(k.clone(), Value::String(v.clone()));
        }
        let mut cols = Map::new();
        cols.insert(self.axis.clone(), json_values(&self.axis_values));
        for c in &self.columns {
            cols.insert(c.name.clone(), json_values(&c.values));
        }
        let mut root = Map::new();
        root.insert("metadata".into(), Value::Object(meta));
        root.insert("columns".into(), Value::Object(cols));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("plain JSON values");
        s.push('\n');
        s
    }
}

fn json_values(xs: &[f64]) -> Value {
    Value::Array(
        xs.iter()
            .map(|&x| {
                if x.is_finite() {
                    let rounded: f64 = format_value(x).parse().expect("formatted float parses");
                    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
                } else {
                    Value::Null
                }
            })
            .collect(),
    )
}

/// Integers print bare; other values get [`SIG_DIGITS`] significant digits.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == x.trunc() && x.abs() < 1e15 {
        // Avoid "-0".
        return format!("{}", x as i64);
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = SIG_DIGITS - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new("budget", vec![2.0, 4.0]);
        t.add_column("phase_bits", vec![1.0, 2.0]);
        t.add_metric("mse", &[Estimate { mean: 0.5, std_error: 0.01 }, Estimate { mean: 0.125, std_error: 0.002 }]);
        t.push_meta("generator", "test");
        t
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(3.0), "3");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(0.1), "0.100000000000");
        assert_eq!(format_value(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_value(123.456), "123.456000000");
        assert_eq!(format_value(2.5e-7), "2.50000000000e-7");
        assert_eq!(format_value(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# generator: test");
        assert_eq!(lines[1], "budget,phase_bits,mse,mse_se");
        assert_eq!(lines[2].split(',').count(), 4);
        assert!(!csv.contains('\r'));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut t = ResultTable::new("budget", vec![]);
        t.add_metric("mse", &[]);
        t.push_meta("k", "v");
        assert_eq!(t.to_csv(), "# k: v\nbudget,mse,mse_se\n");
    }

    #[test]
    fn json_layout() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["metadata"]["generator"], "test");
        assert_eq!(v["columns"]["mse"][1], 0.125);
        assert_eq!(v["columns"]["budget"].as_array().unwrap().len(), 2);
        let keys: Vec<&String> = v["columns"].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["budget", "phase_bits", "mse", "mse_se"]);
    }
}
