//! CSV ingestion and the column mapping file.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{parse_bool, parse_key_values};
use crate::error::{Error, Result};
use crate::model::{Dataset, Dims, Observation};

/// Which CSV columns play which role in the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub time_col: String,
    pub status_col: String,
    pub z_cols: Vec<String>,
    pub u_cols: Vec<String>,
    pub v_col: String,
    pub x_cols: Vec<String>,
    /// Prepend a constant-1 column to `X`, so the first `ψ` is an intercept.
    pub intercept_in_x: bool,
    /// Centre `V` and divide by its sample standard deviation.
    pub standardize_v: bool,
}

impl ColumnMapping {
    pub fn dims(&self) -> Dims {
        Dims::new(
            self.z_cols.len(),
            self.u_cols.len(),
            self.x_cols.len() + usize::from(self.intercept_in_x),
        )
    }

    /// Names for the columns of `X` as the model sees it.
    pub fn x_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dims().q);
        if self.intercept_in_x {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.x_cols.iter().cloned());
        names
    }

    /// Label of `V` in reports.
    pub fn v_label(&self) -> String {
        if self.standardize_v {
            format!("std({})", self.v_col)
        } else {
            self.v_col.clone()
        }
    }

    /// Role names must be distinct, except that a column may be in both `Z`
    /// and `U`.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        let singles = [("time", &self.time_col), ("status", &self.status_col), ("v", &self.v_col)];
        for (role, name) in singles {
            if name.is_empty() {
                return Err(Error::InvalidArgument(format!("mapping: `{role}` column is not set")));
            }
        }
        let mut entries: Vec<(&str, &str)> = singles.iter().map(|(r, n)| (*r, n.as_str())).collect();
        entries.extend(self.z_cols.iter().map(|c| ("z", c.as_str())));
        entries.extend(self.u_cols.iter().map(|c| ("u", c.as_str())));
        entries.extend(self.x_cols.iter().map(|c| ("x", c.as_str())));
        for (role, name) in entries {
            if name.is_empty() {
                return Err(Error::InvalidArgument(format!("mapping: empty column name in `{role}`")));
            }
            if let Some(prev) = seen.insert(name, role) {
                let zu = matches!((prev, role), ("z", "u") | ("u", "z"));
                if !zu {
                    return Err(Error::InvalidArgument(format!(
                        "mapping: column `{name}` is used as both `{prev}` and `{role}`"
                    )));
                }
            }
        }
        if self.dims().xi_len() == 0 {
            return Err(Error::InvalidArgument("mapping: no z or u columns".into()));
        }
        Ok(())
    }

    /// Parses a mapping file:
    ///
    /// ```text
    /// time = days
    /// status = cens
    /// z = treatment
    /// u = treatment
    /// v = age
    /// x = homo
    /// intercept = true
    /// standardize_v = true
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = ColumnMapping {
            time_col: String::new(),
            status_col: String::new(),
            z_cols: vec![],
            u_cols: vec![],
            v_col: String::new(),
            x_cols: vec![],
            intercept_in_x: false,
            standardize_v: false,
        };
        for (line, key, value) in parse_key_values(text)? {
            let bad = |message: String| Error::Config { line, message };
            match key.as_str() {
                "time" => m.time_col = value,
                "status" => m.status_col = value,
                "v" => m.v_col = value,
                "z" => m.z_cols = name_list(&value),
                "u" => m.u_cols = name_list(&value),
                "x" => m.x_cols = name_list(&value),
                "intercept" => m.intercept_in_x = parse_bool(&value).map_err(bad)?,
                "standardize_v" => m.standardize_v = parse_bool(&value).map_err(bad)?,
                _ => return Err(Error::UnknownConfigKey(key)),
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

const INTERCEPT: &str = "(intercept)";

fn name_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "N/A" | "." | "NaN" | "nan")
}

/// Reads a headed CSV from `reader`. Row numbers in errors count data rows
/// from 1, not counting the header.
pub fn parse_csv<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Dataset> {
    mapping.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyFile);
    }
    let records: Vec<csv::StringRecord> = rdr
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Csv(e.to_string()))?;
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }

    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let time_i = position(&mapping.time_col)?;
    let status_i = position(&mapping.status_col)?;
    let v_i = position(&mapping.v_col)?;
    let cols = |names: &[String]| names.iter().map(|n| position(n)).collect::<Result<Vec<_>>>();
    let z_i = cols(&mapping.z_cols)?;
    let u_i = cols(&mapping.u_cols)?;
    let x_i = cols(&mapping.x_cols)?;

    let mut observations = Vec::with_capacity(records.len());
    for (k, rec) in records.iter().enumerate() {
        let row = k + 1;
        let number = |i: usize| -> Result<f64> {
            let cell = rec.get(i).unwrap_or("");
            if is_missing(cell) {
                return Err(Error::MissingCell {
                    row,
                    column: headers[i].to_string(),
                });
            }
            cell.parse::<f64>().map_err(|_| Error::NonNumeric {
                row,
                column: headers[i].to_string(),
                value: cell.to_string(),
            })
        };
        let many = |idx: &[usize]| idx.iter().map(|&i| number(i)).collect::<Result<Vec<f64>>>();

        let time = number(time_i)?;
        let status_cell = rec.get(status_i).unwrap_or("");
        let status = match number(status_i) {
            Ok(0.0) => false,
            Ok(1.0) => true,
            Err(e @ Error::MissingCell { .. }) => return Err(e),
            _ => {
                return Err(Error::InvalidStatus {
                    row,
                    value: status_cell.to_string(),
                })
            }
        };
        let z = many(&z_i)?;
        let u = many(&u_i)?;
        let v = number(v_i)?;
        let mut x = Vec::with_capacity(mapping.dims().q);
        if mapping.intercept_in_x {
            x.push(1.0);
        }
        x.extend(many(&x_i)?);
        observations.push(Observation::new(time, status, z, u, v, x));
    }

    if mapping.standardize_v {
        standardize_v(&mut observations)?;
    }
    Dataset::new(observations, mapping.dims())
}

/// [`parse_csv`] on a file.
pub fn load_csv(path: &Path, mapping: &ColumnMapping) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(std::io::BufReader::new(file), mapping)
}

fn standardize_v(observations: &mut [Observation]) -> Result<()> {
    let n = observations.len();
    if n < 2 {
        return Err(Error::InvalidData("cannot standardize v with fewer than 2 rows".into()));
    }
    let mean = observations.iter().map(|o| o.v).sum::<f64>() / n as f64;
    let var = observations.iter().map(|o| (o.v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidData("cannot standardize v: zero or non-finite spread".into()));
    }
    for o in observations {
        o.v = (o.v - mean) / sd;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping() -> ColumnMapping {
        ColumnMapping::parse("time=t\nstatus=d\nz=z\nu=z\nv=v\nx=x\nintercept=true\n").unwrap()
    }

    #[test]
    fn mapping_file_round() {
        let m = mapping();
        assert_eq!(m.dims(), Dims::new(1, 1, 2));
        assert_eq!(m.x_names(), vec!["(intercept)", "x"]);
        assert!(!m.standardize_v);
    }

    #[test]
    fn mapping_rejects_reused_columns() {
        let err = ColumnMapping::parse("time=t\nstatus=d\nz=v\nv=v\n").unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
        let err = ColumnMapping::parse("time=t\nstatus=d\nz=a\nv=v\ncolour=red\n").unwrap_err();
        assert!(matches!(err, Error::UnknownConfigKey(ref k) if k == "colour"));
    }

    #[test]
    fn parses_small_file() {
        let csv = "t,d,z,v,x\n1.0,1,0,0.5,0.1\n2.0,0,1,-0.5,0.2\n3.0,1,1,1.5,-0.3\n";
        let ds = parse_csv(csv.as_bytes(), &mapping()).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.n_events(), 2);
        assert_eq!(ds.observations()[0].x, vec![1.0, 0.1]);
    }

    #[test]
    fn row_numbers_count_data_rows() {
        let csv = "t,d,z,v,x\n1,1,0,0,0\n2,1,oops,0,0\n";
        match parse_csv(csv.as_bytes(), &mapping()).unwrap_err() {
            Error::NonNumeric { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "z", "oops"));
            }
            e => panic!("unexpected {e}"),
        }
        let csv = "t,d,z,v,x\n1,1,0,,0\n";
        assert!(matches!(
            parse_csv(csv.as_bytes(), &mapping()).unwrap_err(),
            Error::MissingCell { row: 1, .. }
        ));
    }

    #[test]
    fn empty_and_missing_column() {
        assert!(matches!(parse_csv("".as_bytes(), &mapping()).unwrap_err(), Error::EmptyFile));
        assert!(matches!(
            parse_csv("t,d,z,v,x\n".as_bytes(), &mapping()).unwrap_err(),
            Error::EmptyFile
        ));
        assert!(matches!(
            parse_csv("t,d,z,v\n1,1,0,0\n".as_bytes(), &mapping()).unwrap_err(),
            Error::MissingColumn(ref c) if c == "x"
        ));
        assert!(matches!(
            parse_csv("t,d,z,v,x\n1,0,0,0,0\n".as_bytes(), &mapping()).unwrap_err(),
            Error::NoEvents
        ));
    }

    #[test]
    fn standardization_is_opt_in() {
        let mut m = mapping();
        let csv = "t,d,z,v,x\n1,1,0,10,0\n2,1,1,20,0\n3,1,1,30,0\n";
        let raw = parse_csv(csv.as_bytes(), &m).unwrap();
        assert_eq!(raw.observations()[2].v, 30.0);
        m.standardize_v = true;
        let std = parse_csv(csv.as_bytes(), &m).unwrap();
        let vs: Vec<f64> = std.observations().iter().map(|o| o.v).collect();
        assert_eq!(vs, vec![-1.0, 0.0, 1.0]);
    }
}
