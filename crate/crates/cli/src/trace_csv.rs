//! Trace CSV: header `t,D,pi_norm_sq,p_0..p_{L-1},x_0..x_{S-1}`, one row per
//! iteration, floats with 17 significant digits. `pi_norm_sq` is empty on the
//! final row.

use std::io::{Read, Write};

use priceflow_core::engine::Trace;

use crate::CliError;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<(), CliError> {
    let links = trace.rows.first().map_or(0, |r| r.p.len());
    let sources = trace.rows.first().map_or(0, |r| r.x.len());
    let mut w = csv::Writer::from_writer(out);

    let mut header = vec!["t".to_string(), "D".into(), "pi_norm_sq".into()];
    header.extend((0..links).map(|l| format!("p_{l}")));
    header.extend((0..sources).map(|s| format!("x_{s}")));
    w.write_record(&header).map_err(CliError::csv)?;

    for row in &trace.rows {
        let mut rec = Vec::with_capacity(3 + links + sources);
        rec.push(row.t.to_string());
        rec.push(format_float(row.dual));
        rec.push(row.pi_norm_sq.map(format_float).unwrap_or_default());
        rec.extend(row.p.iter().map(|&v| format_float(v)));
        rec.extend(row.x.iter().map(|&v| format_float(v)));
        w.write_record(&rec).map_err(CliError::csv)?;
    }
    w.flush().map_err(|e| CliError::Trace(e.to_string()))?;
    Ok(())
}

/// A trace read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub t: Vec<usize>,
    pub dual: Vec<f64>,
    pub pi_norm_sq: Vec<Option<f64>>,
    pub p: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `(D(0..=T), |pi(0..T)|^2)`: the increments of every row but the last.
    pub fn certification_series(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        if self.is_empty() {
            return Err(CliError::Trace("trace has no rows".into()));
        }
        let last = self.len() - 1;
        let mut pis = Vec::with_capacity(last);
        for (i, v) in self.pi_norm_sq.iter().enumerate().take(last) {
            match v {
                Some(v) if *v >= 0.0 => pis.push(*v),
                Some(v) => {
                    return Err(CliError::Trace(format!("row {i}: negative pi_norm_sq {v}")))
                }
                None => return Err(CliError::Trace(format!("row {i}: missing pi_norm_sq"))),
            }
        }
        Ok((self.dual.clone(), pis))
    }
}

fn parse_f64(field: &str, row: usize, col: &str) -> Result<f64, CliError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Trace(format!("row {row}, column {col}: cannot parse `{field}`")))
}

pub fn read_trace<R: Read>(input: R) -> Result<TraceTable, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(CliError::csv)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 3 || header[0] != "t" || header[1] != "D" || header[2] != "pi_norm_sq" {
        return Err(CliError::Trace(
            "header must start with `t,D,pi_norm_sq`".into(),
        ));
    }
    let links = header.iter().filter(|h| h.starts_with("p_")).count();
    let sources = header.iter().filter(|h| h.starts_with("x_")).count();
    for (i, h) in header[3..].iter().enumerate() {
        let want = if i < links {
            format!("p_{i}")
        } else {
            format!("x_{}", i - links)
        };
        if *h != want {
            return Err(CliError::Trace(format!("unexpected column `{h}`, wanted `{want}`")));
        }
    }

    let mut table = TraceTable {
        t: Vec::new(),
        dual: Vec::new(),
        pi_norm_sq: Vec::new(),
        p: Vec::new(),
        x: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::csv)?;
        if rec.len() != header.len() {
            return Err(CliError::Trace(format!(
                "row {i}: {} fields, header has {}",
                rec.len(),
                header.len()
            )));
        }
        let t = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Trace(format!("row {i}: bad t `{}`", &rec[0])))?;
        if t != i {
            return Err(CliError::Trace(format!("row {i}: t = {t} out of sequence")));
        }
        table.t.push(t);
        table.dual.push(parse_f64(&rec[1], i, "D")?);
        table.pi_norm_sq.push(if rec[2].trim().is_empty() {
            None
        } else {
            Some(parse_f64(&rec[2], i, "pi_norm_sq")?)
        });
        table.p.push(
            (0..links)
                .map(|l| parse_f64(&rec[3 + l], i, &header[3 + l]))
                .collect::<Result<_, _>>()?,
        );
        table.x.push(
            (0..sources)
                .map(|s| parse_f64(&rec[3 + links + s], i, &header[3 + links + s]))
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use priceflow_core::engine::TraceRow;

    fn tiny() -> Trace {
        Trace {
            rows: vec![
                TraceRow {
                    t: 0,
                    p: vec![0.0],
                    x: vec![2.0],
                    dual: 10.0,
                    pi: Some(vec![1.0]),
                    pi_norm_sq: Some(1.0),
                },
                TraceRow {
                    t: 1,
                    p: vec![1.0],
                    x: vec![1.0],
                    dual: 9.0,
                    pi: None,
                    pi_norm_sq: None,
                },
            ],
            divergence: None,
        }
    }

    #[test]
    fn layout() {
        let mut buf = Vec::new();
        write_trace(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,D,pi_norm_sq,p_0,x_0");
        assert_eq!(
            lines[1],
            "0,1.0000000000000000e1,1.0000000000000000e0,0.0000000000000000e0,2.0000000000000000e0"
        );
        assert!(lines[2].starts_with("1,9.0000000000000000e0,,"));
    }

    #[test]
    fn reads_back() {
        let mut buf = Vec::new();
        write_trace(&tiny(), &mut buf).unwrap();
        let table = read_trace(buf.as_slice()).unwrap();
        assert_eq!(table.dual, vec![10.0, 9.0]);
        assert_eq!(table.pi_norm_sq, vec![Some(1.0), None]);
        let (d, pi) = table.certification_series().unwrap();
        assert_eq!((d.len(), pi), (2, vec![1.0]));
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_trace("a,b,c\n".as_bytes()).is_err());
        assert!(read_trace("t,D,pi_norm_sq\n0,oops,\n".as_bytes()).is_err());
        assert!(read_trace("t,D,pi_norm_sq\n1,1.0,\n".as_bytes()).is_err());
        let missing = read_trace("t,D,pi_norm_sq\n0,1.0,\n1,1.0,\n".as_bytes()).unwrap();
        assert!(missing.certification_series().is_err());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, 123_456_789.123_456_78, f64::MAX] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
