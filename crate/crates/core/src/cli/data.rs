//! Daily-series CSV files: `day,count,return,log_price` after `#` header lines.

use crate::error::{Error, Result};
use crate::simulate::DailySeries;

fn data_err(msg: impl Into<String>) -> Error {
    Error::InsufficientData(msg.into())
}

/// Write a series as CSV (no provenance header).
pub fn write_series(series: &DailySeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["day", "count", "return", "log_price"]).map_err(io)?;
    for t in 0..series.len() {
        let count = series.counts.as_ref().map(|c| c[t].to_string()).unwrap_or_default();
        w.write_record([
            (t + 1).to_string(),
            count,
            series.returns[t].to_string(),
            series.log_price[t].to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Read a series. `return` is required; `count` and `log_price` are optional
/// (a missing or empty count column yields a series without counts).
pub fn read_series(text: &str) -> Result<DailySeries> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| data_err(format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let ret = col("return").ok_or_else(|| data_err("no 'return' column"))?;
    let cnt = col("count");
    let lp = col("log_price");
    let mut returns = Vec::new();
    let mut counts: Option<Vec<u64>> = cnt.map(|_| Vec::new());
    let mut log_price = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| data_err(format!("row {}: {e}", i + 1)))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let parse = |j: usize, what: &str| -> Result<f64> {
            field(j)
                .parse()
                .map_err(|_| data_err(format!("row {}: bad {what} '{}'", i + 1, field(j))))
        };
        returns.push(parse(ret, "return")?);
        if let Some(j) = cnt.filter(|_| counts.is_some()) {
            if field(j).is_empty() {
                counts = None;
            } else {
                let k = field(j)
                    .parse()
                    .map_err(|_| data_err(format!("row {}: bad count '{}'", i + 1, field(j))))?;
                counts.as_mut().expect("checked above").push(k);
            }
        }
        if let Some(j) = lp {
            log_price.push(parse(j, "log_price")?);
        }
    }
    if returns.is_empty() {
        return Err(data_err("no data rows"));
    }
    Ok(if lp.is_some() {
        DailySeries {
            counts,
            returns,
            log_price,
            params: None,
            config: None,
        }
    } else {
        DailySeries::from_returns(counts, returns)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = DailySeries::from_returns(Some(vec![3, 0, 7]), vec![0.5, -1.25e-7, 3.0e-4]);
        let text = format!("# header\n{}", write_series(&s).unwrap());
        let back = read_series(&text).unwrap();
        assert_eq!(back.returns, s.returns);
        assert_eq!(back.counts, s.counts);
        assert_eq!(back.log_price, s.log_price);
    }

    #[test]
    fn counts_optional_and_errors() {
        let s = read_series("day,return\n1,0.1\n2,0.2\n").unwrap();
        assert!(s.counts.is_none());
        assert_eq!(s.log_price, vec![0.1, 0.1 + 0.2]);
        let s = read_series("day,count,return\n1,,0.1\n").unwrap();
        assert!(s.counts.is_none());
        assert!(matches!(
            read_series("day,count\n1,3\n"),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(read_series("return\nx\n"), Err(Error::InsufficientData(_))));
        assert!(matches!(read_series("return\n"), Err(Error::InsufficientData(_))));
    }
}
