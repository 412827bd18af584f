use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedRow {
    /// 1-based line number in the source file, header included.
    pub row: usize,
    pub reason: String,
}

/// A price column read from an external file, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalSeries {
    pub label: String,
    pub timestamps: Vec<String>,
    pub prices: Vec<f64>,
    pub skipped: Vec<SkippedRow>,
}

impl ExternalSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// The series in the `tick,price` layout that `analyze` reads.
    pub fn prices_text(&self) -> String {
        crate::market::prices_text(&self.prices)
    }
}

fn sniff_delimiter(first_line: &str) -> u8 {
    for &d in b",\t;" {
        if first_line.as_bytes().contains(&d) {
            return d;
        }
    }
    b','
}

/// Reads the column named `price_col` from a delimited file with a header row.
///
/// The first other column, if any, is kept as the timestamp. Rows with a
/// missing, non-numeric or nonpositive price are skipped and listed.
pub fn ingest_external(path: &Path, price_col: &str) -> Result<ExternalSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delimiter = sniff_delimiter(text.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == price_col)
        .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(price_col)))
        .ok_or_else(|| {
            let names: Vec<&str> = headers.iter().collect();
            Error::Ingestion(format!("no column '{price_col}' (columns: {})", names.join(", ")))
        })?;
    let stamp_col = (0..headers.len()).find(|&i| i != col);

    let mut series = ExternalSeries {
        label: format!("{}:{}", path.display(), &headers[col]),
        timestamps: Vec::new(),
        prices: Vec::new(),
        skipped: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                series.skipped.push(SkippedRow { row, reason: e.to_string() });
                continue;
            }
        };
        let cell = record.get(col).unwrap_or("");
        let reason = match cell.parse::<f64>() {
            Ok(p) if p > 0.0 && p.is_finite() => {
                series.prices.push(p);
                series.timestamps.push(stamp_col.and_then(|c| record.get(c)).unwrap_or("").to_string());
                continue;
            }
            Ok(p) => format!("nonpositive price {p}"),
            Err(_) if cell.is_empty() => "missing price".to_string(),
            Err(_) => format!("non-numeric price '{cell}'"),
        };
        log::warn!("{}: row {row} skipped: {reason}", path.display());
        series.skipped.push(SkippedRow { row, reason });
    }
    if series.prices.is_empty() {
        return Err(Error::Ingestion(format!(
            "{}: no parseable prices in column '{price_col}' ({} rows skipped)",
            path.display(),
            series.skipped.len()
        )));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str, col: &str) -> Result<ExternalSeries> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, text).unwrap();
        ingest_external(&path, col)
    }

    #[test]
    fn three_rows() {
        let s = ingest("date,close\n2001-01-02,10.5\n2001-01-03,10.75\n2001-01-04,11\n", "close").unwrap();
        assert_eq!(s.prices, vec![10.5, 10.75, 11.0]);
        assert_eq!(s.timestamps[2], "2001-01-04");
        assert!(s.skipped.is_empty());
    }

    #[test]
    fn zero_price_skipped() {
        let s = ingest("date,close\na,1\nb,0.0\nc,2\n", "close").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.skipped, vec![SkippedRow { row: 3, reason: "nonpositive price 0".into() }]);
    }

    #[test]
    fn non_numeric_skipped() {
        let s = ingest("date,close\na,1\nb,n/a\nc,\n", "close").unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.skipped[0].reason.contains("n/a"));
        assert_eq!(s.skipped[1].reason, "missing price");
    }

    #[test]
    fn other_delimiters_and_case() {
        let s = ingest("Date\tOpen\tClose\nx\t1\t2\ny\t3\t4\n", "close").unwrap();
        assert_eq!(s.prices, vec![2.0, 4.0]);
        let s = ingest("d;p\nx;7\n", "p").unwrap();
        assert_eq!(s.prices, vec![7.0]);
    }

    #[test]
    fn failures() {
        assert!(matches!(ingest("date,close\na,0\n", "close"), Err(Error::Ingestion(_))));
        let err = ingest("date,close\na,1\n", "price").unwrap_err().to_string();
        assert!(err.contains("date, close"), "{err}");
    }
}
