//! Error summaries against a benchmark and CSV output.

use std::io::Write;

use crate::error::{Error, Result};
use crate::moments::{MomentIndex, MomentTable};

/// Which method produced a set of moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    /// Linear moment system, solved by ODE or matrix exponential.
    Engine,
    /// Bivariate block recursion.
    Blocks,
    /// Finite differences of the transform.
    Fd,
    /// Monte Carlo.
    Mc,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Engine => "BM-engine",
            MethodTag::Blocks => "BM-blocks",
            MethodTag::Fd => "FD",
            MethodTag::Mc => "MC",
        }
    }
}

/// Values of one method, scored against a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: MethodTag,
    /// Free-form setting, e.g. `h=0.001` or `m=1000`.
    pub parameter: String,
    pub values: Vec<(MomentIndex, f64)>,
    /// `Σ |bm - x|`.
    pub mae: f64,
    /// `Σ |bm - x| / |bm|` over entries with `bm ≠ 0`.
    pub mre: f64,
    pub seconds: f64,
}

impl RunReport {
    pub fn score(
        method: MethodTag,
        parameter: impl Into<String>,
        benchmark: &MomentTable<f64>,
        values: Vec<(MomentIndex, f64)>,
        seconds: f64,
    ) -> Result<Self> {
        let (mae, mre) = errors(benchmark, &values)?;
        Ok(Self { method, parameter: parameter.into(), values, mae, mre, seconds })
    }
}

/// `(MAE, MRE)` of `values` against `benchmark`.
pub fn errors(benchmark: &MomentTable<f64>, values: &[(MomentIndex, f64)]) -> Result<(f64, f64)> {
    let mut mae = 0.0;
    let mut mre = 0.0;
    for (idx, x) in values {
        let b = benchmark.value(idx)?;
        let e = (b - x).abs();
        mae += e;
        if b != 0.0 {
            mre += e / b.abs();
        }
    }
    Ok((mae, mre))
}

/// Plain notation on `[1e-3, 1e6)`, scientific outside; `.` as separator.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// CSV sink with a fixed header.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
    width: usize,
}

impl<W: Write> CsvOut<W> {
    pub fn new(w: W, header: &[&str]) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(header).map_err(csv_err)?;
        Ok(Self { inner, width: header.len() })
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        if fields.len() != self.width {
            return Err(Error::InvalidArgument(format!(
                "CSV row has {} fields, header has {}",
                fields.len(),
                self.width
            )));
        }
        self.inner.write_record(fields).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| Error::InvalidArgument(format!("CSV write failed: {e}")))?;
        self.inner.into_inner().map_err(|e| Error::InvalidArgument(format!("CSV write failed: {e}")))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("CSV write failed: {e}"))
}

/// Rows `index,value`.
pub fn write_table<W: Write>(w: W, table: &MomentTable<f64>) -> Result<W> {
    let mut out = CsvOut::new(w, &["index", "value"])?;
    for (idx, v) in table.iter() {
        out.row(&[idx.to_string(), fmt_num(*v)])?;
    }
    out.finish()
}

/// Rows `method,parameter,seconds,mae,mre`.
pub fn write_reports<W: Write>(w: W, reports: &[RunReport]) -> Result<W> {
    let mut out = CsvOut::new(w, &["method", "parameter", "seconds", "mae", "mre"])?;
    for r in reports {
        out.row(&[
            r.method.as_str().to_string(),
            r.parameter.clone(),
            fmt_num(r.seconds),
            fmt_num(r.mae),
            fmt_num(r.mre),
        ])?;
    }
    out.finish()
}
