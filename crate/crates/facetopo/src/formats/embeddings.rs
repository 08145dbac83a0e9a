//! One row per landmark, header `dim_0,...,dim_{d-1}`.

use std::path::Path;

use facetopo_core::data::Embeddings;

use super::fmt_f64;
use super::landmarks::csv_error;
use crate::{Error, Result};

pub fn write_embedding_csv(path: &Path, embeddings: &Embeddings) -> Result<()> {
    let d = embeddings.dim;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record((0..d).map(|k| format!("dim_{k}"))).map_err(|e| csv_error(path, e))?;
    for row in embeddings.data.chunks(d.max(1)) {
        w.write_record(row.iter().map(|&v| fmt_f64(v))).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn read_embedding_csv(path: &Path) -> Result<Embeddings> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let dim = header.len();
    if dim == 0 || header.iter().enumerate().any(|(k, h)| h != format!("dim_{k}")) {
        return Err(Error::parse(path, 1, "header must be `dim_0,dim_1,...`"));
    }
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim {
            return Err(Error::parse(path, line, format!("expected {dim} values, found {}", record.len())));
        }
        for field in record.iter() {
            let v = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("`{field}` is not a finite number")))?;
            data.push(v);
        }
    }
    Ok(Embeddings { dim, data })
}
