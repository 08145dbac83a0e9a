//! `id,label,x_0,y_0,...,x_{n-1},y_{n-1}` with one sample per row.

use std::path::Path;

use facetopo_core::data::{normalize_landmarks, LandmarkSample};

use super::fmt_f64;
use crate::{Error, Result};

pub fn write_landmark_csv(path: &Path, samples: &[LandmarkSample]) -> Result<()> {
    let n = samples.first().map_or(0, LandmarkSample::n);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    for k in 0..n {
        header.push(format!("x_{k}"));
        header.push(format!("y_{k}"));
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for s in samples {
        if s.n() != n {
            return Err(Error::Core(facetopo_core::Error::Dimension {
                what: "sample landmarks",
                expected: n,
                got: s.n(),
            }));
        }
        let mut row = vec![s.id.clone(), s.label.to_string()];
        for [x, y] in &s.coords {
            row.push(fmt_f64(*x));
            row.push(fmt_f64(*y));
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Reads samples and normalizes each to zero centroid and unit RMS radius.
/// Patches and embeddings are left empty.
pub fn read_landmark_csv(path: &Path) -> Result<Vec<LandmarkSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let n = check_header(path, &header)?;
    let mut samples = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 * n + 2 {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields for {n} landmarks, found {}", 2 * n + 2, record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() || !ids.insert(id.clone()) {
            return Err(Error::parse(path, line, format!("empty or duplicate id `{id}`")));
        }
        let label: usize = record[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("label `{}` is not a class index", &record[1])))?;
        let mut coords = Vec::with_capacity(n);
        for k in 0..n {
            let mut xy = [0.0; 2];
            for (c, v) in xy.iter_mut().enumerate() {
                let field = &record[2 + 2 * k + c];
                *v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, line, format!("coordinate `{field}` is not a finite number")))?;
            }
            coords.push(xy);
        }
        samples.push(LandmarkSample {
            id,
            label,
            coords: normalize_landmarks(&coords),
            patches: None,
            embeddings: None,
        });
    }
    Ok(samples)
}

fn check_header(path: &Path, header: &csv::StringRecord) -> Result<usize> {
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 4 || !fields.len().is_multiple_of(2) || fields[0] != "id" || fields[1] != "label" {
        return Err(Error::parse(path, 1, "header must be `id,label,x_0,y_0,...`"));
    }
    let n = (fields.len() - 2) / 2;
    for k in 0..n {
        if fields[2 + 2 * k] != format!("x_{k}") || fields[3 + 2 * k] != format!("y_{k}") {
            return Err(Error::parse(path, 1, format!("expected columns x_{k},y_{k}")));
        }
    }
    Ok(n)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}
