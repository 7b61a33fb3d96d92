//! Dataset, label and model files.
//!
//! Data files are comma-separated, one sample per row, with an optional
//! single header row starting with `#` and an optional trailing integer
//! label column (1-based). Model files are plain text: `key value` header
//! lines followed by `matrix name rows cols` blocks in row-major order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::baselines::{BaselineModel, BaselineParams, Flat, Method, Plane, Prototypes};
use crate::error::{MfpcError, Result};
use crate::types::{validate_dataset, ClusterProjection, Dataset, FlatModel, KernelKind, KernelSpec};

/// Whether a data file carries a trailing label column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    /// Labels are present when the header names the last column `label`, or,
    /// without a header, when every value in the last column is a positive
    /// integer and there are at least two columns.
    #[default]
    Auto,
    Present,
    Absent,
}

fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(MfpcError::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

fn parse_error(line: usize, message: impl Into<String>) -> MfpcError {
    MfpcError::Parse {
        line,
        message: message.into(),
    }
}

/// Loads a data file, detecting the label column.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_with(path, LabelColumn::Auto)
}

pub fn load_csv_with(path: impl AsRef<Path>, labels: LabelColumn) -> Result<Dataset> {
    parse_csv(&read_to_string(path.as_ref())?, labels)
}

/// Parses data-file text; see [`load_csv`].
pub fn parse_csv(text: &str, labels: LabelColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        if fields[0].starts_with('#') {
            if header.is_some() || !rows.is_empty() {
                return Err(parse_error(line, "a header row is only allowed first"));
            }
            let mut names = fields;
            names[0] = names[0].trim_start_matches('#').trim().to_owned();
            header = Some(names);
            continue;
        }
        rows.push((line, fields));
    }
    if rows.is_empty() {
        return Err(MfpcError::EmptyMatrix);
    }
    let width = rows[0].1.len();
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(parse_error(
                *line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
    }
    if let Some(names) = &header {
        if names.len() != width {
            return Err(parse_error(
                1,
                format!("header names {} columns, rows have {width}", names.len()),
            ));
        }
    }
    let has_labels = match labels {
        LabelColumn::Present => true,
        LabelColumn::Absent => false,
        LabelColumn::Auto => match &header {
            Some(names) => names.last().is_some_and(|n| n.eq_ignore_ascii_case("label")),
            None => width >= 2 && rows.iter().all(|(_, f)| f[width - 1].parse::<i64>().is_ok_and(|v| v >= 1)),
        },
    };
    let n = if has_labels { width - 1 } else { width };
    if n == 0 {
        return Err(parse_error(rows[0].0, "no feature columns"));
    }
    let mut values = Vec::with_capacity(n * rows.len());
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        for field in &fields[..n] {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(*line, format!("`{field}` is not a number")))?;
            values.push(v);
        }
        if has_labels {
            let field = &fields[n];
            let label: i64 = field
                .parse()
                .map_err(|_| parse_error(*line, format!("label `{field}` is not an integer")))?;
            raw_labels.push(label);
        }
    }
    let features = DMatrix::from_column_slice(n, rows.len(), &values);
    let data = validate_dataset(features, has_labels.then_some(raw_labels.as_slice()))?;
    match header {
        Some(mut names) => {
            names.truncate(n);
            data.with_feature_names(names)
        }
        None => Ok(data),
    }
}

/// Writes a dataset as a data file with a header row; labels, when present,
/// go to a final `label` column, 1-based.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_csv(data))?;
    Ok(())
}

pub fn format_csv(data: &Dataset) -> String {
    let n = data.n_features();
    let mut names: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=n).map(|i| format!("x{i}")).collect(),
    };
    if data.labels().is_some() {
        names.push("label".into());
    }
    let mut out = format!("# {}\n", names.join(","));
    let x = data.features();
    for j in 0..data.n_samples() {
        let mut fields: Vec<String> = x.column(j).iter().map(|v| v.to_string()).collect();
        if let Some(labels) = data.labels() {
            fields.push((labels[j] + 1).to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Reads a label file: one 1-based integer per line, blank lines and `#`
/// lines ignored. Returns 0-based labels.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_labels(&read_to_string(path.as_ref())?)
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: i64 = line
            .parse()
            .map_err(|_| parse_error(i + 1, format!("label `{line}` is not an integer")))?;
        if v < 1 {
            return Err(parse_error(i + 1, format!("label {v} is below 1")));
        }
        out.push((v - 1) as usize);
    }
    Ok(out)
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&(l + 1).to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Scales every feature to `[0, 1]`; constant features become 0.
pub fn min_max_normalize(data: &Dataset) -> Result<Dataset> {
    let mut x = data.features().clone();
    for mut row in x.row_iter_mut() {
        let lo = row.min();
        let hi = row.max();
        let span = hi - lo;
        for v in row.iter_mut() {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
    let out = Dataset::new(x, data.labels().map(<[usize]>::to_vec))?;
    match data.feature_names() {
        Some(names) => out.with_feature_names(names.to_vec()),
        None => Ok(out),
    }
}

/// Benchmark files shipped in the data directory.
pub const BENCHMARK_NAMES: [&str; 1] = ["iris"];

/// Loads `<dir>/<name>.csv` with min-max normalized features.
pub fn load_benchmark(name: &str, dir: impl AsRef<Path>) -> Result<Dataset> {
    let path: PathBuf = dir.as_ref().join(format!("{name}.csv"));
    if !path.exists() {
        let mut valid: Vec<String> = BENCHMARK_NAMES.iter().map(|s| s.to_string()).collect();
        if let Ok(entries) = fs::read_dir(dir.as_ref()) {
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "csv") {
                    if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                        if !valid.iter().any(|v| v == stem) {
                            valid.push(stem.to_owned());
                        }
                    }
                }
            }
        }
        valid.sort();
        return Err(MfpcError::UnknownDataset {
            name: name.to_owned(),
            valid,
        });
    }
    min_max_normalize(&load_csv_with(path, LabelColumn::Present)?)
}

/// A parsed model file: ordered header entries and named matrices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelText {
    pub header: Vec<(String, String)>,
    pub matrices: Vec<(String, DMatrix<f64>)>,
}

impl ModelText {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_owned(), value.to_string()));
    }

    pub fn push_matrix(&mut self, name: impl Into<String>, m: DMatrix<f64>) {
        self.matrices.push((name.into(), m));
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| parse_error(0, format!("missing header key `{key}`")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| parse_error(0, format!("bad value `{raw}` for `{key}`")))
    }

    pub fn matrix(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| parse_error(0, format!("missing matrix `{name}`")))
    }

    pub fn has_matrix(&self, name: &str) -> bool {
        self.matrices.iter().any(|(n, _)| n == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            out.push_str(&format!("{k} {v}\n"));
        }
        for (name, m) in &self.matrices {
            out.push_str(&format!("matrix {name} {} {}\n", m.nrows(), m.ncols()));
            for r in 0..m.nrows() {
                let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        let mut lines = text.lines().enumerate();
        while let Some((i, line)) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-empty line has a token");
            if key != "matrix" {
                let value = parts.collect::<Vec<_>>().join(" ");
                out.header.push((key.to_owned(), value));
                continue;
            }
            let fields: Vec<&str> = parts.collect();
            if fields.len() != 3 {
                return Err(parse_error(i + 1, "expected `matrix name rows cols`"));
            }
            let dims: Vec<usize> = fields[1..]
                .iter()
                .map(|f| f.parse().map_err(|_| parse_error(i + 1, format!("bad dimension `{f}`"))))
                .collect::<Result<_>>()?;
            let (rows, cols) = (dims[0], dims[1]);
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (j, row) = lines
                    .next()
                    .ok_or_else(|| parse_error(i + 1, format!("matrix `{}` is truncated", fields[0])))?;
                let parsed: Vec<f64> = row
                    .split_whitespace()
                    .map(|f| f.parse().map_err(|_| parse_error(j + 1, format!("`{f}` is not a number"))))
                    .collect::<Result<_>>()?;
                if parsed.len() != cols {
                    return Err(parse_error(
                        j + 1,
                        format!("expected {cols} values, found {}", parsed.len()),
                    ));
                }
                values.extend(parsed);
            }
            out.matrices.push((
                fields[0].to_owned(),
                DMatrix::from_row_slice(rows, cols, &values),
            ));
        }
        Ok(out)
    }
}

fn column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn as_vector(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn write_kernel(text: &mut ModelText, kernel: &KernelSpec) {
    match kernel.kind {
        KernelKind::Linear => text.set("kernel", "linear"),
        KernelKind::Gaussian { mu } => {
            text.set("kernel", "gaussian");
            text.set("mu", format!("{mu:.16e}"));
        }
    }
    if let Some(r) = kernel.reduced_size {
        text.set("reduced_size", r);
    }
}

fn read_kernel(text: &ModelText) -> Result<KernelSpec> {
    let mut spec = match text.get("kernel")? {
        "linear" => KernelSpec::linear(),
        "gaussian" => KernelSpec::gaussian(text.get_parsed("mu")?),
        other => return Err(parse_error(0, format!("unknown kernel `{other}`"))),
    };
    if text.header.iter().any(|(k, _)| k == "reduced_size") {
        spec = spec.with_reduced_size(text.get_parsed("reduced_size")?);
    }
    Ok(spec)
}

/// Model text for a fitted MFPC model. `extra` header entries (a config
/// echo, say) are written after the structural keys.
pub fn flat_model_text(model: &FlatModel, extra: &[(String, String)]) -> ModelText {
    let mut text = ModelText::default();
    text.set("method", Method::Mfpc);
    text.set("k", model.k());
    text.set("dim", model.dim());
    text.set("p", model.p());
    write_kernel(&mut text, &model.kernel);
    text.header.extend(extra.iter().cloned());
    for (i, c) in model.clusters.iter().enumerate() {
        text.push_matrix(format!("projection_{}", i + 1), c.projection.clone());
        text.push_matrix(format!("center_{}", i + 1), column(&c.center_projection));
    }
    if let Some(basis) = &model.reduced_basis {
        text.push_matrix("reduced_basis", basis.clone());
    }
    text
}

pub fn flat_model_from_text(text: &ModelText) -> Result<FlatModel> {
    let k: usize = text.get_parsed("k")?;
    let kernel = read_kernel(text)?;
    let clusters = (1..=k)
        .map(|i| {
            Ok(ClusterProjection {
                projection: text.matrix(&format!("projection_{i}"))?.clone(),
                center_projection: as_vector(text.matrix(&format!("center_{i}"))?),
            })
        })
        .collect::<Result<_>>()?;
    let reduced_basis = if text.has_matrix("reduced_basis") {
        Some(text.matrix("reduced_basis")?.clone())
    } else {
        None
    };
    Ok(FlatModel {
        clusters,
        kernel,
        reduced_basis,
    })
}

pub fn baseline_model_text(model: &BaselineModel) -> ModelText {
    let mut text = ModelText::default();
    text.set("method", model.method);
    text.set("k", model.k());
    text.set("c1", format!("{:.16e}", model.params.c1));
    text.set("c2", format!("{:.16e}", model.params.c2));
    text.set("p", model.params.p);
    match &model.prototypes {
        Prototypes::Planes(planes) => {
            for (i, plane) in planes.iter().enumerate() {
                text.push_matrix(format!("w_{}", i + 1), column(&plane.w));
                text.push_matrix(format!("b_{}", i + 1), DMatrix::from_element(1, 1, plane.b));
                if let Some(c) = &plane.center {
                    text.push_matrix(format!("center_{}", i + 1), column(c));
                }
            }
        }
        Prototypes::Flats(flats) => {
            text.set("local", flats.first().is_some_and(|f| f.local));
            for (i, flat) in flats.iter().enumerate() {
                text.push_matrix(format!("w_{}", i + 1), flat.w.clone());
                text.push_matrix(format!("gamma_{}", i + 1), column(&flat.gamma));
            }
        }
    }
    text
}

pub fn baseline_model_from_text(text: &ModelText) -> Result<BaselineModel> {
    let method: Method = text.get("method")?.parse()?;
    let k: usize = text.get_parsed("k")?;
    let params = BaselineParams {
        c1: text.get_parsed("c1")?,
        c2: text.get_parsed("c2")?,
        p: text.get_parsed("p")?,
    };
    let prototypes = match method {
        Method::Kfc | Method::Lkfc => {
            let local: bool = text.get_parsed("local")?;
            Prototypes::Flats(
                (1..=k)
                    .map(|i| {
                        Ok(Flat {
                            w: text.matrix(&format!("w_{i}"))?.clone(),
                            gamma: as_vector(text.matrix(&format!("gamma_{i}"))?),
                            local,
                        })
                    })
                    .collect::<Result<_>>()?,
            )
        }
        Method::Kpc | Method::Kppc | Method::Lkppc => Prototypes::Planes(
            (1..=k)
                .map(|i| {
                    let center_name = format!("center_{i}");
                    Ok(Plane {
                        w: as_vector(text.matrix(&format!("w_{i}"))?),
                        b: text.matrix(&format!("b_{i}"))?[(0, 0)],
                        center: if text.has_matrix(&center_name) {
                            Some(as_vector(text.matrix(&center_name)?))
                        } else {
                            None
                        },
                    })
                })
                .collect::<Result<_>>()?,
        ),
        Method::Mfpc | Method::Kmeans => {
            return Err(parse_error(0, format!("`{method}` is not a plane or flat model")))
        }
    };
    Ok(BaselineModel {
        method,
        params,
        prototypes,
    })
}

pub fn save_model_text(text: &ModelText, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(text.render().as_bytes())?;
    Ok(())
}

pub fn load_model_text(path: impl AsRef<Path>) -> Result<ModelText> {
    ModelText::parse(&read_to_string(path.as_ref())?)
}
