//! Text formats: spaces (coordinate CSV, distance-matrix CSV, JSON), fields,
//! subsets, operators, and the deterministic JSON and CSV writers.
//!
//! Parsers take the file contents, so they can be driven from memory.

use std::collections::HashMap;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::metric::{MetricError, MetricSpace, PointedSpace, ScalarField};
use crate::order_iso::{CompositionOperator, MonotoneMap, OrderError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("JSON error: {0}")]
    Json(String),
    #[error("invalid metric: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid operator: {0}")]
    Operator(#[from] OrderError),
    #[error("{0}")]
    Schema(String),
    #[error("unknown point label {0:?}")]
    UnknownLabel(String),
    #[error("label {0:?} listed twice")]
    RepeatedLabel(String),
    #[error("no value for point {0:?}")]
    MissingLabel(String),
    #[error("cannot parse {text:?} as a number (line {line})")]
    Number { line: usize, text: String },
    #[error("input is empty")]
    Empty,
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormat {
    Auto,
    Coordinates,
    Matrix,
    Json,
}

fn records(text: &str) -> Result<Vec<Vec<String>>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

fn number(text: &str, line: usize) -> Result<f64, IoError> {
    text.parse::<f64>().map_err(|_| IoError::Number { line, text: text.to_string() })
}

/// Rows `id,x1,...,xk` after a header; Euclidean distances.
pub fn parse_coordinate_csv(text: &str) -> Result<MetricSpace, IoError> {
    let rows = records(text)?;
    let (header, body) = rows.split_first().ok_or(IoError::Empty)?;
    if header.len() < 2 {
        return Err(IoError::Schema("coordinate header must be id,x1,...,xk".into()));
    }
    let mut labels = Vec::with_capacity(body.len());
    let mut coords = Vec::with_capacity(body.len());
    for (i, row) in body.iter().enumerate() {
        if row.len() != header.len() {
            return Err(IoError::Schema(format!(
                "line {}: expected {} fields, found {}",
                i + 2,
                header.len(),
                row.len()
            )));
        }
        labels.push(row[0].clone());
        coords.push(row[1..].iter().map(|c| number(c, i + 2)).collect::<Result<Vec<_>, _>>()?);
    }
    if labels.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(MetricSpace::from_coordinates(labels, &coords)?)
}

/// Labels and rows of a square matrix CSV whose first row and column hold
/// the labels. Not validated as a metric.
pub fn parse_matrix_csv_raw(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let rows = records(text)?;
    let (header, body) = rows.split_first().ok_or(IoError::Empty)?;
    let labels: Vec<String> = header[1..].to_vec();
    if labels.is_empty() {
        return Err(IoError::Empty);
    }
    if body.len() != labels.len() {
        return Err(IoError::Schema(format!("{} labels but {} matrix rows", labels.len(), body.len())));
    }
    let mut matrix = Vec::with_capacity(body.len());
    for (i, row) in body.iter().enumerate() {
        if row[0] != labels[i] {
            return Err(IoError::Schema(format!(
                "row {} is labelled {:?}, expected {:?}",
                i + 1,
                row[0],
                labels[i]
            )));
        }
        matrix.push(row[1..].iter().map(|c| number(c, i + 2)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((labels, matrix))
}

pub fn parse_matrix_csv(text: &str) -> Result<MetricSpace, IoError> {
    let (labels, rows) = parse_matrix_csv_raw(text)?;
    Ok(MetricSpace::new(labels, &rows)?)
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SpaceJson {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    #[serde(default)]
    base: Option<String>,
}

/// `{"labels": [...], "dist": [[...]], "base": "<label>"}`; the base label
/// is optional.
pub fn parse_space_json(text: &str) -> Result<(MetricSpace, Option<usize>), IoError> {
    let raw: SpaceJson = serde_json::from_str(text)?;
    let space = MetricSpace::new(raw.labels, &raw.dist)?;
    let base = match raw.base {
        None => None,
        Some(label) => Some(space.index_of(&label).ok_or(IoError::UnknownLabel(label))?),
    };
    Ok((space, base))
}

fn looks_like_matrix(text: &str) -> bool {
    let Ok(rows) = records(text) else { return false };
    let Some((header, body)) = rows.split_first() else { return false };
    header.len() >= 2
        && body.len() == header.len() - 1
        && body.iter().zip(&header[1..]).all(|(row, label)| row.first() == Some(label))
}

pub fn detect_format(text: &str) -> SpaceFormat {
    if text.trim_start().starts_with('{') {
        SpaceFormat::Json
    } else if looks_like_matrix(text) {
        SpaceFormat::Matrix
    } else {
        SpaceFormat::Coordinates
    }
}

/// Parses a space and resolves its base point: `base` (a label, or an index
/// if no label matches) wins, then the JSON base, then the first point.
pub fn parse_space(text: &str, format: SpaceFormat, base: Option<&str>) -> Result<PointedSpace, IoError> {
    let format = if format == SpaceFormat::Auto { detect_format(text) } else { format };
    let (space, json_base) = match format {
        SpaceFormat::Json => parse_space_json(text)?,
        SpaceFormat::Matrix => (parse_matrix_csv(text)?, None),
        SpaceFormat::Coordinates | SpaceFormat::Auto => (parse_coordinate_csv(text)?, None),
    };
    let base = match base {
        Some(label) => match space.index_of(label) {
            Some(i) => i,
            None => label
                .parse::<usize>()
                .ok()
                .filter(|&i| i < space.len())
                .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?,
        },
        None => json_base.unwrap_or(0),
    };
    Ok(PointedSpace::new(space, base)?)
}

fn label_index(space: &MetricSpace) -> HashMap<&str, usize> {
    space.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
}

/// `id,value` rows (header optional) keyed by the space's labels.
pub fn parse_field_entries(text: &str, space: &MetricSpace) -> Result<Vec<(usize, f64)>, IoError> {
    let index = label_index(space);
    let mut rows = records(text)?;
    if rows.first().is_some_and(|r| r.len() == 2 && r[1].parse::<f64>().is_err()) {
        rows.remove(0);
    }
    let mut seen = vec![false; space.len()];
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows.iter().enumerate() {
        if row.len() != 2 {
            return Err(IoError::Schema(format!("field rows are id,value; got {} fields", row.len())));
        }
        let i = *index.get(row[0].as_str()).ok_or_else(|| IoError::UnknownLabel(row[0].clone()))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(IoError::RepeatedLabel(row[0].clone()));
        }
        let v = number(&row[1], line + 1)?;
        if !v.is_finite() {
            return Err(IoError::Number { line: line + 1, text: row[1].clone() });
        }
        out.push((i, v));
    }
    Ok(out)
}

/// A field defined on every point.
pub fn parse_field_csv(text: &str, space: &MetricSpace) -> Result<ScalarField, IoError> {
    let mut values = vec![None; space.len()];
    for (i, v) in parse_field_entries(text, space)? {
        values[i] = Some(v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| IoError::MissingLabel(space.label(i).to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScalarField::on(space, values)?)
}

/// One id per row (header `id` optional), in the listed order.
pub fn parse_subset_csv(text: &str, space: &MetricSpace) -> Result<Vec<usize>, IoError> {
    let index = label_index(space);
    let mut rows = records(text)?;
    if rows.first().is_some_and(|r| r.len() == 1 && r[0] == "id" && !index.contains_key("id")) {
        rows.remove(0);
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        for cell in row.iter().filter(|c| !c.is_empty()) {
            let i = *index.get(cell.as_str()).ok_or_else(|| IoError::UnknownLabel(cell.clone()))?;
            if out.contains(&i) {
                return Err(IoError::RepeatedLabel(cell.clone()));
            }
            out.push(i);
        }
    }
    if out.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(out)
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MapJson {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OperatorJson {
    phi: Vec<String>,
    maps: Vec<MapJson>,
}

/// `{"phi": [target labels], "maps": [...]}`: `phi[i]` is the image of the
/// i-th source point and `maps[j]` belongs to the j-th target point.
pub fn parse_operator_json(text: &str, x: &MetricSpace, y: &MetricSpace) -> Result<CompositionOperator, IoError> {
    let raw: OperatorJson = serde_json::from_str(text)?;
    if raw.phi.len() != x.len() {
        return Err(IoError::Schema(format!("phi lists {} images for {} source points", raw.phi.len(), x.len())));
    }
    let index = label_index(y);
    let phi = raw
        .phi
        .iter()
        .map(|l| index.get(l.as_str()).copied().ok_or_else(|| IoError::UnknownLabel(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let maps = raw
        .maps
        .into_iter()
        .map(|m| MonotoneMap::new(m.breakpoints, m.values, m.left_slope, m.right_slope))
        .collect::<Result<Vec<_>, _>>()?;
    if maps.len() != y.len() {
        return Err(IoError::Schema(format!("{} maps for {} target points", maps.len(), y.len())));
    }
    Ok(CompositionOperator::new(phi, maps)?)
}

pub fn operator_json(op: &CompositionOperator, y: &MetricSpace) -> String {
    let raw = OperatorJson {
        phi: op.phi().iter().map(|&t| y.label(t).to_string()).collect(),
        maps: op
            .maps()
            .iter()
            .map(|m| MapJson {
                breakpoints: m.breakpoints().to_vec(),
                values: m.values().to_vec(),
                left_slope: m.slopes().0,
                right_slope: m.slopes().1,
            })
            .collect(),
    };
    to_json_string(&raw)
}

/// Reals separated by commas, whitespace or newlines.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, IoError> {
    let out = text
        .lines()
        .enumerate()
        .flat_map(|(line, l)| {
            l.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(move |t| (line + 1, t))
        })
        .map(|(line, t)| {
            number(t, line).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(IoError::Number { line, text: t.to_string() })
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(out)
}

/// One field as a comma-separated line, in point order.
pub fn parse_field_line(line: &str, n: usize) -> Result<Vec<f64>, IoError> {
    let values = line
        .trim()
        .split(',')
        .map(|t| {
            let t = t.trim();
            number(t, 1).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(IoError::Number { line: 1, text: t.to_string() })
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(IoError::Schema(format!("expected {n} values, got {}", values.len())));
    }
    Ok(values)
}

pub fn format_field_line(values: &[f64]) -> String {
    values.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(",")
}

/// 17 significant digits, trailing zeros dropped; positional notation for
/// moderate exponents, scientific otherwise.
pub fn format_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if (0..17).contains(&exp) {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        format!("{int}.{}", trim_frac(frac))
    } else if (-5..0).contains(&exp) {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits.trim_end_matches('0'))
    } else {
        let (lead, rest) = digits.split_at(1);
        format!("{lead}.{}e{exp}", trim_frac(rest))
    };
    format!("{sign}{body}")
}

fn trim_frac(frac: &str) -> &str {
    let t = frac.trim_end_matches('0');
    if t.is_empty() {
        "0"
    } else {
        t
    }
}

/// Pretty JSON with floats from [`format_f64`]; non-finite floats are `null`.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("UTF-8 input")
}

/// Square matrix with a label row and column.
pub fn matrix_csv(labels: &[String], rows: &[Vec<f64>]) -> String {
    let header = std::iter::once(String::new()).chain(labels.iter().cloned()).collect();
    let body = labels.iter().zip(rows).map(|(l, row)| {
        std::iter::once(l.clone()).chain(row.iter().map(|&v| format_f64(v))).collect()
    });
    csv_string(std::iter::once(header).chain(body))
}

pub fn field_csv(labels: &[String], values: &[f64]) -> String {
    let header = vec!["id".to_string(), "value".to_string()];
    let body = labels.iter().zip(values).map(|(l, &v)| vec![l.clone(), format_f64(v)]);
    csv_string(std::iter::once(header).chain(body))
}

pub fn space_json(pointed: &PointedSpace) -> String {
    let space = pointed.space();
    to_json_string(&SpaceJson {
        labels: space.labels().to_vec(),
        dist: space.rows(),
        base: Some(space.label(pointed.base()).to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_f64(1.25), "1.25");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(-3.0), "-3.0");
        assert_eq!(format_f64(0.0), "0.0");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_f64(1.5e20), "1.5e20");
        assert_eq!(format_f64(0.00125), "0.00125");
        for v in [std::f64::consts::PI, 1.0 / 3.0, 1e300, -2.5e-10, 123456.789, 2f64.powi(40) + 0.025] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_is_deterministic_and_nulls_nonfinite() {
        #[derive(Serialize)]
        struct R {
            b: f64,
            a: Vec<f64>,
        }
        let s = to_json_string(&R { b: f64::INFINITY, a: vec![0.5] });
        assert_eq!(s, "{\n  \"b\": null,\n  \"a\": [\n    0.5\n  ]\n}\n");
        assert_eq!(to_json_string(&serde_json::Map::new()), "{}\n");
    }

    #[test]
    fn coordinate_loader() {
        let s = parse_coordinate_csv("id,x1\na,0\nb,1\nc,3\n").unwrap();
        assert_eq!(s.d(0, 2), 3.0);
        assert_eq!(s.labels(), &["a", "b", "c"]);
        assert!(parse_coordinate_csv("id,x1\na,0\nb\n").is_err());
        assert!(parse_coordinate_csv("id,x1\na,0\nb,zz\n").is_err());
        assert!(parse_coordinate_csv("").is_err());
    }

    #[test]
    fn matrix_loader_and_round_trip() {
        let text = ",a,b,c\na,0,1,2\nb,1,0,1\nc,2,1,0\n";
        assert_eq!(detect_format(text), SpaceFormat::Matrix);
        let s = parse_matrix_csv(text).unwrap();
        let again = parse_matrix_csv(&matrix_csv(s.labels(), &s.rows())).unwrap();
        assert_eq!(again, s);
        let bad = ",a,b\na,0,1\nb,2,0\n";
        assert!(matches!(parse_matrix_csv(bad), Err(IoError::Metric(MetricError::Asymmetric { i: 0, j: 1, .. }))));
    }

    #[test]
    fn json_loader_resolves_base() {
        let text = r#"{"labels":["x","e"],"dist":[[0,2],[2,0]],"base":"e"}"#;
        assert_eq!(detect_format(text), SpaceFormat::Json);
        let p = parse_space(text, SpaceFormat::Auto, None).unwrap();
        assert_eq!(p.base(), 1);
        assert_eq!(parse_space(text, SpaceFormat::Auto, Some("x")).unwrap().base(), 0);
        assert!(parse_space(text, SpaceFormat::Auto, Some("nope")).is_err());
        let round = parse_space(&space_json(&p), SpaceFormat::Auto, None).unwrap();
        assert_eq!(round, p);
        assert!(parse_space_json(r#"{"labels":["x"],"dist":[[0]],"extra":1}"#).is_err());
    }

    #[test]
    fn fields_and_subsets() {
        let s = parse_coordinate_csv("id,x1\na,0\nb,1\n").unwrap();
        let f = parse_field_csv("id,value\nb,2\na,1\n", &s).unwrap();
        assert_eq!(f.values(), &[1.0, 2.0]);
        assert!(matches!(parse_field_csv("a,1\n", &s), Err(IoError::MissingLabel(_))));
        assert!(matches!(parse_field_csv("a,1\na,2\n", &s), Err(IoError::RepeatedLabel(_))));
        assert!(matches!(parse_field_csv("z,1\n", &s), Err(IoError::UnknownLabel(_))));
        assert!(parse_field_csv("a,1\nb,inf\n", &s).is_err());
        assert_eq!(parse_subset_csv("id\nb\n", &s).unwrap(), vec![1]);
        assert!(parse_subset_csv("id\n", &s).is_err());
        let back = parse_field_csv(&field_csv(s.labels(), f.values()), &s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn operator_round_trip() {
        let s = parse_coordinate_csv("id,x1\na,0\nb,1\n").unwrap();
        let text = r#"{"phi":["b","a"],"maps":[
            {"breakpoints":[0],"values":[0],"left_slope":2,"right_slope":2},
            {"breakpoints":[0],"values":[1],"left_slope":1,"right_slope":1}]}"#;
        let op = parse_operator_json(text, &s, &s).unwrap();
        assert_eq!(op.apply_values(&[3.0, 5.0]).unwrap(), vec![10.0, 4.0]);
        let again = parse_operator_json(&operator_json(&op, &s), &s, &s).unwrap();
        assert_eq!(again, op);
        assert!(parse_operator_json(r#"{"phi":["a","a"],"maps":[]}"#, &s, &s).is_err());
    }

    #[test]
    fn lines_and_reals() {
        assert_eq!(parse_field_line("1, 2.5\n", 2).unwrap(), vec![1.0, 2.5]);
        assert!(parse_field_line("1", 2).is_err());
        assert!(parse_field_line("1,NaN", 2).is_err());
        assert_eq!(format_field_line(&[1.0, 0.5]), "1.0,0.5");
        assert_eq!(parse_reals("1, 2\n4 8\n").unwrap(), vec![1.0, 2.0, 4.0, 8.0]);
        assert!(parse_reals("  \n").is_err());
    }
}
