use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use lipiso_core::classify::{
    expansive_witness, family_trend, ofarrell_decompose, HorizonFamily, Property, Trend, WitnessReport,
    DEFAULT_GROWTH_FACTOR,
};
use lipiso_core::derived::{
    ae_constants, build_net_unchecked, dprime_matrix, lip_iso_certificate, littlelip_transfer_certificate,
    rho_matrix,
};
use lipiso_core::io::{
    csv_string, field_csv, format_f64, matrix_csv, parse_field_csv, parse_field_entries, parse_operator_json,
    parse_reals, parse_space, parse_subset_csv, to_json_string, IoError, SpaceFormat,
};
use lipiso_core::lipschitz::{
    bump_sum_extend, default_scales, lip_constant_with_pair, littlelip_extend_separated, mcshane_extend,
    modulus_profile, rapid_sequence_extend, subset_lip_constant, ExtensionCertificate,
};
use lipiso_core::metric::{MetricSpace, PointedSpace, ScalarField};
use lipiso_core::order_iso::{check_order_iso, factor_operator, CompositionOperator, FactorError, Oracle};
use lipiso_core::suite::{run_suite, tampered_dprime, SuiteConfig, DEFAULT_TOL};

use crate::oracle::ProcessOracle;
use crate::{Common, Failure, InputFormat, OutputFormat, SpaceArgs};

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn space_format(f: InputFormat) -> SpaceFormat {
    match f {
        InputFormat::Auto => SpaceFormat::Auto,
        InputFormat::Coordinates => SpaceFormat::Coordinates,
        InputFormat::Matrix => SpaceFormat::Matrix,
        InputFormat::Json => SpaceFormat::Json,
    }
}

fn load_space(args: &SpaceArgs) -> Result<PointedSpace, Failure> {
    let text = read(&args.space)?;
    parse_space(&text, space_format(args.space_format), args.base.as_deref())
        .map_err(|e| Failure::Input(format!("{}: {e}", args.space.display())))
}

fn load_field(path: &Path, space: &MetricSpace) -> Result<ScalarField, Failure> {
    parse_field_csv(&read(path)?, space).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

/// Prints or writes a single report in the requested format.
fn emit(common: &Common, json: String, csv: Option<String>) -> CmdResult {
    let text = match common.format {
        OutputFormat::Json => json,
        OutputFormat::Csv => csv.ok_or_else(|| Failure::Input("this report has no CSV form".into()))?,
    };
    match &common.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes several named files into the `--out` directory.
fn emit_dir(dir: &Path, files: &[(&str, String)]) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
    for (name, contents) in files {
        write_file(&dir.join(name), contents)?;
    }
    Ok(())
}

fn pair_labels(space: &MetricSpace, pair: Option<(usize, usize)>) -> Option<(String, String)> {
    pair.map(|(a, b)| (space.label(a).to_string(), space.label(b).to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Failure::Input(format!("cannot parse {s:?} in {what}"))))
        .collect()
}

// validate

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

pub fn validate(args: &SpaceArgs, common: &Common) -> CmdResult {
    let text = read(&args.space)?;
    match parse_space(&text, space_format(args.space_format), args.base.as_deref()) {
        Ok(p) => {
            let report = ValidateReport {
                valid: true,
                points: Some(p.len()),
                base: Some(p.space().label(p.base()).to_string()),
                violation: None,
                message: None,
            };
            let csv = csv_string([vec!["valid".into()], vec!["true".into()]]);
            emit(common, to_json_string(&report), Some(csv))
        }
        Err(IoError::Metric(e)) => {
            let report = ValidateReport {
                valid: false,
                points: None,
                base: None,
                violation: Some(e.kind().to_string()),
                message: Some(e.to_string()),
            };
            let csv = csv_string([
                vec!["valid".into(), "violation".into(), "message".into()],
                vec!["false".into(), e.kind().into(), e.to_string()],
            ]);
            emit(common, to_json_string(&report), Some(csv))?;
            Err(Failure::Input(format!("{}: {e}", args.space.display())))
        }
        Err(e) => Err(Failure::Input(format!("{}: {e}", args.space.display()))),
    }
}

// classify

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Classify a single space.
    #[arg(long, conflicts_with = "family")]
    space: Option<PathBuf>,
    #[arg(long)]
    base: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    space_format: InputFormat,
    /// Family spec such as `name=doubled,b=2` or `name=file,path=pts.txt`.
    #[arg(long, requires = "horizons")]
    family: Option<String>,
    /// Comma-separated horizons, e.g. `10,20,40`.
    #[arg(long)]
    horizons: Option<String>,
    /// Property names (repeatable); `name(eps)` or `name` with `--epsilon`.
    /// Defaults to every property that applies.
    #[arg(long)]
    property: Vec<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Noted when the expansive witness falls below it.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    #[command(flatten)]
    common: Common,
}

enum Check {
    Expansive,
    Prop(Property),
}

fn checks(names: &[String], epsilon: Option<f64>, single_space: bool) -> Result<Vec<Check>, Failure> {
    let parse = |name: &str| -> Result<Check, Failure> {
        if name == "expansive" {
            return Ok(Check::Expansive);
        }
        let prop = if name.contains('(') { name.parse::<Property>()? } else { Property::parse(name, epsilon)? };
        Ok(Check::Prop(prop))
    };
    if !names.is_empty() {
        return names.iter().map(|n| parse(n)).collect();
    }
    let mut out = Vec::new();
    if single_space {
        out.push(Check::Expansive);
    }
    out.push(Check::Prop(Property::ExpansiveAtInf));
    out.push(Check::Prop(Property::SeparationGap));
    if let Some(eps) = epsilon {
        out.push(Check::Prop(Property::parse("almost_expansive", Some(eps))?));
        out.push(Check::Prop(Property::Ofarrell { epsilon: eps }));
        out.push(Check::Prop(Property::XEpsilon { epsilon: eps }));
    }
    Ok(out)
}

fn load_family(spec: &str) -> Result<HorizonFamily, Failure> {
    Ok(HorizonFamily::parse_with(spec, |path| {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
        parse_reals(&text).map_err(|e| e.to_string())
    })?)
}

fn reports_csv(reports: &[WitnessReport]) -> String {
    let header = ["property", "horizon", "verdict", "witness", "attained", "note"];
    let rows = reports.iter().map(|r| {
        vec![
            r.property.clone(),
            r.horizon.map(|h| h.to_string()).unwrap_or_default(),
            serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            opt(r.witness),
            r.attained.map(|a| a.to_string()).unwrap_or_default(),
            r.note.clone().unwrap_or_default(),
        ]
    });
    csv_string(std::iter::once(header.iter().map(|s| s.to_string()).collect()).chain(rows))
}

pub fn classify(args: &ClassifyArgs) -> CmdResult {
    let mut reports = Vec::new();
    match (&args.space, &args.family) {
        (Some(path), None) => {
            let pointed = load_space(&SpaceArgs {
                space: path.clone(),
                base: args.base.clone(),
                space_format: args.space_format,
            })?;
            for check in checks(&args.property, args.epsilon, true)? {
                reports.push(match check {
                    Check::Expansive => expansive_witness(&pointed, args.threshold),
                    Check::Prop(p) => p.evaluate(&pointed)?,
                });
            }
        }
        (None, Some(spec)) => {
            let family = load_family(spec)?;
            let horizons: Vec<usize> = parse_list(args.horizons.as_deref().unwrap_or(""), "--horizons")?;
            if horizons.is_empty() {
                return Err(Failure::Input("--horizons is empty".into()));
            }
            let checks = checks(&args.property, args.epsilon, false)?;
            for &n in &horizons {
                let pointed = family.sample(n)?;
                for check in &checks {
                    let mut r = match check {
                        Check::Expansive => expansive_witness(&pointed, args.threshold),
                        Check::Prop(p) => p.evaluate(&pointed)?,
                    };
                    r.horizon = Some(n);
                    reports.push(r);
                }
            }
        }
        _ => return Err(Failure::Input("give exactly one of --space or --family".into())),
    }
    emit(&args.common, to_json_string(&reports), Some(reports_csv(&reports)))
}

// derive

#[derive(Debug, Clone, Args)]
pub struct DeriveArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Number of certified constants C_1..C_k.
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Optional field for the small-scale transfer check.
    #[arg(long, requires = "delta")]
    field: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    /// Directory for dprime.csv, rho.csv and certificate.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Serialize)]
struct MatrixReport {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct DeriveCertificate {
    base: String,
    c1: f64,
    constants: Vec<f64>,
    vacuous: Vec<bool>,
    k: f64,
    k_substituted: bool,
    gamma: Vec<String>,
    zeta: BTreeMap<String, f64>,
    lemma_checks: Vec<lipiso_core::derived::LemmaCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    littlelip_transfer: Option<lipiso_core::derived::LittleLipTransfer>,
    pass: bool,
}

#[derive(Serialize)]
struct DeriveReport {
    dprime: MatrixReport,
    rho: MatrixReport,
    certificate: DeriveCertificate,
}

pub fn derive(args: &DeriveArgs) -> CmdResult {
    let pointed = load_space(&args.space)?;
    let space = pointed.space();
    let labels = space.labels().to_vec();
    let dprime = dprime_matrix(&pointed)?;
    let rho = rho_matrix(&pointed);
    let constants = ae_constants(&pointed, args.k_max)?;
    let net = build_net_unchecked(&pointed, &constants)?;
    let transfer = match &args.field {
        Some(path) => {
            let f = load_field(path, space)?;
            Some(littlelip_transfer_certificate(&pointed, &net, &f, args.delta.unwrap_or(1.0))?)
        }
        None => None,
    };
    let pass = net.first_failure().is_none() && transfer.as_ref().is_none_or(|t| t.holds);
    let certificate = DeriveCertificate {
        base: space.label(pointed.base()).to_string(),
        c1: net.c1,
        constants: net.constants.values().to_vec(),
        vacuous: net.constants.vacuous.clone(),
        k: net.k,
        k_substituted: net.k_substituted,
        gamma: net.gamma.iter().map(|&g| space.label(g).to_string()).collect(),
        zeta: labels.iter().cloned().zip(net.zeta.values().iter().copied()).collect(),
        lemma_checks: net.checks.clone(),
        littlelip_transfer: transfer,
        pass,
    };
    let dprime_rows = dprime.rows();
    match &args.out {
        Some(dir) => emit_dir(
            dir,
            &[
                ("dprime.csv", matrix_csv(&labels, &dprime_rows)),
                ("rho.csv", matrix_csv(&labels, &rho)),
                ("certificate.json", to_json_string(&certificate)),
            ],
        )?,
        None => match args.format {
            OutputFormat::Csv => print!("{}", matrix_csv(&labels, &dprime_rows)),
            OutputFormat::Json => print!(
                "{}",
                to_json_string(&DeriveReport {
                    dprime: MatrixReport { labels: labels.clone(), matrix: dprime_rows },
                    rho: MatrixReport { labels, matrix: rho },
                    certificate,
                })
            ),
        },
    }
    if let Some(fail) = net.first_failure() {
        return Err(Failure::Violation(format!("net check {} failed, margin {:?}", fail.name, fail.margin)));
    }
    if !pass {
        return Err(Failure::Violation("small-scale transfer bound failed".into()));
    }
    Ok(())
}

// extend

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Mcshane,
    Littlelip,
    Bump,
    Rapid,
}

#[derive(Debug, Clone, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Prescribed values as `id,value` rows; the listed points form the subset.
    #[arg(long)]
    field: PathBuf,
    /// Restricts the prescribed values to the listed ids, in this order.
    #[arg(long)]
    subset: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Lipschitz constant for mcshane and littlelip; defaults to the subset's own.
    #[arg(long)]
    k: Option<f64>,
    /// Separation gap for littlelip: distinct subset points lie more than this apart.
    #[arg(long)]
    gap: Option<f64>,
    /// Common bump radius; defaults to half the smallest center separation.
    #[arg(long)]
    radius: Option<f64>,
    /// Limit point of the rapid sequence; its prescribed value is the limit value.
    #[arg(long)]
    limit: Option<String>,
    /// Directory for extension.csv and certificate.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Serialize)]
struct ExtendReport {
    labels: Vec<String>,
    values: Vec<f64>,
    certificate: ExtensionCertificate,
}

pub fn extend(args: &ExtendArgs) -> CmdResult {
    let pointed = load_space(&args.space)?;
    let space = pointed.space();
    let field_text = read(&args.field)?;
    let entries = parse_field_entries(&field_text, space).map_err(|e| Failure::Input(format!("{}: {e}", args.field.display())))?;
    if entries.is_empty() {
        return Err(Failure::Input(format!("{}: no prescribed values", args.field.display())));
    }
    let (subset, f0): (Vec<usize>, Vec<f64>) = match &args.subset {
        Some(path) => {
            let ids = parse_subset_csv(&read(path)?, space).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let mut values = Vec::with_capacity(ids.len());
            for &i in &ids {
                let v = entries
                    .iter()
                    .find(|(j, _)| *j == i)
                    .ok_or_else(|| IoError::MissingLabel(space.label(i).to_string()))?
                    .1;
                values.push(v);
            }
            (ids, values)
        }
        None => entries.iter().copied().unzip(),
    };
    let own = subset_lip_constant(space, &subset, &f0, args.alpha);
    let mut constants = BTreeMap::new();
    let (name, extended) = match args.method {
        Method::Mcshane => {
            let k = args.k.unwrap_or(own);
            constants.insert("K".to_string(), k);
            ("mcshane", mcshane_extend(space, &subset, &f0, k, args.alpha)?)
        }
        Method::Littlelip => {
            let gap = args.gap.ok_or_else(|| Failure::Input("littlelip needs --gap".into()))?;
            let c = args.k.unwrap_or(own);
            constants.insert("C".to_string(), c);
            constants.insert("gap".to_string(), gap);
            ("littlelip", littlelip_extend_separated(space, &subset, &f0, args.alpha, c, gap)?)
        }
        Method::Bump => {
            let radius = match args.radius {
                Some(r) => r,
                None => {
                    let mut sep = f64::INFINITY;
                    for (a, &p) in subset.iter().enumerate() {
                        for &q in &subset[a + 1..] {
                            sep = sep.min(space.d(p, q));
                        }
                    }
                    if sep.is_finite() { sep / 2.0 } else { 1.0 }
                }
            };
            constants.insert("radius".to_string(), radius);
            let radii = vec![radius; subset.len()];
            ("bump", bump_sum_extend(space, &subset, &radii, &f0, args.alpha)?)
        }
        Method::Rapid => {
            let label = args.limit.as_deref().ok_or_else(|| Failure::Input("rapid needs --limit".into()))?;
            let limit = space.index_of(label).ok_or_else(|| IoError::UnknownLabel(label.to_string()))?;
            let pos = subset
                .iter()
                .position(|&i| i == limit)
                .ok_or_else(|| Failure::Input(format!("no prescribed value for the limit point {label:?}")))?;
            let limit_value = f0[pos];
            constants.insert("limit_value".to_string(), limit_value);
            let seq: Vec<usize> = subset.iter().copied().filter(|&i| i != limit).collect();
            let seq_values: Vec<f64> =
                subset.iter().zip(&f0).filter(|(&i, _)| i != limit).map(|(_, &v)| v).collect();
            ("rapid", rapid_sequence_extend(space, &seq, &seq_values, limit, limit_value, args.alpha)?)
        }
    };
    constants.insert("alpha".to_string(), args.alpha);
    let certificate = ExtensionCertificate::build(name, constants, space, &subset, &f0, &extended, args.alpha)?;
    let labels = space.labels().to_vec();
    let csv = field_csv(&labels, extended.values());
    match &args.out {
        Some(dir) => emit_dir(dir, &[("extension.csv", csv), ("certificate.json", to_json_string(&certificate))]),
        None => match args.format {
            OutputFormat::Csv => {
                print!("{csv}");
                Ok(())
            }
            OutputFormat::Json => {
                let report = ExtendReport { labels, values: extended.into_values(), certificate };
                print!("{}", to_json_string(&report));
                Ok(())
            }
        },
    }
}

// seminorm

#[derive(Debug, Clone, Args)]
pub struct SeminormArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    field: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Comma-separated scales for the modulus profile; defaults to distance deciles.
    #[arg(long)]
    scales: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct SeminormReport {
    alpha: f64,
    seminorm: f64,
    extremal: Option<(String, String)>,
    modulus: lipiso_core::lipschitz::ModulusProfile,
    /// Bounds for `f -> f / xi` against the derived metric (at exponent 1).
    scale_isomorphism: lipiso_core::derived::LipIsoCertificate,
}

pub fn seminorm(args: &SeminormArgs) -> CmdResult {
    let pointed = load_space(&args.space)?;
    let space = pointed.space();
    let f = load_field(&args.field, space)?;
    let (seminorm, pair) = lip_constant_with_pair(space, &f, args.alpha)?;
    let scales = match &args.scales {
        Some(s) => parse_list(s, "--scales")?,
        None => default_scales(space),
    };
    let modulus = modulus_profile(space, &f, args.alpha, &scales)?;
    let dprime = dprime_matrix(&pointed)?;
    let cert = lip_iso_certificate(&pointed, &dprime, &f)?;
    let holds = cert.forward_holds && cert.inverse_holds;
    let csv = csv_string(
        std::iter::once(vec!["scale".to_string(), "ratio".to_string()])
            .chain(modulus.scales.iter().zip(&modulus.ratios).map(|(&s, &r)| vec![format_f64(s), format_f64(r)])),
    );
    let report = SeminormReport {
        alpha: args.alpha,
        seminorm,
        extremal: pair_labels(space, pair),
        modulus,
        scale_isomorphism: cert,
    };
    emit(&args.common, to_json_string(&report), Some(csv))?;
    if holds {
        Ok(())
    } else {
        Err(Failure::Violation("a scale-isomorphism seminorm bound failed".into()))
    }
}

// iso-check

#[derive(Debug, Clone, Args)]
pub struct IsoCheckArgs {
    /// Source space X.
    #[command(flatten)]
    space: SpaceArgs,
    /// Target space Y; defaults to X.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Operator JSON on (X, Y).
    #[arg(long, conflicts_with = "oracle_cmd")]
    operator: Option<PathBuf>,
    /// Shell command reading one field per line on stdin and answering one per line.
    #[arg(long)]
    oracle_cmd: Option<String>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also recover the operator from the oracle.
    #[arg(long)]
    factor: bool,
    /// Probe levels for factoring.
    #[arg(long, default_value = "-4,-2,-1,-0.5,0,0.5,1,2,4")]
    grid: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct IsoCheckReport {
    verdict: lipiso_core::order_iso::OrderIsoVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    factored: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_error: Option<serde_json::Value>,
}

pub fn iso_check(args: &IsoCheckArgs) -> CmdResult {
    let x = load_space(&args.space)?;
    let y = match &args.target {
        Some(path) => load_space(&SpaceArgs { space: path.clone(), base: None, space_format: InputFormat::Auto })?,
        None => x.clone(),
    };
    let (xs, ys) = (x.space(), y.space());
    let grid: Vec<f64> = parse_list(&args.grid, "--grid")?;
    let n = xs.len();

    let mut process;
    let op: CompositionOperator;
    let oracle: &mut Oracle = match (&args.operator, &args.oracle_cmd) {
        (Some(path), None) => {
            op = parse_operator_json(&read(path)?, xs, ys).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            process = None;
            &mut |f: &[f64]| op.apply_values(f).map_err(|e| e.to_string())
        }
        (None, Some(cmd)) => {
            process = Some(ProcessOracle::spawn(cmd, ys.len())?);
            let p = process.as_mut().expect("just set");
            &mut move |f: &[f64]| p.call(f)
        }
        _ => return Err(Failure::Input("give exactly one of --operator or --oracle-cmd".into())),
    };

    let verdict = check_order_iso(oracle, n, args.trials, args.seed)?;
    let (factored, factor_error) = if args.factor && verdict.oracle_error.is_none() {
        match factor_operator(oracle, xs, ys, &grid) {
            Ok(op) => (Some(serde_json::from_str(&lipiso_core::io::operator_json(&op, ys))?), None),
            Err(FactorError::Inconsistent(why)) => (None, Some(serde_json::to_value(why)?)),
            Err(FactorError::Setup(e)) => return Err(Failure::Input(e.to_string())),
        }
    } else {
        (None, None)
    };
    drop(process);
    let pass = verdict.pass && factor_error.is_none();
    let csv = csv_string([
        vec!["pass".to_string(), "trials".to_string(), "pairs_checked".to_string()],
        vec![verdict.pass.to_string(), verdict.trials.to_string(), verdict.pairs_checked.to_string()],
    ]);
    let oracle_error = verdict.oracle_error.clone();
    let report = IsoCheckReport { verdict, factored, factor_error };
    emit(&args.common, to_json_string(&report), Some(csv))?;
    if let Some(e) = oracle_error {
        return Err(Failure::Input(format!("oracle failed: {e}")));
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Violation("operator is not an order isomorphism of the expected form".into()))
    }
}

// territories

#[derive(Serialize)]
struct TerritoryReport {
    epsilon: f64,
    components: usize,
    step_diameters: Vec<usize>,
    step_bounded: Vec<bool>,
    territories: Vec<Vec<String>>,
}

pub fn territories(args: &SpaceArgs, epsilon: f64, common: &Common) -> CmdResult {
    let pointed = load_space(args)?;
    let space = pointed.space();
    let t = ofarrell_decompose(space, epsilon)?;
    let csv = csv_string(
        std::iter::once(vec!["id".to_string(), "component".to_string()])
            .chain(t.component_of.iter().enumerate().map(|(x, c)| vec![space.label(x).to_string(), c.to_string()])),
    );
    let report = TerritoryReport {
        epsilon,
        components: t.component_count,
        territories: t
            .components()
            .iter()
            .map(|c| c.iter().map(|&x| space.label(x).to_string()).collect())
            .collect(),
        step_diameters: t.step_diameter,
        step_bounded: t.step_bounded,
    };
    emit(common, to_json_string(&report), Some(csv))
}

// family-scan

#[derive(Debug, Clone, Args)]
pub struct FamilyScanArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "10,20,40")]
    horizons: String,
    #[arg(long, default_value = "expansive_at_inf")]
    property: String,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Consecutive witness ratio that counts as growth.
    #[arg(long, default_value_t = DEFAULT_GROWTH_FACTOR)]
    growth_factor: f64,
    #[command(flatten)]
    common: Common,
}

pub fn family_scan(args: &FamilyScanArgs) -> CmdResult {
    let family = load_family(&args.family)?;
    let horizons: Vec<usize> = parse_list(&args.horizons, "--horizons")?;
    let property = if args.property.contains('(') {
        args.property.parse::<Property>()?
    } else {
        Property::parse(&args.property, args.epsilon)?
    };
    let trend = family_trend(&family, property, &horizons, args.growth_factor)?;
    let header = ["horizon", "verdict", "witness", "ratio", "trend"].map(String::from).to_vec();
    let trend_name = if trend.trend == Trend::Diverging { "diverging" } else { "stable" };
    let rows = trend.reports.iter().enumerate().map(|(i, r)| {
        vec![
            r.horizon.map(|h| h.to_string()).unwrap_or_default(),
            serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            opt(r.witness),
            if i == 0 { String::new() } else { format_f64(trend.ratios[i - 1]) },
            trend_name.to_string(),
        ]
    });
    let csv = csv_string(std::iter::once(header).chain(rows));
    emit(&args.common, to_json_string(&trend), Some(csv))
}

// verify-suite

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Replace the closed form of d' by a deliberately wrong one.
    #[arg(long)]
    tamper: bool,
    #[command(flatten)]
    common: Common,
}

pub fn verify_suite(args: &SuiteArgs) -> CmdResult {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", args.tol)));
    }
    if args.trials == 0 {
        return Err(Failure::Input("--trials must be positive".into()));
    }
    let mut config = SuiteConfig::new(args.trials, args.seed);
    config.tol = args.tol;
    if args.tamper {
        config.dprime = tampered_dprime;
    }
    let report = run_suite(&config);
    let header = ["invariant", "claim", "checked", "violations"].map(String::from).to_vec();
    let rows = report.invariants.iter().map(|r| {
        vec![r.name.to_string(), r.claim.to_string(), r.checked.to_string(), r.violations.to_string()]
    });
    let csv = csv_string(std::iter::once(header).chain(rows));
    emit(&args.common, to_json_string(&report), Some(csv))?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Violation(format!("{} invariant violations", report.total_violations)))
    }
}
