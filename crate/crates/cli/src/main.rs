use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sublaplace::harness::{
    ad_vs_fd_report, generate_grid, limit_diagram_check, run_verification, GridSpec, Mode, ResidualReport, Sweep,
};
use sublaplace::operators::{closed_form_audit, negh_residual, AuditRecord};
use sublaplace::suite::{self, CriterionOutcome};
use sublaplace::{Error, FamilyTag, OperatorTag, SolutionFamily, Space, SpaceParams};

const OUTPUT_DIR_VAR: &str = "SUBLAPLACE_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "sublaplace", version, about = "Residual certification for sub-Riemannian p-Laplace solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one operator on one family over a grid, or the whole acceptance suite with --all.
    Verify(VerifyArgs),
    /// Evaluate several operators over the same grid and parameter product.
    Sweep(SweepArgs),
    /// Check the four edges of the limit diagram.
    Limits(LimitsArgs),
    /// Compare jets with central finite differences.
    OracleCompare(OracleArgs),
    /// Compare jet values with displayed closed forms. Always exits 0.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SpaceKind {
    Grushin,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Vanishing,
    Nonzero,
}

fn parse_p(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > 1.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(format!("p must lie in (1, inf), got {p}"))
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got {s}"))
    }
}

fn parse_op(s: &str) -> Result<OperatorTag, String> {
    s.parse::<OperatorTag>().map_err(|e| e.to_string())
}

fn parse_family(s: &str) -> Result<FamilyTag, String> {
    s.parse::<FamilyTag>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
struct SpaceArgs {
    #[arg(long, value_enum, default_value = "grushin")]
    space: SpaceKind,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite, allow_hyphen_values = true)]
    c: f64,
}

impl SpaceArgs {
    fn space(&self) -> Result<Space, Error> {
        match self.space {
            SpaceKind::Grushin => Space::grushin(self.n, self.a, self.b, self.c),
            SpaceKind::Heisenberg => Space::heisenberg(self.n),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Number of grid points [default: 64, or 20 for audit].
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = suite::SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.5, value_parser = parse_finite)]
    r_min: f64,
    #[arg(long, default_value_t = 2.0, value_parser = parse_finite)]
    r_max: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_finite)]
    min_frame_offset: f64,
    #[arg(long, default_value_t = 0.01, value_parser = parse_finite)]
    min_horizontal_radius2: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_finite)]
    branch_margin: f64,
}

impl GridArgs {
    fn spec(&self, space: Space) -> GridSpec {
        self.spec_with_default(space, 64)
    }

    fn spec_with_default(&self, space: Space, count: usize) -> GridSpec {
        GridSpec {
            space,
            count: self.count.unwrap_or(count),
            seed: self.seed,
            r_min: self.r_min,
            r_max: self.r_max,
            min_frame_offset: self.min_frame_offset,
            min_horizontal_radius2: self.min_horizontal_radius2,
            branch_margin: self.branch_margin,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file; defaults to standard output, or to a file in $SUBLAPLACE_OUTPUT_DIR when set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Comma-separated p values.
    #[arg(long, value_delimiter = ',', value_parser = parse_p)]
    p: Option<Vec<f64>>,
    /// Comma-separated L values.
    #[arg(long = "L", value_delimiter = ',', value_parser = parse_finite, allow_hyphen_values = true)]
    l: Option<Vec<f64>>,
}

impl ParamArgs {
    fn p_list(&self) -> Vec<f64> {
        self.p.clone().unwrap_or_else(|| suite::MODIFIED_P.to_vec())
    }

    fn l_list(&self) -> Vec<f64> {
        self.l.clone().unwrap_or_else(|| suite::L_SWEEP.to_vec())
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run the full acceptance suite.
    #[arg(long)]
    all: bool,
    #[arg(long, value_parser = parse_op)]
    op: Option<OperatorTag>,
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyTag>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "vanishing")]
    mode: ModeArg,
    #[arg(long, value_parser = parse_finite)]
    tol: Option<f64>,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated operator names.
    #[arg(long, value_delimiter = ',', value_parser = parse_op)]
    op: Option<Vec<OperatorTag>>,
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyTag>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "vanishing")]
    mode: ModeArg,
    #[arg(long, value_parser = parse_finite)]
    tol: Option<f64>,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    /// Strictly increasing p ladder.
    #[arg(long, value_delimiter = ',', value_parser = parse_p, default_values_t = suite::LADDER.to_vec())]
    ladder: Vec<f64>,
    #[arg(long = "L", value_delimiter = ',', value_parser = parse_finite, allow_hyphen_values = true)]
    l: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_finite, default_value_t = suite::INFINITY_TOL)]
    tol: f64,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Restrict to one family; by default every family on the space.
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyTag>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(out: &OutputArgs, stem: &str, json: &str, csv: impl FnOnce() -> Result<String, Failure>) -> Result<(), Failure> {
    let (body, ext) = match out.format {
        Format::Json => (format!("{json}\n"), "json"),
        Format::Csv => (csv()?, "csv"),
    };
    let path = out
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{stem}.{ext}"))));
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            }
            fs::write(&p, body).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Usage(e.to_string()))
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn reports_csv(reports: &[ResidualReport]) -> Result<String, Failure> {
    let mut out = String::new();
    for (k, r) in reports.iter().enumerate() {
        let text = r.to_csv()?;
        // One header for a block of reports on a common space.
        let body = if k == 0 { text.as_str() } else { text.split_once('\n').map_or("", |x| x.1) };
        out.push_str(body);
    }
    Ok(out)
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Vanishing => Mode::Vanishing,
        ModeArg::Nonzero => Mode::Nonzero,
    }
}

fn default_family(op: OperatorTag, space: &Space) -> FamilyTag {
    let (radial, core, inf) = FamilyTag::for_space(space);
    match op {
        OperatorTag::PLaplacian => radial,
        OperatorTag::ModifiedInfinity | OperatorTag::InfinityLaplacian => inf,
        _ => core,
    }
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    criterion: u8,
    title: &'a str,
    check: &'a str,
    pass: bool,
    statistic: f64,
    detail: &'a str,
}

fn run_suite(out: &OutputArgs) -> Result<ExitCode, Failure> {
    let outcomes: Vec<CriterionOutcome> = suite::run_all()?;
    for o in &outcomes {
        eprintln!("{o}");
    }
    let pass = outcomes.iter().all(|o| o.pass);
    emit(out, "verify-all", &to_json(&outcomes)?, || {
        csv_rows(outcomes.iter().flat_map(|o| {
            o.checks.iter().map(move |c| CheckRow {
                criterion: o.id,
                title: &o.title,
                check: &c.label,
                pass: c.pass,
                statistic: c.statistic,
                detail: &c.detail,
            })
        }))
    })?;
    Ok(status(pass))
}

fn sweep_for(op: OperatorTag, family: Option<FamilyTag>, space: &Space, params: &ParamArgs, mode: ModeArg, tol: Option<f64>) -> Sweep {
    let mode = mode_of(mode);
    Sweep {
        op,
        family: family.unwrap_or_else(|| default_family(op, space)),
        p: params.p_list(),
        l: params.l_list(),
        tol: tol.unwrap_or(mode.default_tolerance()),
        mode,
    }
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    if args.all {
        return run_suite(&args.out);
    }
    let space = args.space.space()?;
    let op = args.op.unwrap_or(OperatorTag::ModifiedPLaplacian);
    let sweep = sweep_for(op, args.family, &space, &args.params, args.mode, args.tol);
    let points = generate_grid(&args.grid.spec(space))?;
    let report = run_verification(&sweep, &space, &points)?;
    eprintln!(
        "{} on {}: {} records, max_rel {:.3e}, min_rel {:.3e}, {}",
        report.operator,
        report.family,
        report.residuals.len(),
        report.max_rel,
        report.min_rel,
        if report.pass { "PASS" } else { "FAIL" }
    );
    emit(&args.out, "verify", &report.to_json()?, || Ok(report.to_csv()?))?;
    Ok(status(report.pass))
}

fn sweep(args: SweepArgs) -> Result<ExitCode, Failure> {
    let space = args.space.space()?;
    let ops = args
        .op
        .clone()
        .unwrap_or_else(|| vec![OperatorTag::ModifiedPLaplacian, OperatorTag::ModifiedInfinity]);
    let points = generate_grid(&args.grid.spec(space))?;
    let mut reports = Vec::new();
    for op in ops {
        let sweep = sweep_for(op, args.family, &space, &args.params, args.mode, args.tol);
        let r = run_verification(&sweep, &space, &points)?;
        eprintln!("{} on {}: max_rel {:.3e} {}", r.operator, r.family, r.max_rel, if r.pass { "PASS" } else { "FAIL" });
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    emit(&args.out, "sweep", &to_json(&reports)?, || reports_csv(&reports))?;
    Ok(status(pass))
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    edge: &'a str,
    checks: usize,
    failures: usize,
    worst: f64,
    pass: bool,
}

fn limits(args: LimitsArgs) -> Result<ExitCode, Failure> {
    let space = args.space.space()?;
    let points = generate_grid(&args.grid.spec(space))?;
    let l = args.l.clone().unwrap_or_else(|| suite::L_SWEEP.to_vec());
    let report = limit_diagram_check(&space, &points, &l, &args.ladder, args.tol)?;
    for e in &report.edges {
        eprintln!("edge {:<6} {} ({} checks, worst {:.3e})", e.edge, if e.pass { "PASS" } else { "FAIL" }, e.checks, e.worst);
    }
    emit(&args.out, "limits", &to_json(&report)?, || {
        csv_rows(report.edges.iter().map(|e| EdgeRow {
            edge: &e.edge,
            checks: e.checks,
            failures: e.failures,
            worst: e.worst,
            pass: e.pass,
        }))
    })?;
    Ok(status(report.pass))
}

fn oracle_compare(args: OracleArgs) -> Result<ExitCode, Failure> {
    let space = args.space.space()?;
    let points = generate_grid(&args.grid.spec(space))?;
    let (radial, core, inf) = FamilyTag::for_space(&space);
    let tags = match args.family {
        Some(t) => vec![t],
        None => vec![radial, core, inf],
    };
    let mut fams = Vec::new();
    for tag in tags {
        let ps = if tag.is_infinity() { vec![f64::INFINITY] } else { args.params.p_list() };
        let ls = if tag.ignores_l() { vec![0.0] } else { args.params.l_list() };
        for &p in &ps {
            for &l in &ls {
                fams.push(SolutionFamily::new(tag, SpaceParams::new(space, p, l)?)?);
            }
        }
    }
    let reports = fams
        .iter()
        .map(|f| ad_vs_fd_report(f, &points))
        .collect::<Result<Vec<_>, Error>>()?;
    let pass = !reports.is_empty() && reports.iter().all(|r| r.pass);
    let grad = reports.iter().map(|r| r.grad_max).fold(0.0, f64::max);
    let hess = reports.iter().map(|r| r.hess_max).fold(0.0, f64::max);
    eprintln!("{} families: gradient worst {grad:.3e}, Hessian worst {hess:.3e}", reports.len());
    emit(&args.out, "oracle-compare", &to_json(&reports)?, || {
        #[derive(Serialize)]
        struct Row<'a> {
            family: &'a str,
            p: Option<f64>,
            #[serde(rename = "L")]
            l: f64,
            grad_max: f64,
            hess_max: f64,
            pass: bool,
        }
        csv_rows(reports.iter().map(|r| Row {
            family: &r.family,
            p: r.p,
            l: r.l,
            grad_max: r.grad_max,
            hess_max: r.hess_max,
            pass: r.pass,
        }))
    })?;
    Ok(status(pass))
}

#[derive(Serialize)]
struct NeghAudit {
    point: Vec<f64>,
    p: f64,
    #[serde(rename = "L")]
    l: f64,
    computed: [f64; 2],
    displayed_rhs: [f64; 2],
    rhs_ratio: Option<[f64; 2]>,
    rhs_deviation: f64,
    reduced: [f64; 2],
    displayed_reduced: [f64; 2],
    reduced_deviation: f64,
}

#[derive(Serialize)]
struct AuditOutput {
    closed_forms: Vec<AuditRecord>,
    negh: Vec<NeghAudit>,
}

#[derive(Serialize)]
struct AuditRow<'a> {
    kind: &'a str,
    point_index: usize,
    p: f64,
    #[serde(rename = "L")]
    l: f64,
    form: &'a str,
    ratio_re: Option<f64>,
    ratio_im: Option<f64>,
    deviation: f64,
}

fn pair(z: sublaplace::C64) -> [f64; 2] {
    [z.re, z.im]
}

fn audit(args: AuditArgs) -> Result<ExitCode, Failure> {
    let space = Space::heisenberg(args.n)?;
    let points = generate_grid(&args.grid.spec_with_default(space, suite::NORMVAL_POINTS))?;
    let p_list = args.params.p.clone().unwrap_or_else(|| suite::NORMVAL_P.to_vec());
    let l_list = args.params.l_list();
    let mut closed_forms = Vec::new();
    let mut rows_meta = Vec::new();
    for &p in &p_list {
        for &l in &l_list {
            let sp = SpaceParams::new(space, p, l)?;
            for (i, pt) in points.iter().enumerate() {
                match closed_form_audit(&sp, pt) {
                    Ok(rec) => {
                        closed_forms.push(rec);
                        rows_meta.push(i);
                    }
                    Err(Error::CriticalExponent { .. }) => break,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    let mut negh = Vec::new();
    if args.n == 1 {
        for &p in &suite::NEGH_P {
            for &l in &suite::NEGG_L {
                let sp = SpaceParams::new(space, p, l)?;
                for pt in &points {
                    let r = negh_residual(&sp, pt)?;
                    let ratio = (r.displayed_rhs.norm() > 0.0).then(|| pair(r.computed.residual / r.displayed_rhs));
                    negh.push(NeghAudit {
                        point: pt.clone(),
                        p,
                        l,
                        computed: pair(r.computed.residual),
                        displayed_rhs: pair(r.displayed_rhs),
                        rhs_ratio: ratio,
                        rhs_deviation: (r.computed.residual - r.displayed_rhs).norm() / r.computed.residual.norm().max(1e-300),
                        reduced: pair(r.reduced),
                        displayed_reduced: pair(r.displayed_reduced),
                        reduced_deviation: (r.reduced - r.displayed_reduced).norm() / r.reduced.norm().max(1e-300),
                    });
                }
            }
        }
    }
    let worst = |name: &str| {
        closed_forms
            .iter()
            .filter_map(|a| a.form(name))
            .map(|f| f.deviation)
            .fold(0.0, f64::max)
    };
    for name in ["norm_squared", "gradient_pairing", "divergence", "combined"] {
        eprintln!("closed form {name:<17} max deviation {:.3e}", worst(name));
    }
    if !negh.is_empty() {
        let rhs = negh.iter().map(|a| a.rhs_deviation).fold(0.0, f64::max);
        let red = negh.iter().map(|a| a.reduced_deviation).fold(0.0, f64::max);
        eprintln!("H^1 final display max relative discrepancy {rhs:.3e}; reduced-factor display {red:.3e}");
    }
    let output = AuditOutput { closed_forms, negh };
    emit(&args.out, "audit", &to_json(&output)?, || {
        let mut rows = Vec::new();
        for (rec, &i) in output.closed_forms.iter().zip(&rows_meta) {
            for f in &rec.forms {
                rows.push(AuditRow {
                    kind: "closed_form",
                    point_index: i,
                    p: rec.p,
                    l: rec.l,
                    form: &f.name,
                    ratio_re: f.ratio.map(|r| r[0]),
                    ratio_im: f.ratio.map(|r| r[1]),
                    deviation: f.deviation,
                });
            }
        }
        for (k, a) in output.negh.iter().enumerate() {
            rows.push(AuditRow {
                kind: "negh",
                point_index: k % points.len(),
                p: a.p,
                l: a.l,
                form: "final_display",
                ratio_re: a.rhs_ratio.map(|r| r[0]),
                ratio_im: a.rhs_ratio.map(|r| r[1]),
                deviation: a.rhs_deviation,
            });
            rows.push(AuditRow {
                kind: "negh",
                point_index: k % points.len(),
                p: a.p,
                l: a.l,
                form: "reduced_display",
                ratio_re: None,
                ratio_im: None,
                deviation: a.reduced_deviation,
            });
        }
        csv_rows(rows)
    })?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
        Command::Limits(a) => limits(a),
        Command::OracleCompare(a) => oracle_compare(a),
        Command::Audit(a) => audit(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
