use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chbend::bending::{
    bend_group, default_zeta, limit_set, BendingParams, BentGroup, LimitSet, LimitSetOptions,
};
use chbend::fuchsian::{
    collar_bound, collar_check, collar_threshold_constant, collar_threshold_length, genus2_group,
    hnn_split, normalize_axis, octagon_group, MarkedGroup,
};
use chbend::io::{
    bent_from_json, bent_to_json, group_from_json, group_to_json, limit_set_csv, read_limit_csv,
    render_svg, write_atomic, SvgOptions, BENT_FORMAT, GROUP_FORMAT,
};
use chbend::verify::{report_json, verify_bent, verify_group, VerifyOptions, VerifyReport};
use chbend::Error;

const EXIT_ASSERTION: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chbend",
    version,
    about = "Bending deformations of complex hyperbolic surface groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a normalized marked group and write it as JSON.
    Build(BuildArgs),
    /// Bend a normalized group along its marked geodesic.
    Bend(BendArgs),
    /// Sample the limit set of a group or bent group as CSV.
    Limitset(LimitArgs),
    /// Plot a limit-set CSV as a two-pane SVG.
    Render(RenderArgs),
    /// Run the invariant suite on a group or bent group file.
    Verify(VerifyArgs),
    /// Collar bounds for a length, or the collar inequality for a group.
    Collar(CollarArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Length of the separating marked geodesic.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["config", "octagon"])]
    ell: Option<f64>,
    /// Twist along the marked geodesic.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, conflicts_with_all = ["config", "octagon"])]
    twist: f64,
    /// Use the regular octagon group instead of the length/twist family.
    #[arg(long, conflicts_with = "config")]
    octagon: bool,
    /// Re-mark as an HNN extension along the non-separating a1-curve.
    #[arg(long)]
    hnn: bool,
    /// Load a group from a JSON file instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value = "group.json")]
    out: PathBuf,
}

#[derive(Args)]
struct BendArgs {
    group: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    eta: f64,
    /// Sector half-width; chosen from the Dirichlet sides when omitted.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(short, long, default_value = "bent.json")]
    out: PathBuf,
}

#[derive(Args)]
struct LimitArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = chbend::bending::DEFAULT_MAX_SAMPLES)]
    max_samples: usize,
    #[arg(short, long, default_value = "limitset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    input: PathBuf,
    /// Half-width of the plotted square.
    #[arg(long, default_value_t = 2.0)]
    extent: f64,
    /// Pixels per pane side.
    #[arg(long, default_value_t = 400)]
    resolution: usize,
    #[arg(short, long, default_value = "limitset.svg")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 6)]
    collar_depth: usize,
    #[arg(long, default_value_t = 6)]
    limit_depth: usize,
    #[arg(long, default_value_t = 8)]
    certificate_depth: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CollarArgs {
    #[arg(long, allow_hyphen_values = true, conflicts_with = "group")]
    ell: Option<f64>,
    group: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    depth: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("CHBEND_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: CHBEND_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(EXIT_VALIDATION);
            }
        }
    }
    let result = match cli.command {
        Command::Build(a) => build(a),
        Command::Bend(a) => bend(a),
        Command::Limitset(a) => limitset(a),
        Command::Render(a) => render(a),
        Command::Verify(a) => verify(a),
        Command::Collar(a) => collar(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Resource { .. } => EXIT_RESOURCE,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

fn read(path: &Path) -> chbend::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

enum Loaded {
    Group(MarkedGroup),
    Bent(BentGroup),
}

fn load(path: &Path) -> chbend::Result<Loaded> {
    let text = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    match v.get("format").and_then(|f| f.as_str()) {
        Some(GROUP_FORMAT) => Ok(Loaded::Group(group_from_json(&text)?)),
        Some(BENT_FORMAT) => Ok(Loaded::Bent(bent_from_json(&text)?)),
        other => Err(Error::Validation(format!(
            "{}: unknown format {other:?}",
            path.display()
        ))),
    }
}

fn load_group(path: &Path) -> chbend::Result<MarkedGroup> {
    match load(path)? {
        Loaded::Group(g) => Ok(g),
        Loaded::Bent(_) => Err(Error::Validation(format!(
            "{} holds a bent group, expected a group",
            path.display()
        ))),
    }
}

fn build(a: BuildArgs) -> chbend::Result<u8> {
    let g = if let Some(path) = &a.config {
        load_group(path)?
    } else if a.octagon {
        octagon_group()?
    } else {
        let ell = a
            .ell
            .ok_or_else(|| Error::Validation("build needs --ell, --octagon or --config".into()))?;
        genus2_group(ell, a.twist)?
    };
    let g = if a.hnn { hnn_split(&g)? } else { g };
    let n = if g.is_normalized() {
        g
    } else {
        normalize_axis(&g)?
    };
    let ell = n.ell()?;
    write_atomic(&a.out, group_to_json(&n)?.as_bytes())?;
    println!("ell(g_alpha) = {ell:.12}");
    println!("collar_bound = {:.9}", collar_bound(ell)?);
    println!("relation residual = {:.3e}", n.relation_residual());
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn bend(a: BendArgs) -> chbend::Result<u8> {
    let g = load_group(&a.group)?;
    let g = if g.is_normalized() {
        g
    } else {
        normalize_axis(&g)?
    };
    let zeta = match a.zeta {
        Some(z) => z,
        None => default_zeta(&g, a.eta)?,
    };
    let params = BendingParams::new(a.eta, zeta).map_err(|e| Error::Validation(e.to_string()))?;
    let b = bend_group(&g, params)?;
    write_atomic(&a.out, bent_to_json(&b)?.as_bytes())?;
    println!("eta = {}  zeta = {}", params.eta(), params.zeta());
    println!("relation residual = {:.3e}", b.relation_residual());
    for (i, name) in b.names().iter().enumerate() {
        println!("chi({name}) = {}", b.chi_description(i));
    }
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn write_limit(set: &LimitSet, out: &Path) -> chbend::Result<()> {
    write_atomic(out, &limit_set_csv(set)?)
}

fn limitset(a: LimitArgs) -> chbend::Result<u8> {
    let opts = LimitSetOptions {
        max_samples: a.max_samples,
        ..Default::default()
    };
    let result = match load(&a.input)? {
        Loaded::Group(g) => {
            let g = if g.is_normalized() {
                g
            } else {
                normalize_axis(&g)?
            };
            limit_set(&g, a.depth, None, opts)
        }
        Loaded::Bent(b) => limit_set(&b, a.depth, None, opts),
    };
    match result {
        Ok(set) => {
            write_limit(&set, &a.out)?;
            println!(
                "{} samples to depth {}; wrote {}",
                set.len(),
                set.depth(),
                a.out.display()
            );
            Ok(0)
        }
        Err(Error::Resource {
            budget,
            depth,
            partial,
        }) => {
            write_limit(&partial, &a.out)?;
            eprintln!(
                "error: sample budget {budget} exhausted at depth {depth}; wrote {} partial samples to {}",
                partial.len(),
                a.out.display()
            );
            Ok(EXIT_RESOURCE)
        }
        Err(e) => Err(e),
    }
}

fn render(a: RenderArgs) -> chbend::Result<u8> {
    let points = read_limit_csv(&a.input).map_err(|e| match e {
        Error::Csv(e) => Error::Validation(format!("{}: {e}", a.input.display())),
        other => other,
    })?;
    let svg = render_svg(
        &points,
        &SvgOptions {
            extent: a.extent,
            resolution: a.resolution,
        },
    )?;
    write_atomic(&a.out, svg.as_bytes())?;
    println!("{} points; wrote {}", points.len(), a.out.display());
    Ok(0)
}

fn print_report(r: &VerifyReport) {
    for c in &r.checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!(
                "{mark}  {}  (value {:.3e}, bound {:.3e})",
                c.name, c.value, c.bound
            );
        } else {
            println!(
                "{mark}  {}  (value {:.3e}, bound {:.3e}; {})",
                c.name, c.value, c.bound, c.detail
            );
        }
    }
    println!("{}: {}", r.subject, if r.pass { "PASS" } else { "FAIL" });
}

fn verify(a: VerifyArgs) -> chbend::Result<u8> {
    let opts = VerifyOptions {
        seed: a.seed,
        samples: a.samples,
        collar_depth: a.collar_depth,
        limit_depth: a.limit_depth,
        certificate_depth: a.certificate_depth,
    };
    let report = match load(&a.input)? {
        Loaded::Group(g) => verify_group(&g, &opts),
        Loaded::Bent(b) => verify_bent(&b, &opts),
    };
    print_report(&report);
    if let Some(path) = &a.report {
        write_atomic(path, report_json(&report)?.as_bytes())?;
    }
    Ok(if report.pass { 0 } else { EXIT_ASSERTION })
}

fn collar(a: CollarArgs) -> chbend::Result<u8> {
    let constant = collar_threshold_constant();
    let threshold = collar_threshold_length();
    if let Some(path) = &a.group {
        let g = load_group(path)?;
        let g = if g.is_normalized() {
            g
        } else {
            normalize_axis(&g)?
        };
        let r = collar_check(&g, a.depth)?;
        println!("ell = {:.9}", r.ell);
        println!("delta_max = {:.9}", r.delta_max);
        println!("threshold constant = {constant:.6}");
        println!("threshold length = {threshold:.9}");
        println!("words checked = {} (depth {})", r.words_checked, r.depth);
        println!(
            "min distance = {:.9}  min slack = {:.3e}",
            r.min_distance, r.min_slack
        );
        for w in &r.witnesses {
            println!(
                "  {}  d = {:.9}  slack = {:.3e}{}",
                w.word,
                w.distance,
                w.slack,
                if w.violates { "  VIOLATES" } else { "" }
            );
        }
        println!(
            "collar inequality: {}",
            if r.pass { "PASS" } else { "FAIL" }
        );
        return Ok(if r.pass { 0 } else { EXIT_ASSERTION });
    }
    let ell = a
        .ell
        .ok_or_else(|| Error::Validation("collar needs --ell or a group file".into()))?;
    let delta = collar_bound(ell)?;
    println!("ell = {ell:.9}");
    println!("delta_max = {delta:.9}");
    println!("threshold constant = {constant:.6}");
    println!("threshold length = {threshold:.9}");
    Ok(0)
}
