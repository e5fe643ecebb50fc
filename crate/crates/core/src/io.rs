//! File formats: marked and bent groups as JSON, limit samples as CSV, and SVG plots.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bending::{bend_group, BendingParams, BentGroup, LimitSet};
use crate::error::{Error, Result};
use crate::fuchsian::{Decomposition, Generator, MarkedGroup};
use crate::heisenberg::HeisenbergPoint;
use crate::linalg::{c, FormKind, Isometry, Mat3};
use crate::sl2::Sl2;
use crate::words::Word;

pub const GROUP_FORMAT: &str = "chbend-group";
pub const BENT_FORMAT: &str = "chbend-bent";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GeneratorRecord {
    name: String,
    /// Row-major entries as [re, im].
    matrix: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sl2: Option<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DecompositionRecord {
    Amalgam {
        g1: Vec<String>,
        g2: Vec<String>,
    },
    Hnn {
        g1: Vec<String>,
        stable_letter: String,
    },
}

#[derive(Serialize, Deserialize)]
struct GroupRecord {
    format: String,
    version: u32,
    form: FormKind,
    normalized: bool,
    generators: Vec<GeneratorRecord>,
    relations: Vec<String>,
    g_alpha: String,
    decomposition: DecompositionRecord,
}

#[derive(Serialize, Deserialize)]
struct BendRecord {
    eta: f64,
    zeta: f64,
    g_alpha: String,
    decomposition: DecompositionRecord,
}

#[derive(Serialize, Deserialize)]
struct ChiRecord {
    generator: String,
    image: String,
}

#[derive(Serialize, Deserialize)]
struct BentRecord {
    format: String,
    version: u32,
    base: GroupRecord,
    bends: Vec<BendRecord>,
    generators_eta: Vec<GeneratorRecord>,
    chi: Vec<ChiRecord>,
}

fn matrix_record(m: &Mat3) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn matrix_from_record(name: &str, entries: &[[f64; 2]]) -> Result<Mat3> {
    if entries.len() != 9 {
        return Err(Error::Validation(format!(
            "generator {name}: a matrix needs 9 entries, got {}",
            entries.len()
        )));
    }
    if entries.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Validation(format!(
            "generator {name}: non-finite matrix entry"
        )));
    }
    Ok(Mat3::from_fn(|i, j| {
        let e = entries[3 * i + j];
        c(e[0], e[1])
    }))
}

fn decomposition_record(d: &Decomposition, names: &[String]) -> DecompositionRecord {
    let pick = |v: &[usize]| v.iter().map(|&i| names[i].clone()).collect();
    match d {
        Decomposition::Amalgam { g1, g2 } => DecompositionRecord::Amalgam {
            g1: pick(g1),
            g2: pick(g2),
        },
        Decomposition::Hnn { g1, stable } => DecompositionRecord::Hnn {
            g1: pick(g1),
            stable_letter: names[*stable].clone(),
        },
    }
}

fn decomposition_from_record(d: &DecompositionRecord, names: &[String]) -> Result<Decomposition> {
    let find = |s: &String| {
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| Error::Validation(format!("unknown generator '{s}'")))
    };
    let find_all = |v: &[String]| v.iter().map(find).collect::<Result<Vec<_>>>();
    Ok(match d {
        DecompositionRecord::Amalgam { g1, g2 } => Decomposition::Amalgam {
            g1: find_all(g1)?,
            g2: find_all(g2)?,
        },
        DecompositionRecord::Hnn { g1, stable_letter } => Decomposition::Hnn {
            g1: find_all(g1)?,
            stable: find(stable_letter)?,
        },
    })
}

fn group_record(g: &MarkedGroup) -> GroupRecord {
    let names = g.names();
    GroupRecord {
        format: GROUP_FORMAT.into(),
        version: FORMAT_VERSION,
        form: g.form(),
        normalized: g.is_normalized(),
        generators: g
            .generators()
            .iter()
            .map(|x| GeneratorRecord {
                name: x.name.clone(),
                matrix: matrix_record(x.matrix.matrix()),
                sl2: x.lift.map(|l| [l.a, l.b, l.c, l.d]),
            })
            .collect(),
        relations: g.relations().iter().map(|w| w.format(&names)).collect(),
        g_alpha: g.g_alpha().format(&names),
        decomposition: decomposition_record(g.decomposition(), &names),
    }
}

fn group_from_record(r: GroupRecord) -> Result<MarkedGroup> {
    if r.format != GROUP_FORMAT {
        return Err(Error::Validation(format!(
            "expected format '{GROUP_FORMAT}', found '{}'",
            r.format
        )));
    }
    if r.version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported version {}",
            r.version
        )));
    }
    let names: Vec<String> = r.generators.iter().map(|g| g.name.clone()).collect();
    let mut generators = Vec::with_capacity(r.generators.len());
    for g in &r.generators {
        let m = matrix_from_record(&g.name, &g.matrix)?;
        let lift = match g.sl2 {
            Some([a, b, cc, d]) => Some(
                Sl2::new(a, b, cc, d)
                    .map_err(|e| Error::Validation(format!("generator {}: {e}", g.name)))?,
            ),
            None => None,
        };
        generators.push(Generator {
            name: g.name.clone(),
            matrix: Isometry::from_matrix_unchecked(m, r.form),
            lift,
        });
    }
    let relations = r
        .relations
        .iter()
        .map(|w| Word::parse(w, &names))
        .collect::<Result<Vec<_>>>()?;
    let g_alpha = Word::parse(&r.g_alpha, &names)?;
    let decomposition = decomposition_from_record(&r.decomposition, &names)?;
    MarkedGroup::new(generators, relations, g_alpha, decomposition, r.normalized)
}

pub fn group_to_json(g: &MarkedGroup) -> Result<String> {
    Ok(serde_json::to_string_pretty(&group_record(g))? + "\n")
}

/// Parses and validates a marked group. Malformed input is reported as a validation error.
pub fn group_from_json(text: &str) -> Result<MarkedGroup> {
    let r: GroupRecord =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("group file: {e}")))?;
    group_from_record(r)
}

pub fn bent_to_json(b: &BentGroup) -> Result<String> {
    let names = b.names();
    let rec = BentRecord {
        format: BENT_FORMAT.into(),
        version: FORMAT_VERSION,
        base: group_record(b.base()),
        bends: b
            .steps()
            .iter()
            .map(|s| BendRecord {
                eta: s.params.eta(),
                zeta: s.params.zeta(),
                g_alpha: s.g_alpha.format(&names),
                decomposition: decomposition_record(&s.decomposition, &names),
            })
            .collect(),
        generators_eta: b
            .generators_eta()
            .iter()
            .zip(&names)
            .map(|(m, n)| GeneratorRecord {
                name: n.clone(),
                matrix: matrix_record(m.matrix()),
                sl2: None,
            })
            .collect(),
        chi: (0..names.len())
            .map(|i| ChiRecord {
                generator: names[i].clone(),
                image: b.chi_description(i),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&rec)? + "\n")
}

/// Rebuilds a bent group from its base and bend parameters, and checks the stored
/// deformed generators against the rebuilt ones.
pub fn bent_from_json(text: &str) -> Result<BentGroup> {
    let r: BentRecord =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("bent file: {e}")))?;
    if r.format != BENT_FORMAT {
        return Err(Error::Validation(format!(
            "expected format '{BENT_FORMAT}', found '{}'",
            r.format
        )));
    }
    if r.version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported version {}",
            r.version
        )));
    }
    let base = group_from_record(r.base)?;
    let names = base.names();
    let mut bends = r.bends.iter();
    let first = bends
        .next()
        .ok_or_else(|| Error::Validation("bent file lists no bends".into()))?;
    let params = |b: &BendRecord| {
        BendingParams::new(b.eta, b.zeta).map_err(|e| Error::Validation(e.to_string()))
    };
    if Word::parse(&first.g_alpha, &names)? != *base.g_alpha()
        || decomposition_from_record(&first.decomposition, &names)? != *base.decomposition()
    {
        return Err(Error::Validation(
            "first bend must use the base group's marking".into(),
        ));
    }
    let mut bent = bend_group(&base, params(first)?)?;
    for b in bends {
        let w = Word::parse(&b.g_alpha, &names)?;
        let d = decomposition_from_record(&b.decomposition, &names)?;
        bent = bent.bend_again(w, d, params(b)?)?;
    }
    if r.generators_eta.len() != names.len() {
        return Err(Error::Validation(
            "generator count of the bent group does not match its base".into(),
        ));
    }
    for (rec, m) in r.generators_eta.iter().zip(bent.generators_eta()) {
        let stored = matrix_from_record(&rec.name, &rec.matrix)?;
        let scale = crate::linalg::norm_inf(m.matrix()).max(1.0);
        let gap = crate::linalg::norm_inf(&(stored - m.matrix())) / scale;
        if !(gap <= 1e-12) {
            return Err(Error::Validation(format!(
                "stored generator {} disagrees with the rebuilt group ({gap:.3e})",
                rec.name
            )));
        }
    }
    Ok(bent)
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// One row of the limit-set CSV. Infinity is written as "inf" in every numeric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub word: String,
    pub re_xi: String,
    pub im_xi: String,
    pub v: String,
    pub cygan_norm: String,
}

impl CsvRow {
    pub fn point(&self) -> Result<HeisenbergPoint> {
        if self.re_xi == "inf" {
            return Ok(HeisenbergPoint::Infinity);
        }
        let p = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad number '{s}' in CSV")))
        };
        Ok(HeisenbergPoint::new(
            c(p(&self.re_xi)?, p(&self.im_xi)?),
            p(&self.v)?,
        ))
    }
}

fn csv_row(word: String, p: &HeisenbergPoint) -> CsvRow {
    match p {
        HeisenbergPoint::Infinity => {
            let inf = || "inf".to_string();
            CsvRow {
                word,
                re_xi: inf(),
                im_xi: inf(),
                v: inf(),
                cygan_norm: inf(),
            }
        }
        HeisenbergPoint::Finite { xi, v } => CsvRow {
            word,
            re_xi: xi.re.to_string(),
            im_xi: xi.im.to_string(),
            v: v.to_string(),
            cygan_norm: p
                .cygan_norm()
                .map(|x| x.to_string())
                .unwrap_or_else(|_| "inf".into()),
        },
    }
}

pub fn limit_set_csv(set: &LimitSet) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names = set.names().to_vec();
    for (i, p) in set.points().iter().enumerate() {
        w.serialize(csv_row(set.word(i).format(&names), p))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_limit_csv(path: &Path) -> Result<Vec<HeisenbergPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        out.push(row?.point()?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct SvgOptions {
    /// Half-width of the plotted square in both panes.
    pub extent: f64,
    /// Pixels per pane side.
    pub resolution: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            extent: 2.0,
            resolution: 400,
        }
    }
}

/// Two panes, (Re xi, Im xi) and (Re xi, v), with points binned to pixels so that the
/// file size is bounded by the resolution rather than the sample count.
pub fn render_svg(points: &[HeisenbergPoint], opts: &SvgOptions) -> Result<String> {
    if !(opts.extent > 0.0) || opts.resolution == 0 || opts.resolution > 4000 {
        return Err(Error::Validation(
            "SVG extent must be positive and resolution in 1..=4000".into(),
        ));
    }
    let n = opts.resolution;
    let margin = 20;
    let width = 2 * n + 3 * margin;
    let height = n + 2 * margin + 20;
    let mut panes = [vec![false; n * n], vec![false; n * n]];
    let bin = |x: f64| -> Option<usize> {
        let t = (x + opts.extent) / (2.0 * opts.extent);
        if (0.0..1.0).contains(&t) {
            Some((t * n as f64) as usize)
        } else {
            None
        }
    };
    for p in points {
        if let HeisenbergPoint::Finite { xi, v } = p {
            if let Some(i) = bin(xi.re) {
                if let Some(j) = bin(xi.im) {
                    panes[0][(n - 1 - j) * n + i] = true;
                }
                if let Some(j) = bin(*v) {
                    panes[1][(n - 1 - j) * n + i] = true;
                }
            }
        }
    }
    let mut s = String::new();
    s.push_str(r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    s.push('\n');
    s.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    ));
    s.push('\n');
    s.push_str(&format!(
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    ));
    s.push('\n');
    let titles = ["Re xi / Im xi", "Re xi / v"];
    for (k, pane) in panes.iter().enumerate() {
        let x0 = margin + k * (n + margin);
        let y0 = margin + 20;
        s.push_str(&format!(
            r#"<text x="{x0}" y="{}" font-family="monospace" font-size="12">{} (extent {})</text>"#,
            margin + 10,
            titles[k],
            opts.extent
        ));
        s.push('\n');
        s.push_str(&format!(
            r#"<rect x="{x0}" y="{y0}" width="{n}" height="{n}" fill="none" stroke="gray"/>"#
        ));
        s.push('\n');
        let mid = n / 2;
        s.push_str(&format!(
            r##"<path d="M{} {}h{n}M{} {}v{n}" stroke="#ddd" stroke-width="0.5"/>"##,
            x0,
            y0 + mid,
            x0 + mid,
            y0
        ));
        s.push('\n');
        s.push_str(r#"<g fill="black">"#);
        for row in 0..n {
            // merge horizontal runs of occupied pixels into single rectangles
            let mut col = 0;
            while col < n {
                if pane[row * n + col] {
                    let start = col;
                    while col < n && pane[row * n + col] {
                        col += 1;
                    }
                    s.push_str(&format!(
                        r#"<rect x="{}" y="{}" width="{}" height="1"/>"#,
                        x0 + start,
                        y0 + row,
                        col - start
                    ));
                } else {
                    col += 1;
                }
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
