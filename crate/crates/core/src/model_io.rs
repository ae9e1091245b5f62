//! Versioned plain-text model files.
//!
//! One field per line, `key value...`, whitespace separated; `#` starts a
//! comment line. Floats are written in shortest round-trip form, so a
//! reloaded model refits to bit-identical predictions.
//!
//! ```text
//! ppgpr-model 1
//! kind gp | ppgpr
//! family matern | gaussian
//! nu <f64>            (matern only)
//! phi <f64>
//! structure iso | pro | add      (gp only)
//! nugget <f64>
//! center true | false
//! n <usize>
//! d <usize>
//! map none | <lo hi> x d
//! x <d values>        (n lines)
//! y <n values>
//! nodes <M>           (ppgpr only, then the training settings)
//! eta <f64>
//! epochs <usize>
//! seed <u64>
//! w <d values>        (M lines)
//! end
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::benchmarks::UnitMap;
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig, GpModel};
use crate::kernels::{Kernel1d, KernelFamily, MultivariateKernel, Structure};
use crate::linalg::Matrix;
use crate::ppgpr::{PpgprModel, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "ppgpr-model";

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Gp(GpModel),
    Ppgpr(PpgprModel),
}

impl SavedModel {
    pub fn dim(&self) -> usize {
        match self {
            SavedModel::Gp(m) => m.dim(),
            SavedModel::Ppgpr(m) => m.dim(),
        }
    }

    pub fn input_map(&self) -> Option<&UnitMap> {
        match self {
            SavedModel::Gp(m) => m.input_map(),
            SavedModel::Ppgpr(m) => m.input_map(),
        }
    }

    /// Prediction at a unit-cube point.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            SavedModel::Gp(m) => m.predict_mean(x),
            SavedModel::Ppgpr(m) => m.predict(x),
        }
    }

    /// Prediction at a point in the original input space.
    pub fn predict_physical(&self, x: &[f64]) -> Result<f64> {
        match self {
            SavedModel::Gp(m) => m.predict_physical(x),
            SavedModel::Ppgpr(m) => m.predict_physical(x),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            SavedModel::Gp(m) => write_gp(m),
            SavedModel::Ppgpr(m) => write_ppgpr(m),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_common(
    out: &mut String,
    kind: &str,
    kernel: &Kernel1d,
    nugget: f64,
    center: bool,
    structure: Option<Structure>,
    x: &Matrix,
    y: &[f64],
    map: Option<&UnitMap>,
) {
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "family {}", kernel.family());
    if kernel.family() == KernelFamily::Matern {
        let _ = writeln!(out, "nu {:?}", kernel.nu());
    }
    let _ = writeln!(out, "phi {:?}", kernel.phi());
    if let Some(s) = structure {
        let _ = writeln!(out, "structure {s}");
    }
    let _ = writeln!(out, "nugget {nugget:?}");
    let _ = writeln!(out, "center {center}");
    let _ = writeln!(out, "n {}", x.rows());
    let _ = writeln!(out, "d {}", x.cols());
    match map {
        None => out.push_str("map none\n"),
        Some(m) => {
            let flat: Vec<f64> = m.ranges().iter().flat_map(|(a, b)| [*a, *b]).collect();
            let _ = writeln!(out, "map {}", join(&flat));
        }
    }
    for row in x.row_iter() {
        let _ = writeln!(out, "x {}", join(row));
    }
    let _ = writeln!(out, "y {}", join(y));
}

pub fn write_gp(m: &GpModel) -> String {
    let mut out = String::new();
    write_common(
        &mut out,
        "gp",
        m.kernel().base(),
        m.nugget(),
        m.config().center,
        Some(m.kernel().structure()),
        m.design(),
        m.responses(),
        m.input_map(),
    );
    out.push_str("end\n");
    out
}

pub fn write_ppgpr(m: &PpgprModel) -> String {
    let mut out = String::new();
    let cfg = m.config();
    write_common(
        &mut out,
        "ppgpr",
        m.kernel(),
        cfg.nugget,
        cfg.center,
        None,
        m.design(),
        m.responses(),
        m.input_map(),
    );
    let _ = writeln!(out, "nodes {}", m.nodes());
    let _ = writeln!(out, "eta {:?}", cfg.eta);
    let _ = writeln!(out, "epochs {}", cfg.epochs);
    let _ = writeln!(out, "seed {}", cfg.seed);
    for row in m.weights().row_iter() {
        let _ = writeln!(out, "w {}", join(row));
    }
    out.push_str("end\n");
    out
}

const KEYS: [&str; 17] = [
    "kind",
    "family",
    "nu",
    "phi",
    "structure",
    "nugget",
    "center",
    "n",
    "d",
    "map",
    "x",
    "y",
    "nodes",
    "eta",
    "epochs",
    "seed",
    "w",
];

struct Fields {
    map: HashMap<&'static str, Vec<(usize, Vec<String>)>>,
}

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, l)) if l.split_whitespace().next() == Some(MAGIC) => {
                let v = l.split_whitespace().nth(1).unwrap_or("");
                if v != FORMAT_VERSION.to_string() {
                    return Err(Error::Parse(format!(
                        "unsupported model format version '{v}' (expected {FORMAT_VERSION})"
                    )));
                }
            }
            _ => {
                return Err(Error::Parse(format!(
                    "missing '{MAGIC} {FORMAT_VERSION}' header"
                )))
            }
        }
        let mut map: HashMap<&'static str, Vec<(usize, Vec<String>)>> = HashMap::new();
        let mut ended = false;
        for (lineno, line) in lines {
            if ended {
                return Err(Error::Parse(format!("line {lineno}: content after 'end'")));
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-empty line");
            if key == "end" {
                ended = true;
                continue;
            }
            let key = KEYS.iter().find(|k| **k == key).ok_or_else(|| {
                Error::Parse(format!(
                    "line {lineno}: unknown key '{key}' (valid keys: {})",
                    KEYS.join(", ")
                ))
            })?;
            map.entry(key)
                .or_default()
                .push((lineno, parts.map(String::from).collect()));
        }
        if !ended {
            return Err(Error::Parse(
                "model file is truncated (no 'end' line)".into(),
            ));
        }
        Ok(Self { map })
    }

    fn all(&self, key: &str) -> &[(usize, Vec<String>)] {
        self.map.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    fn single(&self, key: &str) -> Result<Option<&(usize, Vec<String>)>> {
        match self.all(key) {
            [] => Ok(None),
            [one] => Ok(Some(one)),
            [_, (l, _), ..] => Err(Error::Parse(format!("line {l}: duplicate key '{key}'"))),
        }
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<T> {
        self.opt_value(key)?
            .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
    }

    fn opt_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.single(key)? {
            None => Ok(None),
            Some((l, v)) if v.len() == 1 => v[0]
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("line {l}: bad value '{}' for '{key}'", v[0]))),
            Some((l, _)) => Err(Error::Parse(format!("line {l}: '{key}' takes one value"))),
        }
    }
}

fn floats(line: usize, vals: &[String], want: usize) -> Result<Vec<f64>> {
    if vals.len() != want {
        return Err(Error::Parse(format!(
            "line {line}: expected {want} values, got {}",
            vals.len()
        )));
    }
    vals.iter()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: bad number '{v}'")))
        })
        .collect()
}

fn rows(fields: &Fields, key: &str, count: usize, width: usize) -> Result<Matrix> {
    let entries = fields.all(key);
    if entries.len() != count {
        return Err(Error::Parse(format!(
            "expected {count} '{key}' lines, got {}",
            entries.len()
        )));
    }
    let mut data = Vec::with_capacity(count * width);
    for (l, v) in entries {
        data.extend(floats(*l, v, width)?);
    }
    Matrix::from_vec(count, width, data)
}

pub fn read_model(text: &str) -> Result<SavedModel> {
    let f = Fields::parse(text)?;
    let kind: String = f.value("kind")?;
    let family: KernelFamily = f.value("family")?;
    let phi: f64 = f.value("phi")?;
    let kernel = match family {
        KernelFamily::Matern => Kernel1d::matern(f.value("nu")?, phi)?,
        KernelFamily::Gaussian => Kernel1d::gaussian(phi)?,
    };
    let nugget: f64 = f.value("nugget")?;
    let center: bool = f.value("center")?;
    let n: usize = f.value("n")?;
    let d: usize = f.value("d")?;
    let x = rows(&f, "x", n, d)?;
    let (yl, yv) = f
        .single("y")?
        .ok_or_else(|| Error::Parse("missing key 'y'".into()))?;
    let y = floats(*yl, yv, n)?;
    let map = match f.single("map")? {
        None => return Err(Error::Parse("missing key 'map'".into())),
        Some((_, v)) if v.len() == 1 && v[0] == "none" => None,
        Some((l, v)) => {
            let flat = floats(*l, v, 2 * d)?;
            Some(UnitMap::new(
                flat.chunks(2).map(|c| (c[0], c[1])).collect(),
            )?)
        }
    };

    let model = match kind.as_str() {
        "gp" => {
            let structure: Structure = f.value("structure")?;
            let m = gp::fit(
                &x,
                &y,
                MultivariateKernel::new(kernel, structure, d)?,
                GpConfig {
                    nugget,
                    center,
                    require_unit_cube: true,
                },
            )?;
            SavedModel::Gp(match map {
                Some(map) => m.with_input_map(map)?,
                None => m,
            })
        }
        "ppgpr" => {
            let nodes: usize = f.value("nodes")?;
            let w = rows(&f, "w", nodes, d)?;
            let cfg = TrainConfig {
                eta: f.value("eta")?,
                epochs: f.value("epochs")?,
                seed: f.value("seed")?,
                nugget,
                center,
                ..TrainConfig::new(nodes)
            };
            let m = PpgprModel::from_weights(&x, &y, &kernel, w, cfg)?;
            SavedModel::Ppgpr(match map {
                Some(map) => m.with_input_map(map)?,
                None => m,
            })
        }
        other => return Err(Error::Parse(format!("unknown model kind '{other}'"))),
    };
    Ok(model)
}
