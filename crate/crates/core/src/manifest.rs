//! Sectioned `key = value` run configuration and the preset catalogue.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::history::HistoryFn;
use crate::kernels::{KdvbParams, KernelFamily, KsParams, MemoryKernel};
use crate::stepper::{InitialProfile, Model, SimConfig};

/// One swept parameter and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// A resolved run: configuration plus output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: SimConfig,
    pub out_dir: PathBuf,
    pub snapshot_stride: usize,
    pub emit_plot: bool,
    pub sweep: Vec<SweepAxis>,
}

/// Parameters that a sweep axis may vary.
pub const SWEEPABLE: &[&str] = &[
    "w0", "w1", "w2", "w3", "w4", "n0", "n1", "n2", "n3", "d1", "d2", "M", "dt", "T", "L", "s_f",
    "picard_tol",
];

const SECTIONS: &[&str] = &["model", "kernel", "grid", "run", "sweep"];

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

type Sections = BTreeMap<String, (usize, BTreeMap<String, Entry>)>;

fn cfg_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Config { line, column, message: message.into() }
}

fn tokenize(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(cfg_err(line, indent + trimmed.len(), "expected `]` to close section header"));
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(cfg_err(line, indent, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(cfg_err(line, indent, format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), (line, BTreeMap::new()));
            current = Some(name.to_string());
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(cfg_err(line, indent, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(cfg_err(line, indent, format!("invalid key `{key}`")));
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        if value.is_empty() {
            return Err(cfg_err(line, eq + 2, format!("missing value for `{key}`")));
        }
        let column = eq + 2 + (after.len() - after.trim_start().len());
        let Some(section) = current.as_ref() else {
            return Err(cfg_err(line, indent, format!("key `{key}` outside any section")));
        };
        let entries = &mut sections.get_mut(section).expect("section registered").1;
        if entries.contains_key(key) {
            return Err(cfg_err(line, indent, format!("duplicate key `{key}`")));
        }
        entries.insert(key.to_string(), Entry { value: value.to_string(), line, column });
    }
    Ok(sections)
}

struct Section<'a> {
    name: &'static str,
    header_line: usize,
    entries: BTreeMap<String, Entry>,
    taken: Vec<&'a str>,
}

impl<'a> Section<'a> {
    fn take(sections: &mut Sections, name: &'static str, required: bool) -> Result<Option<Self>> {
        match sections.remove(name) {
            Some((header_line, entries)) => Ok(Some(Section { name, header_line, entries, taken: Vec::new() })),
            None if required => Err(cfg_err(0, 0, format!("missing [{name}]"))),
            None => Ok(None),
        }
    }

    fn raw(&mut self, key: &'a str) -> Option<&Entry> {
        self.taken.push(key);
        self.entries.get(key)
    }

    fn required<T>(&mut self, key: &'a str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
        let (name, header) = (self.name, self.header_line);
        match self.raw(key) {
            Some(e) => parse(&e.value).map_err(|m| cfg_err(e.line, e.column, format!("`{key}`: {m}"))),
            None => Err(cfg_err(header, 1, format!("[{name}] is missing `{key}`"))),
        }
    }

    fn optional<T>(&mut self, key: &'a str, default: T, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
        match self.raw(key) {
            Some(e) => parse(&e.value).map_err(|m| cfg_err(e.line, e.column, format!("`{key}`: {m}"))),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<()> {
        for (key, e) in &self.entries {
            if !self.taken.contains(&key.as_str()) {
                return Err(cfg_err(e.line, 1, format!("unknown key `{key}` in [{}]", self.name)));
            }
        }
        Ok(())
    }

    /// Line of `key`, or of the section header.
    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.header_line, |e| e.line)
    }
}

fn float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
}

fn integer(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn via_fromstr<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn domain(line: usize, e: Error) -> Error {
    cfg_err(line, 1, e.to_string())
}

/// Parses a manifest. Every key is checked; unknown or missing keys and
/// domain violations are reported with their line.
pub fn parse_config(text: &str) -> Result<RunManifest> {
    let mut sections = tokenize(text)?;

    let mut model_s = Section::take(&mut sections, "model", true)?.expect("required");
    let kind: String = model_s.required("type", |s| Ok(s.to_string()))?;
    let type_line = model_s.line_of("type");
    let model = match kind.as_str() {
        "kdvb" => {
            let w: Vec<f64> = ["w0", "w1", "w2", "w3", "w4"]
                .into_iter()
                .map(|k| model_s.required(k, float))
                .collect::<Result<_>>()?;
            let p = KdvbParams::new(w[0], w[1], w[2], w[3], w[4]).map_err(|e| {
                let key = match &e {
                    Error::InvalidParameter { name, .. } => *name,
                    _ => "type",
                };
                domain(model_s.line_of(key), e)
            })?;
            Model::Kdvb(p)
        }
        "ks" => {
            let n: Vec<f64> = ["n0", "n1", "n2", "n3"]
                .into_iter()
                .map(|k| model_s.required(k, float))
                .collect::<Result<_>>()?;
            let p = KsParams::new(n[0], n[1], n[2], n[3]).map_err(|e| {
                let key = match &e {
                    Error::InvalidParameter { name, .. } => *name,
                    _ => "type",
                };
                domain(model_s.line_of(key), e)
            })?;
            Model::Ks(p)
        }
        other => return Err(cfg_err(type_line, 1, format!("unknown model type `{other}` (expected kdvb or ks)"))),
    };
    model_s.finish()?;

    let mut kernel_s = Section::take(&mut sections, "kernel", true)?.expect("required");
    let family: KernelFamily = kernel_s.required("family", via_fromstr)?;
    let d1 = kernel_s.required("d1", float)?;
    let d2 = kernel_s.required("d2", float)?;
    let kernel = MemoryKernel::new(family, d1, d2).map_err(|e| domain(kernel_s.header_line, e))?;
    kernel_s.finish()?;

    let mut grid_s = Section::take(&mut sections, "grid", true)?.expect("required");
    let m = grid_s.required("M", integer)?;
    let dt = grid_s.required("dt", float)?;
    let t_final = grid_s.required("T", float)?;
    let l = grid_s.required("L", integer)?;
    let s_f = grid_s.required("s_f", float)?;
    let grid_line = grid_s.header_line;
    grid_s.finish()?;

    let mut run_s = Section::take(&mut sections, "run", false)?;
    let mut cfg = SimConfig {
        model,
        kernel,
        m,
        dt,
        t_final,
        l,
        s_f,
        y0: InitialProfile::OneMinusCos { amplitude: 1.0 },
        y1: HistoryFn::Zero,
        picard_tol: 1e-10,
        picard_max: 50,
        strict_hypotheses: false,
        half_memory_energy: false,
    };
    let mut out_dir = PathBuf::from("out");
    let mut snapshot_stride = 10;
    let mut emit_plot = false;
    let mut run_line = grid_line;
    if let Some(s) = run_s.as_mut() {
        run_line = s.header_line;
        cfg.y0 = s.optional("y0", cfg.y0, via_fromstr)?;
        cfg.y1 = s.optional("y1", cfg.y1, via_fromstr)?;
        cfg.picard_tol = s.optional("picard_tol", cfg.picard_tol, float)?;
        cfg.picard_max = s.optional("picard_max", cfg.picard_max, integer)?;
        cfg.strict_hypotheses = s.optional("strict", false, boolean)?;
        cfg.half_memory_energy = s.optional("half_memory_energy", false, boolean)?;
        snapshot_stride = s.optional("snapshot_stride", snapshot_stride, integer)?;
        emit_plot = s.optional("emit_plot", false, boolean)?;
        out_dir = s.optional("out_dir", out_dir, |v| Ok(PathBuf::from(v)))?;
    }
    if let Some(s) = run_s {
        s.finish()?;
    }
    cfg.validate().map_err(|e| {
        let line = match &e {
            Error::InvalidParameter { name, .. } if ["M", "dt", "T", "L", "s_f"].contains(name) => grid_line,
            _ => run_line,
        };
        domain(line, e)
    })?;

    let mut sweep = Vec::new();
    if let Some((_, entries)) = sections.remove("sweep") {
        let mut ordered: Vec<(&String, &Entry)> = entries.iter().collect();
        ordered.sort_by_key(|(_, e)| e.line);
        for (key, e) in ordered {
            if !SWEEPABLE.contains(&key.as_str()) {
                return Err(cfg_err(e.line, 1, format!("unknown key `{key}` in [sweep]")));
            }
            let values = e
                .value
                .split(',')
                .map(|v| float(v.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|m| cfg_err(e.line, e.column, format!("`{key}`: {m}")))?;
            sweep.push(SweepAxis { name: key.clone(), values });
        }
    }
    Ok(RunManifest { config: cfg, out_dir, snapshot_stride, emit_plot, sweep })
}

/// Writes a manifest in the format read by [`parse_config`]; floats use the
/// shortest round-tripping representation.
pub fn serialize(m: &RunManifest) -> String {
    let c = &m.config;
    let mut s = String::new();
    s.push_str("[model]\n");
    match c.model {
        Model::Kdvb(p) => {
            let _ = writeln!(s, "type = kdvb");
            for (k, v) in [("w0", p.w0), ("w1", p.w1), ("w2", p.w2), ("w3", p.w3), ("w4", p.w4)] {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        Model::Ks(p) => {
            let _ = writeln!(s, "type = ks");
            for (k, v) in [("n0", p.n0), ("n1", p.n1), ("n2", p.n2), ("n3", p.n3)] {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
    }
    let _ = writeln!(s, "\n[kernel]\nfamily = {}\nd1 = {:?}\nd2 = {:?}", c.kernel.family(), c.kernel.d1(), c.kernel.d2());
    let _ = writeln!(s, "\n[grid]\nM = {}\ndt = {:?}\nT = {:?}\nL = {}\ns_f = {:?}", c.m, c.dt, c.t_final, c.l, c.s_f);
    let _ = writeln!(s, "\n[run]\ny0 = {}\ny1 = {}", c.y0, c.y1);
    let _ = writeln!(s, "picard_tol = {:?}\npicard_max = {}", c.picard_tol, c.picard_max);
    let _ = writeln!(s, "strict = {}\nhalf_memory_energy = {}", c.strict_hypotheses, c.half_memory_energy);
    let _ = writeln!(s, "snapshot_stride = {}\nemit_plot = {}\nout_dir = {}", m.snapshot_stride, m.emit_plot, m.out_dir.display());
    if !m.sweep.is_empty() {
        s.push_str("\n[sweep]\n");
        for axis in &m.sweep {
            let vals: Vec<String> = axis.values.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{} = {}", axis.name, vals.join(", "));
        }
    }
    s
}

/// Sets one numeric parameter by name, validating the result.
pub fn set_parameter(cfg: &mut SimConfig, name: &str, value: f64) -> Result<()> {
    let as_count = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
            Ok(v as usize)
        } else {
            Err(Error::Parse(format!("`{name}` needs an integer, got {v}")))
        }
    };
    match (&mut cfg.model, name) {
        (Model::Kdvb(p), "w0") => p.w0 = value,
        (Model::Kdvb(p), "w1") => p.w1 = value,
        (Model::Kdvb(p), "w2") => p.w2 = value,
        (Model::Kdvb(p), "w3") => p.w3 = value,
        (Model::Kdvb(p), "w4") => p.w4 = value,
        (Model::Ks(p), "n0") => p.n0 = value,
        (Model::Ks(p), "n1") => p.n1 = value,
        (Model::Ks(p), "n2") => p.n2 = value,
        (Model::Ks(p), "n3") => p.n3 = value,
        (_, "d1") => cfg.kernel = MemoryKernel::new(cfg.kernel.family(), value, cfg.kernel.d2())?,
        (_, "d2") => cfg.kernel = MemoryKernel::new(cfg.kernel.family(), cfg.kernel.d1(), value)?,
        (_, "M") => cfg.m = as_count(value)?,
        (_, "dt") => cfg.dt = value,
        (_, "T") => cfg.t_final = value,
        (_, "L") => cfg.l = as_count(value)?,
        (_, "s_f") => cfg.s_f = value,
        (_, "picard_tol") => cfg.picard_tol = value,
        (model, _) => {
            return Err(Error::Parse(format!("parameter `{name}` does not apply to model {}", model.name())))
        }
    }
    cfg.validate()
}

/// One point of a sweep: its assignments and the resulting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, f64)>,
    pub config: SimConfig,
}

/// Cartesian product of the sweep axes, first axis slowest. A manifest
/// without axes yields its own configuration as the single point.
pub fn expand_sweep(m: &RunManifest) -> Result<Vec<SweepPoint>> {
    let mut points = vec![(Vec::new(), m.config.clone())];
    for axis in &m.sweep {
        if axis.values.is_empty() {
            return Err(Error::Parse(format!("sweep axis `{}` has no values", axis.name)));
        }
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (assign, cfg) in &points {
            for &v in &axis.values {
                let mut c = cfg.clone();
                set_parameter(&mut c, &axis.name, v)?;
                let mut a = assign.clone();
                a.push((axis.name.clone(), v));
                next.push((a, c));
            }
        }
        points = next;
    }
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(index, (assignments, config))| SweepPoint { index, assignments, config })
        .collect())
}

pub const PRESET_NAMES: &[&str] = &["case1", "case2", "case3", "case4", "case5"];

fn preset_text(name: &str, full_scale: bool) -> Option<&'static str> {
    Some(match (name, full_scale) {
        ("case1", false) => include_str!("../presets/case1.cfg"),
        ("case2", false) => include_str!("../presets/case2.cfg"),
        ("case3", false) => include_str!("../presets/case3.cfg"),
        ("case4", false) => include_str!("../presets/case4.cfg"),
        ("case5", false) => include_str!("../presets/case5.cfg"),
        ("case1", true) => include_str!("../presets/case1_full.cfg"),
        ("case2", true) => include_str!("../presets/case2_full.cfg"),
        ("case3", true) => include_str!("../presets/case3_full.cfg"),
        ("case4", true) => include_str!("../presets/case4_full.cfg"),
        ("case5", true) => include_str!("../presets/case5_full.cfg"),
        _ => return None,
    })
}

/// Source text of a shipped preset.
pub fn preset_source(name: &str, full_scale: bool) -> Result<&'static str> {
    preset_text(name, full_scale).ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Desk-scale preset.
pub fn preset(name: &str) -> Result<RunManifest> {
    parse_config(preset_source(name, false)?)
}

/// Preset on the reference grids.
pub fn preset_full(name: &str) -> Result<RunManifest> {
    parse_config(preset_source(name, true)?)
}
