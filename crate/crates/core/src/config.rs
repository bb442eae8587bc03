//! Domain geometry and run parameters.
//!
//! The configuration document is flat `key = value` text grouped in the
//! sections `[domain]`, `[physics]`, `[discretization]`, `[forcing]`,
//! `[initial]` and `[output]`. Absent keys take the defaults listed in
//! `docs/config.md`; unknown keys are rejected with their section path.

use std::fmt;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};

/// Truncated channel `(box_lo, box_hi) x (-h, 0)` with the plate on
/// `(plate_lo, plate_hi) x {0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSpec {
    pub h: f64,
    pub plate_lo: f64,
    pub plate_hi: f64,
    pub box_lo: f64,
    pub box_hi: f64,
}

impl DomainSpec {
    /// Plate of the given extent with one plate length of margin on each side.
    pub fn with_default_margins(h: f64, plate_lo: f64, plate_hi: f64) -> Self {
        let len = plate_hi - plate_lo;
        Self {
            h,
            plate_lo,
            plate_hi,
            box_lo: plate_lo - len,
            box_hi: plate_hi + len,
        }
    }

    pub fn plate_length(&self) -> f64 {
        self.plate_hi - self.plate_lo
    }

    pub fn box_length(&self) -> f64 {
        self.box_hi - self.box_lo
    }

    /// Support depth of the extension cutoff.
    pub fn cutoff_depth(&self) -> f64 {
        0.5 * self.h.min(self.plate_length())
    }
}

/// Constant drag matrix `A` acting on `(v1, v3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Drag {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl Drag {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            Drag::Scalar(s) => [[s, 0.0], [0.0, s]],
            Drag::Matrix(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ForceModelSpec {
    Linear,
    /// `F(u) = cubic u³ - lambda u`.
    Kirchhoff { lambda: f64, cubic: f64 },
    /// `F(u) = -(kappa ‖u'‖² - gamma) u''`.
    Berger { kappa: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Midpoint,
    MidpointDiscreteGradient,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Midpoint => "midpoint",
            Scheme::MidpointDiscreteGradient => "midpoint_discrete_gradient",
        }
    }
}

/// `amplitude * cos(omega t)` times basis element `mode` (1-based, 0 = off).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadSpec {
    pub mode: usize,
    pub amplitude: f64,
    pub omega: f64,
}

impl LoadSpec {
    pub const OFF: LoadSpec = LoadSpec {
        mode: 0,
        amplitude: 0.0,
        omega: 1.0,
    };

    pub fn is_active(&self) -> bool {
        self.mode > 0 && self.amplitude != 0.0
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        if self.is_active() {
            self.amplitude * (self.omega * t).cos()
        } else {
            0.0
        }
    }
}

/// Time-dependent loads: `fluid` against `ψ_mode`, `plate` against `ξ_mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Forcing {
    pub fluid: LoadSpec,
    pub plate: LoadSpec,
}

impl Default for Forcing {
    fn default() -> Self {
        Self {
            fluid: LoadSpec::OFF,
            plate: LoadSpec::OFF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub nu: f64,
    pub k: f64,
    pub oseen_u: f64,
    pub drag: Drag,
    pub force_model: ForceModelSpec,
    pub n_plate: usize,
    pub m1: usize,
    pub m3: usize,
    pub dt: f64,
    pub t_final: f64,
    pub tol_newton: f64,
    pub tol_linear: f64,
    pub newton_max_iter: usize,
    pub scheme: Scheme,
    pub plate_elements: usize,
    pub x3_elements: usize,
    pub quad_order: usize,
    pub forcing: Forcing,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            k: 0.0,
            oseen_u: 0.0,
            drag: Drag::Scalar(0.0),
            force_model: ForceModelSpec::Linear,
            n_plate: 8,
            m1: 8,
            m3: 8,
            dt: 1e-2,
            t_final: 10.0,
            tol_newton: 1e-12,
            tol_linear: 1e-12,
            newton_max_iter: 25,
            scheme: Scheme::Midpoint,
            plate_elements: 32,
            x3_elements: 24,
            quad_order: 7,
            forcing: Forcing::default(),
        }
    }
}

/// Initial data in modal form: `u0 = u0_amplitude ξ_{u0_mode} + c0 e`,
/// `u1 = u1_amplitude ξ_{u1_mode}`, `v0 = v0_amplitude ψ_{v0_mode} + Ext[u1]`,
/// plus an optional seeded random perturbation of every coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialSpec {
    pub u0_mode: usize,
    pub u0_amplitude: f64,
    pub u1_mode: usize,
    pub u1_amplitude: f64,
    pub v0_mode: usize,
    pub v0_amplitude: f64,
    pub random_amplitude: f64,
    pub c0: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            u0_mode: 1,
            u0_amplitude: 0.1,
            u1_mode: 0,
            u1_amplitude: 0.0,
            v0_mode: 0,
            v0_amplitude: 0.0,
            random_amplitude: 0.0,
            c0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputSpec {
    /// Keep every n-th step in the trajectory samples.
    pub sample_every: usize,
    /// Sample points per mode in the `modes` CSV.
    pub mode_samples: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            sample_every: 1,
            mode_samples: 101,
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub run: RunConfig,
    pub initial: InitialSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::with_default_margins(1.0, 0.0, 1.0),
            run: RunConfig::default(),
            initial: InitialSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

/// One violated rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.rule)
    }
}

fn diag(out: &mut Vec<Diagnostic>, field: &str, rule: &str) {
    out.push(Diagnostic {
        field: field.to_string(),
        rule: rule.to_string(),
    });
}

fn finite_positive(out: &mut Vec<Diagnostic>, field: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        diag(out, field, "must be positive");
    }
}

fn finite_nonneg(out: &mut Vec<Diagnostic>, field: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        diag(out, field, "must be non-negative");
    }
}

fn finite(out: &mut Vec<Diagnostic>, field: &str, v: f64) {
    if !v.is_finite() {
        diag(out, field, "must be finite");
    }
}

/// Checks every invariant; empty iff the configuration is usable.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let d = &cfg.domain;
    finite_positive(&mut out, "h", d.h);
    for (name, v) in [
        ("plate_lo", d.plate_lo),
        ("plate_hi", d.plate_hi),
        ("box_lo", d.box_lo),
        ("box_hi", d.box_hi),
    ] {
        finite(&mut out, name, v);
    }
    if !(d.plate_hi > d.plate_lo) {
        diag(&mut out, "plate_hi", "must exceed plate_lo");
    }
    if !(d.plate_lo >= d.box_lo) {
        diag(&mut out, "box_lo", "must not exceed plate_lo");
    }
    if !(d.box_hi >= d.plate_hi) {
        diag(&mut out, "box_hi", "must not be below plate_hi");
    }

    let r = &cfg.run;
    finite_positive(&mut out, "nu", r.nu);
    finite_nonneg(&mut out, "k", r.k);
    finite(&mut out, "oseen_u", r.oseen_u);
    match r.drag {
        Drag::Scalar(s) => finite_nonneg(&mut out, "drag_sigma", s),
        Drag::Matrix(m) => {
            if m.iter().flatten().any(|v| !v.is_finite()) {
                diag(&mut out, "drag_sigma", "matrix entries must be finite");
            }
        }
    }
    match r.force_model {
        ForceModelSpec::Linear => {}
        ForceModelSpec::Kirchhoff { lambda, cubic } => {
            finite_nonneg(&mut out, "kirchhoff_lambda", lambda);
            finite_positive(&mut out, "kirchhoff_cubic", cubic);
        }
        ForceModelSpec::Berger { kappa, gamma } => {
            finite_positive(&mut out, "berger_kappa", kappa);
            finite(&mut out, "berger_gamma", gamma);
        }
    }
    if r.n_plate < 1 {
        diag(&mut out, "n_plate", "must be at least 1");
    }
    if r.m1 < 1 {
        diag(&mut out, "m1", "must be at least 1");
    }
    if r.m3 < 1 {
        diag(&mut out, "m3", "must be at least 1");
    }
    finite_positive(&mut out, "dt", r.dt);
    finite_nonneg(&mut out, "t_final", r.t_final);
    finite_positive(&mut out, "tol_newton", r.tol_newton);
    finite_positive(&mut out, "tol_linear", r.tol_linear);
    if r.newton_max_iter < 1 {
        diag(&mut out, "newton_max_iter", "must be at least 1");
    }
    if r.plate_elements < 4 {
        diag(&mut out, "plate_elements", "must be at least 4");
    } else if 2 * (r.plate_elements - 1) < r.n_plate + 1 {
        diag(&mut out, "n_plate", "exceeds the zero-mean plate space dimension");
    }
    if r.x3_elements < 4 {
        diag(&mut out, "x3_elements", "must be at least 4");
    }
    if r.quad_order < 4 {
        diag(&mut out, "quad_order", "must be at least 4");
    }
    for (name, l) in [("fluid_load", r.forcing.fluid), ("plate_load", r.forcing.plate)] {
        finite(&mut out, &format!("{name}_amplitude"), l.amplitude);
        finite(&mut out, &format!("{name}_omega"), l.omega);
    }
    if r.forcing.fluid.mode > r.m1 * r.m3 {
        diag(&mut out, "fluid_load_mode", "exceeds the number of fluid modes");
    }
    if r.forcing.plate.mode > r.n_plate {
        diag(&mut out, "plate_load_mode", "exceeds n_plate");
    }

    let i = &cfg.initial;
    for (name, mode, limit) in [
        ("u0_mode", i.u0_mode, r.n_plate),
        ("u1_mode", i.u1_mode, r.n_plate),
        ("v0_mode", i.v0_mode, r.m1 * r.m3),
    ] {
        if mode > limit {
            diag(&mut out, name, "exceeds the basis size");
        }
    }
    for (name, v) in [
        ("u0_amplitude", i.u0_amplitude),
        ("u1_amplitude", i.u1_amplitude),
        ("v0_amplitude", i.v0_amplitude),
        ("c0", i.c0),
    ] {
        finite(&mut out, name, v);
    }
    finite_nonneg(&mut out, "random_amplitude", i.random_amplitude);

    if cfg.output.sample_every < 1 {
        diag(&mut out, "sample_every", "must be at least 1");
    }
    if cfg.output.mode_samples < 2 {
        diag(&mut out, "mode_samples", "must be at least 2");
    }
    out
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("domain", &["h", "plate_lo", "plate_hi", "box_lo", "box_hi"]),
    (
        "physics",
        &[
            "nu",
            "k",
            "oseen_u",
            "drag_sigma",
            "force_model",
            "kirchhoff_lambda",
            "kirchhoff_cubic",
            "berger_kappa",
            "berger_gamma",
        ],
    ),
    (
        "discretization",
        &[
            "n_plate",
            "m1",
            "m3",
            "dt",
            "t_final",
            "tol_newton",
            "tol_linear",
            "newton_max_iter",
            "scheme",
            "plate_elements",
            "x3_elements",
            "quad_order",
        ],
    ),
    (
        "forcing",
        &[
            "fluid_load_mode",
            "fluid_load_amplitude",
            "fluid_load_omega",
            "plate_load_mode",
            "plate_load_amplitude",
            "plate_load_omega",
        ],
    ),
    (
        "initial",
        &[
            "u0_mode",
            "u0_amplitude",
            "u1_mode",
            "u1_amplitude",
            "v0_mode",
            "v0_amplitude",
            "random_amplitude",
            "c0",
        ],
    ),
    ("output", &["sample_every", "mode_samples"]),
];

struct Reader<'a> {
    table: &'a Table,
    section: &'static str,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&Value> {
        self.table.get(self.section)?.as_table()?.get(key)
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.section, key)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| {
                Error::Config(format!("{} must be a number, got {v}", self.path(key)))
            }),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|_| self.f64(key, 0.0)).transpose()
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(v) => Err(Error::Config(format!(
                "{} must be a non-negative integer, got {v}",
                self.path(key)
            ))),
        }
    }

    fn str(&self, key: &str, default: &str) -> Result<String> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(Error::Config(format!(
                "{} must be a string, got {v}",
                self.path(key)
            ))),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_drag(v: Option<&Value>) -> Result<Drag> {
    let Some(v) = v else {
        return Ok(Drag::Scalar(0.0));
    };
    if let Some(s) = as_f64(v) {
        return Ok(Drag::Scalar(s));
    }
    let bad = || {
        Error::Config(format!(
            "physics.drag_sigma must be a number or a 2x2 array, got {v}"
        ))
    };
    let rows = v.as_array().ok_or_else(bad)?;
    if rows.len() != 2 {
        return Err(bad());
    }
    let mut m = [[0.0; 2]; 2];
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(bad)?;
        if row.len() != 2 {
            return Err(bad());
        }
        for (j, x) in row.iter().enumerate() {
            m[i][j] = as_f64(x).ok_or_else(bad)?;
        }
    }
    Ok(Drag::Matrix(m))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("malformed document: {}", e.message())))?;
    for (key, value) in &table {
        let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == key) else {
            return Err(Error::Config(format!("unknown key `{key}`")));
        };
        let inner = value
            .as_table()
            .ok_or_else(|| Error::Config(format!("`{key}` must be a section")))?;
        for k in inner.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}.{k}`")));
            }
        }
    }

    let defaults = ExperimentConfig::default();
    let rd = |section| Reader {
        table: &table,
        section,
    };

    let dom = rd("domain");
    let h = dom.f64("h", defaults.domain.h)?;
    let plate_lo = dom.f64("plate_lo", defaults.domain.plate_lo)?;
    let plate_hi = dom.f64("plate_hi", defaults.domain.plate_hi)?;
    let margins = DomainSpec::with_default_margins(h, plate_lo, plate_hi);
    let domain = DomainSpec {
        h,
        plate_lo,
        plate_hi,
        box_lo: dom.opt_f64("box_lo")?.unwrap_or(margins.box_lo),
        box_hi: dom.opt_f64("box_hi")?.unwrap_or(margins.box_hi),
    };

    let phys = rd("physics");
    let d = defaults.run;
    let force_model = match phys.str("force_model", "linear")?.as_str() {
        "linear" => ForceModelSpec::Linear,
        "kirchhoff" => ForceModelSpec::Kirchhoff {
            lambda: phys.f64("kirchhoff_lambda", 0.0)?,
            cubic: phys.f64("kirchhoff_cubic", 1.0)?,
        },
        "berger" => ForceModelSpec::Berger {
            kappa: phys.f64("berger_kappa", 1.0)?,
            gamma: phys.f64("berger_gamma", 0.0)?,
        },
        other => {
            return Err(Error::Config(format!(
                "physics.force_model must be linear|kirchhoff|berger, got `{other}`"
            )))
        }
    };
    let disc = rd("discretization");
    let scheme = match disc.str("scheme", "midpoint")?.as_str() {
        "midpoint" => Scheme::Midpoint,
        "midpoint_discrete_gradient" => Scheme::MidpointDiscreteGradient,
        other => {
            return Err(Error::Config(format!(
                "discretization.scheme must be midpoint|midpoint_discrete_gradient, got `{other}`"
            )))
        }
    };
    let frc = rd("forcing");
    let load = |prefix: &str| -> Result<LoadSpec> {
        Ok(LoadSpec {
            mode: frc.usize(&format!("{prefix}_mode"), 0)?,
            amplitude: frc.f64(&format!("{prefix}_amplitude"), 0.0)?,
            omega: frc.f64(&format!("{prefix}_omega"), 1.0)?,
        })
    };
    let run = RunConfig {
        nu: phys.f64("nu", d.nu)?,
        k: phys.f64("k", d.k)?,
        oseen_u: phys.f64("oseen_u", d.oseen_u)?,
        drag: parse_drag(phys.raw("drag_sigma"))?,
        force_model,
        n_plate: disc.usize("n_plate", d.n_plate)?,
        m1: disc.usize("m1", d.m1)?,
        m3: disc.usize("m3", d.m3)?,
        dt: disc.f64("dt", d.dt)?,
        t_final: disc.f64("t_final", d.t_final)?,
        tol_newton: disc.f64("tol_newton", d.tol_newton)?,
        tol_linear: disc.f64("tol_linear", d.tol_linear)?,
        newton_max_iter: disc.usize("newton_max_iter", d.newton_max_iter)?,
        scheme,
        plate_elements: disc.usize("plate_elements", d.plate_elements)?,
        x3_elements: disc.usize("x3_elements", d.x3_elements)?,
        quad_order: disc.usize("quad_order", d.quad_order)?,
        forcing: Forcing {
            fluid: load("fluid_load")?,
            plate: load("plate_load")?,
        },
    };
    let ini = rd("initial");
    let di = defaults.initial;
    let initial = InitialSpec {
        u0_mode: ini.usize("u0_mode", di.u0_mode)?,
        u0_amplitude: ini.f64("u0_amplitude", di.u0_amplitude)?,
        u1_mode: ini.usize("u1_mode", di.u1_mode)?,
        u1_amplitude: ini.f64("u1_amplitude", di.u1_amplitude)?,
        v0_mode: ini.usize("v0_mode", di.v0_mode)?,
        v0_amplitude: ini.f64("v0_amplitude", di.v0_amplitude)?,
        random_amplitude: ini.f64("random_amplitude", di.random_amplitude)?,
        c0: ini.f64("c0", di.c0)?,
    };
    let out = rd("output");
    let output = OutputSpec {
        sample_every: out.usize("sample_every", defaults.output.sample_every)?,
        mode_samples: out.usize("mode_samples", defaults.output.mode_samples)?,
    };
    let cfg = ExperimentConfig {
        domain,
        run,
        initial,
        output,
    };
    let diags = validate(&cfg);
    if !diags.is_empty() {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(Error::Config(msg.join("; ")));
    }
    Ok(cfg)
}

fn num(v: f64) -> String {
    let s = format!("{v:?}");
    match s.as_str() {
        "inf" => "inf".into(),
        "-inf" => "-inf".into(),
        "NaN" => "nan".into(),
        _ => s,
    }
}

/// Writes every field so that `parse_config(&serialize(c)) == c`.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let d = &cfg.domain;
    let r = &cfg.run;
    let i = &cfg.initial;
    let mut s = String::new();
    s += "[domain]\n";
    s += &format!("h = {}\n", num(d.h));
    s += &format!("plate_lo = {}\n", num(d.plate_lo));
    s += &format!("plate_hi = {}\n", num(d.plate_hi));
    s += &format!("box_lo = {}\n", num(d.box_lo));
    s += &format!("box_hi = {}\n", num(d.box_hi));

    s += "\n[physics]\n";
    s += &format!("nu = {}\n", num(r.nu));
    s += &format!("k = {}\n", num(r.k));
    s += &format!("oseen_u = {}\n", num(r.oseen_u));
    match r.drag {
        Drag::Scalar(v) => s += &format!("drag_sigma = {}\n", num(v)),
        Drag::Matrix(m) => {
            s += &format!(
                "drag_sigma = [[{}, {}], [{}, {}]]\n",
                num(m[0][0]),
                num(m[0][1]),
                num(m[1][0]),
                num(m[1][1])
            )
        }
    }
    match r.force_model {
        ForceModelSpec::Linear => s += "force_model = \"linear\"\n",
        ForceModelSpec::Kirchhoff { lambda, cubic } => {
            s += "force_model = \"kirchhoff\"\n";
            s += &format!("kirchhoff_lambda = {}\n", num(lambda));
            s += &format!("kirchhoff_cubic = {}\n", num(cubic));
        }
        ForceModelSpec::Berger { kappa, gamma } => {
            s += "force_model = \"berger\"\n";
            s += &format!("berger_kappa = {}\n", num(kappa));
            s += &format!("berger_gamma = {}\n", num(gamma));
        }
    }

    s += "\n[discretization]\n";
    s += &format!("n_plate = {}\n", r.n_plate);
    s += &format!("m1 = {}\n", r.m1);
    s += &format!("m3 = {}\n", r.m3);
    s += &format!("dt = {}\n", num(r.dt));
    s += &format!("t_final = {}\n", num(r.t_final));
    s += &format!("tol_newton = {}\n", num(r.tol_newton));
    s += &format!("tol_linear = {}\n", num(r.tol_linear));
    s += &format!("newton_max_iter = {}\n", r.newton_max_iter);
    s += &format!("scheme = \"{}\"\n", r.scheme.name());
    s += &format!("plate_elements = {}\n", r.plate_elements);
    s += &format!("x3_elements = {}\n", r.x3_elements);
    s += &format!("quad_order = {}\n", r.quad_order);

    s += "\n[forcing]\n";
    for (name, l) in [("fluid_load", r.forcing.fluid), ("plate_load", r.forcing.plate)] {
        s += &format!("{name}_mode = {}\n", l.mode);
        s += &format!("{name}_amplitude = {}\n", num(l.amplitude));
        s += &format!("{name}_omega = {}\n", num(l.omega));
    }

    s += "\n[initial]\n";
    s += &format!("u0_mode = {}\n", i.u0_mode);
    s += &format!("u0_amplitude = {}\n", num(i.u0_amplitude));
    s += &format!("u1_mode = {}\n", i.u1_mode);
    s += &format!("u1_amplitude = {}\n", num(i.u1_amplitude));
    s += &format!("v0_mode = {}\n", i.v0_mode);
    s += &format!("v0_amplitude = {}\n", num(i.v0_amplitude));
    s += &format!("random_amplitude = {}\n", num(i.random_amplitude));
    s += &format!("c0 = {}\n", num(i.c0));

    s += "\n[output]\n";
    s += &format!("sample_every = {}\n", cfg.output.sample_every);
    s += &format!("mode_samples = {}\n", cfg.output.mode_samples);
    s
}
