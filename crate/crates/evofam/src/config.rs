//! Run configuration: parsing, validation, canonical serialization, hashing.
//!
//! A run is described by a JSON object with exactly these keys:
//!
//! ```json
//! {
//!   "T": 1.0, "N": 8, "M": 200,
//!   "alpha": {"family": "affine", "params": {"a": 1.0, "b": 0.5}},
//!   "beta":  {"family": "separable",
//!             "params": {"g": {"family": "constant", "params": {"c": 1.0}},
//!                         "p": [0.0, 0.1]}},
//!   "tolerances": {"residual": 1e-3, "picard": 1e-10, "ode": 1e-8},
//!   "initial": {"phi": [1.0, 0.0], "psi": [0.0, 0.0]}
//! }
//! ```
//!
//! `tolerances` and `initial` are optional (defaults: the named constants
//! below; zero initial data). Everything else is required. Parsing is strict:
//! errors name the offending key, and the configuration boundary enforces
//! α(t) ≥ 1 on the horizon, which the theory of the bound suite presumes — the
//! library types themselves only insist on positivity so that out-of-range
//! families remain constructible for bound experiments.

use crate::coeffs::{AlphaFamily, BetaFamily, CoefficientFamily, NaturalCubic, Polynomial};
use crate::error::{EvofamError, Result};
use crate::grid::TimeGrid;
use crate::space::Truncation;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Default residual tolerance for finite-difference-limited checks: matches
/// the O(dt²) error of central differencing at the acceptance grids.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-3;
/// Default fixed-point increment tolerance for the Volterra solver.
pub const DEFAULT_PICARD_TOL: f64 = 1e-10;
/// Default tolerance attributed to the fixed-step mode integrator.
pub const DEFAULT_ODE_TOL: f64 = 1e-8;
/// Accuracy attributed to the constant-coefficient closed-form path.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// Tolerance block of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Finite-difference residual checks.
    pub residual: f64,
    /// Picard fixed-point increments.
    pub picard: f64,
    /// Mode integrator accuracy budget.
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: DEFAULT_RESIDUAL_TOL,
            picard: DEFAULT_PICARD_TOL,
            ode: DEFAULT_ODE_TOL,
        }
    }
}

/// Initial spectral data (φ, ψ) for trajectory subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    /// Position coefficients a_n of φ.
    pub phi: Vec<f64>,
    /// Velocity coefficients of ψ.
    pub psi: Vec<f64>,
}

impl InitialData {
    /// Zero data at truncation `n`.
    pub fn zeros(n: usize) -> Self {
        InitialData {
            phi: vec![0.0; n],
            psi: vec![0.0; n],
        }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Coefficient functions and horizon.
    pub family: CoefficientFamily,
    /// Retained modes.
    pub trunc: Truncation,
    /// Reporting grid.
    pub grid: TimeGrid,
    /// Tolerance block.
    pub tolerances: Tolerances,
    /// Initial data for trajectory commands.
    pub initial: InitialData,
}

fn cfg_err(key: &str, reason: impl Into<String>) -> EvofamError {
    EvofamError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn get<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value> {
    obj.get(key).ok_or_else(|| cfg_err(key, "missing key"))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| cfg_err(key, "expected a number"))
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| cfg_err(key, "expected a non-negative integer"))
}

fn as_obj<'v>(v: &'v Value, key: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| cfg_err(key, "expected an object"))
}

fn as_f64_array(v: &Value, key: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| cfg_err(key, "expected an array"))?;
    arr.iter()
        .map(|x| as_f64(x, key))
        .collect::<Result<Vec<f64>>>()
}

fn parse_alpha_family(v: &Value, key: &str, t_end: f64) -> Result<AlphaFamily> {
    let obj = as_obj(v, key)?;
    let fam = get(obj, "family")
        .map_err(|_| cfg_err(&format!("{key}.family"), "missing key"))?
        .as_str()
        .ok_or_else(|| cfg_err(&format!("{key}.family"), "expected a string"))?;
    let params = |k: &str| -> Result<&Map<String, Value>> {
        as_obj(
            get(obj, "params").map_err(|_| cfg_err(&format!("{key}.params"), "missing key"))?,
            &format!("{key}.params"),
        )
        .map_err(|_| cfg_err(&format!("{key}.params"), format!("expected an object for family '{k}'")))
    };
    match fam {
        "constant" => {
            let p = params("constant")?;
            Ok(AlphaFamily::Constant {
                c: as_f64(get(p, "c").map_err(|_| cfg_err(&format!("{key}.params.c"), "missing key"))?, &format!("{key}.params.c"))?,
            })
        }
        "affine" => {
            let p = params("affine")?;
            Ok(AlphaFamily::Affine {
                a: as_f64(get(p, "a").map_err(|_| cfg_err(&format!("{key}.params.a"), "missing key"))?, &format!("{key}.params.a"))?,
                b: as_f64(get(p, "b").map_err(|_| cfg_err(&format!("{key}.params.b"), "missing key"))?, &format!("{key}.params.b"))?,
            })
        }
        "cosine" => {
            let p = params("cosine")?;
            Ok(AlphaFamily::Cosine {
                a: as_f64(get(p, "a").map_err(|_| cfg_err(&format!("{key}.params.a"), "missing key"))?, &format!("{key}.params.a"))?,
                b: as_f64(get(p, "b").map_err(|_| cfg_err(&format!("{key}.params.b"), "missing key"))?, &format!("{key}.params.b"))?,
                omega: as_f64(get(p, "omega").map_err(|_| cfg_err(&format!("{key}.params.omega"), "missing key"))?, &format!("{key}.params.omega"))?,
            })
        }
        "table" => {
            let p = params("table")?;
            let vk = format!("{key}.params.values");
            let values = as_f64_array(get(p, "values").map_err(|_| cfg_err(&vk, "missing key"))?, &vk)?;
            if values.len() < 2 {
                return Err(cfg_err(&vk, "table needs at least 2 samples"));
            }
            let dx = t_end / (values.len() - 1) as f64;
            let spline = NaturalCubic::fit(0.0, dx, values)
                .map_err(|e| cfg_err(&vk, e.to_string()))?;
            Ok(AlphaFamily::Table { spline })
        }
        other => Err(cfg_err(
            &format!("{key}.family"),
            format!("unknown family '{other}' (expected constant|affine|cosine|table)"),
        )),
    }
}

fn parse_beta_family(v: &Value, t_end: f64) -> Result<BetaFamily> {
    let obj = as_obj(v, "beta")?;
    let fam = get(obj, "family")
        .map_err(|_| cfg_err("beta.family", "missing key"))?
        .as_str()
        .ok_or_else(|| cfg_err("beta.family", "expected a string"))?;
    match fam {
        "zero" => Ok(BetaFamily::Zero),
        "separable" => {
            let params = as_obj(
                get(obj, "params").map_err(|_| cfg_err("beta.params", "missing key"))?,
                "beta.params",
            )?;
            let g = parse_alpha_family(
                get(params, "g").map_err(|_| cfg_err("beta.params.g", "missing key"))?,
                "beta.params.g",
                t_end,
            )?;
            let pc = as_f64_array(
                get(params, "p").map_err(|_| cfg_err("beta.params.p", "missing key"))?,
                "beta.params.p",
            )?;
            Ok(BetaFamily::Separable {
                g,
                p: Polynomial::new(pc)?,
            })
        }
        "table" => {
            let params = as_obj(
                get(obj, "params").map_err(|_| cfg_err("beta.params", "missing key"))?,
                "beta.params",
            )?;
            let rk = "beta.params.rows";
            let rows_v = get(params, "rows").map_err(|_| cfg_err(rk, "missing key"))?;
            let rows_arr = rows_v.as_array().ok_or_else(|| cfg_err(rk, "expected an array of arrays"))?;
            let rows: Vec<Vec<f64>> = rows_arr
                .iter()
                .map(|r| as_f64_array(r, rk))
                .collect::<Result<_>>()?;
            if rows.len() < 2 || rows.iter().any(|r| r.len() < 2) {
                return Err(cfg_err(rk, "table needs >= 2 rows and >= 2 columns"));
            }
            let cols = rows[0].len();
            if rows.iter().any(|r| r.len() != cols) {
                return Err(cfg_err(rk, "all rows must have equal length"));
            }
            Ok(BetaFamily::Table {
                t0: 0.0,
                dt: t_end / (rows.len() - 1) as f64,
                xi0: 0.0,
                dxi: std::f64::consts::PI / (cols - 1) as f64,
                rows,
            })
        }
        other => Err(cfg_err(
            "beta.family",
            format!("unknown family '{other}' (expected zero|separable|table)"),
        )),
    }
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| cfg_err("<document>", format!("malformed JSON: {e}")))?;
    let obj = as_obj(&root, "<document>")?;

    let t_end = as_f64(get(obj, "T")?, "T")?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(cfg_err("T", format!("must be positive and finite, got {t_end}")));
    }
    let n = as_usize(get(obj, "N")?, "N")?;
    if n == 0 {
        return Err(cfg_err("N", "must be >= 1"));
    }
    let m = as_usize(get(obj, "M")?, "M")?;
    if m == 0 {
        return Err(cfg_err("M", "must be >= 1"));
    }

    let alpha = parse_alpha_family(get(obj, "alpha")?, "alpha", t_end)?;
    let beta = parse_beta_family(get(obj, "beta")?, t_end)?;

    let grid = TimeGrid::new(t_end, m)?;
    let family = CoefficientFamily::new(alpha, beta, t_end, m)
        .map_err(|e| cfg_err("alpha", e.to_string()))?;
    family
        .assert_alpha_ge_one(&grid)
        .map_err(|e| cfg_err("alpha", e.to_string()))?;

    let mut tolerances = Tolerances::default();
    if let Some(tv) = obj.get("tolerances") {
        let tobj = as_obj(tv, "tolerances")?;
        for key in tobj.keys() {
            if !matches!(key.as_str(), "residual" | "picard" | "ode") {
                return Err(cfg_err(
                    &format!("tolerances.{key}"),
                    "unknown tolerance (expected residual|picard|ode)",
                ));
            }
        }
        if let Some(v) = tobj.get("residual") {
            tolerances.residual = as_f64(v, "tolerances.residual")?;
        }
        if let Some(v) = tobj.get("picard") {
            tolerances.picard = as_f64(v, "tolerances.picard")?;
        }
        if let Some(v) = tobj.get("ode") {
            tolerances.ode = as_f64(v, "tolerances.ode")?;
        }
        for (k, t) in [
            ("residual", tolerances.residual),
            ("picard", tolerances.picard),
            ("ode", tolerances.ode),
        ] {
            if !(t > 0.0) || !t.is_finite() {
                return Err(cfg_err(&format!("tolerances.{k}"), "must be positive"));
            }
        }
    }

    let initial = match obj.get("initial") {
        None => InitialData::zeros(n),
        Some(iv) => {
            let iobj = as_obj(iv, "initial")?;
            let phi = match iobj.get("phi") {
                None => vec![0.0; n],
                Some(v) => as_f64_array(v, "initial.phi")?,
            };
            let psi = match iobj.get("psi") {
                None => vec![0.0; n],
                Some(v) => as_f64_array(v, "initial.psi")?,
            };
            if phi.len() != n {
                return Err(cfg_err(
                    "initial.phi",
                    format!("expected {n} coefficients, got {}", phi.len()),
                ));
            }
            if psi.len() != n {
                return Err(cfg_err(
                    "initial.psi",
                    format!("expected {n} coefficients, got {}", psi.len()),
                ));
            }
            InitialData { phi, psi }
        }
    };

    Ok(RunSpec {
        family,
        trunc: Truncation::new(n)?,
        grid,
        tolerances,
        initial,
    })
}

fn alpha_to_value(a: &AlphaFamily, t_end: f64) -> Value {
    match a {
        AlphaFamily::Constant { c } => json!({"family": "constant", "params": {"c": c}}),
        AlphaFamily::Affine { a, b } => json!({"family": "affine", "params": {"a": a, "b": b}}),
        AlphaFamily::Cosine { a, b, omega } => {
            json!({"family": "cosine", "params": {"a": a, "b": b, "omega": omega}})
        }
        AlphaFamily::Table { spline } => {
            // knot values at the uniform sample points; spacing is implied by T
            let n = spline.sample_count();
            let values: Vec<f64> = (0..n)
                .map(|k| spline.eval(t_end * k as f64 / (n - 1) as f64))
                .collect();
            json!({"family": "table", "params": {"values": values}})
        }
    }
}

/// Serialize a run spec back to the canonical configuration document.
/// `parse_config(serialize_config(s))` reproduces `s` exactly for menu
/// families (tables round-trip through their knot values).
pub fn serialize_config(spec: &RunSpec) -> String {
    let t_end = spec.grid.t_end();
    let beta = match spec.family.beta_family() {
        BetaFamily::Zero => json!({"family": "zero"}),
        BetaFamily::Separable { g, p } => json!({
            "family": "separable",
            "params": {"g": alpha_to_value(g, t_end), "p": p.coeffs()}
        }),
        BetaFamily::Table { rows, .. } => json!({
            "family": "table",
            "params": {"rows": rows}
        }),
    };
    let doc = json!({
        "T": t_end,
        "N": spec.trunc.n(),
        "M": spec.grid.m(),
        "alpha": alpha_to_value(spec.family.alpha_family(), t_end),
        "beta": beta,
        "tolerances": {
            "residual": spec.tolerances.residual,
            "picard": spec.tolerances.picard,
            "ode": spec.tolerances.ode,
        },
        "initial": {"phi": spec.initial.phi, "psi": spec.initial.psi},
    });
    // serde_json maps are sorted by key, so this text is canonical for a spec
    serde_json::to_string_pretty(&doc).expect("static structure always serializes")
}

/// Hex SHA-256 of the canonical serialization; identifies a configuration in
/// reports independent of the file it came from.
pub fn config_hash(spec: &RunSpec) -> String {
    let canonical = serialize_config(spec);
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ═══════════════════════════════════════════════════════════════════════════
