//! Named check suites over one model, assembled into a [`Report`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::curvature_lab::{
    curvature_symmetries, d_torsion_checks, homothety_checks, hkt_suite, instanton_and_star_ricci,
    ricci_form_checks, scalar_inequality_checks, split_checks, verify_ricci_form_decomposition,
    verify_ricci_form_rotation, verify_ricci_form_traces, verify_scalar_relations,
    verify_torsion_trace_identities, CurvatureError, Geometry,
};
use crate::models::{validate, Classification, Model};
use crate::report::{Check, Report};
use crate::torsion_connection::{
    bismut, connection_one_forms, hkt_discrepancy, qkt_find, torsion_type_check, ConnectionError, HKT_TOL,
};
use crate::twistor::twistor_suite;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown suite '{0}' (expected structure, curvature, hkt, twistor or all)")]
pub struct UnknownSuite(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Structure,
    Curvature,
    Hkt,
    Twistor,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Structure, Suite::Curvature, Suite::Hkt, Suite::Twistor, Suite::All];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Structure => "structure",
            Suite::Curvature => "curvature",
            Suite::Hkt => "hkt",
            Suite::Twistor => "twistor",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub tol: f64,
    /// Fiber scale of the twistor metric.
    pub c: f64,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol: 1e-9, c: 1.0, seed: 42 }
    }
}

fn class_check(v: &crate::models::Validation) -> Check {
    let instanton = match v.instanton {
        Some(true) => "instanton type",
        Some(false) => "not of instanton type",
        None => "instanton type undetermined",
    };
    Check::info(
        "structure.classification",
        format!("{}; {instanton}", v.class),
        "hyperkähler / HKT (balanced or not) / QKT / none",
        0.0,
        0.0,
    )
}

fn connection_checks(model: &Model, tol: f64) -> Vec<Check> {
    let (alg, q) = (&model.algebra, &model.triple);
    let mut out = Vec::new();
    match qkt_find(alg, q) {
        Ok(c) => {
            out.push(Check::residual(
                "connection.qkt.residual",
                "the QKT connection preserves the quaternionic bundle",
                "nabla J_a = -w_b (x) J_c + w_c (x) J_b",
                c.residual,
                tol,
            ));
            out.push(Check::residual(
                "connection.qkt.torsion_type",
                "torsion is of type (1,2)+(2,1) for each J_a",
                "T(X,Y,Z) = T(JX,JY,Z) + T(JX,Y,JZ) + T(X,JY,JZ)",
                torsion_type_check(&c.torsion, q).max_residual(),
                tol,
            ));
            out.push(Check::equal(
                "connection.qkt.torsion_nullity",
                "the torsion is unique",
                "dim {T : (T, w) solves the homogeneous system} = 0",
                c.torsion_nullity as f64,
                0.0,
                0.0,
            ));
            let recovered = match connection_one_forms(&c.connection, q, 1e-8) {
                Ok(w) => {
                    let solved = c.omegas.as_ref().expect("qkt solution carries 1-forms");
                    w.iter().zip(solved).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
                }
                Err(_) => f64::NAN,
            };
            out.push(Check::residual(
                "connection.qkt.one_forms",
                "sp(1) connection 1-forms recovered from nabla J agree with the solver",
                "w_c(X) = 1/(4n) sum_i g((nabla_X J_a) e_i, J_b e_i)",
                recovered,
                tol,
            ));
        }
        Err(e) => out.push(Check::failed("connection.qkt.exists", e.to_string(), "QKT connection exists")),
    }
    let sols: Vec<_> = q.all().iter().map(|j| bismut(alg, j)).collect();
    for (a, s) in sols.iter().enumerate() {
        let id = format!("connection.bismut.J{}", a + 1);
        let formula = "nabla J = 0, nabla metric, skew torsion";
        out.push(match s {
            Ok(b) => Check::residual(id, "Bismut connection of J_a solves its linear system", formula, b.residual, tol),
            Err(e) => Check::info(id, format!("no Bismut connection: {e}"), formula, f64::NAN, f64::NAN),
        });
    }
    if let Ok(sols) = sols.into_iter().collect::<Result<Vec<_>, ConnectionError>>() {
        let disc = hkt_discrepancy(&sols);
        out.push(Check::info(
            "connection.hkt.bismut_discrepancy",
            if disc <= HKT_TOL {
                "HKT: the three Bismut torsions coincide (lhs: discrepancy, rhs: threshold)"
            } else {
                "not HKT: the Bismut torsions differ (lhs: discrepancy, rhs: threshold)"
            },
            "T_{J1} = T_{J2} = T_{J3}",
            disc,
            HKT_TOL,
        ));
    }
    out
}

fn structure_suite(model: &Model, tol: f64) -> Vec<Check> {
    let v = validate(model, tol);
    let mut out = v.checks.clone();
    out.push(class_check(&v));
    out.extend(connection_checks(model, tol));
    out
}

fn scalar_values(g: &Geometry) -> Vec<Check> {
    let s = &g.scalars;
    [
        ("scal", "Scal", s.scal),
        ("scal_g", "Scal^g", s.scal_g),
        ("scal_q", "Scal_Q", s.scal_q),
        ("scal_gq", "Scal^g_Q", s.scal_gq),
        ("t_norm_sq", "|t|^2", s.t_norm_sq),
        ("torsion_norm_sq", "|T|^2", s.torsion_norm_sq),
        ("delta_t", "delta t", s.delta_t),
    ]
    .into_iter()
    .map(|(id, name, v)| Check::info(format!("scalar.value.{id}"), format!("value of {name}"), name, v, v))
    .collect()
}

fn curvature_error(id: &str, e: CurvatureError) -> Check {
    Check::failed(id, e.to_string(), "identity not evaluable")
}

fn curvature_suite(g: &Geometry, tol: f64) -> Vec<Check> {
    let mut out = curvature_symmetries(g, tol);
    out.extend(ricci_form_checks(g, tol));
    out.extend(split_checks(g, tol));
    out.extend(d_torsion_checks(g, tol));
    out.extend(verify_torsion_trace_identities(g, tol));
    for (id, r) in [
        ("scalar.ricci_form_traces", verify_ricci_form_traces(g, tol)),
        ("curvature.rho_decomposition", verify_ricci_form_decomposition(g, tol)),
        ("scalar.relations", verify_scalar_relations(g, tol)),
        ("scalar.inequality", scalar_inequality_checks(g, tol)),
        ("instanton", instanton_and_star_ricci(g, tol).map(|i| i.checks)),
    ] {
        match r {
            Ok(c) => out.extend(c),
            Err(e) => out.push(curvature_error(id, e)),
        }
    }
    out.extend(verify_ricci_form_rotation(g, tol));
    out.extend(homothety_checks(g, tol));
    out.extend(scalar_values(g));
    out
}

fn hkt_checks(model: &Model, g: &Geometry, tol: f64) -> Vec<Check> {
    let v = validate(model, tol);
    let mut out = match hkt_suite(g, tol) {
        Ok(c) => c,
        Err(e) => return vec![Check::failed("hkt.precondition", e.to_string(), "model is HKT")],
    };
    out.push(class_check(&v));
    let s = &g.scalars;
    let flat_scalars = s.scal_g.abs() <= tol && s.scal_gq.abs() <= tol && s.delta_t.abs() <= tol;
    out.push(Check::implies(
        "hkt.vanishing_scalars_imply_hyperkaehler",
        "HKT with Scal^g = Scal^g_Q = 0 and delta t = 0 is hyperkähler",
        "Scal^g = Scal^g_Q = 0 => T = 0",
        flat_scalars,
        v.class == Classification::HyperKaehler,
    ));
    out
}

fn qkt_missing(e: CurvatureError) -> Vec<Check> {
    vec![Check::failed("connection.qkt.exists", e.to_string(), "QKT connection exists")]
}

/// Runs one suite. `All` runs every suite and skips the HKT-only checks for
/// models that are not HKT.
pub fn run_suite(model: &Model, suite: Suite, opts: &Options) -> Report {
    let start = Instant::now();
    let tol = opts.tol;
    let geometry = Geometry::new(&model.algebra, &model.triple);
    let twistor = |g: &Geometry| match twistor_suite(g, opts.c, opts.seed, tol) {
        Ok(c) => c,
        Err(e) => vec![Check::failed("twistor.error", e.to_string(), "twistor checks evaluable")],
    };
    let checks = match (suite, geometry) {
        (Suite::Structure, _) => structure_suite(model, tol),
        (Suite::Curvature, Ok(g)) => curvature_suite(&g, tol),
        (Suite::Hkt, Ok(g)) => hkt_checks(model, &g, tol),
        (Suite::Twistor, Ok(g)) => twistor(&g),
        (Suite::All, Err(_)) => structure_suite(model, tol),
        (_, Err(e)) => qkt_missing(e),
        (Suite::All, Ok(g)) => {
            let mut out = structure_suite(model, tol);
            out.extend(curvature_suite(&g, tol));
            if g.is_hkt() {
                out.extend(hkt_checks(model, &g, tol).into_iter().filter(|c| c.id != "structure.classification"));
            }
            out.extend(twistor(&g));
            out
        }
    };
    Report::new(model.name.clone(), suite.name(), tol, checks, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin, BuiltinModel};

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn hkt_suite_on_solv_fails_precondition() {
        let r = run_suite(&builtin(BuiltinModel::Solv8), Suite::Hkt, &Options::default());
        assert!(!r.pass);
        assert!(!r.get("hkt.precondition").unwrap().pass);
    }

    #[test]
    fn ids_are_unique() {
        for b in BuiltinModel::ALL {
            let r = run_suite(&builtin(b), Suite::All, &Options::default());
            for w in r.checks.windows(2) {
                assert_ne!(w[0].id, w[1].id);
            }
        }
    }
}
