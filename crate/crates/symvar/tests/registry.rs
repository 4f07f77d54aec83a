use std::sync::Arc;

use serde_json::json;
use symvar::metric::GridMetric;
use symvar::principles::Setup;
use symvar::registry::{domains, engines, functionals, integrands, maps, nonlinearities, sequences, weights, Named};
use symvar::{make_grid, NormKind, SymError};

fn named(v: serde_json::Value) -> Named {
    serde_json::from_value(v).unwrap()
}

#[test]
fn unknown_names_list_the_known_ones() {
    let err = weights().build(&(), &Named::new("cubic")).err().unwrap();
    match err {
        SymError::UnknownName { kind, name, known } => {
            assert_eq!((kind.as_str(), name.as_str()), ("weight", "cubic"));
            assert_eq!(known, "linear, quadratic, zero");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn unknown_and_missing_params_rejected() {
    let e = integrands().build(&(), &named(json!({"name": "dirichlet", "p": 3.0}))).err().unwrap();
    assert!(matches!(e, SymError::InvalidArgument(ref m) if m.contains("unknown field")), "{e}");
    let e = nonlinearities().build(&(), &named(json!({"name": "cubic"}))).err().unwrap();
    assert!(matches!(e, SymError::InvalidArgument(ref m) if m.contains("missing field")), "{e}");
}

#[test]
fn every_registered_name_builds() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    assert_eq!(integrands().names(), vec!["dirichlet", "p-dirichlet", "saturated-weight"]);
    for (name, extra) in [("dirichlet", json!({})), ("p-dirichlet", json!({"p": 3.0})), ("saturated-weight", json!({"k": 1.0}))] {
        let mut spec = Named::new(name);
        spec.params = extra.as_object().unwrap().clone();
        assert!(integrands().build(&(), &spec).is_ok(), "{name}");
    }
    for name in ["zero", "linear", "quadratic"] {
        assert_eq!(weights().build(&(), &Named::new(name)).unwrap().name(), name);
    }
    for name in ["zero", "linear", "cubic"] {
        let spec = if name == "zero" { Named::new(name) } else { Named::new(name).with("k", 1.0) };
        assert!(nonlinearities().build(&(), &spec).is_ok());
    }
    let fs = [
        json!({"name": "power", "norm": "x", "coef": 0.5, "exponent": 2.0}),
        json!({"name": "squared-distance", "norm": "l2", "center": [0.0, 1.0, 1.0, 0.0]}),
        json!({"name": "double-well", "norm": "x"}),
        json!({"name": "mountain-pass", "norm": "v"}),
        json!({"name": "soft-quartic", "norm": "x"}),
        json!({"name": "linear", "density": [1.0, 1.0, 1.0, 1.0]}),
        json!({"name": "quasilinear", "integrand": {"name": "dirichlet"}, "forcing": 1.0}),
        json!({"name": "semilinear", "nonlinearity": {"name": "cubic", "k": 1.0}, "box": "default"}),
        json!({"name": "sum", "parts": [{"name": "double-well", "norm": "x"}, {"name": "linear", "density": [0.0, 0.0, 0.0, 0.0]}]}),
    ];
    for f in fs {
        let built = functionals().build(&g, &named(f.clone()));
        assert!(built.is_ok(), "{f}: {:?}", built.err());
    }
    let base = functionals().build(&g, &named(json!({"name": "double-well", "norm": "x"}))).unwrap();
    for s in [json!({"name": "constant"}), json!({"name": "vanishing-perturbation", "tau": 0.5})] {
        assert!(sequences().build(&(g.clone(), base.clone()), &named(s)).is_ok());
    }
    for m in [json!({"name": "identity"}), json!({"name": "scaling", "sigma": 0.5}), json!({"name": "affine", "anchor": [1.0, 1.0, 1.0, 1.0], "sigma": 0.5})] {
        assert!(maps().build(&g, &named(m)).is_ok());
    }
    for d in [json!({"name": "whole"}), json!({"name": "cone"}), json!({"name": "box", "lo": 0.0, "hi": 1.0})] {
        assert!(domains().build(&g, &named(d)).is_ok());
    }
}

#[test]
fn semilinear_box_resolves_default_width() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let f = functionals()
        .build(&g, &named(json!({"name": "semilinear", "nonlinearity": {"name": "cubic", "k": 1.0}, "box": "default"})))
        .unwrap();
    let m = symvar::applications::semilinear::default_box(&g);
    assert_eq!(f.bounds(), Some((-m, m)));
    let bad = functionals().build(&g, &named(json!({"name": "semilinear", "nonlinearity": {"name": "zero"}, "box": "wide"})));
    assert!(bad.is_err());
}

#[test]
fn engines_run_by_name() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let setup = Setup::new(&g, Arc::new(GridMetric::new(&g, NormKind::X))).with_samples(2000).with_seed(3);
    let f = functionals().build(&g, &named(json!({"name": "double-well", "norm": "l2"}))).unwrap();
    // near the well ||u||_L2 = 1, total measure 2
    let u0 = vec![0.71, 0.712, 0.712, 0.71];
    let specs = [
        json!({"name": "symmetric-ekeland", "variant": "II", "sigma": 0.1, "rho": 0.1}),
        json!({"name": "zhong", "weight": {"name": "linear"}, "sigma": 0.1, "rho": 0.1}),
        json!({"name": "symmetric-ekeland-gamma", "sequence": {"name": "vanishing-perturbation", "tau": 0.01}, "sigma": 0.1, "rho": 0.1}),
    ];
    for s in specs {
        let e = engines().build(&(), &named(s.clone())).unwrap();
        let certs = e.run(f.clone(), &setup, &u0);
        let certs = certs.unwrap_or_else(|err| panic!("{}: {err}", e.name()));
        assert!(certs.iter().all(|c| c.passed()), "{s}: {:?}", certs[0].failures());
    }
    let e = engines().build(&(), &named(json!({"name": "zhong", "weight": {"name": "cubic"}, "sigma": 0.1, "rho": 0.1})));
    assert!(matches!(e.err(), Some(SymError::UnknownName { .. })));
}

#[test]
fn named_round_trips() {
    let text = r#"{"name":"semilinear","box":"default","nonlinearity":{"k":1.0,"name":"cubic"}}"#;
    let spec: Named = serde_json::from_str(text).unwrap();
    assert_eq!(serde_json::to_string(&spec).unwrap(), text);
}
