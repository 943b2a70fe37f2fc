use flatcauchy::absint::{build_solution, verify_solution};
use flatcauchy::conint::solve_conint;
use flatcauchy::detrep::build_pencil;
use flatcauchy::io::*;
use flatcauchy::surface::build_embedding_functions;
use flatcauchy::verify::coincident_data;
use flatcauchy::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const ABSINT: &str = r#"{
  "seed": 3,
  "tolerances": {"residue": 1e-6},
  "tau": [0.3, 0.8],
  "chi": {"a": 0.23, "b": 0.41},
  "chi_tilde": {"a": 0.23, "b": 0.41},
  "zeros": [{"point": [0.2, 0.1], "vectors": [[[1, 0]]]}],
  "poles": [{"point": [0.2, 0.1], "vectors": [[[1, 0]]]}],
  "couplings": [],
  "base_point": [0.7, 0.5]
}"#;

#[test]
fn absint_envelope_and_setup() {
    let f: ProblemFile<AbsintProblem> = ProblemFile::from_json(ABSINT).unwrap();
    assert_eq!(f.schema, SCHEMA_VERSION);
    assert_eq!(f.seed, Some(3));
    assert_eq!(f.tolerances["residue"], 1e-6);
    // Zero and pole coincide, so a coupling is required.
    assert!(matches!(f.payload.setup(), Err(Error::InvalidInput(_))));

    let t = std::sync::Arc::new(flatcauchy::Torus::new(c(0.3, 0.8)).unwrap());
    let mut p = f.payload.clone();
    p.poles[0].point = c(0.6, 0.45);
    let tilde = flatcauchy::surface::FlatLineBundle::from_characteristic(t.clone(), 0.23, 0.41).unwrap();
    let chi = flatcauchy::surface::FlatLineBundle::from_point(t, tilde.point() - (c(0.2, 0.1) - c(0.6, 0.45))).unwrap();
    p.chi = BundleSpec::Line(LineSpec { a: chi.a(), b: chi.b() });
    let s = p.setup().unwrap();
    let sol = build_solution(&s.data, s.base_point, s.base_value, s.chi, s.tilde).unwrap();
    assert!(verify_solution(&sol, &s.data).unwrap().max() < 1e-7);
}

#[test]
fn conint_problem_round_trip() {
    let t = std::sync::Arc::new(flatcauchy::Torus::new(c(0.3, 0.8)).unwrap());
    let emb = build_embedding_functions(t.clone(), [c(0.1, 0.1), c(0.45, 0.3), c(0.7, 0.75)]).unwrap();
    let k = BundleSpec::Sum(vec![LineSpec { a: 0.23, b: 0.41 }, LineSpec { a: 0.61, b: 0.12 }])
        .kernel(&t)
        .unwrap();
    let pencil = build_pencil(&k, &emb).unwrap();
    let data = coincident_data(&k, &emb, &pencil, c(0.35, 0.2), c(0.3, 0.0)).unwrap();
    let json = serde_json::to_string(&ConintProblem::from_data(&data)).unwrap();
    let back: ConintProblem = serde_json::from_str(&json).unwrap();
    let d2 = back.to_data(|_| unreachable!()).unwrap();
    assert_eq!(d2.pencil, data.pencil);
    assert_eq!(d2.zeros, data.zeros);
    assert_eq!(d2.couplings, data.couplings);
    let xi = [c(1.0, 0.0), c(0.0, 0.0)];
    assert_eq!(solve_conint(&d2, xi).unwrap().gamma0, solve_conint(&data, xi).unwrap().gamma0);

    // A pencil given by path goes through the resolver.
    let mut by_path = back.clone();
    by_path.pencil = PencilRef::Path("pencil.json".into());
    let file = PencilFile::from_pencil(&pencil);
    let d3 = by_path.to_data(|p| {
        assert_eq!(p, "pencil.json");
        Ok(file.clone())
    });
    assert_eq!(d3.unwrap().pencil, pencil);
}

#[test]
fn malformed_matrices() {
    assert!(flat_to_square(&[c(1.0, 0.0); 3], "m").is_err());
    assert!(rows_to_matrix(&[vec![c(1.0, 0.0)], vec![]], "m").is_err());
    let f = PencilFile { m: 2, rank: 1, sigma1: vec![c(0.0, 0.0); 4], sigma2: vec![c(0.0, 0.0); 4], gamma: vec![c(0.0, 0.0); 9] };
    assert!(f.to_pencil().is_err());
    assert!(ProblemFile::<AbsintProblem>::from_json("{").is_err());
}
