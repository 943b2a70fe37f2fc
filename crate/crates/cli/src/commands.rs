use std::path::{Path, PathBuf};
use std::sync::Arc;

use flatcauchy::absint::{
    build_solution, full_rank_data, scalar_multiplicative, special_partial_fraction,
    verify_solution, BundleMap,
};
use flatcauchy::conint::{
    build_gamma0, check_gamma_equality, check_intertwining, convert_absint_to_conint,
    solve_conint, ConintData,
};
use flatcauchy::detrep::{build_pencil, curve_membership, identity_residuals, Pencil};
use flatcauchy::genus0::{gamma_condition, solve_genus0, Genus0Problem};
use flatcauchy::io::{
    matrix_to_rows, square_to_flat, AbsintProblem, ConintProblem, PencilFile, ProblemFile,
};
use flatcauchy::linalg::{frob, null_space};
use flatcauchy::verify::{
    default_embedding, rel, rel_mat, run_criterion, torus_point_avoiding, Ctx, VerifyConfig,
};
use flatcauchy::{
    CMat, CVec, CauchyKernel, DirectSumKernel, FlatLineBundle, PeriodMatrix, ThetaCharacteristic,
    ThetaEngine, Torus, C64,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::report::{InputHash, Outcome};

/// An error attributable to the input; reported with exit code 2.
#[derive(Debug)]
pub struct InputError {
    pub kind: String,
    pub message: String,
}

impl InputError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into() }
    }
}

impl From<flatcauchy::Error> for InputError {
    fn from(e: flatcauchy::Error) -> Self {
        let dbg = format!("{e:?}");
        let kind = dbg.split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
        Self { kind, message: e.to_string() }
    }
}

type Result<T> = std::result::Result<T, InputError>;

pub struct Env {
    pub cfg: VerifyConfig,
    pub hash: InputHash,
}

impl Env {
    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path)
            .map_err(|e| InputError::new("Io", format!("{}: {e}", path.display())))?;
        self.hash.add(&bytes);
        String::from_utf8(bytes).map_err(|_| InputError::new("Parse", format!("{} is not UTF-8", path.display())))
    }

    /// Loads a problem file and merges its seed and tolerances into the configuration.
    fn load<T: for<'de> Deserialize<'de>>(&mut self, path: &Path, seed_flag: bool) -> Result<T> {
        let text = self.read(path)?;
        let f: ProblemFile<T> = ProblemFile::from_json(&text)?;
        if let (Some(s), false) = (f.seed, seed_flag) {
            self.cfg.seed = s;
        }
        for (k, v) in f.tolerances {
            self.cfg.tolerances.entry(k).or_insert(v);
        }
        Ok(f.payload)
    }

    fn ctx(&self, stream: u64) -> Ctx {
        Ctx::new(&self.cfg, stream)
    }
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn mjson(m: &CMat) -> Value {
    serde_json::to_value(matrix_to_rows(m)).expect("matrix serializes")
}

fn sweep(env: &Env, ids: &[u32]) -> Outcome {
    Outcome { criteria: ids.iter().map(|&id| run_criterion(id, &env.cfg)).collect(), ..Default::default() }
}

pub fn theta(omega: &[C64], z: &[C64], a: Option<&[f64]>, b: Option<&[f64]>, gradient: bool) -> Result<Outcome> {
    let g = (omega.len() as f64).sqrt().round() as usize;
    if g == 0 || g * g != omega.len() {
        return Err(InputError::new("InvalidInput", "omega needs g² entries"));
    }
    if z.len() != g {
        return Err(InputError::new("InvalidInput", format!("z needs {g} entries")));
    }
    let period = PeriodMatrix::new(CMat::from_row_slice(g, g, omega))?;
    let engine = ThetaEngine::new(period, Default::default())?;
    let chi = match (a, b) {
        (None, None) => None,
        (Some(a), Some(b)) => Some(ThetaCharacteristic::new(a.to_vec(), b.to_vec())?),
        (Some(a), None) => Some(ThetaCharacteristic::new(a.to_vec(), vec![0.0; g])?),
        (None, Some(b)) => Some(ThetaCharacteristic::new(vec![0.0; g], b.to_vec())?),
    };
    let (value, grad) = match (&chi, gradient) {
        (None, false) => (engine.theta(z)?, None),
        (None, true) => {
            let (v, d) = engine.theta_and_gradient(z)?;
            (v, Some(d))
        }
        (Some(c), false) => (engine.theta_char(c, z)?, None),
        (Some(c), true) => {
            let (v, d) = engine.theta_char_and_gradient(c, z)?;
            (v, Some(d))
        }
    };
    let mut result = json!({
        "genus": g,
        "z": z.iter().copied().map(cjson).collect::<Vec<_>>(),
        "value": cjson(value),
        "lattice_radius": engine.radius(),
    });
    if let Some(c) = &chi {
        result["characteristic"] = json!({ "a": c.a, "b": c.b });
    }
    if let Some(d) = grad {
        result["gradient"] = Value::Array(d.into_iter().map(cjson).collect());
    }
    Ok(Outcome { result, ..Default::default() })
}

#[derive(Deserialize)]
struct Genus0Input {
    #[serde(flatten)]
    problem: Genus0Problem,
    #[serde(default)]
    eval: Vec<C64>,
}

pub fn solve_genus0_cmd(env: &mut Env, path: &Path, at: &[C64], seed_flag: bool) -> Result<Outcome> {
    let input: Genus0Input = env.load(path, seed_flag)?;
    let p = &input.problem;
    let t = solve_genus0(p)?;
    let r = p.rank;
    let mut ctx = env.ctx(2);
    for z in &p.zeros {
        let x = CVec::from_column_slice(&z.x);
        let v = t.eval(z.point)?;
        ctx.at_most("zero conditions", (x.transpose() * &v).norm() / (x.norm() * frob(&v).max(1.0)), 1e-10);
    }
    for q in &p.poles {
        let u = CVec::from_column_slice(&q.u);
        let v = t.eval_inverse(q.point)?;
        ctx.at_most("pole conditions", (&v * &u).norm() / (u.norm() * frob(&v).max(1.0)), 1e-10);
    }
    let mut points: Vec<C64> = at.iter().chain(&input.eval).copied().collect();
    if points.is_empty() {
        points = vec![C64::new(10.0, 0.0), C64::new(0.0, 10.0), C64::new(-10.0, 0.0), C64::new(0.0, -10.0)];
    }
    let nodes: Vec<C64> = p.zeros.iter().map(|z| z.point).chain(p.poles.iter().map(|q| q.point)).collect();
    let mut values = Vec::new();
    for &z in &points {
        if nodes.iter().any(|&n| (n - z).norm() < 1e-9) {
            return Err(InputError::new("PointOnPoleSet", format!("evaluation point {z} is a node")));
        }
        let v = t.eval(z)?;
        let prod = &v * t.eval_inverse(z)?;
        ctx.at_most("T T^-1 = I", frob(&(prod - CMat::identity(r, r))), 1e-10);
        values.push(json!({ "z": cjson(z), "T": mjson(&v) }));
    }
    let result = json!({
        "rank": r,
        "gamma_condition": gamma_condition(p),
        "values": values,
    });
    Ok(Outcome { checks: ctx.into_checks(), result, ..Default::default() })
}

#[derive(Deserialize)]
struct LineInput {
    #[serde(flatten)]
    problem: AbsintProblem,
    #[serde(default)]
    eval: Vec<C64>,
}

fn single_line(spec: &flatcauchy::io::BundleSpec, t: &Arc<Torus>, what: &str) -> Result<FlatLineBundle> {
    match spec.lines().as_slice() {
        [(a, b)] => Ok(FlatLineBundle::from_characteristic(t.clone(), *a, *b)?),
        _ => Err(InputError::new("InvalidInput", format!("{what} must be a single line bundle"))),
    }
}

pub fn solve_line(env: &mut Env, path: &Path, at: &[C64], seed_flag: bool) -> Result<Outcome> {
    let input: LineInput = env.load(path, seed_flag)?;
    let s = input.problem.setup()?;
    let chi = single_line(&input.problem.chi, &s.torus, "chi")?;
    let tilde = single_line(&input.problem.chi_tilde, &s.torus, "chi_tilde")?;
    if !s.data.couplings.is_empty() {
        return Err(InputError::new("InvalidInput", "line problems take distinct zeros and poles"));
    }
    let lam: Vec<C64> = s.data.zeros.iter().map(|n| n.point).collect();
    let mu: Vec<C64> = s.data.poles.iter().map(|n| n.point).collect();
    if lam.len() != s.data.n_zero_vectors() || mu.len() != s.data.n_pole_vectors() {
        return Err(InputError::new("InvalidInput", "each node carries one vector in a line problem"));
    }
    let q = s.base_point;
    let q_val = s.base_value[(0, 0)];
    let prod = scalar_multiplicative(&lam, &mu, &chi, &tilde, q, q_val)?;
    // Scalar nodes may carry any nonzero vector; normalize to 1.
    let data = full_rank_data(&lam, &mu, 1);
    let pf = build_solution(&data, q, s.base_value.clone(), s.chi.clone(), s.tilde.clone())?;
    let mut ctx = env.ctx(5);
    let mut points: Vec<C64> = at.iter().chain(&input.eval).copied().collect();
    let nodes: Vec<C64> = [lam.as_slice(), &mu, &[q]].concat();
    if points.is_empty() {
        for _ in 0..env.cfg.samples.unwrap_or(8).max(1) {
            points.push(torus_point_avoiding(&mut ctx.rng, &s.torus, &nodes, 0.05));
        }
    }
    let mut values = Vec::new();
    for &p in &points {
        if nodes[..nodes.len() - 1].iter().any(|&n| s.torus.same_point(n, p, 1e-9)) {
            return Err(InputError::new("PointOnPoleSet", format!("evaluation point {p} is a node")));
        }
        let a = prod.eval_scalar(p)?;
        let b = pf.eval(p)?[(0, 0)];
        ctx.at_most("product = partial fraction", rel(a, b), 1e-9);
        let mut row = json!({ "p": cjson(p), "product": cjson(a), "partial_fraction": cjson(b) });
        if lam.len() == 1 {
            let sp = special_partial_fraction(&chi, lam[0], mu[0], q, q_val, p)?;
            ctx.at_most("single-pair term assembly", rel(a, sp), 1e-9);
            row["single_pair"] = cjson(sp);
        }
        values.push(row);
    }
    let rep = verify_solution(&pf, &data)?;
    ctx.at_most("partial-fraction solution conditions", rep.max(), 1e-7);
    let result = json!({
        "gamma": mjson(pf.gamma()),
        "values": values,
        "solution_conditions": rep,
    });
    Ok(Outcome { checks: ctx.into_checks(), result, ..Default::default() })
}

pub fn fay_check(env: &Env) -> Outcome {
    sweep(env, &[4])
}

pub fn matrix_fay(env: &Env) -> Outcome {
    sweep(env, &[6])
}

pub fn kernel_check(env: &Env) -> Outcome {
    sweep(env, &[3])
}

pub fn detrep(env: &mut Env, lines: &[(f64, f64)], pencil_out: Option<&PathBuf>) -> Result<Outcome> {
    if lines.is_empty() {
        if pencil_out.is_some() {
            return Err(InputError::new("InvalidInput", "--pencil-out needs at least one --line"));
        }
        return Ok(sweep(env, &[7]));
    }
    let tau = env.cfg.taus.as_ref().and_then(|t| t.first().copied()).unwrap_or(C64::new(0.0, 1.0));
    let t = Arc::new(Torus::new(tau)?);
    let emb = default_embedding(&t)?;
    let k = DirectSumKernel::lines(t.clone(), lines)?;
    let pencil = build_pencil(&k, &emb)?;
    let r = k.rank();
    let mut ctx = env.ctx(7);
    let xis = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.5, 0.5)]];
    for _ in 0..env.cfg.samples.unwrap_or(20).max(1) {
        let p = torus_point_avoiding(&mut ctx.rng, &t, emb.points(), 0.08);
        for xi in xis {
            let [a, b, d] = identity_residuals(&pencil, &k, &emb, p, xi)?;
            ctx.at_most("U u = 0", a, 1e-7);
            ctx.at_most("u_l U = 0", b, 1e-7);
            ctx.at_most("u_l (xi.sigma) u = (xi.lambda') I", d, 1e-7);
        }
        let m = curve_membership(&pencil, emb.eval(p)?);
        ctx.at_most("on-curve relative det", m.relative_det, 1e-7);
        ctx.at_most("on-curve kernel dimension mismatch", (m.kernel_dim as f64 - r as f64).abs(), 0.0);
    }
    let file = PencilFile::from_pencil(&pencil);
    if let Some(path) = pencil_out {
        crate::report::write(&file, Some(path))
            .map_err(|e| InputError::new("Io", format!("{}: {e}", path.display())))?;
    }
    let result = json!({
        "tau": cjson(tau),
        "embedding_poles": emb.points().iter().copied().map(cjson).collect::<Vec<_>>(),
        "pencil": file,
    });
    Ok(Outcome { checks: ctx.into_checks(), result, ..Default::default() })
}

fn default_xis() -> Vec<[C64; 2]> {
    vec![[C64::new(1.0, 0.0), C64::new(0.3, 0.2)], [C64::new(-0.4, 0.9), C64::new(1.0, 0.0)]]
}

fn conint_result(sol_gamma: &CMat, gamma0: &CMat, xi: [C64; 2]) -> Value {
    json!({
        "xi": [cjson(xi[0]), cjson(xi[1])],
        "gamma": square_to_flat(sol_gamma).into_iter().map(cjson).collect::<Vec<_>>(),
        "gamma0": mjson(gamma0),
    })
}

pub fn conint(env: &mut Env, path: Option<&Path>, from_absint: Option<&Path>, seed_flag: bool) -> Result<Outcome> {
    match (path, from_absint) {
        (None, None) => Ok(sweep(env, &[8])),
        (Some(_), Some(_)) => Err(InputError::new("InvalidInput", "give a problem file or --from-absint, not both")),
        (Some(p), None) => conint_file(env, p, seed_flag),
        (None, Some(p)) => conint_from_absint(env, p, seed_flag),
    }
}

fn conint_file(env: &mut Env, path: &Path, seed_flag: bool) -> Result<Outcome> {
    let problem: ConintProblem = env.load(path, seed_flag)?;
    // Pencil references given by path resolve relative to the problem file.
    let referenced = match &problem.pencil {
        flatcauchy::io::PencilRef::Path(p) => {
            let text = env.read(&path.parent().unwrap_or(Path::new(".")).join(p))?;
            Some(serde_json::from_str::<PencilFile>(&text).map_err(|e| InputError::new("Parse", format!("{p}: {e}")))?)
        }
        flatcauchy::io::PencilRef::Inline(_) => None,
    };
    let data = problem.to_data(|_| Ok(referenced.clone().expect("path reference was read")))?;
    let xis = if problem.xi.is_empty() { default_xis() } else { problem.xi.clone() };
    let mut ctx = env.ctx(8);
    for r in data.membership_residuals() {
        ctx.at_most("data lies on the reference curve", r, 1e-8);
    }
    let (sols, g0) = solve_all(&data, &xis)?;
    for (s, g) in sols.iter().zip(&g0).skip(1) {
        ctx.at_most("Gamma0 xi-independence", rel_mat(&g0[0], g), 1e-8);
        ctx.at_most("gamma update xi-independence", rel_mat(&sols[0].pencil.gamma, &s.pencil.gamma), 1e-8);
    }
    let result = conint_result(&sols[0].pencil.gamma, &g0[0], xis[0]);
    Ok(Outcome { checks: ctx.into_checks(), result, ..Default::default() })
}

fn solve_all(data: &ConintData, xis: &[[C64; 2]]) -> Result<(Vec<flatcauchy::conint::ConintSolution>, Vec<CMat>)> {
    let mut sols = Vec::new();
    let mut g0 = Vec::new();
    for &xi in xis {
        g0.push(build_gamma0(data, xi)?);
        sols.push(solve_conint(data, xi)?);
    }
    Ok((sols, g0))
}

fn conint_from_absint(env: &mut Env, path: &Path, seed_flag: bool) -> Result<Outcome> {
    let problem: AbsintProblem = env.load(path, seed_flag)?;
    let s = problem.setup()?;
    let emb = default_embedding(&s.torus)?;
    let tilde = s.tilde.as_ref();
    let reference: Pencil = build_pencil(tilde, &emb)?;
    let conv = convert_absint_to_conint(&s.data, tilde, &emb, &reference)?;
    let t = build_solution(&s.data, s.base_point, s.base_value.clone(), s.chi.clone(), s.tilde.clone())?;
    let xis = default_xis();
    let mut ctx = env.ctx(8);
    for &xi in &xis {
        ctx.at_most_res("Gamma = Gamma0", check_gamma_equality(&s.data, tilde, &conv, xi), 1e-8);
    }
    let (sols, g0) = solve_all(&conv, &xis)?;
    ctx.at_most("gamma update xi-independence", rel_mat(&sols[0].pencil.gamma, &sols[1].pencil.gamma), 1e-8);
    let xs = emb.points().to_vec();
    let beta_inv: Vec<CMat> = xs.iter().map(|&x| t.eval(x)).collect::<flatcauchy::Result<_>>()?;
    let mut nodes = xs.clone();
    nodes.push(s.base_point);
    nodes.extend(s.data.zeros.iter().chain(&s.data.poles).map(|n| n.point));
    let r = tilde.rank();
    for _ in 0..env.cfg.samples.unwrap_or(20).max(1) {
        let p = torus_point_avoiding(&mut ctx.rng, &s.torus, &nodes, 0.08);
        let z = emb.eval(p)?;
        let m = curve_membership(&sols[0].pencil, z);
        ctx.at_most("updated pencil on-curve relative det", m.relative_det, 1e-7);
        ctx.at_most("updated pencil kernel dimension mismatch", (m.kernel_dim as f64 - r as f64).abs(), 0.0);
        let [right, left] = sols[0].kernel_mapping_residuals(z)?;
        ctx.at_most("S maps kernels", right, 1e-7);
        ctx.at_most("S_l^-1 maps left kernels", left, 1e-7);
        let v = null_space(&sols[0].pencil.eval(z), r);
        for col in 0..r {
            let kv = v.column(col).into_owned();
            let d = sols[0].apply(z, &kv)? - sols[1].apply(z, &kv)?;
            ctx.at_most("S xi-independence on kernels", d.norm() / kv.norm(), 1e-8);
        }
        let res = check_intertwining(&sols[0], &t as &dyn BundleMap, s.chi.as_ref(), tilde, &emb, &beta_inv, p);
        ctx.at_most_res("intertwining", res, 1e-7);
    }
    let mut result = conint_result(&sols[0].pencil.gamma, &g0[0], xis[0]);
    result["embedding_poles"] = Value::Array(xs.into_iter().map(cjson).collect());
    result["problem"] = serde_json::to_value(ConintProblem::from_data(&conv)).expect("problem serializes");
    Ok(Outcome { checks: ctx.into_checks(), result, ..Default::default() })
}

pub fn verify_all(env: &Env, only: &[u32]) -> Result<Outcome> {
    if let Some(bad) = only.iter().find(|&&i| !(1..=9).contains(&i)) {
        return Err(InputError::new("InvalidInput", format!("no criterion {bad}")));
    }
    let ids: Vec<u32> = if only.is_empty() { (1..=9).collect() } else { only.to_vec() };
    Ok(sweep(env, &ids))
}
