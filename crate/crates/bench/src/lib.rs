//! Fixed inputs shared by the benchmarks.

use std::sync::Arc;

use flatcauchy::absint::{full_rank_data, AbsintData};
use flatcauchy::conint::{convert_absint_to_conint, ConintData};
use flatcauchy::detrep::build_pencil;
use flatcauchy::genus0::{Genus0Problem, PoleDatum, ZeroDatum};
use flatcauchy::surface::build_embedding_functions;
use flatcauchy::{CMat, DirectSumKernel, EmbeddingPair, FlatLineBundle, LineKernel, PeriodMatrix, Torus, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub const TAU: C64 = C64::new(0.3, 0.8);

pub fn torus() -> Arc<Torus> {
    Arc::new(Torus::new(TAU).expect("valid modulus"))
}

pub fn genus2() -> PeriodMatrix {
    PeriodMatrix::new(CMat::from_row_slice(2, 2, &[c(0.1, 1.1), c(0.25, 0.3), c(0.25, 0.3), c(-0.2, 0.9)]))
        .expect("valid period matrix")
}

pub fn embedding(t: &Arc<Torus>) -> EmbeddingPair {
    build_embedding_functions(t.clone(), [c(0.1, 0.1), c(0.45, 0.3), c(0.7, 0.75)]).expect("distinct poles")
}

pub fn line_kernel(t: &Arc<Torus>) -> LineKernel {
    LineKernel::new(FlatLineBundle::from_characteristic(t.clone(), 0.23, 0.41).expect("generic bundle"))
}

pub fn pair_kernel(t: &Arc<Torus>) -> DirectSumKernel {
    DirectSumKernel::lines(t.clone(), &[(0.23, 0.41), (0.61, 0.12)]).expect("generic bundles")
}

/// `n` zeros and poles spread over the fundamental domain.
pub fn nodes(n: usize) -> (Vec<C64>, Vec<C64>) {
    let at = |k: usize, shift: f64| {
        let s = (k as f64 + shift) / n as f64;
        c(0.9 * s + 0.05, 0.0) + TAU * (0.85 * (1.0 - s) + 0.05)
    };
    ((0..n).map(|k| at(k, 0.2)).collect(), (0..n).map(|k| at(k, 0.7)).collect())
}

/// Full-rank scalar data with `n` zeros and poles, and `χ` matching the divisor.
pub fn line_problem(t: &Arc<Torus>, n: usize) -> (LineKernel, LineKernel, AbsintData) {
    let (lam, mu) = nodes(n);
    let tilde = FlatLineBundle::from_characteristic(t.clone(), 0.23, 0.41).expect("generic bundle");
    let d: C64 = lam.iter().sum::<C64>() - mu.iter().sum::<C64>();
    let chi = FlatLineBundle::from_point(t.clone(), tilde.point() - d).expect("generic bundle");
    (LineKernel::new(chi), LineKernel::new(tilde), full_rank_data(&lam, &mu, 1))
}

pub fn conint_problem(t: &Arc<Torus>, n: usize) -> ConintData {
    let emb = embedding(t);
    let (_, tilde, data) = line_problem(t, n);
    let reference = build_pencil(&tilde, &emb).expect("pencil");
    convert_absint_to_conint(&data, &tilde, &emb, &reference).expect("nodes clear of the embedding poles")
}

pub fn genus0_problem(r: usize, n: usize) -> Genus0Problem {
    let v = |k: usize, s: f64| (0..r).map(|i| c(1.0 + s * i as f64, 0.3 * (k + i) as f64)).collect();
    Genus0Problem {
        rank: r,
        zeros: (0..n).map(|k| ZeroDatum { point: c(k as f64, 0.5), x: v(k, 0.7) }).collect(),
        poles: (0..n).map(|k| PoleDatum { point: c(k as f64 + 0.5, -0.5), u: v(k, -0.4) }).collect(),
    }
}
