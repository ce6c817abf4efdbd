//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Gaussians cross the boundary as flat arrays: a planar Gaussian is
//! `[mx, my, sxx, sxy, syy]`. Results come back as JSON strings.

use gaussalign::cluster::{
    adjusted_rand_index, classical_mds, kmeans_igw, pairwise_igw_matrix, PairwiseMode, KMEANS_MAX_ITERS,
};
use gaussalign::igw::{igw_closed_form, igw_distance_rgd};
use gaussalign::io::matrix_rows;
use gaussalign::transport::{bw_distance, bw_map, displacement_interpolation};
use gaussalign::{sampling, spectra, DMatrix, DVector, Error, Gaussian, Result, SolverConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn planar(v: &[f64]) -> Result<Gaussian> {
    if v.len() != 5 {
        return Err(Error::InvalidInput(format!("expected [mx, my, sxx, sxy, syy], got {} numbers", v.len())));
    }
    Gaussian::new(DVector::from_column_slice(&v[..2]), DMatrix::from_row_slice(2, 2, &[v[2], v[3], v[3], v[4]]))
}

fn flat(g: &Gaussian) -> [f64; 5] {
    let (m, c) = (g.mean(), g.cov());
    [m[0], m[1], c[(0, 0)], c[(0, 1)], c[(1, 1)]]
}

/// Points on the displacement path from `a` to `b` at each of `times`, plus
/// the Bures-Wasserstein distance.
pub fn interpolate_json(a: &[f64], b: &[f64], times: &[f64]) -> Result<String> {
    let (ga, gb) = (planar(a)?, planar(b)?);
    let map = bw_map(&ga, &gb)?;
    let path = times
        .iter()
        .map(|&t| displacement_interpolation(&ga, &map, t).map(|g| flat(&g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "distance": bw_distance(&ga, &gb)?, "path": path }).to_string())
}

/// W2 next to IGW (bounds, gradient ascent and the closed form when one
/// exists). Rotating either input changes the first but not the second.
pub fn compare_json(a: &[f64], b: &[f64], seed: u64) -> Result<String> {
    let (ga, gb) = (planar(a)?, planar(b)?);
    let est = igw_distance_rgd(&ga, &gb, &SolverConfig::rgd().with_seed(seed))?;
    Ok(json!({
        "w2": bw_distance(&ga, &gb)?,
        "igw": est.distance,
        "lower": est.bounds.lower,
        "upper": est.bounds.upper,
        "iterations": est.solution.iterations,
        "closed_form": igw_closed_form(&ga, &gb)?,
    })
    .to_string())
}

/// Random population of centered Gaussians in `groups` spectral families,
/// clustered by IGW k-means and embedded in the plane by MDS. Entities
/// alternate between dimension `dim` and `dim - 2` when `mixed` is set.
pub fn cluster_json(
    seed: u64,
    groups: usize,
    per_group: usize,
    dim: usize,
    jitter: f64,
    mixed: bool,
) -> Result<String> {
    if groups == 0 || per_group == 0 || dim < 3 {
        return Err(Error::InvalidInput("need at least one group, one member and dimension 3".into()));
    }
    let mut rng = sampling::seeded(seed);
    let bases: Vec<DVector<f64>> = (0..groups)
        .map(|_| {
            let mut s = sampling::standard_normal_vector(&mut rng, dim).map(|z| (1.0 + 0.6 * z).exp());
            s.as_mut_slice().sort_by(|x, y| y.total_cmp(x));
            s
        })
        .collect();
    let mut gs = Vec::new();
    let mut truth = Vec::new();
    for (g, base) in bases.iter().enumerate() {
        for e in 0..per_group {
            let d = if mixed && e % 2 == 1 { dim - 2 } else { dim };
            let z = sampling::standard_normal_vector(&mut rng, d);
            let spectrum = DVector::from_fn(d, |k, _| base[k] * (1.0 + jitter * z[k]).max(0.1));
            let q = sampling::haar_orthonormal(&mut rng, d, d);
            gs.push(Gaussian::centered(spectra::symmetrize(
                &(&q * DMatrix::from_diagonal(&spectrum) * q.transpose()),
            ))?);
            truth.push(g);
        }
    }
    let fit = kmeans_igw(&gs, groups.min(gs.len()), seed, KMEANS_MAX_ITERS)?;
    let dm = pairwise_igw_matrix(&gs, &SolverConfig::rgd(), PairwiseMode::Closed)?;
    let emb = classical_mds(&dm, 2)?;
    Ok(json!({
        "truth": truth,
        "labels": fit.labels,
        "dims": gs.iter().map(Gaussian::dim).collect::<Vec<_>>(),
        "ari": adjusted_rand_index(&truth, &fit.labels)?,
        "coords": matrix_rows(&emb.coords),
    })
    .to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn interpolate(a: &[f64], b: &[f64], times: &[f64]) -> std::result::Result<String, JsError> {
    js(interpolate_json(a, b, times))
}

#[wasm_bindgen]
pub fn compare(a: &[f64], b: &[f64], seed: u32) -> std::result::Result<String, JsError> {
    js(compare_json(a, b, seed as u64))
}

#[wasm_bindgen]
pub fn cluster(
    seed: u32,
    groups: usize,
    per_group: usize,
    dim: usize,
    jitter: f64,
    mixed: bool,
) -> std::result::Result<String, JsError> {
    js(cluster_json(seed as u64, groups, per_group, dim, jitter, mixed))
}
