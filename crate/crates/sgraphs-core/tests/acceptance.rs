//! Acceptance suite: every release-gating check in one place, one test per
//! verifiable claim, each printing a single PASS/FAIL line (run with
//! `--nocapture` to see the lines for passing tests too).
//!
//! Three checks are implemented exactly as stated although desk-scale
//! statistics resolve physical deviations that coarser comparisons cannot;
//! they fail with the measured numbers in their message and the analysis
//! lives in the README's acceptance section:
//!   - coupled-block spacings vs the single-pair law (chi-square),
//!   - graph-ensemble spacings vs the GSE surmise (chi-square),
//!   - the repulsion slope at delta_phi = 3 pi / 2.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;

use sgraphs_core::graph::{
    build_symplectic_pair, conjugate_vertex, random_cubic, random_pair_spec, Graph, PhasePolicy,
};
use sgraphs_core::numeric::histogram::{chi_square_gof, Histogram};
use sgraphs_core::numeric::quad::integrate_adaptive;
use sgraphs_core::rmt::{
    central_fraction, resolve_kramers_pairs, CoupledBlockParams, EnsembleKind, EnsembleSpec,
};
use sgraphs_core::scattering::{
    extract_spectrum_from_phase, reflection_phase_with_coupling, s_matrix, PortSet,
};
use sgraphs_core::secular::{find_spectrum, SolverOptions};
use sgraphs_core::seeding::stream_rng;
use sgraphs_core::spacing::{
    distribution_distance, single_pair_mean, single_pair_pdf, wigner_gse_pdf,
};
use sgraphs_core::stats::{
    form_factor, gse_form_factor, gse_number_variance, gse_spectral_rigidity, number_variance,
    repulsion_slope, spectral_rigidity, unfold_graph_spectrum, DoubletMode, RigidityMethod,
    SourceTag, UnfoldingMap,
};

const GOLDEN: f64 = 1.618_033_988_749_894_8;

fn report(id: &str, label: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} {label}: {verdict} ({detail})");
    assert!(pass, "ACCEPTANCE {id} {label}: FAIL ({detail})");
}

// ---------------------------------------------------------------------------
// shared heavy fixtures
// ---------------------------------------------------------------------------

/// Nine seeded pair graphs at the symplectic point, 16-vertex bases with two
/// cross pairs, pooled resolved-doublet spacings (about 15900 of them).
fn pi_ensemble_spacings() -> &'static Vec<f64> {
    static DATA: OnceLock<Vec<f64>> = OnceLock::new();
    DATA.get_or_init(|| sweep_spacings(PI, DoubletMode::ResolvedPairs, 3600.0))
}

fn sweep_spacings(delta_phi: f64, mode: DoubletMode, k_max: f64) -> Vec<f64> {
    let mut all = Vec::new();
    for i in 0..9u64 {
        let spec = random_pair_spec(16, (0.85, 1.15), 2, delta_phi, 1 + i).unwrap();
        let g = build_symplectic_pair(&spec)
            .unwrap()
            .normalize_to_unit_density()
            .unwrap();
        let sp = find_spectrum(&g, (60.0, k_max), &SolverOptions::default()).unwrap();
        assert!(!sp.diagnostics.weyl_warning, "graph {i}: Weyl mismatch");
        let u = unfold_graph_spectrum(&sp, g.total_length(), mode).unwrap();
        assert!((u.mean_spacing() - 1.0).abs() < 0.02);
        all.extend(u.spacings());
    }
    all
}

/// GSE(400), 500 realizations, unfolded with one shared degree-5 map.
fn gse_ensemble() -> &'static Vec<Vec<f64>> {
    static DATA: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    DATA.get_or_init(|| {
        let spec = EnsembleSpec {
            kind: EnsembleKind::Gse,
            dim: 400,
            realizations: 500,
            seed: 4242,
            coupled: None,
        };
        let eigs = spec.all_eigenvalues().unwrap();
        let distinct: Vec<Vec<f64>> = eigs
            .iter()
            .map(|e| resolve_kramers_pairs(e, 1e-9).unwrap())
            .collect();
        let map = UnfoldingMap::fit(&distinct, 5, 0.8).unwrap();
        distinct
            .iter()
            .map(|d| map.apply(d, SourceTag::Rmt, DoubletMode::ResolvedPairs).values)
            .collect()
    })
}

fn poisson_spectrum(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            acc += -(1.0 - u).ln();
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn c01_star_graph_spectrum_is_analytic() {
    let t0 = Instant::now();
    let g = Graph::new(
        3,
        vec![
            sgraphs_core::graph::Bond::new(0, 1, 1.0, 0.0),
            sgraphs_core::graph::Bond::new(1, 2, GOLDEN, 0.0),
        ],
    )
    .unwrap();
    let step = PI / (1.0 + GOLDEN);
    let spec = find_spectrum(&g, (0.5 * step, 200.9 * step), &SolverOptions::default()).unwrap();
    assert!(spec.values.len() >= 200, "found {}", spec.values.len());
    let mut worst: f64 = 0.0;
    for (n, v) in spec.values.iter().take(200).enumerate() {
        let exact = (n as f64 + 1.0) * step;
        worst = worst.max((v - exact).abs() / exact);
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c01",
        "analytic star spectrum",
        worst < 1e-9 && dt < 5.0,
        &format!("200 levels, worst relative error {worst:.2e}, {dt:.2} s"),
    );
}

#[test]
fn c02_kramers_doublets_of_a_random_pair_graph() {
    let t0 = Instant::now();
    let spec = random_pair_spec(8, (0.6, 1.4), 1, PI, 7).unwrap();
    let g = build_symplectic_pair(&spec)
        .unwrap()
        .normalize_to_unit_density()
        .unwrap();
    // mean level density is 1 per unit k: 300 levels fit below k ~ 310
    let sp = find_spectrum(&g, (0.05, 320.0), &SolverOptions::default()).unwrap();
    assert!(sp.level_count() >= 300);
    let first: Vec<usize> = (0..sp.values.len())
        .scan(0usize, |acc, i| {
            if *acc >= 300 {
                return None;
            }
            *acc += sp.multiplicities[i] as usize;
            Some(i)
        })
        .collect();
    let mean_spacing = 1.0; // individual-level Weyl spacing of an L = pi graph
    let mut max_split: f64 = 0.0;
    let mut all_doublets = true;
    for &i in &first {
        all_doublets &= sp.multiplicities[i] == 2;
        max_split = max_split.max(sp.doublet_splits[i]);
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c02",
        "Kramers degeneracy",
        all_doublets && max_split < 1e-8 * mean_spacing && dt < 60.0,
        &format!(
            "{} doublets, max split {:.1e} spacings, {dt:.1} s",
            first.len(),
            max_split / mean_spacing
        ),
    );
}

#[test]
fn c03_no_transmission_between_image_vertices() {
    let spec = random_pair_spec(8, (0.6, 1.4), 1, PI, 7).unwrap();
    let g = build_symplectic_pair(&spec).unwrap();
    let p0 = 2usize;
    let ports = PortSet::new(vec![p0, conjugate_vertex(&g, p0)], &g).unwrap();
    let mut rng = stream_rng(2718, 0);
    let mut max_t: f64 = 0.0;
    let mut max_d: f64 = 0.0;
    for _ in 0..100 {
        let k = 4.0 + 40.0 * rng.gen::<f64>();
        let s = s_matrix(&g, &ports, k, 0.0).unwrap();
        max_t = max_t.max(s.entries[(0, 1)].norm_sqr());
        max_d = max_d.max((s.entries[(0, 0)] - s.entries[(1, 1)]).norm());
    }
    report(
        "c03",
        "no-transmission theorem",
        max_t < 1e-18 && max_d < 1e-10,
        &format!("max |S01|^2 = {max_t:.1e}, max diagonal mismatch {max_d:.1e} over 100 random k"),
    );
}

#[test]
fn c04_weyl_count_on_normalized_graph() {
    let g = random_cubic(8, (0.7, 1.3), PhasePolicy::RandomUniform, 23)
        .unwrap()
        .normalize_to_unit_density()
        .unwrap();
    let sp = find_spectrum(&g, (5.0, 105.0), &SolverOptions::default()).unwrap();
    let count = sp.level_count();
    report(
        "c04",
        "Weyl law",
        (count as f64 - 100.0).abs() <= 2.0,
        &format!("{count} levels in [5, 105] for an L = pi graph"),
    );
}

#[test]
fn c05_coupling_density_monte_carlo_and_mass() {
    let t0 = Instant::now();
    // brute-force draw of z = 4 |psi11 psi22 - psi12 psi21|^2
    let sd = 1.0 / (2.0 * PI).sqrt();
    let n = 10_000_000usize;
    let mut rng = stream_rng(31415, 0);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g = || {
            nalgebra::Complex::new(
                sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
                sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
            )
        };
        let v = g() * g() - g() * g();
        samples.push(4.0 * v.norm_sqr());
    }
    let hist = Histogram::from_samples(&samples, 0.0, 6.0, 60);
    let gof = chi_square_gof(
        &hist,
        |z| sgraphs_core::spacing::coupling_density_pv(z).unwrap(),
        5.0,
    );
    let mass = integrate_adaptive(
        &|u: f64| 2.0 * u * sgraphs_core::spacing::coupling_density_pv(u * u).unwrap(),
        0.0,
        20.0,
        1e-11,
    );
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c05",
        "Bessel-K1 coupling density",
        gof.p_value > 0.01 && (mass - 1.0).abs() <= 1e-8 && dt < 120.0,
        &format!(
            "1e7 samples, chi2 {:.1}/{} p = {:.3}, mass defect {:.1e}, {dt:.1} s",
            gof.statistic,
            gof.dof,
            gof.p_value,
            (mass - 1.0).abs()
        ),
    );
}

#[test]
fn c06_single_pair_mean_constant() {
    let mean = single_pair_mean();
    report(
        "c06",
        "unscaled single-pair mean",
        (mean - 1.32417).abs() <= 1e-4,
        &format!("quadrature mean = {mean:.6}"),
    );
}

fn coupled_block_spacings() -> Vec<f64> {
    let spec = EnsembleSpec {
        kind: EnsembleKind::CoupledBlock,
        dim: 200,
        realizations: 2000,
        seed: 42,
        coupled: Some(CoupledBlockParams { sub_dim: 100, coupling_scale: 1.0 }),
    };
    let eigs = spec.all_eigenvalues().unwrap();
    let distinct: Vec<Vec<f64>> = eigs
        .iter()
        .map(|e| resolve_kramers_pairs(e, 1e-9).unwrap())
        .collect();
    let map = UnfoldingMap::fit(&distinct, 5, 0.7).unwrap();
    let mut spacings = Vec::new();
    for d in &distinct {
        let u = map.apply(d, SourceTag::Rmt, DoubletMode::ResolvedPairs);
        let central = central_fraction(&u.values, 0.1 / 0.7);
        spacings.extend(central.windows(2).map(|w| w[1] - w[0]));
    }
    spacings
}

#[test]
fn c07_coupled_block_spacings_follow_single_pair_law() {
    let t0 = Instant::now();
    let spacings = coupled_block_spacings();
    let hist = Histogram::from_samples(&spacings, 0.0, 3.5, 35);
    let gof = chi_square_gof(&hist, single_pair_pdf, 5.0);
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c07",
        "coupled-block vs single-pair law (chi2)",
        gof.p_value > 0.01 && dt < 600.0,
        &format!(
            "{} spacings, chi2 {:.1}/{} p = {:.2e}, {dt:.0} s; the ensemble's true law \
             deviates from the rank-4 surmise at the few-percent level (lighter tail), \
             which this sample size resolves; see the acceptance notes in the README",
            spacings.len(),
            gof.statistic,
            gof.dof,
            gof.p_value
        ),
    );
}

#[test]
fn c07_single_pair_and_gse_surmise_distance_band() {
    // distance between the two unit-mean laws as distributions
    let d = distribution_distance(single_pair_pdf, wigner_gse_pdf, 6.0, 600);
    report(
        "c07",
        "single-pair vs GSE surmise band",
        (0.005..=0.05).contains(&d),
        &format!("Kolmogorov distance = {d:.4}, band [0.005, 0.05]"),
    );
}

#[test]
fn c08_graph_ensemble_matches_gse_surmise_chi2() {
    let spacings = pi_ensemble_spacings();
    let hist = Histogram::from_samples(spacings, 0.0, 3.5, 35);
    let gof = chi_square_gof(&hist, wigner_gse_pdf, 5.0);
    report(
        "c08",
        "graph doublet spacings vs GSE surmise (chi2)",
        gof.p_value > 0.01,
        &format!(
            "{} doublet spacings from 9 seeded pair graphs, chi2 {:.1}/{} p = {:.2e}; \
             the two-cross-pair crossover stays a few percent short of the GSE surmise \
             (single-pair-like tail), which this sample size resolves; see the acceptance notes in the README",
            spacings.len(),
            gof.statistic,
            gof.dof,
            gof.p_value
        ),
    );
}

#[test]
fn c08_graph_ensemble_repulsion_slope() {
    let spacings = pi_ensemble_spacings();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let (slope, err) = repulsion_slope(spacings, (0.05 * mean, 0.3 * mean)).unwrap();
    report(
        "c08",
        "graph doublet repulsion slope",
        (slope - 5.0).abs() <= 0.5,
        &format!(
            "{} spacings, log-log slope of I(s) on [0.05, 0.3] = {slope:.3} +- {err:.3} \
             (target 5 +- 0.5); rare weakly-coupled doublet pairs make this estimate \
             ensemble-sensitive; see the acceptance notes in the README",
            spacings.len()
        ),
    );
}

#[test]
fn c09_gse_form_factor() {
    let ensemble = gse_ensemble();
    let refs: Vec<&[f64]> = ensemble.iter().map(|v| v.as_slice()).collect();
    let tau: Vec<f64> = (1..=95).map(|i| 0.02 * i as f64).collect();
    let k = form_factor(&refs, &tau, true).unwrap();
    let mut mae = 0.0;
    let mut cnt = 0usize;
    for (i, &t) in tau.iter().enumerate() {
        if (0.1..=0.9).contains(&t) || (1.1..=1.9).contains(&t) {
            mae += (k.value[i] - gse_form_factor(t)).abs();
            cnt += 1;
        }
    }
    mae /= cnt as f64;
    let k1 = k.value_near(1.0);
    let k08 = k.value_near(0.8);
    report(
        "c09",
        "GSE spectral form factor",
        mae <= 0.05 && k1 > k08,
        &format!("MAE = {mae:.4} over tau in [0.1,0.9]+[1.1,1.9]; K(1) = {k1:.2} > K(0.8) = {k08:.2}"),
    );
}

#[test]
fn c10_number_variance_and_rigidity() {
    let ensemble = gse_ensemble();
    let refs: Vec<&[f64]> = ensemble.iter().map(|v| v.as_slice()).collect();
    let grid: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();

    let s2 = number_variance(&refs, &grid).unwrap();
    let d3 = spectral_rigidity(&refs, &grid, RigidityMethod::DirectFit).unwrap();
    let d3t = spectral_rigidity(&refs, &grid, RigidityMethod::FromSigma2).unwrap();
    let mut worst_s2 = 0.0f64;
    let mut worst_d3 = 0.0f64;
    let mut worst_rel = 0.0f64;
    for (i, &l) in grid.iter().enumerate() {
        worst_s2 = worst_s2.max((s2.value[i] - gse_number_variance(l)).abs() / s2.sigma[i]);
        worst_d3 = worst_d3.max((d3.value[i] - gse_spectral_rigidity(l)).abs() / d3.sigma[i]);
        worst_rel = worst_rel.max((d3.value[i] - d3t.value[i]).abs() / d3.value[i]);
    }

    // Poisson controls
    let spectra: Vec<Vec<f64>> = (0..60).map(|s| poisson_spectrum(4000, 12, s)).collect();
    let prefs: Vec<&[f64]> = spectra.iter().map(|v| v.as_slice()).collect();
    let pgrid = [0.5, 1.0, 2.0, 3.0];
    let ps2 = number_variance(&prefs, &pgrid).unwrap();
    let pd3 = spectral_rigidity(&prefs, &pgrid, RigidityMethod::DirectFit).unwrap();
    let mut worst_poisson = 0.0f64;
    for (i, &l) in pgrid.iter().enumerate() {
        worst_poisson = worst_poisson.max((ps2.value[i] - l).abs() / l);
        worst_poisson = worst_poisson.max((pd3.value[i] - l / 15.0).abs() / (l / 15.0));
    }

    report(
        "c10",
        "number variance and rigidity",
        worst_s2 <= 3.0 && worst_d3 <= 3.0 && worst_rel <= 0.02 && worst_poisson <= 0.05,
        &format!(
            "GSE: max |Sigma2 dev| = {worst_s2:.2} sigma, max |Delta3 dev| = {worst_d3:.2} sigma, \
             method split {worst_rel:.4}; Poisson controls within {worst_poisson:.3}"
        ),
    );
}

#[test]
fn c11_sweep_slope_at_pi() {
    let t0 = Instant::now();
    let spacings = pi_ensemble_spacings();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let (slope, err) = repulsion_slope(spacings, (0.05 * mean, 0.3 * mean)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c11",
        "sweep slope at delta_phi = pi",
        (slope - 5.0).abs() <= 0.5 && dt < 1800.0,
        &format!("slope = {slope:.3} +- {err:.3} (target 5 +- 0.5), {dt:.0} s"),
    );
}

#[test]
fn c11_sweep_slope_at_three_half_pi() {
    let t0 = Instant::now();
    let spacings = sweep_spacings(1.5 * PI, DoubletMode::IndividualLevels, 760.0);
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let (slope, err) = repulsion_slope(&spacings, (0.05 * mean, 0.3 * mean)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c11",
        "sweep slope at delta_phi = 3 pi / 2",
        (slope - 3.0).abs() <= 0.5 && dt < 1800.0,
        &format!(
            "slope = {slope:.3} +- {err:.3} (target 3 +- 0.5), {dt:.0} s; split Kramers \
             partners remain correlated at this twist and their near-linear gap law \
             dominates small s; see the acceptance notes in the README"
        ),
    );
}

#[test]
fn c11_sweep_slope_at_two_pi() {
    let t0 = Instant::now();
    let spacings = sweep_spacings(2.0 * PI, DoubletMode::IndividualLevels, 760.0);
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let (slope, err) = repulsion_slope(&spacings, (0.05 * mean, 0.3 * mean)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c11",
        "sweep slope at delta_phi = 2 pi",
        (slope - 2.0).abs() <= 0.4 && dt < 1800.0,
        &format!("slope = {slope:.3} +- {err:.3} (target 2 +- 0.4), {dt:.0} s"),
    );
}

#[test]
fn c12_phase_extraction_recall_and_perturbation() {
    let t0 = Instant::now();
    let spec = random_pair_spec(6, (0.6, 1.4), 1, PI, 5).unwrap();
    let g = build_symplectic_pair(&spec)
        .unwrap()
        .normalize_to_unit_density()
        .unwrap();
    let truth = find_spectrum(&g, (4.0, 206.0), &SolverOptions::default()).unwrap();
    let eta = 1e-4;
    let coupling = 0.005; // weak antenna: widths stay absorption-dominated
    let step = eta / 4.0;

    let recall_on = |graph: &Graph, k_lo: f64, k_hi: f64| -> (usize, usize, usize) {
        let n = ((k_hi + 0.4 - (k_lo - 0.4)) / step) as usize;
        let grid: Vec<f64> = (0..=n).map(|i| k_lo - 0.4 + step * i as f64).collect();
        let samples = reflection_phase_with_coupling(graph, 0, coupling, &grid, eta).unwrap();
        let extracted = extract_spectrum_from_phase(&samples, 1e-5).unwrap();
        let interior: Vec<f64> = truth
            .values
            .iter()
            .cloned()
            .filter(|v| (k_lo..k_hi).contains(v))
            .collect();
        let hits = interior
            .iter()
            .filter(|t| extracted.values.iter().any(|e| (e - **t).abs() < 1e-3))
            .count();
        let tight = interior
            .iter()
            .filter(|t| extracted.values.iter().any(|e| (e - **t).abs() < 1e-4))
            .count();
        (hits, tight, interior.len())
    };

    let (hits, tight, total) = recall_on(&g, 5.0, 205.0);
    let recall = hits as f64 / total as f64;
    let tight_frac = tight as f64 / total as f64;

    // injected construction tolerances push extracted peaks off the clean
    // reference positions; recall against the clean spectrum must shrink
    let mut recalls = vec![recall];
    for pert in [1e-4, 5e-4, 2e-3] {
        let gp = g.with_length_perturbation(pert, 99);
        let (h, _, tot) = recall_on(&gp, 5.0, 65.0);
        recalls.push(h as f64 / tot as f64);
    }
    let monotone = recalls.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let dt = t0.elapsed().as_secs_f64();
    report(
        "c12",
        "phase extraction",
        recall >= 0.99 && tight_frac >= 0.90 && monotone,
        &format!(
            "recall {hits}/{total} at 1e-3, {tight}/{total} at 1e-4 (eta = {eta}); \
             perturbation recalls {recalls:.3?} monotone; {dt:.0} s"
        ),
    );
}
