//! One function per subcommand: parse the config sections the experiment
//! understands, run the pipeline, write artifacts and a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use sgraphs_core::config::{
    get_required, parse_f64, parse_u64, parse_usize, reject_unknown, Document, GraphConfig,
    Section,
};
use sgraphs_core::curve::ObservableCurve;
use sgraphs_core::export::{
    fnv1a64, write_curve_csv, write_eigenvalue_dump, write_map_grid_txt, write_phase_map_long_csv,
    write_solver_sidecar, write_spectrum_csv, write_theory_curve_csv, write_transmission_long_csv,
    Manifest,
};
use sgraphs_core::graph::{build_symplectic_pair, random_pair_spec, Graph};
use sgraphs_core::numeric::histogram::{chi_square_gof, Histogram};
use sgraphs_core::rmt::{
    central_fraction, resolve_kramers_pairs, CoupledBlockParams, EnsembleKind, EnsembleSpec,
};
use sgraphs_core::scattering as scat;
use sgraphs_core::secular::{find_spectrum, SolverOptions, Spectrum};
use sgraphs_core::spacing::{
    distribution_distance, integrated_distribution, single_pair_pdf, wigner_gse_pdf,
    SpacingLawKind,
};
use sgraphs_core::stats::{
    self, form_factor, gse_form_factor, gse_number_variance, gse_spectral_rigidity,
    nn_spacing_histogram, number_variance, repulsion_slope, spectral_rigidity,
    two_point_correlation, DoubletMode, RigidityMethod, SourceTag, UnfoldingMap,
};

pub struct Common {
    pub config_text: String,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub eta: f64,
    pub remap_phase: bool,
    start: Instant,
}

impl Common {
    pub fn prepare(
        config: Option<&Path>,
        out: Option<&Path>,
        seed: Option<u64>,
        threads: Option<usize>,
        eta: Option<f64>,
        remap_phase: bool,
    ) -> Result<Common> {
        let config = config.ok_or_else(|| anyhow!("--config <file> is required"))?;
        let out = out.ok_or_else(|| anyhow!("--out <dir> is required"))?.to_path_buf();
        let config_text = fs::read_to_string(config)
            .with_context(|| format!("reading config {}", config.display()))?;
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring thread pool")?;
        }
        Ok(Common {
            config_text,
            out,
            seed,
            eta: eta.unwrap_or(1e-4),
            remap_phase,
            start: Instant::now(),
        })
    }

    fn document(&self) -> Result<Document> {
        Ok(Document::parse(&self.config_text)?)
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new("sgraphs")
            .entry("version", env!("CARGO_PKG_VERSION"))
            .entry("command", command)
            .entry("config_fnv1a64", format!("{:016x}", fnv1a64(self.config_text.as_bytes())))
    }

    fn finish_manifest(&self, m: Manifest) -> Result<()> {
        m.entry("wall_ms", self.start.elapsed().as_millis())
            .write(&self.out.join("manifest.txt"))?;
        Ok(())
    }

    fn seed_from(&self, section: Option<&Section>) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        if let Some(sec) = section {
            if let Some(e) = sec.entries.iter().find(|e| e.key == "seed") {
                return Ok(parse_u64(e)?);
            }
        }
        bail!("stochastic experiment needs a seed (--seed or `seed =` in the config)")
    }
}

fn opt_f64(sec: &Section, key: &str) -> Result<Option<f64>> {
    match sec.entries.iter().find(|e| e.key == key) {
        Some(e) => Ok(Some(parse_f64(e)?)),
        None => Ok(None),
    }
}

fn opt_usize(sec: &Section, key: &str) -> Result<Option<usize>> {
    match sec.entries.iter().find(|e| e.key == key) {
        Some(e) => Ok(Some(parse_usize(e)?)),
        None => Ok(None),
    }
}

fn solver_section(doc: &mut Document) -> Result<(f64, f64, SolverOptions)> {
    let secs = doc.take_sections("solver");
    let sec = secs.first().ok_or_else(|| anyhow!("config needs a [solver] section"))?;
    reject_unknown(sec, &["k_min", "k_max", "grid_step", "refine_tol", "degeneracy_tol"])?;
    let k_min = parse_f64(get_required(sec, "k_min")?)?;
    let k_max = parse_f64(get_required(sec, "k_max")?)?;
    let mut opts = SolverOptions::default();
    opts.grid_step = opt_f64(sec, "grid_step")?;
    if let Some(t) = opt_f64(sec, "refine_tol")? {
        opts.refine_tol = t;
    }
    if let Some(t) = opt_f64(sec, "degeneracy_tol")? {
        opts.degeneracy_tol = t;
    }
    Ok((k_min, k_max, opts))
}

fn graph_from_doc(doc: &mut Document) -> Result<GraphConfig> {
    Ok(GraphConfig::from_document(doc)?)
}

fn solve(g: &Graph, range: (f64, f64), opts: &SolverOptions) -> Result<Spectrum> {
    let spec = find_spectrum(g, range, opts)?;
    Ok(spec)
}

fn weyl_sanity(spec: &Spectrum) -> Result<()> {
    if spec.diagnostics.weyl_warning {
        bail!(
            "sanity check failed: level count {} misses the Weyl estimate {:.1} by more than 10% \
             (scan grid too coarse?)",
            spec.level_count(),
            spec.diagnostics.weyl_expected
        );
    }
    Ok(())
}

pub fn spectrum(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let cfg = graph_from_doc(&mut doc)?;
    let (k_min, k_max, opts) = solver_section(&mut doc)?;
    doc.finish()?;
    let g = cfg.resolved_graph()?;
    let spec = solve(&g, (k_min, k_max), &opts)?;
    write_spectrum_csv(&c.out.join("spectrum.csv"), &spec)?;
    write_solver_sidecar(&c.out.join("solver.txt"), &spec)?;
    weyl_sanity(&spec)?;
    println!(
        "spectrum: {} levels ({} entries) in [{k_min}, {k_max}]",
        spec.level_count(),
        spec.values.len()
    );
    c.finish_manifest(
        c.manifest("spectrum")
            .entry("k_min", k_min)
            .entry("k_max", k_max)
            .entry("levels", spec.level_count()),
    )
}

pub fn kramers(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let cfg = graph_from_doc(&mut doc)?;
    let (k_min, k_max, opts) = solver_section(&mut doc)?;
    doc.finish()?;
    if cfg.pair.is_none() {
        bail!("kramers needs a [pair] section (a conjugate pair graph)");
    }
    let g = cfg.resolved_graph()?;
    let spec = solve(&g, (k_min, k_max), &opts)?;
    write_spectrum_csv(&c.out.join("spectrum.csv"), &spec)?;
    write_solver_sidecar(&c.out.join("solver.txt"), &spec)?;
    weyl_sanity(&spec)?;

    let singlets = spec.multiplicities.iter().filter(|&&m| m != 2).count();
    let mean_spacing = 2.0 * spec.mean_distinct_spacing() / 2.0;
    let max_split = spec.doublet_splits.iter().cloned().fold(0.0, f64::max);
    let ratio = max_split / mean_spacing;
    let report = format!(
        "doublets = {}\nsinglets = {singlets}\nmax doublet split / mean spacing = {ratio:e}\n",
        spec.values.len()
    );
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    if singlets > 0 {
        bail!("{singlets} levels are not doubly degenerate");
    }
    c.finish_manifest(
        c.manifest("kramers")
            .entry("doublets", spec.values.len())
            .entry("max_split_over_spacing", ratio),
    )
}

pub fn transmission_map(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let cfg = graph_from_doc(&mut doc)?;
    let secs = doc.take_sections("map");
    let sec = secs.first().ok_or_else(|| anyhow!("config needs a [map] section"))?;
    reject_unknown(
        sec,
        &["delta_l_max", "delta_l_steps", "k_min", "k_max", "k_steps", "phi_steps"],
    )?;
    let dl_max = parse_f64(get_required(sec, "delta_l_max")?)?;
    let dl_steps = parse_usize(get_required(sec, "delta_l_steps")?)?;
    let k_min = parse_f64(get_required(sec, "k_min")?)?;
    let k_max = parse_f64(get_required(sec, "k_max")?)?;
    let k_steps = parse_usize(get_required(sec, "k_steps")?)?;
    let phi_steps = opt_usize(sec, "phi_steps")?.unwrap_or(120);
    doc.finish()?;

    let pair = cfg
        .pair_spec()
        .ok_or_else(|| anyhow!("transmission map needs a [pair] section"))?;
    if cfg.ports.len() != 2 {
        bail!("transmission map needs [ports] with exactly two vertices");
    }
    let dl_grid: Vec<f64> = (0..dl_steps).map(|i| dl_max * i as f64 / (dl_steps - 1) as f64).collect();
    let k_grid: Vec<f64> =
        (0..k_steps).map(|i| k_min + (k_max - k_min) * i as f64 / (k_steps - 1) as f64).collect();
    let map = scat::transmission_map(&pair, &cfg.ports, &dl_grid, &k_grid, c.eta)?;
    write_transmission_long_csv(&c.out.join("transmission_long.csv"), &map)?;
    write_map_grid_txt(
        &c.out.join("transmission_grid.txt"),
        "delta_l",
        &map.delta_l,
        "k",
        &map.k,
        &|r, col| map.at(r, col),
    )?;
    let mut manifest = c
        .manifest("transmission-map")
        .entry("eta", c.eta)
        .entry("delta_l_max", dl_max)
        .entry("cells", dl_steps * k_steps);
    if c.remap_phase {
        let phi_max = k_max * dl_max;
        let phi_grid: Vec<f64> =
            (0..phi_steps).map(|i| phi_max * i as f64 / (phi_steps - 1) as f64).collect();
        let remapped = scat::remap_to_phase(&map, &phi_grid);
        write_phase_map_long_csv(&c.out.join("phase_map_long.csv"), &remapped)?;
        write_map_grid_txt(
            &c.out.join("phase_map_grid.txt"),
            "delta_phi",
            &remapped.delta_phi,
            "k",
            &remapped.k,
            &|r, col| remapped.at(r, col),
        )?;
        manifest = manifest.entry("remap_phi_max", phi_max);
    }
    println!("transmission map: {} x {} cells", dl_steps, k_steps);
    c.finish_manifest(manifest)
}

pub fn phase_extraction(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let cfg = graph_from_doc(&mut doc)?;
    let secs = doc.take_sections("phase");
    let sec = secs.first().ok_or_else(|| anyhow!("config needs a [phase] section"))?;
    reject_unknown(
        sec,
        &[
            "k_min",
            "k_max",
            "coupling",
            "discriminator",
            "samples_per_width",
            "perturbation",
            "seed",
        ],
    )?;
    let k_min = parse_f64(get_required(sec, "k_min")?)?;
    let k_max = parse_f64(get_required(sec, "k_max")?)?;
    let coupling = opt_f64(sec, "coupling")?.unwrap_or(0.01);
    let discriminator = opt_f64(sec, "discriminator")?.unwrap_or(1e-4);
    let per_width = opt_f64(sec, "samples_per_width")?.unwrap_or(4.0);
    let perturbation = opt_f64(sec, "perturbation")?.unwrap_or(0.0);
    let seed = if perturbation > 0.0 { c.seed_from(Some(sec))? } else { 0 };
    doc.finish()?;

    let clean = cfg.resolved_graph()?;
    if cfg.ports.len() != 1 {
        bail!("phase extraction needs [ports] with exactly one vertex");
    }
    let port = cfg.ports[0];
    let measured = if perturbation > 0.0 {
        clean.with_length_perturbation(perturbation, seed)
    } else {
        clean.clone()
    };

    let step = c.eta / per_width;
    let n = ((k_max - k_min) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| k_min + step * i as f64).collect();
    let samples = scat::reflection_phase_with_coupling(&measured, port, coupling, &grid, c.eta)?;
    let extracted = scat::extract_spectrum_from_phase(&samples, discriminator)?;
    write_spectrum_csv(&c.out.join("extracted.csv"), &extracted)?;

    let margin = 2.0;
    let reference = solve(&clean, (k_min - margin, k_max + margin), &SolverOptions::default())?;
    write_spectrum_csv(&c.out.join("reference.csv"), &reference)?;
    let interior: Vec<f64> = reference
        .values
        .iter()
        .cloned()
        .filter(|v| (k_min..k_max).contains(v))
        .collect();
    let mut hits = 0usize;
    let mut tight = 0usize;
    for t in &interior {
        let best = extracted
            .values
            .iter()
            .map(|e| (e - t).abs())
            .fold(f64::INFINITY, f64::min);
        if best < 1e-3 {
            hits += 1;
        }
        if best < 1e-4 {
            tight += 1;
        }
    }
    let recall = hits as f64 / interior.len().max(1) as f64;
    let report = format!(
        "reference_levels = {}\nextracted_peaks = {}\nrecall_at_1e-3 = {recall:.4}\nmatched_at_1e-4 = {:.4}\nperturbation = {perturbation}\n",
        interior.len(),
        extracted.values.len(),
        tight as f64 / interior.len().max(1) as f64,
    );
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    c.finish_manifest(
        c.manifest("phase-extraction")
            .entry("eta", c.eta)
            .entry("coupling", coupling)
            .entry("discriminator", discriminator)
            .entry("recall", recall),
    )
}

struct GraphEnsembleParams {
    graphs: usize,
    base_vertices: usize,
    pairs: usize,
    length_lo: f64,
    length_hi: f64,
    k_min: f64,
    k_max: f64,
    seed: u64,
}

fn graph_ensemble_section(c: &Common, doc: &mut Document) -> Result<GraphEnsembleParams> {
    let secs = doc.take_sections("ensemble_graphs");
    let sec = secs
        .first()
        .ok_or_else(|| anyhow!("config needs an [ensemble_graphs] section"))?;
    reject_unknown(
        sec,
        &["graphs", "base_vertices", "pairs", "length_lo", "length_hi", "k_min", "k_max", "seed"],
    )?;
    Ok(GraphEnsembleParams {
        graphs: opt_usize(sec, "graphs")?.unwrap_or(9),
        base_vertices: opt_usize(sec, "base_vertices")?.unwrap_or(12),
        pairs: opt_usize(sec, "pairs")?.unwrap_or(2),
        length_lo: opt_f64(sec, "length_lo")?.unwrap_or(0.85),
        length_hi: opt_f64(sec, "length_hi")?.unwrap_or(1.15),
        k_min: opt_f64(sec, "k_min")?.unwrap_or(60.0),
        k_max: opt_f64(sec, "k_max")?.unwrap_or(1460.0),
        seed: c.seed_from(Some(sec))?,
    })
}

/// Pooled doublet spacings of a seeded pair-graph ensemble at the given
/// twist, unfolded per graph.
fn ensemble_spacings(
    p: &GraphEnsembleParams,
    delta_phi: f64,
    mode: DoubletMode,
) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for i in 0..p.graphs {
        let spec = random_pair_spec(
            p.base_vertices,
            (p.length_lo, p.length_hi),
            p.pairs,
            delta_phi,
            p.seed.wrapping_add(i as u64),
        )?;
        let g = build_symplectic_pair(&spec)?.normalize_to_unit_density()?;
        let sp = solve(&g, (p.k_min, p.k_max), &SolverOptions::default())?;
        weyl_sanity(&sp)?;
        let u = stats::unfold_graph_spectrum(&sp, g.total_length(), mode)?;
        let mean = u.mean_spacing();
        if (mean - 1.0).abs() > 0.02 {
            bail!("sanity check failed: unfolded mean spacing {mean} is off by more than 2%");
        }
        all.extend(u.spacings());
    }
    Ok(all)
}

fn write_law_tables(out: &Path, s_max: f64, points: usize) -> Result<()> {
    let grid: Vec<f64> = (0..points).map(|i| s_max * i as f64 / (points - 1) as f64).collect();
    for law in [
        SpacingLawKind::WignerGoe,
        SpacingLawKind::WignerGue,
        SpacingLawKind::WignerGse,
        SpacingLawKind::SinglePairBonds,
    ] {
        let pdf: Vec<f64> = grid.iter().map(|&s| law.pdf(s)).collect();
        let cdf = integrated_distribution(|s| law.pdf(s), &grid);
        write_theory_curve_csv(&out.join(format!("{}.csv", law.label())), &grid, &pdf, &cdf)?;
    }
    Ok(())
}

pub fn spacing_gse(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let p = graph_ensemble_section(c, &mut doc)?;
    doc.finish()?;
    let spacings = ensemble_spacings(&p, std::f64::consts::PI, DoubletMode::ResolvedPairs)?;
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;

    let hist_curve = nn_spacing_histogram(&spacings, 35, 3.5)?;
    write_curve_csv(&c.out.join("spacing_hist.csv"), &hist_curve, "s")?;
    write_law_tables(&c.out, 3.5, 351)?;

    let hist = Histogram::from_samples(&spacings, 0.0, 3.5, 35);
    let gof_gse = chi_square_gof(&hist, wigner_gse_pdf, 5.0);
    let gof_sp = chi_square_gof(&hist, single_pair_pdf, 5.0);
    let slope = repulsion_slope(&spacings, (0.05 * mean, 0.3 * mean))?;
    let report = format!(
        "doublet_spacings = {}\nmean = {mean:.6}\nchi2_vs_gse = {:.2} (dof {}, p {:.3e})\nchi2_vs_single_pair = {:.2} (dof {}, p {:.3e})\nrepulsion_slope = {:.3} +- {:.3}\n",
        spacings.len(),
        gof_gse.statistic,
        gof_gse.dof,
        gof_gse.p_value,
        gof_sp.statistic,
        gof_sp.dof,
        gof_sp.p_value,
        slope.0,
        slope.1,
    );
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    c.finish_manifest(
        c.manifest("spacing-gse")
            .entry("seed", p.seed)
            .entry("graphs", p.graphs)
            .entry("doublet_spacings", spacings.len())
            .entry("chi2_gse_p", gof_gse.p_value)
            .entry("slope", slope.0),
    )
}

pub fn coupled_block_sim(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let secs = doc.take_sections("ensemble");
    let sec = secs.first().ok_or_else(|| anyhow!("config needs an [ensemble] section"))?;
    reject_unknown(
        sec,
        &[
            "sub_dim",
            "realizations",
            "coupling_scale",
            "central_fraction",
            "fit_fraction",
            "seed",
            "dump_eigenvalues",
        ],
    )?;
    let sub_dim = opt_usize(sec, "sub_dim")?.unwrap_or(100);
    let realizations = opt_usize(sec, "realizations")?.unwrap_or(2000);
    let coupling_scale = opt_f64(sec, "coupling_scale")?.unwrap_or(1.0);
    let central = opt_f64(sec, "central_fraction")?.unwrap_or(0.1);
    let fit_fraction = opt_f64(sec, "fit_fraction")?.unwrap_or(0.7);
    let dump = sec.entries.iter().any(|e| e.key == "dump_eigenvalues" && e.value == "true");
    let seed = c.seed_from(Some(sec))?;
    doc.finish()?;

    let spec = EnsembleSpec {
        kind: EnsembleKind::CoupledBlock,
        dim: 2 * sub_dim,
        realizations,
        seed,
        coupled: Some(CoupledBlockParams { sub_dim, coupling_scale }),
    };
    let eigs = spec.all_eigenvalues()?;
    if dump {
        write_eigenvalue_dump(&c.out.join("eigenvalues.csv"), &eigs)?;
    }
    let distinct: Vec<Vec<f64>> = eigs
        .iter()
        .map(|e| resolve_kramers_pairs(e, 1e-9))
        .collect::<std::result::Result<_, _>>()?;
    let map = UnfoldingMap::fit(&distinct, 5, fit_fraction)?;
    let mut spacings = Vec::new();
    for d in &distinct {
        let u = map.apply(d, SourceTag::Rmt, DoubletMode::ResolvedPairs);
        let kept = central_fraction(&u.values, (central / fit_fraction).min(1.0));
        spacings.extend(kept.windows(2).map(|w| w[1] - w[0]));
    }
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    if (mean - 1.0).abs() > 0.02 {
        bail!("sanity check failed: central spacing mean {mean} is off by more than 2%");
    }

    let hist_curve = nn_spacing_histogram(&spacings, 35, 3.5)?;
    write_curve_csv(&c.out.join("spacing_hist.csv"), &hist_curve, "s")?;
    write_law_tables(&c.out, 3.5, 351)?;
    let hist = Histogram::from_samples(&spacings, 0.0, 3.5, 35);
    let gof = chi_square_gof(&hist, single_pair_pdf, 5.0);
    let kolmogorov = distribution_distance(single_pair_pdf, wigner_gse_pdf, 6.0, 600);
    let report = format!(
        "doublet_spacings = {}\nmean = {mean:.6}\nchi2_vs_single_pair = {:.2} (dof {}, p {:.3e})\nkolmogorov_single_pair_vs_gse = {kolmogorov:.4}\n",
        spacings.len(),
        gof.statistic,
        gof.dof,
        gof.p_value,
    );
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    c.finish_manifest(
        c.manifest("coupled-block-sim")
            .entry("seed", seed)
            .entry("sub_dim", sub_dim)
            .entry("realizations", realizations)
            .entry("chi2_p", gof.p_value),
    )
}

pub fn stats_suite(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let secs = doc.take_sections("ensemble");
    let sec = secs.first().ok_or_else(|| anyhow!("config needs an [ensemble] section"))?;
    reject_unknown(sec, &["kind", "dim", "realizations", "fit_fraction", "seed"])?;
    let kind = match sec.entries.iter().find(|e| e.key == "kind").map(|e| e.value.as_str()) {
        Some("goe") => EnsembleKind::Goe,
        Some("gue") => EnsembleKind::Gue,
        Some("gse") | None => EnsembleKind::Gse,
        Some(other) => bail!("unknown ensemble kind `{other}`"),
    };
    let dim = opt_usize(sec, "dim")?.unwrap_or(400);
    let realizations = opt_usize(sec, "realizations")?.unwrap_or(500);
    let fit_fraction = opt_f64(sec, "fit_fraction")?.unwrap_or(0.8);
    let seed = c.seed_from(Some(sec))?;
    doc.finish()?;

    let spec = EnsembleSpec { kind, dim, realizations, seed, coupled: None };
    let eigs = spec.all_eigenvalues()?;
    let levels: Vec<Vec<f64>> = if kind == EnsembleKind::Gse {
        eigs.iter()
            .map(|e| resolve_kramers_pairs(e, 1e-9))
            .collect::<std::result::Result<_, _>>()?
    } else {
        eigs
    };
    let map = UnfoldingMap::fit(&levels, 5, fit_fraction)?;
    let unfolded: Vec<Vec<f64>> = levels
        .iter()
        .map(|d| map.apply(d, SourceTag::Rmt, DoubletMode::ResolvedPairs).values)
        .collect();
    let (mut span, mut gaps) = (0.0, 0usize);
    for u in &unfolded {
        span += u[u.len() - 1] - u[0];
        gaps += u.len() - 1;
    }
    let pooled_mean = span / gaps as f64;
    if (pooled_mean - 1.0).abs() > 0.02 {
        bail!("sanity check failed: unfolded mean spacing {pooled_mean} is off by more than 2%");
    }
    let refs: Vec<&[f64]> = unfolded.iter().map(|v| v.as_slice()).collect();

    let spacings: Vec<f64> = unfolded
        .iter()
        .flat_map(|u| u.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
        .collect();
    write_curve_csv(&c.out.join("spacing_hist.csv"), &nn_spacing_histogram(&spacings, 35, 3.5)?, "s")?;

    let r2 = two_point_correlation(&refs, 4.0, 40)?;
    write_curve_csv(&c.out.join("r2.csv"), &r2, "L")?;

    let tau: Vec<f64> = (1..=150).map(|i| 0.02 * i as f64).collect();
    let k_curve = form_factor(&refs, &tau, true)?;
    write_curve_csv(&c.out.join("form_factor.csv"), &k_curve, "tau")?;
    let k_ref: Vec<f64> = tau.iter().map(|&t| gse_form_factor(t)).collect();
    let k_cdf = vec![0.0; tau.len()];
    write_theory_curve_csv(&c.out.join("form_factor_gse_ref.csv"), &tau, &k_ref, &k_cdf)?;

    let l_grid: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let s2 = number_variance(&refs, &l_grid)?;
    write_curve_csv(&c.out.join("sigma2.csv"), &s2, "L")?;
    let d3 = spectral_rigidity(&refs, &l_grid, RigidityMethod::DirectFit)?;
    write_curve_csv(&c.out.join("delta3.csv"), &d3, "L")?;
    let d3_transform = spectral_rigidity(&refs, &l_grid, RigidityMethod::FromSigma2)?;
    write_curve_csv(&c.out.join("delta3_from_sigma2.csv"), &d3_transform, "L")?;
    let s2_ref: Vec<f64> = l_grid.iter().map(|&l| gse_number_variance(l)).collect();
    let d3_ref: Vec<f64> = l_grid.iter().map(|&l| gse_spectral_rigidity(l)).collect();
    write_theory_curve_csv(&c.out.join("sigma2_gse_ref.csv"), &l_grid, &s2_ref, &vec![0.0; 8])?;
    write_theory_curve_csv(&c.out.join("delta3_gse_ref.csv"), &l_grid, &d3_ref, &vec![0.0; 8])?;

    let max_rel = l_grid
        .iter()
        .enumerate()
        .map(|(i, _)| (d3.value[i] - d3_transform.value[i]).abs() / d3.value[i])
        .fold(0.0, f64::max);
    let report = format!(
        "realizations = {realizations}\nlevels_per_realization = {}\nrigidity_method_max_rel_diff = {max_rel:.5}\n",
        levels[0].len()
    );
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    c.finish_manifest(
        c.manifest("stats-suite")
            .entry("seed", seed)
            .entry("kind", format!("{kind:?}"))
            .entry("dim", dim)
            .entry("realizations", realizations),
    )
}

pub fn gse_goe_sweep(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let p = graph_ensemble_section(c, &mut doc)?;
    let secs = doc.take_sections("sweep");
    let (phis, k_max_pi): (Vec<f64>, f64) = match secs.first() {
        Some(sec) => {
            reject_unknown(sec, &["delta_phi_over_pi", "k_max_at_pi"])?;
            let list = match sec.entries.iter().find(|e| e.key == "delta_phi_over_pi") {
                Some(e) => e
                    .value
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| anyhow!("bad delta_phi `{t}`")))
                    .collect::<Result<Vec<f64>>>()?,
                None => vec![1.0, 1.5, 2.0],
            };
            (list, opt_f64(sec, "k_max_at_pi")?.unwrap_or(p.k_max))
        }
        None => (vec![1.0, 1.5, 2.0], p.k_max),
    };
    doc.finish()?;

    let mut report = String::new();
    let mut manifest = c.manifest("gse-goe-sweep").entry("seed", p.seed);
    for &phi_over_pi in &phis {
        let delta_phi = phi_over_pi * std::f64::consts::PI;
        let at_pi = (phi_over_pi - 1.0).abs() < 1e-9;
        // Kramers doublets exist only at the symplectic point; elsewhere all
        // levels are singlets and both modes coincide
        let mode = if at_pi { DoubletMode::ResolvedPairs } else { DoubletMode::IndividualLevels };
        let mut params = GraphEnsembleParams { ..copy_params(&p) };
        if at_pi {
            // doublet density is half the level density; stretch the window
            params.k_max = k_max_pi;
        }
        let spacings = ensemble_spacings(&params, delta_phi, mode)?;
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let tag = format!("{:.2}pi", phi_over_pi).replace('.', "_");
        let hist = nn_spacing_histogram(&spacings, 35, 3.5)?;
        write_curve_csv(&c.out.join(format!("spacing_hist_{tag}.csv")), &hist, "s")?;
        let mut sorted = spacings.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let grid: Vec<f64> = (1..=300).map(|i| 3.0 * i as f64 / 300.0).collect();
        let ecdf = sgraphs_core::spacing::empirical_cdf(&sorted, &grid);
        let counts: Vec<u64> = vec![sorted.len() as u64; grid.len()];
        let curve = ObservableCurve::new(grid.clone(), ecdf, counts, vec![0.0; grid.len()]);
        write_curve_csv(&c.out.join(format!("integrated_{tag}.csv")), &curve, "s")?;
        let slope = repulsion_slope(&spacings, (0.05 * mean, 0.3 * mean))?;
        report.push_str(&format!(
            "delta_phi = {phi_over_pi} pi: spacings = {}, slope = {:.3} +- {:.3}\n",
            spacings.len(),
            slope.0,
            slope.1
        ));
        manifest = manifest.entry(&format!("slope_{tag}"), slope.0);
    }
    fs::write(c.out.join("report.txt"), &report)?;
    print!("{report}");
    c.finish_manifest(manifest)
}

fn copy_params(p: &GraphEnsembleParams) -> GraphEnsembleParams {
    GraphEnsembleParams {
        graphs: p.graphs,
        base_vertices: p.base_vertices,
        pairs: p.pairs,
        length_lo: p.length_lo,
        length_hi: p.length_hi,
        k_min: p.k_min,
        k_max: p.k_max,
        seed: p.seed,
    }
}

pub fn theory_curves(c: &Common) -> Result<()> {
    let mut doc = c.document()?;
    let secs = doc.take_sections("curves");
    let (s_max, points) = match secs.first() {
        Some(sec) => {
            reject_unknown(sec, &["s_max", "points"])?;
            (
                opt_f64(sec, "s_max")?.unwrap_or(4.0),
                opt_usize(sec, "points")?.unwrap_or(401),
            )
        }
        None => (4.0, 401),
    };
    doc.finish()?;
    write_law_tables(&c.out, s_max, points)?;
    println!("theory curves: 4 laws, {points} points to s = {s_max}");
    c.finish_manifest(c.manifest("theory-curves").entry("s_max", s_max).entry("points", points))
}
