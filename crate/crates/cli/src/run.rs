//! Executes an experiment and collects its artifacts in memory.

use nhep_core::smatrix::{poles_at, Humps};
use nhep_core::{
    cluster_report, diagnose, find_humps, locate_2x2, locate_generic, run_sweep, solve, source_term_residual,
    xsec_contour, xsec_contour_pair, xsec_scan, CertifyConfig, Cluster, Complex64, EpCandidate, EpError,
    HamiltonianFamily, LocateConfig, SearchBox, SweepResult, TwoLevelMode, XsecGrid,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{EpMethod, EpSettings, ExperimentConfig, Mode};

/// Minimum prominence of a cross-section maximum counted as a hump.
pub const HUMP_PROMINENCE: f64 = 1e-3;

#[derive(Debug, Error)]
#[error("{context}: {source}")]
pub struct ComputeError {
    pub context: String,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn ctx<E: std::error::Error + Send + Sync + 'static>(context: impl Into<String>) -> impl FnOnce(E) -> ComputeError {
    let context = context.into();
    move |e| ComputeError {
        context,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub no_refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: &str, text: String) -> Self {
        Self {
            name: name.to_string(),
            bytes: text.into_bytes(),
        }
    }

    fn json(name: &str, value: &impl Serialize) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        Self {
            name: name.to_string(),
            bytes,
        }
    }
}

pub fn execute(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<Artifact>, ComputeError> {
    let mut out = Vec::new();
    for mode in &cfg.modes {
        match mode {
            Mode::Sweep => sweep(cfg, opts, &mut out)?,
            Mode::Ep => ep(cfg, &mut out)?,
            Mode::XsecScan => scan(cfg, &mut out)?,
            Mode::XsecContour => contour(cfg, &mut out)?,
            Mode::Diagnose => diagnostics(cfg, &mut out)?,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthBifurcation {
    pub branches: (usize, usize),
    /// Grid point of the largest `|Γ_i − Γ_j|`.
    pub a: f64,
    pub value: f64,
}

/// Largest width difference of every branch pair along a sweep.
pub fn width_bifurcation(res: &SweepResult) -> Vec<WidthBifurcation> {
    let mut out = Vec::new();
    for i in 0..res.dim() {
        for j in i + 1..res.dim() {
            let mut best = WidthBifurcation {
                branches: (i + 1, j + 1),
                a: f64::NAN,
                value: f64::NEG_INFINITY,
            };
            for (p, q) in res.branches[i].iter().zip(&res.branches[j]) {
                let d = (p.width() - q.width()).abs();
                if d > best.value {
                    best.value = d;
                    best.a = p.a;
                }
            }
            out.push(best);
        }
    }
    out
}

fn sweep(cfg: &ExperimentConfig, opts: RunOptions, out: &mut Vec<Artifact>) -> Result<(), ComputeError> {
    let mut sweep_cfg = cfg.sweep.clone();
    if opts.no_refine {
        sweep_cfg.refine_near_ep = false;
    }
    let res = run_sweep(&cfg.family, &sweep_cfg).map_err(ctx("sweep"))?;
    out.push(Artifact::text("sweep.csv", res.to_csv()));
    let mut summary = json!({
        "levels": res.dim(),
        "points": res.grid.len(),
        "sweep": sweep_cfg,
        "ambiguous_intervals": res.ambiguous_intervals,
        "ep_suspects": res.ep_suspects,
        "width_bifurcation": width_bifurcation(&res),
    });
    if cfg.compare_no_coupling {
        let free = run_sweep(&cfg.family.decoupled(), &sweep_cfg).map_err(ctx("sweep without coupling"))?;
        out.push(Artifact::text("sweep_no_coupling.csv", free.to_csv()));
        summary["no_coupling_ep_suspects"] = json!(free.ep_suspects);
    }
    out.push(Artifact::json("sweep.json", &summary));
    Ok(())
}

fn two_level_mode(search: &SearchBox) -> TwoLevelMode {
    match *search {
        SearchBox::Parameter { a } => TwoLevelMode::Parameter { a },
        SearchBox::ParameterAndScale { .. } => TwoLevelMode::ParameterAndScale,
        SearchBox::ComplexCoupling { a, .. } => TwoLevelMode::ComplexCoupling { a },
    }
}

/// Candidates and clusters for the `[ep]` settings of a configuration.
pub fn locate(
    family: &HamiltonianFamily,
    settings: &EpSettings,
) -> Result<(&'static str, Vec<EpCandidate>, Vec<Cluster>), ComputeError> {
    let certify = CertifyConfig {
        ray: settings.ray,
        ..CertifyConfig::default()
    };
    let closed = match settings.method {
        EpMethod::ClosedForm => true,
        EpMethod::Generic => false,
        EpMethod::Auto => family.dim() == 2,
    };
    let result = if closed {
        locate_2x2(family, two_level_mode(&settings.search), &certify)
    } else {
        let lc = LocateConfig {
            grid: settings.grid,
            merge_radius: settings.merge_radius,
            max_seeds: settings.max_seeds,
            certify,
            ..LocateConfig::default()
        };
        locate_generic(family, &settings.search, &lc)
    };
    let candidates = match result {
        Ok(c) => c,
        // no coupling, no exceptional point
        Err(EpError::NoCandidate) => Vec::new(),
        Err(e) => return Err(ctx("ep search")(e)),
    };
    let clusters = cluster_report(&candidates, settings.cluster_radius);
    Ok((if closed { "closed_form" } else { "generic" }, candidates, clusters))
}

fn ep(cfg: &ExperimentConfig, out: &mut Vec<Artifact>) -> Result<(), ComputeError> {
    let settings = cfg.ep.as_ref().expect("validated: ep mode has settings");
    let (method, candidates, clusters) = locate(&cfg.family, settings)?;
    out.push(Artifact::json(
        "ep.json",
        &json!({
            "method": method,
            "settings": settings,
            "candidates": candidates,
            "clusters": clusters,
        }),
    ));
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    a: f64,
    poles: Vec<Complex64>,
    coalesced: Vec<(usize, usize)>,
    hump_energies: Vec<f64>,
    dip_energies: Vec<f64>,
    no_coupling_hump_energies: Option<Vec<f64>>,
}

fn at(energies: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| energies[i]).collect()
}

fn scan(cfg: &ExperimentConfig, out: &mut Vec<Artifact>) -> Result<(), ComputeError> {
    let mut csv = String::from("a,e,sigma\n");
    let mut free_csv = String::from("a,e,sigma\n");
    let mut summaries = Vec::new();
    for &a in &cfg.scan_params {
        let set = poles_at(&cfg.family, a, true).map_err(ctx(format!("scan at a = {a}")))?;
        let energies = cfg.energy_grid.resolve(set.poles()).map_err(ctx("energy grid"))?;
        let sigma = xsec_scan(&set, &energies).map_err(ctx(format!("scan at a = {a}")))?;
        for (e, s) in energies.iter().zip(&sigma) {
            csv.push_str(&format!("{a},{e},{s}\n"));
        }
        let Humps { maxima, minima } = find_humps(&sigma, HUMP_PROMINENCE);
        let mut free_humps = None;
        if cfg.compare_no_coupling {
            let free = poles_at(&cfg.family, a, false).map_err(ctx(format!("scan without coupling at a = {a}")))?;
            let sigma = xsec_scan(&free, &energies).map_err(ctx(format!("scan without coupling at a = {a}")))?;
            for (e, s) in energies.iter().zip(&sigma) {
                free_csv.push_str(&format!("{a},{e},{s}\n"));
            }
            free_humps = Some(at(&energies, &find_humps(&sigma, HUMP_PROMINENCE).maxima));
        }
        summaries.push(ScanSummary {
            a,
            poles: set.poles().to_vec(),
            coalesced: set.coalesced().to_vec(),
            hump_energies: at(&energies, &maxima),
            dip_energies: at(&energies, &minima),
            no_coupling_hump_energies: free_humps,
        });
    }
    out.push(Artifact::text("scan.csv", csv));
    if cfg.compare_no_coupling {
        out.push(Artifact::text("scan_no_coupling.csv", free_csv));
    }
    out.push(Artifact::json(
        "scan.json",
        &json!({ "hump_prominence": HUMP_PROMINENCE, "scans": summaries }),
    ));
    Ok(())
}

fn grid_summary(grid: &XsecGrid) -> serde_json::Value {
    let minima = grid.row_minima();
    let (k, min) = minima
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, &m)| if m < best.1 { (k, m) } else { best });
    json!({
        "params": grid.params.len(),
        "energies": grid.energies.len(),
        "e_min": grid.energies.first(),
        "e_max": grid.energies.last(),
        "min_sigma": { "a": grid.params[k], "value": min },
    })
}

fn contour(cfg: &ExperimentConfig, out: &mut Vec<Artifact>) -> Result<(), ComputeError> {
    let mut summary = json!({});
    if cfg.compare_no_coupling {
        let (with, without) =
            xsec_contour_pair(&cfg.family, &cfg.contour, &cfg.energy_grid).map_err(ctx("contour"))?;
        out.push(Artifact::text("contour.csv", with.to_long_csv()));
        out.push(Artifact::text("contour_matrix.csv", with.to_matrix_text()));
        out.push(Artifact::text("contour_no_coupling.csv", without.to_long_csv()));
        out.push(Artifact::text("contour_no_coupling_matrix.csv", without.to_matrix_text()));
        summary["coupled"] = grid_summary(&with);
        summary["no_coupling"] = grid_summary(&without);
        summary["max_abs_difference"] = json!(with.max_abs_difference(&without));
    } else {
        let with = xsec_contour(&cfg.family, &cfg.contour, &cfg.energy_grid, true).map_err(ctx("contour"))?;
        out.push(Artifact::text("contour.csv", with.to_long_csv()));
        out.push(Artifact::text("contour_matrix.csv", with.to_matrix_text()));
        summary["coupled"] = grid_summary(&with);
    }
    out.push(Artifact::json("contour.json", &summary));
    Ok(())
}

fn diagnostics(cfg: &ExperimentConfig, out: &mut Vec<Artifact>) -> Result<(), ComputeError> {
    let mut points = Vec::new();
    for &a in &cfg.diagnose_params {
        let sys = solve(&cfg.family.evaluate(a)).map_err(ctx(format!("eigensolver at a = {a}")))?;
        let d = diagnose(&sys).map_err(ctx(format!("diagnostics at a = {a}")))?;
        points.push(json!({
            "a": a,
            "eigenvalues": sys.eigenvalues,
            "widths": sys.eigenvalues.iter().map(|e| -2.0 * e.im).collect::<Vec<_>>(),
            "degenerate": sys.degenerate,
            "c_norm_ratio": sys.c_norm_ratio,
            "diagnostics": d,
            "source_terms": source_term_residual(&cfg.family, a, &sys),
        }));
    }
    out.push(Artifact::json("diagnose.json", &points));
    Ok(())
}
