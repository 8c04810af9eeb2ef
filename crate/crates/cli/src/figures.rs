//! Plot data for the standard figure set, extracted from earlier runs
//! recorded in an output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{usage, CliError};
use crate::manifest::{self, RunManifest, RunStatus};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    Trajectory { epsilon: f64, delta_eps: f64 },
    EntropySweep,
    Bifurcation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// k, F
    Fidelity,
    /// k^2, ln F
    LogFidelitySquared,
    /// k, ln F
    LogFidelity,
    /// k, F_N, F
    FidelityNWithF,
    /// k, F_N plus a short-time inset file
    FidelityNInset,
    /// k, <n>
    MeanPhotons,
    /// epsilon, E
    Entropy,
    /// epsilon, |alpha|^2
    Scatter,
}

struct Figure {
    id: &'static str,
    source: Source,
    layout: Layout,
    title: &'static str,
    shape: &'static str,
}

const fn traj(epsilon: f64, delta_eps: f64) -> Source {
    Source::Trajectory { epsilon, delta_eps }
}

const FIGURES: &[Figure] = &[
    Figure {
        id: "fig1",
        source: traj(0.1, 0.001),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.1, d_eps=0.001",
        shape: "regular oscillations of a single frequency between 1 and near 0",
    },
    Figure {
        id: "fig2a",
        source: traj(0.1, 0.001),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.1, d_eps=0.001",
        shape: "periodic recurrences to F=1 every few thousand kicks",
    },
    Figure {
        id: "fig2b",
        source: traj(0.1, 0.005),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.1, d_eps=0.005",
        shape: "recurrences roughly five times more frequent than in fig2a",
    },
    Figure {
        id: "fig2c",
        source: traj(0.1, 0.08),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.1, d_eps=0.08",
        shape: "rapid recurrences every few tens of kicks",
    },
    Figure {
        id: "fig3",
        source: traj(0.1, 0.05),
        layout: Layout::LogFidelitySquared,
        title: "ln F versus k^2, eps=0.1, d_eps=0.05",
        shape: "straight line during the initial decay (Gaussian decay law)",
    },
    Figure {
        id: "fig4a",
        source: traj(0.385, 0.001),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.385, d_eps=0.001",
        shape: "oscillations with a slow modulation (quantum beats)",
    },
    Figure {
        id: "fig4b",
        source: traj(0.505, 0.001),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.505, d_eps=0.001",
        shape: "initial decay followed by irregular fluctuations",
    },
    Figure {
        id: "fig5a",
        source: traj(0.7, 0.005),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.7, d_eps=0.005 (plot with a logarithmic y axis)",
        shape: "slow initial decay",
    },
    Figure {
        id: "fig5b",
        source: traj(0.7, 0.01),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.7, d_eps=0.01 (plot with a logarithmic y axis)",
        shape: "decay faster than in fig5a",
    },
    Figure {
        id: "fig5c",
        source: traj(0.7, 0.05),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.7, d_eps=0.05 (plot with a logarithmic y axis)",
        shape: "roughly exponential decay to a fluctuating floor",
    },
    Figure {
        id: "fig5d",
        source: traj(0.7, 0.08),
        layout: Layout::Fidelity,
        title: "Fidelity F versus kicks, eps=0.7, d_eps=0.08 (plot with a logarithmic y axis)",
        shape: "roughly exponential decay, faster than in fig5c",
    },
    Figure {
        id: "fig6a",
        source: traj(0.7, 0.001),
        layout: Layout::LogFidelitySquared,
        title: "ln F versus k^2, eps=0.7, d_eps=0.001",
        shape: "approximately linear during the initial decay",
    },
    Figure {
        id: "fig6b",
        source: traj(0.7, 0.05),
        layout: Layout::LogFidelity,
        title: "ln F versus k, eps=0.7, d_eps=0.05",
        shape: "approximately linear initial decay (exponential law)",
    },
    Figure {
        id: "fig6c",
        source: traj(0.7, 0.08),
        layout: Layout::LogFidelity,
        title: "ln F versus k, eps=0.7, d_eps=0.08",
        shape: "approximately linear initial decay, steeper than fig6b",
    },
    Figure {
        id: "fig7a",
        source: traj(0.1, 0.001),
        layout: Layout::FidelityNWithF,
        title: "F_N and F versus kicks, eps=0.1, d_eps=0.001",
        shape: "fast regular revivals of F_N modulated at the frequency of the F recurrences",
    },
    Figure {
        id: "fig7b",
        source: traj(0.505, 0.001),
        layout: Layout::FidelityNInset,
        title: "F_N versus kicks, eps=0.505, d_eps=0.001 (inset: first 200 kicks)",
        shape: "irregular changes; small rapid oscillations visible on short time scales",
    },
    Figure {
        id: "fig7c",
        source: traj(0.505, 0.001),
        layout: Layout::MeanPhotons,
        title: "Mean photon number versus kicks, eps=0.505, d_eps=0.001",
        shape: "irregular growth to many photons",
    },
    Figure {
        id: "fig8",
        source: Source::EntropySweep,
        layout: Layout::Entropy,
        title: "Spectral entropy E of the fidelity versus eps",
        shape: "smooth at small eps, rapid rise near the chaos border, irregular and elevated for eps > 0.47",
    },
    Figure {
        id: "bifurcation",
        source: Source::Bifurcation,
        layout: Layout::Scatter,
        title: "Classical attractor energy |alpha|^2 versus eps",
        shape: "regular bands with a narrow chaotic sliver near eps=0.35 and a chaotic sea beyond eps=0.47",
    },
];

const INSET_KICKS: f64 = 200.0;

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

fn needed(source: Source) -> String {
    match source {
        Source::Trajectory { epsilon, delta_eps } => format!(
            "a trajectory run with epsilon={epsilon} and delta-eps={delta_eps} \
             (e.g. --mode trajectory --epsilon {epsilon} --delta-eps {delta_eps})"
        ),
        Source::EntropySweep => {
            "an entropy_sweep run (e.g. --mode entropy_sweep --sweep epsilon 0.01 0.8 80)".into()
        }
        Source::Bifurcation => "a bifurcation run (e.g. --mode bifurcation)".into(),
    }
}

/// The data file satisfying `source`; the longest matching trajectory wins.
fn locate(manifests: &[RunManifest], source: Source) -> Option<String> {
    let usable = |status: RunStatus| status != RunStatus::Failed;
    match source {
        Source::Trajectory { epsilon, delta_eps } => manifests
            .iter()
            .filter(|m| m.mode == "trajectory")
            .flat_map(|m| &m.runs)
            .filter(|r| {
                usable(r.status)
                    && close(r.system.epsilon, epsilon)
                    && close(r.system.delta_eps, delta_eps)
            })
            .filter_map(|r| Some((r.system.kicks, r.file.clone()?)))
            .fold(None, |best: Option<(usize, String)>, (k, f)| match best {
                Some((bk, _)) if bk >= k => best,
                _ => Some((k, f)),
            })
            .map(|(_, f)| f),
        Source::EntropySweep | Source::Bifurcation => {
            let mode = if source == Source::EntropySweep {
                "entropy_sweep"
            } else {
                "bifurcation"
            };
            manifests
                .iter()
                .rev()
                .filter(|m| m.mode == mode)
                .find_map(|m| {
                    m.runs
                        .iter()
                        .find(|r| usable(r.status))
                        .and_then(|r| r.file.clone())
                })
        }
    }
}

fn columns(t: &Table, layout: Layout) -> Result<(Vec<&'static str>, Vec<Vec<f64>>), CliError> {
    let keep_positive = |k: Vec<f64>, f: Vec<f64>| -> Vec<(f64, f64)> {
        k.into_iter().zip(f).filter(|(_, f)| *f > 0.0).collect()
    };
    Ok(match layout {
        Layout::Fidelity => (vec!["k", "F"], vec![t.column("k")?, t.column("F")?]),
        Layout::LogFidelitySquared | Layout::LogFidelity => {
            let pairs = keep_positive(t.column("k")?, t.column("F")?);
            let x = pairs
                .iter()
                .map(|(k, _)| {
                    if layout == Layout::LogFidelity {
                        *k
                    } else {
                        k * k
                    }
                })
                .collect();
            let y = pairs.iter().map(|(_, f)| f.ln()).collect();
            let name = if layout == Layout::LogFidelity {
                "k"
            } else {
                "k^2"
            };
            (vec![name, "lnF"], vec![x, y])
        }
        Layout::FidelityNWithF => (
            vec!["k", "F_N", "F"],
            vec![t.column("k")?, t.column("F_N")?, t.column("F")?],
        ),
        Layout::FidelityNInset => (vec!["k", "F_N"], vec![t.column("k")?, t.column("F_N")?]),
        Layout::MeanPhotons => (
            vec!["k", "mean_n"],
            vec![t.column("k")?, t.column("mean_n")?],
        ),
        Layout::Entropy => (
            vec!["epsilon", "E"],
            vec![t.column("epsilon")?, t.column("entropy")?],
        ),
        Layout::Scatter => (
            vec!["epsilon", "energy"],
            vec![t.column("epsilon")?, t.column("energy")?],
        ),
    })
}

fn render(names: &[&str], cols: &[Vec<f64>], limit: Option<f64>) -> String {
    let mut s = format!("# {}\n", names.join(" "));
    for i in 0..cols[0].len() {
        if limit.is_some_and(|l| cols[0][i] > l) {
            break;
        }
        let row: Vec<String> = cols.iter().map(|c| format!("{:.16e}", c[i])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Writes `figures/<id>.dat` (plus any extra panel files) and
/// `figures/<id>.txt` under `out`; returns the written paths.
pub fn emit_plot_data(out: &Path, id: &str) -> Result<Vec<PathBuf>, CliError> {
    let fig = FIGURES.iter().find(|f| f.id == id).ok_or_else(|| {
        usage(format!(
            "unknown figure id '{id}' (valid: {})",
            figure_ids().join(", ")
        ))
    })?;
    let manifests = if out.is_dir() {
        manifest::load_all(out)?
    } else {
        Vec::new()
    };
    let file = locate(&manifests, fig.source).ok_or_else(|| {
        usage(format!(
            "{id} needs {} in {}",
            needed(fig.source),
            out.display()
        ))
    })?;
    let table = Table::read(&out.join(&file))?;
    let (names, cols) = columns(&table, fig.layout)?;
    let dir = out.join("figures");
    let mut written = Vec::new();
    let dat = dir.join(format!("{id}.dat"));
    manifest::write_atomic(&dat, render(&names, &cols, None).as_bytes())?;
    written.push(dat);
    if fig.layout == Layout::FidelityNInset {
        let inset = dir.join(format!("{id}_inset.dat"));
        manifest::write_atomic(&inset, render(&names, &cols, Some(INSET_KICKS)).as_bytes())?;
        written.push(inset);
    }
    let mut desc = format!(
        "{}\n\nsource: {file}\ncolumns: {}\n",
        fig.title,
        names.join(", ")
    );
    let _ = writeln!(desc, "expected shape: {}", fig.shape);
    let txt = dir.join(format!("{id}.txt"));
    manifest::write_atomic(&txt, desc.as_bytes())?;
    written.push(txt);
    Ok(written)
}
