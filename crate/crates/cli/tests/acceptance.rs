//! Runs every config in `configs/acceptance`, then prints one pass/fail line per criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ucont_cli::{parse_config, run, ExperimentReport, Status};

struct Outcome {
    report: ExperimentReport,
    csv: BTreeMap<String, Vec<u8>>,
    seconds: f64,
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance")
}

fn run_all(out: &Path) -> Runs {
    let mut files: Vec<PathBuf> = std::fs::read_dir(config_dir())
        .expect("acceptance configs")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let mut all = BTreeMap::new();
    for path in files {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        let outcome = parse_config(&text).map_err(|e| e.join("; ")).and_then(|mut cfg| {
            cfg.output_dir = out.join(&name);
            let start = Instant::now();
            let report = run(&cfg).map_err(|e| format!("{e:#}"))?;
            let seconds = start.elapsed().as_secs_f64();
            let mut csv = BTreeMap::new();
            for a in report.artifacts.iter().filter(|a| a.ends_with(".csv")) {
                csv.insert(a.clone(), std::fs::read(cfg.output_dir.join(a)).map_err(|e| e.to_string())?);
            }
            Ok(Outcome { report, csv, seconds })
        });
        all.insert(name, outcome);
    }
    all
}

struct Verdict {
    ok: bool,
    detail: String,
}

type Runs = BTreeMap<String, Result<Outcome, String>>;

/// Every `(configs, check prefixes)` group ran, each prefix matched a check in each config,
/// all matched checks passed, and the configs together stayed within `limit` seconds.
fn criterion(runs: &Runs, groups: &[(&[&str], &[&str])], limit: f64) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut timed: BTreeMap<&str, f64> = BTreeMap::new();
    for (names, prefixes) in groups {
        for name in names.iter() {
            let o = match runs.get(*name) {
                Some(Ok(o)) => o,
                Some(Err(e)) => {
                    ok = false;
                    notes.push(format!("{name}: {e}"));
                    continue;
                }
                None => {
                    ok = false;
                    notes.push(format!("{name}: config missing"));
                    continue;
                }
            };
            timed.insert(name, o.seconds);
            for prefix in prefixes.iter() {
                let found: Vec<_> = o.report.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
                if found.is_empty() {
                    ok = false;
                    notes.push(format!("{name}: no `{prefix}` check"));
                }
                for c in found.into_iter().filter(|c| c.status != Status::Pass) {
                    ok = false;
                    notes.push(format!("{name}: {} = {:e} ({:?})", c.name, c.value, c.status));
                }
            }
        }
    }
    let seconds: f64 = timed.values().sum();
    if seconds >= limit {
        ok = false;
        notes.push(format!("runtime {seconds:.1} s over the {limit} s budget"));
    }
    notes.insert(0, format!("{seconds:.2} s"));
    Verdict { ok, detail: notes.join("; ") }
}

fn value(runs: &Runs, name: &str, check: &str) -> f64 {
    match runs.get(name) {
        Some(Ok(o)) => o.report.checks.iter().find(|c| c.name.starts_with(check)).map(|c| c.value).unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let runs = run_all(&tmp.path().join("first"));
    let symbolic: Vec<String> = (1..=10).map(|k| format!("symbolic-{k:02}")).collect();
    let symbolic: Vec<&str> = symbolic.iter().map(String::as_str).collect();

    let mut lines = vec![
        (1, "T-decomposition exact for 10 configurations", criterion(&runs, &[(&symbolic, &["T-decomposition residual"])], 30.0)),
        (
            2,
            "commutator −8βΔ + 32β³|x|² for A = I, n = 1..3",
            criterion(&runs, &[(&symbolic[..3], &["commutator closed form"])], 1.0),
        ),
        (
            3,
            "S symmetric and A antisymmetric over 100 pairs",
            criterion(&runs, &[(&["pairs-1d", "pairs-2d"], &["⟨Sf,g⟩", "⟨Af,g⟩"])], 60.0),
        ),
        (
            4,
            "free-flow fidelity and second-order splitting",
            criterion(&runs, &[(&["free-flow"], &["closed-form error"]), (&["harmonic-order"], &["error ratio"])], 10.0),
        ),
        (
            5,
            "Hardy endpoint products against 1/(16(s²+1))",
            criterion(&runs, &[(&["hardy"], &["product matches oracle", "product ≤ 1/16", "monotone approach"])], 5.0),
        ),
        (
            6,
            "log-convexity of weighted norms",
            criterion(
                &runs,
                &[
                    (&["convexity-free"], &["interpolation bound", "second-difference floor"]),
                    (&["convexity-variable"], &["coefficient smallness", "second-difference floor"]),
                ],
                300.0,
            ),
        ),
        (
            7,
            "regularized flow convergence and semigroup identity",
            criterion(
                &runs,
                &[(&["regularized"], &["regularized flow converges"]), (&["semigroup"], &["semigroup composition"])],
                120.0,
            ),
        ),
        (
            8,
            "Gaussian decay schedule under the heat flow",
            criterion(&runs, &[(&["decay-schedule"], &["weighted norm stays bounded", "exact rate dominates"])], 30.0),
        ),
        (
            9,
            "cubic-regime Carleman inequality at β₁",
            criterion(
                &runs,
                &[
                    (&["carleman-cubic-identity", "carleman-cubic-variable"], &["Carleman inequality", "direct conjugation gap"]),
                    (&["carleman-cubic-variable"], &["coefficient smallness"]),
                ],
                600.0,
            ),
        ),
        (
            10,
            "translated-weight Carleman inequality and frontier exponents",
            criterion(
                &runs,
                &[
                    (&["carleman-translated"], &["Carleman inequality", "frontier exponent"]),
                    (&["carleman-cubic-identity"], &["frontier exponent"]),
                ],
                900.0,
            ),
        ),
        (
            11,
            "annulus profile prefers quadratic decay",
            criterion(&runs, &[(&["lowerbound"], &["core mass hypothesis", "preferred exponent", "fit residual"])], 60.0),
        ),
        (
            12,
            "subordination ratio band and monotone integral",
            criterion(&runs, &[(&["subordination"], &["integral increasing in r", "ratio band"])], 30.0),
        ),
        (
            13,
            "weighted Poincaré worst ratio stable and below C(n)",
            criterion(&runs, &[(&["poincare-1d", "poincare-2d"], &["stable under grid doubling", "below C(n)"])], 120.0),
        ),
    ];
    let (t, c) = (value(&runs, "carleman-translated", "frontier exponent"), value(&runs, "carleman-cubic-identity", "frontier exponent"));
    lines[9].2.detail += &format!("; exponents {t:.3} translated, {c:.3} cubic");

    let again = run_all(&tmp.path().join("second"));
    let mut same = !runs.is_empty();
    let mut notes = Vec::new();
    for (name, first) in &runs {
        match (first, again.get(name)) {
            (Ok(a), Some(Ok(b))) => {
                if a.csv.is_empty() || a.csv != b.csv {
                    same = false;
                    notes.push(name.clone());
                }
            }
            _ => {
                same = false;
                notes.push(name.clone());
            }
        }
    }
    let files: usize = runs.values().filter_map(|r| r.as_ref().ok()).map(|o| o.csv.len()).sum();
    let detail = if notes.is_empty() {
        format!("{files} CSV files from {} configs", runs.len())
    } else {
        format!("differs: {}", notes.join(", "))
    };
    lines.push((14, "rerun with the same seed gives byte-identical CSVs", Verdict { ok: same, detail }));

    let mut failed = 0;
    for (k, title, v) in &lines {
        if !v.ok {
            failed += 1;
        }
        println!("criterion {k:>2} {}  {title} ({})", if v.ok { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
