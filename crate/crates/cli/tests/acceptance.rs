//! Acceptance run. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qutrit_dephasing::analysis::{extract_timescales, linear_grid, CoherenceLevel, Disentanglement};
use qutrit_dephasing::channels::{apply_channel, build_collective_kraus, build_local_kraus, evolve_with_params};
use qutrit_dephasing::entanglement::{negativity_general_multilocal, FRAGILE_SUPPORT, PSI_FORMS, ROBUST_SUPPORT};
use qutrit_dephasing::linalg::projector;
use qutrit_dephasing::noise_mc::{oracle_compare, trajectory_rng, Z_THRESHOLD};
use qutrit_dephasing::{evolve, negativity, ChannelSpec, DecayParams, DensityMatrix, PureState9, Subsystem, C64};
use qutrit_dephasing_cli::sweep::{run_sweep, DEFAULT_POINTS, DEFAULT_T_END};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

const SEED: u64 = 20_240_601;

fn state(seed: u64, k: usize) -> PureState9 {
    PureState9::random(&mut trajectory_rng(seed, k as u64))
}

fn state_on(seed: u64, k: usize, support: &[usize]) -> PureState9 {
    PureState9::random_on(&mut trajectory_rng(seed, k as u64), support)
}

fn amp(s: &PureState9, one_based: usize) -> f64 {
    s.amplitude(one_based - 1).norm()
}

fn neg(rho: &DensityMatrix) -> f64 {
    negativity(rho).expect("negativity").value
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0_f64;
    for g in [0.999, 0.9, 0.5, 0.1, 0.001] {
        for k in [
            build_local_kraus(g, Subsystem::A).unwrap(),
            build_local_kraus(g, Subsystem::B).unwrap(),
            build_collective_kraus(g).unwrap(),
        ] {
            worst = worst.max(k.completeness_residual());
        }
    }
    check(worst < 1e-12, format!("max completeness residual {worst:.3e} (< 1e-12)"))
}

/// Upper triangle of the multi-local decay table, 1-based, as the powers of
/// gamma_A and gamma_B.
const MULTI_LOCAL_TABLE: [(usize, usize, &str); 36] = [
    (1, 2, "B"), (1, 3, "B"), (1, 4, "A"), (1, 5, "AB"), (1, 6, "AB"), (1, 7, "A"), (1, 8, "AB"), (1, 9, "AB"),
    (2, 3, "B2"), (2, 4, "AB"), (2, 5, "A"), (2, 6, "AB2"), (2, 7, "AB"), (2, 8, "A"), (2, 9, "AB2"),
    (3, 4, "AB"), (3, 5, "AB2"), (3, 6, "A"), (3, 7, "AB"), (3, 8, "AB2"), (3, 9, "A"),
    (4, 5, "B"), (4, 6, "B"), (4, 7, "A2"), (4, 8, "A2B"), (4, 9, "A2B"),
    (5, 6, "B2"), (5, 7, "A2B"), (5, 8, "A2"), (5, 9, "A2B2"),
    (6, 7, "A2B"), (6, 8, "A2B2"), (6, 9, "A2"),
    (7, 8, "B"), (7, 9, "B"),
    (8, 9, "B2"),
];

/// Powers of the collective gamma, full matrix.
const COLLECTIVE_TABLE: [[i32; 9]; 9] = [
    [0, 1, 1, 1, 4, 1, 1, 1, 4],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [4, 1, 1, 1, 0, 1, 1, 1, 0],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 0, 1],
    [4, 1, 1, 1, 0, 1, 1, 1, 0],
];

fn power(code: &str, source: char) -> i32 {
    match code.find(source) {
        None => 0,
        Some(p) => code[p + 1..].chars().next().and_then(|c| c.to_digit(10)).map_or(1, |d| d as i32),
    }
}

fn multi_local_factor(i: usize, j: usize, ga: f64, gb: f64) -> f64 {
    if i == j {
        return 1.0;
    }
    let (lo, hi) = (i.min(j) + 1, i.max(j) + 1);
    let (_, _, code) = MULTI_LOCAL_TABLE.iter().find(|(r, c, _)| *r == lo && *c == hi).unwrap();
    ga.powi(power(code, 'A')) * gb.powi(power(code, 'B'))
}

fn criterion_2() -> Outcome {
    let times = linear_grid(0.0, 4.5, 10);
    let (gamma_a, gamma_b, gamma_c) = (1.0, 0.6, 1.0);
    let (mut ml, mut coll) = (0.0_f64, 0.0_f64);
    for k in 0..50 {
        let rho0 = projector(&state(SEED, k));
        for &t in &times {
            let (ga, gb, g) = (
                (-gamma_a * t / 2.0f64).exp(),
                (-gamma_b * t / 2.0f64).exp(),
                (-gamma_c * t / 2.0f64).exp(),
            );
            let local = build_local_kraus(gb, Subsystem::B)
                .unwrap()
                .compose(&build_local_kraus(ga, Subsystem::A).unwrap());
            let rho = apply_channel(&local, &rho0).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let want = rho0.get(i, j) * multi_local_factor(i, j, ga, gb);
                    ml = ml.max((rho.get(i, j) - want).norm());
                }
            }
            let rho = apply_channel(&build_collective_kraus(g).unwrap(), &rho0).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let want = rho0.get(i, j) * g.powi(COLLECTIVE_TABLE[i][j]);
                    coll = coll.max((rho.get(i, j) - want).norm());
                }
            }
        }
    }
    check(
        ml < 1e-12 && coll < 1e-12,
        format!("max entry error multi-local {ml:.3e}, collective {coll:.3e} (< 1e-12; 50 states x 10 times)"),
    )
}

/// Distinct decay rates found by least squares on log |rho_ij(t) / rho_ij(0)|
/// of a Kraus-evolved state with full support. At the reduced level each
/// single-qutrit coherence is a sum of joint entries that share the traced
/// qutrit's level, and those entries are fitted one at a time.
fn regressed_taus(spec: &ChannelSpec, rate_scale: f64, level: CoherenceLevel) -> Vec<f64> {
    let uniform = PureState9::new([C64::new(1.0 / 3.0, 0.0); 9]).unwrap();
    let rho0 = projector(&uniform);
    let times = linear_grid(0.0, 3.0 / rate_scale, 13);
    let series: Vec<DensityMatrix> = times.iter().map(|&t| evolve(&rho0, spec, t).unwrap()).collect();
    let mut rates: Vec<f64> = Vec::new();
    for i in 0..9 {
        for j in i + 1..9 {
            let keep = match level {
                CoherenceLevel::Joint => true,
                CoherenceLevel::Reduced => i % 3 == j % 3 || i / 3 == j / 3,
            };
            if !keep {
                continue;
            }
            let y: Vec<f64> = series.iter().map(|r| (r.get(i, j).norm() / rho0.get(i, j).norm()).ln()).collect();
            let n = times.len() as f64;
            let (mx, my) = (times.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
            let sxy: f64 = times.iter().zip(&y).map(|(x, v)| (x - mx) * (v - my)).sum();
            let sxx: f64 = times.iter().map(|x| (x - mx) * (x - mx)).sum();
            let rate = -sxy / sxx;
            if rate > 1e-9 * rate_scale && !rates.iter().any(|r| (r - rate).abs() <= 1e-9 * rate) {
                rates.push(rate);
            }
        }
    }
    let mut taus: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
    taus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    taus
}

fn set_error(got: &[f64], want: &[f64]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.iter().zip(want).map(|(g, w)| ((g - w) / w).abs()).fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for gamma in [0.25, 1.0, 3.5] {
        let cases = [
            ("multi-local joint", ChannelSpec::multi_local(gamma), CoherenceLevel::Joint, vec![2.0, 1.0, 2.0 / 3.0, 0.5]),
            ("multi-local reduced", ChannelSpec::multi_local(gamma), CoherenceLevel::Reduced, vec![2.0, 1.0]),
            ("collective joint", ChannelSpec::collective(gamma), CoherenceLevel::Joint, vec![2.0, 0.5]),
            ("collective reduced", ChannelSpec::collective(gamma), CoherenceLevel::Reduced, vec![2.0]),
        ];
        for (name, spec, level, units) in cases {
            let want: Vec<f64> = units.iter().map(|u| u / gamma).collect();
            let set = extract_timescales(&spec, level).unwrap();
            let analytic = set_error(&set.taus(), &want);
            let fitted: Vec<f64> = set.entries.iter().map(|e| 1.0 / e.fitted_rate).collect();
            let library_fit = set_error(&fitted, &want);
            let kraus_fit = set_error(&regressed_taus(&spec, gamma, level), &want);
            let e = analytic.max(library_fit).max(kraus_fit);
            if e >= 1e-9 {
                detail.push(format!("{name} at rate {gamma}: got {:?}", set.taus()));
            }
            worst = worst.max(e);
        }
    }
    check(
        worst < 1e-9,
        format!("max relative error {worst:.3e} over analytic, fitted and Kraus-regressed sets (< 1e-9){}", detail.iter().map(|d| format!("; {d}")).collect::<String>()),
    )
}

fn criterion_4() -> Outcome {
    let times = linear_grid(0.0, 4.5, 10);
    let ml = ChannelSpec::multi_local(1.0);
    let coll = ChannelSpec::collective(1.0);
    let (mut frag_ml, mut frag_coll, mut robust) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..100 {
        let f = state_on(SEED + 1, k, &FRAGILE_SUPPORT);
        let p = state_on(SEED + 2, k, &PSI_FORMS[0]);
        let (a1, a5, a9) = (amp(&f, 1), amp(&f, 5), amp(&f, 9));
        let (a2, a4) = (amp(&p, 2), amp(&p, 4));
        for &t in &times {
            let g = (-t / 2.0f64).exp();
            let want = (a1 * a5 + a1 * a9) * g * g + a5 * a9 * g.powi(4);
            frag_ml = frag_ml.max((neg(&evolve(&projector(&f), &ml, t).unwrap()) - want).abs());
            let want = (a1 * a5 + a1 * a9) * g.powi(4) + a5 * a9;
            frag_coll = frag_coll.max((neg(&evolve(&projector(&f), &coll, t).unwrap()) - want).abs());
            let want = a2 * a4 * g * g;
            robust = robust.max((neg(&evolve(&projector(&p), &ml, t).unwrap()) - want).abs());
        }
    }
    check(
        frag_ml < 1e-10 && frag_coll < 1e-10 && robust < 1e-10,
        format!(
            "max |N - closed form|: fragile multi-local {frag_ml:.3e}, fragile collective {frag_coll:.3e}, robust {robust:.3e} (< 1e-10)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let coll = ChannelSpec::collective(1.0);
    let times = linear_grid(0.0, 50.0, 101);
    let (mut dev, mut drift) = (0.0_f64, 0.0_f64);
    let mut states: Vec<PureState9> = (0..20).map(|k| state_on(SEED + 3, k, &ROBUST_SUPPORT)).collect();
    for (f, form) in PSI_FORMS.iter().enumerate() {
        states.extend((0..10).map(|k| state_on(SEED + 4 + f as u64, k, form)));
    }
    for s in &states {
        let rho0 = projector(s);
        let n0 = neg(&rho0);
        for &t in &times {
            let rho = evolve(&rho0, &coll, t).unwrap();
            dev = dev.max(rho.max_abs_diff(&rho0));
            drift = drift.max((neg(&rho) - n0).abs());
        }
    }
    check(
        dev < 1e-14 && drift < 1e-14,
        format!("max |rho(t) - rho(0)| {dev:.3e} (< 1e-14), max |N(t) - N(0)| {drift:.3e} over t in [0, 50]"),
    )
}

fn criterion_6() -> Outcome {
    let s = 1.0 / 3f64.sqrt();
    let me = PureState9::superposition(&[(0, C64::new(s, 0.0)), (4, C64::new(s, 0.0)), (8, C64::new(s, 0.0))]).unwrap();
    let rho0 = projector(&me);
    let none = ChannelSpec::none();
    let case1 = linear_grid(0.0, 50.0, 26)
        .iter()
        .map(|&t| (neg(&evolve(&rho0, &none, t).unwrap()) - 1.0).abs())
        .fold(0.0, f64::max);
    let case3 = neg(&evolve(&rho0, &ChannelSpec::multi_local(1.0), 50.0).unwrap());
    let mut case2 = 0.0_f64;
    let mut limits = Vec::new();
    for sub in [Subsystem::A, Subsystem::B] {
        let spec = ChannelSpec::local(sub, 1.0);
        let ns: Vec<f64> = [60.0, 70.0, 80.0].iter().map(|&t| neg(&evolve(&rho0, &spec, t).unwrap())).collect();
        case2 = case2.max((ns[1] - ns[0]).abs()).max((ns[2] - ns[1]).abs());
        limits.push(ns[2]);
    }
    check(
        case1 < 1e-12 && case3 < 1e-8 && case2 < 1e-10,
        format!(
            "no noise max |N - 1| {case1:.3e}; both local N(50) {case3:.3e} (< 1e-8); one local successive difference {case2:.3e} (< 1e-10) at t = 60, 70, 80, limit {:.3e}",
            limits[0]
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut total = 0;
    for (name, spec) in [("multi-local", ChannelSpec::multi_local(1.0)), ("collective", ChannelSpec::collective(1.0))] {
        let res = run_sweep(&spec, 1000, SEED, DEFAULT_T_END, DEFAULT_POINTS).unwrap();
        let v = res.violations();
        total += v.len();
        let finite = res
            .cases
            .iter()
            .filter(|c| matches!(c.report.disentanglement, Disentanglement::FiniteTime { .. }))
            .count();
        lines.push(format!("{name}: {} violations of 1000 ({finite} finite-time)", v.len()));
        for case in v {
            println!("  violation ({name}): {}", serde_json::to_string(case).unwrap());
        }
    }
    check(total == 0, lines.join(", "))
}

fn criterion_8() -> Outcome {
    let specs = [
        ("multi-local", ChannelSpec::multi_local(1.0)),
        ("collective", ChannelSpec::collective(1.0)),
        ("full", ChannelSpec::full(1.0, 1.0)),
    ];
    let rho0 = projector(&state(SEED + 7, 0));
    let mut worst = 0.0_f64;
    for (_, spec) in &specs {
        for t in [0.25, 1.0, 4.0] {
            let rep = oracle_compare(&rho0, spec, t, 100_000, SEED).unwrap();
            worst = worst.max(rep.max_z);
        }
    }
    check(worst <= Z_THRESHOLD, format!("max entry z-score {worst:.3} over 3 channels x 3 times at n = 1e5 (<= 4)"))
}

fn criterion_9() -> Outcome {
    let params = [(0.9, 0.9), (0.6, 0.3), (0.2, 0.75), (0.05, 0.05)];
    let mut classes = 0.0_f64;
    for k in 0..100 {
        let mut states = vec![state_on(SEED + 8, k, &FRAGILE_SUPPORT)];
        for (f, form) in PSI_FORMS.iter().enumerate() {
            states.push(state_on(SEED + 9 + f as u64, k, form));
        }
        for s in &states {
            for &(ga, gb) in &params {
                let p = DecayParams::new(ga, gb, 1.0).unwrap();
                let numeric = neg(&evolve_with_params(&projector(s), &p).unwrap());
                classes = classes.max((negativity_general_multilocal(s, ga, gb).unwrap() - numeric).abs());
            }
        }
    }
    let mut general = 0.0_f64;
    for k in 0..100 {
        let s = state(SEED + 12, k);
        for &(ga, gb) in &params {
            let p = DecayParams::new(ga, gb, 1.0).unwrap();
            let numeric = neg(&evolve_with_params(&projector(&s), &p).unwrap());
            general = general.max((negativity_general_multilocal(&s, ga, gb).unwrap() - numeric).abs());
        }
    }
    check(
        classes < 1e-10,
        format!("nine-term expression on class forms {classes:.3e} (< 1e-10); general states max discrepancy {general:.3e} (reported)"),
    )
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qutrit-dephasing");
    let root = tempfile::TempDir::new().unwrap();
    let cfg = root.path().join("scenario.json");
    fs::write(
        &cfg,
        r#"{
  "state": {"amplitudes": [0.3, [0.1, 0.2], 0.25, [0.0, -0.4], 0.35, 0.2, [0.3, 0.4], 0.25, [0.2, -0.35]]},
  "channels": {"sources": ["a-local", "b-local", "collective"], "gamma1": 0.8, "gamma2": 1.2},
  "time_grid": {"t_start": 0, "t_end": 4, "n_points": 9},
  "mc": {"n_trajectories": 20000, "seed": 99}
}"#,
    )
    .unwrap();
    let runs: Vec<(String, Vec<String>)> = vec![
        ("report csv".into(), vec!["report".into(), "--config".into(), cfg.to_string_lossy().into_owned()]),
        (
            "report json".into(),
            vec!["report".into(), "--config".into(), cfg.to_string_lossy().into_owned(), "--format".into(), "json".into()],
        ),
        ("verify cptp".into(), vec!["verify".into(), "--suite".into(), "cptp".into(), "--n".into(), "10".into()]),
        ("verify equivalence".into(), vec!["verify".into(), "--suite".into(), "equivalence".into(), "--n".into(), "10".into()]),
        ("verify oracle".into(), vec!["verify".into(), "--suite".into(), "oracle".into(), "--n".into(), "20000".into()]),
        ("verify paper-formulas".into(), vec!["verify".into(), "--suite".into(), "paper-formulas".into(), "--n".into(), "20".into()]),
        (
            "sweep".into(),
            vec!["sweep".into(), "--channel".into(), "full".into(), "--n-states".into(), "8".into(), "--gamma2".into(), "0.5".into()],
        ),
    ];
    let mut bad = Vec::new();
    let mut n_files = 0;
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = root.path().join(format!("{}-{rep}", name.replace(' ', "_")));
            let status = Command::new(bin)
                .args(args)
                .args(["--seed", "17", "--out-dir", out.to_str().unwrap()])
                .output()
                .unwrap();
            if !status.status.success() {
                bad.push(format!("{name} exited {:?}", status.status.code()));
            }
            outputs.push(files_in(&out));
        }
        n_files += outputs[0].len();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            bad.push(format!("{name} differs between runs"));
        }
    }
    check(
        bad.is_empty(),
        format!("{} runs repeated, {n_files} files byte-identical{}", runs.len(), if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Kraus completeness", criterion_1),
        (2, "matrix reproduction", criterion_2),
        (3, "timescale reproduction", criterion_3),
        (4, "class formulas", criterion_4),
        (5, "robust states under collective noise", criterion_5),
        (6, "limits", criterion_6),
        (7, "disentanglement vs decoherence sweep", criterion_7),
        (8, "Monte Carlo oracle", criterion_8),
        (9, "nine-term negativity expression", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n}: PASS {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
