//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always shown.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use composed_core::composed::{composed_loss, Arm, FrozenDenoiser, StaircaseConfig};
use composed_core::discrete::{DiscreteArm, DiscreteExperimentConfig};
use composed_core::relu_net::{central_difference, max_relative_error, LossKind, ReluNet2};
use composed_core::rng;
use composed_core::sanstype::{check, corrupt_with, generate, Corruption, GenConfig, TestCase, Verdict};
use composed_core::spline::{base_construction, staircase_std_interpolant, theorem_report, StaircaseSpec};
use composed_core::valid_set::ValidSet;
use composed_lab::commands::reinforce::{reinforce_check, ReinforceConfig};
use composed_lab::commands::{discrete, median, staircase};
use composed_lab::parallel;
use rand::Rng as _;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn random_staircase(r: &mut rng::Rng, n: usize) -> (StaircaseSpec, Vec<f64>) {
    let m = r.random_range(2..=6usize);
    let mut levels = Vec::with_capacity(m);
    let mut v = r.random_range(-2.0..2.0);
    for _ in 0..m {
        levels.push(v);
        v += r.random_range(0.1..3.0);
    }
    let mut picks: Vec<usize> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = r.random_range(0..m - 1);
        if let Some(&last) = picks.last() {
            if p >= last {
                p += 1;
            }
        }
        picks.push(p);
    }
    let lengths: Vec<f64> = (0..n).map(|_| r.random_range(0.05..2.0)).collect();
    let gap = r.random_range(0.01..1.5);
    let values = picks.iter().map(|&i| vec![levels[i]]).collect();
    (StaircaseSpec::from_lengths(r.random_range(-3.0..3.0), &lengths, gap, values).unwrap(), levels)
}

fn norm_exactness() -> Outcome {
    let mut r = rng::seeded(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..=20);
        let (spec, _) = random_staircase(&mut r, n);
        let expected: f64 = spec.values().windows(2).map(|w| (w[1][0] - w[0][0]).abs()).sum::<f64>() / spec.gap();
        let got = staircase_std_interpolant(&spec).map_err(|e| e.to_string())?.norm();
        worst = worst.max((got - expected).abs() / expected);
    }
    let mut family_worst: f64 = 0.0;
    let mut limit_gap: f64 = 0.0;
    let mut above_one = f64::NEG_INFINITY;
    let mut monotone = true;
    for n in [2, 5, 10, 20] {
        for delta in [0.5, 0.1, 0.01] {
            let spec = StaircaseSpec::rounding(n, delta).map_err(|e| e.to_string())?;
            let f = staircase_std_interpolant(&spec).map_err(|e| e.to_string())?;
            let expected = (n - 1) as f64 / delta;
            family_worst = family_worst.max((f.norm() - expected).abs() / expected);
            let valid = ValidSet::integer_range(1, n as i64).map_err(|e| e.to_string())?;
            let mut prev = f64::INFINITY;
            for eps in [1e-2, 1e-3, 1e-4, 1e-6] {
                let g = base_construction(&spec, &valid, eps).map_err(|e| e.to_string())?.norm();
                monotone &= g <= prev + 1e-12;
                prev = g;
            }
            above_one = above_one.max(prev - 1.0);
            if n >= 3 {
                limit_gap = limit_gap.max((prev - 1.0).abs());
            }
        }
    }
    let pass = worst <= 1e-9 && family_worst <= 1e-9 && monotone && limit_gap <= 1e-4 && above_one <= 1e-4;
    Ok((
        pass,
        format!(
            "random max rel err {worst:.1e}; rounding family max rel err {family_worst:.1e}; \
             base norm non-increasing in eps: {monotone}; |norm(1e-6) - 1| max {limit_gap:.1e} for N >= 3, \
             max excess over 1 {above_one:.1e}"
        ),
    ))
}

fn construction_validity() -> Outcome {
    let mut r = rng::seeded(2);
    let (mut failures, mut adjacent, mut non_adjacent, mut worst_excess) = (0, 0, 0, f64::NEG_INFINITY);
    for _ in 0..100 {
        let n = r.random_range(2..=12);
        let (spec, levels) = random_staircase(&mut r, n);
        let valid = ValidSet::from_scalars(&levels).map_err(|e| e.to_string())?;
        let rep = theorem_report(&spec, &valid, None).map_err(|e| e.to_string())?;
        adjacent += rep.adjacent();
        non_adjacent += rep.non_adjacent();
        worst_excess = worst_excess.max(rep.measured_base_norm - rep.base_upper_bound - rep.slack_constant * rep.epsilon);
        if rep.grid_points < 10_000 || rep.grid_mismatches > 0 || !rep.within_bound {
            failures += 1;
        }
    }
    Ok((
        failures == 0 && adjacent > 0 && non_adjacent > 0,
        format!(
            "100 specs ({adjacent} adjacent / {non_adjacent} non-adjacent pairs), {failures} failures, \
             max(measured - bound - c*eps) = {worst_excess:.3e}"
        ),
    ))
}

fn gap_trend() -> Outcome {
    let n = 10;
    let mut ratios = Vec::new();
    let deltas = [0.5, 0.1, 0.02, 0.004];
    for delta in deltas {
        let values = (0..n).map(|i| vec![i as f64]).collect();
        let spec = StaircaseSpec::from_lengths(0.0, &vec![1.0; n], delta, values).map_err(|e| e.to_string())?;
        let valid = ValidSet::integer_range(0, n as i64 - 1).map_err(|e| e.to_string())?;
        let rep = theorem_report(&spec, &valid, None).map_err(|e| e.to_string())?;
        if rep.non_adjacent() != 0 {
            return Ok((false, "unit steps should have no non-adjacent pairs".into()));
        }
        ratios.push(rep.measured_ratio.ok_or("no ratio")?);
    }
    let slopes: Vec<f64> = (1..deltas.len())
        .map(|i| (ratios[i] - ratios[i - 1]) / (1.0 / deltas[i] - 1.0 / deltas[i - 1]))
        .collect();
    let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.1}")).collect();
    Ok((min_slope >= 0.5, format!("ratios {} for delta {deltas:?}; min slope in 1/delta {min_slope:.3}", shown.join(", "))))
}

fn off_kinks(net: &ReluNet2, xs: &[Vec<f64>]) -> bool {
    let (d, h) = (net.input_dim(), net.hidden());
    xs.iter().all(|x| {
        (0..h).all(|j| (net.b1()[j] + (0..d).map(|i| net.w1()[j * d + i] * x[i]).sum::<f64>()).abs() > 1e-3)
    })
}

type Batch = Vec<(Vec<f64>, Vec<f64>)>;

fn random_batch(r: &mut rng::Rng, d: usize, k: usize) -> Batch {
    (0..4)
        .map(|_| {
            (
                (0..d).map(|_| r.random_range(-2.0..2.0)).collect(),
                (0..k).map(|_| r.random_range(-2.0..2.0)).collect(),
            )
        })
        .collect()
}

fn gradient_fidelity() -> Outcome {
    let mut r = rng::seeded(4);
    let (mut plain, mut composed, mut skipped) = (0.0f64, 0.0f64, 0);
    let mut done = 0;
    while done < 20 {
        let net = ReluNet2::random(2, 8, 2, r.random());
        let b = random_batch(&mut r, 2, 2);
        let xs: Vec<Vec<f64>> = b.iter().map(|(x, _)| x.clone()).collect();
        if !off_kinks(&net, &xs) {
            skipped += 1;
            continue;
        }
        let (_, g) = net.loss_grad(&b, LossKind::SquaredError).map_err(|e| e.to_string())?;
        let mut probe = net.clone();
        let fd = central_difference(
            |p| {
                probe.set_params(p).unwrap();
                probe.loss(&b, LossKind::SquaredError).unwrap()
            },
            &net.to_vec(),
            1e-6,
        );
        plain = plain.max(max_relative_error(&g.to_vec(), &fd));
        done += 1;
    }
    done = 0;
    while done < 20 {
        let base = ReluNet2::random(1, 8, 1, r.random());
        let (shift, scale) = (r.random_range(-1.0..1.0), r.random_range(0.5..2.0));
        let pi = FrozenDenoiser::freeze(ReluNet2::random(1, 8, 1, r.random()), vec![shift], vec![scale])
            .map_err(|e| e.to_string())?;
        let lambda = r.random_range(0.0..2.0);
        let b = random_batch(&mut r, 1, 1);
        let xs: Vec<Vec<f64>> = b.iter().map(|(x, _)| x.clone()).collect();
        let mids: Vec<Vec<f64>> = xs.iter().map(|x| vec![(base.eval(x)[0] - shift) / scale]).collect();
        if !off_kinks(&base, &xs) || !off_kinks(pi.net(), &mids) {
            skipped += 1;
            continue;
        }
        let exact = composed_loss(&base, &pi, &b, lambda).map_err(|e| e.to_string())?;
        let mut probe = base.clone();
        let fd = central_difference(
            |p| {
                probe.set_params(p).unwrap();
                composed_loss(&probe, &pi, &b, lambda).unwrap().total
            },
            &base.to_vec(),
            1e-6,
        );
        composed = composed.max(max_relative_error(&exact.grad.to_vec(), &fd));
        pi.verify().map_err(|e| e.to_string())?;
        done += 1;
    }
    Ok((
        plain < 1e-4 && composed < 1e-4,
        format!("max rel err plain {plain:.2e}, composed {composed:.2e} ({skipped} draws near a ReLU kink redrawn)"),
    ))
}

fn reinforce_unbiased() -> Outcome {
    let v = reinforce_check(&ReinforceConfig::default(), parallel::threads()).map_err(|e| e.to_string())?;
    let coords: usize = v.instances.iter().map(|i| i.params).sum();
    let sizes: Vec<usize> = v.instances.iter().map(|i| i.vocab.pow(i.len as u32)).collect();
    Ok((
        v.pass,
        format!(
            "{} instances, output spaces {:?}, {} coordinates, 1e5 samples: max z-score {:.2} (limit 3)",
            v.instances.len(),
            sizes,
            coords,
            v.max_z_score
        ),
    ))
}

fn staircase_arms() -> Outcome {
    let spec = StaircaseSpec::rounding(5, 0.5).map_err(|e| e.to_string())?;
    let cfg = StaircaseConfig::default();
    let rep = staircase::run_parallel(&spec, &cfg, parallel::threads()).map_err(|e| e.to_string())?;
    let wins = rep.seeds.iter().filter(|s| s.arm(Arm::Composed).em_ood >= s.arm(Arm::Standard).em_ood).count();
    let mut c_std: Vec<f64> = rep.seeds.iter().map(|s| s.arm(Arm::Standard).complexity).collect();
    let mut c_cmp: Vec<f64> = rep.seeds.iter().map(|s| s.arm(Arm::Composed).complexity).collect();
    let mut em_std: Vec<f64> = rep.seeds.iter().map(|s| s.arm(Arm::Standard).em_ood).collect();
    let mut em_cmp: Vec<f64> = rep.seeds.iter().map(|s| s.arm(Arm::Composed).em_ood).collect();
    let (ms, mc) = (median(&mut c_std), median(&mut c_cmp));
    Ok((
        rep.seeds.len() == 10 && wins >= 8 && mc < ms,
        format!(
            "composed OOD exact-match >= standard on {wins}/10 seeds (median {:.2} vs {:.2}); \
             median C(theta) composed {mc:.2} vs standard {ms:.2}",
            median(&mut em_cmp),
            median(&mut em_std)
        ),
    ))
}

fn tests(cases: &[(&str, &str)]) -> Vec<TestCase> {
    cases.iter().map(|(i, o)| TestCase { stdin: (*i).into(), stdout: (*o).into() }).collect()
}

const EXAMPLE_PROGRAM: &str = "int main () {\n  string var_8 = \"str_2\";\n  bool var_2;\n  cin >> var_2;\n  \
var_8 = \"str_4\" + var_8;\n  var_2 = false;\n  bool var_5 = true;\n  if ( var_2 ) {\n    bool temp = var_2;\n    \
var_2 = var_5;\n    var_5 = temp; }\n  if ( var_2 ) {\n    bool temp = var_2;\n    var_2 = var_5;\n    \
var_5 = temp; }\n  cout << var_8;\n  cout << var_2;\n  cout << var_5;\n  return 0; }\n";

fn golden_fixtures() -> Result<usize, String> {
    let fixtures: [(Corruption, &str, Vec<TestCase>); 6] = [
        (
            Corruption::TypeReplace,
            "int main () {\n  string var_8 = \"str_2\";\n  var_8 = var_8 + \"str_3\";\n  cout << var_8;\n  return 0; }\n",
            tests(&[("", "str_2str_3")]),
        ),
        (
            Corruption::TypeDelete,
            "int main () {\n  bool var_5 = true;\n  cout << var_5;\n  return 0; }\n",
            tests(&[("", "1")]),
        ),
        (
            Corruption::TypeInsert,
            "int main () {\n  int var_1 = 3;\n  var_1 = var_1 + 4;\n  cout << var_1;\n  return 0; }\n",
            tests(&[("", "7")]),
        ),
        (Corruption::DropArrows, "int main () {\n  int var_1;\n  cin >> var_1;\n  return 0; }\n", tests(&[("3", "")])),
        (Corruption::ReverseArrows, "int main () {\n  int var_1 = 3;\n  cout << var_1;\n  return 0; }\n", tests(&[("", "3")])),
        (Corruption::DropCout, "int main () {\n  int var_1 = 3;\n  cout << var_1;\n  return 0; }\n", tests(&[("", "3")])),
    ];
    let mut checked = 0;
    for (kind, code, t) in &fixtures {
        if !check(code, t).is_correct() {
            return Err(format!("{} fixture is not correct to begin with", kind.name()));
        }
        for seed in 0..5 {
            let bad = corrupt_with(code, *kind, &mut rng::seeded(seed)).map_err(|e| e.to_string())?;
            if check(&bad, t).verdict != Verdict::CompileErr {
                return Err(format!("{} fixture was not a compile error:\n{bad}", kind.name()));
            }
            checked += 1;
        }
    }
    let t = tests(&[("0", "str_4str_201"), ("1", "str_4str_201")]);
    if !check(EXAMPLE_PROGRAM, &t).is_correct() {
        return Err("denoised example program is not correct".into());
    }
    let missing = EXAMPLE_PROGRAM.replace("  bool var_5 = true;", "  var_5 = true;");
    if check(&missing, &t).verdict != Verdict::CompileErr {
        return Err("missing `bool` on var_5 was not a compile error".into());
    }
    let base = missing.replacen("    bool temp = var_2;", "    string temp = var_2;", 1);
    if check(&base, &t).verdict != Verdict::CompileErr {
        return Err("base predictor example was not a compile error".into());
    }
    Ok(checked + 3)
}

fn dataset_bytes(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let code = composed_lab::cli::run([
        "composed-lab",
        "--out",
        dir.to_str().unwrap(),
        "sanstype",
        "dataset",
        "--seed",
        "7",
        "--labeled",
        "200",
        "--unlabeled",
        "1000",
        "--test",
        "100",
        "--ood-test",
        "100",
    ]);
    if code != 0 {
        return Err(format!("dataset command exited {code}"));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    Ok(files)
}

fn sanstype_soundness() -> Outcome {
    let examples = generate(0, 10_000, false, &GenConfig::default()).map_err(|e| e.to_string())?;
    let correct = examples.iter().filter(|e| check(&e.code, &e.tests).is_correct()).count();
    let fixtures = golden_fixtures();
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let (fa, fb) = (dataset_bytes(a.path())?, dataset_bytes(b.path())?);
    let identical = fa == fb && fa.len() == 5;
    let fixture_note = match &fixtures {
        Ok(n) => format!("{n} golden checks pass"),
        Err(e) => format!("golden fixture failed: {e}"),
    };
    Ok((
        correct == examples.len() && fixtures.is_ok() && identical,
        format!("{correct}/{} generated programs correct; {fixture_note}; regenerated dataset byte-identical: {identical}", examples.len()),
    ))
}

fn test_time_denoiser() -> Outcome {
    let rep = discrete::run_parallel(&DiscreteExperimentConfig::default(), parallel::threads()).map_err(|e| e.to_string())?;
    let never_lower = rep
        .seeds
        .iter()
        .filter(|s| s.arm(DiscreteArm::TestTimeDenoiser).valid_rate >= s.arm(DiscreteArm::Standard).valid_rate)
        .count();
    let rates = |arm| rep.seeds.iter().map(|s| s.arm(arm).valid_rate).collect::<Vec<_>>();
    let (mut std, mut ttd, mut cmp) =
        (rates(DiscreteArm::Standard), rates(DiscreteArm::TestTimeDenoiser), rates(DiscreteArm::Composed));
    let (ms, mt, mc) = (median(&mut std), median(&mut ttd), median(&mut cmp));
    let mut correct_ttd: Vec<f64> = rep.seeds.iter().map(|s| s.arm(DiscreteArm::TestTimeDenoiser).correct_rate).collect();
    let mut correct_cmp: Vec<f64> = rep.seeds.iter().map(|s| s.arm(DiscreteArm::Composed).correct_rate).collect();
    Ok((
        rep.seeds.len() == 10 && never_lower == 10 && mc >= mt,
        format!(
            "test-time denoiser never lowers valid-rate: {never_lower}/10 seeds; median valid-rate standard {ms:.3}, \
             test-time {mt:.3}, composed {mc:.3} (median correct-rate test-time {:.3}, composed {:.3})",
            median(&mut correct_ttd),
            median(&mut correct_cmp)
        ),
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "norm exactness", limit: Duration::from_secs(1), run: norm_exactness },
        Criterion { id: 2, name: "construction validity", limit: Duration::from_secs(10), run: construction_validity },
        Criterion { id: 3, name: "gap trend", limit: Duration::from_secs(5), run: gap_trend },
        Criterion { id: 4, name: "gradient fidelity", limit: Duration::from_secs(5), run: gradient_fidelity },
        Criterion { id: 5, name: "score-function unbiasedness", limit: Duration::from_secs(30), run: reinforce_unbiased },
        Criterion { id: 6, name: "staircase composed vs standard", limit: Duration::from_secs(300), run: staircase_arms },
        Criterion { id: 7, name: "SansType soundness", limit: Duration::from_secs(120), run: sanstype_soundness },
        Criterion { id: 8, name: "test-time denoiser protocol", limit: Duration::from_secs(300), run: test_time_denoiser },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok((ok, d)) => (ok && took <= c.limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} [{}] {}: {} ({:.2} s, limit {} s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    }
}
