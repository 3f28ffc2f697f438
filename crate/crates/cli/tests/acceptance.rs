//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs every criterion by default; pass criterion numbers to run a subset
//! (`cargo test -p feddrl-cli --test acceptance -- 1 4`).

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use feddrl_agent::{
    compute_reward, constrain, impacts_from_action, select_action, AgentConfig, DdpgAgent,
    Experience, FedDrlPolicy, ImpactOverride,
};
use feddrl_cli::{
    build_environment, run_experiment, run_to_dir, AgentMode, DatasetKind, ExperimentConfig,
};
use feddrl_data::{
    load_mnist_dir, partition, synthetic, Dataset, PartitionMethod, PartitionSpec, SyntheticSpec,
};
use feddrl_fl::{
    aggregate_weighted, fedavg_impacts, AggregatorKind, ClientReport, FedAvgPolicy, Federation,
    ImpactPolicy, ImpactVector, RoundConfig,
};
use feddrl_metrics::{
    best_top1, loss_stats_normalized, smooth, tail_loss_variance, RoundRecord, RunLog,
};
use feddrl_nn::{mlp, Activation, LayerSpec, ModelParams, Network, SgdConfig, Tensor, LEAKY_RELU_SLOPE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mnist() -> (Dataset, Dataset) {
    load_mnist_dir(&repo_root().join("data/mnist"), "mnist", Some(5000), Some(1000)).unwrap()
}

fn within(label: &str, start: Instant, limit_secs: f64) -> (bool, String) {
    let t = start.elapsed().as_secs_f64();
    (t < limit_secs, format!("{label} {t:.1}s (limit {limit_secs}s)"))
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (train, test) = synthetic(&SyntheticSpec {
        classes: 3,
        dims: 8,
        samples: 600,
        test_samples: 300,
        separation: 1.5,
        seed: 1,
    })
    .unwrap();
    let m = partition(
        &train,
        &PartitionSpec {
            method: PartitionMethod::Pareto,
            clients: 4,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let cfg = RoundConfig {
        total_clients: 4,
        participants: 4,
        max_rounds: 20,
        sgd: SgdConfig { epochs: 2, ..Default::default() },
        seed: 7,
        ..Default::default()
    };
    let specs = mlp(8, &[16], 3, Activation::Relu);
    let mut avg = Federation::new(specs.clone(), &train, &test, &m, cfg.clone()).unwrap();
    let mut drl = Federation::new(specs, &train, &test, &m, cfg).unwrap();
    let agent = DdpgAgent::new(4, AgentConfig { hidden: 32, batch_size: 4, ..Default::default() }, 0).unwrap();
    let mut policy = FedDrlPolicy::new(agent, 0);
    policy.impact_override = Some(ImpactOverride::SampleCounts);
    let mut identical = 0;
    for _ in 0..20 {
        let a = avg.run_round(&mut FedAvgPolicy).unwrap();
        let b = drl.run_round(&mut policy).unwrap();
        let same = a.global.iter().zip(b.global.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        identical += usize::from(same);
    }
    let updates = policy.update_stats().len();
    let (t_ok, t) = within("runtime", start, 10.0);
    (
        identical == 20 && t_ok && updates > 0,
        format!("{identical}/20 rounds bit-identical, agent updated in {updates} rounds, {t}"),
    )
}

// ---------------------------------------------------------------- 2

/// Dense/LeakyReLU forward written out from the parameter layout.
fn oracle_mlp(params: &[f64], widths: &[usize], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut off = 0;
    for (l, pair) in widths.windows(2).enumerate() {
        let (i, o) = (pair[0], pair[1]);
        let w = &params[off..off + i * o];
        let b = &params[off + i * o..off + i * o + o];
        off += i * o + o;
        let mut y = b.to_vec();
        for a in 0..i {
            for c in 0..o {
                y[c] += h[a] * w[a * o + c];
            }
        }
        if l + 2 < widths.len() {
            for v in &mut y {
                if *v <= 0.0 {
                    *v *= LEAKY_RELU_SLOPE;
                }
            }
        }
        h = y;
    }
    h
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = 1e-9;
    let mut worst = [0.0f64; 6];
    for _ in 0..100 {
        // reward
        let k = rng.random_range(1..12);
        let l: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..5.0)).collect();
        let mut mx = f64::MIN;
        let mut mn = f64::MAX;
        let mut s = 0.0;
        for &v in &l {
            mx = mx.max(v);
            mn = mn.min(v);
            s += v;
        }
        worst[0] = worst[0].max((compute_reward(&l) - -(s / k as f64 + mx - mn)).abs());

        // TD priority
        let k = rng.random_range(1..4);
        let cfg = AgentConfig { hidden: 5, seed: rng.random(), ..Default::default() };
        let agent = DdpgAgent::new(k, cfg, 0).unwrap();
        let e = Experience {
            state: (0..3 * k).map(|_| rng.random_range(0.0..1.0)).collect(),
            action: (0..2 * k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            reward: rng.random_range(-3.0..0.0),
            next_state: (0..3 * k).map(|_| rng.random_range(0.0..1.0)).collect(),
            priority: 0.0,
            seq: 0,
        };
        let widths = [5 * k, 5, 5, 1];
        let q = |s: &[f64]| {
            let mut x = s.to_vec();
            x.extend_from_slice(&e.action);
            oracle_mlp(agent.q.params(), &widths, &x)[0]
        };
        let want = (e.reward + 0.99 * q(&e.next_state) - q(&e.state)).abs();
        worst[1] = worst[1].max((agent.td_priority(&e).unwrap() - want).abs());

        // FedAvg weights and weighted sum
        let k = rng.random_range(1..10);
        let d = rng.random_range(1..30);
        let reports: Vec<ClientReport> = (0..k)
            .map(|c| ClientReport {
                client_id: c,
                loss_before: 1.0,
                loss_after: 1.0,
                num_samples: rng.random_range(1..1000),
                params: ModelParams::new((0..d).map(|_| rng.random_range(-5.0..5.0)).collect()),
            })
            .collect();
        let total: usize = reports.iter().map(|r| r.num_samples).sum();
        let a = fedavg_impacts(&reports).unwrap();
        for (x, r) in a.as_slice().iter().zip(&reports) {
            worst[2] = worst[2].max((x - r.num_samples as f64 / total as f64).abs());
        }
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let rs: f64 = raw.iter().sum();
        let alpha = ImpactVector::new(raw.iter().map(|v| v / rs).collect()).unwrap();
        let g = aggregate_weighted(&reports, &alpha).unwrap();
        for j in 0..d {
            let mut want = 0.0;
            for c in 0..k {
                want += alpha.as_slice()[c] * reports[c].params[j];
            }
            worst[3] = worst[3].max((g[j] - want).abs());
        }

        // smoothing
        let n = rng.random_range(1..60);
        let w = rng.random_range(1..15);
        let series: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let got = smooth(&series, w).unwrap();
        let mut i = 0;
        let mut b = 0;
        while i < n {
            let end = (i + w).min(n);
            let mut acc = 0.0;
            for v in &series[i..end] {
                acc += v;
            }
            worst[4] = worst[4].max((got[b] - acc / (end - i) as f64).abs());
            i = end;
            b += 1;
        }
        if got.len() != b {
            worst[4] = f64::INFINITY;
        }

        // normalized loss statistics
        let rounds = rng.random_range(1..8);
        let k = rng.random_range(2..6);
        let mk = |rng: &mut ChaCha8Rng| {
            RunLog::from_records(
                (1..=rounds)
                    .map(|t| RoundRecord {
                        round: t,
                        top1: 0.5,
                        clients: (0..k).collect(),
                        losses_before: (0..k).map(|_| rng.random_range(0.1..3.0)).collect(),
                        losses_after: vec![0.0; k],
                        impacts: vec![1.0 / k as f64; k],
                        impact_secs: 0.0,
                        aggregation_secs: 0.0,
                    })
                    .collect(),
            )
            .unwrap()
        };
        let (x, r) = (mk(&mut rng), mk(&mut rng));
        let ratios = loss_stats_normalized(&x, &r).unwrap();
        for (t, ratio) in ratios.iter().enumerate() {
            let stats = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (m, v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64)
            };
            let (m1, v1) = stats(&x.records()[t].losses_before);
            let (m2, v2) = stats(&r.records()[t].losses_before);
            worst[5] = worst[5]
                .max((ratio.mean_ratio - m1 / m2).abs())
                .max((ratio.var_ratio - v1 / v2).abs());
        }
    }
    let (t_ok, t) = within("runtime", start, 5.0);
    let names = ["reward", "td_priority", "fedavg", "aggregate", "smooth", "loss_ratio"];
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    (worst.iter().all(|&w| w <= tol) && t_ok, format!("max |err| {}; {t}", detail.join(", ")))
}

// ---------------------------------------------------------------- 3

const FD_EPS: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error of parameter and input gradients of `Σ c ⊙ f(x)`.
fn layer_check(specs: Vec<LayerSpec>, batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(specs, &mut rng).unwrap();
    let input: Vec<f64> = (0..batch * net.input_width()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let coef: Vec<f64> = (0..batch * net.output_width()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let width = net.input_width();
    let f = |n: &Network, x: &[f64]| -> f64 {
        n.predict(&Tensor::matrix(batch, width, x.to_vec()))
            .unwrap()
            .data()
            .iter()
            .zip(&coef)
            .map(|(o, c)| o * c)
            .sum()
    };
    net.forward(&Tensor::matrix(batch, width, input.clone())).unwrap();
    let (g, dx) = net
        .backward_with_input(&Tensor::matrix(batch, net.output_width(), coef.clone()))
        .unwrap();
    let base = net.params().to_vec();
    let mut worst = 0.0f64;
    let mut probe = net.clone();
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] += FD_EPS;
        probe.set_params(&p).unwrap();
        let up = f(&probe, &input);
        p[i] -= 2.0 * FD_EPS;
        probe.set_params(&p).unwrap();
        let down = f(&probe, &input);
        worst = worst.max(rel_err(g[i], (up - down) / (2.0 * FD_EPS)));
    }
    for i in 0..input.len() {
        let mut x = input.clone();
        x[i] += FD_EPS;
        let up = f(&net, &x);
        x[i] -= 2.0 * FD_EPS;
        let down = f(&net, &x);
        worst = worst.max(rel_err(dx.data()[i], (up - down) / (2.0 * FD_EPS)));
    }
    worst
}

fn fd_params(net: &Network, f: impl Fn(&Network) -> f64) -> Vec<f64> {
    let base = net.params().to_vec();
    let mut probe = net.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] += FD_EPS;
            probe.set_params(&p).unwrap();
            let up = f(&probe);
            p[i] -= 2.0 * FD_EPS;
            probe.set_params(&p).unwrap();
            (up - f(&probe)) / (2.0 * FD_EPS)
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let conv = LayerSpec::Conv2d { in_channels: 2, out_channels: 3, kernel: 3, height: 6, width: 5 };
    let pool = LayerSpec::MaxPool2d { channels: 2, height: 5, width: 4 };
    let cases: Vec<(&str, Vec<LayerSpec>)> = vec![
        ("dense", vec![LayerSpec::dense(5, 4)]),
        ("conv2d", vec![conv]),
        ("maxpool2d", vec![pool]),
        ("identity", vec![LayerSpec::dense(4, 3), LayerSpec::act(Activation::Identity)]),
        ("relu", vec![LayerSpec::dense(4, 3), LayerSpec::act(Activation::Relu)]),
        ("leaky_relu", vec![LayerSpec::dense(4, 3), LayerSpec::act(Activation::LeakyRelu)]),
        ("softmax", vec![LayerSpec::dense(4, 3), LayerSpec::act(Activation::Softmax)]),
    ];
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (name, specs) in cases {
        let e = layer_check(specs, 3, 11);
        worst = worst.max(e);
        lines.push(format!("{name} {e:.1e}"));
    }

    // both agent networks, K = 2, hidden = 4
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = AgentConfig { hidden: 4, seed: 5, ..Default::default() };
    let mut agent = DdpgAgent::new(2, cfg, 0).unwrap();
    let exps: Vec<Experience> = (0..6)
        .map(|i| {
            let mu: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            Experience {
                state: (0..6).map(|_| rng.random_range(0.0..1.0)).collect(),
                action: constrain(mu, &[-1.0, -2.0], 0.5).flat(),
                reward: rng.random_range(-2.0..0.0),
                next_state: (0..6).map(|_| rng.random_range(0.0..1.0)).collect(),
                priority: 0.0,
                seq: i,
            }
        })
        .collect();
    let batch: Vec<&Experience> = exps.iter().collect();
    let targets = agent.td_targets(&batch).unwrap();
    let (_, gq) = agent.value_gradient(&batch, &targets).unwrap();
    let fq = fd_params(&agent.q, |q| DdpgAgent::value_loss(q, &batch, &targets).unwrap());
    let eq = gq.iter().zip(&fq).map(|(a, b)| rel_err(*a, *b)).fold(0.0, f64::max);
    let states: Vec<&[f64]> = exps.iter().map(|e| e.state.as_slice()).collect();
    let (_, gp) = agent.policy_gradient(&states).unwrap();
    let q = agent.q.clone();
    let fp = fd_params(&agent.pi, |pi| DdpgAgent::actor_objective(pi, &q, &states, 0.5).unwrap());
    let ep = gp.iter().zip(&fp).map(|(a, b)| rel_err(*a, *b)).fold(0.0, f64::max);
    lines.push(format!("value net {eq:.1e}"));
    lines.push(format!("policy net {ep:.1e}"));
    worst = worst.max(eq).max(ep);
    let (t_ok, t) = within("runtime", start, 30.0);
    (worst < 1e-3 && t_ok, format!("max rel err {worst:.1e} ({}); {t}", lines.join(", ")))
}

// ---------------------------------------------------------------- 4

fn shard_of(ds: &Dataset, shards: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by_key(|&i| ds.label(i));
    let (n, mut pos) = (ds.len(), 0);
    let mut out = vec![0; n];
    for s in 0..shards {
        let len = n / shards + usize::from(s < n % shards);
        for &i in &order[pos..pos + len] {
            out[i] = s;
        }
        pos += len;
    }
    out
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (train, _) = mnist();
    let mut failures = Vec::new();
    let mut checked = 0;
    for n in [10, 100] {
        let shards_eq = shard_of(&train, 2 * n);
        let shards_ne = shard_of(&train, 10 * n);
        for method in PartitionMethod::ALL {
            let spec = PartitionSpec { method, clients: n, delta: 0.6, seed: 3, ..Default::default() };
            let m = match partition(&train, &spec) {
                Ok(m) => m,
                Err(e) => {
                    failures.push(format!("{method} N={n}: {e}"));
                    continue;
                }
            };
            let mut fail = |what: &str| failures.push(format!("{method} N={n}: {what}"));
            let mut seen = HashSet::new();
            let disjoint = m.assignments.iter().flatten().all(|&i| seen.insert(i));
            if !disjoint {
                fail("overlap");
            }
            if seen.len() + m.unassigned().len() != train.len()
                || m.unassigned().iter().any(|i| seen.contains(i))
            {
                fail("conservation");
            }
            if m.client_count() != n {
                fail("client count");
            }
            if method.is_clustered() {
                let main = m.groups.as_ref().map_or(0, |g| g.iter().filter(|&&x| x == 0).count());
                if main != (0.6 * n as f64).round() as usize {
                    fail("main group size");
                }
            }
            match method {
                PartitionMethod::ClusteredEqual => {
                    if !m.histograms.iter().all(|h| h.iter().filter(|&&c| c > 0).count() == 2) {
                        fail("label count");
                    }
                    let c = m.sample_counts();
                    if c.iter().max().unwrap() - c.iter().min().unwrap() > 1 {
                        fail("count spread");
                    }
                }
                PartitionMethod::Equal => {
                    let mut all = HashSet::new();
                    for idx in &m.assignments {
                        let s: HashSet<usize> = idx.iter().map(|&i| shards_eq[i]).collect();
                        if s.len() != 2 {
                            fail("shards per client");
                        }
                        all.extend(s);
                    }
                    if all.len() != 2 * n {
                        fail("total shards");
                    }
                }
                PartitionMethod::NonEqual => {
                    for idx in &m.assignments {
                        let s: HashSet<usize> = idx.iter().map(|&i| shards_ne[i]).collect();
                        if !(6..=14).contains(&s.len()) {
                            fail("shards per client");
                        }
                    }
                }
                _ => {}
            }
            checked += 1;
        }
    }
    let (t_ok, t) = within("runtime", start, 20.0);
    let ok = failures.is_empty() && t_ok;
    let detail = if failures.is_empty() {
        format!("{checked} method/N combinations hold; {t}")
    } else {
        format!("{}; {t}", failures.join("; "))
    };
    (ok, detail)
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = 10;
    let cfg = AgentConfig { hidden: 32, ..Default::default() };
    let agent = DdpgAgent::new(k, cfg.clone(), 0).unwrap();
    let (mut bound, mut sums, mut positive) = (0, 0, 0);
    let mut worst_sum = 0.0f64;
    for i in 0..10_000 {
        let scale = [0.1, 1.0, 10.0][i % 3];
        let state: Vec<f64> = (0..3 * k).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let a = select_action(&agent.pi, &state, true, 0.1, cfg.beta, &mut rng).unwrap();
        bound += usize::from(a.mu.iter().zip(&a.sigma).all(|(m, s)| *s <= cfg.beta * m.abs()));
        let w = impacts_from_action(&a, &mut rng).unwrap();
        let err = (w.as_slice().iter().sum::<f64>() - 1.0).abs();
        worst_sum = worst_sum.max(err);
        sums += usize::from(err <= 1e-9);
        positive += usize::from(w.as_slice().iter().all(|&x| x > 0.0));
    }
    (
        bound == 10_000 && sums == 10_000 && positive == 10_000,
        format!("sigma bound {bound}/10000, sum-to-1 {sums}/10000 (max err {worst_sum:.1e}), positive {positive}/10000"),
    )
}

// ---------------------------------------------------------------- 6

fn mnist_config(aggregator: AggregatorKind, seed: u64, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.dir = repo_root().join("data/mnist");
    cfg.round.max_rounds = 150;
    cfg.round.aggregator = aggregator;
    cfg.seed = Some(seed);
    cfg.output_dir = dir.to_path_buf();
    cfg.resolved()
}

fn criterion_6(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let mut best = [Vec::new(), Vec::new()];
    let mut var = [Vec::new(), Vec::new()];
    let mut impact_ms = Vec::new();
    for seed in 0..3 {
        for (i, agg) in [AggregatorKind::FedAvg, AggregatorKind::FedDrl].into_iter().enumerate() {
            let cfg = mnist_config(agg, seed, &tmp.join(format!("c6-{i}-{seed}")));
            let run = run_to_dir(&cfg).unwrap();
            best[i].push(best_top1(&run.log).unwrap());
            var[i].push(tail_loss_variance(&run.log, 50).unwrap());
            if agg == AggregatorKind::FedDrl {
                let r = run.log.records();
                impact_ms.push(r.iter().map(|x| x.impact_secs).sum::<f64>() / r.len() as f64 * 1e3);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (b_avg, b_drl) = (mean(&best[0]), mean(&best[1]));
    let (v_avg, v_drl) = (mean(&var[0]), mean(&var[1]));
    let acc_ok = b_drl >= b_avg - 0.005;
    let var_ok = v_drl <= v_avg;
    let (t_ok, t) = within("runtime", start, 1800.0);
    (
        acc_ok && var_ok && t_ok,
        format!(
            "best top-1 fedavg {:.2}% feddrl {:.2}% ({}); tail loss var fedavg {v_avg:.5} feddrl {v_drl:.5} ({}); per-seed var fedavg {:?} feddrl {:?}; feddrl impact {:.2} ms/round; {t}",
            b_avg * 100.0,
            b_drl * 100.0,
            if acc_ok { "ok" } else { "below parity" },
            if var_ok { "ok" } else { "higher" },
            var[0].iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>(),
            var[1].iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>(),
            mean(&impact_ms),
        ),
    )
}

// ---------------------------------------------------------------- 7

fn synthetic_config(aggregator: AggregatorKind, delta: f64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.kind = DatasetKind::Synthetic;
    cfg.dataset.synthetic = SyntheticSpec {
        classes: 10,
        dims: 20,
        samples: 5000,
        test_samples: 1000,
        separation: 0.6,
        seed: 0,
    };
    cfg.partition.delta = delta;
    cfg.round.max_rounds = 150;
    cfg.round.aggregator = aggregator;
    cfg.seed = Some(seed);
    cfg.resolved()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for agg in [AggregatorKind::FedAvg, AggregatorKind::FedProx, AggregatorKind::FedDrl] {
        let mut mean_best = [0.0; 2];
        for (j, delta) in [0.2, 0.6].into_iter().enumerate() {
            for seed in 0..3 {
                let cfg = synthetic_config(agg, delta, seed);
                let env = build_environment(&cfg).unwrap();
                let run = run_experiment(&cfg, &env).unwrap();
                mean_best[j] += best_top1(&run.log).unwrap() / 3.0;
            }
        }
        let pass = mean_best[1] <= mean_best[0] + 0.01;
        ok &= pass;
        parts.push(format!(
            "{} d=0.2 {:.2}% d=0.6 {:.2}%",
            ExperimentConfig { round: RoundConfig { aggregator: agg, ..Default::default() }, ..Default::default() }
                .method_name(),
            mean_best[0] * 100.0,
            mean_best[1] * 100.0
        ));
    }
    let (t_ok, t) = within("runtime", start, 1800.0);
    (ok && t_ok, format!("{}; {t}", parts.join(", ")))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = 10;
    let agent = DdpgAgent::new(k, AgentConfig::default(), 0).unwrap();
    let mut policy = FedDrlPolicy::new(agent, 0);
    policy.train = false;
    let mut times = Vec::new();
    for round in 1..=200 {
        let reports: Vec<ClientReport> = (0..k)
            .map(|c| ClientReport {
                client_id: c,
                loss_before: rng.random_range(0.1..3.0),
                loss_after: rng.random_range(0.1..3.0),
                num_samples: rng.random_range(10..600),
                params: ModelParams::new(vec![]),
            })
            .collect();
        let t = Instant::now();
        policy.impacts(round, &reports).unwrap();
        times.push(t.elapsed().as_secs_f64() * 1e3);
        policy.learn(round).unwrap();
    }
    let mean_ms = times.iter().sum::<f64>() / times.len() as f64;

    // aggregation time against parameter count
    // Four clients keep the working set (up to 40 MB) in one memory regime on
    // this VM; larger sets cross cache and host page-fault cliffs that have
    // nothing to do with the aggregation loop.
    let clients = 4;
    let sizes = [250_000usize, 375_000, 500_000, 750_000, 1_000_000];
    let mut secs = Vec::new();
    for &p in &sizes {
        let reports: Vec<ClientReport> = (0..clients)
            .map(|c| ClientReport {
                client_id: c,
                loss_before: 1.0,
                loss_after: 1.0,
                num_samples: 10,
                params: ModelParams::new(vec![c as f64; p]),
            })
            .collect();
        let alpha = ImpactVector::new(vec![0.25; clients]).unwrap();
        std::hint::black_box(aggregate_weighted(&reports, &alpha).unwrap());
        let reps: Vec<f64> = (0..21)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(aggregate_weighted(&reports, &alpha).unwrap());
                t.elapsed().as_secs_f64()
            })
            .collect();
        secs.push(reps.into_iter().fold(f64::INFINITY, f64::min));
    }
    // least-squares slope of log(time) on log(size)
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = secs.iter().map(|s| s.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let linear = (0.75..=1.25).contains(&slope);
    (
        mean_ms < 50.0 && linear,
        format!(
            "impact computation {mean_ms:.3} ms/round at K=10 (hidden 256); aggregation over 4 clients {} ms for {:?} params, log-log slope {slope:.2}",
            secs.iter().map(|s| format!("{:.2}", s * 1e3)).collect::<Vec<_>>().join("/"),
            sizes
        ),
    )
}

// ---------------------------------------------------------------- 9

const DETERMINISTIC_FILES: [&str; 9] = [
    "config.toml",
    "manifest.txt",
    "stats.csv",
    "stats_summary.csv",
    "rounds.csv",
    "model.ckpt",
    "summary.txt",
    "agent.ckpt",
    "experiences.bin",
];

type Snapshot = Vec<(&'static str, Option<Vec<u8>>)>;

fn snapshot(dir: &Path) -> Snapshot {
    DETERMINISTIC_FILES.iter().map(|&f| (f, std::fs::read(dir.join(f)).ok())).collect()
}

fn compare(a: &Snapshot, b: &Snapshot) -> std::result::Result<usize, String> {
    let mut n = 0;
    for ((f, x), (_, y)) in a.iter().zip(b) {
        match (x, y) {
            (Some(x), Some(y)) if x == y => n += 1,
            (Some(_), Some(_)) => return Err(format!("{f} differs")),
            (None, None) => {}
            _ => return Err(format!("{f} present in only one run")),
        }
    }
    Ok(n)
}

fn criterion_9(tmp: &Path) -> Outcome {
    let mut configs = Vec::new();
    let mut c = synthetic_config(AggregatorKind::FedDrl, 0.6, 9);
    c.round.max_rounds = 40;
    c.agent.hidden = 32;
    c.agent.batch_size = 16;
    configs.push(("feddrl online", c.clone()));
    c.feddrl.mode = AgentMode::TwoStage;
    c.agent.offline_updates = 20;
    c.round.max_rounds = 25;
    configs.push(("feddrl two-stage", c));
    let mut m = mnist_config(AggregatorKind::FedProx, 9, tmp);
    m.round.max_rounds = 3;
    m.partition.method = PartitionMethod::NonEqual;
    configs.push(("fedprox mnist", m));

    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (name, mut cfg)) in configs.into_iter().enumerate() {
        // same output directory each time, since config.toml records it
        cfg.output_dir = tmp.join(format!("c9-{i}"));
        run_to_dir(&cfg).unwrap();
        let first = snapshot(&cfg.output_dir);
        run_to_dir(&cfg).unwrap();
        let second = snapshot(&cfg.output_dir);
        // and once more from the written config echo
        let echo = std::fs::read_to_string(cfg.output_dir.join("config.toml")).unwrap();
        run_to_dir(&ExperimentConfig::from_toml(&echo, &[]).unwrap()).unwrap();
        let third = snapshot(&cfg.output_dir);
        match (compare(&first, &second), compare(&first, &third)) {
            (Ok(n), Ok(_)) => parts.push(format!("{name}: {n} files identical across rerun and config-echo rerun")),
            (Err(e), _) => {
                ok = false;
                parts.push(format!("{name}: rerun {e}"));
            }
            (_, Err(e)) => {
                ok = false;
                parts.push(format!("{name}: config-echo rerun {e}"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let tmp = tempfile::tempdir().unwrap();
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    let criteria: [(usize, &dyn Fn() -> Outcome); 9] = [
        (1, &criterion_1),
        (2, &criterion_2),
        (3, &criterion_3),
        (4, &criterion_4),
        (5, &criterion_5),
        (6, &|| criterion_6(tmp.path())),
        (7, &criterion_7),
        (8, &criterion_8),
        (9, &|| criterion_9(tmp.path())),
    ];
    for (n, check) in criteria {
        if !run(n) {
            continue;
        }
        let (pass, detail) = check();
        writeln!(out, "criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
        out.flush().unwrap();
        if !pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        writeln!(out, "failed criteria: {failed:?}").unwrap();
        std::process::exit(1);
    }
}
