//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its pass/fail line even when all of them pass.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cosync_core::calibrate::{load_targets, TargetRow};
use cosync_core::config::{
    parse_config, AgentSpec, Channel, ObstacleSpec, Placement, ScenarioConfig, TransportKind, WindowAdaptation,
};
use cosync_core::harness::{compare_grid, run_cells, run_grid};
use cosync_core::net::expected::expected_tcp_delivered;
use cosync_core::net::packet::chunk_payload;
use cosync_core::net::profile::{LinkClass, LinkProfile, Profile, IDEAL, PAPER_V1};
use cosync_core::net::transport::{transmit_tcp_with, HopChannel, Link, LossSource};
use cosync_core::net::{per_packet_loss_probability, LinkModel};
use cosync_core::orchestrator::{run_scenario, CosimState};
use cosync_core::physics::AgentKind;
use cosync_core::pubsub::{Architecture, Role};
use cosync_core::sync::{
    adapt_window, advance_timestamp, average_delay, packet_loss_probability, SyncWindow, VelocityPair,
};
use num_rational::Ratio;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn scenario(name: &str) -> ScenarioConfig {
    parse_config(crate_path(&format!("scenarios/{name}"))).expect("committed scenario parses")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(label: &str, got: f64, want: f64) -> Result<(), String> {
    let ok = if want == 0.0 {
        got.abs() <= 1e-12
    } else {
        ((got - want) / want).abs() <= 1e-12
    };
    ensure(ok, || format!("{label}: got {got:e}, want {want:e}"))
}

/// Uniform in `[lo, hi)` from a ChaCha stream.
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn e<T>(r: cosync_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn unit_exactness() -> Check {
    let mut n = 0;
    for (base, vp, vs, want) in [(1.0, 2.0, 2.0, 1.0), (1.0, 2.0, 0.0, 1.002), (1.0, 0.0, 150.0, 1.15)] {
        let w = e(adapt_window(e(SyncWindow::new(base))?, e(VelocityPair::new(vp, vs))?))?;
        close(&format!("adapt({base}, {vp}, {vs})"), w.adapted_ms, want)?;
        n += 1;
    }
    for (delivered, published, want) in [(10, 10, 0.0), (9, 10, 0.1), (0, 10, 1.0)] {
        close(
            &format!("loss({delivered}, {published})"),
            e(packet_loss_probability::<f64>(delivered, published))?,
            want,
        )?;
        n += 1;
    }
    for (c, want) in [
        ([0.0, 0.0, 0.0, 0.0], 0.0),
        ([0.001, 0.043, 0.0000003, 0.002], 0.0460003),
        ([0.01, 0.0, 0.0, 0.0], 0.01),
    ] {
        close(&format!("delay{c:?}"), e(average_delay(c[0], c[1], c[2], c[3]))?, want)?;
        n += 1;
    }
    for (t, w, want) in [(0.0, 1.0, 1.0), (5.0, 1.15, 6.15)] {
        let next = advance_timestamp(e(SyncWindow::starting_at(w, t))?);
        close(&format!("advance({t}, {w})"), next.start_time_ms, want)?;
        n += 1;
    }
    ensure(SyncWindow::<f64>::new(0.0).is_err(), || "zero window accepted".into())?;
    Ok(format!("{} examples to 1e-12, zero window rejected", n))
}

fn cell_errors(
    grid: &cosync_core::harness::GridResult,
    targets: &[TargetRow],
    link: &str,
) -> Result<(f64, f64), String> {
    let (mut el, mut ed) = (0.0f64, 0.0f64);
    for t in targets.iter().filter(|t| t.link.as_str() == link) {
        let row = grid
            .row(t.distance_m, t.channel)
            .ok_or_else(|| format!("{link}: no row for {} m {}", t.distance_m, t.channel))?;
        let dl = (row.l_p_pct - t.l_p_pct).abs();
        let dd = (row.pd_a_s - t.pd_a_s).abs();
        ensure(dl <= 10.0 && dd <= 0.2, || {
            format!(
                "{link} {} m {}: L_p {:.2} % vs {} %, PD_a {:.3} s vs {} s",
                t.distance_m, t.channel, row.l_p_pct, t.l_p_pct, row.pd_a_s, t.pd_a_s
            )
        })?;
        el = el.max(dl);
        ed = ed.max(dd);
    }
    Ok((el, ed))
}

fn table_reproduction() -> Check {
    let targets = load_targets(&crate_path("data/targets.csv")).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut detail = Vec::new();
    for (file, link) in [("ugv-ugv.cfg", "ugv-ugv"), ("ugv-uav.cfg", "ugv-uav")] {
        let cfg = scenario(file);
        ensure(cfg.profile == PAPER_V1 && cfg.seeds_per_cell >= 30, || {
            format!("{file} is not the 30-seed paper-v1 grid")
        })?;
        let grid = run_grid(&cfg, &cfg.distances, &[Channel::Los, Channel::Nlos]).map_err(|e| e.to_string())?;
        ensure(grid.rows.len() == 10, || format!("{file}: {} rows", grid.rows.len()))?;
        let (el, ed) = cell_errors(&grid, &targets, link)?;
        detail.push(format!("{link} max |dL_p| {el:.2} pp, max |dPD_a| {ed:.3} s"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("both grids took {secs:.1} s"))?;
    Ok(format!("{}; {secs:.2} s", detail.join("; ")))
}

fn architecture_ablation() -> Check {
    let cfg = scenario("ugv-uav.cfg");
    ensure(cfg.seeds_per_cell >= 30, || "fewer than 30 seeds".into())?;
    let cmp = compare_grid(&cfg, &cfg.distances, &[Channel::Nlos]).map_err(|e| e.to_string())?;
    let (pp, rel) = (cmp.loss_reduction_pp(), cmp.delay_reduction());
    ensure(pp >= 10.0 && rel >= 0.10, || {
        format!("loss reduction {pp:.2} pp, delay reduction {:.1} %", 100.0 * rel)
    })?;
    Ok(format!("NLOS UGV-UAV: L_p -{pp:.2} pp, PD_a -{:.1} %", 100.0 * rel))
}

fn transport_properties() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for file in ["ugv-ugv.cfg", "ugv-uav.cfg"] {
        let base = scenario(file);
        let runs = |t: TransportKind| {
            let mut c = base.clone();
            c.transport = t;
            run_cells(&c, &c.distances, &[Channel::Los, Channel::Nlos]).map_err(|e| e.to_string())
        };
        let (tcp, udp) = (runs(TransportKind::Tcp)?, runs(TransportKind::Udp)?);
        for (t, u) in tcp.iter().zip(&udp) {
            ensure(
                t.distance_m == u.distance_m && t.channel == u.channel && t.seed == u.seed,
                || "cell order differs".into(),
            )?;
            let at = || format!("{file} {} m {} seed {}", t.distance_m, t.channel, t.seed);
            ensure(t.report.loss_probability <= u.report.loss_probability, || {
                format!(
                    "{}: TCP L_p {} > UDP {}",
                    at(),
                    t.report.loss_probability,
                    u.report.loss_probability
                )
            })?;
            ensure(u.report.pd_a_mean_s <= t.report.pd_a_mean_s, || {
                format!(
                    "{}: UDP delay {} > TCP {}",
                    at(),
                    u.report.pd_a_mean_s,
                    t.report.pd_a_mean_s
                )
            })?;
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{checked} cell-seeds, {secs:.2} s"))
}

fn agent(id: &str, kind: AgentKind, position: [f64; 3], role: Role, topics: &[&str]) -> AgentSpec {
    AgentSpec {
        id: id.into(),
        kind,
        position,
        velocity: [0.0; 3],
        role,
        topics: topics.iter().map(|t| t.to_string()).collect(),
        address: id.into(),
    }
}

fn relay_hop() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut geometries = 0;
    while geometries < 100 {
        let p = [uniform(&mut rng, 0.0, 100.0), uniform(&mut rng, 0.0, 100.0), 0.0];
        let s = [uniform(&mut rng, 0.0, 100.0), uniform(&mut rng, 0.0, 100.0), 0.0];
        let r = [
            uniform(&mut rng, 0.0, 100.0),
            uniform(&mut rng, 0.0, 100.0),
            uniform(&mut rng, 0.0, 40.0),
        ];
        // Non-collinear: the relay sits at least 1 m off the direct line.
        let (ps, pr) = ([s[0] - p[0], s[1] - p[1], 0.0], [r[0] - p[0], r[1] - p[1], r[2]]);
        let cross = [
            ps[1] * pr[2] - ps[2] * pr[1],
            ps[2] * pr[0] - ps[0] * pr[2],
            ps[0] * pr[1] - ps[1] * pr[0],
        ];
        let len = (ps[0] * ps[0] + ps[1] * ps[1]).sqrt();
        if len < 1.0 || (cross.iter().map(|c| c * c).sum::<f64>()).sqrt() / len < 1.0 {
            continue;
        }
        let seed = rng.next_u64() % 1000;
        let mut cfg = ScenarioConfig {
            name: "relay".into(),
            agents: vec![
                agent("pub", AgentKind::Ugv, p, Role::Publisher, &["/t"]),
                agent("sub", AgentKind::Ugv, s, Role::Subscriber, &["/t"]),
                agent("relay", AgentKind::Uav, r, Role::Relay, &[]),
            ],
            master: Some("relay".into()),
            payload_bytes: 50 * 502,
            seed,
            ..Default::default()
        };
        for (profile, transport, mean_only) in [
            (PAPER_V1, TransportKind::Udp, true),
            (IDEAL, TransportKind::Udp, false),
            (IDEAL, TransportKind::Tcp, false),
            (PAPER_V1, TransportKind::Tcp, true),
        ] {
            cfg.profile = profile.into();
            cfg.transport = transport;
            let mut run = |arch| {
                cfg.architecture = arch;
                run_scenario(&cfg).map_err(|e| e.to_string())
            };
            let (direct, relayed) = (run(Architecture::Masterless)?, run(Architecture::Master)?);
            let at = || format!("geometry {geometries} ({profile}, {transport}) pub {p:?} sub {s:?} relay {r:?}");
            ensure(relayed.pairs[0].delivered > 0, || {
                format!("{}: relay delivered nothing", at())
            })?;
            ensure(relayed.pd_a_mean_s > direct.pd_a_mean_s, || {
                format!(
                    "{}: master {} s <= masterless {} s",
                    at(),
                    relayed.pd_a_mean_s,
                    direct.pd_a_mean_s
                )
            })?;
            if !mean_only {
                ensure(relayed.pd_a_sum_s > direct.pd_a_sum_s, || {
                    format!("{}: transfer delay not larger", at())
                })?;
            }
        }
        geometries += 1;
    }
    Ok(format!(
        "{geometries} geometries: per-packet delay for UDP and TCP on {PAPER_V1} and {IDEAL}, transfer delay on {IDEAL}"
    ))
}

fn profile_with(model: LinkModel<f64>) -> Profile {
    let links: BTreeMap<LinkClass, LinkProfile> = LinkClass::ALL
        .into_iter()
        .map(|c| {
            (
                c,
                LinkProfile {
                    model,
                    material_db: BTreeMap::new(),
                },
            )
        })
        .collect();
    Profile {
        name: "random".into(),
        links,
    }
}

fn monotonicity() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let distances: Vec<f64> = (1..=10).map(|i| 9.0 * i as f64).collect();
    for m in 0..100 {
        let model = LinkModel {
            path_loss_exponent: uniform(&mut rng, 1.6, 6.0),
            reference_loss_db: uniform(&mut rng, 20.0, 60.0),
            loss_steepness: uniform(&mut rng, 0.05, 3.0),
            snr_threshold_db: uniform(&mut rng, 0.0, 20.0),
            processing_delay_s: uniform(&mut rng, 0.0, 1e-3),
            ..Default::default()
        };
        let wall_db = uniform(&mut rng, 1.0, 30.0);
        let at = |d: f64, a: f64| per_packet_loss_probability(&model, d, a);
        for w in distances.windows(2) {
            ensure(at(w[1], 0.0) >= at(w[0], 0.0), || {
                format!("model {m}: p falls from {} to {} m", w[0], w[1])
            })?;
        }
        for &d in &distances {
            ensure(at(d, wall_db) >= at(d, 0.0), || {
                format!("model {m}: obstruction lowers p at {d} m")
            })?;
        }

        // End to end, same seed: loss never falls with distance or an added wall.
        let path = dir.path().join(format!("m{m}.profile"));
        std::fs::write(&path, profile_with(model).emit()).map_err(|e| e.to_string())?;
        let transport = if m % 2 == 0 {
            TransportKind::Tcp
        } else {
            TransportKind::Udp
        };
        let base = ScenarioConfig {
            profile: path.display().to_string(),
            transport,
            payload_bytes: 40 * 502,
            seed: m,
            obstacles: vec![ObstacleSpec {
                name: "wall".into(),
                min: [0.0, 0.0, 0.0],
                max: [1.0, 100.0, 30.0],
                attenuation_db: Some(wall_db),
                material: None,
                placement: Placement::Midway,
            }],
            ..Default::default()
        };
        let mut prev = [0.0f64; 2];
        for &d in &distances {
            let mut lp = [0.0f64; 2];
            for (i, ch) in [Channel::Los, Channel::Nlos].into_iter().enumerate() {
                let cell = base.with_cell(d, ch).map_err(|e| e.to_string())?;
                let r = run_scenario(&cell).map_err(|e| e.to_string())?;
                ensure(!r.cap_hit, || format!("model {m}: window cap hit"))?;
                lp[i] = r.loss_probability;
                ensure(lp[i] >= prev[i], || {
                    format!("model {m} {transport} {ch}: L_p falls at {d} m")
                })?;
            }
            ensure(lp[1] >= lp[0], || {
                format!("model {m} {transport}: wall lowers L_p at {d} m")
            })?;
            prev = lp;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "100 models x 10 distances, channel and end to end, {secs:.2} s"
    ))
}

/// Replays a fixed prefix of loss verdicts, then answers "delivered" while
/// recording every question asked.
struct Scripted {
    prefix: Vec<bool>,
    trace: Vec<bool>,
    asked: Vec<(u64, u32)>,
}

impl LossSource for Scripted {
    fn is_lost(&mut self, seq: u64, attempt: u32) -> bool {
        let lost = self.prefix.get(self.trace.len()).copied().unwrap_or(false);
        self.trace.push(lost);
        self.asked.push((seq, attempt));
        lost
    }
}

/// Exhaustive expectation of delivered packets over every drop pattern.
fn enumerate(packets: usize, window: u32, retries: u32, p: Ratio<i64>) -> Result<Ratio<i64>, String> {
    let model = LinkModel::<f64>::default();
    let link = Link {
        model: &model,
        channel: HopChannel::new(10.0, 0.0).map_err(|e| e.to_string())?,
    };
    let mut expected = Ratio::from_integer(0);
    let mut prefix = Vec::new();
    loop {
        let mut src = Scripted {
            prefix: prefix.clone(),
            trace: Vec::new(),
            asked: Vec::new(),
        };
        let pkts = chunk_payload(packets as u64 * 100, 100).map_err(|e| e.to_string())?;
        let out = transmit_tcp_with(pkts, &link, window, retries, &mut src).map_err(|e| e.to_string())?;
        let mut seen = src.asked.clone();
        seen.sort_unstable();
        seen.dedup();
        ensure(seen.len() == src.asked.len(), || {
            "an attempt was evaluated twice".into()
        })?;
        let weight = src.trace.iter().fold(Ratio::from_integer(1), |w, &lost| {
            w * if lost { p } else { Ratio::from_integer(1) - p }
        });
        expected += weight * Ratio::from_integer(out.delivered.len() as i64);
        // Next pattern: flip the last "delivered" verdict and drop what follows.
        match src.trace.iter().rposition(|&lost| !lost) {
            Some(i) => {
                prefix = src.trace[..i].to_vec();
                prefix.push(true);
            }
            None => return Ok(expected),
        }
    }
}

fn tcp_oracle() -> Check {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for packets in 1..=4 {
        for retries in 0..=2 {
            for window in 1..=4 {
                for p in [
                    Ratio::new(1, 3),
                    Ratio::new(1, 2),
                    Ratio::new(3, 10),
                    Ratio::new(9, 10),
                    Ratio::new(1, 7),
                ] {
                    let got = enumerate(packets, window, retries, p)?;
                    let closed = expected_tcp_delivered(packets as u64, p, retries);
                    ensure(got == closed, || {
                        format!("n {packets}, R {retries}, W {window}, p {p}: {got} != {closed}")
                    })?;
                    let pf = *p.numer() as f64 / *p.denom() as f64;
                    let f: f64 = expected_tcp_delivered(packets as u64, pf, retries);
                    let g = *got.numer() as f64 / *got.denom() as f64;
                    worst = worst.max((f - g).abs());
                    ensure((f - g).abs() <= 1e-9, || format!("float form off by {}", (f - g).abs()))?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases exact over rationals, float within {worst:e}"))
}

fn determinism() -> Check {
    let mut bytes = 0;
    for file in ["ugv-ugv.cfg", "ugv-uav.cfg"] {
        let mut cfg = scenario(file);
        cfg.seeds_per_cell = 5;
        let csv = |threads: usize, transport: TransportKind| -> Result<String, String> {
            let mut c = cfg.clone();
            c.transport = transport;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| {
                let grid = run_grid(&c, &c.distances, &[Channel::Los, Channel::Nlos]).map_err(|e| e.to_string())?;
                grid.to_csv_string().map_err(|e| e.to_string())
            })
        };
        for t in [TransportKind::Tcp, TransportKind::Udp] {
            let (a, b, c) = (csv(1, t)?, csv(1, t)?, csv(4, t)?);
            ensure(a == b && a == c, || format!("{file} {t}: CSV differs between runs"))?;
            bytes += a.len();
        }
        if cfg.master.is_some() {
            let a = compare_grid(&cfg, &cfg.distances, &[Channel::Nlos]).map_err(|e| e.to_string())?;
            let b = compare_grid(&cfg, &cfg.distances, &[Channel::Nlos]).map_err(|e| e.to_string())?;
            let (a, b) = (a.merged().to_csv_string(), b.merged().to_csv_string());
            ensure(a == b, || format!("{file}: compare CSV differs"))?;
        }
    }
    Ok(format!(
        "grids and compare identical across repeats and thread counts ({bytes} bytes)"
    ))
}

fn lockstep() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut windows = 0u64;
    let mut runs = 0;
    while windows < 5000 {
        let pos = |rng: &mut ChaCha8Rng, z: f64| [uniform(rng, 0.0, 100.0), uniform(rng, 0.0, 100.0), z];
        let vel = |rng: &mut ChaCha8Rng| [uniform(rng, -20.0, 20.0), uniform(rng, -20.0, 20.0), 0.0];
        let mut agents = Vec::new();
        let n = 2 + (rng.next_u32() % 3) as usize;
        for i in 0..n {
            let kind = if rng.next_u32() % 2 == 0 {
                AgentKind::Ugv
            } else {
                AgentKind::Uav
            };
            let z = if kind == AgentKind::Uav {
                uniform(&mut rng, 1.0, 40.0)
            } else {
                0.0
            };
            let role = if i == 0 {
                Role::Publisher
            } else {
                [Role::Subscriber, Role::Both][(rng.next_u32() % 2) as usize]
            };
            let mut a = agent(&format!("a{i}"), kind, pos(&mut rng, z), role, &["/t"]);
            a.velocity = vel(&mut rng);
            agents.push(a);
        }
        agents.push(agent("relay", AgentKind::Uav, pos(&mut rng, 20.0), Role::Relay, &[]));
        let pick = |rng: &mut ChaCha8Rng, k: u32| rng.next_u32() % k;
        let cfg = ScenarioConfig {
            name: format!("fuzz{runs}"),
            agents,
            obstacles: vec![ObstacleSpec {
                name: "block".into(),
                min: [40.0, 0.0, 0.0],
                max: [60.0, 100.0, uniform(&mut rng, 1.0, 30.0)],
                attenuation_db: Some(uniform(&mut rng, 0.0, 30.0)),
                material: None,
                placement: Placement::Fixed,
            }],
            channel: [Channel::Los, Channel::Nlos][pick(&mut rng, 2) as usize],
            transport: [TransportKind::Tcp, TransportKind::Udp][pick(&mut rng, 2) as usize],
            architecture: [Architecture::Masterless, Architecture::Master][pick(&mut rng, 2) as usize],
            master: Some("relay".into()),
            profile: [PAPER_V1, IDEAL][pick(&mut rng, 2) as usize].into(),
            payload_bytes: 1 + rng.next_u64() % 60_000,
            segment_bytes: 100 + pick(&mut rng, 1400),
            tcp_window_bytes: 500 + pick(&mut rng, 8000),
            max_retries: pick(&mut rng, 6),
            base_window_ms: uniform(&mut rng, 0.1, 3.0),
            window_adaptation: [
                WindowAdaptation::Absolute,
                WindowAdaptation::Signed,
                WindowAdaptation::Fixed,
            ][pick(&mut rng, 3) as usize],
            loss_threshold: uniform(&mut rng, 0.0, 1.0),
            seed: rng.next_u64(),
            max_windows: 2000,
            ..Default::default()
        };
        let mut state = CosimState::from_config(&cfg).map_err(|e| format!("{}: {e}", cfg.name))?;
        while !state.is_done() && (state.history().len() as u64) < cfg.max_windows {
            state.run_window().map_err(|e| format!("{}: {e}", cfg.name))?;
            let t = state.window().start_time_ms;
            ensure(state.world().sim_time_ms() == t && state.network_time_ms() == t, || {
                format!(
                    "{}: clocks {} / {} / {t}",
                    cfg.name,
                    state.world().sim_time_ms(),
                    state.network_time_ms()
                )
            })?;
            windows += 1;
        }
        runs += 1;
    }
    Ok(format!("{runs} fuzzed runs, {windows} windows in lockstep"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("unit exactness", unit_exactness),
        ("calibrated table reproduction", table_reproduction),
        ("architecture ablation", architecture_ablation),
        ("transport properties", transport_properties),
        ("relay-hop delay", relay_hop),
        ("loss monotonicity", monotonicity),
        ("TCP oracle equivalence", tcp_oracle),
        ("determinism", determinism),
        ("lockstep invariant", lockstep),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{ms} ms]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{ms} ms]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
