//! Fits one link class of a profile to a target `(distance, channel) ->
//! (PD_a, L_p)` table.
//!
//! The transport's response depends on the channel only through the
//! per-frame loss probability `p`, so the fit first tabulates the real
//! simulator at forced values of `p`: mean loss `L(p)`, frames on air `T(p)`
//! and summed queue depth `Q(p)`. A cell then predicts
//!
//! ```text
//! p = logistic(k * (thr - tx + noise + PL0 + 10 n log10(d) + sum of obstacle dB))
//! L = L(p)
//! D = T(p) * (D_pr + D_t + d / c) + Q(p) / queue_rate
//! ```
//!
//! and a seeded differential evolution, polished by compass search, minimises
//! `max over cells of max(|L - L*| / 0.1, |D - D*| / 0.2)` plus a 1e-3
//! weighted mean of the same terms. A score at or below 1 means every cell
//! is inside the ±10 pp / ±0.2 s band.
//! The queue rate is held at or above `(B - 1) / (D_pr + D_t)` frames per
//! second, `B` being the per-window frame budget, so the last frame of a
//! window never queues longer than one frame takes to process and send.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::config::{Channel, ScenarioConfig};
use crate::error::{Error, Result};
use crate::net::channel::logistic;
use crate::net::profile::{LinkClass, Profile};
use crate::orchestrator::{CosimState, RunOptions};
use crate::physics::distance;
use crate::pubsub::{Architecture, FabricConfig};

/// A tabulated cell to fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRow {
    pub link: LinkClass,
    pub distance_m: f64,
    pub channel: Channel,
    pub pd_a_s: f64,
    /// 0-100.
    pub l_p_pct: f64,
}

/// Reads `link,distance_m,channel,pd_a_s,l_p_pct` rows.
pub fn parse_targets(text: &str, origin: &str) -> Result<Vec<TargetRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::config(format!("{origin}: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("{origin}: missing column `{name}`")))
    };
    let (c_link, c_d, c_ch, c_pd, c_lp) = (
        col("link")?,
        col("distance_m")?,
        col("channel")?,
        col("pd_a_s")?,
        col("l_p_pct")?,
    );
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::config(format!("{origin}: {e}")))?;
        let bad = |field: &str, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            field: field.to_string(),
            message: msg,
        };
        let num = |c: usize, field: &str| -> Result<f64> {
            rec[c]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| bad(field, format!("expected a number >= 0, got `{}`", &rec[c])))
        };
        out.push(TargetRow {
            link: LinkClass::parse(&rec[c_link])
                .ok_or_else(|| bad("link", format!("unknown link class `{}`", &rec[c_link])))?,
            distance_m: num(c_d, "distance_m")?,
            channel: crate::config::parse_channel(&rec[c_ch])
                .ok_or_else(|| bad("channel", format!("expected los or nlos, got `{}`", &rec[c_ch])))?,
            pd_a_s: num(c_pd, "pd_a_s")?,
            l_p_pct: num(c_lp, "l_p_pct")?,
        });
    }
    Ok(out)
}

pub fn load_targets(path: &Path) -> Result<Vec<TargetRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_targets(&text, &path.display().to_string())
}

/// Transport response at one forced per-frame loss probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogatePoint {
    pub p: f64,
    pub loss: f64,
    pub frames: f64,
    pub queue_depth_sum: f64,
}

/// `L(p)`, `T(p)`, `Q(p)` on a grid of `p`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub points: Vec<SurrogatePoint>,
    /// Frames each window may put on air.
    pub budget: u64,
}

impl Surrogate {
    pub fn default_grid() -> Vec<f64> {
        let mut ps: Vec<f64> = (0..45).map(|i| f64::from(i) * 0.02).collect();
        ps.extend((0..50).map(|i| 0.9 + f64::from(i) * 0.002));
        ps.push(0.999);
        ps
    }

    pub fn at(&self, p: f64) -> SurrogatePoint {
        let pts = &self.points;
        if p <= pts[0].p {
            return pts[0];
        }
        let last = pts[pts.len() - 1];
        if p >= last.p {
            return last;
        }
        let i = pts.partition_point(|x| x.p <= p);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (p - a.p) / (b.p - a.p);
        let lerp = |x: f64, y: f64| x + t * (y - x);
        SurrogatePoint {
            p,
            loss: lerp(a.loss, b.loss),
            frames: lerp(a.frames, b.frames),
            queue_depth_sum: lerp(a.queue_depth_sum, b.queue_depth_sum),
        }
    }
}

/// Runs the configured transfer (masterless, LOS, first listed distance) with
/// the link forced to loss `p`, averaged over the config's cell seeds.
pub fn build_surrogate(config: &ScenarioConfig, grid: &[f64]) -> Result<Surrogate> {
    let d_ref = config.distances.first().copied().unwrap_or(20.0);
    let mut cfg = config.with_cell(d_ref, Channel::Los)?;
    cfg.architecture = Architecture::Masterless;
    let scenario = cfg.build()?;
    let m = scenario.matches[0].clone();
    let a = scenario.world.agent(&m.publisher).expect("matched");
    let b = scenario.world.agent(&m.subscriber).expect("matched");
    let class = LinkClass::between(a.kind, b.kind);
    let dist = distance(a, b);
    let base = scenario.profile.link(class).model;
    let snr = base.snr_db(dist, 0.0);
    let seeds: Vec<u64> = cfg.cell_seeds().collect();
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let runs: Vec<(usize, f64, f64, f64, u64)> = jobs
        .into_par_iter()
        .map(|(i, seed)| {
            let p = grid[i];
            let mut profile = scenario.profile.clone();
            let link = profile.links.get_mut(&class).expect("profiles carry every class");
            link.model.loss_steepness = 1.0;
            link.model.snr_threshold_db = if p <= 0.0 {
                snr - 1000.0
            } else {
                snr + (p / (1.0 - p)).ln()
            };
            link.model.processing_delay_s = 0.0;
            link.model.queue_service_rate_pps = 1.0;
            let mut opts = RunOptions::from_config(&cfg);
            opts.seed = seed;
            let world = scenario.world.clone();
            let report = CosimState::new(world, FabricConfig::masterless(), vec![m.clone()], profile, opts)?
                .run_to_completion()?;
            let pair = &report.pairs[0];
            let frames = pair.transmissions as f64;
            let per_frame = base.transmission_delay_s(cfg.segment_bytes) + dist / base.propagation_speed_mps;
            let queue = (pair.pd_a_sum_s - frames * per_frame).max(0.0);
            let budget = report.windows.first().map_or(1, |w| w.budget);
            Ok((i, pair.loss_probability, frames, queue, budget))
        })
        .collect::<Result<_>>()?;
    let n = seeds.len() as f64;
    let mut points: Vec<SurrogatePoint> = grid
        .iter()
        .map(|&p| SurrogatePoint {
            p,
            loss: 0.0,
            frames: 0.0,
            queue_depth_sum: 0.0,
        })
        .collect();
    let mut budget = 1;
    for (i, loss, frames, queue, b) in runs {
        points[i].loss += loss / n;
        points[i].frames += frames / n;
        points[i].queue_depth_sum += queue / n;
        budget = budget.max(b);
    }
    Ok(Surrogate { points, budget })
}

/// Geometry of one target cell as seen by the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub target: TargetRow,
    pub distance_m: f64,
    /// Obstacles crossed per free material, in `FitParams::materials` order.
    pub material_counts: Vec<u32>,
    /// dB from crossed obstacles without a fitted material.
    pub fixed_db: f64,
}

/// Free parameters of one link class.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub path_loss_exponent: f64,
    pub reference_loss_db: f64,
    pub loss_steepness: f64,
    pub materials: Vec<String>,
    pub material_db: Vec<f64>,
    pub processing_delay_s: f64,
    pub queue_service_rate_pps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFit {
    pub target: TargetRow,
    pub p: f64,
    pub l_p_pct: f64,
    pub pd_a_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub class: LinkClass,
    pub params: FitParams,
    pub score: f64,
    pub max_loss_error_pct: f64,
    pub max_delay_error_s: f64,
    pub cells: Vec<CellFit>,
    pub profile: Profile,
}

impl Calibration {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}: score {:.3}, max |dL_p| {:.2} pp, max |dPD_a| {:.3} s",
            self.class, self.score, self.max_loss_error_pct, self.max_delay_error_s
        );
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>8} {:>9} {:>9} {:>8} {:>8}",
            "dist", "chan", "p", "PD_a", "target", "L_p %", "target"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:>8} {:>5} {:>8.4} {:>9.3} {:>9.3} {:>8.1} {:>8.1}",
                c.target.distance_m,
                c.target.channel.as_str(),
                c.p,
                c.pd_a_s,
                c.target.pd_a_s,
                c.l_p_pct,
                c.target.l_p_pct
            );
        }
        s
    }
}

/// Search vector: `[n, PL0, k, dB..., D_pr (us), queue fraction]`.
struct Problem<'a> {
    cells: &'a [CellGeometry],
    surrogate: &'a Surrogate,
    /// `thr - tx + noise` of the base model.
    offset_db: f64,
    tx_delay_s: f64,
    speed_mps: f64,
    n_mat: usize,
}

impl Problem<'_> {
    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(1.6, 6.0), (0.0, 150.0), (0.01, 3.0)];
        b.extend(std::iter::repeat_n((0.0, 60.0), self.n_mat));
        b.push((0.0, 1000.0));
        b.push((1e-3, 1.0));
        b
    }

    fn queue_rate(&self, dpr_s: f64, frac: f64) -> f64 {
        let slots = self.surrogate.budget.saturating_sub(1).max(1) as f64;
        slots / (frac * (dpr_s + self.tx_delay_s))
    }

    fn predict(&self, x: &[f64], cell: &CellGeometry) -> (f64, f64, f64) {
        let (n, pl0, k) = (x[0], x[1], x[2]);
        let mats: f64 = cell
            .material_counts
            .iter()
            .zip(&x[3..3 + self.n_mat])
            .map(|(&c, db)| f64::from(c) * db)
            .sum();
        let path = pl0 + 10.0 * n * cell.distance_m.max(1.0).log10() + mats + cell.fixed_db;
        let p = logistic(k * (self.offset_db + path));
        let dpr = x[3 + self.n_mat] * 1e-6;
        let rate = self.queue_rate(dpr, x[4 + self.n_mat]);
        let s = self.surrogate.at(p);
        let d = s.frames * (dpr + self.tx_delay_s + cell.distance_m / self.speed_mps) + s.queue_depth_sum / rate;
        (p, s.loss, d)
    }

    /// Worst loss error, worst delay error, and the mean normalised error.
    fn errors(&self, x: &[f64]) -> (f64, f64, f64) {
        let mut el: f64 = 0.0;
        let mut ed: f64 = 0.0;
        let mut mean = 0.0;
        for c in self.cells {
            let (_, l, d) = self.predict(x, c);
            let (a, b) = ((l - c.target.l_p_pct / 100.0).abs(), (d - c.target.pd_a_s).abs());
            el = el.max(a);
            ed = ed.max(b);
            mean += a / 0.1 + b / 0.2;
        }
        (el, ed, mean / (2 * self.cells.len()) as f64)
    }

    /// Worst normalised error, with a small mean term so cells off the
    /// critical one keep improving.
    fn score(&self, x: &[f64]) -> f64 {
        let (el, ed, mean) = self.errors(x);
        (el / 0.1).max(ed / 0.2) + 1e-3 * mean
    }
}

fn compass(problem: &Problem<'_>, mut x: Vec<f64>, bounds: &[(f64, f64)]) -> (f64, Vec<f64>) {
    let mut step: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.1 * (hi - lo)).collect();
    let mut best = problem.score(&x);
    let min_step: Vec<f64> = bounds.iter().map(|(lo, hi)| 1e-7 * (hi - lo)).collect();
    while step.iter().zip(&min_step).any(|(s, m)| s > m) {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] = (y[i] + dir * step[i]).clamp(bounds[i].0, bounds[i].1);
                let s = problem.score(&y);
                if s < best {
                    best = s;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut step {
                *s *= 0.5;
            }
        }
    }
    (best, x)
}

/// Options for [`calibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions {
    /// Differential-evolution population size.
    pub population: u32,
    pub generations: u32,
    /// Extra compass searches from uniform random starts.
    pub restarts: u32,
    pub seed: u64,
    pub grid: Vec<f64>,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            population: 48,
            generations: 800,
            restarts: 2000,
            seed: 1,
            grid: Surrogate::default_grid(),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// DE/rand/1/bin over the box with a compass polish of the best member,
/// plus compass searches from random starts; the best result wins.
fn search(problem: &Problem<'_>, bounds: &[(f64, f64)], options: &CalibrateOptions) -> Result<(f64, Vec<f64>)> {
    let np = options.population as usize;
    if np < 4 {
        return Err(Error::config("calibration population must be at least 4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let dim = bounds.len();
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|(lo, hi)| lo + (hi - lo) * uniform(&mut rng))
                .collect()
        })
        .collect();
    let mut scores: Vec<f64> = pop.iter().map(|x| problem.score(x)).collect();
    let pick = |rng: &mut ChaCha8Rng| (uniform(rng) * np as f64) as usize % np;
    for _ in 0..options.generations {
        for i in 0..np {
            let (mut a, mut b, mut c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            while a == i {
                a = pick(&mut rng);
            }
            while b == i || b == a {
                b = pick(&mut rng);
            }
            while c == i || c == a || c == b {
                c = pick(&mut rng);
            }
            let forced = pick(&mut rng) % dim;
            let trial: Vec<f64> = (0..dim)
                .map(|j| {
                    if j == forced || uniform(&mut rng) < 0.9 {
                        (pop[a][j] + 0.7 * (pop[b][j] - pop[c][j])).clamp(bounds[j].0, bounds[j].1)
                    } else {
                        pop[i][j]
                    }
                })
                .collect();
            let s = problem.score(&trial);
            if s <= scores[i] {
                pop[i] = trial;
                scores[i] = s;
            }
        }
    }
    let best = (0..np)
        .min_by(|&x, &y| scores[x].total_cmp(&scores[y]))
        .expect("population is non-empty");
    let mut starts = vec![pop[best].clone()];
    for _ in 0..options.restarts {
        starts.push(
            bounds
                .iter()
                .map(|(lo, hi)| lo + (hi - lo) * uniform(&mut rng))
                .collect(),
        );
    }
    let polished: Vec<(f64, Vec<f64>)> = starts.into_par_iter().map(|x| compass(problem, x, bounds)).collect();
    Ok(polished
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one start"))
}

/// Fits the link class of `config`'s primary pair to the matching rows of
/// `targets`. The returned profile is `config`'s profile with that class
/// replaced and renamed to `name`.
pub fn calibrate(
    config: &ScenarioConfig,
    targets: &[TargetRow],
    name: &str,
    options: &CalibrateOptions,
) -> Result<Calibration> {
    let mut base_cfg = config.clone();
    base_cfg.architecture = Architecture::Masterless;
    let probe = base_cfg.build()?;
    let m = &probe.matches[0];
    let class = LinkClass::between(
        probe.world.agent(&m.publisher).expect("matched").kind,
        probe.world.agent(&m.subscriber).expect("matched").kind,
    );
    let rows: Vec<TargetRow> = targets.iter().filter(|t| t.link == class).cloned().collect();
    if rows.is_empty() {
        return Err(Error::config(format!("no target rows for link class {class}")));
    }
    let mut materials: Vec<String> = config.obstacles.iter().filter_map(|o| o.material.clone()).collect();
    materials.sort();
    materials.dedup();

    let mut cells = Vec::with_capacity(rows.len());
    for t in &rows {
        let s = base_cfg.with_cell(t.distance_m, t.channel)?.build()?;
        let a = s.world.agent(&s.matches[0].publisher).expect("matched");
        let b = s.world.agent(&s.matches[0].subscriber).expect("matched");
        let mut counts = vec![0u32; materials.len()];
        let mut fixed_db = 0.0;
        for o in s.world.blocking_obstacles(a, b) {
            match o.material.as_ref().and_then(|m| materials.iter().position(|x| x == m)) {
                Some(i) => counts[i] += 1,
                None => fixed_db += o.attenuation_db,
            }
        }
        cells.push(CellGeometry {
            target: t.clone(),
            distance_m: distance(a, b),
            material_counts: counts,
            fixed_db,
        });
    }

    let surrogate = build_surrogate(&base_cfg, &options.grid)?;
    let model = probe.profile.link(class).model;
    let problem = Problem {
        cells: &cells,
        surrogate: &surrogate,
        offset_db: model.snr_threshold_db - model.tx_power_dbm + model.noise_floor_dbm,
        tx_delay_s: model.transmission_delay_s(config.segment_bytes),
        speed_mps: model.propagation_speed_mps,
        n_mat: materials.len(),
    };
    let bounds = problem.bounds();
    let (score, x) = search(&problem, &bounds, options)?;

    let nm = materials.len();
    let dpr = x[3 + nm] * 1e-6;
    let params = FitParams {
        path_loss_exponent: x[0],
        reference_loss_db: x[1],
        loss_steepness: x[2],
        materials: materials.clone(),
        material_db: x[3..3 + nm].to_vec(),
        processing_delay_s: dpr,
        queue_service_rate_pps: problem.queue_rate(dpr, x[4 + nm]),
    };
    let fits: Vec<CellFit> = cells
        .iter()
        .map(|c| {
            let (p, l, d) = problem.predict(&x, c);
            CellFit {
                target: c.target.clone(),
                p,
                l_p_pct: 100.0 * l,
                pd_a_s: d,
            }
        })
        .collect();
    let (el, ed, _) = problem.errors(&x);

    let mut profile = probe.profile.clone();
    profile.name = name.to_string();
    let link = profile.links.get_mut(&class).expect("profiles carry every class");
    link.model.path_loss_exponent = params.path_loss_exponent;
    link.model.reference_loss_db = params.reference_loss_db;
    link.model.loss_steepness = params.loss_steepness;
    link.model.processing_delay_s = params.processing_delay_s;
    link.model.queue_service_rate_pps = params.queue_service_rate_pps;
    let mut mats = BTreeMap::new();
    for (m, db) in materials.iter().zip(&params.material_db) {
        mats.insert(m.clone(), *db);
    }
    link.material_db = mats;
    profile.validate()?;

    Ok(Calibration {
        class,
        params,
        score,
        max_loss_error_pct: 100.0 * el,
        max_delay_error_s: ed,
        cells: fits,
        profile,
    })
}
