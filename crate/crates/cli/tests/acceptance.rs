//! Acceptance suite. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line regardless of test-output capture.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sitcov::campaign::{
    fly_episode, run_campaign, run_campaign_with, CampaignConfig, EpisodeCache, Mode, Stopping,
};
use sitcov::config::SimConfig;
use sitcov::fault::FaultSpec;
use sitcov::geometry::{Aabb, Cylinder, Vec3, WallSegment};
use sitcov::monitor::{Requirement, ViolationRecord};
use sitcov::rng::SplitMix64;
use sitcov::scene::{build_scene, Scene, SolidKind};
use sitcov::sim::{parse_trajectory_csv, run_episode_observed, trajectory_csv, FaultLayer};
use sitcov::situation::{enumerate_situations, Situation, SituationId};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sitcov"))
}

fn sit(id: u8) -> Situation {
    Situation::from_id(SituationId::new(id).unwrap())
}

// 1 ------------------------------------------------------------------------

fn hyperspace() -> Verdict {
    let t = Instant::now();
    let out = bin().arg("enumerate").output().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    if rows.len() != 32 {
        return Err(format!("{} rows", rows.len()));
    }
    let expected: [(usize, [&str; 6]); 4] = [
        (1, ["1", "No", "No", "Open space", "Default", "Yes"]),
        (2, ["2", "No", "No", "Open space", "Dark", "No"]),
        (3, ["3", "No", "No", "Near a wall", "Default", "No"]),
        (32, ["32", "Yes", "Yes", "Near a wall", "Dark", "No"]),
    ];
    for (row, want) in expected {
        if rows[row - 1] != want {
            return Err(format!("row {row} is {:?}", rows[row - 1]));
        }
    }
    let distinct: std::collections::BTreeSet<_> = rows.iter().map(|r| r[1..].to_vec()).collect();
    if distinct.len() != 32 {
        return Err("duplicate axis combinations".into());
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("32 rows, table rows 1/2/3/32 match, {elapsed:.2?}"))
}

// 2 ------------------------------------------------------------------------

fn fault_reproduction() -> Verdict {
    let cfg = SimConfig::default();
    let cases: [(&str, u8, Requirement); 3] = [
        ("LATE:human_detection_latency:3", 1, Requirement::SR2),
        ("UNINTENDED:collision_signal:20", 3, Requirement::SR1),
        ("MORE:goal_threshold:2.5", 9, Requirement::SR1),
    ];
    let mut notes = Vec::new();
    for (spec, id, req) in cases {
        let fault: FaultSpec = spec.parse().map_err(|e| format!("{e}"))?;
        let t = Instant::now();
        let (_, clean) = fly_episode(&sit(id), &cfg, &[], 0).map_err(|e| e.to_string())?;
        let (r, v) = fly_episode(&sit(id), &cfg, &[fault], 0).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed();
        let hits: Vec<&ViolationRecord> = v.iter().filter(|x| x.requirement == req).collect();
        if !clean.is_empty() {
            return Err(format!(
                "{spec}: situation {id} not clean without the fault"
            ));
        }
        let Some(first) = hits.first() else {
            return Err(format!("{spec}: no {req} on situation {id}"));
        };
        if elapsed >= Duration::from_secs(10) {
            return Err(format!("{spec}: took {elapsed:?}"));
        }
        match fault.guideword {
            sitcov::fault::Guideword::Unintended => {
                let signal = r
                    .events
                    .iter()
                    .find(|e| e.kind == sitcov::sim::EventKind::FalseCollisionSignal);
                if !signal.is_some_and(|e| e.time < first.time) {
                    return Err("collision did not follow a false-collision backoff".into());
                }
            }
            sitcov::fault::Guideword::More => {
                if r.completed {
                    return Err("mission completed despite collision".into());
                }
            }
            sitcov::fault::Guideword::Late => {}
        }
        notes.push(format!(
            "{} on {id} -> {req} at {:.2}s",
            fault.guideword, first.time
        ));
    }
    Ok(notes.join("; "))
}

// 3 ------------------------------------------------------------------------

fn darkness() -> Verdict {
    let cfg = SimConfig::default();
    let (mut dark, mut lit) = (0, 0);
    for s in enumerate_situations() {
        let (_, v) = fly_episode(&s, &cfg, &[], 0).map_err(|e| e.to_string())?;
        let sr1: Vec<_> = v
            .iter()
            .filter(|x| x.requirement == Requirement::SR1)
            .collect();
        if s.darkness && s.turning_corner {
            if sr1.len() != 1 || sr1[0].object != Some(SolidKind::CornerBar) {
                return Err(format!("situation {}: SR1 records {sr1:?}", s.id()));
            }
            dark += 1;
        } else if !s.darkness {
            if !v.is_empty() {
                return Err(format!(
                    "situation {} (lit) has {} violations",
                    s.id(),
                    v.len()
                ));
            }
            lit += 1;
        }
    }
    Ok(format!(
        "{dark} dark-corner situations hit the bar once, {lit} lit situations clean"
    ))
}

// 4 ------------------------------------------------------------------------

fn coverage_accounting() -> Verdict {
    let t = Instant::now();
    let ex = run_campaign(&CampaignConfig {
        mode: Mode::Exhaustive,
        stopping: Stopping::FullCoverage,
        record_trajectories: false,
        ..CampaignConfig::default()
    })
    .map_err(|e| e.to_string())?;
    if ex.coverage.coverage_fraction != 1.0 || ex.coverage.total_generated != 32 {
        return Err(format!("exhaustive coverage {:?}", ex.coverage));
    }

    let seeds = 1000u64;
    let mut cache = EpisodeCache::new();
    let mut total = 0u64;
    for seed in 0..seeds {
        let cfg = CampaignConfig {
            seed: Some(seed),
            mode: Mode::Random,
            stopping: Stopping::FullCoverage,
            record_trajectories: false,
            ..CampaignConfig::default()
        };
        let log =
            run_campaign_with(&cfg, &mut cache, &mut |_, _| Ok(())).map_err(|e| e.to_string())?;
        if log.coverage.coverage_fraction != 1.0 {
            return Err(format!(
                "seed {seed} stopped at {}",
                log.coverage.coverage_fraction
            ));
        }
        total += log.episodes.len() as u64;
    }
    let mean = total as f64 / seeds as f64;
    let expected = 32.0 * (1..=32).map(|k| 1.0 / k as f64).sum::<f64>();
    let rel = (mean - expected).abs() / expected;
    let elapsed = t.elapsed();
    if rel > 0.05 {
        return Err(format!(
            "mean {mean:.2} vs {expected:.2} ({:.1}% off)",
            100.0 * rel
        ));
    }
    if elapsed >= Duration::from_secs(120) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "exhaustive 32/32; mean episodes to full coverage {mean:.2} vs 32*H32 = {expected:.2} ({:.1}% off), {elapsed:.1?}",
        100.0 * rel
    ))
}

// 5 ------------------------------------------------------------------------

fn strip_timestamp(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir.join("trajectories"))
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("noisy.toml");
    fs::write(&config, "seed = 77\n[control]\nsensor_noise_std = 0.03\n")
        .map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let out = bin()
            .args(["run", "--config"])
            .arg(&config)
            .args([
                "--mode",
                "random",
                "--max-episodes",
                "24",
                "--fault",
                "UNINTENDED",
                "--fault",
                "LATE",
                "--out",
            ])
            .arg(&dir)
            .env("RUST_LOG", "off")
            .output()
            .map_err(|e| e.to_string())?;
        if !matches!(out.status.code(), Some(0 | 2)) {
            return Err(format!(
                "run exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        outs.push(dir);
    }
    let json: Vec<String> = outs
        .iter()
        .map(|d| fs::read_to_string(d.join("campaign.json")).unwrap_or_default())
        .collect();
    if strip_timestamp(&json[0]) != strip_timestamp(&json[1]) {
        return Err("campaign logs differ outside the timestamp".into());
    }
    let (ca, cb) = (csv_files(&outs[0]), csv_files(&outs[1]));
    if ca.len() != 24 || ca != cb {
        return Err(format!(
            "trajectory CSVs differ ({} vs {} files)",
            ca.len(),
            cb.len()
        ));
    }
    let log = outs[0].join("campaign.json");
    for k in 0..24 {
        let out = bin()
            .args(["replay", "--log"])
            .arg(&log)
            .args(["--episode", &k.to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        let said = String::from_utf8_lossy(&out.stdout);
        if !out.status.success() || !said.contains("identical") {
            return Err(format!(
                "replay of episode {k}: {said}{}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    // Tampering with a stored trajectory must be caught.
    let victim = outs[0].join("trajectories/episode-0005.csv");
    let mut bytes = fs::read(&victim).map_err(|e| e.to_string())?;
    let at = bytes.len() / 2;
    bytes[at] = if bytes[at] == b'1' { b'2' } else { b'1' };
    fs::write(&victim, bytes).map_err(|e| e.to_string())?;
    let out = bin()
        .args(["replay", "--log"])
        .arg(&log)
        .args(["--episode", "5"])
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(1) {
        return Err("replay accepted a tampered trajectory".into());
    }
    Ok("two 24-episode runs give byte-identical logs and CSVs; 24/24 replays identical; tampering detected".into())
}

// 6 ------------------------------------------------------------------------

#[derive(Debug, PartialEq)]
struct Finding {
    requirement: Requirement,
    time: f64,
    position: [f64; 3],
}

/// Re-derives SR1/SR2 violations from a trajectory CSV and the true scene.
fn scan_csv(csv: &str, scene: &Scene, cfg: &SimConfig) -> Vec<Finding> {
    let rows = parse_trajectory_csv(csv).expect("csv parses");
    let person = scene.human.map(|h| h.base);
    let mut found = Vec::new();
    let mut start: Option<f64> = None;
    let mut flagged = false;
    for row in rows {
        if row.events.iter().any(|e| e.starts_with("collision:")) {
            found.push(Finding {
                requirement: Requirement::SR1,
                time: row.time,
                position: row.position,
            });
        }
        let [vx, vy, vz] = row.velocity;
        let speed = (vx * vx + vy * vy + vz * vz).sqrt();
        let close = person.is_some_and(|h| {
            let (dx, dy) = (row.position[0] - h.x, row.position[1] - h.y);
            (dx * dx + dy * dy).sqrt() <= cfg.control.person_slow_distance
        });
        if close && speed > cfg.control.person_slow_speed + cfg.monitor.speed_epsilon {
            let s = *start.get_or_insert(row.time);
            if !flagged && row.time - s > cfg.monitor.sr2_grace + 1e-9 {
                flagged = true;
                found.push(Finding {
                    requirement: Requirement::SR2,
                    time: row.time,
                    position: row.position,
                });
            }
        } else {
            start = None;
            flagged = false;
        }
    }
    found
}

fn monitor_agreement() -> Verdict {
    let mut rng = SplitMix64::new(0x5eed);
    let (mut sr1, mut sr2) = (0, 0);
    for i in 0..200 {
        let s = Situation::from_id(SituationId::new((rng.next_u64() % 32) as u8 + 1).unwrap());
        let mut cfg = SimConfig::default();
        if rng.next_f64() < 0.5 {
            cfg.control.sensor_noise_std = 0.05 * rng.next_f64();
        }
        let mut faults = Vec::new();
        if rng.next_f64() < 0.4 {
            faults.push(FaultSpec::late(0.5 + 4.0 * rng.next_f64()).unwrap());
        }
        if rng.next_f64() < 0.4 {
            faults.push(FaultSpec::unintended(5.0 + 30.0 * rng.next_f64()).unwrap());
        }
        if rng.next_f64() < 0.3 {
            faults.push(FaultSpec::more(0.5 + 2.5 * rng.next_f64()).unwrap());
        }
        let seed = rng.next_u64();
        let (r, online) = fly_episode(&s, &cfg, &faults, seed).map_err(|e| e.to_string())?;
        let (scene, _) = build_scene(&s, &cfg.world).map_err(|e| e.to_string())?;
        let offline = scan_csv(&trajectory_csv(&r), &scene, &cfg);
        let online: Vec<Finding> = online
            .iter()
            .map(|v| Finding {
                requirement: v.requirement,
                time: v.time,
                position: [v.position.x, v.position.y, v.position.z],
            })
            .collect();
        if online != offline {
            return Err(format!(
                "episode {i} (situation {}, faults {faults:?}): online {online:?} vs scan {offline:?}",
                s.id()
            ));
        }
        sr1 += online
            .iter()
            .filter(|f| f.requirement == Requirement::SR1)
            .count();
        sr2 += online
            .iter()
            .filter(|f| f.requirement == Requirement::SR2)
            .count();
    }
    if sr1 == 0 || sr2 == 0 {
        return Err(format!("sample too weak: {sr1} SR1, {sr2} SR2"));
    }
    Ok(format!(
        "200 episodes, {sr1} SR1 + {sr2} SR2 findings, no misses or false positives"
    ))
}

// 7 ------------------------------------------------------------------------

fn sphere_hits_wall(w: &WallSegment, c: &Vec3, r: f64) -> bool {
    // Solve |a + t(b - a) - c|^2 <= r^2 for some t in [0, 1].
    let (ax, ay) = (w.a.x - c.x, w.a.y - c.y);
    let (dx, dy) = (w.b.x - w.a.x, w.b.y - w.a.y);
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (ax * dx + ay * dy);
    let qc = ax * ax + ay * ay - r * r;
    if qa == 0.0 {
        return qc <= 0.0;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return false;
    }
    let sq = disc.sqrt();
    let (t1, t2) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
    t1 <= 1.0 && t2 >= 0.0
}

fn sphere_hits_box(b: &Aabb, c: &Vec3, r: f64) -> bool {
    let mut d2 = 0.0;
    for k in 0..3 {
        let lo = b.center[k] - b.size[k] / 2.0;
        let hi = b.center[k] + b.size[k] / 2.0;
        if c[k] < lo {
            d2 += (lo - c[k]).powi(2);
        } else if c[k] > hi {
            d2 += (c[k] - hi).powi(2);
        }
    }
    d2 <= r * r
}

fn sphere_hits_cylinder(cy: &Cylinder, c: &Vec3, r: f64) -> bool {
    let radial = ((c.x - cy.base.x).powi(2) + (c.y - cy.base.y).powi(2)).sqrt();
    let dz = if c.z > cy.height {
        c.z - cy.height
    } else if c.z < 0.0 {
        -c.z
    } else {
        0.0
    };
    if radial <= cy.radius {
        dz <= r
    } else {
        (radial - cy.radius).powi(2) + dz * dz <= r * r
    }
}

fn touching(scene: &Scene, p: &Vec3) -> Vec<SolidKind> {
    let r = scene.drone_radius;
    let mut kinds = Vec::new();
    if scene.walls.iter().any(|w| sphere_hits_wall(w, p, r)) {
        kinds.push(SolidKind::Wall);
    }
    if scene.obstacles.iter().any(|b| sphere_hits_box(b, p, r)) {
        kinds.push(SolidKind::Obstacle);
    }
    if sphere_hits_box(&scene.corner_bar, p, r) {
        kinds.push(SolidKind::CornerBar);
    }
    if scene.human.is_some_and(|h| sphere_hits_cylinder(&h, p, r)) {
        kinds.push(SolidKind::Human);
    }
    kinds
}

fn collision_oracle() -> Verdict {
    let mut rng = SplitMix64::new(0xc011);
    let (mut poses, mut hits) = (0, 0);
    for s in enumerate_situations() {
        let (scene, _) = build_scene(&s, &Default::default()).map_err(|e| e.to_string())?;
        let mut anchors: Vec<Vec3> = scene
            .walls
            .iter()
            .map(|w| {
                let t = rng.next_f64();
                let p = w.a + (w.b - w.a) * t;
                Vec3::new(p.x, p.y, 1.65)
            })
            .collect();
        anchors.extend(scene.obstacles.iter().map(|b| b.center));
        anchors.push(scene.corner_bar.center);
        if let Some(h) = scene.human {
            anchors.push(Vec3::new(h.base.x, h.base.y, h.height));
        }
        let (lo, hi) = scene.walls.iter().fold(
            (Vec3::repeat(f64::MAX), Vec3::repeat(f64::MIN)),
            |(lo, hi), w| {
                (
                    Vec3::new(lo.x.min(w.a.x).min(w.b.x), lo.y.min(w.a.y).min(w.b.y), 0.0),
                    Vec3::new(hi.x.max(w.a.x).max(w.b.x), hi.y.max(w.a.y).max(w.b.y), 2.5),
                )
            },
        );
        for k in 0..100 {
            let p = if k % 2 == 0 {
                Vec3::new(
                    lo.x + (hi.x - lo.x) * rng.next_f64(),
                    lo.y + (hi.y - lo.y) * rng.next_f64(),
                    lo.z + (hi.z - lo.z) * rng.next_f64(),
                )
            } else {
                let a = anchors[(rng.next_u64() % anchors.len() as u64) as usize];
                let j = Vec3::new(
                    rng.next_f64() - 0.5,
                    rng.next_f64() - 0.5,
                    rng.next_f64() - 0.5,
                );
                a + j * 1.2
            };
            let expect = touching(&scene, &p);
            let got = scene.collision_at(&p);
            let agree = match got {
                Some(kind) => expect.contains(&kind),
                None => expect.is_empty(),
            };
            if !agree {
                return Err(format!(
                    "situation {} pose {p:?}: simulator {got:?}, oracle {expect:?}",
                    s.id()
                ));
            }
            poses += 1;
            hits += usize::from(got.is_some());
        }
    }
    Ok(format!(
        "{poses} poses over 32 scenes agree ({hits} in contact)"
    ))
}

// 8 ------------------------------------------------------------------------

fn neutral_fault() -> Verdict {
    let mut n = 0;
    for s in enumerate_situations() {
        for (noise, seed) in [(0.0, 0u64), (0.04, 99)] {
            let mut cfg = SimConfig::default();
            cfg.control.sensor_noise_std = noise;
            let off = run_episode_observed(&s, &cfg, FaultLayer::Disabled, seed, &mut ())
                .map_err(|e| e.to_string())?;
            let on = run_episode_observed(&s, &cfg, FaultLayer::Enabled(&[]), seed, &mut ())
                .map_err(|e| e.to_string())?;
            if off != on || trajectory_csv(&off) != trajectory_csv(&on) {
                return Err(format!("situation {} noise {noise} differs", s.id()));
            }
            n += 1;
        }
    }
    Ok(format!("{n} episode pairs bit-identical"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("hyperspace cardinality", hyperspace),
        ("fault-detection reproduction", fault_reproduction),
        ("darkness reproduction", darkness),
        ("coverage accounting", coverage_accounting),
        ("determinism and replay", determinism),
        ("monitor soundness/completeness", monitor_agreement),
        ("collision-oracle equivalence", collision_oracle),
        ("neutral-fault identity", neutral_fault),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
