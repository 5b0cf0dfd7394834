//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sharplll::gen::{generate_instance, Family, GenSpec};
use sharplll::geometry::{
    boundary_height_r3, convexity_probe, decompose_in_hyperplane, default_tol, is_representable,
    local_representability_radius, maximize_coordinate, maximize_coordinate_with_witness, movement_vectors,
    supporting_hyperplane, trade_epsilon, trade_range, Generator, Tuple, ORTHOGONALITY_TOL,
};
use sharplll::lll::{
    forward_order, instance_from_json, instance_to_json, reversed_order, run_sequential, FixOptions, LllInstance,
    Meta, RawEvent, Variable,
};
use sharplll::sim::{is_two_hop_proper, run_local};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn convexity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [3, 4, 5] {
        let start = Instant::now();
        let rep = match convexity_probe(r, 10_000, 2024 + r as u64) {
            Ok(rep) => rep,
            Err(e) => return outcome(false, format!("r={r}: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let disagreements = rep.closed_form_disagreements.unwrap_or(0);
        pass &= rep.violations == 0 && disagreements == 0 && secs < 300.0;
        parts.push(format!(
            "r={r} violations={} closed-form-disagreements={disagreements} worst-margin={:.3e} tol={:e} {secs:.1}s",
            rep.violations, rep.worst_margin, rep.tol
        ));
    }
    outcome(pass, parts.join("; "))
}

fn closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let (a, b) = (0.5 * i as f64 / 49.0, 0.5 * j as f64 / 49.0);
            let oracle = maximize_coordinate(&[a, b], 2, 1e-10).unwrap();
            let formula = boundary_height_r3(a, b).unwrap();
            worst = worst.max((oracle - formula).abs());
        }
    }
    let mut spot_err: f64 = 0.0;
    for ((a, b), want) in [((0.25, 0.25), 0.25), ((0.5, 0.5), 0.0), ((0.26, 0.26), 0.2304)] {
        let oracle = maximize_coordinate(&[a, b], 2, 1e-12).unwrap();
        let formula = boundary_height_r3(a, b).unwrap();
        spot_err = spot_err.max((oracle - want).abs()).max((formula - want).abs());
    }
    outcome(
        worst <= 1e-6 && spot_err <= 1e-9,
        format!("grid max |oracle - f3| = {worst:.3e}, spot max error = {spot_err:.3e}"),
    )
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let opts = FixOptions::default();
    let mut failures = Vec::new();
    let mut steps = 0usize;
    let mut relaxed = 0usize;
    let mut max_value: f64 = 0.0;
    let mut max_d = 0;
    for i in 0..100u64 {
        let mut spec = GenSpec::new(Family::ALL[i as usize % 3], 20 + (i as usize * 37) % 181, 1000 + i);
        spec.max_rank = 2 + (i as usize % 3);
        spec.max_domain = 2 + (i as usize / 3) % 3;
        spec.target_d = 2 + (i as usize % 5);
        spec.random_ids = i % 2 == 1;
        let inst = match generate_instance(&spec) {
            Ok(inst) => inst,
            Err(e) => {
                failures.push(format!("instance {i}: {e}"));
                continue;
            }
        };
        let crit = inst.check_criterion();
        max_value = max_value.max(sharplll::lll::to_f64(&crit.value));
        max_d = max_d.max(inst.graph.d);
        let check = |label: &str, assignment: &[usize], failures: &mut Vec<String>| {
            let total: Vec<_> = assignment.iter().map(|&s| Some(s)).collect();
            match inst.verify_assignment(&total) {
                Ok(occ) if occ.is_empty() => {}
                Ok(occ) => failures.push(format!("instance {i} {label}: events {occ:?} occur")),
                Err(e) => failures.push(format!("instance {i} {label}: {e}")),
            }
        };
        for (label, order) in [("forward", forward_order(&inst)), ("reversed", reversed_order(&inst))] {
            match run_sequential(&inst, &order, &opts) {
                Ok(run) => {
                    steps += run.steps.len();
                    relaxed += run.steps.iter().filter(|s| s.relaxed).count();
                    check(label, &run.assignment, &mut failures);
                }
                Err(e) => failures.push(format!("instance {i} {label}: {e}")),
            }
        }
        match run_local(&inst, &inst.ids(), &opts) {
            Ok(run) => {
                steps += run.steps.len();
                relaxed += run.steps.iter().filter(|s| s.relaxed).count();
                check("local", &run.assignment, &mut failures);
                if !is_two_hop_proper(&inst.graph.neighbors, &run.coloring.colors) {
                    failures.push(format!("instance {i}: coloring is not 2-hop proper"));
                }
            }
            Err(e) => failures.push(format!("instance {i} local: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "100 instances x 3 runs, {steps} fix steps with P* checked after each ({relaxed} needed relaxed domination), max p*2^d = {max_value:.4}, max d = {max_d}, {secs:.1}s"
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; {} failures, first: {first}", failures.len()));
    }
    outcome(failures.is_empty() && secs < 600.0, detail)
}

/// Events on the circulant graph `C_n(1, 2)`: event `v` depends on the
/// variables of edges `{v, v+1}` and `{v, v+2}`, all uniform ternary, and
/// occurs on one pattern.
fn ring_lattice(n: usize) -> LllInstance {
    let third = BigRational::new(1.into(), 3.into());
    let vars: Vec<Variable> = (0..2 * n as u64)
        .map(|id| Variable::new(id, vec!["0".into(), "1".into(), "2".into()], vec![third.clone(); 3]).unwrap())
        .collect();
    let events = (0..n)
        .map(|v| {
            let mut vbl = vec![
                2 * v as u64,
                2 * v as u64 + 1,
                2 * ((v + n - 1) % n) as u64,
                2 * ((v + n - 2) % n) as u64 + 1,
            ];
            vbl.sort_unstable();
            let pattern = (0..4).map(|k| ((v + k) % 3).to_string()).collect();
            RawEvent::new(v as u64, vbl, vec![pattern])
        })
        .collect();
    LllInstance::new(vars, events, Meta::default()).unwrap()
}

fn round_scaling() -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for n in [10usize, 100, 1000, 10_000] {
        let inst = ring_lattice(n);
        if inst.graph.d != 4 || !inst.check_criterion().pass {
            return outcome(false, format!("n={n}: unexpected instance (d = {})", inst.graph.d));
        }
        let ids: Vec<u64> = (0..n as u64).collect();
        let run = match run_local(&inst, &ids, &FixOptions { tol: None, check_each_step: false }) {
            Ok(run) => run,
            Err(e) => return outcome(false, format!("n={n}: {e}")),
        };
        let total: Vec<_> = run.assignment.iter().map(|&s| Some(s)).collect();
        let log = &run.log;
        pass &= inst.verify_assignment(&total).map(|o| o.is_empty()).unwrap_or(false);
        pass &= log.fixing_rounds == 3 * log.colors_used;
        if let Some((colors, rounds)) = prev {
            pass &= log.colors_used == colors;
            pass &= log.coloring_rounds <= rounds + 2;
        }
        prev = Some((log.colors_used, log.coloring_rounds));
        rows.push(format!(
            "n={n}: colors={} coloring={} (linial {}) fixing={}",
            log.colors_used, log.coloring_rounds, log.linial_steps, log.fixing_rounds
        ));
    }
    outcome(pass, rows.join("; "))
}

fn random_non_zero_generator(rng: &mut ChaCha8Rng, r: usize) -> Generator {
    let mut m = vec![0.0; r * r];
    for i in 0..r {
        for j in i + 1..r {
            let total = rng.gen_range(0.1..=1.0);
            let split = rng.gen_range(0.1..0.9);
            m[i * r + j] = total * split;
            m[j * r + i] = total * (1.0 - split);
        }
    }
    Generator::from_matrix(r, m).unwrap()
}

fn trade_constructivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checks = 0;
    let mut failures = Vec::new();
    for n in 0..1000 {
        let r = 2 + n % 5;
        let g = random_non_zero_generator(&mut rng, r);
        let t = g.generate();
        let delta = 0.5 * trade_range(&g);
        for k in 0..r {
            checks += 1;
            let out = trade_epsilon(&t, &g, k, delta).unwrap();
            let member = is_representable(&out, default_tol(r)).unwrap().member;
            let moved = (0..r).all(|i| if i == k { out.get(i) < t.get(i) } else { out.get(i) > t.get(i) });
            if !(member && moved) && failures.len() < 3 {
                failures.push(format!("generator {n}, k={k}: member={member} moved={moved}"));
            }
        }
    }
    let detail = format!("{checks} (generator, k) pairs, {} failures {failures:?}", failures.len());
    outcome(failures.is_empty(), detail)
}

fn unit_in_plane(rng: &mut ChaCha8Rng, h: &[f64]) -> Vec<f64> {
    let hh: f64 = h.iter().map(|x| x * x).sum();
    loop {
        let v: Vec<f64> = h.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = v.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / hh;
        let p: Vec<f64> = v.iter().zip(h).map(|(a, b)| a - s * b).collect();
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return p.iter().map(|x| x / norm).collect();
        }
    }
}

fn hyperplane_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut stats = (0usize, 0usize, 0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    while stats.0 < 200 {
        let r = if stats.0 < 100 { 3 } else { 4 };
        let k = rng.gen_range(0..r);
        let prefix: Vec<f64> = (0..r - 1).map(|_| rng.gen_range(0.02..0.6)).collect();
        let (m, witness) = maximize_coordinate_with_witness(&prefix, k, 1e-12).unwrap();
        let Some(g) = witness else { continue };
        if m < 0.01 || !g.is_non_zero() {
            continue;
        }
        let t = g.generate();
        stats.0 += 1;
        let plane = match supporting_hyperplane(&t, &g, ORTHOGONALITY_TOL) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("{:?}: {e}", t.coords()));
                continue;
            }
        };
        let ws = movement_vectors(&t, &g).unwrap();
        let ortho = ws
            .iter()
            .map(|w| w.vec.iter().zip(&plane.h).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        stats.2 = stats.2.max(ortho);
        if plane.h.iter().any(|&x| x < 0.0) || ortho > ORTHOGONALITY_TOL {
            failures.push(format!("{:?}: h = {:?}, max |h.w| = {ortho:.3e}", t.coords(), plane.h));
        }
        let radius = local_representability_radius(&t, &g).unwrap();
        let c = t.coords().iter().map(|x| 1.0 / x).fold(0.0, f64::max);
        for _ in 0..50 {
            stats.1 += 1;
            let u = unit_in_plane(&mut rng, &plane.h);
            let eps = radius * rng.gen_range(0.0..1.0);
            let point: Vec<f64> = t.coords().iter().zip(&u).map(|(a, b)| a + eps * b).collect();
            let target = Tuple::new(point).unwrap();
            if !is_representable(&target, default_tol(r)).unwrap().member {
                failures.push(format!("{:?} not representable", target.coords()));
            }
            let d = decompose_in_hyperplane(&t, &g, &target, 1e-9).unwrap();
            let err = Tuple::new(d.reconstruct(&t, &ws).iter().map(|x| x.max(0.0)).collect())
                .unwrap()
                .max_dist(&target);
            stats.3 = stats.3.max(err);
            if err > 1e-9 || !d.sign_coherent(&ws) {
                failures.push(format!("decomposition of {:?}: error {err:.3e}", target.coords()));
            }
            let s = 1e-3 * t.coords().iter().copied().fold(f64::INFINITY, f64::min);
            let unit_target: Vec<f64> = t.coords().iter().zip(&u).map(|(a, b)| a + s * b).collect();
            let du = decompose_in_hyperplane(&t, &g, &Tuple::new(unit_target).unwrap(), 1e-9).unwrap();
            let ratio = du.max_abs() / s / c;
            stats.4 = stats.4.max(ratio);
            if ratio > 1.0 + 1e-6 {
                failures.push(format!("|alpha| / c = {ratio:.4} on a unit direction at {:?}", t.coords()));
            }
        }
    }
    let detail = format!(
        "{} maximal tuples, {} sampled points, max |h.w| = {:.3e}, max reconstruction error = {:.3e}, max |alpha|/c = {:.4}, {} failures{}",
        stats.0,
        stats.1,
        stats.2,
        stats.3,
        stats.4,
        failures.len(),
        failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
    );
    outcome(failures.is_empty(), detail)
}

const HAND_WRITTEN: &str = r#"{"variables": [{"probabilities": ["2/4", "1/4", "1/4"], "id": 3, "domain": ["a", "b", "c"]},
 {"id": 1, "domain": ["x", "y"], "probabilities": ["1/2", "2/4"]}],
 "events": [{"id": 9, "vbl": [3, 1], "occurring": [["b", "y"], ["a", "x"], ["b", "y"]]},
 {"id": 2, "vbl": [1], "occurring": [["x"]]}]}"#;

fn exact_identities() -> Outcome {
    let opts = FixOptions { tol: None, check_each_step: false };
    let mut logged = 0usize;
    let mut broken = 0usize;
    let mut round_trips = 0usize;
    let mut rt_failures = 0usize;
    let mut seed = 5000;
    while logged < 1000 {
        let mut spec = GenSpec::new(Family::ALL[seed as usize % 3], 60, seed);
        spec.max_rank = 4;
        spec.target_d = 5;
        seed += 1;
        let inst = generate_instance(&spec).unwrap();
        let text = instance_to_json(&inst);
        round_trips += 1;
        if instance_to_json(&instance_from_json(&text).unwrap()) != text {
            rt_failures += 1;
        }
        let run = run_sequential(&inst, &forward_order(&inst), &opts).unwrap();
        for step in &run.steps {
            logged += 1;
            broken += usize::from(!step.identity_holds());
        }
    }
    let canon = instance_to_json(&instance_from_json(HAND_WRITTEN).unwrap());
    round_trips += 1;
    if instance_to_json(&instance_from_json(&canon).unwrap()) != canon {
        rt_failures += 1;
    }
    outcome(
        broken == 0 && rt_failures == 0,
        format!("{logged} fix steps, {broken} identity failures; {round_trips} files, {rt_failures} round-trip mismatches"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 convexity of the non-representable set", convexity),
        ("2 oracle vs closed-form boundary", closed_form),
        ("3 end-to-end LLL fixing", end_to_end),
        ("4 LOCAL round scaling", round_scaling),
        ("5 trade constructivity", trade_constructivity),
        ("6 supporting hyperplanes", hyperplane_suite),
        ("7 exact identities and round-trips", exact_identities),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "[{}] criterion {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
