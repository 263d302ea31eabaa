//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use icckit::channel::{
    check_strong_interference, induce_joint, strong_interference_sweep,
    CommonFactors, DeterministicSpec, Family, InputFactorization, SweepConfig,
};
use icckit::polytope::{IneqSystem, RatePoint};
use icckit::regions::{self, SICC_REDUNDANT_ROWS};
use icckit::sim::{estimate_errors, SimConfig, SimReport};

use common::*;

const TOL: f64 = 1e-9;
/// Exterior points must err at least this often at every blocklength.
const EXTERIOR_MIN_ERROR: f64 = 0.3;
/// Interior error at the longest blocklength, as a fraction of the shortest.
const INTERIOR_SHRINK: f64 = 0.5;

/// Result of one criterion: pass flag and a short summary.
struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cube(hi: f64, dims: usize) -> Vec<(f64, f64)> {
    vec![(0.0, hi); dims]
}

/// Diagnostic comparison on a grid scaled to the regions' extent, 40 steps
/// per axis. Random binary channels give rates far below the 0.05 step.
fn fine_differs(a: &IneqSystem, b: &IneqSystem) -> bool {
    let hi = a
        .coordinate_maxima()
        .into_iter()
        .chain(b.coordinate_maxima())
        .map(|m| m.unwrap_or(2.0))
        .fold(0.0_f64, f64::max);
    if hi <= 0.0 {
        return false;
    }
    let step = hi / 40.0;
    let d = a.grid_diff(b, step, &cube(hi + step, a.coords().len()), TOL).unwrap();
    !d.equivalent()
}

// ---------------------------------------------------------------------------

/// `I(A;B|C)` by the defining sum over cells.
fn direct_cmi(p: &icckit::JointPmf) -> f64 {
    let cards = p.cards();
    let (na, nb, nc) = (cards[0], cards[1], cards[2]);
    let at = |a: usize, b: usize, c: usize| p.mass()[(a * nb + b) * nc + c];
    let mut total = 0.0;
    for c in 0..nc {
        let pc: f64 = (0..na).flat_map(|a| (0..nb).map(move |b| (a, b))).map(|(a, b)| at(a, b, c)).sum();
        for a in 0..na {
            let pac: f64 = (0..nb).map(|b| at(a, b, c)).sum();
            for b in 0..nb {
                let pbc: f64 = (0..na).map(|x| at(x, b, c)).sum();
                let pabc = at(a, b, c);
                if pabc > 0.0 {
                    total += pabc * ((pabc * pc) / (pac * pbc)).log2();
                }
            }
        }
    }
    total
}

fn shannon_oracle() -> Outcome {
    let mut rng = rng(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let cards: Vec<usize> = (0..3).map(|_| 1 + rand::Rng::random_range(&mut rng, 0..3)).collect();
        let p = random_joint(&cards, &mut rng);
        let got = p.cond_mutual_info(&["A0"], &["A1"], &["A2"]).unwrap();
        worst = worst.max((got - direct_cmi(&p)).abs());
    }
    outcome(worst <= 1e-12, format!("100 joints, max |error| {worst:.2e} bits"))
}

// ---------------------------------------------------------------------------

/// Grid comparison of the projected five-message region against the
/// thirteen listed rows.
pub fn fme_vs_listed(seed: u64) -> (Vec<String>, usize, usize, usize) {
    let mut rng = rng(seed);
    let mut lines = Vec::new();
    let (mut mismatches, mut bad_instances, mut fine) = (0, 0, 0);
    for c in 0..2 {
        let ch = binary_channel(&mut rng);
        for k in 0..20 {
            let f = binary(Family::General, &mut rng);
            let p = induce_joint(&f, &ch).unwrap();
            let fme = regions::projected_region(&p).unwrap();
            let listed = regions::explicit_region(&p).unwrap();
            let d = fme.grid_diff(&listed, 0.05, &cube(2.0, 3), TOL).unwrap();
            lines.push(format!(
                "{c},{k},{},{},{},{}",
                d.only_a, d.only_b, d.both, d.neither
            ));
            mismatches += d.only_a + d.only_b;
            bad_instances += usize::from(!d.equivalent());
            fine += usize::from(fine_differs(&fme, &listed));
        }
    }
    (lines, mismatches, bad_instances, fine)
}

fn fme_equals_listed() -> Outcome {
    let (_, mismatches, bad, fine) = fme_vs_listed(2);
    outcome(
        mismatches == 0,
        format!(
            "{mismatches} mismatched grid points on {bad}/40 instances; on a grid scaled to the region {fine}/40 differ"
        ),
    )
}

// ---------------------------------------------------------------------------

fn strong_interference_reduction() -> Outcome {
    let ch = cross_observing_channel(0.1, 0.2);
    let sweep = strong_interference_sweep(
        &ch,
        &SweepConfig {
            grid_step: None,
            random_samples: 200,
            seed: 3,
            ..SweepConfig::default()
        },
    )
    .unwrap();
    if !sweep.holds {
        return outcome(false, "strong interference fails on the fixture");
    }
    let mut rng = rng(3);
    let (mut mismatches, mut worst_markov, mut fine) = (0, 0.0_f64, 0);
    for _ in 0..20 {
        let f = binary(Family::Sicc, &mut rng);
        assert!(check_strong_interference(&ch, &f).unwrap().holds);
        let p = induce_joint(&f, &ch).unwrap();
        let sicc = regions::sicc_region(&p).unwrap();
        let reduced = regions::sicc_reduced_region(&p)
            .unwrap()
            .without_labels(&SICC_REDUNDANT_ROWS);
        let d = sicc.grid_diff(&reduced, 0.05, &cube(2.0, 3), TOL).unwrap();
        mismatches += d.only_a + d.only_b;
        fine += usize::from(fine_differs(&sicc, &reduced));
        for y in ["Y1", "Y2"] {
            let with = p.cond_mutual_info(&["U0", "X1", "X2"], &[y], &[]).unwrap();
            let without = p.cond_mutual_info(&["X1", "X2"], &[y], &[]).unwrap();
            worst_markov = worst_markov.max((with - without).abs());
        }
    }
    outcome(
        mismatches == 0 && worst_markov <= 1e-10,
        format!(
            "sweep min slack {:.3}/{:.3} over {} samples; {mismatches} mismatches, {fine}/20 differ on a scaled grid; Markov gap {worst_markov:.1e}",
            sweep.min_slack_1, sweep.min_slack_2, sweep.samples
        ),
    )
}

// ---------------------------------------------------------------------------

fn no_common_reduction() -> Outcome {
    let mut rng = rng(4);
    let ch = binary_channel(&mut rng);
    let (mut worst, mut mismatches, mut bad, mut fine) = (0.0_f64, 0, 0, 0);
    for _ in 0..20 {
        let f = binary(Family::Timeshare, &mut rng);
        let p = induce_joint(&f, &ch).unwrap();
        let cmg = regions::cmg_region(&p).unwrap();
        for i in [1, 3, 5, 7] {
            worst = worst.max((cmg.split.rows()[i].rhs - cmg.unsimplified.rows()[i].rhs).abs());
        }
        let explicit = regions::explicit_region(&p.renamed(&[("Q", "U0")]).unwrap())
            .unwrap()
            .slice("R0", 0.0)
            .unwrap();
        let pairs = cmg.rate_pairs().unwrap();
        let d = explicit.grid_diff(&pairs, 0.05, &cube(2.0, 2), TOL).unwrap();
        mismatches += d.only_a + d.only_b;
        bad += usize::from(!d.equivalent());
        fine += usize::from(fine_differs(&explicit, &pairs));
    }
    outcome(
        worst <= 1e-10 && mismatches == 0,
        format!(
            "Markov gap {worst:.1e}; {mismatches} mismatched grid points on {bad}/20 instances, {fine}/20 differ on a scaled grid"
        ),
    )
}

// ---------------------------------------------------------------------------

fn asymmetric_reduction() -> Outcome {
    let mut rng = rng(5);
    let ch = binary_channel(&mut rng);
    let (mut fme_mis, mut slice_mis, mut slice_bad) = (0, 0, 0);
    let (mut fme_fine, mut slice_fine) = (0, 0);
    for _ in 0..20 {
        let f = binary(Family::Aicc, &mut rng);
        let p = induce_joint(&f, &ch).unwrap();
        let (modified, pairs) = regions::aicc_regions(&p).unwrap();
        let fme = modified
            .with_sum_coords(&[("R2", &["R21", "R22"])])
            .unwrap()
            .fourier_motzkin(&["R21", "R22"])
            .unwrap();
        let d = fme.grid_diff(&pairs, 0.05, &cube(2.0, 2), TOL).unwrap();
        fme_mis += d.only_a + d.only_b;
        fme_fine += usize::from(fine_differs(&fme, &pairs));
        let slice = regions::explicit_region(&regions::aicc_as_layered(&p).unwrap())
            .unwrap()
            .slice("R1", 0.0)
            .unwrap();
        let d = slice.grid_diff(&pairs, 0.05, &cube(2.0, 2), TOL).unwrap();
        slice_mis += d.only_a + d.only_b;
        slice_bad += usize::from(!d.equivalent());
        slice_fine += usize::from(fine_differs(&slice, &pairs));
    }
    outcome(
        fme_mis == 0 && slice_mis == 0,
        format!(
            "elimination: {fme_mis} mismatches ({fme_fine}/20 differ on a scaled grid); layered slice: {slice_mis} mismatches on {slice_bad}/20 instances ({slice_fine}/20 on a scaled grid)"
        ),
    )
}

// ---------------------------------------------------------------------------

fn deterministic_consistency() -> Outcome {
    let d = DeterministicSpec::binary_xor();
    let ch = d.lift().unwrap();
    let mut rng = rng(6);
    let (mut worst, mut matched) = (0.0_f64, 0);
    for _ in 0..10 {
        let f = InputFactorization::Dicc(CommonFactors::random(2, 2, 2, &mut rng));
        let p = induce_joint(&f, &ch).unwrap();
        let dicc = regions::dicc_region(&d, &p).unwrap();
        let explicit = regions::explicit_region(&regions::dicc_as_layered(&d, &p).unwrap()).unwrap();
        for (a, b) in dicc.rows().iter().zip(explicit.rows()) {
            let gap = (a.rhs - b.rhs).abs();
            worst = worst.max(gap);
            matched += usize::from(gap <= 1e-10 && a.coeffs == b.coeffs);
        }
    }
    outcome(
        matched == 130,
        format!("{matched}/130 rows equal, max gap {worst:.1e}"),
    )
}

// ---------------------------------------------------------------------------

fn time_sharing() -> Outcome {
    let mut rng = rng(7);
    let ch = binary_channel(&mut rng);
    let (mut checked, mut failures, mut worst) = (0, 0, f64::NEG_INFINITY);
    for _ in 0..20 {
        let f1 = binary(Family::General, &mut rng);
        let f2 = binary(Family::General, &mut rng);
        let s1 = regions::implicit_region(&induce_joint(&f1, &ch).unwrap()).unwrap();
        let s2 = regions::implicit_region(&induce_joint(&f2, &ch).unwrap()).unwrap();
        for alpha in [0.25, 0.5, 0.75] {
            let a = regions::sample_members(&s1, 200, &mut rng).unwrap();
            let b = regions::sample_members(&s2, 200, &mut rng).unwrap();
            let pairs: Vec<(RatePoint, RatePoint)> = a.into_iter().zip(b).collect();
            let r = regions::timeshare_check(&f1, &f2, alpha, &ch, &pairs, TOL).unwrap();
            checked += r.checked;
            failures += r.failures.len();
            worst = worst.max(r.max_violation);
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures in {checked} combinations, max row violation {worst:.2e}"),
    )
}

// ---------------------------------------------------------------------------

/// Interior and exterior simulation on the binary XOR channel.
pub fn simulator_reports(seed: u64) -> (SimReport, SimReport) {
    let interior = SimConfig::xor_fixture(icckit::sim::XOR_INTERIOR, seed);
    let exterior = SimConfig::xor_flat(icckit::sim::XOR_EXTERIOR, seed);
    (
        estimate_errors(&interior).unwrap(),
        estimate_errors(&exterior).unwrap(),
    )
}

fn simulator_discrimination() -> Outcome {
    let cfg = SimConfig::xor_fixture(icckit::sim::XOR_INTERIOR, 8);
    let p = induce_joint(&cfg.factorization, &cfg.channel).unwrap();
    let region = regions::implicit_region(&p).unwrap();
    let min_slack = region
        .slacks(&cfg.rate_point())
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let d = DeterministicSpec::binary_xor();
    let uniform = InputFactorization::Dicc(CommonFactors::independent(vec![0.5, 0.5], vec![0.5, 0.5]));
    let dicc = regions::dicc_region(&d, &induce_joint(&uniform, &d.lift().unwrap()).unwrap()).unwrap();
    let ext = SimConfig::xor_flat(icckit::sim::XOR_EXTERIOR, 8);
    let excess = dicc
        .slacks(&ext.triple_point())
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let (inner, outer) = simulator_reports(8);
    let first = inner.rows.first().unwrap().pe_max;
    let last = inner.rows.last().unwrap().pe_max;
    let outer_min = outer.rows.iter().map(|r| r.pe_max).fold(f64::INFINITY, f64::min);
    let pass = min_slack >= 0.1 && excess <= -0.2 + 1e-9 && last <= INTERIOR_SHRINK * first && outer_min >= EXTERIOR_MIN_ERROR;
    let ladder: Vec<String> = inner.rows.iter().map(|r| format!("{:.3}", r.pe_max)).collect();
    let outer_ladder: Vec<String> = outer.rows.iter().map(|r| format!("{:.3}", r.pe_max)).collect();
    outcome(
        pass,
        format!(
            "interior slack {min_slack:.3}, max error [{}]; exterior excess {:.3}, max error [{}]",
            ladder.join(" "),
            -excess,
            outer_ladder.join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let (lines, _, _, _) = fme_vs_listed(2);
        let (a, b) = simulator_reports(8);
        let path = dir.path().join(format!("run{run}"));
        std::fs::create_dir_all(&path).unwrap();
        std::fs::write(path.join("fme.csv"), lines.join("\n")).unwrap();
        std::fs::write(path.join("interior.csv"), a.to_csv()).unwrap();
        std::fs::write(path.join("exterior.csv"), b.to_csv()).unwrap();
        files.push(path);
    }
    let mut same = true;
    for name in ["fme.csv", "interior.csv", "exterior.csv"] {
        same &= std::fs::read(files[0].join(name)).unwrap() == std::fs::read(files[1].join(name)).unwrap();
    }
    outcome(same, "two runs of the elimination and simulation checks, 3 files compared byte for byte")
}

// ---------------------------------------------------------------------------

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("shannon-measure oracle", shannon_oracle),
        ("elimination matches the thirteen listed rows", fme_equals_listed),
        ("strong-interference reduction", strong_interference_reduction),
        ("no-common-information reduction", no_common_reduction),
        ("asymmetric reduction", asymmetric_reduction),
        ("deterministic region equals layered rows", deterministic_consistency),
        ("time-sharing convexity", time_sharing),
        ("simulator inside/outside discrimination", simulator_discrimination),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "{verdict} [{id}] {name}: {} ({:.1}s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
