//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use levelcheck::appendix::{appendix_reports, index_check, Case};
use levelcheck::divisor::{
    d_c, distribution_check, f_m_annihilation_check, n_m, n_m_grid_check, trace_invariance_check, valuation,
};
use levelcheck::enumeration::{brute_force_members, exact_order_bijection_check, oracle_g1, remark_pattern_equivalence};
use levelcheck::gsp6::gsp6_stabilizer_check;
use levelcheck::order::{subgroup_order, OrderOptions};
use levelcheck::report::CheckReport;
use levelcheck::unitary::{hermitian_decomposition_check, split_iso_check};
use levelcheck::{GroupKind, RingSpec, SubgroupSpec};
use num_bigint::{BigInt, BigUint};
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn verdicts(reports: &[&CheckReport]) -> (bool, Vec<String>) {
    let mut notes = Vec::new();
    for r in reports {
        if !r.pass {
            let why = r.error.clone().or_else(|| r.counterexamples.first().cloned()).unwrap_or_else(|| format!("computed {}", r.computed));
            notes.push(format!("{} {} failed: {why}", r.name, json!(r.params)));
        }
    }
    (notes.is_empty(), notes)
}

fn opts() -> OrderOptions {
    OrderOptions { seed: 20240601, ..OrderOptions::default() }
}

fn criterion_1() -> Outcome {
    let runs = [
        (Case::Split, 2, None),
        (Case::Split, 3, None),
        (Case::Split, 5, Some(-1)),
        (Case::Inert, 2, Some(-3)),
        (Case::Inert, 3, Some(-1)),
    ];
    let mut reports = Vec::new();
    let mut slowest = 0.0f64;
    for (case, p, field) in runs {
        let start = Instant::now();
        reports.push(index_check(case, p, 1, 6, field, &opts()));
        slowest = slowest.max(secs(start.elapsed()));
    }
    let (mut pass, mut notes) = verdicts(&reports.iter().collect::<Vec<_>>());
    if slowest > 300.0 {
        pass = false;
        notes.push(format!("slowest run took {slowest:.1} s"));
    }
    let shown: Vec<String> = reports.iter().map(|r| format!("{}:{}", r.params["p"], r.computed)).collect();
    Outcome { pass, detail: format!("[V:V'] = {} (slowest {slowest:.1} s) {}", shown.join(" "), notes.join("; ")) }
}

/// Appendix reports for split p = 2, 3 and inert Q(sqrt(-3)) p = 2, Q(i) p = 3.
fn appendix_runs() -> Vec<(String, Vec<CheckReport>)> {
    [(Case::Split, 2, None), (Case::Split, 3, None), (Case::Inert, 2, Some(-3)), (Case::Inert, 3, Some(-1))]
        .into_iter()
        .map(|(case, p, field)| (format!("{case} p={p}"), appendix_reports(case, p, 1, field, &opts())))
        .collect()
}

fn by_name<'a>(runs: &'a [(String, Vec<CheckReport>)], name: &str) -> Vec<&'a CheckReport> {
    runs.iter().flat_map(|(_, rs)| rs.iter().filter(|r| r.name == name)).collect()
}

fn criterion_2(runs: &[(String, Vec<CheckReport>)]) -> Outcome {
    let reports: Vec<&CheckReport> =
        [by_name(runs, "transversal-sigma"), by_name(runs, "transversal-sigma-prime")].concat();
    let (mut pass, mut notes) = verdicts(&reports);
    pass &= reports.len() == 8;
    for r in &reports {
        if r.elapsed_ms > 120_000 {
            pass = false;
            notes.push(format!("{} {} took {} ms", r.name, r.params["p"], r.elapsed_ms));
        }
    }
    let sizes: Vec<String> = reports.iter().map(|r| r.computed["reps"].as_str().unwrap_or("?").to_string()).collect();
    let slowest = reports.iter().map(|r| r.elapsed_ms).max().unwrap_or(0);
    Outcome { pass, detail: format!("{} transversals of sizes {} (slowest {slowest} ms) {}", reports.len(), sizes.join(","), notes.join("; ")) }
}

fn criterion_3(runs: &[(String, Vec<CheckReport>)]) -> Outcome {
    let reports = by_name(runs, "closed-immersion");
    let (pass, notes) = verdicts(&reports);
    let counts: Vec<String> = reports.iter().map(|r| format!("{}", r.params["enumerated"])).collect();
    Outcome {
        pass: pass && reports.len() == 4,
        detail: format!("points enumerated mod p^2: {}, counterexamples 0 {}", counts.join(","), notes.join("; ")),
    }
}

fn criterion_4(runs: &[(String, Vec<CheckReport>)]) -> Outcome {
    let reports = by_name(runs, "degree-equality");
    let (pass, notes) = verdicts(&reports);
    let shown: Vec<String> = reports.iter().map(|r| format!("{}", r.computed["h_index"])).collect();
    Outcome { pass: pass && reports.len() == 4, detail: format!("H-side indices {} {}", shown.join(","), notes.join("; ")) }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let reports: Vec<CheckReport> =
        [(2, 2, 1), (1, 3, 1), (1, 2, 2)].into_iter().map(|(g, p, m)| exact_order_bijection_check(g, p, m, &opts())).collect();
    let elapsed = secs(start.elapsed());
    let (pass, notes) = verdicts(&reports.iter().collect::<Vec<_>>());
    let counts: Vec<String> =
        reports.iter().map(|r| format!("{}={}", r.computed["exact_order_vectors"], r.computed["index"])).collect();
    Outcome { pass: pass && elapsed < 10.0, detail: format!("{} in {elapsed:.2} s {}", counts.join(" "), notes.join("; ")) }
}

fn criterion_6() -> Outcome {
    let o = opts();
    let mut notes = Vec::new();
    let mut shown = Vec::new();
    let cases = [(GroupKind::Gl, 2, 2, 2, 96u64), (GroupKind::Gl, 2, 3, 2, 3888), (GroupKind::Similitude, 4, 2, 1, 720)];
    for (kind, n, p, k, want) in cases {
        let spec = SubgroupSpec::ambient(RingSpec::rational(p, k), kind, n);
        let brute = brute_force_members(&spec, 1 << 20).map(|v| v.len() as u64);
        let lifted = subgroup_order(&spec, &o);
        match (brute, lifted) {
            (Ok(b), Ok(l)) if l == BigUint::from(b) && b == want => shown.push(format!("{b}")),
            (b, l) => notes.push(format!("{kind:?} n={n} mod {p}^{k}: brute {b:?}, lifted {l:?}, want {want}")),
        }
    }
    let q = BigUint::from(3u32);
    let classical = (&q - 1u32) * q.pow(4) * (q.pow(2) - 1u32) * (q.pow(4) - 1u32);
    match subgroup_order(&SubgroupSpec::ambient(RingSpec::rational(3, 1), GroupKind::Similitude, 4), &o) {
        Ok(l) if l == classical => shown.push(format!("{l}")),
        other => notes.push(format!("GSp4(F3): lifted {other:?}, classical {classical}")),
    }
    let pipeline: Vec<CheckReport> = [(2, 2), (3, 2)].into_iter().map(|(p, k)| oracle_g1(p, k, &o)).collect();
    let (ok, more) = verdicts(&pipeline.iter().collect::<Vec<_>>());
    notes.extend(more);
    Outcome { pass: notes.is_empty() && ok, detail: format!("orders {} match, GL2 pipeline agrees {}", shown.join(","), notes.join("; ")) }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut checked = 0;
    for c in 1..=10u64 {
        for g in 1..=3usize {
            if c.pow(2 * g as u32) > 1_000_000 {
                continue;
            }
            match d_c(c, g) {
                Ok(d) if d.degree() == BigInt::from(0) => checked += 1,
                other => notes.push(format!("deg D_{c} for g = {g}: {other:?}")),
            }
            if g <= 2 {
                let r = trace_invariance_check(c, g);
                if !r.pass {
                    notes.push(format!("D_{c} moved for g = {g}: {:?}", r.counterexamples));
                }
            }
        }
    }
    let mut dist = 0;
    for c1 in 2..=5 {
        for c2 in 2..=5 {
            for g in 1..=2 {
                let r = distribution_check(c1, c2, g);
                dist += 1;
                if !r.pass {
                    notes.push(format!("distribution ({c1},{c2},{g}) fails"));
                }
            }
        }
    }
    let elapsed = secs(start.elapsed());
    if elapsed > 30.0 {
        notes.push(format!("took {elapsed:.1} s"));
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!("{checked} degree-zero classes, {dist} distribution identities in {elapsed:.2} s {}", notes.join("; ")),
    }
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    for g in 1..=3 {
        for m in 1..=5 {
            let r = f_m_annihilation_check(g, m);
            if !r.pass {
                notes.push(format!("F_m fails at g = {g}, m = {m}"));
            }
        }
    }
    let table = [(2usize, 3u64, 7u64, 33280i64, Some(0u32)), (2, 2, 5, 315, Some(1))];
    for (g, m, p, value, v) in table {
        let n = n_m(g, m);
        if n != BigInt::from(value) || valuation(&n, p) != v {
            notes.push(format!("N_{m} at g = {g} is {n} with v_{p} = {:?}", valuation(&n, p)));
        }
    }
    let grid = n_m_grid_check(23, 3);
    if !grid.pass {
        notes.push(format!("grid: {:?}", grid.counterexamples));
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!(
            "15 annihilations, N_3 = 33280 (v_7 = 0), N_2 = 315 (v_5 = 1), grid {} cases {}",
            grid.params.get("cases").cloned().unwrap_or_default(),
            notes.join("; ")
        ),
    }
}

fn criterion_9() -> Outcome {
    let r = split_iso_check(5, 3, 10_000, 9);
    let (pass, notes) = verdicts(&[&r]);
    Outcome { pass, detail: format!("10^4 round trips mod 5^3, computed {} {}", r.computed, notes.join("; ")) }
}

fn criterion_10() -> Outcome {
    let reports = [hermitian_decomposition_check(3, 1, -1, 10_000, 10), hermitian_decomposition_check(2, 1, -3, 10_000, 10)];
    let (pass, notes) = verdicts(&reports.iter().collect::<Vec<_>>());
    let shown: Vec<String> = reports.iter().map(|r| format!("d={} {}", r.params["field_d"], r.computed)).collect();
    Outcome { pass, detail: format!("{} {}", shown.join(" "), notes.join("; ")) }
}

fn criterion_11() -> Outcome {
    let o = opts();
    let faithful = [
        remark_pattern_equivalence(2, 1, 4, 100_000, true, None, None, &o),
        remark_pattern_equivalence(2, 1, 4, 100_000, false, Some(-3), None, &o),
    ];
    let (mut pass, mut notes) = verdicts(&faithful.iter().collect::<Vec<_>>());
    let fault = remark_pattern_equivalence(2, 1, 4, 100_000, true, None, Some((1, 0)), &o);
    if fault.pass {
        pass = false;
        notes.push("weakened (2,1) entry is not detected".into());
    }
    let sensitive = remark_pattern_equivalence(2, 1, 4, 100_000, true, None, Some((2, 1)), &o);
    notes.push(format!(
        "weakened (3,2) entry detected: {} (orders {} vs {})",
        !sensitive.pass, sensitive.params["order_resolved"], sensitive.params["order_recursive"]
    ));
    Outcome { pass, detail: format!("split and inert orders {} {}", faithful[0].params["order_recursive"], notes.join("; ")) }
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let r5 = gsp6_stabilizer_check(5, None, 12);
    let t5 = secs(start.elapsed());
    let r7 = gsp6_stabilizer_check(7, None, 12);
    let (mut pass, mut notes) = verdicts(&[&r5, &r7]);
    if t5 > 600.0 {
        pass = false;
        notes.push(format!("p = 5 took {t5:.1} s"));
    }
    Outcome {
        pass,
        detail: format!("counts {} and {} ({t5:.1} s at p = 5) {}", r5.computed["count"], r7.computed["count"], notes.join("; ")),
    }
}

fn main() {
    let titles = [
        "index p^10 by order counting",
        "transversals of sigma and sigma'",
        "closed immersion mod p^{m+1}",
        "degree equality",
        "level-structure bijection",
        "lifting against brute force",
        "divisor suite",
        "operator suite",
        "split isomorphism",
        "hermitian decomposition",
        "resolved pattern and its fault variant",
        "GSp_6 stabilizer",
    ];
    let mut failed = 0;
    let mut report = |i: usize, start: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {verdict} {} ({:.1} s): {}", i, titles[i - 1], secs(start.elapsed()), o.detail.trim());
    };
    let t = Instant::now();
    report(1, t, criterion_1());
    let t = Instant::now();
    let runs = appendix_runs();
    report(2, t, criterion_2(&runs));
    report(3, t, criterion_3(&runs));
    report(4, t, criterion_4(&runs));
    let t = Instant::now();
    report(5, t, criterion_5());
    let t = Instant::now();
    report(6, t, criterion_6());
    let t = Instant::now();
    report(7, t, criterion_7());
    let t = Instant::now();
    report(8, t, criterion_8());
    let t = Instant::now();
    report(9, t, criterion_9());
    let t = Instant::now();
    report(10, t, criterion_10());
    let t = Instant::now();
    report(11, t, criterion_11());
    let t = Instant::now();
    report(12, t, criterion_12());
    println!("{} of 12 criteria pass", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
