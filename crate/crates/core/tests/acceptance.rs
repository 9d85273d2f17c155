//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned
//! through `VerifyOptions::default()` and the budgets below.

use std::time::{Duration, Instant};

use sil_core::verify::{self, CheckLine, VerifyOptions};

struct Outcome {
    label: &'static str,
    line: CheckLine,
    elapsed: Duration,
    budget: Option<Duration>,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.line.passed && self.budget.map_or(true, |b| self.elapsed <= b)
    }
}

fn timed(label: &'static str, budget: Option<u64>, f: impl FnOnce() -> CheckLine) -> Outcome {
    let t = Instant::now();
    let line = f();
    Outcome {
        label,
        line,
        elapsed: t.elapsed(),
        budget: budget.map(Duration::from_secs),
    }
}

#[test]
fn acceptance() {
    let opts = VerifyOptions::default();
    assert_eq!(opts.n_modes, 64);
    assert_eq!(opts.k_set, vec![1, 2, 4, 8]);
    assert_eq!((opts.random_paths, opts.m_max), (50, 32));
    assert_eq!((opts.symmetric_families, opts.symmetric_k_max), (20, 8));
    assert_eq!(opts.even_k_max, 32);
    assert_eq!((opts.duality_samples, opts.duality_tol, opts.round_trip_tol), (1000, 1e-7, 1e-8));
    assert_eq!(opts.sobolev_loops, 1000);
    assert_eq!((opts.orbit_tol, opts.zero_mode_angle), (1e-9, 1e-4));

    let start = Instant::now();
    let mut seqs = Vec::new();
    let mut out = vec![timed("1 Morse = Maslov on six catalog systems, k in {1,2,4,8}", Some(60), || {
        let (line, s) = verify::morse_maslov(&opts);
        seqs = s;
        line
    })];
    out.push(timed("2 iteration inequality, 50 random paths, m <= 32", Some(120), || {
        verify::iteration_inequality(&opts)
    }));
    out.push(timed("3 symmetric identities, 20 reversible families, m <= 8", None, || {
        verify::symmetric_identities(&opts)
    }));
    out.push(timed("4 mean-index relations at m = 32 and bracket overlap", None, || {
        verify::mean_index_relations(&opts, &seqs)
    }));
    out.push(timed("5 even-orbit bound, k <= 32", None, || verify::even_orbit_bound(&opts)));
    out.push(timed("6 duality identities, 1e3 samples per model", None, || {
        verify::duality_identities(&opts)
    }));
    out.push(timed("7 Sobolev inequality, 1e3 loops", None, || verify::sobolev_inequality(&opts)));
    out.push(timed("8 orbit finder and zero mode", None, || verify::orbit_finder(&opts)));
    let total = start.elapsed();

    for o in &out {
        let budget = o.budget.map(|b| format!(" / budget {}s", b.as_secs())).unwrap_or_default();
        println!(
            "{} [{}] {:.1}s{budget}: {}",
            if o.ok() { "PASS" } else { "FAIL" },
            o.label,
            o.elapsed.as_secs_f64(),
            o.line.summary()
        );
        for f in o.line.failures.iter().take(5) {
            println!("      {f}");
        }
    }
    let all_budget = Duration::from_secs(300);
    println!(
        "{} [all criteria] {:.1}s / budget {}s",
        if total <= all_budget { "PASS" } else { "FAIL" },
        total.as_secs_f64(),
        all_budget.as_secs()
    );
    let failed: Vec<&str> = out.iter().filter(|o| !o.ok()).map(|o| o.label).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
    assert!(total <= all_budget, "suite took {total:?}");
}
