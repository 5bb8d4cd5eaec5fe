use std::collections::BTreeMap;
use std::io;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use modmig_core::graph::{build_graph, IncludeGraph, ScanOptions};
use modmig_core::manifest::LibraryManifest;
use modmig_core::par::Jobs;
use modmig_core::planner::{duplication_report, line_counts, ModuleAssignment};
use modmig_core::sanitizer::{
    run_standalone_checks, standalone_check_plan, CommandExecutor, DiagnosticParser, ExecOutcome,
};
use modmig_core::tree::MemoryTree;
use modmig_core::CanonPath;

const LIBS: usize = 20;
const PER_LIB: usize = 40;

fn synthetic() -> (LibraryManifest, MemoryTree) {
    let mut rng = StdRng::seed_from_u64(7);
    let mut tree = MemoryTree::new();
    let mut tus = Vec::new();
    for l in 0..LIBS {
        let mut tu = String::new();
        for h in 0..PER_LIB {
            let mut body = String::from("#pragma once\n");
            for _ in 0..rng.gen_range(1..6) {
                body.push_str(&format!(
                    "#include \"lib{}/h{}.h\"\n",
                    rng.gen_range(0..=l),
                    rng.gen_range(0..PER_LIB)
                ));
            }
            for i in 0..rng.gen_range(20..200) {
                body.push_str(&format!("int l{l}_h{h}_{i}(int x); // {i}\n"));
            }
            tree.insert(&format!("/w/lib{l}/h{h}.h"), body);
            tu.push_str(&format!("#include \"lib{l}/h{h}.h\"\n"));
        }
        tree.insert(&format!("/w/src/lib{l}.cc"), tu);
        tus.push(format!("\"src/lib{l}.cc\""));
    }
    let libs: Vec<String> = (0..LIBS)
        .map(|l| format!(r#"{{"name": "Lib{l}", "interface_dir": "lib{l}"}}"#))
        .collect();
    let manifest = LibraryManifest::from_json(
        &format!(
            r#"{{"libraries": [{}], "search_paths": ["."], "tu_roots": [{}]}}"#,
            libs.join(","),
            tus.join(",")
        ),
        &CanonPath::new("/w"),
    )
    .unwrap();
    (manifest, tree)
}

fn assignment(graph: &IncludeGraph) -> ModuleAssignment {
    let mut a = ModuleAssignment::new();
    for h in graph.headers() {
        let lib = h.as_str().split('/').nth(2).unwrap();
        // Leave every fourth header unmapped so duplication has work to do.
        if !h.as_str().ends_with("0.h") && !h.as_str().ends_with("4.h") {
            a.assign(h.clone(), lib);
        }
    }
    a
}

/// Spins briefly per header instead of launching a compiler.
struct BusyExecutor;

impl CommandExecutor for BusyExecutor {
    fn execute(&self, argv: &[String]) -> io::Result<ExecOutcome> {
        let mut acc = 0u64;
        for i in 0..20_000u64 {
            acc = acc.wrapping_mul(31).wrapping_add(i);
        }
        Ok(ExecOutcome {
            success: std::hint::black_box(acc) != 1 || argv.is_empty(),
            output: String::new(),
        })
    }
}

fn job_settings() -> Vec<(&'static str, Jobs)> {
    vec![("sequential", Jobs::SEQUENTIAL), ("parallel", Jobs::available())]
}

fn bench(c: &mut Criterion) {
    let (manifest, tree) = synthetic();
    let graph = build_graph(&manifest, &tree, ScanOptions::default()).unwrap();
    let counts: BTreeMap<CanonPath, u64> = line_counts(&graph);
    let assign = assignment(&graph);
    let headers: Vec<CanonPath> = graph.headers().cloned().collect();
    let plan = standalone_check_plan(&headers, "cc -fsyntax-only {header}", &CanonPath::new("/tmp")).unwrap();
    let parser = DiagnosticParser::default();

    let mut group = c.benchmark_group("build_graph");
    for (label, jobs) in job_settings() {
        let opts = ScanOptions {
            jobs,
            ..ScanOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| build_graph(&manifest, &tree, opts).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("duplication_report");
    for (label, jobs) in job_settings() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| duplication_report(&graph, &assign, &counts, jobs))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("standalone_checks");
    for (label, jobs) in job_settings() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| run_standalone_checks(&plan, &BusyExecutor, jobs, &parser))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench
}
criterion_main!(benches);
