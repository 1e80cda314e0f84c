use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roughmap_core::par::Execution;
use roughmap_core::pipeline::{Analyzer, PatchInput, PipelineConfig};
use roughmap_core::preprocess::PatchSpec;
use roughmap_core::synth::{generate_patch, generate_traverse, AttitudeSchedule, LateralModel, Segment, SurfaceModel, TraverseScript};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn grid_analysis(c: &mut Criterion) {
    let spec = PatchSpec::default();
    let grid = generate_patch(&SurfaceModel { phi0: 1734e-6, waviness: -2.59 }, &spec, 1).unwrap();
    let mut group = c.benchmark_group("analyze_grid");
    for (name, exec) in modes() {
        let analyzer = Analyzer::with_execution(PipelineConfig::default(), exec).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &grid, |b, g| {
            b.iter(|| analyzer.analyze_grid(g).unwrap())
        });
    }
    group.finish();
}

fn traverse_processing(c: &mut Criterion) {
    let script = TraverseScript {
        seed: 5,
        noise: 0.004,
        patch: PatchSpec::default(),
        attitude: AttitudeSchedule::Uniform { max_roll_deg: 3.0, max_pitch_deg: 4.5 },
        lateral: LateralModel::Correlated,
        density: 1,
        segments: vec![Segment { name: "ploughed".into(), model: SurfaceModel { phi0: 1734e-6, waviness: -2.59 }, patches: 8 }],
        defects: Vec::new(),
    };
    let inputs: Vec<PatchInput> = generate_traverse(&script)
        .unwrap()
        .into_iter()
        .map(|p| PatchInput { index: p.index, cloud: p.cloud, attitude: Some(p.attitude) })
        .collect();
    let mut group = c.benchmark_group("process_traverse_8");
    group.sample_size(10);
    for (name, exec) in modes() {
        let analyzer = Analyzer::with_execution(PipelineConfig::default(), exec).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &inputs, |b, inp| b.iter(|| analyzer.process(inp)));
    }
    group.finish();
}

criterion_group!(benches, grid_analysis, traverse_processing);
criterion_main!(benches);
