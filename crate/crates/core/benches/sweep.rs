use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use csign::sweep::{run_sweep_on, Axis, AxisValues, SweepParam};
use csign::{Execution, GateArray, SimParams, StepSize, SweepSpec};

fn spec(ly_over_g: f64) -> SweepSpec {
    let mut base = SimParams::new(0.0, 0.0, ly_over_g, true);
    base.stepper.step = StepSize::Steps(2_000);
    SweepSpec {
        axes: vec![Axis {
            param: SweepParam::T,
            values: AxisValues::Linear { start: 1.0, stop: 8.0, step: 0.5, include_integers: true },
        }],
        base,
        ..SweepSpec::default()
    }
}

fn bench(c: &mut Criterion) {
    let array = GateArray::new();
    let mut group = c.benchmark_group("t_sweep");
    group.sample_size(10);
    for (label, ly) in [("closed", 0.0), ("leaky", 0.01)] {
        let spec = spec(ly);
        for execution in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(label, format!("{execution:?}")), &spec, |b, spec| {
                b.iter(|| run_sweep_on(&array, black_box(spec), execution).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
