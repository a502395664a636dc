use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use xlmimo_core::benchmarks::{central_mrc, central_zf};
use xlmimo_core::channel::{generate_block, ChannelConfig, ChannelScenario};
use xlmimo_core::fusion::{sic_detect, FusionMode, FusionParams, ReceiverConfig};
use xlmimo_core::lpu::Constellation;
use xlmimo_core::numerics::sample_cgauss_vector;
use xlmimo_core::{CVector, SimRng};

fn setup(antennas: usize, users: usize) -> (xlmimo_core::CMatrix, CVector) {
    let cfg = ChannelConfig {
        antennas,
        users,
        ..Default::default()
    };
    let mut rng = SimRng::new(1);
    let real = generate_block(&cfg, ChannelScenario::LowCorr, 1, true, &mut rng)
        .unwrap()
        .remove(0);
    let qpsk = Constellation::qpsk();
    let x = CVector::from_iterator(users, (0..users).map(|_| qpsk.point(rng.index(4))));
    let y = real.h() * x + sample_cgauss_vector(&mut rng, antennas, 0.1).unwrap();
    (real.h().clone(), y)
}

fn detectors(c: &mut Criterion) {
    let (h, y) = setup(256, 32);
    let qpsk = Constellation::qpsk();
    let mut group = c.benchmark_group("detect_256x32");
    group.sample_size(20);
    group.bench_function("mrc", |b| b.iter(|| central_mrc(&y, &h, &qpsk)));
    group.bench_function("zf", |b| b.iter(|| central_zf(&y, &h, &qpsk).unwrap()));
    for mode in [FusionMode::All, FusionMode::Hyb] {
        let cfg = ReceiverConfig {
            fusion: FusionParams {
                mode,
                p0: 0.75,
                b_max: 3,
            },
            ..ReceiverConfig::new(qpsk.clone(), 4, 0.1)
        };
        group.bench_function(format!("vmp_sic_{mode:?}").to_lowercase(), |b| {
            b.iter(|| sic_detect(&y, &h, &cfg).unwrap())
        });
    }
    group.finish();
}

fn channel(c: &mut Criterion) {
    let cfg = ChannelConfig {
        antennas: 256,
        users: 32,
        ..Default::default()
    };
    c.bench_function("channel_block_256x32_x10", |b| {
        b.iter_batched(
            || SimRng::new(9),
            |mut rng| generate_block(&cfg, ChannelScenario::LowCorr, 10, false, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, detectors, channel);
criterion_main!(benches);
