//! Record a scripted-expert demonstration and print a rollout summary plus
//! an ASCII rendering of the final scene.
//!
//!     cargo run -p physim --example rollout -- latch-door 7

use physim::{record_demo, render, EnvKind, RecordOptions, GRID};

fn main() {
    let mut args = std::env::args().skip(1);
    let kind = args
        .next()
        .map(|s| EnvKind::parse(&s).expect("block-insertion or latch-door"))
        .unwrap_or(EnvKind::BlockInsert);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);

    let demo = record_demo(kind, seed, RecordOptions::default()).expect("rollout failed");
    println!(
        "{} seed {}: success={} T={}",
        kind.name(),
        seed,
        demo.success,
        demo.horizon()
    );

    let (intensity, _) = render(demo.final_state());
    for row in 0..GRID {
        let line: String = (0..GRID)
            .map(|col| match intensity.get(row, col) {
                v if v == 0.0 => ' ',
                v if v < 0.5 => '.',
                v if v < 0.8 => 'o',
                _ => '#',
            })
            .collect();
        println!("|{line}|");
    }
}
