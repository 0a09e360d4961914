//! Fits the sensitivity separator on a labeled cloud of follower fractions
//! and scores a few targets against it and against the shipped line.
//!
//! cargo run --example fit_hyperplane -- [seed]

use anonmine::sensitivity::{
    classify_sensitivity, fit_linear_svm, follower_fractions, Hyperplane, Sensitivity, SvmPoint, DEFAULT_C,
};
use anonmine::anonclf::FusedLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anonmine::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Sensitive targets sit above y = 0.4x + 0.1, the rest below it.
    let mut points = Vec::new();
    while points.len() < 67 {
        let (x, y): (f64, f64) = (rng.random_range(0.0..0.8), rng.random_range(0.0..0.6));
        let gap = y - (0.4 * x + 0.1);
        if gap.abs() > 0.02 {
            let label = if gap > 0.0 { Sensitivity::Sensitive } else { Sensitivity::NonSensitive };
            points.push(SvmPoint { x, y, label });
        }
    }
    let fitted = fit_linear_svm(&points, DEFAULT_C)?;
    let correct = points.iter().filter(|p| fitted.classify(p.x, p.y) == p.label).count();
    println!("fitted y = {:.4}x + {:.4}, training accuracy {correct}/{}", fitted.slope, fitted.intercept, points.len());

    let shipped = Hyperplane::default();
    println!("shipped y = {}x + {}", shipped.slope, shipped.intercept);
    use FusedLabel::*;
    let targets = [
        ("mostly_anonymous", [vec![Anonymous; 60], vec![Identifiable; 30], vec![Unknown; 10]].concat()),
        ("mostly_named", [vec![Anonymous; 5], vec![Identifiable; 85], vec![Unknown; 10]].concat()),
    ];
    for (id, labels) in targets {
        let stats = follower_fractions(id, &labels)?;
        let a = classify_sensitivity(&fitted, &stats);
        let b = classify_sensitivity(&shipped, &stats);
        println!(
            "{id}: x={:.2} y={:.2}  fitted {} ({:+.3})  shipped {} ({:+.3})",
            stats.x, stats.y, a.label, a.signed_distance, b.label, b.signed_distance
        );
    }
    Ok(())
}
