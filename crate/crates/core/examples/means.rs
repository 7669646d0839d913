//! The logarithmic and geometric means and their superdifferential at the origin.

use graphot::means::{Mean, MeanKind};

fn main() {
    for mean in [MeanKind::Logarithmic, MeanKind::Geometric] {
        println!("{mean} mean");
        for (s, t) in [(1.0, 1.0), (1.0, std::f64::consts::E), (2.0, 0.5), (1.0, 0.0)] {
            println!("  theta({s:.3}, {t:.3}) = {:.6}", mean.theta(s, t));
        }
        let (d1, d2) = mean.partials(1.0, 4.0);
        println!("  partials at (1, 4): ({d1:.6}, {d2:.6})");
        for z in [[0.4, 10.0], [0.6, 0.6], [0.3, 0.3]] {
            println!("  z = {z:?} in superdifferential at 0: {}", mean.in_superdifferential_at_origin(z));
        }
    }
}
