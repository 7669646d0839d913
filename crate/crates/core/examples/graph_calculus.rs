//! Discrete calculus on a reversible Markov graph loaded from JSON.

use graphot::MarkovGraph;

fn main() -> graphot::Result<()> {
    // A lazy walk on a path of three states with a heavier middle.
    let g = MarkovGraph::from_json_str(
        r#"{
            "vertices": 3,
            "labels": ["left", "mid", "right"],
            "pi": [0.25, 0.5, 0.25],
            "edges": [
                {"from": 0, "to": 1, "q": 1.0}, {"from": 1, "to": 0, "q": 0.5},
                {"from": 1, "to": 2, "q": 0.5}, {"from": 2, "to": 1, "q": 1.0}
            ]
        }"#,
    )?;
    let phi = [1.0, -2.0, 0.5];
    let grad = g.gradient(&phi)?;
    let div = g.divergence(&grad)?;
    let lap = g.laplacian(&phi)?;
    for (e, edge) in g.edges().iter().enumerate() {
        println!("grad phi({} -> {}) = {:+.3}", edge.from, edge.to, grad[e]);
    }
    println!("div grad phi = {div:?}");
    println!("laplacian    = {lap:?}");

    // <phi, div Psi>_pi = -<grad phi, Psi>_Q
    let psi: Vec<f64> = (0..g.edge_count()).map(|e| (e as f64).sin()).collect();
    let lhs = g.inner_node(&phi, &g.divergence(&psi)?)?;
    let rhs = -g.inner_edge(&grad, &psi)?;
    println!("integration by parts: {lhs:.15} vs {rhs:.15}");
    Ok(())
}
