//! Named test graphs.
//!
//! Unless stated otherwise the graphs use the simple random walk weights of
//! [`MarkovGraph::uniform_edge`]. Vertex numbering:
//!
//! * `cube`, `hypercube4`: vertex `k` has coordinates given by the bits of `k`,
//!   so the vertex opposite to `k` is `k ^ (2^d - 1)`.
//! * `lattice3x3`, `grid2d(M)`: vertex `(i, j)` is `i * (M + 1) + j`.
//! * `chain(M)`: path `0 - 1 - ... - M`.

use crate::error::{Error, Result};
use crate::graph::MarkovGraph;

pub const NAMES: &[&str] = &[
    "two-node(p,q)",
    "triangle",
    "lattice3x3",
    "cube",
    "hypercube4",
    "chain(M)",
    "grid2d(M)",
    "line5",
];

pub fn triangle() -> MarkovGraph {
    MarkovGraph::uniform_edge(3, &[(0, 1), (1, 2), (2, 0)]).expect("triangle is valid")
}

pub fn hypercube(dim: u32) -> MarkovGraph {
    let n = 1usize << dim;
    let mut adjacency = Vec::new();
    for x in 0..n {
        for b in 0..dim {
            let y = x ^ (1 << b);
            if x < y {
                adjacency.push((x, y));
            }
        }
    }
    MarkovGraph::uniform_edge(n, &adjacency).expect("hypercube is valid")
}

pub fn cube() -> MarkovGraph {
    hypercube(3)
}

/// Square grid with `(m + 1)^2` vertices.
pub fn grid2d(m: usize) -> Result<MarkovGraph> {
    if m == 0 {
        return Err(Error::InvalidGraph("grid2d needs M >= 1".into()));
    }
    let side = m + 1;
    let mut adjacency = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let k = i * side + j;
            if j + 1 < side {
                adjacency.push((k, k + 1));
            }
            if i + 1 < side {
                adjacency.push((k, k + side));
            }
        }
    }
    MarkovGraph::uniform_edge(side * side, &adjacency)
}

pub fn lattice3x3() -> MarkovGraph {
    grid2d(2).expect("lattice is valid")
}

/// Path with `m + 1` vertices.
pub fn chain(m: usize) -> Result<MarkovGraph> {
    if m == 0 {
        return Err(Error::InvalidGraph("chain needs M >= 1".into()));
    }
    let adjacency: Vec<_> = (0..m).map(|i| (i, i + 1)).collect();
    MarkovGraph::uniform_edge(m + 1, &adjacency)
}

/// Five vertices on a line with `π = (1, 2, 2, 2, 1)/8`, `Q = ½` out of the
/// end points and `Q = ¼` out of interior vertices.
pub fn line5() -> MarkovGraph {
    let pi: Vec<f64> = [1.0, 2.0, 2.0, 2.0, 1.0].iter().map(|w| w / 8.0).collect();
    let rate = |x: usize| if x == 0 || x == 4 { 0.5 } else { 0.25 };
    let mut edges = Vec::new();
    for x in 0..4 {
        edges.push((x, x + 1, rate(x)));
        edges.push((x + 1, x, rate(x + 1)));
    }
    MarkovGraph::new(5, edges, pi).expect("line5 is valid")
}

/// Initial density `(1, 1, 5, 1, 1)/2` for [`line5`], which has unit mass.
pub fn line5_initial_density() -> Vec<f64> {
    vec![0.5, 0.5, 2.5, 0.5, 0.5]
}

fn parse_args(name: &str) -> Result<(String, Vec<f64>)> {
    let name = name.trim();
    match name.find('(') {
        None => Ok((name.to_string(), Vec::new())),
        Some(open) => {
            let close = name
                .rfind(')')
                .filter(|&c| c > open && c == name.len() - 1)
                .ok_or_else(|| Error::InvalidGraph(format!("malformed builtin name {name:?}")))?;
            let args = name[open + 1..close]
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidGraph(format!("bad argument {s:?} in {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((name[..open].trim().to_string(), args))
        }
    }
}

/// A random irreducible reversible chain on `n` vertices: a random spanning
/// tree plus each further pair with probability `extra`, symmetric
/// conductances `c ∈ [0.1, 1]` and `π ∈ [0.1, 1]` (normalized), so that
/// `Q(x, y) = c(x, y)/π(x)`.
pub fn random_reversible<R: rand::Rng>(n: usize, extra: f64, rng: &mut R) -> Result<MarkovGraph> {
    if n < 2 {
        return Err(Error::InvalidGraph("random graphs need at least two vertices".into()));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut pi: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let drift = 1.0 - pi.iter().sum::<f64>();
    pi[0] += drift;
    let mut pairs = Vec::new();
    for y in 1..n {
        pairs.push((rng.gen_range(0..y), y));
    }
    for x in 0..n {
        for y in x + 1..n {
            if !pairs.contains(&(x, y)) && rng.gen_bool(extra.clamp(0.0, 1.0)) {
                pairs.push((x, y));
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * pairs.len());
    for (x, y) in pairs {
        let c = rng.gen_range(0.1..1.0);
        edges.push((x, y, c / pi[x]));
        edges.push((y, x, c / pi[y]));
    }
    MarkovGraph::new(n, edges, pi)
}

fn count_arg(args: &[f64], name: &str) -> Result<usize> {
    match args {
        [m] if *m >= 1.0 && m.fract() == 0.0 => Ok(*m as usize),
        _ => Err(Error::InvalidGraph(format!("{name} takes one positive integer argument"))),
    }
}

/// Resolves names such as `cube`, `chain(8)` or `two-node(1,0.5)`.
pub fn by_name(name: &str) -> Result<MarkovGraph> {
    let (base, args) = parse_args(name)?;
    let no_args = |g: MarkovGraph| {
        if args.is_empty() {
            Ok(g)
        } else {
            Err(Error::InvalidGraph(format!("{base} takes no arguments")))
        }
    };
    match base.as_str() {
        "two-node" => match args.as_slice() {
            [] => MarkovGraph::two_node(1.0, 1.0),
            [p, q] => MarkovGraph::two_node(*p, *q),
            _ => Err(Error::InvalidGraph("two-node takes (p,q)".into())),
        },
        "triangle" => no_args(triangle()),
        "lattice3x3" => no_args(lattice3x3()),
        "cube" => no_args(cube()),
        "hypercube4" => no_args(hypercube(4)),
        "line5" => no_args(line5()),
        "chain" => chain(count_arg(&args, "chain")?),
        "grid2d" => grid2d(count_arg(&args, "grid2d")?),
        _ => Err(Error::InvalidGraph(format!(
            "unknown builtin {name:?}; known: {}",
            NAMES.join(", ")
        ))),
    }
}
