//! Times enumeration on random out-degree graphs of growing size.
//!
//! `cargo run --release -p sbk-core --example scaling [n ...]`

use std::time::Instant;

use sbk_core::enumerate_superbubbles;
use sbk_core::randgen::{estimate_model_from_graph, random_out_degree_graph};

fn main() {
    let sizes: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let sizes = if sizes.is_empty() {
        vec![100_000, 300_000, 1_000_000, 2_000_000, 4_000_000]
    } else {
        sizes
    };
    let out_dist = [0.05, 0.45, 0.45, 0.05];
    let graphs: Vec<_> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            random_out_degree_graph(n, &out_dist, 1000 + i as u64).expect("valid distribution")
        })
        .collect();
    // sizes are interleaved so that machine noise hits all of them alike
    let mut best = vec![f64::INFINITY; sizes.len()];
    let mut last = vec![None; sizes.len()];
    for _ in 0..7 {
        for (i, g) in graphs.iter().enumerate() {
            let start = Instant::now();
            let e = enumerate_superbubbles(g);
            best[i] = best[i].min(start.elapsed().as_secs_f64());
            last[i] = Some(e);
        }
    }
    println!("n\tr\tbest_ms\tns_per_vertex\tvisited_per_vertex\tsuperbubbles");
    for (i, g) in graphs.iter().enumerate() {
        let n = sizes[i];
        let r = estimate_model_from_graph(g).expect("non-empty").r();
        let e = last[i].as_ref().expect("ran at least once");
        println!(
            "{n}\t{r:.3}\t{:.2}\t{:.1}\t{:.3}\t{}",
            best[i] * 1e3,
            best[i] * 1e9 / n as f64,
            e.visited_total as f64 / n as f64,
            e.bubbles.len()
        );
    }
}
