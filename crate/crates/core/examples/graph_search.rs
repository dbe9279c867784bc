//! Exhaustive search of loopy graphs for realizable splits.
//!
//! `cargo run --release --example graph_search -- 5`

use netsplit::graphs::{search_graphs, SearchMode};

fn main() -> netsplit::Result<()> {
    let nodes: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    for n in 1..=nodes {
        let summary = search_graphs(n, SearchMode::NoneExists)?;
        println!(
            "n = {n}: {} graphs, {} subsets, {} singular, {} realizable",
            summary.graphs_checked,
            summary.subsets_checked,
            summary.singular_subsets,
            summary.realizable_splits
        );
    }
    let first = search_graphs(nodes, SearchMode::First)?;
    match first.certificates.first() {
        Some(c) => println!(
            "first hit on {nodes} nodes: code {}, S = {:?}, K = {} ({:?})\n{:?}",
            c.code,
            c.split,
            c.exact,
            c.kind,
            c.graph.adjacency()
        ),
        None => println!("no realizable split on {nodes} nodes"),
    }
    Ok(())
}
