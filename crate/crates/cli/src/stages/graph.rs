//! `bridgewatch graph`: subreddit co-participation graph over the dual
//! cohort, with flagged users marked from the flags stage.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use bridgewatch::ingest::{read_records, ParseMode};
use bridgewatch::network::{
    build_graph, coverage_line, degree_ranking, flag_coverage, user_subreddits, write_dot,
    write_edge_csv, write_gexf, write_node_csv,
};

use crate::artifacts::{read_dual_users, read_flag_rows};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{create, require, write_text, RunDir};

pub fn run(config: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    require(&dir.corpus(), "ingest")?;
    require(&dir.dual_users(), "ingest")?;
    require(&dir.flags_csv(), "flags")?;

    let corpus = read_records(&dir.corpus(), ParseMode::Strict)?;
    let dual = read_dual_users(&dir.dual_users())?;
    let flagged: BTreeSet<String> = read_flag_rows(&dir.flags_csv())?
        .into_iter()
        .filter(|r| r.is_flagged)
        .map(|r| r.username)
        .collect();

    let subs = user_subreddits(corpus.records(), &dual);
    let mut graph = build_graph(&subs, &flagged);
    if config.graph.min_edge_weight > 1 {
        graph = graph.filtered(config.graph.min_edge_weight);
    }

    let gexf = dir.gexf();
    write_gexf(&graph, create(&gexf)?).map_err(|e| CliError::io_at(&gexf, e))?;
    let dot = dir.dot();
    write_dot(&graph, create(&dot)?).map_err(|e| CliError::io_at(&dot, e))?;
    write_edge_csv(&graph, create(&dir.edges_csv())?)?;
    write_node_csv(&graph, create(&dir.nodes_csv())?)?;

    let mut degrees = String::new();
    for (name, degree) in degree_ranking(&graph, config.graph.top_degree) {
        let _ = writeln!(degrees, "{name}\t{degree}");
    }
    write_text(&dir.degrees(), &degrees)?;

    let (touched, total) = flag_coverage(&graph);
    let coverage = format!(
        "flagged users participate in {} subreddits\n",
        coverage_line(touched, total)
    );
    write_text(&dir.coverage(), &coverage)?;

    println!("graph: {} nodes, {} edges", graph.n_nodes(), graph.n_edges());
    print!("{coverage}");
    Ok(())
}
