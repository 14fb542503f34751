//! Subreddit co-participation graph.
//!
//! Every user contributes +1 to the edge weight of each unordered pair of
//! distinct subreddits it participates in, so an edge's weight is the
//! number of shared users. Nodes track how many users touched them and
//! whether any of those users is flagged. Degree counts incident stored
//! edges, not weight mass.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use thiserror::Error;

use crate::ingest::PostRecord;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: line {line}: {message}")]
    Malformed { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeStats {
    pub degree: usize,
    pub n_users: usize,
    pub has_flagged_user: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoParticipationGraph {
    nodes: BTreeMap<String, NodeStats>,
    edges: BTreeMap<(String, String), u64>,
}

impl CoParticipationGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, name: &str) -> Option<&NodeStats> {
        self.nodes.get(name)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, &NodeStats)> {
        self.nodes.iter().map(|(n, s)| (n.as_str(), s))
    }

    /// Order-insensitive edge lookup.
    pub fn edge(&self, a: &str, b: &str) -> Option<u64> {
        let key = if a <= b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        self.edges.get(&key).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges.iter().map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Copy with edges below `min_weight` dropped and degrees recomputed.
    /// Nodes are kept even when isolated; intended for rendering large
    /// graphs, not analysis.
    pub fn filtered(&self, min_weight: u64) -> Self {
        let edges: BTreeMap<(String, String), u64> =
            self.edges.iter().filter(|(_, w)| **w >= min_weight).map(|(k, w)| (k.clone(), *w)).collect();
        let mut nodes = self.nodes.clone();
        for stats in nodes.values_mut() {
            stats.degree = 0;
        }
        for (a, b) in edges.keys() {
            nodes.get_mut(a).expect("edge endpoint is a node").degree += 1;
            nodes.get_mut(b).expect("edge endpoint is a node").degree += 1;
        }
        CoParticipationGraph { nodes, edges }
    }
}

/// Collect each listed user's set of subreddits from its records.
pub fn user_subreddits(
    records: &[PostRecord],
    users: &BTreeSet<String>,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut map: BTreeMap<String, BTreeSet<String>> =
        users.iter().map(|u| (u.clone(), BTreeSet::new())).collect();
    for record in records {
        if let Some(set) = map.get_mut(&record.author) {
            set.insert(record.subreddit.clone());
        }
    }
    map.retain(|_, set| !set.is_empty());
    map
}

/// Build the graph. Subreddit names must already be normalized lowercase.
/// Every unordered pair of distinct subreddits in a user's set adds 1 to
/// that edge; a node is flagged when any flagged user touches it.
pub fn build_graph(
    user_subs: &BTreeMap<String, BTreeSet<String>>,
    flagged: &BTreeSet<String>,
) -> CoParticipationGraph {
    let mut nodes: BTreeMap<String, NodeStats> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (user, subs) in user_subs {
        let is_flagged = flagged.contains(user);
        for sub in subs {
            let stats = nodes.entry(sub.clone()).or_default();
            stats.n_users += 1;
            stats.has_flagged_user |= is_flagged;
        }
        let ordered: Vec<&String> = subs.iter().collect();
        for i in 0..ordered.len() {
            for j in (i + 1)..ordered.len() {
                *edges.entry((ordered[i].clone(), ordered[j].clone())).or_insert(0) += 1;
            }
        }
    }
    for (a, b) in edges.keys() {
        nodes.get_mut(a).expect("endpoint seen").degree += 1;
        nodes.get_mut(b).expect("endpoint seen").degree += 1;
    }
    CoParticipationGraph { nodes, edges }
}

/// Top `n` nodes by degree, ties by name ascending. Asking for more nodes
/// than exist returns all of them.
pub fn degree_ranking(graph: &CoParticipationGraph, n: usize) -> Vec<(String, usize)> {
    let mut ranked: Vec<(String, usize)> =
        graph.nodes().map(|(name, s)| (name.to_owned(), s.degree)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

/// (nodes touched by a flagged user, total nodes).
pub fn flag_coverage(graph: &CoParticipationGraph) -> (usize, usize) {
    let touched = graph.nodes().filter(|(_, s)| s.has_flagged_user).count();
    (touched, graph.n_nodes())
}

/// Thousands-grouped rendering, e.g. 1668 -> "1,668".
pub fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Coverage line in the report format, e.g. "1,668 of 1,819".
pub fn coverage_line(touched: usize, total: usize) -> String {
    format!("{} of {}", group_thousands(touched), group_thousands(total))
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

/// GEXF 1.2 export with has_flagged_user and degree node attributes and
/// weighted undirected edges.
pub fn write_gexf<W: Write>(graph: &CoParticipationGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(w, r#"<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">"#)?;
    writeln!(w, r#"  <graph defaultedgetype="undirected">"#)?;
    writeln!(w, r#"    <attributes class="node">"#)?;
    writeln!(w, r#"      <attribute id="0" title="has_flagged_user" type="boolean"/>"#)?;
    writeln!(w, r#"      <attribute id="1" title="degree" type="integer"/>"#)?;
    writeln!(w, r#"    </attributes>"#)?;
    writeln!(w, r#"    <nodes>"#)?;
    for (name, stats) in graph.nodes() {
        let esc = xml_escape(name);
        writeln!(w, r#"      <node id="{esc}" label="{esc}">"#)?;
        writeln!(w, r#"        <attvalues>"#)?;
        writeln!(w, r#"          <attvalue for="0" value="{}"/>"#, stats.has_flagged_user)?;
        writeln!(w, r#"          <attvalue for="1" value="{}"/>"#, stats.degree)?;
        writeln!(w, r#"        </attvalues>"#)?;
        writeln!(w, r#"      </node>"#)?;
    }
    writeln!(w, r#"    </nodes>"#)?;
    writeln!(w, r#"    <edges>"#)?;
    for (id, (a, b, weight)) in graph.edges().enumerate() {
        writeln!(
            w,
            r#"      <edge id="{id}" source="{}" target="{}" weight="{weight}"/>"#,
            xml_escape(a),
            xml_escape(b),
        )?;
    }
    writeln!(w, r#"    </edges>"#)?;
    writeln!(w, r#"  </graph>"#)?;
    writeln!(w, r#"</gexf>"#)
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT export (undirected `graph`); flagged nodes carry `color=red`.
pub fn write_dot<W: Write>(graph: &CoParticipationGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "graph coparticipation {{")?;
    for (name, stats) in graph.nodes() {
        let color = if stats.has_flagged_user { ", color=red" } else { "" };
        writeln!(
            w,
            "  {} [degree={}, n_users={}{color}];",
            dot_quote(name),
            stats.degree,
            stats.n_users,
        )?;
    }
    for (a, b, weight) in graph.edges() {
        writeln!(w, "  {} -- {} [weight={weight}];", dot_quote(a), dot_quote(b))?;
    }
    writeln!(w, "}}")
}

/// Edge list export: source,target,weight with source < target, sorted.
pub fn write_edge_csv<W: Write>(graph: &CoParticipationGraph, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["source", "target", "weight"])?;
    for (a, b, weight) in graph.edges() {
        out.write_record([a, b, &weight.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Node list export: subreddit,degree,n_users,has_flagged_user.
pub fn write_node_csv<W: Write>(graph: &CoParticipationGraph, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["subreddit", "degree", "n_users", "has_flagged_user"])?;
    for (name, stats) in graph.nodes() {
        out.write_record([
            name,
            &stats.degree.to_string(),
            &stats.n_users.to_string(),
            &stats.has_flagged_user.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parse an edge CSV produced by [`write_edge_csv`]. Key order (source <
/// target) is not re-checked beyond normalization, so hand-edited files
/// with swapped endpoints still land on the same unordered key.
pub fn read_edge_csv(path: &std::path::Path) -> Result<BTreeMap<(String, String), u64>, NetworkError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| NetworkError::Io { path: display.clone(), message: e.to_string() })?;
    let mut edges = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "source,target,weight" {
                return Err(NetworkError::Malformed {
                    path: display,
                    line: 1,
                    message: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let err = |message: String| NetworkError::Malformed {
            path: display.clone(),
            line: idx + 1,
            message,
        };
        let mut parts = line.splitn(3, ',');
        let (Some(a), Some(b), Some(w)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected source,target,weight".to_owned()));
        };
        let weight: u64 = w.parse().map_err(|_| err(format!("bad weight {w:?}")))?;
        let key = if a <= b {
            (a.to_owned(), b.to_owned())
        } else {
            (b.to_owned(), a.to_owned())
        };
        if edges.insert(key, weight).is_some() {
            return Err(err(format!("duplicate edge {a},{b}")));
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subs(pairs: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        pairs
            .iter()
            .map(|(user, subs)| {
                ((*user).to_owned(), subs.iter().map(|s| (*s).to_owned()).collect())
            })
            .collect()
    }

    fn flags(users: &[&str]) -> BTreeSet<String> {
        users.iter().map(|u| (*u).to_owned()).collect()
    }

    #[test]
    fn pair_enumeration_matches_hand_count() {
        let input = subs(&[("a", &["sino", "china", "worldnews"]), ("b", &["sino", "china"])]);
        let graph = build_graph(&input, &flags(&[]));
        assert_eq!(graph.edge("sino", "china"), Some(2));
        assert_eq!(graph.edge("sino", "worldnews"), Some(1));
        assert_eq!(graph.edge("china", "worldnews"), Some(1));
        assert_eq!(graph.n_edges(), 3);
        assert_eq!(graph.node("sino").unwrap().degree, 2);
        assert_eq!(graph.node("sino").unwrap().n_users, 2);
        assert_eq!(graph.node("worldnews").unwrap().n_users, 1);
    }

    #[test]
    fn single_membership_makes_a_lonely_node() {
        let graph = build_graph(&subs(&[("a", &["sino"])]), &flags(&[]));
        assert_eq!(graph.n_nodes(), 1);
        assert_eq!(graph.n_edges(), 0);
        assert_eq!(graph.node("sino").unwrap().degree, 0);
    }

    #[test]
    fn flagged_user_marks_every_touched_node() {
        let input = subs(&[("a", &["sino", "china", "worldnews"]), ("b", &["sino", "china"])]);
        let graph = build_graph(&input, &flags(&["a"]));
        assert!(graph.node("worldnews").unwrap().has_flagged_user);
        assert!(graph.node("sino").unwrap().has_flagged_user);
        let graph = build_graph(&input, &flags(&["b"]));
        assert!(!graph.node("worldnews").unwrap().has_flagged_user);
        assert!(graph.node("sino").unwrap().has_flagged_user);
    }

    #[test]
    fn weight_sum_equals_pair_count_sum() {
        let input = subs(&[
            ("a", &["s1", "s2", "s3", "s4"]), // C(4,2) = 6
            ("b", &["s1", "s2"]),             // 1
            ("c", &["s9"]),                   // 0
        ]);
        let graph = build_graph(&input, &flags(&[]));
        assert_eq!(graph.total_weight(), 7);
    }

    #[test]
    fn degree_ranking_breaks_ties_by_name() {
        // a and b both reach degree 2, c only 1.
        let input = subs(&[("u1", &["a", "b", "x"]), ("u2", &["a", "b"])]);
        let graph = build_graph(&input, &flags(&[]));
        // Edges: a-b, a-x, b-x: all of a, b, x have degree 2.
        let top = degree_ranking(&graph, 2);
        assert_eq!(top, vec![("a".to_owned(), 2), ("b".to_owned(), 2)]);
        let all = degree_ranking(&graph, 10);
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn degree_ranking_empty_graph() {
        let graph = build_graph(&BTreeMap::new(), &flags(&[]));
        assert!(degree_ranking(&graph, 5).is_empty());
    }

    #[test]
    fn degree_ranking_matches_brute_force_sort() {
        let input = subs(&[
            ("u1", &["s0", "s1", "s2", "s3"]),
            ("u2", &["s2", "s3", "s4"]),
            ("u3", &["s4", "s5", "s6", "s7"]),
            ("u4", &["s7", "s8", "s9", "s0"]),
            ("u5", &["s1", "s5", "s9"]),
        ]);
        let graph = build_graph(&input, &flags(&[]));
        let mut oracle: Vec<(String, usize)> = graph
            .nodes()
            .map(|(name, _)| {
                let deg = graph
                    .nodes()
                    .filter(|(other, _)| *other != name)
                    .filter(|(other, _)| graph.edge(name, other).is_some())
                    .count();
                (name.to_owned(), deg)
            })
            .collect();
        oracle.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        assert_eq!(degree_ranking(&graph, 10), oracle);
    }

    #[test]
    fn coverage_counts_and_formats() {
        let input = subs(&[("a", &["s1", "s2"]), ("b", &["s3"])]);
        let graph = build_graph(&input, &flags(&[]));
        assert_eq!(flag_coverage(&graph), (0, 3));
        let graph = build_graph(&input, &flags(&["a", "b"]));
        assert_eq!(flag_coverage(&graph), (3, 3));
        assert_eq!(coverage_line(1668, 1819), "1,668 of 1,819");
        assert_eq!(coverage_line(5, 12), "5 of 12");
        assert_eq!(group_thousands(1_234_567), "1,234,567");
        assert_eq!(group_thousands(0), "0");
    }

    #[test]
    fn dot_export_shape() {
        let graph = build_graph(&subs(&[("a", &["left", "right"])]), &flags(&["a"]));
        let mut out = Vec::new();
        write_dot(&graph, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let edge_lines: Vec<&str> = text.lines().filter(|l| l.contains("--")).collect();
        assert_eq!(edge_lines, vec![r#"  "left" -- "right" [weight=1];"#]);
        assert!(text.contains(r#""left" [degree=1, n_users=1, color=red];"#));

        let unflagged = build_graph(&subs(&[("a", &["left", "right"])]), &flags(&[]));
        let mut out = Vec::new();
        write_dot(&unflagged, &mut out).unwrap();
        assert!(!String::from_utf8(out).unwrap().contains("color=red"));
    }

    #[test]
    fn gexf_export_shape() {
        let graph = build_graph(&subs(&[("a", &["left", "right"])]), &flags(&["a"]));
        let mut out = Vec::new();
        write_gexf(&graph, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains(r#"<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">"#));
        assert!(text.contains(r#"<node id="left" label="left">"#));
        assert!(text.contains(r#"<attvalue for="0" value="true"/>"#));
        assert!(text.contains(r#"<edge id="0" source="left" target="right" weight="1"/>"#));
    }

    #[test]
    fn edge_csv_round_trips() {
        let input = subs(&[("a", &["s1", "s2", "s3"]), ("b", &["s1", "s3"])]);
        let graph = build_graph(&input, &flags(&[]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        let mut buf = Vec::new();
        write_edge_csv(&graph, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let edges = read_edge_csv(&path).unwrap();
        let original: BTreeMap<(String, String), u64> = graph
            .edges()
            .map(|(a, b, w)| ((a.to_owned(), b.to_owned()), w))
            .collect();
        assert_eq!(edges, original);
    }

    #[test]
    fn edge_csv_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        std::fs::write(&path, "nope\n").unwrap();
        assert!(matches!(read_edge_csv(&path), Err(NetworkError::Malformed { line: 1, .. })));
        std::fs::write(&path, "source,target,weight\na,b,many\n").unwrap();
        assert!(matches!(read_edge_csv(&path), Err(NetworkError::Malformed { line: 2, .. })));
    }

    #[test]
    fn exports_are_deterministic() {
        let input = subs(&[("a", &["s1", "s2", "s3"]), ("b", &["s1", "s3"])]);
        let render = || {
            let graph = build_graph(&input, &flags(&["b"]));
            let mut gexf = Vec::new();
            write_gexf(&graph, &mut gexf).unwrap();
            let mut dot = Vec::new();
            write_dot(&graph, &mut dot).unwrap();
            let mut edges = Vec::new();
            write_edge_csv(&graph, &mut edges).unwrap();
            let mut nodes = Vec::new();
            write_node_csv(&graph, &mut nodes).unwrap();
            (gexf, dot, edges, nodes)
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn filtered_drops_light_edges_and_recomputes_degree() {
        let input = subs(&[("a", &["s1", "s2", "s3"]), ("b", &["s1", "s2"])]);
        let graph = build_graph(&input, &flags(&[]));
        let filtered = graph.filtered(2);
        assert_eq!(filtered.n_edges(), 1);
        assert_eq!(filtered.edge("s1", "s2"), Some(2));
        assert_eq!(filtered.node("s3").unwrap().degree, 0);
        assert_eq!(filtered.node("s1").unwrap().degree, 1);
        assert_eq!(filtered.n_nodes(), 3, "isolated nodes stay");
    }

    #[test]
    fn user_subreddits_collects_only_selected_users() {
        use crate::ingest::RecordKind;
        let rec = |id: &str, author: &str, sub: &str| PostRecord {
            id: id.to_owned(),
            author: author.to_owned(),
            subreddit: sub.to_owned(),
            created_utc: 1,
            kind: RecordKind::Comment,
            title: None,
            body: "b".to_owned(),
            score: 0,
        };
        let records = vec![
            rec("1", "alice", "sino"),
            rec("2", "alice", "china"),
            rec("3", "bob", "worldnews"),
            rec("4", "alice", "sino"),
        ];
        let users: BTreeSet<String> = ["alice".to_owned(), "carol".to_owned()].into();
        let map = user_subreddits(&records, &users);
        assert_eq!(map.len(), 1, "recordless users are dropped");
        assert_eq!(
            map["alice"],
            ["china".to_owned(), "sino".to_owned()].into_iter().collect::<BTreeSet<_>>()
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_input() -> impl Strategy<Value = BTreeMap<String, BTreeSet<String>>> {
            proptest::collection::btree_map(
                "[a-d]",
                proptest::collection::btree_set("s[0-5]", 0..5),
                0..6,
            )
        }

        proptest! {
            #[test]
            fn weight_sum_matches_pair_counts(input in arb_input()) {
                let graph = build_graph(&input, &BTreeSet::new());
                let expected: u64 = input
                    .values()
                    .map(|s| (s.len() * s.len().saturating_sub(1) / 2) as u64)
                    .sum();
                prop_assert_eq!(graph.total_weight(), expected);
            }

            #[test]
            fn removing_a_user_never_increases_anything(input in arb_input()) {
                prop_assume!(!input.is_empty());
                let full = build_graph(&input, &BTreeSet::new());
                let victim = input.keys().next().unwrap().clone();
                let mut reduced_input = input.clone();
                reduced_input.remove(&victim);
                let reduced = build_graph(&reduced_input, &BTreeSet::new());
                for (a, b, w) in reduced.edges() {
                    prop_assert!(full.edge(a, b).unwrap_or(0) >= w);
                }
                for (name, stats) in reduced.nodes() {
                    prop_assert!(full.node(name).unwrap().degree >= stats.degree);
                    prop_assert!(full.node(name).unwrap().n_users >= stats.n_users);
                }
            }
        }
    }
}
