//! Plain-text tables for the `report` subcommand.

use mapcore::eval::{CoordErrorTable, IntervalStats};
use mapcore::matching::MatchResult;

use crate::commands::EvalDepthDoc;

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Rows are groups, columns are distance bins; each cell shows MAE / ARE.
pub fn depth_table(d: &EvalDepthDoc) -> String {
    let mut bins: Vec<&str> = Vec::new();
    let mut groups: Vec<&str> = Vec::new();
    for r in &d.rows {
        if !bins.contains(&r.bin.as_str()) {
            bins.push(&r.bin);
        }
        if !groups.contains(&r.group.as_str()) {
            groups.push(&r.group);
        }
    }
    let mut s = format!(
        "Depth error, MAE [m] / ARE ({} images, {:?} pooling)\n",
        d.images, d.pooling
    );
    s.push_str(&format!("{:<14}", "group"));
    for b in &bins {
        s.push_str(&format!("{b:>18}"));
    }
    s.push('\n');
    for g in &groups {
        s.push_str(&format!("{g:<14}"));
        for b in &bins {
            let text = d
                .rows
                .iter()
                .find(|r| r.group == *g && r.bin == *b)
                .map(|r| format!("{} / {}", cell(r.mae_m, 2), cell(r.are, 3)))
                .unwrap_or_else(|| "-".into());
            s.push_str(&format!("{text:>18}"));
        }
        s.push('\n');
    }
    s
}

fn stats_line(st: &IntervalStats) -> String {
    let b = st.boxplot;
    format!(
        "{:<10}{:>7}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
        st.label,
        st.count,
        cell(st.mean_m, 2),
        cell(b.map(|b| b.q1), 2),
        cell(b.map(|b| b.median), 2),
        cell(b.map(|b| b.q3), 2),
        cell(b.map(|b| b.max), 2),
    )
}

pub fn match_table(m: &MatchResult, t: &CoordErrorTable) -> String {
    let s = &m.summary;
    let mut out = format!(
        "Matching: {} predictions, {} references, {} matched, found {:.1}%\n",
        s.predictions,
        s.references,
        s.matched,
        100.0 * s.found_fraction
    );
    out.push_str("Coordinate error [m] by camera distance\n");
    out.push_str(&format!(
        "{:<10}{:>7}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
        "interval", "n", "mean", "q1", "median", "q3", "max"
    ));
    for st in &t.intervals {
        out.push_str(&stats_line(st));
    }
    out.push_str(&stats_line(&t.total));
    out
}
