use crate::artifact::{OverlapArtifact, RankingArtifact, ReportBody, ScanArtifact, SweepLine};

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                out.push_str(cell);
            } else {
                out.push_str(cell);
                out.extend(std::iter::repeat_n(' ', w - cell.chars().count() + 2));
            }
        }
        out.push('\n');
        out
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

pub fn ranking(artifact: &RankingArtifact) -> String {
    let rows: Vec<Vec<String>> = artifact
        .features
        .iter()
        .map(|f| vec![f.feature.clone(), format!("{:.6}", f.score)])
        .collect();
    let mut out = table(&["feature", "score"], &rows);
    if let Some(k) = artifact.top_k {
        out.push_str(&format!(
            "top-{k}: {}\n",
            artifact.feature_names()[..k].join(", ")
        ));
    }
    out
}

pub fn scan(artifact: &ScanArtifact) -> String {
    let q = artifact
        .q_hat
        .map_or("inf".to_string(), |q| format!("{q:.4}"));
    format!(
        "subgroup: {}\nscore: {:.4}\nq_hat: {q}\nsubset: {} ({:.1}%)\nelapsed: {:.1} ms\n",
        artifact.rule,
        artifact.score,
        artifact.subset_size,
        100.0 * artifact.subset_fraction,
        artifact.volatile.elapsed_ms,
    )
}

const REPORT_HEADERS: [&str; 8] = [
    "K",
    "#Feats (#Vals)",
    "Subset size",
    "%",
    "Odds ratio",
    "95% CI",
    "p",
    "Time (s)",
];

fn report_row(k: usize, r: &ReportBody, seconds: f64) -> Vec<String> {
    vec![
        k.to_string(),
        format!("{} ({})", r.n_features, r.n_values),
        r.subset_size.to_string(),
        r.subset_percent.to_string(),
        format!("{:.2}", r.odds_ratio),
        format!("({:.2}, {:.2})", r.ci_low, r.ci_high),
        r.p_value.map_or("-".to_string(), |p| format!("{p:.4}")),
        format!("{seconds:.3}"),
    ]
}

pub fn report(method: &str, k: usize, r: &ReportBody, scan_seconds: f64) -> String {
    let mut out = format!("method: {method}\n");
    out.push_str(&table(&REPORT_HEADERS, &[report_row(k, r, scan_seconds)]));
    out.push_str(&format!("subgroup: {}\n", r.rule));
    if r.no_divergence {
        out.push_str("no divergence\n");
    }
    out
}

pub fn sweep(lines: &[SweepLine]) -> String {
    let mut headers = REPORT_HEADERS.to_vec();
    headers.push("Jaccard");
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| {
            let seconds = l.volatile.timings.iter().map(|t| t.seconds).sum();
            let mut row = report_row(l.k, &l.report, seconds);
            row.push(format!("{:.3}", l.jaccard_vs_full));
            row
        })
        .collect();
    table(&headers, &rows)
}

pub fn overlap(artifact: &OverlapArtifact) -> String {
    let mut headers = vec![""];
    headers.extend(artifact.methods.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = artifact
        .methods
        .iter()
        .zip(&artifact.values)
        .map(|(m, row)| {
            std::iter::once(m.clone())
                .chain(row.iter().map(|v| format!("{v:.4}")))
                .collect()
        })
        .collect();
    format!(
        "rank-biased overlap (p = {})\n{}",
        artifact.persistence,
        table(&headers, &rows)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = table(
            &["a", "bbb"],
            &[
                vec!["xxxx".into(), "1".into()],
                vec!["y".into(), "22".into()],
            ],
        );
        assert_eq!(t, "a     bbb\nxxxx  1\ny     22\n");
    }
}
