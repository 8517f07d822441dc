//! Report tables as aligned text and CSV, plus CSV parsers used to re-check
//! emitted files.

use std::fmt::Write as _;

use textcnn_core::analysis::{Bridge, BridgeTable, ClassTable, GroupKey, KernelClass, KernelId, TopNgram};

use crate::{Error, Result};

/// Pads columns to a common width; the first `left` columns align left,
/// the rest right.
fn align_with(rows: &[Vec<String>], left: usize) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else if c < left {
                let _ = write!(line, "  {cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn align(rows: &[Vec<String>]) -> String {
    align_with(rows, 1)
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8 input")
}

fn csv_rows(text: &str, what: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bad = |e: csv::Error| Error::Table(format!("{what}: {e}"));
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(bad)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(bad)?;
    Ok((header, rows))
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Table(format!("{what}: bad number {s:?}")))
}

fn groups_of(header: &[String], skip: usize, take: usize, what: &str) -> Result<Vec<GroupKey>> {
    header[skip..skip + take]
        .iter()
        .map(|g| g.parse().map_err(|e: String| Error::Table(format!("{what}: {e}"))))
        .collect()
}

fn layers(groups: &[GroupKey]) -> Vec<u8> {
    let mut l: Vec<u8> = groups.iter().map(|g| g.layer).collect();
    l.dedup();
    l
}

// Kernel class table: one row per class plus Other, one column per group,
// then per-layer sums.

fn class_rows(t: &ClassTable) -> Vec<Vec<String>> {
    let layers = layers(&t.groups);
    let mut header = vec!["class".to_string()];
    header.extend(t.groups.iter().map(|g| g.to_string()));
    header.extend(layers.iter().map(|l| format!("L{l}")));
    let mut rows = vec![header];
    for (i, name) in t.rows.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(t.counts[i].iter().map(|c| c.to_string()));
        row.extend(layers.iter().map(|&l| t.layer_sum(i, l).to_string()));
        rows.push(row);
    }
    rows
}

pub fn class_table_text(t: &ClassTable) -> String {
    let mut rows = class_rows(t);
    let mut total = vec!["total".to_string()];
    total.extend((0..t.groups.len()).map(|g| t.column_total(g).to_string()));
    for l in layers(&t.groups) {
        let s: usize = (0..t.rows.len()).map(|r| t.layer_sum(r, l)).sum();
        total.push(s.to_string());
    }
    rows.push(total);
    align(&rows)
}

pub fn class_table_csv(t: &ClassTable) -> String {
    csv_string(class_rows(t))
}

/// Parses [`class_table_csv`] and checks that the layer sums agree with the
/// group columns.
pub fn parse_class_table_csv(text: &str) -> Result<ClassTable> {
    const WHAT: &str = "class table";
    let (header, rows) = csv_rows(text, WHAT)?;
    let n_groups = header.iter().skip(1).take_while(|h| !h.starts_with('L')).count();
    let groups = groups_of(&header, 1, n_groups, WHAT)?;
    let mut table = ClassTable {
        rows: Vec::new(),
        groups,
        counts: Vec::new(),
    };
    let layers = layers(&table.groups);
    if header.len() != 1 + n_groups + layers.len() {
        return Err(Error::Table(format!("{WHAT}: expected one sum column per layer")));
    }
    for row in &rows {
        if row.len() != header.len() {
            return Err(Error::Table(format!("{WHAT}: ragged row {row:?}")));
        }
        table.rows.push(row[0].clone());
        table.counts.push(row[1..1 + n_groups].iter().map(|c| num(c, WHAT)).collect::<Result<_>>()?);
    }
    for (r, row) in rows.iter().enumerate() {
        for (c, &l) in layers.iter().enumerate() {
            if num::<usize>(&row[1 + n_groups + c], WHAT)? != table.layer_sum(r, l) {
                return Err(Error::Table(format!("{WHAT}: layer {l} sum of {} is wrong", table.rows[r])));
            }
        }
    }
    Ok(table)
}

/// Correlated-pair counts per group and threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    pub thresholds: Vec<f64>,
    pub groups: Vec<GroupKey>,
    /// `counts[group][threshold]`.
    pub counts: Vec<Vec<usize>>,
}

impl PairTable {
    pub fn layer_sum(&self, layer: u8, threshold: usize) -> usize {
        self.groups
            .iter()
            .zip(&self.counts)
            .filter(|(g, _)| g.layer == layer)
            .map(|(_, c)| c[threshold])
            .sum()
    }

    /// Counts never grow as the threshold rises.
    pub fn is_monotone(&self) -> bool {
        let mut order: Vec<usize> = (0..self.thresholds.len()).collect();
        order.sort_by(|&a, &b| self.thresholds[a].total_cmp(&self.thresholds[b]));
        self.counts.iter().all(|c| order.windows(2).all(|w| c[w[0]] >= c[w[1]]))
    }
}

fn pair_rows(t: &PairTable, with_sums: bool) -> Vec<Vec<String>> {
    let mut header = vec!["group".to_string()];
    header.extend(t.thresholds.iter().map(|th| format!("|r|>{th}")));
    let mut rows = vec![header];
    for (g, c) in t.groups.iter().zip(&t.counts) {
        let mut row = vec![g.to_string()];
        row.extend(c.iter().map(|n| n.to_string()));
        rows.push(row);
    }
    if with_sums {
        for l in layers(&t.groups) {
            let mut row = vec![format!("L{l}")];
            row.extend((0..t.thresholds.len()).map(|i| t.layer_sum(l, i).to_string()));
            rows.push(row);
        }
    }
    rows
}

pub fn pair_table_text(t: &PairTable) -> String {
    align(&pair_rows(t, true))
}

pub fn pair_table_csv(t: &PairTable) -> String {
    csv_string(pair_rows(t, false))
}

pub fn parse_pair_table_csv(text: &str) -> Result<PairTable> {
    const WHAT: &str = "pair table";
    let (header, rows) = csv_rows(text, WHAT)?;
    let thresholds = header[1..]
        .iter()
        .map(|h| num(h.trim_start_matches("|r|>"), WHAT))
        .collect::<Result<_>>()?;
    let mut t = PairTable {
        thresholds,
        groups: Vec::new(),
        counts: Vec::new(),
    };
    for row in rows {
        t.groups.push(row[0].parse().map_err(|e: String| Error::Table(format!("{WHAT}: {e}")))?);
        t.counts.push(row[1..].iter().map(|c| num(c, WHAT)).collect::<Result<_>>()?);
    }
    Ok(t)
}

// Bridge counts: one row per layer, one column per window, then the sum.

fn bridge_count_rows(t: &BridgeTable) -> Vec<Vec<String>> {
    let mut windows: Vec<usize> = t.groups.iter().map(|g| g.window).collect();
    windows.sort();
    windows.dedup();
    let mut header = vec!["layer".to_string()];
    header.extend(windows.iter().map(|w| format!("h={w}")));
    header.push("sum".into());
    let mut rows = vec![header];
    for l in layers(&t.groups) {
        let mut row = vec![format!("L{l}")];
        for &w in &windows {
            let c = t
                .groups
                .iter()
                .position(|g| *g == GroupKey::new(l, w))
                .map_or(0, |i| t.counts[i]);
            row.push(c.to_string());
        }
        row.push(t.layer_sum(l).to_string());
        rows.push(row);
    }
    rows
}

pub fn bridge_counts_text(t: &BridgeTable) -> String {
    align(&bridge_count_rows(t))
}

pub fn bridge_counts_csv(t: &BridgeTable) -> String {
    csv_string(bridge_count_rows(t))
}

pub fn parse_bridge_counts_csv(text: &str) -> Result<BridgeTable> {
    const WHAT: &str = "bridge counts";
    let (header, rows) = csv_rows(text, WHAT)?;
    let windows: Vec<usize> = header[1..header.len() - 1]
        .iter()
        .map(|h| num(h.trim_start_matches("h="), WHAT))
        .collect::<Result<_>>()?;
    let mut t = BridgeTable {
        groups: Vec::new(),
        counts: Vec::new(),
    };
    for row in rows {
        let layer: u8 = num(row[0].trim_start_matches('L'), WHAT)?;
        for (w, c) in windows.iter().zip(&row[1..]) {
            t.groups.push(GroupKey::new(layer, *w));
            t.counts.push(num(c, WHAT)?);
        }
        if num::<usize>(&row[row.len() - 1], WHAT)? != t.layer_sum(layer) {
            return Err(Error::Table(format!("{WHAT}: layer {layer} sum is wrong")));
        }
    }
    Ok(t)
}

// Bridge list: one row per triple, coefficients at full precision.

pub fn bridge_list_csv(lists: &[(GroupKey, Vec<Bridge>)]) -> String {
    let header = ["group", "i", "j", "k", "r_ij", "r_ik", "r_jk"].map(String::from).to_vec();
    let rows = lists.iter().flat_map(|(g, list)| {
        list.iter().map(move |b| {
            vec![
                g.to_string(),
                b.i.to_string(),
                b.j.to_string(),
                b.k.to_string(),
                b.r_ij.to_string(),
                b.r_ik.to_string(),
                b.r_jk.to_string(),
            ]
        })
    });
    csv_string(std::iter::once(header).chain(rows))
}

pub fn parse_bridge_list_csv(text: &str) -> Result<Vec<(GroupKey, Bridge)>> {
    const WHAT: &str = "bridge list";
    let (_, rows) = csv_rows(text, WHAT)?;
    rows.iter()
        .map(|r| {
            if r.len() != 7 {
                return Err(Error::Table(format!("{WHAT}: expected 7 fields in {r:?}")));
            }
            let g: GroupKey = r[0].parse().map_err(|e: String| Error::Table(format!("{WHAT}: {e}")))?;
            Ok((
                g,
                Bridge {
                    i: num(&r[1], WHAT)?,
                    j: num(&r[2], WHAT)?,
                    k: num(&r[3], WHAT)?,
                    r_ij: num(&r[4], WHAT)?,
                    r_ik: num(&r[5], WHAT)?,
                    r_jk: num(&r[6], WHAT)?,
                },
            ))
        })
        .collect()
}

/// Top activating n-grams of one kernel and the class it was assigned.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTopList {
    pub kernel: KernelId,
    pub assigned: KernelClass,
    pub top: Vec<TopNgram>,
}

fn class_name(c: KernelClass, names: &[String]) -> &str {
    match c {
        KernelClass::Class(i) => &names[i],
        KernelClass::Other => "Other",
    }
}

fn label_names(labels: &std::collections::BTreeSet<usize>, names: &[String]) -> Vec<String> {
    labels.iter().map(|&l| names[l].clone()).collect()
}

pub fn top_ngrams_text(lists: &[KernelTopList], names: &[String]) -> String {
    let mut out = String::new();
    for l in lists {
        let _ = writeln!(out, "{}  {}", l.kernel, class_name(l.assigned, names));
        let rows: Vec<Vec<String>> = l
            .top
            .iter()
            .enumerate()
            .map(|(rank, t)| {
                vec![
                    format!("  {}.", rank + 1),
                    t.tokens.join(" "),
                    format!("{:.5}", t.activation),
                    format!("{{{}}}", label_names(&t.labels, names).join(",")),
                ]
            })
            .collect();
        out.push_str(&align_with(&rows, 2));
        out.push('\n');
    }
    out
}

pub fn top_ngrams_csv(lists: &[KernelTopList], names: &[String]) -> String {
    let header = ["kernel", "assigned", "rank", "ngram_id", "tokens", "activation", "labels"]
        .map(String::from)
        .to_vec();
    let rows = lists.iter().flat_map(|l| {
        l.top.iter().enumerate().map(move |(rank, t)| {
            vec![
                l.kernel.to_string(),
                class_name(l.assigned, names).to_string(),
                (rank + 1).to_string(),
                t.ngram_id.to_string(),
                t.tokens.join(" "),
                t.activation.to_string(),
                label_names(&t.labels, names).join("|"),
            ]
        })
    });
    csv_string(std::iter::once(header).chain(rows))
}

/// Rows of [`top_ngrams_csv`]: kernel, assigned class, rank, activation.
pub fn parse_top_ngrams_csv(text: &str) -> Result<Vec<(KernelId, String, usize, f64)>> {
    const WHAT: &str = "top n-grams";
    let (_, rows) = csv_rows(text, WHAT)?;
    rows.iter()
        .map(|r| {
            if r.len() != 7 {
                return Err(Error::Table(format!("{WHAT}: expected 7 fields in {r:?}")));
            }
            let k: KernelId = r[0].parse().map_err(|e: String| Error::Table(format!("{WHAT}: {e}")))?;
            Ok((k, r[1].clone(), num(&r[2], WHAT)?, num(&r[5], WHAT)?))
        })
        .collect()
}
