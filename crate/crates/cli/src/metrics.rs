//! Per-instance metrics and their comma-separated table form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use num_rational::Ratio;

pub const HEADER: &str = "agg,n,K,Lambda,t,seed,F,vertices,edges,S_dsatur,S_external,\
external_proper,R_dsatur,R_external,R_greedy,R_ic,ratio_dsatur_ic,ratio_greedy_ic,\
ratio_external_dsatur,greedy_intersections,ic_subsets,dsatur_steps,decode_ok,error";

/// One table row. Instance rows have `agg = false` and `n = 1`; aggregate
/// rows carry the mean of each ratio over the `n` instance rows of their
/// `(K, Lambda, t)` configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRow {
    pub agg: bool,
    pub n: usize,
    pub users: usize,
    pub cache_nodes: usize,
    pub t: usize,
    pub seed: Option<u64>,
    pub subpacketization: Option<usize>,
    pub vertices: Option<usize>,
    pub edges: Option<usize>,
    pub s_dsatur: Option<usize>,
    pub s_external: Option<usize>,
    pub external_proper: Option<bool>,
    pub r_dsatur: Option<Ratio<u64>>,
    pub r_external: Option<Ratio<u64>>,
    pub r_greedy: Option<Ratio<u64>>,
    pub r_ic: Option<Ratio<u64>>,
    pub ratio_dsatur_ic: Option<f64>,
    pub ratio_greedy_ic: Option<f64>,
    pub ratio_external_dsatur: Option<f64>,
    pub greedy_intersections: Option<u64>,
    pub ic_subsets: Option<u64>,
    pub dsatur_steps: Option<u64>,
    pub decode_ok: Option<bool>,
    pub error: Option<String>,
}

/// `a / b` as a float; `0 / 0` reads as 1 since both sides send nothing.
pub fn load_ratio(a: Ratio<u64>, b: Ratio<u64>) -> Option<f64> {
    let (an, ad) = (*a.numer() as f64, *a.denom() as f64);
    let (bn, bd) = (*b.numer() as f64, *b.denom() as f64);
    if bn == 0.0 {
        (an == 0.0).then_some(1.0)
    } else {
        Some((an * bd) / (ad * bn))
    }
}

impl MetricsRow {
    pub fn instance(users: usize, cache_nodes: usize, t: usize, seed: u64) -> Self {
        Self {
            n: 1,
            users,
            cache_nodes,
            t,
            seed: Some(seed),
            ..Self::default()
        }
    }

    /// Fill the ratio columns from whichever loads are present.
    pub fn fill_ratios(&mut self) {
        self.ratio_dsatur_ic = self.r_dsatur.zip(self.r_ic).and_then(|(a, b)| load_ratio(a, b));
        self.ratio_greedy_ic = self.r_greedy.zip(self.r_ic).and_then(|(a, b)| load_ratio(a, b));
        self.ratio_external_dsatur = self
            .r_external
            .zip(self.r_dsatur)
            .and_then(|(a, b)| load_ratio(a, b));
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        fn flag(v: Option<bool>) -> String {
            v.map(|b| if b { "1" } else { "0" }.to_string())
                .unwrap_or_default()
        }
        fn ratio(v: &Option<Ratio<u64>>) -> String {
            v.map(|r| format!("{}/{}", r.numer(), r.denom()))
                .unwrap_or_default()
        }
        let error = self
            .error
            .as_deref()
            .map(|e| e.replace([',', '\n', '\r'], ";"))
            .unwrap_or_default();
        [
            flag(Some(self.agg)),
            self.n.to_string(),
            self.users.to_string(),
            self.cache_nodes.to_string(),
            self.t.to_string(),
            opt(&self.seed),
            opt(&self.subpacketization),
            opt(&self.vertices),
            opt(&self.edges),
            opt(&self.s_dsatur),
            opt(&self.s_external),
            flag(self.external_proper),
            ratio(&self.r_dsatur),
            ratio(&self.r_external),
            ratio(&self.r_greedy),
            ratio(&self.r_ic),
            opt(&self.ratio_dsatur_ic),
            opt(&self.ratio_greedy_ic),
            opt(&self.ratio_external_dsatur),
            opt(&self.greedy_intersections),
            opt(&self.ic_subsets),
            opt(&self.dsatur_steps),
            flag(self.decode_ok),
            error,
        ]
        .join(",")
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let cells: Vec<&str> = line.split(',').collect();
        let expected = HEADER.split(',').count();
        if cells.len() != expected {
            bail!("expected {expected} columns, found {}", cells.len());
        }
        fn opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| anyhow!("bad value {s:?}: {e}"))
            }
        }
        fn flag(s: &str) -> Result<Option<bool>> {
            match s {
                "" => Ok(None),
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                _ => bail!("bad flag {s:?}"),
            }
        }
        fn ratio(s: &str) -> Result<Option<Ratio<u64>>> {
            if s.is_empty() {
                return Ok(None);
            }
            let (n, d) = s.split_once('/').ok_or_else(|| anyhow!("bad ratio {s:?}"))?;
            let d: u64 = d.parse()?;
            if d == 0 {
                bail!("zero denominator in {s:?}");
            }
            Ok(Some(Ratio::new(n.parse()?, d)))
        }
        let req = |s: &str| -> Result<usize> { s.parse().with_context(|| format!("bad count {s:?}")) };
        Ok(Self {
            agg: flag(cells[0])?.ok_or_else(|| anyhow!("missing agg flag"))?,
            n: req(cells[1])?,
            users: req(cells[2])?,
            cache_nodes: req(cells[3])?,
            t: req(cells[4])?,
            seed: opt(cells[5])?,
            subpacketization: opt(cells[6])?,
            vertices: opt(cells[7])?,
            edges: opt(cells[8])?,
            s_dsatur: opt(cells[9])?,
            s_external: opt(cells[10])?,
            external_proper: flag(cells[11])?,
            r_dsatur: ratio(cells[12])?,
            r_external: ratio(cells[13])?,
            r_greedy: ratio(cells[14])?,
            r_ic: ratio(cells[15])?,
            ratio_dsatur_ic: opt(cells[16])?,
            ratio_greedy_ic: opt(cells[17])?,
            ratio_external_dsatur: opt(cells[18])?,
            greedy_intersections: opt(cells[19])?,
            ic_subsets: opt(cells[20])?,
            dsatur_steps: opt(cells[21])?,
            decode_ok: flag(cells[22])?,
            error: opt(cells[23])?,
        })
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// One aggregate row per `(K, Lambda, t)`, in first-appearance order. Each
/// ratio is the mean over the instance rows where it is present, summed in
/// table order. `n` counts the instance rows of the configuration.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.agg) {
        let key = (r.users, r.cache_nodes, r.t);
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            MetricsRow {
                agg: true,
                n: g.len(),
                users: key.0,
                cache_nodes: key.1,
                t: key.2,
                ratio_dsatur_ic: mean(g.iter().map(|r| r.ratio_dsatur_ic)),
                ratio_greedy_ic: mean(g.iter().map(|r| r.ratio_greedy_ic)),
                ratio_external_dsatur: mean(g.iter().map(|r| r.ratio_external_dsatur)),
                ..MetricsRow::default()
            }
        })
        .collect()
}

pub fn write_table(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv());
    }
    out
}

pub fn read_table(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        _ => bail!("metrics table must start with the standard header"),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| MetricsRow::from_csv(l).with_context(|| format!("metrics row {}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        let mut r = MetricsRow::instance(5, 4, 2, 9);
        r.subpacketization = Some(6);
        r.r_greedy = Some(Ratio::new(2, 3));
        r.r_ic = Some(Ratio::new(2, 3));
        r.r_dsatur = Some(Ratio::new(5, 6));
        r.decode_ok = Some(true);
        r.error = Some("a,b\nc".into());
        r.fill_ratios();
        assert_eq!(r.ratio_greedy_ic, Some(1.0));
        assert_eq!(r.ratio_dsatur_ic, Some(1.25));
        let back = MetricsRow::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back.error.as_deref(), Some("a;b;c"));
        assert_eq!(back.r_greedy, r.r_greedy);
        assert_eq!(back.ratio_dsatur_ic, r.ratio_dsatur_ic);
        assert_eq!(HEADER.split(',').count(), r.to_csv().split(',').count());
    }

    #[test]
    fn zero_loads() {
        let z = Ratio::from_integer(0);
        assert_eq!(load_ratio(z, z), Some(1.0));
        assert_eq!(load_ratio(Ratio::new(1, 2), z), None);
    }

    #[test]
    fn aggregates_are_means() {
        let mut rows = Vec::new();
        for (seed, ratio) in [(1, 1.0), (2, 0.5), (3, 0.75)] {
            let mut r = MetricsRow::instance(4, 4, 1, seed);
            r.ratio_greedy_ic = Some(ratio);
            rows.push(r);
        }
        rows.push(MetricsRow::instance(4, 4, 2, 1));
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].n, 3);
        assert_eq!(agg[0].ratio_greedy_ic, Some(0.75));
        assert_eq!(agg[1].ratio_greedy_ic, None);
        let table = write_table(&[rows.clone(), agg.clone()].concat());
        let parsed = read_table(&table).unwrap();
        assert_eq!(aggregate(&parsed), agg);
    }
}
