use std::io::{self, Write};

use embedrift::analysis::{csv_field, truncate2, NeighborList};

type Row<'a> = (NeighborList, Option<NeighborList>);

fn width<'a>(items: impl Iterator<Item = &'a str>, min: usize) -> usize {
    items.map(|s| s.chars().count()).max().unwrap_or(0).max(min)
}

pub fn neighbors_table<W: Write>(out: &mut W, results: &[Row<'_>]) -> io::Result<()> {
    for (i, (refined, original)) in results.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "{}", refined.query)?;
        let lw = width(refined.tokens(), "refined".len());
        match original {
            None => {
                writeln!(out, "  {:>4}  {:<lw$}  score", "rank", "refined")?;
                for (rank, (token, score)) in refined.entries.iter().enumerate() {
                    writeln!(
                        out,
                        "  {:>4}  {:<lw$}  {}",
                        rank + 1,
                        token,
                        truncate2(*score)
                    )?;
                }
            }
            Some(original) => {
                let rw = width(original.tokens(), "original".len());
                writeln!(
                    out,
                    "  {:>4}  {:<lw$}  score  {:<rw$}  score",
                    "rank", "refined", "original"
                )?;
                let n = refined.entries.len().max(original.entries.len());
                for rank in 0..n {
                    let (lt, ls) = cell(refined, rank);
                    let (rt, rs) = cell(original, rank);
                    writeln!(
                        out,
                        "  {:>4}  {:<lw$}  {:<5}  {:<rw$}  {}",
                        rank + 1,
                        lt,
                        ls,
                        rt,
                        rs
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn cell(list: &NeighborList, rank: usize) -> (&str, String) {
    list.entries
        .get(rank)
        .map_or(("", String::new()), |(t, s)| (t.as_str(), truncate2(*s)))
}

pub fn neighbors_csv<W: Write>(out: &mut W, results: &[Row<'_>]) -> io::Result<()> {
    let compare = results.iter().any(|(_, o)| o.is_some());
    if compare {
        writeln!(out, "query,rank,token,score,orig_token,orig_score")?;
    } else {
        writeln!(out, "query,rank,token,score")?;
    }
    for (refined, original) in results {
        let q = csv_field(&refined.query);
        let n = match original {
            Some(o) => refined.entries.len().max(o.entries.len()),
            None => refined.entries.len(),
        };
        for rank in 0..n {
            let (token, score) = full(refined, rank);
            if compare {
                let (ot, os) = original
                    .as_ref()
                    .map_or((String::new(), String::new()), |o| full(o, rank));
                writeln!(out, "{q},{},{token},{score},{ot},{os}", rank + 1)?;
            } else {
                writeln!(out, "{q},{},{token},{score}", rank + 1)?;
            }
        }
    }
    Ok(())
}

fn full(list: &NeighborList, rank: usize) -> (String, String) {
    list.entries
        .get(rank)
        .map_or((String::new(), String::new()), |(t, s)| {
            (csv_field(t).into_owned(), s.to_string())
        })
}

pub fn drift_table<W: Write>(
    out: &mut W,
    rows: &[(&str, Option<f32>)],
    mean: Option<f64>,
) -> io::Result<()> {
    let w = width(rows.iter().map(|(t, _)| *t), "MEAN".len());
    writeln!(out, "{:<w$}  cosine", "token")?;
    for (token, score) in rows {
        let s = score.map_or_else(|| "N/A".to_owned(), truncate2);
        writeln!(out, "{token:<w$}  {s}")?;
    }
    if let Some(m) = mean {
        writeln!(out, "{:<w$}  {}", "MEAN", truncate2(m as f32))?;
    }
    Ok(())
}

pub fn drift_csv<W: Write>(
    out: &mut W,
    rows: &[(&str, Option<f32>)],
    mean: Option<f64>,
) -> io::Result<()> {
    writeln!(out, "token,drift")?;
    for (token, score) in rows {
        let s = score.map_or_else(|| "N/A".to_owned(), |s| s.to_string());
        writeln!(out, "{},{s}", csv_field(token))?;
    }
    if let Some(m) = mean {
        writeln!(out, "MEAN,{m}")?;
    }
    Ok(())
}
