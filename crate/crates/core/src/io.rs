//! Text formats: edge lists, matrix CSV, trajectory CSV, sweep summaries.

use std::io::{BufRead, Write};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::experiment::{Cell, CellSummary, MeanStd, RunRecord, SweepResult};
use crate::netgen::{Adjacency, InfluenceMatrix};

pub const TRAJECTORY_HEADER: &str = "t,agent_id,stance,is_confederate,global_influence";
pub const SUMMARY_HEADER: &str =
    "n,pct,selection,perturbation,replicates,mu_hat_mean,mu_hat_std,conv_t_mean,conv_t_std,skipped";

/// Header line `"<nodes> <edges>"`, then one `"i j"` line per edge, 0-indexed.
pub fn write_edge_list<W: Write>(adj: &Adjacency, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", adj.n(), adj.edges().len())?;
    for &(i, j) in adj.edges() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<Adjacency> {
    let mut lines = input.lines().enumerate().filter_map(|(k, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((k + 1, other)),
    });
    let parse_pair = |line: usize, text: &str| -> Result<(usize, usize)> {
        let mut it = text.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
            _ => Err(Error::Parse {
                line,
                msg: format!("expected two non-negative integers, got `{text}`"),
            }),
        }
    };
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty edge list".into(),
    })?;
    let (n, m) = parse_pair(line, &header?)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        edges.push(parse_pair(line, &text?)?);
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Adjacency::from_edges(n, edges)
}

/// One CSV row per matrix row, shortest round-trip float formatting.
pub fn write_matrix_csv<W: Write>(w: &InfluenceMatrix, mut out: W) -> Result<()> {
    for row in w.rows() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (t, (stances, influence)) in traj.stances.iter().zip(&traj.global_influence).enumerate() {
        for (agent, (&y, &g)) in stances.iter().zip(influence).enumerate() {
            writeln!(out, "{t},{agent},{y},{},{g}", traj.confederate[agent])?;
        }
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_runs_jsonl<'a, W: Write>(runs: impl IntoIterator<Item = &'a RunRecord>, mut out: W) -> Result<()> {
    for run in runs {
        serde_json::to_writer(&mut out, &run.summary())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    let stat = |m: Option<MeanStd>| match m {
        Some(m) => (m.mean.to_string(), m.std.to_string()),
        None => (String::new(), String::new()),
    };
    for c in &result.cells {
        let (mu_mean, mu_std) = stat(c.mu_hat);
        let (t_mean, t_std) = stat(c.convergence_t);
        writeln!(
            out,
            "{},{},{},{},{},{mu_mean},{mu_std},{t_mean},{t_std},{}",
            c.cell.n, c.cell.pct, c.cell.selection, c.cell.perturbation, c.replicates, c.skipped
        )?;
    }
    Ok(())
}

/// Parses a summary CSV back into cell summaries.
pub fn read_summary_csv<R: BufRead>(input: R) -> Result<Vec<CellSummary>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != SUMMARY_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header `{header}`"),
        });
    }
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = k + 2;
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad(format!("expected 10 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(format!("bad {what} `{s}`")));
        let int = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(format!("bad {what} `{s}`")));
        let opt = |mean: &str, std: &str, what: &str| -> Result<Option<MeanStd>> {
            if mean.is_empty() {
                Ok(None)
            } else {
                Ok(Some(MeanStd {
                    mean: num(mean, what)?,
                    std: num(std, what)?,
                }))
            }
        };
        cells.push(CellSummary {
            cell: Cell {
                n: int(f[0], "n")?,
                pct: num(f[1], "pct")?,
                selection: f[2].parse().map_err(|e: Error| bad(e.to_string()))?,
                perturbation: f[3].parse().map_err(|e: Error| bad(e.to_string()))?,
            },
            replicates: int(f[4], "replicates")?,
            mu_hat: opt(f[5], f[6], "mu_hat")?,
            convergence_t: opt(f[7], f[8], "conv_t")?,
            skipped: int(f[9], "skipped")?,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{sweep, ExperimentGrid, RunSettings};
    use crate::netgen::{generate_scale_free, init_influence_matrix};
    use crate::strategies::{PerturbationStrategy, SelectionStrategy};

    #[test]
    fn edge_list_round_trip() {
        let g = generate_scale_free(30, 2, 5).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("30 {}\n", g.edges().len())));
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn edge_list_errors() {
        assert!(read_edge_list(&b""[..]).is_err());
        assert!(read_edge_list(&b"3 2\n0 1\n"[..]).is_err());
        assert!(read_edge_list(&b"3 1\n0 x\n"[..]).is_err());
        assert!(read_edge_list(&b"3 1\n0 0\n"[..]).is_err());
    }

    #[test]
    fn matrix_csv_full_precision() {
        let g = Adjacency::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let w = init_influence_matrix(&g, 0.0).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&w, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0,1,0\n0.5,0,0.5\n0,1,0\n");

        let w = init_influence_matrix(&Adjacency::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap(), 0.0).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&w, &mut buf).unwrap();
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        let parsed: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn summary_csv_round_trip() {
        let grid = ExperimentGrid {
            sizes: vec![20],
            pcts: vec![10.0, 20.0],
            selections: vec![SelectionStrategy::MaxInfluence],
            perturbations: vec![PerturbationStrategy::Cascade],
            replicates: 2,
            base_seed: 9,
        };
        let res = sweep(&grid, &RunSettings::default(), 1).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&res, &mut buf).unwrap();
        let parsed = read_summary_csv(&buf[..]).unwrap();
        assert_eq!(parsed, res.cells);
    }

    #[test]
    fn trajectory_rows() {
        let traj = Trajectory {
            stances: vec![vec![1.0, -1.0], vec![0.5, -1.0]],
            global_influence: vec![vec![1.0, 0.5], vec![1.0, 0.25]],
            confederate: vec![false, true],
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines[1], "0,0,1,false,1");
        assert_eq!(lines[4], "1,1,-1,true,0.25");
        assert_eq!(lines.len(), 5);
    }
}
