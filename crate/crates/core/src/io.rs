//! CSV formats: edge lists (`time,source,target`, 0-based times and node
//! indices) and memberships (`time,node,cluster`, clusters numbered from 1).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::net::{Adjacency, DynamicNetwork, MembershipSeries};

fn open<R: Read>(reader: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(rdr)
}

fn parse_row(record: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>> {
    let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
    if record.len() != names.len() {
        return Err(Error::Parse { line, message: format!("expected {} fields, found {}", names.len(), record.len()) });
    }
    record
        .iter()
        .zip(names)
        .map(|(field, name)| {
            field.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("field `{name}` is not a non-negative integer: `{field}`"),
            })
        })
        .collect()
}

/// Reads an edge list. `nodes` and `times` fix the network size when given;
/// otherwise they are inferred from the largest index present.
pub fn read_edges<R: Read>(reader: R, nodes: Option<usize>, times: Option<usize>) -> Result<DynamicNetwork> {
    let mut rdr = open(reader, &["time", "source", "target"])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let v = parse_row(&record, &["time", "source", "target"])?;
        if v[1] == v[2] {
            return Err(Error::Parse { line, message: format!("self-loop at node {}", v[1]) });
        }
        rows.push((line, v[0], v[1], v[2]));
    }
    let n = nodes.unwrap_or_else(|| rows.iter().map(|r| r.2.max(r.3) + 1).max().unwrap_or(0));
    let len = times.unwrap_or_else(|| rows.iter().map(|r| r.1 + 1).max().unwrap_or(1));
    let mut slices = vec![Adjacency::empty(n); len];
    for (line, t, i, j) in rows {
        if t >= len || i >= n || j >= n {
            return Err(Error::Parse { line, message: format!("row ({t},{i},{j}) outside {len} times x {n} nodes") });
        }
        slices[t].set(i, j, true);
    }
    DynamicNetwork::new(slices)
}

pub fn write_edges<W: Write>(writer: W, net: &DynamicNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "source", "target"])?;
    for (t, y) in net.slices().iter().enumerate() {
        for (i, j) in y.edges() {
            w.write_record([t.to_string(), i.to_string(), j.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a membership table. Every `(time, node)` cell must appear exactly once.
pub fn read_membership<R: Read>(reader: R, k: Option<usize>) -> Result<MembershipSeries> {
    let mut rdr = open(reader, &["time", "node", "cluster"])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let v = parse_row(&record, &["time", "node", "cluster"])?;
        if v[2] == 0 {
            return Err(Error::Parse { line, message: "cluster labels start at 1".into() });
        }
        rows.push((line, v[0], v[1], v[2] - 1));
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, message: "membership file has no rows".into() });
    }
    let len = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let n = rows.iter().map(|r| r.2 + 1).max().unwrap_or(0);
    let k = k.unwrap_or_else(|| rows.iter().map(|r| r.3 + 1).max().unwrap_or(1));
    let mut labels = vec![vec![usize::MAX; n]; len];
    for (line, t, i, c) in rows {
        if labels[t][i] != usize::MAX {
            return Err(Error::Parse { line, message: format!("duplicate entry for time {t}, node {i}") });
        }
        labels[t][i] = c;
    }
    for (t, row) in labels.iter().enumerate() {
        if let Some(i) = row.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Parse { line: 0, message: format!("missing label for time {t}, node {i}") });
        }
    }
    MembershipSeries::new(labels, k)
}

pub fn write_membership<W: Write>(writer: W, m: &MembershipSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "node", "cluster"])?;
    for (t, row) in m.labels().iter().enumerate() {
        for (i, &c) in row.iter().enumerate() {
            w.write_record([t.to_string(), i.to_string(), (c + 1).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_round_trip_and_dedup() {
        let text = "time,source,target\n0,0,1\n0,1,0\n1,2,1\n";
        let net = read_edges(text.as_bytes(), Some(4), None).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.n(), 4);
        assert_eq!(net.slice(0).edge_count(), 1);
        let mut out = Vec::new();
        write_edges(&mut out, &net).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "time,source,target\n0,0,1\n1,1,2\n");
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "time,source,target\n0,0,1\n0,x,2\n";
        match read_edges(text.as_bytes(), None, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_edges("a,b,c\n".as_bytes(), None, None).is_err());
        assert!(read_edges("time,source,target\n0,1,1\n".as_bytes(), None, None).is_err());
    }

    #[test]
    fn membership_round_trip() {
        let m = MembershipSeries::new(vec![vec![0, 1, 1], vec![1, 1, 0]], 2).unwrap();
        let mut out = Vec::new();
        write_membership(&mut out, &m).unwrap();
        let back = read_membership(out.as_slice(), Some(2)).unwrap();
        assert_eq!(back, m);
        assert!(read_membership("time,node,cluster\n0,0,0\n".as_bytes(), None).is_err());
        assert!(read_membership("time,node,cluster\n0,1,1\n".as_bytes(), None).is_err());
    }
}
